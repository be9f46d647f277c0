#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <random>
#include <sstream>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "attractor.hpp"
#include "errors.hpp"
#include "ifs.hpp"
#include "nearest.hpp"
#include "point.hpp"
#include "report.hpp"

namespace hlab {

// ---------------------------------------------------------------------------
// Contraction bounds
// ---------------------------------------------------------------------------

struct ContractionEstimate {
    double lower = 0.0;
    double upper = 0.0;
};

/// min / max of d(gamma x, gamma y) / d(x, y) over `samples` random pairs.
/// Affine maps sample the unit box [-1, 1]^d; symbolic maps sample words of
/// length 24 over `symbols` letters. Coincident pairs are redrawn.
inline ContractionEstimate contraction_bounds_estimate(const ContractionMap& map, std::size_t samples, std::uint64_t rng_seed,
                                                       int symbols = 2) {
    if (samples < 2) throw InputError("contraction bound estimate needs at least 2 samples");
    std::mt19937_64 rng(rng_seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_int_distribution<int> letter(1, std::max(symbols, map.symbol()));
    auto draw = [&]() -> Point {
        if (map.symbolic()) {
            Word w(24);
            for (auto& s : w) s = letter(rng);
            return Point(std::move(w));
        }
        Eigen::VectorXd x(static_cast<Eigen::Index>(map.dimension()));
        for (Eigen::Index k = 0; k < x.size(); ++k) x(k) = unit(rng);
        return Point(std::move(x));
    };
    ContractionEstimate est{std::numeric_limits<double>::infinity(), 0.0};
    for (std::size_t s = 0; s < samples; ++s) {
        Point x = draw();
        Point y = draw();
        double d = distance(x, y);
        while (d == 0.0) {
            y = draw();
            d = distance(x, y);
        }
        const double ratio = distance(map(x), map(y)) / d;
        est.lower = std::min(est.lower, ratio);
        est.upper = std::max(est.upper, ratio);
    }
    return est;
}

// ---------------------------------------------------------------------------
// Branch sets C_gamma and B_gamma
// ---------------------------------------------------------------------------

/// Points x with d(gamma_i x, gamma_j x) <= tolerance, and their images.
struct BranchSetEstimate {
    std::vector<Point> c_points;
    std::vector<Point> b_points;
    std::vector<std::pair<int, int>> pairs;  // 1-based (i, j), i < j, one per c_point
    double tolerance = 0.0;
    bool finite = true;  // false when some pair collides on a continuum
};

inline bool finite_branch_condition(const BranchSetEstimate& b) { return b.finite; }

namespace detail {

// Depth whose word count stays within a small reference budget.
inline std::size_t reference_depth(const IFSystem& sys, std::size_t max_points = 4096) {
    std::size_t depth = 0;
    std::size_t count = 1;
    while (count * sys.size() <= max_points) {
        count *= sys.size();
        ++depth;
    }
    return depth;
}

inline double reference_resolution(const IFSystem& sys, std::size_t depth) {
    return std::pow(sys.contraction_upper(), static_cast<double>(depth)) * sys.diameter();
}

}  // namespace detail

/// Grid scan of the bounding box for collisions gamma_i(x) = gamma_j(x).
///
/// 1-D: sign changes and near-zeros of gamma_i - gamma_j on a uniform grid of
/// `grid_resolution` cells, refined by bisection. Runs of more than two
/// colliding grid points mean a continuum of collisions (finite = false).
/// d >= 2: the grid has about grid_resolution cells in total; colliding grid
/// points are clustered by adjacency and each cluster reported by its centroid.
/// Only roots within reach of the attractor are kept.
inline BranchSetEstimate branch_sets(const IFSystem& sys, std::size_t grid_resolution = 10000, double tolerance = 1e-10) {
    if (grid_resolution == 0) throw InputError("branch set grid resolution must be positive");
    BranchSetEstimate est;
    est.tolerance = tolerance;
    if (sys.symbolic()) return est;  // distinct prepends never agree

    const std::size_t ref_depth = detail::reference_depth(sys);
    const NearestIndex attractor(attractor_deterministic(sys, ref_depth).points);
    const double reach = detail::reference_resolution(sys, ref_depth) + tolerance;
    const Box& box = sys.box();
    const std::size_t d = sys.dimension();

    auto accept = [&](const Eigen::VectorXd& x, std::size_t i, std::size_t j) {
        if (attractor.distance_to(Point(x)) > reach) return;
        for (std::size_t k = 0; k < est.c_points.size(); ++k) {
            if (est.pairs[k] == std::pair<int, int>(static_cast<int>(i + 1), static_cast<int>(j + 1)) &&
                (est.c_points[k].coords() - x).norm() <= std::max(tolerance, 1e-12)) {
                return;
            }
        }
        est.c_points.emplace_back(x);
        est.b_points.emplace_back(sys.map(i).apply(x));
        est.pairs.emplace_back(static_cast<int>(i + 1), static_cast<int>(j + 1));
    };

    for (std::size_t i = 0; i < sys.size(); ++i) {
        for (std::size_t j = i + 1; j < sys.size(); ++j) {
            const auto& gi = sys.map(i);
            const auto& gj = sys.map(j);
            if (d == 1) {
                auto f = [&](double x) {
                    const Eigen::VectorXd v = Eigen::VectorXd::Constant(1, x);
                    return gi.apply(v)(0) - gj.apply(v)(0);
                };
                const double lo = box.lo(0);
                const double h = (box.hi(0) - lo) / static_cast<double>(grid_resolution);
                std::vector<double> g(grid_resolution + 1);
                for (std::size_t k = 0; k <= grid_resolution; ++k) g[k] = f(lo + h * static_cast<double>(k));

                std::size_t run = 0;
                for (std::size_t k = 0; k <= grid_resolution; ++k) {
                    if (std::abs(g[k]) <= tolerance) {
                        if (++run > 2) est.finite = false;
                    } else {
                        run = 0;
                    }
                }
                for (std::size_t k = 0; k <= grid_resolution; ++k) {
                    const double x = lo + h * static_cast<double>(k);
                    if (std::abs(g[k]) <= tolerance) {
                        accept(Eigen::VectorXd::Constant(1, x), i, j);
                        continue;
                    }
                    if (k < grid_resolution && std::abs(g[k + 1]) > tolerance && (g[k] < 0) != (g[k + 1] < 0)) {
                        double a = x;
                        double b = x + h;
                        double fa = g[k];
                        for (int it = 0; it < 200 && b - a > 1e-3 * tolerance; ++it) {
                            const double m = 0.5 * (a + b);
                            const double fm = f(m);
                            if (fm == 0.0) {
                                a = b = m;
                                break;
                            }
                            if ((fm < 0) == (fa < 0)) {
                                a = m;
                                fa = fm;
                            } else {
                                b = m;
                            }
                        }
                        const double root = 0.5 * (a + b);
                        if (std::abs(f(root)) <= tolerance) accept(Eigen::VectorXd::Constant(1, root), i, j);
                    }
                }
                continue;
            }

            // d >= 2: clusters of grid points, no refinement.
            const auto per_axis = static_cast<std::size_t>(
                std::max(2.0, std::floor(std::pow(static_cast<double>(grid_resolution), 1.0 / static_cast<double>(d)))));
            const Eigen::VectorXd step = (box.hi - box.lo) / static_cast<double>(per_axis);
            const double lip = (gi.matrix() - gj.matrix()).norm();
            const double slack = tolerance + lip * 0.5 * step.norm();
            const std::size_t count = static_cast<std::size_t>(std::pow(per_axis + 1, d));
            auto grid_point = [&](std::size_t flat) {
                Eigen::VectorXd x(static_cast<Eigen::Index>(d));
                for (std::size_t a = 0; a < d; ++a) {
                    x(a) = box.lo(a) + step(a) * static_cast<double>(flat % (per_axis + 1));
                    flat /= per_axis + 1;
                }
                return x;
            };
            std::vector<char> hit(count, 0);
            for (std::size_t f = 0; f < count; ++f) {
                const Eigen::VectorXd x = grid_point(f);
                hit[f] = (gi.apply(x) - gj.apply(x)).norm() <= slack;
            }
            std::vector<char> seen(count, 0);
            for (std::size_t f = 0; f < count; ++f) {
                if (!hit[f] || seen[f]) continue;
                std::queue<std::size_t> todo;
                todo.push(f);
                seen[f] = 1;
                Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
                std::size_t members = 0;
                while (!todo.empty()) {
                    const std::size_t cur = todo.front();
                    todo.pop();
                    sum += grid_point(cur);
                    ++members;
                    std::size_t stride = 1;
                    for (std::size_t a = 0; a < d; ++a, stride *= per_axis + 1) {
                        const std::size_t coord = (cur / stride) % (per_axis + 1);
                        for (int dir : {-1, 1}) {
                            if ((dir < 0 && coord == 0) || (dir > 0 && coord == per_axis)) continue;
                            const std::size_t nb = dir < 0 ? cur - stride : cur + stride;
                            if (hit[nb] && !seen[nb]) {
                                seen[nb] = 1;
                                todo.push(nb);
                            }
                        }
                    }
                }
                if (members > static_cast<std::size_t>(std::pow(3.0, static_cast<double>(d)))) est.finite = false;
                accept(sum / static_cast<double>(members), i, j);
            }
        }
    }
    return est;
}

// ---------------------------------------------------------------------------
// Open set condition
// ---------------------------------------------------------------------------

/// Finite union of open boxes (euclidean) or of cylinders [u] (symbolic).
struct OpenSet {
    std::vector<Box> boxes;
    std::vector<Word> cylinders;

    bool empty() const noexcept { return boxes.empty() && cylinders.empty(); }

    bool contains(const Point& p) const {
        if (p.symbolic()) {
            for (const auto& u : cylinders) {
                bool prefix = true;
                for (std::size_t k = 0; k < u.size() && prefix; ++k) prefix = symbol_at(p.word(), k) == u[k];
                if (prefix) return true;
            }
            return false;
        }
        for (const auto& b : boxes) {
            if (((p.coords() - b.lo).array() > 0.0).all() && ((b.hi - p.coords()).array() > 0.0).all()) return true;
        }
        return false;
    }
};

/// "lo1,hi1[,lo2,hi2...][;...]": one open box per ';'-separated group.
inline OpenSet parse_open_set(const std::string& text, std::size_t dimension) {
    OpenSet v;
    std::istringstream groups(text);
    std::string group;
    while (std::getline(groups, group, ';')) {
        std::vector<double> nums;
        std::istringstream is(group);
        std::string tok;
        while (std::getline(is, tok, ',')) {
            try {
                nums.push_back(std::stod(tok));
            } catch (const std::logic_error&) {
                throw InputError("bad number '" + tok + "' in open set '" + text + "'");
            }
        }
        if (nums.size() != 2 * dimension) throw InputError("open box needs " + std::to_string(2 * dimension) + " numbers");
        Box b{Eigen::VectorXd(dimension), Eigen::VectorXd(dimension)};
        for (std::size_t a = 0; a < dimension; ++a) {
            b.lo(a) = nums[2 * a];
            b.hi(a) = nums[2 * a + 1];
            if (!(b.lo(a) < b.hi(a))) throw InputError("open box has an empty side");
        }
        v.boxes.push_back(b);
    }
    if (v.empty()) throw InputError("open set description is empty");
    return v;
}

/// Boxes for euclidean systems; for symbolic ones, ';'-separated cylinder
/// words where "*" is the whole space.
inline OpenSet parse_open_set(const std::string& text, const IFSystem& sys) {
    if (!sys.symbolic()) return parse_open_set(text, sys.dimension());
    OpenSet v;
    std::istringstream groups(text);
    std::string group;
    while (std::getline(groups, group, ';')) {
        if (group == "*") {
            v.cylinders.emplace_back();
            continue;
        }
        Word w = parse_word(group);
        for (int s : w) {
            if (s > static_cast<int>(sys.size())) throw InputError("cylinder '" + group + "' uses a symbol the system lacks");
        }
        v.cylinders.push_back(std::move(w));
    }
    if (v.empty()) throw InputError("open set description is empty");
    return v;
}

namespace detail {

// Open box intersection: non-empty iff every axis overlaps with positive length.
inline std::optional<Box> open_intersection(const Box& a, const Box& b) {
    Box c{a.lo.cwiseMax(b.lo), a.hi.cwiseMin(b.hi)};
    if (((c.hi - c.lo).array() > 0.0).all()) return c;
    return std::nullopt;
}

// Open intervals merged into maximal disjoint open intervals.
inline std::vector<std::pair<double, double>> merged_intervals(const std::vector<Box>& boxes) {
    std::vector<std::pair<double, double>> iv;
    for (const auto& b : boxes) iv.emplace_back(b.lo(0), b.hi(0));
    std::sort(iv.begin(), iv.end());
    std::vector<std::pair<double, double>> out;
    for (const auto& [lo, hi] : iv) {
        if (!out.empty() && lo < out.back().second) {
            out.back().second = std::max(out.back().second, hi);
        } else {
            out.emplace_back(lo, hi);
        }
    }
    return out;
}

}  // namespace detail

/// Checks gamma_i(V) subset V for all i and gamma_i(V) disjoint from
/// gamma_j(V) for i != j. Exact for symbolic cylinders and for affine maps
/// with diagonal matrices (box images); sampled otherwise. defect counts the
/// violated clauses, so pass <=> defect <= 0.
inline DefectReport open_set_condition_check(const IFSystem& sys, const OpenSet& v, std::size_t samples = 4000,
                                             std::uint64_t rng_seed = 0) {
    if (v.empty()) throw InputError("open set V must be non-empty");
    nlohmann::json details;
    bool contained = true;
    bool disjoint = true;
    bool exact = true;
    std::optional<Point> containment_witness;
    std::optional<Point> disjointness_witness;
    std::vector<std::pair<int, int>> overlapping;

    if (sys.symbolic()) {
        if (!v.boxes.empty()) throw InputError("symbolic systems take cylinder open sets");
        for (std::size_t i = 0; i < sys.size() && contained; ++i) {
            for (const auto& u : v.cylinders) {
                Word iu{static_cast<int>(i + 1)};
                iu.insert(iu.end(), u.begin(), u.end());
                if (!v.contains(Point(iu))) {
                    contained = false;
                    containment_witness = Point(iu);
                    break;
                }
            }
        }
        // [iu] and [jv] differ in the first symbol when i != j.
    } else {
        if (!v.cylinders.empty()) throw InputError("euclidean systems take box open sets");
        for (const auto& b : v.boxes) {
            if (b.dimension() != sys.dimension()) throw InputError("open box dimension mismatch");
        }
        const bool boxes_exact = std::all_of(sys.maps().begin(), sys.maps().end(), [](const auto& m) { return m.diagonal(); });
        if (boxes_exact) {
            std::vector<std::vector<Box>> images(sys.size());
            for (std::size_t i = 0; i < sys.size(); ++i) {
                for (const auto& b : v.boxes) images[i].push_back(sys.map(i).image(b));
            }
            // Containment.
            for (std::size_t i = 0; i < sys.size() && contained; ++i) {
                for (const auto& img : images[i]) {
                    if (sys.dimension() == 1) {
                        const auto merged = detail::merged_intervals(v.boxes);
                        const bool inside = std::any_of(merged.begin(), merged.end(), [&](const auto& iv) {
                            return iv.first <= img.lo(0) && img.hi(0) <= iv.second;
                        });
                        if (!inside) {
                            contained = false;
                            // An endpoint of a merged interval inside the image is uncovered;
                            // otherwise the image misses V entirely.
                            double w = 0.5 * (img.lo(0) + img.hi(0));
                            for (const auto& iv : merged) {
                                const double ends[2] = {iv.first, iv.second};
                                const auto it = std::find_if(std::begin(ends), std::end(ends),
                                                             [&](double e) { return img.lo(0) < e && e < img.hi(0); });
                                if (it != std::end(ends)) {
                                    w = *it;
                                    break;
                                }
                            }
                            containment_witness = Point::scalar(w);
                            break;
                        }
                    } else {
                        const bool inside = std::any_of(v.boxes.begin(), v.boxes.end(), [&](const Box& b) {
                            return (b.lo.array() <= img.lo.array()).all() && (img.hi.array() <= b.hi.array()).all();
                        });
                        if (!inside) {
                            // Union coverage of a box by several boxes: decided by sampling.
                            exact = false;
                            std::mt19937_64 rng(rng_seed);
                            std::uniform_real_distribution<double> u(0.0, 1.0);
                            for (std::size_t s = 0; s < samples; ++s) {
                                Eigen::VectorXd x(img.lo.size());
                                for (Eigen::Index a = 0; a < x.size(); ++a) x(a) = img.lo(a) + u(rng) * (img.hi(a) - img.lo(a));
                                if (!v.contains(Point(x))) {
                                    contained = false;
                                    containment_witness = Point(x);
                                    break;
                                }
                            }
                            if (!contained) break;
                        }
                    }
                }
            }
            // Disjointness.
            for (std::size_t i = 0; i < sys.size(); ++i) {
                for (std::size_t j = i + 1; j < sys.size(); ++j) {
                    for (const auto& a : images[i]) {
                        for (const auto& b : images[j]) {
                            if (auto c = detail::open_intersection(a, b)) {
                                if (disjoint) disjointness_witness = Point(Eigen::VectorXd(c->center()));
                                disjoint = false;
                                overlapping.emplace_back(static_cast<int>(i + 1), static_cast<int>(j + 1));
                                goto next_pair;
                            }
                        }
                    }
                next_pair:;
                }
            }
        } else {
            exact = false;
            std::mt19937_64 rng(rng_seed);
            std::uniform_real_distribution<double> u(0.0, 1.0);
            std::vector<double> volumes;
            for (const auto& b : v.boxes) volumes.push_back((b.hi - b.lo).prod());
            std::discrete_distribution<std::size_t> pick_box(volumes.begin(), volumes.end());
            auto draw = [&]() {
                const Box& b = v.boxes[pick_box(rng)];
                Eigen::VectorXd x(b.lo.size());
                for (Eigen::Index a = 0; a < x.size(); ++a) x(a) = b.lo(a) + u(rng) * (b.hi(a) - b.lo(a));
                return x;
            };
            for (std::size_t s = 0; s < samples; ++s) {
                const Eigen::VectorXd x = draw();
                for (std::size_t i = 0; i < sys.size(); ++i) {
                    const Point y(sys.map(i).apply(x));
                    if (contained && !v.contains(y)) {
                        contained = false;
                        containment_witness = y;
                    }
                    for (std::size_t j = 0; j < sys.size(); ++j) {
                        if (j == i) continue;
                        if (v.contains(sys.map(j).inverse(y))) {
                            const auto pr = std::minmax(static_cast<int>(i + 1), static_cast<int>(j + 1));
                            if (std::find(overlapping.begin(), overlapping.end(), std::pair<int, int>(pr)) == overlapping.end()) {
                                overlapping.emplace_back(pr);
                            }
                            if (disjoint) disjointness_witness = y;
                            disjoint = false;
                        }
                    }
                }
            }
        }
    }

    details["containment"] = contained;
    details["disjointness"] = disjoint;
    details["exact"] = exact;
    if (containment_witness) details["containment_witness"] = to_string(*containment_witness);
    if (disjointness_witness) details["disjointness_witness"] = to_string(*disjointness_witness);
    details["overlapping_pairs"] = overlapping;
    const double violated = (contained ? 0.0 : 1.0) + (disjoint ? 0.0 : 1.0);
    DefectReport r = DefectReport::make("osc", sys.name(), 0, violated, 0.0, {{"samples", samples}, {"seed", rng_seed}});
    r.details = std::move(details);
    return r;
}

// ---------------------------------------------------------------------------
// The expanding map phi via branch inverses
// ---------------------------------------------------------------------------

/// phi realised by dispatching to branch inverses: x in gamma_i(K) maps to
/// gamma_i^{-1}(x). The branch is chosen by (1) preimage inside the bounding
/// box, then (2) smallest distance from the preimage to a reference attractor
/// cloud; ties go to the lowest index. Symbolic systems drop the head symbol.
class PhiMap {
public:
    explicit PhiMap(const IFSystem& sys, std::size_t reference_points = 4096) : sys_(&sys) {
        if (sys.symbolic()) return;
        const std::size_t depth = detail::reference_depth(sys, reference_points);
        index_.emplace(attractor_deterministic(sys, depth).points);
        resolution_ = detail::reference_resolution(sys, depth);
    }

    /// Index (0-based) of the selected branch.
    std::size_t branch(const Point& x, double tol) const {
        if (!sys_->same_space(x)) throw InputError("point is not in the system's ambient space");
        if (sys_->symbolic()) return static_cast<std::size_t>(symbol_at(x.word(), 0) - 1);
        constexpr double kInside = 1e-12;
        std::size_t best = sys_->size();
        double best_out = 0.0;
        double best_dist = 0.0;
        for (std::size_t i = 0; i < sys_->size(); ++i) {
            const Point y = sys_->map(i).inverse(x);
            const double out = sys_->box().distance_to(y.coords());
            const double dist = index_->distance_to(y);
            const bool out_i = out > kInside;
            const bool out_best = best_out > kInside;
            bool better = best == sys_->size();
            if (!better) {
                if (out_i != out_best) better = !out_i;
                else if (out_i) better = out < best_out;
                else better = dist < best_dist;
            }
            if (better) {
                best = i;
                best_out = out;
                best_dist = dist;
            }
        }
        if (best_out > tol || best_dist > tol + resolution_) {
            throw DomainError("point " + to_string(x) + " lies outside every branch image by more than " + std::to_string(tol));
        }
        return best;
    }

    Point operator()(const Point& x, double tol = 1e-9) const {
        if (sys_->symbolic()) {
            if (!x.symbolic()) throw InputError("point is not in the system's ambient space");
            return sys_->map(0).inverse(x);
        }
        return sys_->map(branch(x, tol)).inverse(x);
    }

private:
    const IFSystem* sys_;
    std::optional<NearestIndex> index_;
    double resolution_ = 0.0;
};

inline Point phi_apply(const IFSystem& sys, const Point& x, double tol = 1e-9) { return PhiMap(sys)(x, tol); }

}  // namespace hlab
