#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "attractor.hpp"
#include "errors.hpp"
#include "ifs.hpp"
#include "nearest.hpp"
#include "point.hpp"

namespace hlab {

struct Atom {
    Point point;
    double weight = 0.0;
};

enum class MeasureKind { deterministic, empirical };

/// Finite weighted point set approximating a self-similar measure.
struct AtomicMeasure {
    std::vector<Atom> atoms;
    std::size_t resolution = 0;  // depth N, or sample count for empirical measures
    MeasureKind kind = MeasureKind::deterministic;

    double total_mass() const;
    bool symbolic() const { return !atoms.empty() && atoms.front().point.symbolic(); }
    std::size_t dimension() const { return atoms.empty() || symbolic() ? 0 : atoms.front().point.size(); }
};

/// Pairwise summation; fixed recursion order keeps results reproducible.
template <class T>
T pairwise_sum(std::span<const T> values) {
    if (values.size() <= 8) {
        T s{};
        for (const auto& v : values) s += v;
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

inline double AtomicMeasure::total_mass() const {
    std::vector<double> w;
    w.reserve(atoms.size());
    for (const auto& a : atoms) w.push_back(a.weight);
    return pairwise_sum(std::span<const double>(w));
}

inline constexpr double kAtomMergeDistance = 1e-14;

/// Sorts atoms and merges those closer than `eps` (symbol words: equal as
/// sequences) into one atom carrying the summed weight.
inline std::vector<Atom> merge_coincident(std::vector<Atom> atoms, double eps = kAtomMergeDistance) {
    if (atoms.empty()) return atoms;
    if (atoms.front().point.symbolic()) {
        std::vector<std::pair<Word, Atom>> keyed;
        keyed.reserve(atoms.size());
        for (auto& a : atoms) keyed.emplace_back(canonical_word(a.point.word()), std::move(a));
        std::stable_sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        std::vector<Atom> out;
        const Word* last = nullptr;
        for (auto& [key, a] : keyed) {
            if (last && *last == key) {
                out.back().weight += a.weight;
            } else {
                out.push_back(std::move(a));
            }
            last = &key;
        }
        return out;
    }
    std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) {
        const auto& x = a.point.coords();
        const auto& y = b.point.coords();
        return std::lexicographical_compare(x.data(), x.data() + x.size(), y.data(), y.data() + y.size());
    });
    std::vector<Atom> out;
    for (auto& a : atoms) {
        if (!out.empty() && (out.back().point.coords() - a.point.coords()).cwiseAbs().maxCoeff() < eps) {
            out.back().weight += a.weight;
        } else {
            out.push_back(std::move(a));
        }
    }
    return out;
}

/// Atoms gamma_w(seed) with weight p_w = prod_k p_{w_k} for every word of
/// length `depth`; with p_i = 1/n this is the Hutchinson approximant.
inline AtomicMeasure self_similar_measure(const IFSystem& sys, std::size_t depth, std::optional<Point> seed = std::nullopt,
                                          std::size_t budget = cell_budget()) {
    const PointCloud cloud = attractor_deterministic(sys, depth, std::move(seed), budget);
    const std::size_t n = sys.size();
    // Weights in the cloud's lexicographic word order.
    std::vector<double> w{1.0};
    for (std::size_t k = 0; k < depth; ++k) {
        std::vector<double> next;
        next.reserve(w.size() * n);
        for (std::size_t i = 0; i < n; ++i) {
            for (double p : w) next.push_back(sys.weights()[i] * p);
        }
        w = std::move(next);
    }
    std::vector<Atom> atoms;
    atoms.reserve(cloud.size());
    for (std::size_t k = 0; k < cloud.size(); ++k) atoms.push_back({cloud.points[k], w[k]});
    return {merge_coincident(std::move(atoms)), depth, MeasureKind::deterministic};
}

/// Equal-weight empirical measure of a point cloud.
inline AtomicMeasure empirical_measure(const PointCloud& cloud) {
    if (cloud.points.empty()) throw InputError("empirical measure of an empty cloud");
    std::vector<Atom> atoms;
    const double w = 1.0 / static_cast<double>(cloud.size());
    for (const auto& p : cloud.points) atoms.push_back({p, w});
    return {merge_coincident(std::move(atoms)), cloud.size(), MeasureKind::empirical};
}

/// gamma_* mu: atoms mapped through gamma, weights unchanged.
inline AtomicMeasure pushforward(const AtomicMeasure& mu, const ContractionMap& map) {
    AtomicMeasure out{{}, mu.resolution, mu.kind};
    out.atoms.reserve(mu.atoms.size());
    for (const auto& a : mu.atoms) out.atoms.push_back({map(a.point), a.weight});
    out.atoms = merge_coincident(std::move(out.atoms));
    return out;
}

/// sum_i p_i (gamma_i)_* mu, one application of the Markov operator.
inline AtomicMeasure markov_image(const IFSystem& sys, const AtomicMeasure& mu) {
    AtomicMeasure out{{}, mu.resolution + 1, mu.kind};
    out.atoms.reserve(mu.atoms.size() * sys.size());
    for (std::size_t i = 0; i < sys.size(); ++i) {
        for (const auto& a : mu.atoms) out.atoms.push_back({sys.map(i)(a.point), sys.weights()[i] * a.weight});
    }
    out.atoms = merge_coincident(std::move(out.atoms));
    return out;
}

// ---------------------------------------------------------------------------
// Weak distances
// ---------------------------------------------------------------------------

/// Fixed family of 1-Lipschitz test functions for dimension >= 2 and for the
/// sequence metric.
///
/// Euclidean: the coordinate maps x -> x_k together with x -> |x - c| for c on
/// a uniform grid of m^d centres over a box (m = max(2, floor(256^(1/d)))).
/// Sequence: w -> d(w, c) for every word c of length L, L the largest with
/// n^L <= 256.
class WeakTestFamily {
public:
    static WeakTestFamily euclidean(const Box& box) {
        WeakTestFamily f;
        f.dimension_ = box.dimension();
        const auto d = static_cast<double>(f.dimension_);
        const auto m = static_cast<std::size_t>(std::max(2.0, std::floor(std::pow(256.0, 1.0 / d) + 1e-9)));
        std::size_t total = 1;
        for (std::size_t a = 0; a < f.dimension_; ++a) total *= m;
        for (std::size_t flat = 0; flat < total; ++flat) {
            Eigen::VectorXd c(static_cast<Eigen::Index>(f.dimension_));
            std::size_t r = flat;
            for (std::size_t a = 0; a < f.dimension_; ++a) {
                c(a) = box.lo(a) + (box.hi(a) - box.lo(a)) * static_cast<double>(r % m) / static_cast<double>(m - 1);
                r /= m;
            }
            f.centers_.push_back(std::move(c));
        }
        return f;
    }

    static WeakTestFamily sequence(int symbols) {
        if (symbols < 2) throw InputError("sequence test family needs at least two symbols");
        WeakTestFamily f;
        f.symbolic_ = true;
        std::size_t len = 0;
        std::size_t count = 1;
        while (count * static_cast<std::size_t>(symbols) <= 256) {
            count *= static_cast<std::size_t>(symbols);
            ++len;
        }
        for (std::size_t flat = 0; flat < count; ++flat) {
            Word w(len);
            std::size_t r = flat;
            for (std::size_t k = len; k-- > 0;) {
                w[k] = static_cast<int>(r % static_cast<std::size_t>(symbols)) + 1;
                r /= static_cast<std::size_t>(symbols);
            }
            f.words_.push_back(std::move(w));
        }
        return f;
    }

    static WeakTestFamily for_system(const IFSystem& sys) {
        return sys.symbolic() ? sequence(static_cast<int>(sys.size())) : euclidean(sys.box());
    }

    std::size_t size() const { return symbolic_ ? words_.size() : dimension_ + centers_.size(); }

    /// max_f |int f dmu - int f dnu|.
    double discrepancy(const AtomicMeasure& mu, const AtomicMeasure& nu) const {
        const std::vector<double> a = integrals(mu);
        const std::vector<double> b = integrals(nu);
        double worst = 0.0;
        for (std::size_t k = 0; k < size(); ++k) worst = std::max(worst, std::abs(a[k] - b[k]));
        return worst;
    }

    /// int f_k dmu for every member k of the family.
    std::vector<double> integrals(const AtomicMeasure& mu) const {
        std::vector<double> out(size());
        if (symbolic_) {
            // d(w, c) splits into the distance between the first L symbols and a
            // tail term that depends on w alone, so atoms group by prefix.
            const std::size_t len = words_.front().size();
            std::map<Word, double> prefix_mass;
            std::vector<double> tails;
            tails.reserve(mu.atoms.size());
            for (const auto& a : mu.atoms) {
                const Word& w = a.point.word();
                Word head(len);
                for (std::size_t i = 0; i < len; ++i) head[i] = symbol_at(w, i);
                prefix_mass[head] += a.weight;
                double tail = 0.0;
                for (std::size_t i = len; i < w.size(); ++i) {
                    if (w[i] != 1) tail += std::ldexp(1.0, -static_cast<int>(i + 1));
                }
                tails.push_back(a.weight * tail);
            }
            const double tail_total = pairwise_sum(std::span<const double>(tails));
            std::vector<double> terms;
            for (std::size_t k = 0; k < size(); ++k) {
                terms.clear();
                for (const auto& [head, m] : prefix_mass) terms.push_back(m * sequence_distance(head, words_[k]));
                out[k] = pairwise_sum(std::span<const double>(terms)) + tail_total;
            }
            return out;
        }
        const std::size_t count = mu.atoms.size();
        const std::size_t d = dimension_;
        std::vector<double> coords(count * d);
        for (std::size_t j = 0; j < count; ++j) {
            const auto& x = mu.atoms[j].point.coords();
            if (static_cast<std::size_t>(x.size()) != d) throw InputError("test family dimension mismatch");
            for (std::size_t a = 0; a < d; ++a) coords[j * d + a] = x(static_cast<Eigen::Index>(a));
        }
        std::vector<double> terms(count);
        for (std::size_t k = 0; k < size(); ++k) {
            for (std::size_t j = 0; j < count; ++j) {
                const double* x = &coords[j * d];
                double f = 0.0;
                if (k < d) {
                    f = x[k];
                } else {
                    const Eigen::VectorXd& c = centers_[k - d];
                    for (std::size_t a = 0; a < d; ++a) {
                        const double t = x[a] - c(static_cast<Eigen::Index>(a));
                        f += t * t;
                    }
                    f = std::sqrt(f);
                }
                terms[j] = mu.atoms[j].weight * f;
            }
            out[k] = pairwise_sum(std::span<const double>(terms));
        }
        return out;
    }

private:
    bool symbolic_ = false;
    std::size_t dimension_ = 0;
    std::vector<Eigen::VectorXd> centers_;
    std::vector<Word> words_;
};

namespace detail {

inline void require_same_space(const AtomicMeasure& mu, const AtomicMeasure& nu) {
    if (mu.atoms.empty() || nu.atoms.empty()) throw InputError("weak distance of an empty measure");
    if (mu.symbolic() != nu.symbolic() || mu.dimension() != nu.dimension()) {
        throw InputError("measures live in different spaces");
    }
}

// Exact W1 on the line: integral of |F_mu - F_nu| over the merged atom positions.
inline double wasserstein1_line(const AtomicMeasure& mu, const AtomicMeasure& nu) {
    std::vector<std::pair<double, double>> events;  // position, signed mass
    events.reserve(mu.atoms.size() + nu.atoms.size());
    for (const auto& a : mu.atoms) events.emplace_back(a.point.x(), a.weight);
    for (const auto& a : nu.atoms) events.emplace_back(a.point.x(), -a.weight);
    std::sort(events.begin(), events.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<double> pieces;
    pieces.reserve(events.size());
    double diff = 0.0;
    for (std::size_t k = 0; k + 1 < events.size(); ++k) {
        diff += events[k].second;
        pieces.push_back(std::abs(diff) * (events[k + 1].first - events[k].first));
    }
    return pairwise_sum(std::span<const double>(pieces));
}

}  // namespace detail

/// Exact W1 in 1-D; otherwise the test-family discrepancy.
inline double weak_distance(const AtomicMeasure& mu, const AtomicMeasure& nu, const WeakTestFamily& family) {
    detail::require_same_space(mu, nu);
    if (!mu.symbolic() && mu.dimension() == 1) return detail::wasserstein1_line(mu, nu);
    return family.discrepancy(mu, nu);
}

/// As above with the default family: centres over [0, 1]^d, or words over
/// the largest symbol present in either measure.
inline double weak_distance(const AtomicMeasure& mu, const AtomicMeasure& nu) {
    detail::require_same_space(mu, nu);
    if (!mu.symbolic() && mu.dimension() == 1) return detail::wasserstein1_line(mu, nu);
    if (mu.symbolic()) {
        int symbols = 2;
        for (const auto* m : {&mu, &nu}) {
            for (const auto& a : m->atoms) {
                for (int s : a.point.word()) symbols = std::max(symbols, s);
            }
        }
        return WeakTestFamily::sequence(symbols).discrepancy(mu, nu);
    }
    const auto d = static_cast<Eigen::Index>(mu.dimension());
    return WeakTestFamily::euclidean(Box{Eigen::VectorXd::Zero(d), Eigen::VectorXd::Ones(d)}).discrepancy(mu, nu);
}

/// Exact W1 between a 1-D atomic measure and normalised Lebesgue measure on
/// [lo, hi]: integral of |F(x) - (x - lo) / (hi - lo)|.
inline double wasserstein1_to_lebesgue(const AtomicMeasure& mu, double lo = 0.0, double hi = 1.0) {
    if (mu.symbolic() || mu.dimension() != 1) throw InputError("W1 to Lebesgue needs a 1-D measure");
    if (!(lo < hi)) throw InputError("empty Lebesgue interval");
    std::vector<std::pair<double, double>> atoms;
    for (const auto& a : mu.atoms) atoms.emplace_back(a.point.x(), a.weight);
    std::sort(atoms.begin(), atoms.end());
    const double len = hi - lo;
    // integral over [a, b] of |c - (x - lo)/len| dx, closed form.
    auto piece = [&](double a, double b, double c) {
        if (b <= a) return 0.0;
        const double ua = (a - lo) / len;
        const double ub = (b - lo) / len;
        auto prim = [c](double u) { return u <= c ? c * u - 0.5 * u * u : 0.5 * c * c + 0.5 * (u - c) * (u - c); };
        return len * (prim(ub) - prim(ua));
    };
    std::vector<double> pieces;
    double cdf = 0.0;
    double left = lo;
    for (const auto& [x, w] : atoms) {
        const double right = std::clamp(x, lo, hi);
        pieces.push_back(piece(left, right, cdf));
        left = std::max(left, right);
        cdf += w;
    }
    pieces.push_back(piece(left, hi, cdf));
    // Atoms outside [lo, hi] are transported to the interval end.
    for (const auto& [x, w] : atoms) {
        if (x < lo) pieces.push_back(w * (lo - x));
        if (x > hi) pieces.push_back(w * (x - hi));
    }
    return pairwise_sum(std::span<const double>(pieces));
}

/// Weak distance between mu and its Markov image sum_i p_i (gamma_i)_* mu.
inline double invariance_defect(const IFSystem& sys, const AtomicMeasure& mu) {
    if (mu.atoms.empty()) throw InputError("invariance defect of an empty measure");
    for (const auto& a : mu.atoms) {
        if (!sys.same_space(a.point)) throw InputError("measure does not live on the system's ambient space");
    }
    return weak_distance(mu, markov_image(sys, mu), WeakTestFamily::for_system(sys));
}

/// mu^H_N-mass of atoms lying within tol of both gamma_i(K_N) and gamma_j(K_N),
/// K_N the depth-N cloud. Indices are 1-based.
inline double overlap_mass(const IFSystem& sys, std::size_t depth, int i, int j, double tol,
                           std::size_t budget = cell_budget()) {
    if (i == j) throw InputError("overlap mass needs two different branches");
    const auto n = static_cast<int>(sys.size());
    if (i < 1 || j < 1 || i > n || j > n) throw InputError("branch index out of range");
    const IFSystem uniform = sys.uniform_weights() ? sys : sys.with_weights(std::vector<double>(sys.size(), 1.0 / n));
    const PointCloud cloud = attractor_deterministic(uniform, depth, std::nullopt, budget);
    auto image = [&](int b) {
        std::vector<Point> pts;
        pts.reserve(cloud.size());
        for (const auto& p : cloud.points) pts.push_back(uniform.map(static_cast<std::size_t>(b - 1))(p));
        return NearestIndex(pts);
    };
    const NearestIndex near_i = image(i);
    const NearestIndex near_j = image(j);
    const AtomicMeasure mu = self_similar_measure(uniform, depth, std::nullopt, budget);
    std::vector<double> hits;
    for (const auto& a : mu.atoms) {
        if (near_i.distance_to(a.point) <= tol && near_j.distance_to(a.point) <= tol) hits.push_back(a.weight);
    }
    return pairwise_sum(std::span<const double>(hits));
}

using MeasureIntegrand = std::function<std::complex<double>(const Point&)>;

/// sum_k weight_k f(atom_k).
inline std::complex<double> integrate(const AtomicMeasure& mu, const MeasureIntegrand& f) {
    std::vector<std::complex<double>> terms;
    terms.reserve(mu.atoms.size());
    for (const auto& a : mu.atoms) terms.push_back(a.weight * f(a.point));
    return pairwise_sum(std::span<const std::complex<double>>(terms));
}

}  // namespace hlab
