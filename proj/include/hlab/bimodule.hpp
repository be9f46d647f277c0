#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "cells.hpp"
#include "conditions.hpp"
#include "errors.hpp"
#include "operators.hpp"
#include "report.hpp"

namespace hlab {

/// An element of X = C(K) at depth N is just its cell values.
using BimoduleElement = GridFunction;

/// <xi, eta>_A = L_phi(conj(xi) eta), a function one level up.
inline GridFunction inner_product_A(const BimoduleElement& xi, const BimoduleElement& eta, const OperatorMatrix& transfer) {
    return transfer.apply(xi.conj() * eta);
}

inline GridFunction inner_product_A(const BimoduleElement& xi, const BimoduleElement& eta) {
    detail::require_same_space(xi, eta);
    return inner_product_A(xi, eta, transfer_op(xi.space));
}

/// ||xi||_2 = max_v <xi, xi>_A(v)^(1/2).
inline double bimodule_norm(const BimoduleElement& xi) {
    return std::sqrt(inner_product_A(xi, xi).values.real().maxCoeff());
}

/// Right action xi . b, (xi . b)(w) = xi(w) b(sigma w).
inline BimoduleElement right_action(const BimoduleElement& xi, const GridFunction& b) {
    return xi * comp_op(b.space, xi.space).apply(b);
}

/// (a . xi . b)(w) = a(w) xi(w) b(sigma w).
inline BimoduleElement module_action(const GridFunction& a, const BimoduleElement& xi, const GridFunction& b) {
    if (!a.space || !xi.space || !(*a.space == *xi.space)) throw InputError("left action needs a and xi on the same depth");
    if (!b.space || !b.space->same_system(*xi.space) || b.space->depth() + 1 != xi.space->depth()) {
        throw InputError("right action needs b one level coarser than xi");
    }
    return a * right_action(xi, b);
}

// ---------------------------------------------------------------------------
// Basis families
// ---------------------------------------------------------------------------

namespace detail {

// Loose identity test for a space and a separately passed system.
inline bool describes(const CellSpace& space, const IFSystem& sys) {
    const IFSystem& own = space.system();
    return &own == &sys || (own.name() == sys.name() && own.size() == sys.size() && own.symbolic() == sys.symbolic() &&
                            own.dimension() == sys.dimension());
}

}  // namespace detail

enum class BasisKind { cylinder, partition_of_unity };

inline const char* to_string(BasisKind k) { return k == BasisKind::cylinder ? "cylinder" : "partition-of-unity"; }

struct BasisFamily {
    std::vector<BimoduleElement> elements;
    BasisKind kind = BasisKind::cylinder;
    CellSpaceRef space;
    // Reconstruction is exact on cells at distance >= exact_radius from the
    // branch points (0 means everywhere).
    double exact_radius = 0.0;
    std::vector<double> b_points;
    nlohmann::json supports = nlohmann::json::array();  // one record per element

    std::size_t size() const { return elements.size(); }
};

/// u_i = sqrt(n) 1_[i], i = 1..n.
inline BasisFamily cylinder_basis(const CellSpaceRef& space) {
    if (space->depth() < 1) throw InputError("cylinder basis needs depth >= 1");
    const std::size_t n = space->symbols();
    BasisFamily basis;
    basis.kind = BasisKind::cylinder;
    basis.space = space;
    const double scale = std::sqrt(static_cast<double>(n));
    for (std::size_t i = 1; i <= n; ++i) {
        Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(space->size()));
        for (std::size_t k = 0; k < space->size(); ++k) {
            if (space->head(k) == static_cast<int>(i)) v(static_cast<Eigen::Index>(k)) = scale;
        }
        basis.elements.emplace_back(space, std::move(v));
        basis.supports.push_back({{"cylinder", std::to_string(i)}, {"scale", scale}});
    }
    return basis;
}

inline BasisFamily cylinder_basis(const IFSystem& sys, const CellSpaceRef& space) {
    if (!detail::describes(*space, sys)) throw InputError("cell space belongs to another system");
    return cylinder_basis(space);
}

namespace detail {

// Member k of a piecewise-linear partition in r >= 0 with nodes 2^-1 > 2^-2 > ...
// It peaks at 2^-k, and member 1 stays at 1 for r >= 1/2. Members 1..L sum to
// 1 for r >= 2^-L and fall to 0 at 2^-(L+1).
inline double radial_bump(double r, std::size_t k) {
    const double peak = std::ldexp(1.0, -static_cast<int>(k));
    const double below = peak / 2.0;
    const double above = peak * 2.0;
    if (r <= below) return 0.0;
    if (r <= peak) return (r - below) / (peak - below);
    if (k == 1) return 1.0;
    if (r >= above) return 0.0;
    return (above - r) / (above - peak);
}

// Uniform hat partition on [lo, hi] with `pieces` intervals; member c peaks at lo + c s.
inline double hat(double x, double lo, double spacing, std::size_t c, std::size_t pieces) {
    const double t = (x - lo) / spacing - static_cast<double>(c);
    if (c == 0 && t <= 0.0) return 1.0;
    if (c == pieces && t >= 0.0) return 1.0;
    return std::max(0.0, 1.0 - std::abs(t));
}

// True when no element is nonzero at two cells of the same fiber {i v}.
inline bool partners_disjoint(const CellSpace& space, const std::vector<Eigen::VectorXd>& psi) {
    const std::size_t n = space.symbols();
    for (const auto& p : psi) {
        for (std::size_t v = 0; v < space.coarse_size(); ++v) {
            int hits = 0;
            for (std::size_t i = 1; i <= n; ++i) {
                if (p(static_cast<Eigen::Index>(space.prepend(static_cast<int>(i), v))) > 0.0) ++hits;
            }
            if (hits > 1) return false;
        }
    }
    return true;
}

}  // namespace detail

/// Finite partition-of-unity family adapted to the branch points of a 1-D
/// system. psi ranges over (radial bump at scale 2^-k around B) x (uniform hat),
/// split into connected pieces; u = sqrt(n psi). Hats are refined until no
/// element touches two fiber partners, which makes every u a local section of
/// the shift and the reconstruction exact where sum psi = 1.
inline BasisFamily pou_basis(const IFSystem& sys, const CellSpaceRef& space, const BranchSetEstimate& branch, std::size_t levels) {
    if (sys.symbolic() || sys.dimension() != 1) throw UnsupportedError("partition-of-unity bases need a 1-D euclidean system");
    if (!branch.finite) throw UnsupportedError("partition-of-unity bases need a finite branch set");
    if (!detail::describes(*space, sys)) throw InputError("cell space belongs to another system");
    if (space->depth() < 1) throw InputError("partition-of-unity basis needs depth >= 1");
    if (!branch.b_points.empty() && levels == 0) throw InputError("partition-of-unity basis needs levels >= 1");

    std::vector<double> b;
    for (const auto& p : branch.b_points) b.push_back(p.x());
    const std::size_t cells = space->size();
    std::vector<double> x(cells), r(cells, std::numeric_limits<double>::infinity());
    for (std::size_t k = 0; k < cells; ++k) {
        x[k] = space->representative(k).x();
        for (double bp : b) r[k] = std::min(r[k], std::abs(x[k] - bp));
    }
    std::vector<std::size_t> order(cells);
    for (std::size_t k = 0; k < cells; ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return x[i] < x[j]; });

    const Box box = sys.box();
    const double lo = box.lo(0), width = box.hi(0) - box.lo(0);
    const std::size_t radial_count = b.empty() ? 1 : levels;
    const std::size_t n = space->symbols();

    for (int stage = 0; stage <= 30; ++stage) {
        const std::size_t pieces = stage == 0 ? 0 : (std::size_t{1} << stage);
        const double spacing = stage == 0 ? width : width / static_cast<double>(pieces);
        std::vector<Eigen::VectorXd> psi;
        nlohmann::json supports = nlohmann::json::array();
        for (std::size_t k = 1; k <= radial_count; ++k) {
            for (std::size_t c = 0; c <= pieces; ++c) {
                Eigen::VectorXd whole(static_cast<Eigen::Index>(cells));
                for (std::size_t w = 0; w < cells; ++w) {
                    const double radial = b.empty() ? 1.0 : detail::radial_bump(r[w], k);
                    const double across = stage == 0 ? 1.0 : detail::hat(x[w], lo, spacing, c, pieces);
                    whole(static_cast<Eigen::Index>(w)) = radial * across;
                }
                // Split into runs of consecutive nonzero cells along the line.
                std::size_t pos = 0;
                while (pos < cells) {
                    while (pos < cells && whole(static_cast<Eigen::Index>(order[pos])) <= 0.0) ++pos;
                    if (pos == cells) break;
                    Eigen::VectorXd piece = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cells));
                    const double start = x[order[pos]];
                    double end = start;
                    while (pos < cells && whole(static_cast<Eigen::Index>(order[pos])) > 0.0) {
                        const auto w = static_cast<Eigen::Index>(order[pos]);
                        piece(w) = whole(w);
                        end = x[order[pos]];
                        ++pos;
                    }
                    nlohmann::json rec{{"support", {start, end}}, {"level", b.empty() ? 0 : k}};
                    if (!b.empty()) {
                        const double peak = std::ldexp(1.0, -static_cast<int>(k));
                        rec["radial_breakpoints"] = k == 1 ? nlohmann::json{peak / 2, peak}
                                                           : nlohmann::json{peak / 2, peak, 2 * peak};
                    }
                    if (stage > 0) {
                        rec["hat_breakpoints"] = {lo + (static_cast<double>(c) - 1) * spacing, lo + static_cast<double>(c) * spacing,
                                                  lo + (static_cast<double>(c) + 1) * spacing};
                    }
                    psi.push_back(std::move(piece));
                    supports.push_back(std::move(rec));
                }
            }
        }
        if (!detail::partners_disjoint(*space, psi)) continue;

        BasisFamily basis;
        basis.kind = BasisKind::partition_of_unity;
        basis.space = space;
        basis.b_points = b;
        basis.exact_radius = b.empty() ? 0.0 : std::ldexp(1.0, -static_cast<int>(levels));
        basis.supports = std::move(supports);
        for (const auto& p : psi) {
            basis.elements.emplace_back(space, (static_cast<double>(n) * p).cwiseSqrt().cast<Complex>());
        }
        return basis;
    }
    throw UnsupportedError("could not separate fiber partners with a partition of unity on system '" + sys.name() + "'");
}

/// Basis metadata as JSON: kind, depth, branch points and one support record per element.
inline nlohmann::json to_json(const BasisFamily& basis) {
    return {{"kind", to_string(basis.kind)},
            {"system", basis.space->system().name()},
            {"depth", basis.space->depth()},
            {"size", basis.size()},
            {"exact_radius", basis.exact_radius},
            {"b_points", basis.b_points},
            {"elements", basis.supports}};
}

// ---------------------------------------------------------------------------
// Frame operator and reconstruction
// ---------------------------------------------------------------------------

/// sum_{i < upto} M_{u_i} C_phi C_phi^* M_{u_i}^* on the basis depth.
inline OperatorMatrix frame_operator(const BasisFamily& basis, std::size_t upto) {
    if (upto > basis.size()) throw InputError("frame operator asked for more elements than the family has");
    const CellSpaceRef& space = basis.space;
    const OperatorMatrix c = comp_op(space);
    const OperatorMatrix cc = c * c.adjoint();
    OperatorMatrix total(space, space, SparseMatrix(static_cast<Eigen::Index>(space->size()), static_cast<Eigen::Index>(space->size())));
    for (std::size_t i = 0; i < upto; ++i) {
        const OperatorMatrix mu = mult_op(basis.elements[i]);
        total = total + mu * cc * mu.adjoint();
    }
    return total;
}

inline OperatorMatrix frame_operator(const BasisFamily& basis) { return frame_operator(basis, basis.size()); }

/// sum_i u_i . <u_i, xi>_A.
inline BimoduleElement reconstruction(const BasisFamily& basis, const BimoduleElement& xi) {
    if (!xi.space || !(*xi.space == *basis.space)) throw InputError("element is not at the basis depth");
    const OperatorMatrix transfer = transfer_op(basis.space);
    const OperatorMatrix c = comp_op(transfer.codomain(), basis.space);
    Eigen::VectorXcd sum = Eigen::VectorXcd::Zero(xi.values.size());
    for (const auto& u : basis.elements) {
        sum += u.values.cwiseProduct(c.apply(inner_product_A(u, xi, transfer)).values);
    }
    return {basis.space, std::move(sum)};
}

/// max |reconstruction - xi| over cells at distance >= min_distance from the
/// branch points (all cells when the basis has none).
inline double reconstruction_defect(const BasisFamily& basis, const BimoduleElement& xi, double min_distance = 0.0) {
    const GridFunction diff = reconstruction(basis, xi) - xi;
    double worst = 0.0;
    for (std::size_t k = 0; k < diff.size(); ++k) {
        if (!basis.b_points.empty() && min_distance > 0.0) {
            double r = std::numeric_limits<double>::infinity();
            const double xk = basis.space->representative(k).x();
            for (double bp : basis.b_points) r = std::min(r, std::abs(xk - bp));
            if (r < min_distance) continue;
        }
        worst = std::max(worst, std::abs(diff[k]));
    }
    return worst;
}

/// sup | T a - sum_i u_i . <u_i, a>_A |.
inline double key_identity_defect(const BasisFamily& basis, const GridFunction& a) {
    const GridFunction op_side = frame_operator(basis).apply(a);
    return (op_side - reconstruction(basis, a)).sup_norm();
}

/// Spectra of the partial sums T_1, ..., T_M. T_m is block diagonal over the
/// fibers {i v}, with block (1/n) sum_{k<=m} x_k x_k^H, x_k = (u_k(i v))_i.
struct FrameSpectrum {
    std::vector<double> min_eigenvalue;  // index m-1
    std::vector<double> max_eigenvalue;
};

inline FrameSpectrum frame_spectrum(const BasisFamily& basis) {
    const CellSpace& space = *basis.space;
    const std::size_t n = space.symbols();
    const std::size_t fibers = space.coarse_size();
    const auto ni = static_cast<Eigen::Index>(n);
    std::vector<Eigen::MatrixXcd> blocks(fibers, Eigen::MatrixXcd::Zero(ni, ni));
    std::vector<double> lo(fibers, 0.0), hi(fibers, 0.0);
    FrameSpectrum out;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver;
    for (const auto& u : basis.elements) {
        for (std::size_t v = 0; v < fibers; ++v) {
            Eigen::VectorXcd x(ni);
            for (std::size_t i = 0; i < n; ++i) x(static_cast<Eigen::Index>(i)) = u[space.prepend(static_cast<int>(i + 1), v)];
            if (x.isZero(0.0)) continue;
            blocks[v] += (x * x.adjoint()) / static_cast<double>(n);
            solver.compute(blocks[v], Eigen::EigenvaluesOnly);
            if (solver.info() != Eigen::Success) throw NumericalError("eigensolver failed on a frame block", x);
            lo[v] = solver.eigenvalues().minCoeff();
            hi[v] = solver.eigenvalues().maxCoeff();
        }
        out.min_eigenvalue.push_back(*std::min_element(lo.begin(), lo.end()));
        out.max_eigenvalue.push_back(*std::max_element(hi.begin(), hi.end()));
    }
    return out;
}

/// Every partial-sum spectrum inside [-eps, 1 + eps]. The defect is the
/// largest excursion outside [0, 1].
inline DefectReport frame_bounds_check(const BasisFamily& basis, double eps = 1e-10) {
    return timed([&] {
        const FrameSpectrum s = frame_spectrum(basis);
        double excursion = 0.0;
        for (std::size_t m = 0; m < s.min_eigenvalue.size(); ++m) {
            excursion = std::max({excursion, -s.min_eigenvalue[m], s.max_eigenvalue[m] - 1.0});
        }
        DefectReport r = DefectReport::make("frame", basis.space->system().name(), basis.space->depth(), excursion, eps,
                                            {{"basis", to_string(basis.kind)}, {"size", basis.size()}});
        r.details = {{"min_eigenvalue", s.min_eigenvalue}, {"max_eigenvalue", s.max_eigenvalue}};
        return r;
    });
}

// ---------------------------------------------------------------------------
// The ideal J(X)
// ---------------------------------------------------------------------------

struct IdealElement {
    GridFunction a;
    double proximal_max = 0.0;  // max |a| over cells near B
    double tolerance = 1e-9;
    double radius = 0.0;        // "near" means within this distance of B
};

/// Accepts a when |a| <= tolerance on every cell within `radius` (default
/// 2 cell widths) of the branch points; otherwise names the first offender.
inline IdealElement make_ideal_element(const GridFunction& a, const std::vector<double>& b_points, double tolerance = 1e-9,
                                       double radius = -1.0) {
    const CellSpace& space = *a.space;
    if (radius < 0.0) radius = 2.0 * space.cell_width();
    IdealElement e{a, 0.0, tolerance, radius};
    if (b_points.empty()) return e;
    if (space.system().symbolic()) throw UnsupportedError("branch points on a symbolic system");
    for (std::size_t k = 0; k < space.size(); ++k) {
        const double xk = space.representative(k).x();
        double r = std::numeric_limits<double>::infinity();
        for (double bp : b_points) r = std::min(r, std::abs(xk - bp));
        if (r > radius) continue;
        const double m = std::abs(a[k]);
        e.proximal_max = std::max(e.proximal_max, m);
        if (m > tolerance) {
            throw PreconditionError("a does not vanish near the branch set: cell " + to_string(space.word(k)) + " at x = " +
                                    std::to_string(xk) + " has |a| = " + std::to_string(m));
        }
    }
    return e;
}

inline IdealElement make_ideal_element(const GridFunction& a, const BasisFamily& basis, double tolerance = 1e-9) {
    return make_ideal_element(a, basis.b_points, tolerance);
}

/// || sum_i M_a M_{u_i} C C^* M_{u_i}^* - M_a || over the whole family.
inline double ideal_covariance_defect(const BasisFamily& basis, const IdealElement& a) {
    if (!(*a.a.space == *basis.space)) throw InputError("ideal element is not at the basis depth");
    const OperatorMatrix ma = mult_op(a.a);
    return operator_norm(ma * frame_operator(basis) - ma);
}

// ---------------------------------------------------------------------------
// Representation checks
// ---------------------------------------------------------------------------

/// rho(a) = M_a, V_xi = M_xi C_phi. Checks rho(a) V_xi = V_{a xi} and
/// V_xi^* V_eta = rho(<xi, eta>_A) on random complex a, xi, eta.
inline DefectReport covariant_rep_check(const CellSpaceRef& space, std::size_t trials, std::uint64_t rng_seed, double tolerance = 1e-12) {
    if (space->depth() < 2) throw InputError("covariant representation check needs depth >= 2");
    return timed([&] {
        const OperatorMatrix c = comp_op(space);
        const OperatorMatrix transfer = transfer_op(space);
        double left = 0.0, inner_part = 0.0;
        for (std::size_t t = 0; t < trials; ++t) {
            std::seed_seq seq{static_cast<std::uint32_t>(rng_seed), static_cast<std::uint32_t>(rng_seed >> 32), static_cast<std::uint32_t>(t)};
            std::mt19937_64 rng(seq);
            const GridFunction a = random_grid_function(space, rng);
            const GridFunction xi = random_grid_function(space, rng);
            const GridFunction eta = random_grid_function(space, rng);
            const OperatorMatrix vxi = mult_op(xi) * c;
            left = std::max(left, operator_norm(mult_op(a) * vxi - mult_op(a * xi) * c));
            const OperatorMatrix veta = mult_op(eta) * c;
            inner_part = std::max(inner_part, operator_norm(vxi.adjoint() * veta - mult_op(inner_product_A(xi, eta, transfer))));
        }
        DefectReport r = DefectReport::make("covariant-rep", space->system().name(), space->depth(), std::max(left, inner_part),
                                            tolerance, {{"trials", trials}, {"seed", rng_seed}});
        r.details = {{"left_action", left}, {"inner_product", inner_part}};
        return r;
    });
}

inline DefectReport covariant_rep_check(const IFSystem& sys, const CellSpaceRef& space, std::size_t trials, std::uint64_t rng_seed,
                                        double tolerance = 1e-12) {
    if (!detail::describes(*space, sys)) throw InputError("cell space belongs to another system");
    return covariant_rep_check(space, trials, rng_seed, tolerance);
}

/// S_i = M_{u_i} C_phi with the cylinder basis: S_i^* S_j = delta_ij I and
/// sum_i S_i S_i^* = I. Only for full shifts.
inline DefectReport cuntz_relations_check(const IFSystem& sys, const CellSpaceRef& space, double tolerance = 1e-12) {
    if (!sys.symbolic()) {
        throw UnsupportedError("Cuntz relations are checked on shift systems only; '" + sys.name() +
                               "' is geometric (use covariant-rep and frame instead)");
    }
    if (!detail::describes(*space, sys)) throw InputError("cell space belongs to another system");
    return timed([&] {
        const BasisFamily basis = cylinder_basis(space);
        const OperatorMatrix c = comp_op(space);
        const CellSpaceRef coarse = c.domain();
        std::vector<OperatorMatrix> s;
        for (const auto& u : basis.elements) s.push_back(mult_op(u) * c);
        const OperatorMatrix id_coarse = mult_op(GridFunction::constant(coarse, 1.0));
        const OperatorMatrix id_fine = mult_op(GridFunction::constant(space, 1.0));
        nlohmann::json pairs = nlohmann::json::array();
        double worst_pair = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            for (std::size_t j = 0; j < s.size(); ++j) {
                OperatorMatrix d = s[i].adjoint() * s[j];
                if (i == j) d = d - id_coarse;
                const double v = operator_norm(d);
                worst_pair = std::max(worst_pair, v);
                pairs.push_back({{"i", i + 1}, {"j", j + 1}, {"defect", v}});
            }
        }
        OperatorMatrix sum(space, space, SparseMatrix(static_cast<Eigen::Index>(space->size()), static_cast<Eigen::Index>(space->size())));
        for (const auto& si : s) sum = sum + si * si.adjoint();
        const double completeness = operator_norm(sum - id_fine);
        DefectReport r = DefectReport::make("cuntz", sys.name(), space->depth(), std::max(worst_pair, completeness), tolerance,
                                            {{"n", sys.size()}});
        r.details = {{"pairs", pairs}, {"completeness", completeness}};
        return r;
    });
}

}  // namespace hlab
