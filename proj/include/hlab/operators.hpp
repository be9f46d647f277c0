#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <nlohmann/json.hpp>

#include "cells.hpp"
#include "errors.hpp"

namespace hlab {

using SparseMatrix = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;
using Triplet = Eigen::Triplet<Complex>;

/// Sparsity structure, used to pick exact norm formulas.
///   diagonal   square, nonzeros only on the diagonal
///   selector   at most one nonzero per row (C_phi, M_a C_phi, ...)
///   fiber      square on a depth >= 1 space, nonzeros only between cells
///              with the same shift image (block diagonal in n x n blocks)
///   general    anything else
enum class Structure { diagonal, selector, fiber, general };

inline const char* to_string(Structure s) {
    switch (s) {
        case Structure::diagonal: return "diagonal";
        case Structure::selector: return "selector";
        case Structure::fiber: return "fiber";
        case Structure::general: return "general";
    }
    return "general";
}

/// Linear operator between two cell spaces, stored sparse. Norms and
/// adjoints are taken with respect to the weighted cell inner products.
class OperatorMatrix {
public:
    OperatorMatrix(CellSpaceRef domain, CellSpaceRef codomain, SparseMatrix entries)
        : domain_(std::move(domain)), codomain_(std::move(codomain)), entries_(std::move(entries)) {
        if (!domain_ || !codomain_) throw InputError("operator without domain or codomain");
        if (!domain_->same_system(*codomain_)) throw InputError("operator between spaces of different systems");
        if (static_cast<std::size_t>(entries_.rows()) != codomain_->size() ||
            static_cast<std::size_t>(entries_.cols()) != domain_->size()) {
            throw InputError("operator shape does not match (codomain cells) x (domain cells)");
        }
        entries_.makeCompressed();
        structure_ = detect_structure();
    }

    const CellSpaceRef& domain() const noexcept { return domain_; }
    const CellSpaceRef& codomain() const noexcept { return codomain_; }
    const SparseMatrix& entries() const noexcept { return entries_; }
    Structure structure() const noexcept { return structure_; }
    std::size_t rows() const { return static_cast<std::size_t>(entries_.rows()); }
    std::size_t cols() const { return static_cast<std::size_t>(entries_.cols()); }

    GridFunction apply(const GridFunction& f) const {
        if (!f.space || !(*f.space == *domain_)) throw InputError("function is not in the operator's domain");
        return {codomain_, entries_ * f.values};
    }

    /// Weighted adjoint W_dom^{-1} T^H W_cod.
    OperatorMatrix adjoint() const {
        const double scale = codomain_->cell_weight() / domain_->cell_weight();
        SparseMatrix a = SparseMatrix(entries_.adjoint()) * Complex(scale);
        return OperatorMatrix(codomain_, domain_, std::move(a));
    }

    Eigen::MatrixXcd dense() const { return Eigen::MatrixXcd(entries_); }

    /// sqrt(w_cod / w_dom): converts plain spectral norms into weighted ones.
    double norm_scale() const { return std::sqrt(codomain_->cell_weight() / domain_->cell_weight()); }

    friend OperatorMatrix operator*(const OperatorMatrix& a, const OperatorMatrix& b) {
        if (!(*a.domain_ == *b.codomain_)) throw InputError("operator product with mismatched spaces");
        return OperatorMatrix(b.domain_, a.codomain_, SparseMatrix(a.entries_ * b.entries_));
    }

    friend OperatorMatrix operator+(const OperatorMatrix& a, const OperatorMatrix& b) {
        a.require_same_shape(b);
        return OperatorMatrix(a.domain_, a.codomain_, SparseMatrix(a.entries_ + b.entries_));
    }

    friend OperatorMatrix operator-(const OperatorMatrix& a, const OperatorMatrix& b) {
        a.require_same_shape(b);
        return OperatorMatrix(a.domain_, a.codomain_, SparseMatrix(a.entries_ - b.entries_));
    }

    friend OperatorMatrix operator*(Complex c, const OperatorMatrix& a) {
        return OperatorMatrix(a.domain_, a.codomain_, SparseMatrix(a.entries_ * c));
    }

    /// n x n block of the fiber over coarse cell v (fiber structure only).
    Eigen::MatrixXcd fiber_block(std::size_t v) const {
        const std::size_t n = domain_->symbols();
        Eigen::MatrixXcd b = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
            const auto r = static_cast<Eigen::Index>(codomain_->prepend(static_cast<int>(i + 1), v));
            for (SparseMatrix::InnerIterator it(entries_, r); it; ++it) {
                b(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(domain_->head(static_cast<std::size_t>(it.col())) - 1)) = it.value();
            }
        }
        return b;
    }

private:
    void require_same_shape(const OperatorMatrix& b) const {
        if (!(*domain_ == *b.domain_) || !(*codomain_ == *b.codomain_)) throw InputError("operator sum with mismatched spaces");
    }

    Structure detect_structure() const {
        const bool square = *domain_ == *codomain_;
        bool diag = square;
        bool selector = true;
        bool fiber = square && domain_->depth() >= 1;
        for (Eigen::Index r = 0; r < entries_.outerSize(); ++r) {
            int nonzeros = 0;
            for (SparseMatrix::InnerIterator it(entries_, r); it; ++it) {
                if (it.value() == Complex(0.0)) continue;
                ++nonzeros;
                if (it.col() != r) diag = false;
                if (fiber && domain_->shift(static_cast<std::size_t>(it.col())) != domain_->shift(static_cast<std::size_t>(r))) {
                    fiber = false;
                }
            }
            if (nonzeros > 1) selector = false;
        }
        if (diag) return Structure::diagonal;
        if (selector) return Structure::selector;
        if (fiber) return Structure::fiber;
        return Structure::general;
    }

    CellSpaceRef domain_;
    CellSpaceRef codomain_;
    SparseMatrix entries_;
    Structure structure_ = Structure::general;
};

// ---------------------------------------------------------------------------
// Norms
// ---------------------------------------------------------------------------

inline constexpr std::size_t kPowerIterationCap = 10000;

/// Largest singular value with respect to the weighted inner products.
///
/// Exact for diagonal, selector and fiber structures (max |d|, column mass,
/// per-fiber n x n SVD). Otherwise power iteration on T^H T. The start vector
/// is all-ones plus a fixed deterministic ripple, so that it is not trapped in
/// a symmetry-invariant subspace.
inline double operator_norm(const OperatorMatrix& t, double tol = 1e-10, std::size_t max_iter = kPowerIterationCap) {
    const SparseMatrix& m = t.entries();
    if (m.nonZeros() == 0) return 0.0;
    switch (t.structure()) {
        case Structure::diagonal: {
            double best = 0.0;
            for (Eigen::Index k = 0; k < m.outerSize(); ++k) {
                for (SparseMatrix::InnerIterator it(m, k); it; ++it) best = std::max(best, std::abs(it.value()));
            }
            return best;
        }
        case Structure::selector: {
            std::vector<double> column_mass(t.cols(), 0.0);
            for (Eigen::Index k = 0; k < m.outerSize(); ++k) {
                for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
                    column_mass[static_cast<std::size_t>(it.col())] += std::norm(it.value());
                }
            }
            double best = 0.0;
            for (double c : column_mass) best = std::max(best, c);
            return t.norm_scale() * std::sqrt(best);
        }
        case Structure::fiber: {
            double best = 0.0;
            for (std::size_t v = 0; v < t.domain()->coarse_size(); ++v) {
                Eigen::JacobiSVD<Eigen::MatrixXcd> svd(t.fiber_block(v));
                best = std::max(best, svd.singularValues()(0));
            }
            return best;
        }
        case Structure::general:
            break;
    }

    const auto n = static_cast<Eigen::Index>(t.cols());
    Eigen::VectorXcd x(n);
    for (Eigen::Index k = 0; k < n; ++k) x(k) = 1.0 + 0.5 * std::sin(static_cast<double>(k + 1));
    x.normalize();
    const SparseMatrix mh = m.adjoint();
    double sigma = 0.0;
    for (std::size_t it = 0; it < max_iter; ++it) {
        Eigen::VectorXcd y = m * x;
        const double s = y.norm();
        if (s == 0.0) return 0.0;
        Eigen::VectorXcd z = mh * y;
        const double zn = z.norm();
        if (zn == 0.0) return t.norm_scale() * s;
        x = z / zn;
        if (it > 0 && std::abs(s - sigma) <= tol * s) return t.norm_scale() * s;
        sigma = s;
    }
    throw NumericalError("power iteration did not converge in " + std::to_string(max_iter) + " iterations", x);
}

// ---------------------------------------------------------------------------
// M_a, C_phi, L_phi
// ---------------------------------------------------------------------------

/// Diagonal matrix of a's values on a's space.
inline OperatorMatrix mult_op(const GridFunction& a) {
    const auto n = static_cast<Eigen::Index>(a.size());
    SparseMatrix m(n, n);
    std::vector<Triplet> t;
    t.reserve(a.size());
    for (Eigen::Index k = 0; k < n; ++k) t.emplace_back(k, k, a.values(k));
    m.setFromTriplets(t.begin(), t.end());
    return OperatorMatrix(a.space, a.space, std::move(m));
}

/// C_phi from depth N-1 to depth N: (C f)(w1 w2 ... wN) = f(w2 ... wN).
inline OperatorMatrix comp_op(const CellSpaceRef& domain, const CellSpaceRef& codomain) {
    if (!domain->same_system(*codomain)) throw InputError("composition operator between different systems");
    if (codomain->depth() != domain->depth() + 1) throw InputError("composition operator maps depth N-1 to depth N");
    SparseMatrix m(static_cast<Eigen::Index>(codomain->size()), static_cast<Eigen::Index>(domain->size()));
    std::vector<Triplet> t;
    t.reserve(codomain->size());
    for (std::size_t k = 0; k < codomain->size(); ++k) {
        t.emplace_back(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(codomain->shift(k)), Complex(1.0));
    }
    m.setFromTriplets(t.begin(), t.end());
    return OperatorMatrix(domain, codomain, std::move(m));
}

inline OperatorMatrix comp_op(const CellSpaceRef& space_out) {
    if (space_out->depth() < 1) throw InputError("composition operator needs depth >= 1");
    return comp_op(coarser(space_out), space_out);
}

/// L_phi from depth N to depth N-1: (L g)(v) = (1/n) sum_i g(i v).
inline OperatorMatrix transfer_op(const CellSpaceRef& domain, const CellSpaceRef& codomain) {
    if (!domain->same_system(*codomain)) throw InputError("transfer operator between different systems");
    if (domain->depth() != codomain->depth() + 1) throw InputError("transfer operator maps depth N to depth N-1");
    const std::size_t n = domain->symbols();
    SparseMatrix m(static_cast<Eigen::Index>(codomain->size()), static_cast<Eigen::Index>(domain->size()));
    std::vector<Triplet> t;
    t.reserve(domain->size());
    const Complex c(1.0 / static_cast<double>(n));
    for (std::size_t v = 0; v < codomain->size(); ++v) {
        for (std::size_t i = 1; i <= n; ++i) {
            t.emplace_back(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(domain->prepend(static_cast<int>(i), v)), c);
        }
    }
    m.setFromTriplets(t.begin(), t.end());
    return OperatorMatrix(domain, codomain, std::move(m));
}

inline OperatorMatrix transfer_op(const CellSpaceRef& space_in) {
    if (space_in->depth() < 1) throw InputError("transfer operator needs depth >= 1");
    return transfer_op(space_in, coarser(space_in));
}

// ---------------------------------------------------------------------------
// Defects of the operator identities
// ---------------------------------------------------------------------------

/// || C_phi^* - L_phi || on depth N.
inline double adjoint_defect(const CellSpaceRef& space) {
    if (space->depth() < 1) throw InputError("adjoint defect needs depth >= 1");
    const CellSpaceRef coarse = coarser(space);
    const OperatorMatrix c = comp_op(coarse, space);
    const OperatorMatrix l = transfer_op(space, coarse);
    return operator_norm(c.adjoint() - l);
}

/// || C^* M_{a_N} C - M_{(L a)_{N-1}} ||, (L a) evaluated by exact map application.
inline double covariance_defect(const ScalarFunction& a, std::shared_ptr<const IFSystem> sys, std::size_t depth) {
    if (depth < 2) throw InputError("covariance defect needs depth >= 2");
    const CellSpaceRef fine = cell_space(sys, depth);
    const CellSpaceRef coarse = coarser(fine);
    const OperatorMatrix c = comp_op(coarse, fine);
    const OperatorMatrix lhs = c.adjoint() * mult_op(discretize(a, fine)) * c;
    const OperatorMatrix rhs = mult_op(discretize(a.averaged(sys), coarse));
    return operator_norm(lhs - rhs);
}

inline double covariance_defect(const ScalarFunction& a, const IFSystem& sys, std::size_t depth) {
    return covariance_defect(a, std::make_shared<const IFSystem>(sys), depth);
}

/// max over random f of | ||C f||_p - ||f||_p |, f on depth N-1. Trial t
/// draws from its own generator seeded by (rng_seed, t).
inline double isometry_defect(const IFSystem& sys, std::size_t depth, double p, std::size_t trials, std::uint64_t rng_seed) {
    if (depth < 1) throw InputError("isometry defect needs depth >= 1");
    const CellSpaceRef fine = cell_space(sys, depth);
    const CellSpaceRef coarse = coarser(fine);
    const OperatorMatrix c = comp_op(coarse, fine);
    double worst = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
        std::seed_seq seq{static_cast<std::uint32_t>(rng_seed), static_cast<std::uint32_t>(rng_seed >> 32),
                          static_cast<std::uint32_t>(t)};
        std::mt19937_64 rng(seq);
        const GridFunction f = random_grid_function(coarse, rng);
        worst = std::max(worst, std::abs(lp_norm(c.apply(f), p) - lp_norm(f, p)));
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

/// {kind: "diagonal"|"selector"|"dense", rows, cols, domain_depth,
///  codomain_depth, data}. Complex entries are [re, im] pairs. Selector data
/// lists one {column, value} per row (column -1 for an empty row).
inline nlohmann::json to_json(const OperatorMatrix& t) {
    auto cx = [](Complex z) { return nlohmann::json::array({z.real(), z.imag()}); };
    nlohmann::json j{{"rows", t.rows()},
                     {"cols", t.cols()},
                     {"domain_depth", t.domain()->depth()},
                     {"codomain_depth", t.codomain()->depth()}};
    const SparseMatrix& m = t.entries();
    if (t.structure() == Structure::diagonal) {
        j["kind"] = "diagonal";
        j["data"] = nlohmann::json::array();
        for (Eigen::Index k = 0; k < m.rows(); ++k) j["data"].push_back(cx(m.coeff(k, k)));
        return j;
    }
    if (t.structure() == Structure::selector) {
        j["kind"] = "selector";
        j["data"] = nlohmann::json::array();
        for (Eigen::Index r = 0; r < m.outerSize(); ++r) {
            nlohmann::json row{{"column", -1}, {"value", cx(0.0)}};
            for (SparseMatrix::InnerIterator it(m, r); it; ++it) {
                if (it.value() != Complex(0.0)) row = {{"column", it.col()}, {"value", cx(it.value())}};
            }
            j["data"].push_back(row);
        }
        return j;
    }
    j["kind"] = "dense";
    const Eigen::MatrixXcd d = t.dense();
    j["data"] = nlohmann::json::array();
    for (Eigen::Index r = 0; r < d.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < d.cols(); ++c) row.push_back(cx(d(r, c)));
        j["data"].push_back(row);
    }
    return j;
}

/// Dense CSV, one matrix row per line. Entries print as plain reals when the
/// whole matrix is real, otherwise as "re+imj".
inline void write_dense_csv(std::ostream& os, const OperatorMatrix& t) {
    const Eigen::MatrixXcd d = t.dense();
    const bool real = d.imag().isZero(0.0);
    os.precision(17);
    for (Eigen::Index r = 0; r < d.rows(); ++r) {
        for (Eigen::Index c = 0; c < d.cols(); ++c) {
            if (c) os << ',';
            if (real) {
                os << d(r, c).real();
            } else {
                os << d(r, c).real() << (d(r, c).imag() < 0 ? "" : "+") << d(r, c).imag() << 'j';
            }
        }
        os << '\n';
    }
}

}  // namespace hlab
