#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "attractor.hpp"
#include "errors.hpp"
#include "ifs.hpp"
#include "measure.hpp"
#include "point.hpp"

namespace hlab {

using Complex = std::complex<double>;

/// Depth-N word-cell discretisation of L^2(K, mu^H).
///
/// Cells are the n^N words of length N in lexicographic order; cell index
/// k = sum_j (w_j - 1) n^(N-j). The shift sigma drops the first symbol, so
/// sigma(k) = k mod n^(N-1), and prepending symbol i maps v to
/// (i-1) n^(N-1) + v. Every cell carries mass 1/n^N.
class CellSpace {
public:
    CellSpace(std::shared_ptr<const IFSystem> sys, std::size_t depth, std::size_t budget = cell_budget())
        : sys_(std::move(sys)), depth_(depth) {
        if (!sys_) throw InputError("cell space needs a system");
        if (!sys_->uniform_weights()) {
            throw InputError("cell spaces carry the Hutchinson measure; system '" + sys_->name() +
                             "' has non-uniform weights");
        }
        count_ = checked_word_count(sys_->size(), depth_, budget);
        representatives_ = attractor_deterministic(*sys_, depth_, std::nullopt, budget).points;
        weight_ = 1.0 / static_cast<double>(count_);
    }

    const IFSystem& system() const noexcept { return *sys_; }
    const std::shared_ptr<const IFSystem>& system_ptr() const noexcept { return sys_; }
    std::size_t depth() const noexcept { return depth_; }
    std::size_t size() const noexcept { return count_; }
    std::size_t symbols() const noexcept { return sys_->size(); }
    double cell_weight() const noexcept { return weight_; }

    /// gamma_w(seed) for cell w.
    const Point& representative(std::size_t cell) const { return representatives_.at(cell); }
    const std::vector<Point>& representatives() const noexcept { return representatives_; }

    /// Cell diameter bound c2^N diam.
    double cell_width() const {
        return std::pow(sys_->contraction_upper(), static_cast<double>(depth_)) * sys_->diameter();
    }

    Word word(std::size_t cell) const {
        Word w(depth_);
        for (std::size_t k = depth_; k-- > 0;) {
            w[k] = static_cast<int>(cell % symbols()) + 1;
            cell /= symbols();
        }
        return w;
    }

    std::size_t index(const Word& w) const {
        if (w.size() != depth_) throw InputError("word length does not match cell depth");
        std::size_t k = 0;
        for (int s : w) {
            if (s < 1 || static_cast<std::size_t>(s) > symbols()) throw InputError("symbol out of range");
            k = k * symbols() + static_cast<std::size_t>(s - 1);
        }
        return k;
    }

    /// Number of cells one level up, n^(N-1).
    std::size_t coarse_size() const {
        if (depth_ == 0) throw InputError("depth-0 space has no coarser level");
        return count_ / symbols();
    }

    /// sigma on cell indices (depth N -> N-1).
    std::size_t shift(std::size_t cell) const { return cell % coarse_size(); }

    /// First symbol of cell, 1-based.
    int head(std::size_t cell) const { return static_cast<int>(cell / coarse_size()) + 1; }

    /// Index of i·v at this depth for v a cell one level up (i 1-based).
    std::size_t prepend(int i, std::size_t coarse_cell) const {
        return static_cast<std::size_t>(i - 1) * coarse_size() + coarse_cell;
    }

    bool same_system(const CellSpace& other) const { return sys_ == other.sys_ || sys_.get() == other.sys_.get(); }

    bool operator==(const CellSpace& other) const { return same_system(other) && depth_ == other.depth_; }

private:
    std::shared_ptr<const IFSystem> sys_;
    std::size_t depth_ = 0;
    std::size_t count_ = 1;
    double weight_ = 1.0;
    std::vector<Point> representatives_;
};

using CellSpaceRef = std::shared_ptr<const CellSpace>;

inline CellSpaceRef cell_space(std::shared_ptr<const IFSystem> sys, std::size_t depth, std::size_t budget = cell_budget()) {
    return std::make_shared<const CellSpace>(std::move(sys), depth, budget);
}

inline CellSpaceRef cell_space(const IFSystem& sys, std::size_t depth, std::size_t budget = cell_budget()) {
    return cell_space(std::make_shared<const IFSystem>(sys), depth, budget);
}

/// The same system one level coarser / finer.
inline CellSpaceRef coarser(const CellSpaceRef& s) {
    if (s->depth() == 0) throw InputError("depth-0 space has no coarser level");
    return cell_space(s->system_ptr(), s->depth() - 1);
}

inline CellSpaceRef finer(const CellSpaceRef& s) { return cell_space(s->system_ptr(), s->depth() + 1); }

/// Complex-valued function on the cells of a space.
struct GridFunction {
    CellSpaceRef space;
    Eigen::VectorXcd values;

    GridFunction() = default;
    GridFunction(CellSpaceRef s, Eigen::VectorXcd v) : space(std::move(s)), values(std::move(v)) {
        if (!space) throw InputError("grid function without a space");
        if (static_cast<std::size_t>(values.size()) != space->size()) {
            throw InputError("grid function has " + std::to_string(values.size()) + " values for " +
                             std::to_string(space->size()) + " cells");
        }
    }

    static GridFunction constant(CellSpaceRef s, Complex c) {
        const auto n = static_cast<Eigen::Index>(s->size());
        return {std::move(s), Eigen::VectorXcd::Constant(n, c)};
    }

    std::size_t size() const { return static_cast<std::size_t>(values.size()); }
    Complex operator[](std::size_t k) const { return values(static_cast<Eigen::Index>(k)); }

    GridFunction conj() const { return {space, values.conjugate()}; }

    /// max_w |f(w)|.
    double sup_norm() const { return values.size() ? values.cwiseAbs().maxCoeff() : 0.0; }
};

namespace detail {

inline void require_same_space(const GridFunction& f, const GridFunction& g) {
    if (!f.space || !g.space || !(*f.space == *g.space)) throw InputError("grid functions live on different cell spaces");
}

}  // namespace detail

inline GridFunction operator*(const GridFunction& f, const GridFunction& g) {
    detail::require_same_space(f, g);
    return {f.space, f.values.cwiseProduct(g.values)};
}

inline GridFunction operator+(const GridFunction& f, const GridFunction& g) {
    detail::require_same_space(f, g);
    return {f.space, f.values + g.values};
}

inline GridFunction operator-(const GridFunction& f, const GridFunction& g) {
    detail::require_same_space(f, g);
    return {f.space, f.values - g.values};
}

inline GridFunction operator*(Complex c, const GridFunction& f) { return {f.space, c * f.values}; }

/// <f, g> = sum_w (1/n^N) f(w) conj(g(w)).
inline Complex inner(const GridFunction& f, const GridFunction& g) {
    detail::require_same_space(f, g);
    std::vector<Complex> terms(f.size());
    for (std::size_t k = 0; k < f.size(); ++k) terms[k] = f[k] * std::conj(g[k]);
    return f.space->cell_weight() * pairwise_sum(std::span<const Complex>(terms));
}

/// (sum_w (1/n^N) |f(w)|^p)^(1/p), p >= 1.
inline double lp_norm(const GridFunction& f, double p) {
    if (!(p >= 1.0) || !std::isfinite(p)) throw InputError("L^p norm needs p in [1, inf)");
    std::vector<double> terms(f.size());
    for (std::size_t k = 0; k < f.size(); ++k) terms[k] = std::pow(std::abs(f[k]), p);
    return std::pow(f.space->cell_weight() * pairwise_sum(std::span<const double>(terms)), 1.0 / p);
}

/// Uniform random values with real and imaginary parts in [-1, 1].
inline GridFunction random_grid_function(const CellSpaceRef& s, std::mt19937_64& rng, bool complex_values = true) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::VectorXcd v(static_cast<Eigen::Index>(s->size()));
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        const double re = u(rng);
        v(k) = Complex(re, complex_values ? u(rng) : 0.0);
    }
    return {s, std::move(v)};
}

/// A scalar function on K, given either pointwise or cell-wise (by word).
/// Cell-wise functions are constant on cells at every depth at least as long
/// as the words they inspect.
class ScalarFunction {
public:
    using PointFn = std::function<Complex(const Point&)>;
    using WordFn = std::function<Complex(const Word&)>;

    static ScalarFunction pointwise(PointFn f, std::string name = "custom") {
        ScalarFunction s;
        s.point_ = std::move(f);
        s.name_ = std::move(name);
        return s;
    }

    static ScalarFunction cellwise(WordFn f, std::string name = "custom") {
        ScalarFunction s;
        s.word_ = std::move(f);
        s.name_ = std::move(name);
        return s;
    }

    static ScalarFunction constant(Complex c) {
        return cellwise([c](const Word&) { return c; }, "constant");
    }

    /// Indicator of the cylinder [prefix].
    static ScalarFunction cylinder_indicator(Word prefix) {
        std::string label = "indicator:";
        for (int s : prefix) label += std::to_string(s);
        return cellwise(
            [prefix](const Word& w) {
                for (std::size_t k = 0; k < prefix.size(); ++k) {
                    if (symbol_at(w, k) != prefix[k]) return Complex(0.0);
                }
                return Complex(1.0);
            },
            label);
    }

    bool cell_constant() const { return static_cast<bool>(word_); }
    const std::string& name() const { return name_; }

    Complex at(const CellSpace& space, std::size_t cell) const {
        if (word_) return word_(space.word(cell));
        return point_(space.representative(cell));
    }

    /// x -> (1/n) sum_i a(gamma_i x), evaluated with exact map applications.
    ScalarFunction averaged(std::shared_ptr<const IFSystem> sys) const {
        ScalarFunction out;
        out.name_ = "L(" + name_ + ")";
        if (word_) {
            auto f = word_;
            const std::size_t n = sys->size();
            out.word_ = [f, n](const Word& w) {
                Complex s = 0.0;
                Word iw(w.size() + 1);
                std::copy(w.begin(), w.end(), iw.begin() + 1);
                for (std::size_t i = 1; i <= n; ++i) {
                    iw[0] = static_cast<int>(i);
                    s += f(iw);
                }
                return s / static_cast<double>(n);
            };
        } else {
            auto f = point_;
            out.point_ = [f, sys](const Point& x) {
                Complex s = 0.0;
                for (const auto& m : sys->maps()) s += f(m(x));
                return s / static_cast<double>(sys->size());
            };
        }
        return out;
    }

private:
    PointFn point_;
    WordFn word_;
    std::string name_;
};

/// Value at cell w is a(representative(w)) (or a(w) for cell-wise functions).
inline GridFunction discretize(const ScalarFunction& a, const CellSpaceRef& space) {
    Eigen::VectorXcd v(static_cast<Eigen::Index>(space->size()));
    for (std::size_t k = 0; k < space->size(); ++k) v(static_cast<Eigen::Index>(k)) = a.at(*space, k);
    return {space, std::move(v)};
}

inline GridFunction discretize(const ScalarFunction::PointFn& a, const CellSpaceRef& space) {
    return discretize(ScalarFunction::pointwise(a), space);
}

}  // namespace hlab
