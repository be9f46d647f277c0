#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "point.hpp"

namespace hlab {

/// Exact nearest-neighbour distance queries against a fixed point set.
///
/// 1-D: sorted coordinates with binary search. d >= 2: k-d tree.
/// Symbolic: the set's words are padded to a common length L and sorted;
/// a query descends greedily, since a mismatch at position k costs 2^-k,
/// more than all later positions up to L together.
class NearestIndex {
public:
    explicit NearestIndex(const std::vector<Point>& points) {
        if (points.empty()) throw InputError("nearest-neighbour index over an empty set");
        symbolic_ = points.front().symbolic();
        if (symbolic_) {
            for (const auto& p : points) length_ = std::max(length_, p.word().size());
            words_.reserve(points.size());
            for (const auto& p : points) words_.push_back(resized_word(p.word(), length_));
            std::sort(words_.begin(), words_.end());
            words_.erase(std::unique(words_.begin(), words_.end()), words_.end());
            return;
        }
        dim_ = static_cast<std::size_t>(points.front().coords().size());
        coords_.resize(points.size() * dim_);
        for (std::size_t i = 0; i < points.size(); ++i) {
            const auto& c = points[i].coords();
            if (static_cast<std::size_t>(c.size()) != dim_) throw InputError("mixed dimensions in point set");
            for (std::size_t k = 0; k < dim_; ++k) coords_[i * dim_ + k] = c(k);
        }
        if (dim_ == 1) {
            std::sort(coords_.begin(), coords_.end());
        } else {
            order_.resize(points.size());
            std::iota(order_.begin(), order_.end(), 0);
            build(0, order_.size(), 0);
        }
    }

    double distance_to(const Point& q) const {
        if (q.symbolic() != symbolic_) throw InputError("query point is in a different space");
        if (symbolic_) return word_distance(q.word());
        const auto& c = q.coords();
        if (static_cast<std::size_t>(c.size()) != dim_) throw InputError("query dimension mismatch");
        if (dim_ == 1) return line_distance(c(0));
        double best = std::numeric_limits<double>::infinity();
        search(0, order_.size(), 0, c, best);
        return std::sqrt(best);
    }

private:
    double line_distance(double x) const {
        auto it = std::lower_bound(coords_.begin(), coords_.end(), x);
        double best = std::numeric_limits<double>::infinity();
        if (it != coords_.end()) best = *it - x;
        if (it != coords_.begin()) best = std::min(best, x - *std::prev(it));
        return best;
    }

    double coord(std::size_t point, std::size_t axis) const { return coords_[point * dim_ + axis]; }

    // Median split on order_[lo, hi); the median sits at mid.
    void build(std::size_t lo, std::size_t hi, std::size_t axis) {
        if (hi - lo <= 1) return;
        const std::size_t mid = lo + (hi - lo) / 2;
        std::nth_element(order_.begin() + lo, order_.begin() + mid, order_.begin() + hi,
                         [&](std::size_t a, std::size_t b) { return coord(a, axis) < coord(b, axis); });
        build(lo, mid, (axis + 1) % dim_);
        build(mid + 1, hi, (axis + 1) % dim_);
    }

    void search(std::size_t lo, std::size_t hi, std::size_t axis, const Eigen::VectorXd& q, double& best) const {
        if (lo >= hi) return;
        const std::size_t mid = lo + (hi - lo) / 2;
        const std::size_t p = order_[mid];
        double d2 = 0.0;
        for (std::size_t k = 0; k < dim_; ++k) {
            const double t = coord(p, k) - q(k);
            d2 += t * t;
        }
        best = std::min(best, d2);
        const double delta = q(axis) - coord(p, axis);
        const std::size_t next = (axis + 1) % dim_;
        if (delta < 0) {
            search(lo, mid, next, q, best);
            if (delta * delta < best) search(mid + 1, hi, next, q, best);
        } else {
            search(mid + 1, hi, next, q, best);
            if (delta * delta < best) search(lo, mid, next, q, best);
        }
    }

    double word_distance(const Word& q) const {
        double tail = 0.0;
        double scale = std::ldexp(1.0, -static_cast<int>(length_) - 1);
        for (std::size_t k = length_; k < q.size(); ++k, scale *= 0.5) {
            if (q[k] != 1) tail += scale;
        }
        return descend(0, words_.size(), 0, q) + tail;
    }

    // words_[lo, hi) share their first k symbols.
    double descend(std::size_t lo, std::size_t hi, std::size_t k, const Word& q) const {
        if (k == length_) return 0.0;
        const int target = symbol_at(q, k);
        auto cmp_lo = [k](const Word& w, int s) { return w[k] < s; };
        auto cmp_hi = [k](int s, const Word& w) { return s < w[k]; };
        const auto first = words_.begin() + static_cast<std::ptrdiff_t>(lo);
        const auto last = words_.begin() + static_cast<std::ptrdiff_t>(hi);
        const auto a = std::lower_bound(first, last, target, cmp_lo);
        const auto b = std::upper_bound(a, last, target, cmp_hi);
        if (a != b) {
            return descend(static_cast<std::size_t>(a - words_.begin()), static_cast<std::size_t>(b - words_.begin()), k + 1, q);
        }
        double best = std::numeric_limits<double>::infinity();
        for (auto g = first; g != last;) {
            const int s = (*g)[k];
            const auto g_end = std::upper_bound(g, last, s, cmp_hi);
            best = std::min(best, descend(static_cast<std::size_t>(g - words_.begin()),
                                          static_cast<std::size_t>(g_end - words_.begin()), k + 1, q));
            g = g_end;
        }
        return std::ldexp(1.0, -static_cast<int>(k) - 1) + best;
    }

    bool symbolic_ = false;
    std::size_t dim_ = 0;
    std::vector<double> coords_;
    std::vector<std::size_t> order_;
    std::size_t length_ = 0;
    std::vector<Word> words_;
};

}  // namespace hlab
