#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "hlab/hlab.hpp"

namespace hlab::testing {

// Small seeded generator for property tests.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

    Word word(int symbols, std::size_t length) {
        Word w(length);
        for (auto& s : w) s = integer(1, symbols);
        return w;
    }

    // A point of the system's ambient space: a box point, or a random word.
    Point ambient(const IFSystem& sys, std::size_t word_length = 16) {
        if (sys.symbolic()) return Point(word(static_cast<int>(sys.size()), word_length));
        const Box& b = sys.box();
        Eigen::VectorXd x(b.lo.size());
        for (Eigen::Index k = 0; k < x.size(); ++k) x(k) = uniform(b.lo(k), b.hi(k));
        return Point(std::move(x));
    }

    // gamma_w(seed) for a random word: a point on the attractor.
    Point on_attractor(const IFSystem& sys, std::size_t depth = 20) {
        Point x = sys.default_seed();
        for (std::size_t k = 0; k < depth; ++k) x = sys.map(static_cast<std::size_t>(integer(0, static_cast<int>(sys.size()) - 1)))(x);
        return x;
    }

    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

inline std::vector<IFSystem> builtins() {
    return {make_tent(), make_cantor(), make_shift(2), make_shift(3), make_sierpinski()};
}

}  // namespace hlab::testing
