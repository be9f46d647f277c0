#pragma once

#include <cstdint>
#include <future>
#include <optional>
#include <random>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "ifs.hpp"
#include "nearest.hpp"
#include "point.hpp"

namespace hlab {

/// Symbolic chaos-game orbits keep at most this many leading symbols
/// (the dropped tail weighs less than 2^-48 in the sequence metric).
inline constexpr std::size_t kMaxOrbitWordLength = 48;

struct DeterministicProvenance {
    std::size_t depth = 0;
    Point seed;
};

struct ChaosGameProvenance {
    std::size_t samples = 0;
    std::size_t burn_in = 0;
    std::uint64_t rng_seed = 0;
};

/// Finite approximation of an attractor.
struct PointCloud {
    std::vector<Point> points;
    std::variant<DeterministicProvenance, ChaosGameProvenance> provenance;

    std::size_t size() const noexcept { return points.size(); }
};

namespace detail {

/// Level-by-level word images: level k holds gamma_w(seed) for all words of
/// length k in lexicographic order, so entry i*n^(k-1) + r is gamma_i applied
/// to entry r of level k-1 (gamma_w = gamma_{w1} o ... o gamma_{wk}).
inline std::vector<Point> word_images(const IFSystem& sys, std::size_t depth, const Point& seed, std::size_t budget) {
    const std::size_t n = sys.size();
    checked_word_count(n, depth, budget);
    std::vector<Point> level{seed};
    for (std::size_t k = 0; k < depth; ++k) {
        std::vector<Point> next;
        next.reserve(level.size() * n);
        for (std::size_t i = 0; i < n; ++i) {
            for (const auto& p : level) next.push_back(sys.map(i)(p));
        }
        level = std::move(next);
    }
    return level;
}

}  // namespace detail

/// {gamma_w(seed) : |w| = depth}, words in lexicographic order.
inline PointCloud attractor_deterministic(const IFSystem& sys, std::size_t depth, std::optional<Point> seed = std::nullopt,
                                          std::size_t budget = cell_budget()) {
    Point s = seed ? std::move(*seed) : sys.default_seed();
    if (!sys.same_space(s)) throw InputError("seed point is not in the system's ambient space");
    auto points = detail::word_images(sys, depth, s, budget);
    return {std::move(points), DeterministicProvenance{depth, std::move(s)}};
}

/// Random orbit x_{k+1} = gamma_{I_k}(x_k) with I_k ~ weights, started at the
/// default seed. The sample budget is split over `shards` independently
/// seeded generators; each shard discards its own burn-in. The result depends
/// only on (samples, burn_in, rng_seed, shards).
inline PointCloud attractor_chaos_game(const IFSystem& sys, std::size_t samples, std::size_t burn_in, std::uint64_t rng_seed,
                                       std::size_t shards = 4) {
    if (samples < 1) throw InputError("chaos game needs at least one sample");
    shards = std::max<std::size_t>(1, std::min(shards, samples));
    const Point start = sys.default_seed();

    auto run_shard = [&](std::size_t shard, std::size_t count) {
        std::seed_seq seq{static_cast<std::uint32_t>(rng_seed), static_cast<std::uint32_t>(rng_seed >> 32),
                          static_cast<std::uint32_t>(shard)};
        std::mt19937_64 rng(seq);
        std::discrete_distribution<std::size_t> pick(sys.weights().begin(), sys.weights().end());
        std::vector<Point> out;
        out.reserve(count);
        Point x = start;
        for (std::size_t k = 0; k < burn_in + count; ++k) {
            x = sys.map(pick(rng))(x);
            if (x.symbolic() && x.word().size() > kMaxOrbitWordLength) x = Point(resized_word(x.word(), kMaxOrbitWordLength));
            if (k >= burn_in) out.push_back(x);
        }
        return out;
    };

    std::vector<std::future<std::vector<Point>>> parts;
    for (std::size_t s = 0; s < shards; ++s) {
        const std::size_t count = samples / shards + (s < samples % shards ? 1 : 0);
        parts.push_back(std::async(std::launch::async, run_shard, s, count));
    }
    PointCloud cloud{{}, ChaosGameProvenance{samples, burn_in, rng_seed}};
    cloud.points.reserve(samples);
    for (auto& f : parts) {
        auto pts = f.get();
        cloud.points.insert(cloud.points.end(), std::make_move_iterator(pts.begin()), std::make_move_iterator(pts.end()));
    }
    return cloud;
}

/// max(sup_a d(a, B), sup_b d(b, A)).
inline double hausdorff_distance(const std::vector<Point>& a, const std::vector<Point>& b) {
    if (a.empty() || b.empty()) throw InputError("Hausdorff distance of an empty cloud");
    if (a.front().symbolic() != b.front().symbolic()) throw InputError("clouds live in different spaces");
    auto directed = [](const std::vector<Point>& from, const std::vector<Point>& to) {
        const NearestIndex index(to);
        double d = 0.0;
        for (const auto& p : from) d = std::max(d, index.distance_to(p));
        return d;
    };
    return std::max(directed(a, b), directed(b, a));
}

inline double hausdorff_distance(const PointCloud& a, const PointCloud& b) {
    return hausdorff_distance(a.points, b.points);
}

/// Hausdorff distance between the depth-N cloud and the union of its images
/// under the gamma_i. Symbolic words are compared truncated to N symbols.
inline double self_similarity_defect(const IFSystem& sys, std::size_t depth, std::size_t budget = cell_budget()) {
    if (depth < 1) throw InputError("self-similarity defect needs depth >= 1");
    checked_word_count(sys.size(), depth + 1, budget);
    const PointCloud cloud = attractor_deterministic(sys, depth, std::nullopt, budget);
    std::vector<Point> images;
    images.reserve(cloud.size() * sys.size());
    for (const auto& m : sys.maps()) {
        for (const auto& p : cloud.points) images.push_back(m(p));
    }
    if (!sys.symbolic()) return hausdorff_distance(cloud.points, images);
    auto truncate = [depth](std::vector<Point> pts) {
        for (auto& p : pts) p = Point(resized_word(p.word(), depth));
        return pts;
    };
    return hausdorff_distance(truncate(cloud.points), truncate(std::move(images)));
}

}  // namespace hlab
