#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "support.hpp"

using namespace hlab;
using hlab::testing::Gen;

namespace {

AtomicMeasure atoms_1d(std::vector<std::pair<double, double>> xw) {
    AtomicMeasure mu;
    for (auto [x, w] : xw) mu.atoms.push_back({Point::scalar(x), w});
    return mu;
}

// Moments of the self-similar measure of x -> r x + b_i with weights p_i from
// m_k = sum_i p_i sum_j C(k, j) r^j m_j b_i^(k-j), solved for m_k.
std::vector<double> moment_oracle(double r, const std::vector<double>& offsets, const std::vector<double>& p, int kmax) {
    std::vector<double> m{1.0};
    for (int k = 1; k <= kmax; ++k) {
        double rhs = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            double binom = 1.0;
            for (int j = 0; j < k; ++j) {
                rhs += p[i] * binom * std::pow(r, j) * m[static_cast<std::size_t>(j)] * std::pow(offsets[i], k - j);
                binom = binom * (k - j) / (j + 1);
            }
        }
        m.push_back(rhs / (1.0 - std::pow(r, k)));
    }
    return m;
}

// W1 on the line by midpoint integration of |F - G| on a fine grid.
double w1_by_grid(const AtomicMeasure& mu, const AtomicMeasure& nu, double lo, double hi, int steps) {
    auto cdf = [](const AtomicMeasure& m, double x) {
        double s = 0.0;
        for (const auto& a : m.atoms) {
            if (a.point.x() <= x) s += a.weight;
        }
        return s;
    };
    const double h = (hi - lo) / steps;
    double total = 0.0;
    for (int k = 0; k < steps; ++k) {
        const double x = lo + (k + 0.5) * h;
        total += std::abs(cdf(mu, x) - cdf(nu, x)) * h;
    }
    return total;
}

double mean(const AtomicMeasure& mu) {
    return integrate(mu, [](const Point& p) { return std::complex<double>(p.x()); }).real();
}

}  // namespace

// --- construction -----------------------------------------------------------

TEST(SelfSimilarMeasure, CantorDepthTwo) {
    const auto mu = self_similar_measure(make_cantor(), 2, Point::scalar(0.0));
    ASSERT_EQ(mu.atoms.size(), 4u);
    const double expect[] = {0.0, 2.0 / 9.0, 2.0 / 3.0, 8.0 / 9.0};
    for (int k = 0; k < 4; ++k) {
        EXPECT_NEAR(mu.atoms[k].point.x(), expect[k], 1e-15);
        EXPECT_DOUBLE_EQ(mu.atoms[k].weight, 0.25);
    }
}

TEST(SelfSimilarMeasure, DepthZeroIsUnitAtomAtSeed) {
    for (const auto& sys : hlab::testing::builtins()) {
        const auto mu = self_similar_measure(sys, 0);
        ASSERT_EQ(mu.atoms.size(), 1u);
        EXPECT_EQ(mu.atoms[0].point, sys.default_seed());
        EXPECT_DOUBLE_EQ(mu.atoms[0].weight, 1.0);
    }
}

TEST(SelfSimilarMeasure, TentMeanApproachesOneHalf) {
    for (std::size_t n = 1; n <= 14; ++n) {
        EXPECT_NEAR(mean(self_similar_measure(make_tent(), n)), 0.5, std::ldexp(1.0, -static_cast<int>(n))) << n;
    }
}

TEST(SelfSimilarMeasure, MassIsConserved) {
    for (const auto& sys : hlab::testing::builtins()) {
        for (std::size_t n = 0; n <= 9; ++n) EXPECT_NEAR(self_similar_measure(sys, n).total_mass(), 1.0, 1e-12) << sys.name();
    }
}

TEST(SelfSimilarMeasure, ProductWeightsWithoutCoincidences) {
    const IFSystem s = make_shift(2).with_weights({0.3, 0.7});
    const auto mu = self_similar_measure(s, 6);
    ASSERT_EQ(mu.atoms.size(), 64u);
    for (const auto& a : mu.atoms) {
        const Word& w = a.point.word();
        double p = 1.0;
        for (int sym : w) p *= sym == 1 ? 0.3 : 0.7;
        EXPECT_NEAR(a.weight, p, 1e-15);
    }
}

TEST(SelfSimilarMeasure, ShiftHasUniformAtoms) {
    const auto mu = self_similar_measure(make_shift(2), 4);
    ASSERT_EQ(mu.atoms.size(), 16u);
    for (const auto& a : mu.atoms) EXPECT_DOUBLE_EQ(a.weight, 1.0 / 16.0);
}

TEST(SelfSimilarMeasure, CoincidentAtomsMerge) {
    // tent depth 2: words 12 and 22 both land on 1/2.
    const auto mu = self_similar_measure(make_tent(), 2);
    ASSERT_EQ(mu.atoms.size(), 3u);
    EXPECT_DOUBLE_EQ(mu.atoms[1].point.x(), 0.5);
    EXPECT_DOUBLE_EQ(mu.atoms[1].weight, 0.5);
}

TEST(SelfSimilarMeasure, BudgetExceeded) { EXPECT_THROW(self_similar_measure(make_shift(3), 30), ResourceError); }

TEST(SelfSimilarMeasure, WeightedCantorMeanMatchesOracle) {
    const IFSystem s = make_cantor().with_weights({1.0 / 3.0, 2.0 / 3.0});
    const auto oracle = moment_oracle(1.0 / 3.0, {0.0, 2.0 / 3.0}, {1.0 / 3.0, 2.0 / 3.0}, 1);
    EXPECT_NEAR(oracle[1], 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(mean(self_similar_measure(s, 14)), oracle[1], 1e-6);
}

// --- pushforward / Markov image ----------------------------------------------

TEST(Pushforward, DeltaZero) {
    const auto out = pushforward(atoms_1d({{0.0, 1.0}}), ContractionMap::scalar(1.0 / 3.0, 2.0 / 3.0));
    ASSERT_EQ(out.atoms.size(), 1u);
    EXPECT_DOUBLE_EQ(out.atoms[0].point.x(), 2.0 / 3.0);
}

TEST(Pushforward, UniformPair) {
    const auto out = pushforward(atoms_1d({{0.0, 0.5}, {1.0, 0.5}}), ContractionMap::scalar(0.5, 0.0));
    ASSERT_EQ(out.atoms.size(), 2u);
    EXPECT_DOUBLE_EQ(out.atoms[0].point.x(), 0.0);
    EXPECT_DOUBLE_EQ(out.atoms[1].point.x(), 0.5);
}

TEST(Pushforward, PreservesMass) {
    const IFSystem t = make_tent();
    EXPECT_NEAR(pushforward(self_similar_measure(t, 10), t.map(0)).total_mass(), 1.0, 1e-12);
}

TEST(MarkovImage, OfDepthNIsDepthNPlusOne) {
    for (const auto& sys : hlab::testing::builtins()) {
        const auto a = markov_image(sys, self_similar_measure(sys, 5));
        const auto b = self_similar_measure(sys, 6);
        EXPECT_LE(weak_distance(a, b, WeakTestFamily::for_system(sys)), 1e-14) << sys.name();
    }
}

// --- weak distance -----------------------------------------------------------

TEST(WeakDistance, IdenticalIsZero) {
    for (const auto& sys : hlab::testing::builtins()) {
        const auto mu = self_similar_measure(sys, 4);
        EXPECT_EQ(weak_distance(mu, mu), 0.0) << sys.name();
    }
}

TEST(WeakDistance, PointMasses) { EXPECT_DOUBLE_EQ(weak_distance(atoms_1d({{0.0, 1.0}}), atoms_1d({{1.0, 1.0}})), 1.0); }

TEST(WeakDistance, TentToLebesgue) {
    EXPECT_LE(wasserstein1_to_lebesgue(self_similar_measure(make_tent(), 12)), std::ldexp(1.0, -12));
}

TEST(WeakDistance, LebesgueClosedFormOnSimpleCases) {
    // delta_{1/2}: integral |F - x| = 2 * (1/2)^2 / 2 = 1/4.
    EXPECT_NEAR(wasserstein1_to_lebesgue(atoms_1d({{0.5, 1.0}})), 0.25, 1e-15);
    // delta_0: integral (1 - x) = 1/2.
    EXPECT_NEAR(wasserstein1_to_lebesgue(atoms_1d({{0.0, 1.0}})), 0.5, 1e-15);
}

TEST(WeakDistance, OneDimensionalMatchesGridIntegration) {
    Gen gen(3);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::pair<double, double>> a, b;
        const int na = gen.integer(1, 6), nb = gen.integer(1, 6);
        for (int k = 0; k < na; ++k) a.emplace_back(gen.uniform(0.0, 1.0), 1.0 / na);
        for (int k = 0; k < nb; ++k) b.emplace_back(gen.uniform(0.0, 1.0), 1.0 / nb);
        const auto mu = atoms_1d(a), nu = atoms_1d(b);
        EXPECT_NEAR(weak_distance(mu, nu), w1_by_grid(mu, nu, 0.0, 1.0, 200000), 1e-4);
        EXPECT_DOUBLE_EQ(weak_distance(mu, nu), weak_distance(nu, mu));
    }
}

TEST(WeakDistance, TriangleInequalityInTestFamily) {
    Gen gen(4);
    const IFSystem s = make_sierpinski();
    const WeakTestFamily fam = WeakTestFamily::for_system(s);
    auto random_measure = [&] {
        AtomicMeasure mu;
        for (int k = 0; k < 10; ++k) mu.atoms.push_back({gen.ambient(s), 0.1});
        return mu;
    };
    for (int trial = 0; trial < 20; ++trial) {
        const auto a = random_measure(), b = random_measure(), c = random_measure();
        EXPECT_LE(weak_distance(a, c, fam), weak_distance(a, b, fam) + weak_distance(b, c, fam) + 1e-15);
        EXPECT_DOUBLE_EQ(weak_distance(a, b, fam), weak_distance(b, a, fam));
    }
}

TEST(WeakDistance, SymbolicPrefixGroupingMatchesDirectSum) {
    Gen gen(5);
    const WeakTestFamily fam = WeakTestFamily::sequence(3);
    AtomicMeasure mu;
    for (int k = 0; k < 50; ++k) mu.atoms.push_back({Point(gen.word(3, static_cast<std::size_t>(gen.integer(0, 12)))), 0.02});
    const auto fast = fam.integrals(mu);
    // Family words are all words of length 5 over 3 letters, lexicographic.
    for (std::size_t k = 0; k < fam.size(); ++k) {
        Word c(5);
        std::size_t r = k;
        for (std::size_t i = 5; i-- > 0;) {
            c[i] = static_cast<int>(r % 3) + 1;
            r /= 3;
        }
        double direct = 0.0;
        for (const auto& a : mu.atoms) direct += a.weight * sequence_distance(a.point.word(), c);
        EXPECT_NEAR(fast[k], direct, 1e-14);
    }
}

TEST(WeakDistance, MismatchedSpacesAreInputError) {
    AtomicMeasure word;
    word.atoms.push_back({Point(Word{1}), 1.0});
    EXPECT_THROW(weak_distance(atoms_1d({{0.0, 1.0}}), word), InputError);
    EXPECT_THROW(weak_distance(atoms_1d({{0.0, 1.0}}), AtomicMeasure{}), InputError);
}

TEST(WeakDistance, CauchyAcrossDepths) {
    for (const auto& sys : {make_tent(), make_cantor(), make_shift(2), make_sierpinski()}) {
        const WeakTestFamily fam = WeakTestFamily::for_system(sys);
        double previous = INFINITY;
        for (std::size_t n = 1; n <= 8; ++n) {
            const double d = weak_distance(self_similar_measure(sys, n), self_similar_measure(sys, n + 1), fam);
            EXPECT_LE(d, std::pow(sys.contraction_upper(), static_cast<double>(n)) * sys.diameter() + 1e-15) << sys.name();
            EXPECT_LE(d, previous) << sys.name();
            previous = d;
        }
    }
}

// --- invariance ----------------------------------------------------------------

TEST(Invariance, TentDepthTen) {
    EXPECT_LE(invariance_defect(make_tent(), self_similar_measure(make_tent(), 10)), std::ldexp(1.0, -10));
}

TEST(Invariance, BoundedByCellWidth) {
    for (const auto& sys : hlab::testing::builtins()) {
        for (std::size_t n = 1; n <= 8; ++n) {
            const double width = std::pow(sys.contraction_upper(), static_cast<double>(n)) * sys.diameter();
            EXPECT_LE(invariance_defect(sys, self_similar_measure(sys, n)), width) << sys.name() << " " << n;
        }
    }
}

TEST(Invariance, DecaysGeometricallyWithRatioC2) {
    for (const auto& sys : {make_tent(), make_cantor(), make_shift(2)}) {
        for (std::size_t n = 2; n <= 10; ++n) {
            const double ratio = invariance_defect(sys, self_similar_measure(sys, n + 1)) / invariance_defect(sys, self_similar_measure(sys, n));
            EXPECT_NEAR(ratio, sys.contraction_upper(), 0.05) << sys.name() << " " << n;
        }
    }
}

TEST(Invariance, NonInvariantInputIsDetected) {
    const IFSystem c = make_cantor();
    const auto mu = atoms_1d({{0.1, 0.5}, {0.9, 0.5}});
    const double d = invariance_defect(c, mu);
    EXPECT_GT(d, 0.1);
    EXPECT_NEAR(d, w1_by_grid(mu, markov_image(c, mu), 0.0, 1.0, 200000), 1e-4);
}

TEST(Invariance, WrongSpaceIsInputError) {
    AtomicMeasure word;
    word.atoms.push_back({Point(Word{1}), 1.0});
    EXPECT_THROW(invariance_defect(make_tent(), word), InputError);
}

// --- overlap --------------------------------------------------------------------

TEST(Overlap, TentOnlyNearOneHalf) {
    EXPECT_LE(overlap_mass(make_tent(), 10, 1, 2, std::ldexp(1.0, -12)), 2.0 * std::ldexp(1.0, -10));
}

TEST(Overlap, CantorIsZero) {
    for (double tol : {1e-9, 0.1, 0.3}) EXPECT_EQ(overlap_mass(make_cantor(), 10, 1, 2, tol), 0.0);
}

TEST(Overlap, DuplicatedMapsOverlapCompletely) {
    const IFSystem dup({ContractionMap::scalar(0.5, 0.0), ContractionMap::scalar(0.5, 0.0)}, {}, "dup");
    EXPECT_NEAR(overlap_mass(dup, 8, 1, 2, 1e-12), 1.0, 1e-12);
}

TEST(Overlap, SameBranchIsInputError) { EXPECT_THROW(overlap_mass(make_tent(), 4, 1, 1, 0.1), InputError); }

// --- integrate ------------------------------------------------------------------

TEST(Integrate, Normalisation) {
    for (const auto& sys : hlab::testing::builtins()) {
        EXPECT_NEAR(integrate(self_similar_measure(sys, 6), [](const Point&) { return std::complex<double>(1.0); }).real(), 1.0, 1e-12);
    }
}

TEST(Integrate, CantorMoments) {
    const auto oracle = moment_oracle(1.0 / 3.0, {0.0, 2.0 / 3.0}, {0.5, 0.5}, 2);
    EXPECT_NEAR(oracle[1], 0.5, 1e-15);
    EXPECT_NEAR(oracle[2], 0.375, 1e-15);
    const auto mu = self_similar_measure(make_cantor(), 20);
    EXPECT_NEAR(mean(mu), oracle[1], 1e-6);
    EXPECT_NEAR(integrate(mu, [](const Point& p) { return std::complex<double>(p.x() * p.x()); }).real(), oracle[2], 1e-6);
}

// --- io ---------------------------------------------------------------------------

TEST(MeasureIO, CsvRoundTrip) {
    for (const auto& sys : {make_tent(), make_shift(3), make_sierpinski()}) {
        const auto mu = self_similar_measure(sys, 3);
        std::stringstream csv;
        write_measure_csv(csv, mu);
        const auto side = measure_sidecar(mu, sys.name());
        EXPECT_EQ(side.at("system"), sys.name());
        EXPECT_EQ(side.at("depth"), 3);
        EXPECT_EQ(side.at("kind"), "deterministic");
        const auto back = read_measure_csv(csv, side);
        ASSERT_EQ(back.atoms.size(), mu.atoms.size());
        for (std::size_t k = 0; k < mu.atoms.size(); ++k) {
            EXPECT_EQ(back.atoms[k].point, mu.atoms[k].point);
            EXPECT_EQ(back.atoms[k].weight, mu.atoms[k].weight);
        }
    }
}

TEST(MeasureIO, MalformedCsv) {
    const nlohmann::json side{{"system", "tent"}, {"depth", 1}, {"kind", "deterministic"}};
    std::stringstream bad("x,mass\n0,1\n");
    EXPECT_THROW(read_measure_csv(bad, side), InputError);
    std::stringstream short_row("x,weight\n0\n");
    EXPECT_THROW(read_measure_csv(short_row, side), InputError);
    std::stringstream ok("x,weight\n0,1\n");
    EXPECT_THROW(read_measure_csv(ok, nlohmann::json{{"depth", 1}, {"kind", "odd"}}), InputError);
}

TEST(MeasureIO, CdfEndsAtOne) {
    std::stringstream os;
    write_cdf_csv(os, self_similar_measure(make_cantor(), 6));
    std::string line, last;
    std::getline(os, line);
    EXPECT_EQ(line, "x,cdf");
    double prev = 0.0;
    while (std::getline(os, line)) {
        const double f = std::stod(line.substr(line.find(',') + 1));
        EXPECT_GE(f, prev);
        prev = f;
    }
    EXPECT_NEAR(prev, 1.0, 1e-12);
    EXPECT_THROW(write_cdf_csv(os, self_similar_measure(make_shift(2), 2)), UnsupportedError);
}

TEST(EmpiricalMeasure, ChaosGameApproachesDeterministic) {
    const IFSystem t = make_tent();
    const auto emp = empirical_measure(attractor_chaos_game(t, 20000, 50, 8));
    EXPECT_NEAR(emp.total_mass(), 1.0, 1e-12);
    EXPECT_LT(wasserstein1_to_lebesgue(emp), 0.02);
}
