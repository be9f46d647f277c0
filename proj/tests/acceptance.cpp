// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "hlab/cli.hpp"

using namespace hlab;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = true;
    std::string detail;

    // Records a sub-check; the first failure is kept as the detail line.
    void require(bool ok, const std::string& what) {
        if (!ok && pass) detail = what;
        pass = pass && ok;
    }
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

std::vector<IFSystem> operator_systems() { return {make_tent(), make_shift(2), make_shift(3)}; }

Verdict isometry() {
    Verdict v;
    double worst = 0.0;
    for (const auto& sys : operator_systems()) {
        for (std::size_t n = 4; n <= 10; ++n) {
            for (double p : {1.0, 2.0}) {
                const double d = isometry_defect(sys, n, p, 100, 1000 + n);
                worst = std::max(worst, d);
                v.require(d <= 1e-12, sys.name() + " N=" + std::to_string(n) + " p=" + fmt(p) + " defect " + fmt(d));
            }
        }
    }
    if (v.pass) v.detail = "max | ||Cf||_p - ||f||_p | = " + fmt(worst);
    return v;
}

Verdict adjoint() {
    Verdict v;
    double worst = 0.0;
    for (const auto& sys : operator_systems()) {
        const auto top = cell_space(sys, 10);
        for (auto s = top; s->depth() >= 4; s = coarser(s)) {
            const double d = adjoint_defect(s);
            worst = std::max(worst, d);
            v.require(d <= 1e-12, sys.name() + " N=" + std::to_string(s->depth()) + " defect " + fmt(d));
        }
    }
    if (v.pass) v.detail = "max ||C* - L|| = " + fmt(worst);
    return v;
}

// a depends on the first three symbols of the cell word.
ScalarFunction random_cellwise(std::size_t symbols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    std::vector<Complex> table(symbols * symbols * symbols);
    for (auto& c : table) c = Complex(g(rng), g(rng));
    return ScalarFunction::cellwise([table, symbols](const Word& w) {
        std::size_t k = 0;
        for (std::size_t j = 0; j < 3; ++j) k = k * symbols + static_cast<std::size_t>(symbol_at(w, j) - 1);
        return table[k];
    });
}

Verdict covariance() {
    Verdict v;
    double exact = 0.0;
    for (const auto& sys : operator_systems()) {
        const auto shared = std::make_shared<const IFSystem>(sys);
        for (std::size_t n = 4; n <= 10; n += 2) {
            for (const auto& a : {ScalarFunction::cylinder_indicator({2, 1}), random_cellwise(sys.size(), n)}) {
                const double d = covariance_defect(a, shared, n);
                exact = std::max(exact, d);
                v.require(d <= 1e-12, sys.name() + " N=" + std::to_string(n) + " " + a.name() + " defect " + fmt(d));
            }
        }
    }
    const auto tent = std::make_shared<const IFSystem>(make_tent());
    const auto x = ScalarFunction::pointwise([](const Point& p) { return Complex(p.x()); }, "x");
    std::vector<double> defects;
    std::string seq;
    for (std::size_t n = 6; n <= 10; ++n) {
        defects.push_back(covariance_defect(x, tent, n));
        seq += (seq.empty() ? "" : ", ") + fmt(defects.back());
        v.require(defects.back() <= 2.0 * std::ldexp(1.0, -static_cast<int>(n)),
                  "tent a=x N=" + std::to_string(n) + " defect " + fmt(defects.back()));
    }
    for (std::size_t k = 1; k < defects.size(); ++k) {
        v.require(defects[k] < defects[k - 1], "tent a=x defects within 2*2^-N but not strictly decreasing over N=6..10: [" + seq + "]");
    }
    if (v.pass) v.detail = "cell-constant max " + fmt(exact) + ", tent a=x N=6..10: [" + seq + "]";
    return v;
}

// Moments of the self-similar measure of x -> r x + b_i with weights p_i.
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

Verdict hutchinson() {
    Verdict v;
    for (const auto& sys : {make_tent(), make_cantor(), make_shift(2), make_shift(3), make_sierpinski()}) {
        for (std::size_t n = 1; n <= 12; ++n) {
            const double bound = std::pow(sys.contraction_upper(), static_cast<double>(n)) * sys.diameter();
            const double d = invariance_defect(sys, self_similar_measure(sys, n));
            v.require(d <= bound, sys.name() + " N=" + std::to_string(n) + " invariance " + fmt(d) + " > " + fmt(bound));
        }
    }
    const double w1 = wasserstein1_to_lebesgue(self_similar_measure(make_tent(), 12));
    v.require(w1 <= std::ldexp(1.0, -12), "tent W1 to Lebesgue " + fmt(w1));
    const double oracle = moment_oracle(1.0 / 3.0, {0.0, 2.0 / 3.0}, {0.5, 0.5}, 2)[2];
    const double m2 = cli::moment(self_similar_measure(make_cantor(), 20), 2);
    v.require(std::abs(m2 - 0.375) <= 1e-6 && std::abs(m2 - oracle) <= 1e-6, "cantor second moment " + fmt(m2));
    if (v.pass) v.detail = "tent W1 " + fmt(w1) + ", cantor m2 " + std::to_string(m2) + " (oracle " + std::to_string(oracle) + ")";
    return v;
}

struct NamedBasis {
    std::string label;
    BasisFamily basis;
};

std::vector<NamedBasis> bases() {
    std::vector<NamedBasis> out;
    for (const auto& sys : operator_systems()) {
        for (std::size_t n : {4, 6, 8}) {
            out.push_back({sys.name() + " cylinder N=" + std::to_string(n), cylinder_basis(sys, cell_space(sys, n))});
        }
    }
    const IFSystem tent = make_tent();
    const BranchSetEstimate b = branch_sets(tent);
    for (auto [n, levels] : {std::pair<std::size_t, std::size_t>{8, 6}, {10, 6}, {12, 8}}) {
        out.push_back({"tent partition-of-unity N=" + std::to_string(n) + " levels=" + std::to_string(levels),
                       pou_basis(tent, cell_space(tent, n), b, levels)});
    }
    return out;
}

Verdict frame(const std::vector<NamedBasis>& family) {
    Verdict v;
    double worst = 0.0;
    for (const auto& [label, basis] : family) {
        const DefectReport r = frame_bounds_check(basis, 1e-10);
        worst = std::max(worst, r.defect);
        v.require(r.pass, label + " spectrum leaves [0, 1] by " + fmt(r.defect));
    }
    if (v.pass) v.detail = std::to_string(family.size()) + " bases, max excursion " + fmt(worst);
    return v;
}

Verdict key_identity(const std::vector<NamedBasis>& family) {
    Verdict v;
    double worst = 0.0;
    for (const auto& [label, basis] : family) {
        const OperatorMatrix t = frame_operator(basis);
        std::mt19937_64 rng(basis.space->size());
        for (int trial = 0; trial < 100; ++trial) {
            const GridFunction a = random_grid_function(basis.space, rng);
            const double d = (t.apply(a) - reconstruction(basis, a)).sup_norm();
            worst = std::max(worst, d);
            v.require(d <= 1e-12, label + " trial " + std::to_string(trial) + " defect " + fmt(d));
        }
    }
    if (v.pass) v.detail = "max defect " + fmt(worst) + " over 100 random a per basis";
    return v;
}

Verdict ideal_covariance() {
    Verdict v;
    for (const auto& sys : {make_shift(2), make_shift(3)}) {
        const auto space = cell_space(sys, 6);
        const BasisFamily basis = cylinder_basis(sys, space);
        std::mt19937_64 rng(7);
        const GridFunction a = random_grid_function(space, rng);
        const double d = ideal_covariance_defect(basis, make_ideal_element(a, basis));
        v.require(d <= 1e-12, sys.name() + " cylinder defect " + fmt(d));
    }
    const IFSystem tent = make_tent();
    const BranchSetEstimate b = branch_sets(tent);
    auto clamped = [](const Point& p) { return Complex(std::max(0.0, std::abs(p.x() - 0.5) - std::ldexp(1.0, -9))); };
    auto defect = [&](std::size_t depth, std::size_t levels) {
        const BasisFamily basis = pou_basis(tent, cell_space(tent, depth), b, levels);
        return ideal_covariance_defect(basis, make_ideal_element(discretize(clamped, basis.space), basis));
    };
    const double d10 = defect(10, 6);
    const double d12 = defect(12, 8);
    v.require(d10 <= 0.02, "tent (10, 6) defect " + fmt(d10));
    v.require(d12 < d10, "tent (12, 8) defect " + fmt(d12) + " not below " + fmt(d10));
    if (v.pass) v.detail = "tent clamped |x-1/2|: (10, 6) " + fmt(d10) + ", (12, 8) " + fmt(d12);
    return v;
}

Verdict cuntz() {
    Verdict v;
    for (auto [n, depth] : {std::pair<int, std::size_t>{2, 6}, {3, 4}}) {
        const IFSystem sys = make_shift(n);
        const DefectReport r = cuntz_relations_check(sys, cell_space(sys, depth));
        v.require(r.pass, sys.name() + " defect " + fmt(r.defect));
        if (v.pass) v.detail += (v.detail.empty() ? "" : ", ") + sys.name() + " " + fmt(r.defect);
    }
    return v;
}

Verdict conditions() {
    Verdict v;
    const IFSystem tent = make_tent();
    const DefectReport osc = open_set_condition_check(tent, parse_open_set("0,1", tent), 4000, 0);
    v.require(osc.pass, "tent OSC with V = (0, 1) fails, defect " + fmt(osc.defect));
    const BranchSetEstimate b = branch_sets(tent);
    auto within = [](const std::vector<Point>& pts, double target) {
        if (pts.empty()) return false;
        for (const auto& p : pts) {
            if (std::abs(p.x() - target) > 1e-8) return false;
        }
        return true;
    };
    v.require(within(b.c_points, 1.0), "tent C not within 1e-8 of {1}");
    v.require(within(b.b_points, 0.5), "tent B not within 1e-8 of {0.5}");
    const double tent_overlap = overlap_mass(tent, 10, 1, 2, cli::cell_scale(tent, 10) / 4.0);
    v.require(tent_overlap <= std::ldexp(1.0, -8), "tent overlap mass " + fmt(tent_overlap));
    const IFSystem cantor = make_cantor();
    const double cantor_overlap = overlap_mass(cantor, 10, 1, 2, cli::cell_scale(cantor, 10) / 4.0);
    v.require(cantor_overlap == 0.0, "cantor overlap mass " + fmt(cantor_overlap));
    if (v.pass) v.detail = "OSC defect " + fmt(osc.defect) + ", tent overlap " + fmt(tent_overlap) + ", cantor overlap 0";
    return v;
}

nlohmann::json load_without_timings(const fs::path& p) {
    std::ifstream in(p);
    nlohmann::json doc = nlohmann::json::parse(in);
    for (auto& [check, reports] : doc["sections"].items()) {
        for (auto& r : reports) r.erase("wall_time");
    }
    return doc;
}

Verdict determinism() {
    Verdict v;
    const fs::path dir = fs::temp_directory_path() / ("hlab_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    for (const std::string system : {"tent", "shift:3"}) {
        std::vector<nlohmann::json> docs;
        for (int run = 0; run < 2; ++run) {
            const fs::path file = dir / ("run" + std::to_string(run) + ".json");
            const std::string cmd = "'" + std::string(HLAB_CLI_PATH) + "' report --run-all --system " + system +
                                    " --depth 8 --seed 11 --out '" + file.string() + "' > /dev/null";
            const int status = std::system(cmd.c_str());
            v.require(WIFEXITED(status) && WEXITSTATUS(status) == 0, system + " report exited with status " + std::to_string(status));
            if (fs::exists(file)) docs.push_back(load_without_timings(file));
        }
        v.require(docs.size() == 2 && docs[0] == docs[1], system + " reruns differ");
        if (v.pass) v.detail += (v.detail.empty() ? "" : ", ") + system + " " + std::to_string(docs[0]["report_count"].get<int>()) + " reports identical";
    }
    fs::remove_all(dir);
    return v;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"isometry", isometry},
        {"adjoint", adjoint},
        {"covariance", covariance},
        {"Hutchinson fixed point", hutchinson},
        {"frame bounds", [] { return frame(bases()); }},
        {"key identity", [] { return key_identity(bases()); }},
        {"ideal covariance", ideal_covariance},
        {"Cuntz relations", cuntz},
        {"conditions", conditions},
        {"determinism", determinism},
    };
    int failures = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = criteria[k].second();
        } catch (const std::exception& e) {
            v = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        failures += v.pass ? 0 : 1;
        std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << (k + 1) << " (" << criteria[k].first << "): " << v.detail << " ["
                  << fmt(secs) << " s]" << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
