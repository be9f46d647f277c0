#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "attractor.hpp"
#include "bimodule.hpp"
#include "cells.hpp"
#include "conditions.hpp"
#include "errors.hpp"
#include "ifs.hpp"
#include "io.hpp"
#include "measure.hpp"
#include "operators.hpp"
#include "report.hpp"

namespace hlab::cli {

inline constexpr const char* kVersion = "0.1.0";

/// Exit codes: all checks passed, some check failed, bad input, unsupported pairing.
enum ExitCode : int { kPass = 0, kFail = 1, kInputError = 2, kUnsupported = 3 };

struct RunConfig {
    std::string system = "tent";
    std::size_t depth = 8;
    std::uint64_t seed = 0;
    std::map<std::string, double> tolerances;  // per-check overrides
    std::string out = ".";
    std::string format = "csv";
    std::string fn;        // --fn spec, empty for the check's default
    std::string open_set;  // --open-set spec, empty for the default
    std::size_t trials = 100;
    std::size_t levels = 6;
    std::optional<int> moment;
    std::optional<std::size_t> chaos_samples;
};

inline nlohmann::json to_json(const RunConfig& c) {
    nlohmann::json j{{"system", c.system}, {"depth", c.depth},   {"seed", c.seed},     {"tolerances", c.tolerances},
                     {"fn", c.fn},         {"open_set", c.open_set}, {"trials", c.trials}, {"levels", c.levels}};
    return j;
}

inline const std::vector<std::string>& check_names() {
    static const std::vector<std::string> names{"isometry", "adjoint",       "covariance", "frame", "key-identity", "ideal-covariance",
                                                "covariant-rep", "cuntz",    "osc",        "separation", "branch"};
    return names;
}

/// Checks that make sense for a system; `report --run-all` runs these.
inline std::vector<std::string> applicable_checks(const IFSystem& sys) {
    // Geometric ideal covariance needs a partition-of-unity basis: 1-D, finite B.
    const bool pou = sys.symbolic() || (sys.dimension() == 1 && branch_sets(sys).finite);
    std::vector<std::string> out;
    for (const auto& c : check_names()) {
        if (c == "cuntz" && !sys.symbolic()) continue;
        if (c == "ideal-covariance" && !pou) continue;
        out.push_back(c);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Function specs
// ---------------------------------------------------------------------------

namespace detail {

inline Complex json_complex(const nlohmann::json& v) {
    if (v.is_number()) return {v.get<double>(), 0.0};
    if (v.is_array() && v.size() == 2) return {v[0].get<double>(), v[1].get<double>()};
    throw InputError("function value must be a number or [re, im]");
}

// custom:<file>. Either {"depth": N, "values": [...]} giving one value per
// depth-N cell, or {"breakpoints": [[x, y], ...]} for a 1-D piecewise-linear
// function (constant beyond the end points).
inline ScalarFunction custom_function(const std::string& path, const IFSystem& sys) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open function file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
        if (j.contains("values")) {
            const auto depth = j.at("depth").get<std::size_t>();
            std::vector<Complex> values;
            for (const auto& v : j.at("values")) values.push_back(json_complex(v));
            if (values.size() != checked_word_count(sys.size(), depth, cell_budget())) {
                throw InputError("function file needs n^depth values");
            }
            const std::size_t n = sys.size();
            return ScalarFunction::cellwise(
                [values, depth, n](const Word& w) {
                    std::size_t k = 0;
                    for (std::size_t i = 0; i < depth; ++i) k = k * n + static_cast<std::size_t>(symbol_at(w, i) - 1);
                    return values[k];
                },
                "custom:" + path);
        }
        if (j.contains("breakpoints")) {
            if (sys.symbolic() || sys.dimension() != 1) throw InputError("breakpoint functions need a 1-D euclidean system");
            std::vector<std::pair<double, Complex>> pts;
            for (const auto& p : j.at("breakpoints")) pts.emplace_back(p.at(0).get<double>(), json_complex(p.at(1)));
            if (pts.empty()) throw InputError("breakpoint list is empty");
            std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
            return ScalarFunction::pointwise(
                [pts](const Point& p) {
                    const double x = p.x();
                    if (x <= pts.front().first) return pts.front().second;
                    if (x >= pts.back().first) return pts.back().second;
                    const auto it = std::upper_bound(pts.begin(), pts.end(), x, [](double v, const auto& q) { return v < q.first; });
                    const auto& [x1, y1] = *it;
                    const auto& [x0, y0] = *(it - 1);
                    const double t = (x - x0) / (x1 - x0);
                    return (1.0 - t) * y0 + t * y1;
                },
                "custom:" + path);
        }
    } catch (const nlohmann::json::exception& e) {
        throw InputError("malformed function file '" + path + "': " + e.what());
    }
    throw InputError("function file needs 'values' or 'breakpoints'");
}

}  // namespace detail

/// identity | indicator:<word> | lipschitz:<slope> | custom:<file>.
/// identity is the first coordinate; lipschitz:s is s * d(x, seed).
inline ScalarFunction parse_function(const std::string& spec, const IFSystem& sys) {
    if (spec == "identity") {
        if (sys.symbolic()) throw UnsupportedError("the identity function needs a euclidean system");
        return ScalarFunction::pointwise([](const Point& p) { return Complex(p.coords()(0)); }, "identity");
    }
    const auto colon = spec.find(':');
    const std::string kind = spec.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
    if (kind == "indicator") {
        if (arg.empty()) throw InputError("indicator needs a word, e.g. indicator:12");
        Word w = parse_word(arg);
        for (int s : w) {
            if (s < 1 || s > static_cast<int>(sys.size())) throw InputError("indicator word uses a symbol the system lacks");
        }
        return ScalarFunction::cylinder_indicator(std::move(w));
    }
    if (kind == "lipschitz") {
        double slope = 0.0;
        try {
            slope = std::stod(arg);
        } catch (const std::logic_error&) {
            throw InputError("lipschitz needs a slope, e.g. lipschitz:2");
        }
        const Point seed = sys.default_seed();
        return ScalarFunction::pointwise([slope, seed](const Point& p) { return Complex(slope * distance(p, seed)); }, spec);
    }
    if (kind == "custom") return detail::custom_function(arg, sys);
    throw InputError("unknown function '" + spec + "' (identity, indicator:<word>, lipschitz:<slope>, custom:<file>)");
}

// ---------------------------------------------------------------------------
// Tolerances
// ---------------------------------------------------------------------------

inline double cell_scale(const IFSystem& sys, std::size_t depth) {
    return std::pow(sys.contraction_upper(), static_cast<double>(depth)) * sys.diameter();
}

/// Documented defaults; `cell_constant` only matters for covariance.
inline double default_tolerance(const std::string& check, const IFSystem& sys, std::size_t depth, bool cell_constant = true) {
    if (check == "covariance") return cell_constant ? 1e-12 : 2.0 * cell_scale(sys, depth);
    if (check == "frame" || check == "branch") return 1e-10;
    if (check == "ideal-covariance") return sys.symbolic() ? 1e-12 : 0.02;
    if (check == "separation") return 4.0 * cell_scale(sys, depth);
    if (check == "osc") return 0.0;
    return 1e-12;
}

inline double tolerance_for(const RunConfig& cfg, const std::string& check, const IFSystem& sys, bool cell_constant = true) {
    const auto it = cfg.tolerances.find(check);
    return it != cfg.tolerances.end() ? it->second : default_tolerance(check, sys, cfg.depth, cell_constant);
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<BasisFamily> bases_for(const IFSystem& sys, const CellSpaceRef& space, std::size_t levels) {
    std::vector<BasisFamily> out{cylinder_basis(space)};
    if (!sys.symbolic() && sys.dimension() == 1) {
        const BranchSetEstimate b = branch_sets(sys);
        if (b.finite) out.push_back(pou_basis(sys, space, b, levels));
    }
    return out;
}

inline std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), static_cast<std::uint32_t>(salt)};
    std::mt19937_64 rng(seq);
    return rng();
}

inline std::vector<DefectReport> verify_isometry(const RunConfig& cfg, const IFSystem& sys) {
    std::vector<DefectReport> out;
    for (double p : {1.0, 2.0}) {
        out.push_back(timed([&] {
            const double d = isometry_defect(sys, cfg.depth, p, cfg.trials, cfg.seed);
            return DefectReport::make("isometry", sys.name(), cfg.depth, d, tolerance_for(cfg, "isometry", sys),
                                      {{"p", p}, {"trials", cfg.trials}, {"seed", cfg.seed}});
        }));
    }
    return out;
}

inline std::vector<DefectReport> verify_covariance(const RunConfig& cfg, const std::shared_ptr<const IFSystem>& sys) {
    const std::string spec = !cfg.fn.empty() ? cfg.fn : (sys->symbolic() ? "indicator:1" : "identity");
    const ScalarFunction a = parse_function(spec, *sys);
    return {timed([&] {
        const double d = covariance_defect(a, sys, cfg.depth);
        return DefectReport::make("covariance", sys->name(), cfg.depth, d, tolerance_for(cfg, "covariance", *sys, a.cell_constant()),
                                  {{"fn", spec}, {"cell_constant", a.cell_constant()}});
    })};
}

inline std::vector<DefectReport> verify_key_identity(const RunConfig& cfg, const IFSystem& sys, const CellSpaceRef& space) {
    std::vector<DefectReport> out;
    for (const auto& basis : bases_for(sys, space, cfg.levels)) {
        out.push_back(timed([&] {
            const OperatorMatrix t = frame_operator(basis);
            double worst = 0.0;
            for (std::size_t k = 0; k < cfg.trials; ++k) {
                std::mt19937_64 rng(mix(cfg.seed, k));
                const GridFunction a = random_grid_function(space, rng);
                worst = std::max(worst, (t.apply(a) - reconstruction(basis, a)).sup_norm());
            }
            return DefectReport::make("key-identity", sys.name(), cfg.depth, worst, tolerance_for(cfg, "key-identity", sys),
                                      {{"basis", to_string(basis.kind)}, {"size", basis.size()}, {"trials", cfg.trials}, {"seed", cfg.seed}});
        }));
    }
    return out;
}

// Default ideal element: symbolic systems (empty branch set) take a random a;
// geometric ones take max(0, dist(x, B) - 2 cell widths), or 1 if B is empty.
inline std::vector<DefectReport> verify_ideal_covariance(const RunConfig& cfg, const IFSystem& sys, const CellSpaceRef& space) {
    return {timed([&] {
        BasisFamily basis = cylinder_basis(space);
        std::string fn = cfg.fn;
        GridFunction a;
        if (!sys.symbolic()) {
            if (sys.dimension() != 1) throw UnsupportedError("ideal covariance on geometric systems needs a 1-D system");
            const BranchSetEstimate b = branch_sets(sys);
            basis = pou_basis(sys, space, b, cfg.levels);
        }
        if (!fn.empty()) {
            a = discretize(parse_function(fn, sys), space);
        } else if (sys.symbolic()) {
            std::mt19937_64 rng(mix(cfg.seed, 0));
            a = random_grid_function(space, rng);
            fn = "random";
        } else {
            const double clamp = 2.0 * space->cell_width();
            const std::vector<double> bp = basis.b_points;
            a = discretize(
                [bp, clamp](const Point& p) {
                    if (bp.empty()) return Complex(1.0);
                    double r = std::numeric_limits<double>::infinity();
                    for (double b : bp) r = std::min(r, std::abs(p.x() - b));
                    return Complex(std::max(0.0, r - clamp));
                },
                space);
            fn = "clamped-distance";
        }
        const IdealElement e = make_ideal_element(a, basis);
        const double d = ideal_covariance_defect(basis, e);
        return DefectReport::make("ideal-covariance", sys.name(), cfg.depth, d, tolerance_for(cfg, "ideal-covariance", sys),
                                  {{"basis", to_string(basis.kind)}, {"levels", cfg.levels}, {"fn", fn}, {"size", basis.size()}});
    })};
}

inline std::vector<DefectReport> verify_osc(const RunConfig& cfg, const IFSystem& sys) {
    OpenSet v;
    std::string spec = cfg.open_set;
    if (!spec.empty()) {
        v = parse_open_set(spec, sys);
    } else if (sys.symbolic()) {
        v.cylinders.emplace_back();
        spec = "*";
    } else {
        v.boxes.push_back(sys.box());
        std::ostringstream os;
        os.precision(17);
        for (std::size_t a = 0; a < sys.dimension(); ++a) os << (a ? "," : "") << sys.box().lo(a) << ',' << sys.box().hi(a);
        spec = os.str();
    }
    DefectReport r = timed([&] { return open_set_condition_check(sys, v, 4000, cfg.seed); });
    r.depth = cfg.depth;
    r.tolerance = tolerance_for(cfg, "osc", sys);
    r.pass = std::isfinite(r.defect) && r.defect <= r.tolerance;
    r.params["open_set"] = spec;
    return {r};
}

// Largest overlap mass over branch pairs; atoms count as shared when both
// images come within a quarter cell width.
inline std::vector<DefectReport> verify_separation(const RunConfig& cfg, const IFSystem& sys) {
    return {timed([&] {
        const double near = cell_scale(sys, cfg.depth) / 4.0;
        double worst = 0.0;
        nlohmann::json pairs = nlohmann::json::array();
        const auto n = static_cast<int>(sys.size());
        for (int i = 1; i <= n; ++i) {
            for (int j = i + 1; j <= n; ++j) {
                const double m = overlap_mass(sys, cfg.depth, i, j, near);
                worst = std::max(worst, m);
                pairs.push_back({{"i", i}, {"j", j}, {"mass", m}});
            }
        }
        DefectReport r = DefectReport::make("separation", sys.name(), cfg.depth, worst, tolerance_for(cfg, "separation", sys),
                                            {{"overlap_tolerance", near}});
        r.details = {{"pairs", pairs}};
        return r;
    })};
}

// Residual |gamma_i(c) - gamma_j(c)| over detected branch points; a continuum
// of coincidences makes the defect infinite.
inline std::vector<DefectReport> verify_branch(const RunConfig& cfg, const IFSystem& sys) {
    return {timed([&] {
        const BranchSetEstimate b = branch_sets(sys);
        double residual = 0.0;
        for (std::size_t k = 0; k < b.c_points.size(); ++k) {
            const auto [i, j] = b.pairs[k];
            const Point gi = sys.map(static_cast<std::size_t>(i - 1))(b.c_points[k]);
            const Point gj = sys.map(static_cast<std::size_t>(j - 1))(b.c_points[k]);
            residual = std::max(residual, distance(gi, gj));
        }
        const double defect = b.finite ? residual : std::numeric_limits<double>::infinity();
        DefectReport r = DefectReport::make("branch", sys.name(), cfg.depth, defect, tolerance_for(cfg, "branch", sys));
        nlohmann::json c = nlohmann::json::array(), bp = nlohmann::json::array();
        for (const auto& p : b.c_points) c.push_back(to_string(p));
        for (const auto& p : b.b_points) bp.push_back(to_string(p));
        r.details = {{"c_points", c}, {"b_points", bp}, {"pairs", b.pairs}, {"finite", b.finite}};
        return r;
    })};
}

}  // namespace detail

/// One check at one configuration; one report per parameter point.
inline std::vector<DefectReport> run_check(const std::string& check, const RunConfig& cfg) {
    const auto sys = std::make_shared<const IFSystem>(load_system(cfg.system));
    if (std::find(check_names().begin(), check_names().end(), check) == check_names().end()) {
        throw InputError("unknown check '" + check + "'");
    }
    if (check == "isometry") return detail::verify_isometry(cfg, *sys);
    if (check == "osc") return detail::verify_osc(cfg, *sys);
    if (check == "separation") return detail::verify_separation(cfg, *sys);
    if (check == "branch") return detail::verify_branch(cfg, *sys);
    if (check == "covariance") return detail::verify_covariance(cfg, sys);
    if (check == "cuntz") {
        if (!sys->symbolic()) {
            throw UnsupportedError("cuntz is defined for shift systems only; use covariant-rep and frame for '" + sys->name() + "'");
        }
        const CellSpaceRef space = cell_space(sys, cfg.depth);
        return {cuntz_relations_check(*sys, space, tolerance_for(cfg, "cuntz", *sys))};
    }
    const CellSpaceRef space = cell_space(sys, cfg.depth);
    if (check == "adjoint") {
        return {timed([&] {
            return DefectReport::make("adjoint", sys->name(), cfg.depth, adjoint_defect(space), tolerance_for(cfg, "adjoint", *sys));
        })};
    }
    if (check == "frame") {
        std::vector<DefectReport> out;
        for (const auto& basis : detail::bases_for(*sys, space, cfg.levels)) {
            out.push_back(frame_bounds_check(basis, tolerance_for(cfg, "frame", *sys)));
        }
        return out;
    }
    if (check == "key-identity") return detail::verify_key_identity(cfg, *sys, space);
    if (check == "ideal-covariance") return detail::verify_ideal_covariance(cfg, *sys, space);
    // covariant-rep
    return {covariant_rep_check(space, std::min<std::size_t>(cfg.trials, 50), cfg.seed, tolerance_for(cfg, "covariant-rep", *sys))};
}

inline bool all_pass(const std::vector<DefectReport>& reports) {
    return std::all_of(reports.begin(), reports.end(), [](const DefectReport& r) { return r.pass; });
}

// ---------------------------------------------------------------------------
// attractor / measure
// ---------------------------------------------------------------------------

namespace detail {

inline std::filesystem::path prepare_out(const std::string& out) {
    std::filesystem::path dir(out);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (!std::filesystem::is_directory(dir)) throw InputError("output directory '" + out + "' is not writable");
    return dir;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream os(p);
    if (!os) throw InputError("cannot write '" + p.string() + "'");
    return os;
}

}  // namespace detail

/// Writes the point cloud (CSV or JSON) and a density raster in 1-D/2-D.
/// Returns the summary line printed by the tool.
inline nlohmann::json cmd_attractor(const RunConfig& cfg) {
    if (cfg.format != "csv" && cfg.format != "json" && cfg.format != "ppm" && cfg.format != "pgm") {
        throw InputError("attractor --format must be csv, json, ppm or pgm");
    }
    const IFSystem sys = load_system(cfg.system);
    const PointCloud cloud = cfg.chaos_samples ? attractor_chaos_game(sys, *cfg.chaos_samples, 100, cfg.seed)
                                               : attractor_deterministic(sys, cfg.depth);
    const auto dir = detail::prepare_out(cfg.out);
    nlohmann::json files = nlohmann::json::array();
    if (cfg.format == "json") {
        nlohmann::json pts = nlohmann::json::array();
        for (const auto& p : cloud.points) {
            if (p.symbolic()) pts.push_back(to_string(p.word()));
            else pts.push_back(std::vector<double>(p.coords().data(), p.coords().data() + p.coords().size()));
        }
        auto os = detail::open_out(dir / "attractor.json");
        os << nlohmann::json{{"system", sys.name()}, {"points", pts}}.dump() << '\n';
        files.push_back((dir / "attractor.json").string());
    } else {
        auto os = detail::open_out(dir / "attractor.csv");
        write_points_csv(os, cloud.points);
        files.push_back((dir / "attractor.csv").string());
    }
    if (!sys.symbolic() && sys.dimension() <= 2) {
        const std::string ext = cfg.format == "ppm" ? "ppm" : "pgm";
        const Raster r = density_raster(cloud.points, sys.box());
        auto os = detail::open_out(dir / ("attractor." + ext));
        if (ext == "ppm") write_ppm(os, r);
        else write_pgm(os, r);
        files.push_back((dir / ("attractor." + ext)).string());
    }
    nlohmann::json out{{"command", "attractor"}, {"system", sys.name()}, {"points", cloud.size()}, {"files", files}};
    if (cfg.chaos_samples) {
        out["samples"] = *cfg.chaos_samples;
    } else {
        out["depth"] = cfg.depth;
        if (cfg.depth >= 1) out["self_similarity_defect"] = self_similarity_defect(sys, cfg.depth);
    }
    return out;
}

/// k-th moment of a 1-D measure, sum_a w_a x_a^k.
inline double moment(const AtomicMeasure& mu, int k) {
    if (mu.symbolic() || mu.dimension() != 1) throw UnsupportedError("moments are defined for 1-D measures");
    return integrate(mu, [k](const Point& p) { return Complex(std::pow(p.x(), k)); }).real();
}

/// Writes measure.csv + measure.json (and cdf.csv in 1-D); reports the
/// invariance defect, the requested moment and, for tent, W1 to Lebesgue.
inline nlohmann::json cmd_measure(const RunConfig& cfg) {
    const IFSystem sys = load_system(cfg.system);
    const AtomicMeasure mu = self_similar_measure(sys, cfg.depth);
    const auto dir = detail::prepare_out(cfg.out);
    {
        auto os = detail::open_out(dir / "measure.csv");
        write_measure_csv(os, mu);
        auto side = detail::open_out(dir / "measure.json");
        side << measure_sidecar(mu, sys.name()).dump(2) << '\n';
    }
    nlohmann::json files{(dir / "measure.csv").string(), (dir / "measure.json").string()};
    if (mu.dimension() == 1) {
        auto os = detail::open_out(dir / "cdf.csv");
        write_cdf_csv(os, mu);
        files.push_back((dir / "cdf.csv").string());
    }
    nlohmann::json out{{"command", "measure"},
                       {"system", sys.name()},
                       {"depth", cfg.depth},
                       {"atoms", mu.atoms.size()},
                       {"total_mass", mu.total_mass()},
                       {"invariance_defect", invariance_defect(sys, mu)},
                       {"files", files}};
    if (cfg.moment) out["moment"] = {{"k", *cfg.moment}, {"value", moment(mu, *cfg.moment)}};
    if (sys.name() == "tent") out["w1_lebesgue"] = wasserstein1_to_lebesgue(mu, 0.0, 1.0);
    return out;
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

inline nlohmann::json versions() {
    std::ostringstream eigen;
    eigen << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.' << EIGEN_MINOR_VERSION;
    return {{"hlab", kVersion},
            {"eigen", eigen.str()},
            {"nlohmann_json",
             std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                 std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
            {"compiler", __VERSION__}};
}

/// Aggregate document: config echo, versions, seeds, reports grouped by check.
inline nlohmann::json aggregate(const std::vector<DefectReport>& reports, const nlohmann::json& config) {
    nlohmann::json sections = nlohmann::json::object();
    bool pass = true;
    for (const auto& r : reports) {
        sections[r.check].push_back(r);
        pass = pass && r.pass;
    }
    return {{"config", config},
            {"versions", versions()},
            {"seeds", {{"rng_seed", config.value("seed", std::uint64_t{0})}}},
            {"sections", sections},
            {"report_count", reports.size()},
            {"all_pass", pass}};
}

/// Every applicable check, run concurrently and collected in check order.
inline std::vector<DefectReport> run_all(const RunConfig& cfg) {
    const IFSystem sys = load_system(cfg.system);
    std::vector<std::future<std::vector<DefectReport>>> jobs;
    for (const auto& check : applicable_checks(sys)) {
        jobs.push_back(std::async(std::launch::async, [check, cfg] { return run_check(check, cfg); }));
    }
    std::vector<DefectReport> out;
    for (auto& j : jobs) {
        auto part = j.get();
        out.insert(out.end(), part.begin(), part.end());
    }
    return out;
}

/// Reads every *.jsonl file in a directory (sorted by name).
inline std::vector<DefectReport> read_reports(const std::string& dir) {
    if (!std::filesystem::is_directory(dir)) throw InputError("'" + dir + "' is not a directory");
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<DefectReport> out;
    for (const auto& f : files) {
        std::ifstream in(f);
        std::string line;
        while (std::getline(in, line)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            try {
                out.push_back(nlohmann::json::parse(line).get<DefectReport>());
            } catch (const nlohmann::json::exception& e) {
                throw InputError("bad report line in '" + f.string() + "': " + e.what());
            }
        }
    }
    if (out.empty()) throw InputError("no verify reports (*.jsonl) found in '" + dir + "'; pass --run-all to run the suite");
    return out;
}

}  // namespace hlab::cli
