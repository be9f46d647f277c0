#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "hlab/cli.hpp"

namespace {

using hlab::cli::RunConfig;

void add_common(CLI::App* app, RunConfig& cfg) {
    app->add_option("--system", cfg.system, "built-in name (tent, cantor[:r], shift:n, sierpinski) or JSON file")
        ->capture_default_str();
    app->add_option("--depth", cfg.depth, "word depth N")->capture_default_str()->check(CLI::NonNegativeNumber);
    app->add_option("--seed", cfg.seed, "RNG seed")->capture_default_str();
}

void add_tolerances(CLI::App* app, RunConfig& cfg) {
    for (const auto& check : hlab::cli::check_names()) {
        app->add_option_function<double>(
            "--tol." + check, [&cfg, check](double v) { cfg.tolerances[check] = v; }, "tolerance override for " + check);
    }
}

void add_check_inputs(CLI::App* app, RunConfig& cfg) {
    app->add_option("--fn", cfg.fn, "identity | indicator:<word> | lipschitz:<slope> | custom:<file>");
    app->add_option("--open-set", cfg.open_set, "open set V: lo,hi[,lo,hi..][;..] or cylinder words (symbolic, * = all)");
    app->add_option("--trials", cfg.trials, "random trials per check")->capture_default_str();
    app->add_option("--levels", cfg.levels, "partition-of-unity levels")->capture_default_str();
}

void print_reports(const std::vector<hlab::DefectReport>& reports) {
    for (const auto& r : reports) std::cout << nlohmann::json(r).dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hlab: self-similar sets, transfer operators and Hilbert bimodules at finite depth"};
    app.require_subcommand(1);
    app.set_version_flag("--version", hlab::cli::kVersion);

    RunConfig cfg;
    std::string check;
    bool run_all = false;
    std::string in_dir;
    std::string report_file = "report.json";
    std::size_t samples = 0;
    std::string op_kind = "comp";

    auto* attractor = app.add_subcommand("attractor", "write the depth-N attractor cloud and a density raster");
    add_common(attractor, cfg);
    attractor->add_option("--out", cfg.out, "output directory")->capture_default_str();
    attractor->add_option("--format", cfg.format, "csv | json | ppm | pgm")->capture_default_str();
    attractor->add_option("--chaos", samples, "use the chaos game with this many samples");

    auto* measure = app.add_subcommand("measure", "write the depth-N Hutchinson measure and its invariance defect");
    add_common(measure, cfg);
    measure->add_option("--out", cfg.out, "output directory")->capture_default_str();
    measure->add_option_function<int>("--moment", [&cfg](int k) { cfg.moment = k; }, "also print the k-th moment (1-D)");

    auto* verify = app.add_subcommand("verify", "run one check, one JSON report per line");
    add_common(verify, cfg);
    add_tolerances(verify, cfg);
    add_check_inputs(verify, cfg);
    verify->add_option("check", check, "check name")->required()->check(CLI::IsMember(hlab::cli::check_names()));

    auto* report = app.add_subcommand("report", "aggregate verify outputs, or run the whole suite");
    add_common(report, cfg);
    add_tolerances(report, cfg);
    add_check_inputs(report, cfg);
    report->add_flag("--run-all", run_all, "run every applicable check");
    report->add_option("--in", in_dir, "directory of verify outputs (*.jsonl)");
    report->add_option("--out", report_file, "aggregate JSON file")->capture_default_str();

    auto* op = app.add_subcommand("operator", "export C_phi, L_phi or M_a at depth N");
    add_common(op, cfg);
    op->add_option("--kind", op_kind, "comp | transfer | mult")->capture_default_str()
        ->check(CLI::IsMember({"comp", "transfer", "mult"}));
    op->add_option("--fn", cfg.fn, "function for mult (default identity / indicator:1)");
    op->add_option("--format", cfg.format, "json | csv")->capture_default_str()->check(CLI::IsMember({"json", "csv"}));

    auto* schema = app.add_subcommand("schema", "print the JSON schema of a report line");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // --help and --version exit 0; any other parse failure is an input error.
        return app.exit(e) == 0 ? hlab::cli::kPass : hlab::cli::kInputError;
    }

    try {
        if (*attractor) {
            if (samples > 0) cfg.chaos_samples = samples;
            std::cout << hlab::cli::cmd_attractor(cfg).dump() << '\n';
            return hlab::cli::kPass;
        }
        if (*measure) {
            std::cout << hlab::cli::cmd_measure(cfg).dump() << '\n';
            return hlab::cli::kPass;
        }
        if (*verify) {
            const auto reports = hlab::cli::run_check(check, cfg);
            print_reports(reports);
            return hlab::cli::all_pass(reports) ? hlab::cli::kPass : hlab::cli::kFail;
        }
        if (*report) {
            if (!run_all && in_dir.empty()) throw hlab::InputError("report needs --in <dir> or --run-all");
            const auto reports = run_all ? hlab::cli::run_all(cfg) : hlab::cli::read_reports(in_dir);
            nlohmann::json config = hlab::cli::to_json(cfg);
            config["mode"] = run_all ? "run-all" : "aggregate";
            const nlohmann::json doc = hlab::cli::aggregate(reports, config);
            std::ofstream os(report_file);
            if (!os) throw hlab::InputError("cannot write '" + report_file + "'");
            os << doc.dump(2) << '\n';
            std::cout << nlohmann::json{{"command", "report"}, {"file", report_file}, {"reports", reports.size()},
                                        {"all_pass", doc["all_pass"]}}.dump()
                      << '\n';
            return doc["all_pass"].get<bool>() ? hlab::cli::kPass : hlab::cli::kFail;
        }
        if (*op) {
            const auto sys = std::make_shared<const hlab::IFSystem>(hlab::load_system(cfg.system));
            const auto space = hlab::cell_space(sys, cfg.depth);
            std::optional<hlab::OperatorMatrix> m;
            if (op_kind == "comp") m = hlab::comp_op(space);
            else if (op_kind == "transfer") m = hlab::transfer_op(space);
            else {
                const std::string spec = !cfg.fn.empty() ? cfg.fn : (sys->symbolic() ? "indicator:1" : "identity");
                m = hlab::mult_op(hlab::discretize(hlab::cli::parse_function(spec, *sys), space));
            }
            if (cfg.format == "csv") hlab::write_dense_csv(std::cout, *m);
            else std::cout << hlab::to_json(*m).dump() << '\n';
            return hlab::cli::kPass;
        }
        if (*schema) {
            std::cout << hlab::defect_report_schema().dump(2) << '\n';
            return hlab::cli::kPass;
        }
    } catch (const hlab::UnsupportedError& e) {
        std::cerr << "hlab: unsupported: " << e.what() << '\n';
        return hlab::cli::kUnsupported;
    } catch (const hlab::Error& e) {
        std::cerr << "hlab: " << e.what() << '\n';
        return hlab::cli::kInputError;
    } catch (const std::exception& e) {
        std::cerr << "hlab: " << e.what() << '\n';
        return hlab::cli::kInputError;
    }
    return hlab::cli::kInputError;
}
