#include <functional>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "jmmle/errors.hpp"

using namespace jmmle;
using namespace jmmle::cli;

namespace {

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Io: return 4;
        case ErrorKind::Config:
        case ErrorKind::InvalidArgument:
        case ErrorKind::ShapeMismatch:
        case ErrorKind::KMismatch:
        case ErrorKind::OverlappingGroups:
        case ErrorKind::IncompleteCover:
        case ErrorKind::IndexOutOfRange: return 2;
        default: return 3;
    }
}

/// Flags bound to a scratch config; only the ones given on the command line
/// are copied over the file/environment settings.
struct FlagSet {
    RunConfig values;
    std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> appliers;

    template <class T>
    CLI::Option* add(CLI::App& app, const std::string& name, T RunConfig::*field, const std::string& help) {
        auto* opt = app.add_option(name, values.*field, help);
        appliers.emplace_back(opt, [this, field](RunConfig& c) { c.*field = values.*field; });
        return opt;
    }
    void flag(CLI::App& app, const std::string& name, bool RunConfig::*field, const std::string& help) {
        auto* opt = app.add_flag(name, values.*field, help);
        appliers.emplace_back(opt, [this, field](RunConfig& c) { c.*field = values.*field; });
    }
    void apply(RunConfig& c) const {
        for (const auto& [opt, f] : appliers)
            if (opt->count() > 0) f(c);
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Joint multi-layer graphical model estimation and testing"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");
    std::string config_path;
    app.add_option("--config", config_path, "JSON file with any of the long option names as keys (dashes -> underscores)")
        ->check(CLI::ExistingFile);

    FlagSet flags;
    double global_alpha = -1.0;
    auto common = [&](CLI::App* sub) {
        flags.add(*sub, "--out", &RunConfig::out, "Output directory (env JMMLE_OUT)");
        flags.add(*sub, "--workers", &RunConfig::workers, "Worker threads; 0 = JMMLE_WORKERS or all cores");
    };
    auto sim_opts = [&](CLI::App* sub) {
        flags.add(*sub, "--preset", &RunConfig::preset, "estimation | testing | misspec");
        flags.add(*sub, "--seed", &RunConfig::seed, "Root seed (first seed for replicate)");
        flags.add(*sub, "--p", &RunConfig::p, "Upper-layer dimension");
        flags.add(*sub, "--q", &RunConfig::q, "Lower-layer dimension");
        flags.add(*sub, "--n", &RunConfig::n, "Samples per condition");
        flags.add(*sub, "--K", &RunConfig::K, "Number of conditions (testing forces 2)");
        flags.add(*sub, "--structure", &RunConfig::structure, "blocks | identical-pairs | custom sharing pattern");
        flags.add(*sub, "--diagonal", &RunConfig::diagonal, "shift-min-eigen | row-dominant");
        flags.add(*sub, "--within-group-zero", &RunConfig::within_group_zero,
                  "Probability of zeroing an active coefficient in one condition");
    };
    auto fit_opts = [&](CLI::App* sub) {
        auto* one = sub->add_flag("--one-step,!--full", flags.values.one_step, "One-step (default) or full alternating fit");
        flags.appliers.emplace_back(one, [&](RunConfig& c) { c.one_step = flags.values.one_step; });
        auto* upper = sub->add_flag("!--no-upper", flags.values.fit_upper, "Skip the upper-layer fit");
        flags.appliers.emplace_back(upper, [&](RunConfig& c) { c.fit_upper = flags.values.fit_upper; });
        flags.add(*sub, "--lambda-grid", &RunConfig::lambda_grid, "Comma-separated lambda values")->delimiter(',');
        flags.add(*sub, "--gamma-grid", &RunConfig::gamma_grid, "Comma-separated gamma values")->delimiter(',');
        flags.add(*sub, "--eta-grid", &RunConfig::eta_grid, "Comma-separated eta values (upper layer)")->delimiter(',');
        flags.add(*sub, "--baseline", &RunConfig::baseline, "none | separate | jsem");
    };
    auto alpha_opts = [&](CLI::App* sub) {
        flags.add(*sub, "--alpha", &RunConfig::alpha, "FDR level of the simultaneous tests and thresholding");
        sub->add_option("--global-alpha", global_alpha, "Level of the global chi-square test (default: --alpha)");
    };

    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic dataset with its truth");
    common(simulate);
    sim_opts(simulate);

    auto* estimate = app.add_subcommand("estimate", "Fit the joint model to a dataset");
    common(estimate);
    flags.add(*estimate, "--manifest", &RunConfig::manifest, "Dataset manifest or directory");
    fit_opts(estimate);

    auto* test = app.add_subcommand("test", "Global and simultaneous tests of coefficient rows (K = 2)");
    common(test);
    flags.add(*test, "--manifest", &RunConfig::manifest, "Dataset manifest or directory");
    flags.add(*test, "--estimate", &RunConfig::estimate, "Estimate directory");
    flags.add(*test, "--rows", &RunConfig::rows, "Comma-separated 1-based rows (default all)")->delimiter(',');
    flags.flag(*test, "--threshold-b", &RunConfig::threshold_b, "Also write FDR-thresholded coefficient matrices");
    alpha_opts(test);

    auto* evaluate = app.add_subcommand("evaluate", "Score an estimate against the simulated truth");
    common(evaluate);
    flags.add(*evaluate, "--manifest", &RunConfig::manifest, "Dataset manifest or directory");
    flags.add(*evaluate, "--estimate", &RunConfig::estimate, "Estimate directory");
    flags.add(*evaluate, "--tests", &RunConfig::tests, "Directory written by `test` to score as well");

    auto* replicate = app.add_subcommand("replicate", "Simulate, fit and score over consecutive seeds");
    common(replicate);
    sim_opts(replicate);
    fit_opts(replicate);
    alpha_opts(replicate);
    flags.add(*replicate, "--reps", &RunConfig::reps, "Number of replications");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        RunConfig cfg;
        if (!config_path.empty()) cfg = load_config_file(config_path, cfg);
        apply_environment(cfg);
        flags.apply(cfg);
        if (global_alpha >= 0.0) cfg.global_alpha = global_alpha;
        require(cfg.alpha > 0.0 && cfg.alpha < 1.0, ErrorKind::Config, "--alpha must lie in (0, 1)");
        require(cfg.level_global() > 0.0 && cfg.level_global() < 1.0, ErrorKind::Config,
                "--global-alpha must lie in (0, 1)");

        if (simulate->parsed()) return cmd_simulate(cfg);
        if (estimate->parsed()) return cmd_estimate(cfg);
        if (test->parsed()) return cmd_test(cfg);
        if (evaluate->parsed()) return cmd_evaluate(cfg);
        return cmd_replicate(cfg);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
