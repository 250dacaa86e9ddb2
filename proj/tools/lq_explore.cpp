// lq-explore: runs the four experiments and writes per-run and aggregate CSVs.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "lqexplore/config.hpp"
#include "lqexplore/errors.hpp"
#include "lqexplore/harness.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitAllFailed = 3;

struct CommonOptions {
    std::optional<long> runs;
    std::optional<long> iters;
    std::uint64_t seed = 1;
    std::string scale = "small";
    std::string out = "results";
    std::string config;
    unsigned jobs = 0;
    bool no_run_csv = false;
    std::optional<long> fit_lo;
    std::optional<long> fit_hi;
};

void add_common(CLI::App* sub, CommonOptions& o)
{
    sub->add_option("--runs", o.runs, "Number of independent runs")->check(CLI::PositiveNumber);
    sub->add_option("--iters", o.iters, "Iterations per run")->check(CLI::PositiveNumber);
    sub->add_option("--seed", o.seed, "Base seed; run i uses seed + i")->capture_default_str();
    sub->add_option("--scale", o.scale, "Preset size")
        ->check(CLI::IsMember({"small", "paper"}))
        ->capture_default_str();
    sub->add_option("--out", o.out, "Output directory")->capture_default_str();
    sub->add_option("--config", o.config, "key = value file with model and learner overrides")
        ->check(CLI::ExistingFile);
    sub->add_option("--jobs", o.jobs, "Worker threads (0 = all cores)")->capture_default_str();
    sub->add_flag("--no-run-csv", o.no_run_csv, "Skip per-run CSV files");
    sub->add_option("--fit-lo", o.fit_lo, "Lower end of the log-log fit window");
    sub->add_option("--fit-hi", o.fit_hi, "Upper end of the log-log fit window");
}

void print_fit(const char* label, const std::optional<lqexplore::SlopeFit>& f)
{
    if (f)
        std::printf("    %-10s slope % .4f  (r2 %.4f, %zu points)\n", label, f->slope, f->r2, f->points);
    else
        std::printf("    %-10s slope n/a\n", label);
}

int run(lqexplore::ExperimentKind kind, lqexplore::Scenario scenario, const CommonOptions& o)
{
    using namespace lqexplore;
    ExperimentConfig cfg =
        make_experiment(kind, o.scale == "paper" ? Scale::Paper : Scale::Small, scenario);
    if (!o.config.empty()) {
        const ConfigFile file = ConfigFile::load(o.config);
        if (has_model_keys(file)) {
            if (kind == ExperimentKind::Exp4Random)
                throw Error(ErrorKind::ConfigError, "exp4 draws its own models; drop the model keys");
            cfg.model = apply_model_keys(cfg.model, file);
        }
        apply_overrides(cfg, learner_overrides(file));
    }
    if (o.runs)
        cfg.n_runs = *o.runs;
    if (o.iters)
        cfg.n_iters = *o.iters;
    cfg.base_seed = o.seed;
    cfg.output_dir = o.out;
    cfg.jobs = o.jobs;
    cfg.write_run_csvs = !o.no_run_csv;
    if (o.fit_lo || o.fit_hi) {
        const auto def = cfg.window();
        cfg.fit_window = std::make_pair(o.fit_lo.value_or(def.first), o.fit_hi.value_or(def.second));
    }

    const ExperimentResult result = run_experiment(cfg);

    std::printf("%s", std::string(to_string(kind)).c_str());
    if (kind == ExperimentKind::Exp3Scenario)
        std::printf(" (%s)", std::string(to_string(scenario)).c_str());
    std::printf(": %ld runs x %ld iterations, output in %s\n", cfg.n_runs, cfg.n_iters, o.out.c_str());
    for (const auto& r : result.algorithms) {
        const auto& s = r.series;
        std::printf("  %s: %ld completed, %ld failed, %ld diverged episodes\n",
                    std::string(to_string(r.algorithm)).c_str(), s.runs_completed, s.runs_failed,
                    s.diverged_episodes);
        if (!s.median_cum_regret.empty())
            std::printf("    final median cumulative regret %.6g\n", s.median_cum_regret.back());
        print_fit("mse_Gamma", r.fit_mse_Gamma);
        print_fit("mse_phi", r.fit_mse_phi);
        print_fit("regret", r.fit_regret);
    }
    return result.any_all_failed() ? kExitAllFailed : 0;
}

} // namespace

int main(int argc, char** argv)
{
    using lqexplore::ExperimentKind;
    using lqexplore::Scenario;

    CLI::App app{"Actor-critic learning with data-driven exploration for stochastic LQ control"};
    app.require_subcommand(1);

    CommonOptions o1, o2, o3, o4;
    std::string scenario = "excessive";
    auto* exp1 = app.add_subcommand("exp1", "Convergence rates and regret of the adaptive learner");
    auto* exp2 = app.add_subcommand("exp2", "Model-based plug-in baseline");
    auto* exp3 = app.add_subcommand("exp3", "Adaptive vs fixed exploration schedule");
    auto* exp4 = app.add_subcommand("exp4", "Adaptive vs fixed over random environments");
    add_common(exp1, o1);
    add_common(exp2, o2);
    add_common(exp3, o3);
    add_common(exp4, o4);
    exp3->add_option("--scenario", scenario, "Initial exploration level")
        ->check(CLI::IsMember({"excessive", "insufficient"}))
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (exp1->parsed())
            return run(ExperimentKind::Exp1Validate, Scenario::Excessive, o1);
        if (exp2->parsed())
            return run(ExperimentKind::Exp2ModelBased, Scenario::Excessive, o2);
        if (exp3->parsed())
            return run(ExperimentKind::Exp3Scenario,
                       scenario == "insufficient" ? Scenario::Insufficient : Scenario::Excessive, o3);
        return run(ExperimentKind::Exp4Random, Scenario::Excessive, o4);
    } catch (const lqexplore::Error& e) {
        std::cerr << "lq-explore: " << e.what() << '\n';
        return e.kind() == lqexplore::ErrorKind::ConfigError ? kExitConfig : 1;
    } catch (const std::exception& e) {
        std::cerr << "lq-explore: " << e.what() << '\n';
        return 1;
    }
}
