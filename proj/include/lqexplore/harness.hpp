#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lqexplore/baselines.hpp"
#include "lqexplore/config.hpp"
#include "lqexplore/learner.hpp"

namespace lqexplore {

enum class ExperimentKind { Exp1Validate, Exp2ModelBased, Exp3Scenario, Exp4Random };
enum class Scenario { Excessive, Insufficient };
enum class Algorithm { Adaptive, Fixed, ModelBased };
enum class Scale { Small, Paper };

std::string_view to_string(ExperimentKind k) noexcept;
std::string_view to_string(Scenario s) noexcept;
std::string_view to_string(Algorithm a) noexcept;

/// Everything a single run needs besides the model and the seed.
struct LearnerSetup {
    ScheduleParams schedule;
    ProjectionSpec projection;
    CriticParameterization critic;
    double phi0 = -1.1;
    double Gamma0 = 0.5;
    double gamma0 = 2.0;
    double prior_estimate = 10.0;
};

/// phi0 = -1.1, Gamma0 = 0.5, gamma0 = 2, a_phi = 0.05/(n+1)^{3/4},
/// a_Gamma = 1/(n+1)^{3/4}, b_n = 20 max(1, (n+1)^{1/4}), phi in [-2.25, -1.1],
/// Gamma in [0, 1], dt = 0.01, constant critic.
LearnerSetup appendix_setup();

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::Exp1Validate;
    Scenario scenario = Scenario::Excessive;
    long n_runs = 1;
    long n_iters = 1;
    std::uint64_t base_seed = 1;
    /// Empty means nothing is written.
    std::filesystem::path output_dir;
    LearnerSetup learner = appendix_setup();
    /// Environment for every experiment except the random-model one.
    ModelParams model = ModelParams::unit();
    /// Worker threads; 0 picks the hardware concurrency.
    unsigned jobs = 0;
    bool write_run_csvs = true;
    /// Log-log fit window; defaults to [n_iters / 20, n_iters].
    std::optional<std::pair<long, long>> fit_window;

    [[nodiscard]] std::vector<Algorithm> algorithms() const;
    [[nodiscard]] std::pair<long, long> window() const;
};

/// Scale presets:
///   exp1, exp2  small 20 x 2e4       paper 100 x 1e5
///   exp3        small 200 x 5e3      paper 1000 x 1e4
///   exp4        small 500 x 2e3      paper 1e4 x 1e4
ExperimentConfig make_experiment(ExperimentKind kind, Scale scale,
                                 Scenario scenario = Scenario::Excessive);

/// Applies learner keys from a config file (n_iters included).
void apply_overrides(ExperimentConfig& cfg, const LearnerOverrides& o);

/// Record thinning: every n <= 1e3, every 10th up to 1e4, every 100th beyond,
/// and always the final iteration.
bool is_recorded(long n, long n_iters);

/// Thinned log of one run.
struct RunSeries {
    std::uint64_t seed = 0;
    double phi_star = 0.0;
    std::vector<long> n;
    std::vector<double> phi;
    std::vector<double> Gamma;
    std::vector<double> gamma;
    std::vector<double> instant_regret;
    std::vector<double> cum_regret;
    std::vector<IterationStatus> status;
    long diverged = 0;
    /// Set when the run aborted; the run is then excluded from aggregation.
    std::optional<std::string> error;
};

/// Runs one seed of one algorithm. Never throws for in-run failures; they are
/// returned in RunSeries::error.
RunSeries run_single(const ExperimentConfig& cfg, Algorithm alg, long run_index);

struct AggregateSeries {
    std::vector<long> n;
    std::vector<double> mse_Gamma;
    std::vector<double> mse_phi;
    std::vector<double> median_cum_regret;
    std::vector<long> runs_ok;
    long runs_completed = 0;
    long runs_failed = 0;
    long diverged_episodes = 0;

    /// Median cumulative regret at iteration n, if n is on the grid.
    [[nodiscard]] std::optional<double> regret_at(long n) const;
};

/// Deterministic fold over runs in the order they are added.
class Aggregator {
public:
    void add(const RunSeries& run);
    [[nodiscard]] AggregateSeries finish() const;

private:
    std::vector<long> grid_;
    std::vector<double> sum_Gamma2_;
    std::vector<double> sum_phi2_;
    std::vector<long> ok_;
    std::vector<std::vector<double>> cum_regret_;
    long failed_ = 0;
    long diverged_ = 0;
    bool has_grid_ = false;
};

/// Across-run means of Gamma^2 and (phi - phi*)^2 and the across-run median of
/// cumulative regret, over completed runs.
AggregateSeries aggregate(const std::vector<RunSeries>& runs);

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    std::size_t points = 0;
};

/// Least squares of log10(value) on log10(n) over n in [n_lo, n_hi], after
/// thinning to at most max_points log-spaced points. Throws
/// Error(DegenerateFit) if fewer than two distinct n remain or a value is not
/// positive and finite.
SlopeFit loglog_slope(const std::vector<long>& n, const std::vector<double>& value, long n_lo,
                      long n_hi, std::size_t max_points = 1000);

struct AlgorithmResult {
    Algorithm algorithm = Algorithm::Adaptive;
    AggregateSeries series;
    std::optional<SlopeFit> fit_mse_Gamma;
    std::optional<SlopeFit> fit_mse_phi;
    std::optional<SlopeFit> fit_regret;
    std::vector<std::string> failures;
};

struct ExperimentResult {
    std::vector<AlgorithmResult> algorithms;

    [[nodiscard]] const AlgorithmResult* find(Algorithm a) const;
    /// True if some algorithm completed no run at all.
    [[nodiscard]] bool any_all_failed() const;
};

/// Runs every algorithm of the experiment over all seeds on a worker pool and,
/// when output_dir is set, writes
///   <out>/<algorithm>/runs/run_<seed>.csv, <out>/<algorithm>/aggregate.csv, <out>/summary.json.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Shortest decimal that round-trips.
std::string format_double(double v);

inline constexpr std::string_view kRunCsvHeader = "n,phi,Gamma,gamma,instant_regret,cum_regret,status";
inline constexpr std::string_view kAggregateCsvHeader = "n,mse_Gamma,mse_phi,median_cum_regret,runs_ok";

std::string run_csv(const RunSeries& run);
std::string aggregate_csv(const AggregateSeries& agg);
std::string summary_json(const ExperimentConfig& cfg, const ExperimentResult& result);

} // namespace lqexplore
