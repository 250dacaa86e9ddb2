#include "lqexplore/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "lqexplore/errors.hpp"
#include "lqexplore/oracle.hpp"

namespace lqexplore {

namespace {

constexpr std::uint64_t kInitStream = 0x696e6974;

double nan() { return std::numeric_limits<double>::quiet_NaN(); }

double median_of(std::vector<double>& v)
{
    if (v.empty())
        return nan();
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double hi = v[mid];
    if (v.size() % 2 == 1)
        return hi;
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

void write_file(const std::filesystem::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(ErrorKind::ConfigError, "cannot write " + path.string());
    out << content;
    if (!out)
        throw Error(ErrorKind::ConfigError, "failed writing " + path.string());
}

std::string run_file_name(std::uint64_t seed)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "run_%05llu.csv", static_cast<unsigned long long>(seed));
    return buf;
}

void append_number(std::string& out, double v)
{
    out += format_double(v);
}

} // namespace

std::string_view to_string(ExperimentKind k) noexcept
{
    switch (k) {
    case ExperimentKind::Exp1Validate: return "exp1";
    case ExperimentKind::Exp2ModelBased: return "exp2";
    case ExperimentKind::Exp3Scenario: return "exp3";
    case ExperimentKind::Exp4Random: return "exp4";
    }
    return "unknown";
}

std::string_view to_string(Scenario s) noexcept
{
    return s == Scenario::Excessive ? "excessive" : "insufficient";
}

std::string_view to_string(Algorithm a) noexcept
{
    switch (a) {
    case Algorithm::Adaptive: return "adaptive";
    case Algorithm::Fixed: return "fixed";
    case Algorithm::ModelBased: return "model_based";
    }
    return "unknown";
}

LearnerSetup appendix_setup()
{
    LearnerSetup s;
    s.schedule.alpha = 1.0;
    s.schedule.beta = 1.0;
    s.schedule.a_phi_scale = 0.05;
    s.schedule.a_Gamma_scale = 1.0;
    s.schedule.b_scale = 20.0;
    s.schedule.dt_mode = DtMode::Fixed;
    s.schedule.dt = 0.01;
    s.projection.phi_box = Interval{-2.25, -1.1};
    s.projection.gamma_interval = Interval{0.0, 1.0};
    return s;
}

std::vector<Algorithm> ExperimentConfig::algorithms() const
{
    switch (experiment) {
    case ExperimentKind::Exp1Validate: return {Algorithm::Adaptive};
    case ExperimentKind::Exp2ModelBased: return {Algorithm::ModelBased};
    case ExperimentKind::Exp3Scenario:
    case ExperimentKind::Exp4Random: return {Algorithm::Adaptive, Algorithm::Fixed};
    }
    return {};
}

std::pair<long, long> ExperimentConfig::window() const
{
    if (fit_window)
        return *fit_window;
    return {std::max(1L, n_iters / 20), n_iters};
}

ExperimentConfig make_experiment(ExperimentKind kind, Scale scale, Scenario scenario)
{
    ExperimentConfig cfg;
    cfg.experiment = kind;
    cfg.scenario = scenario;
    const bool paper = scale == Scale::Paper;
    switch (kind) {
    case ExperimentKind::Exp1Validate:
    case ExperimentKind::Exp2ModelBased:
        cfg.n_runs = paper ? 100 : 20;
        cfg.n_iters = paper ? 100000 : 20000;
        break;
    case ExperimentKind::Exp3Scenario:
        cfg.n_runs = paper ? 1000 : 200;
        cfg.n_iters = paper ? 10000 : 5000;
        cfg.learner.projection.phi_box = Interval{-20.0, 20.0};
        cfg.learner.projection.gamma_interval = Interval{0.0, 20.0};
        if (scenario == Scenario::Excessive) {
            cfg.learner.phi0 = -1.8;
            cfg.learner.Gamma0 = 20.0;
            cfg.learner.gamma0 = 20.0;
        } else {
            cfg.learner.phi0 = 0.0;
            cfg.learner.Gamma0 = 0.02;
            cfg.learner.gamma0 = 0.02;
        }
        break;
    case ExperimentKind::Exp4Random:
        cfg.n_runs = paper ? 10000 : 500;
        cfg.n_iters = paper ? 10000 : 2000;
        cfg.learner.projection.phi_box = Interval{-100.0, 100.0};
        cfg.learner.projection.gamma_interval = Interval{0.0, 100.0};
        cfg.learner.phi0 = 0.0;
        break;
    }
    return cfg;
}

void apply_overrides(ExperimentConfig& cfg, const LearnerOverrides& o)
{
    auto& l = cfg.learner;
    auto& s = l.schedule;
    if (o.phi0) l.phi0 = *o.phi0;
    if (o.Gamma0) l.Gamma0 = *o.Gamma0;
    if (o.gamma0) l.gamma0 = *o.gamma0;
    if (o.alpha) s.alpha = *o.alpha;
    if (o.beta) s.beta = *o.beta;
    if (o.c_gamma) s.c_gamma = *o.c_gamma;
    if (o.dt_mode) s.dt_mode = *o.dt_mode;
    if (o.dt) s.dt = *o.dt;
    if (o.b_scale) s.b_scale = *o.b_scale;
    if (o.a_phi_scale) s.a_phi_scale = *o.a_phi_scale;
    if (o.a_Gamma_scale) s.a_Gamma_scale = *o.a_Gamma_scale;
    if (o.prior_estimate) l.prior_estimate = *o.prior_estimate;
    if (o.n_iters) cfg.n_iters = *o.n_iters;
    if (o.Gamma_floor) l.projection.gamma_floor = *o.Gamma_floor;
    if (o.Gamma_floor_band) l.projection.band_floor = *o.Gamma_floor_band;

    if (o.phi_box_lo || o.phi_box_hi) {
        Interval box = l.projection.phi_box.value_or(Interval{-kUnbounded, kUnbounded});
        if (o.phi_box_lo) box.lo = *o.phi_box_lo;
        if (o.phi_box_hi) box.hi = *o.phi_box_hi;
        if (!(box.lo <= box.hi))
            throw Error(ErrorKind::ConfigError, "phi_box_lo must not exceed phi_box_hi");
        l.projection.phi_box = box;
    }
    if (o.Gamma_lo || o.Gamma_hi) {
        Interval iv = l.projection.gamma_interval.value_or(Interval{0.0, kUnbounded});
        if (o.Gamma_lo) iv.lo = *o.Gamma_lo;
        if (o.Gamma_hi) iv.hi = *o.Gamma_hi;
        if (!(iv.lo <= iv.hi) || iv.hi <= 0.0)
            throw Error(ErrorKind::ConfigError, "Gamma interval must be non-empty with Gamma_hi > 0");
        l.projection.gamma_interval = iv;
    }
}

bool is_recorded(long n, long n_iters)
{
    if (n == n_iters - 1 || n <= 1000)
        return true;
    if (n <= 10000)
        return n % 10 == 0;
    return n % 100 == 0;
}

// --- single run ----------------------------------------------------------------

RunSeries run_single(const ExperimentConfig& cfg, Algorithm alg, long run_index)
{
    RunSeries s;
    s.seed = cfg.base_seed + static_cast<std::uint64_t>(run_index);
    try {
        const LearnerSetup& setup = cfg.learner;
        ModelParams params = cfg.model;
        LearnerInit init;
        init.phi0 = Eigen::VectorXd::Constant(1, setup.phi0);
        init.Gamma0 = Eigen::MatrixXd::Constant(1, 1, setup.Gamma0);
        init.gamma0 = setup.gamma0;
        init.theta0 = Eigen::VectorXd::Zero(setup.critic.dim());
        if (cfg.experiment == ExperimentKind::Exp4Random) {
            params = sample_random_model(s.seed);
            RngStream init_rng(s.seed, kInitStream);
            init.gamma0 = init_rng.uniform(0.0, 5.0);
            init.Gamma0(0, 0) = init_rng.uniform(0.0, 5.0);
        }
        const Model model(std::move(params));
        if (model.l() != 1)
            throw Error(ErrorKind::BadDimensions, "experiments log scalar controls only");
        s.phi_star = phi_star(model)(0);

        double cum = 0.0;
        const long N = cfg.n_iters;
        RecordSink sink = [&](const IterationRecord& rec) {
            cum += rec.instant_regret;
            if (!is_recorded(rec.n, N))
                return;
            s.n.push_back(rec.n);
            s.phi.push_back(rec.phi(0));
            s.Gamma.push_back(rec.Gamma(0, 0));
            s.gamma.push_back(rec.gamma);
            s.instant_regret.push_back(rec.instant_regret);
            s.cum_regret.push_back(cum);
            s.status.push_back(rec.status);
        };

        RngStream rng(s.seed);
        TrainResult res;
        if (alg == Algorithm::ModelBased) {
            ModelBasedConfig mb;
            mb.phi_box = setup.projection.phi_box.value_or(Interval{-kUnbounded, kUnbounded});
            mb.Gamma0 = setup.Gamma0;
            mb.dt = setup.schedule.dt;
            mb.prior_estimate = setup.prior_estimate;
            res = run_model_based(model, mb, N, rng, sink);
        } else {
            LearnerConfig lc;
            lc.schedules = make_schedules(setup.schedule, model.params().T);
            lc.projection = setup.projection;
            lc.critic = setup.critic;
            res = train(model, lc, init, N, rng, sink,
                        alg == Algorithm::Fixed ? ExplorationMode::Fixed : ExplorationMode::Adaptive);
        }
        s.diverged = res.diverged;
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::ConfigError)
            throw;
        s.error = e.what();
    }
    return s;
}

// --- aggregation -------------------------------------------------------------------

std::optional<double> AggregateSeries::regret_at(long at) const
{
    const auto it = std::lower_bound(n.begin(), n.end(), at);
    if (it == n.end() || *it != at)
        return std::nullopt;
    return median_cum_regret[static_cast<std::size_t>(it - n.begin())];
}

void Aggregator::add(const RunSeries& run)
{
    if (run.error) {
        ++failed_;
        return;
    }
    if (!has_grid_) {
        grid_ = run.n;
        sum_Gamma2_.assign(grid_.size(), 0.0);
        sum_phi2_.assign(grid_.size(), 0.0);
        ok_.assign(grid_.size(), 0);
        has_grid_ = true;
    } else if (run.n != grid_) {
        throw Error(ErrorKind::ConfigError, "runs were recorded on different iteration grids");
    }
    for (std::size_t i = 0; i < grid_.size(); ++i) {
        sum_Gamma2_[i] += run.Gamma[i] * run.Gamma[i];
        const double e = run.phi[i] - run.phi_star;
        sum_phi2_[i] += e * e;
        ok_[i] += run.status[i] == IterationStatus::Ok ? 1 : 0;
    }
    cum_regret_.push_back(run.cum_regret);
    diverged_ += run.diverged;
}

AggregateSeries Aggregator::finish() const
{
    AggregateSeries a;
    a.n = grid_;
    a.runs_completed = static_cast<long>(cum_regret_.size());
    a.runs_failed = failed_;
    a.diverged_episodes = diverged_;
    a.runs_ok = ok_;
    const auto count = static_cast<double>(cum_regret_.size());
    std::vector<double> column(cum_regret_.size());
    for (std::size_t i = 0; i < grid_.size(); ++i) {
        a.mse_Gamma.push_back(sum_Gamma2_[i] / count);
        a.mse_phi.push_back(sum_phi2_[i] / count);
        for (std::size_t r = 0; r < cum_regret_.size(); ++r)
            column[r] = cum_regret_[r][i];
        a.median_cum_regret.push_back(median_of(column));
    }
    return a;
}

AggregateSeries aggregate(const std::vector<RunSeries>& runs)
{
    Aggregator agg;
    for (const auto& r : runs)
        agg.add(r);
    return agg.finish();
}

SlopeFit loglog_slope(const std::vector<long>& n, const std::vector<double>& value, long n_lo,
                      long n_hi, std::size_t max_points)
{
    if (n.size() != value.size())
        throw Error(ErrorKind::DegenerateFit, "series lengths differ");
    std::vector<double> lx;
    std::vector<double> ly;
    for (std::size_t i = 0; i < n.size(); ++i) {
        if (n[i] < n_lo || n[i] > n_hi || n[i] <= 0)
            continue;
        if (!(value[i] > 0.0) || !std::isfinite(value[i]))
            throw Error(ErrorKind::DegenerateFit,
                        "non-positive value at n = " + std::to_string(n[i]));
        lx.push_back(std::log10(static_cast<double>(n[i])));
        ly.push_back(std::log10(value[i]));
    }
    if (lx.size() < 2)
        throw Error(ErrorKind::DegenerateFit, "fewer than two points in the fit window");

    std::vector<std::size_t> pick;
    if (lx.size() <= max_points || max_points < 2) {
        pick.resize(lx.size());
        for (std::size_t i = 0; i < lx.size(); ++i)
            pick[i] = i;
    } else {
        const double x0 = lx.front();
        const double x1 = lx.back();
        for (std::size_t k = 0; k < max_points; ++k) {
            const double target = x0 + (x1 - x0) * static_cast<double>(k) / static_cast<double>(max_points - 1);
            auto idx = static_cast<std::size_t>(std::lower_bound(lx.begin(), lx.end(), target) - lx.begin());
            idx = std::min(idx, lx.size() - 1);
            if (pick.empty() || pick.back() != idx)
                pick.push_back(idx);
        }
    }

    double mx = 0.0;
    double my = 0.0;
    for (auto i : pick) {
        mx += lx[i];
        my += ly[i];
    }
    const auto k = static_cast<double>(pick.size());
    mx /= k;
    my /= k;
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (auto i : pick) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    if (!(sxx > 0.0))
        throw Error(ErrorKind::DegenerateFit, "all points share the same n");

    SlopeFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    const double ss_res = syy - fit.slope * sxy;
    fit.r2 = syy > 0.0 ? 1.0 - std::max(0.0, ss_res) / syy : 1.0;
    fit.points = pick.size();
    return fit;
}

// --- output ------------------------------------------------------------------------

std::string format_double(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string run_csv(const RunSeries& run)
{
    std::string out;
    out.reserve(run.n.size() * 96 + 64);
    out += kRunCsvHeader;
    out += '\n';
    for (std::size_t i = 0; i < run.n.size(); ++i) {
        out += std::to_string(run.n[i]);
        out += ',';
        append_number(out, run.phi[i]);
        out += ',';
        append_number(out, run.Gamma[i]);
        out += ',';
        append_number(out, run.gamma[i]);
        out += ',';
        append_number(out, run.instant_regret[i]);
        out += ',';
        append_number(out, run.cum_regret[i]);
        out += ',';
        out += run.status[i] == IterationStatus::Ok ? "ok" : "diverged";
        out += '\n';
    }
    return out;
}

std::string aggregate_csv(const AggregateSeries& agg)
{
    std::string out;
    out.reserve(agg.n.size() * 80 + 64);
    out += kAggregateCsvHeader;
    out += '\n';
    for (std::size_t i = 0; i < agg.n.size(); ++i) {
        out += std::to_string(agg.n[i]);
        out += ',';
        append_number(out, agg.mse_Gamma[i]);
        out += ',';
        append_number(out, agg.mse_phi[i]);
        out += ',';
        append_number(out, agg.median_cum_regret[i]);
        out += ',';
        out += std::to_string(agg.runs_ok[i]);
        out += '\n';
    }
    return out;
}

const AlgorithmResult* ExperimentResult::find(Algorithm a) const
{
    for (const auto& r : algorithms)
        if (r.algorithm == a)
            return &r;
    return nullptr;
}

bool ExperimentResult::any_all_failed() const
{
    return std::any_of(algorithms.begin(), algorithms.end(),
                       [](const AlgorithmResult& r) { return r.series.runs_completed == 0; });
}

namespace {

nlohmann::json number_or_null(double v)
{
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

nlohmann::json fit_json(const std::optional<SlopeFit>& f)
{
    if (!f)
        return nullptr;
    return {{"slope", number_or_null(f->slope)},
            {"intercept", number_or_null(f->intercept)},
            {"r2", number_or_null(f->r2)},
            {"points", f->points}};
}

AlgorithmResult run_algorithm(const ExperimentConfig& cfg, Algorithm alg,
                              const std::filesystem::path& run_dir)
{
    const long R = cfg.n_runs;
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const unsigned jobs = static_cast<unsigned>(
        std::min<long>(R, cfg.jobs == 0 ? static_cast<long>(hw) : static_cast<long>(cfg.jobs)));

    Aggregator agg;
    AlgorithmResult result;
    result.algorithm = alg;

    std::vector<std::optional<RunSeries>> slots(static_cast<std::size_t>(R));
    std::mutex mu;
    long next_fold = 0;
    std::atomic<long> next_run{0};
    std::exception_ptr first_error;

    auto worker = [&] {
        while (true) {
            const long i = next_run.fetch_add(1);
            if (i >= R)
                return;
            try {
                RunSeries s = run_single(cfg, alg, i);
                if (!run_dir.empty() && cfg.write_run_csvs && !s.error)
                    write_file(run_dir / run_file_name(s.seed), run_csv(s));
                std::lock_guard lock(mu);
                slots[static_cast<std::size_t>(i)] = std::move(s);
                while (next_fold < R && slots[static_cast<std::size_t>(next_fold)]) {
                    auto& done = *slots[static_cast<std::size_t>(next_fold)];
                    agg.add(done);
                    if (done.error)
                        result.failures.push_back("seed " + std::to_string(done.seed) + ": " + *done.error);
                    slots[static_cast<std::size_t>(next_fold)].reset();
                    ++next_fold;
                }
            } catch (...) {
                std::lock_guard lock(mu);
                if (!first_error)
                    first_error = std::current_exception();
                next_run.store(R);
                return;
            }
        }
    };

    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(jobs);
        for (unsigned t = 0; t < jobs; ++t)
            pool.emplace_back(worker);
        for (auto& t : pool)
            t.join();
    }
    if (first_error)
        std::rethrow_exception(first_error);

    result.series = agg.finish();
    const auto [lo, hi] = cfg.window();
    auto try_fit = [&](const std::vector<double>& v) -> std::optional<SlopeFit> {
        try {
            return loglog_slope(result.series.n, v, lo, hi);
        } catch (const Error&) {
            return std::nullopt;
        }
    };
    if (result.series.runs_completed > 0) {
        result.fit_mse_Gamma = try_fit(result.series.mse_Gamma);
        result.fit_mse_phi = try_fit(result.series.mse_phi);
        result.fit_regret = try_fit(result.series.median_cum_regret);
    }
    return result;
}

} // namespace

std::string summary_json(const ExperimentConfig& cfg, const ExperimentResult& result)
{
    nlohmann::ordered_json j;
    j["experiment"] = std::string(to_string(cfg.experiment));
    if (cfg.experiment == ExperimentKind::Exp3Scenario)
        j["scenario"] = std::string(to_string(cfg.scenario));
    j["n_runs"] = cfg.n_runs;
    j["n_iters"] = cfg.n_iters;
    j["base_seed"] = cfg.base_seed;
    const auto [lo, hi] = cfg.window();
    j["fit_window"] = {lo, hi};
    nlohmann::ordered_json algs = nlohmann::ordered_json::object();
    for (const auto& r : result.algorithms) {
        nlohmann::ordered_json a;
        const auto& s = r.series;
        a["runs_completed"] = s.runs_completed;
        a["runs_failed"] = s.runs_failed;
        a["diverged_episodes"] = s.diverged_episodes;
        a["final_median_cum_regret"] =
            s.median_cum_regret.empty() ? nlohmann::json(nullptr) : number_or_null(s.median_cum_regret.back());
        nlohmann::ordered_json checkpoints = nlohmann::ordered_json::object();
        for (long at = 9; at < cfg.n_iters; at = at * 10 + 9)
            if (auto v = s.regret_at(at))
                checkpoints[std::to_string(at)] = number_or_null(*v);
        a["median_cum_regret_at"] = checkpoints;
        a["slopes"] = {{"mse_Gamma", fit_json(r.fit_mse_Gamma)},
                       {"mse_phi", fit_json(r.fit_mse_phi)},
                       {"regret", fit_json(r.fit_regret)}};
        a["failures"] = r.failures;
        algs[std::string(to_string(r.algorithm))] = a;
    }
    j["algorithms"] = algs;
    return j.dump(2) + "\n";
}

ExperimentResult run_experiment(const ExperimentConfig& cfg)
{
    if (cfg.n_runs < 1)
        throw Error(ErrorKind::ConfigError, "n_runs must be at least 1");
    if (cfg.n_iters < 1)
        throw Error(ErrorKind::ConfigError, "n_iters must be at least 1");
    if (cfg.experiment != ExperimentKind::Exp4Random)
        validate_model(cfg.model);

    ExperimentResult result;
    for (Algorithm alg : cfg.algorithms()) {
        std::filesystem::path run_dir;
        if (!cfg.output_dir.empty()) {
            const auto alg_dir = cfg.output_dir / std::string(to_string(alg));
            if (cfg.write_run_csvs) {
                run_dir = alg_dir / "runs";
                std::filesystem::create_directories(run_dir);
            } else {
                std::filesystem::create_directories(alg_dir);
            }
        }
        result.algorithms.push_back(run_algorithm(cfg, alg, run_dir));
        if (!cfg.output_dir.empty())
            write_file(cfg.output_dir / std::string(to_string(alg)) / "aggregate.csv",
                       aggregate_csv(result.algorithms.back().series));
    }
    if (!cfg.output_dir.empty())
        write_file(cfg.output_dir / "summary.json", summary_json(cfg, result));
    return result;
}

} // namespace lqexplore
