#include "lqexplore/learner.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lqexplore/errors.hpp"
#include "lqexplore/oracle.hpp"

namespace lqexplore {

namespace {

double c_phi_default(long n)
{
    if (n < 3)
        return 1.0;
    const double ll = std::log(std::log(static_cast<double>(n)));
    return ll > 0.0 ? std::max(1.0, std::pow(ll, 1.0 / 6.0)) : 1.0;
}

double c_Gamma_default(long n)
{
    return n < 1 ? 1.0 : std::max(1.0, std::log(static_cast<double>(n)));
}

double spd_lower(const ScheduleSet& sch, long n)
{
    return 1.0 / sch.b(n);
}

double interval_floor(const ScheduleSet& sch, const ProjectionSpec& proj, long n)
{
    return proj.band_floor ? std::max(proj.gamma_floor, spd_lower(sch, n)) : proj.gamma_floor;
}

} // namespace

ScheduleSet make_schedules(const ScheduleParams& sp, double T)
{
    if (!(sp.alpha > 0.0) || !(sp.beta > 0.0))
        throw Error(ErrorKind::ConfigError, "alpha and beta must be positive");
    if (!(sp.b_scale > 0.0))
        throw Error(ErrorKind::ConfigError, "b_scale must be positive");
    if (sp.a_phi_scale < 0.0 || sp.a_Gamma_scale < 0.0 || sp.a_theta_scale < 0.0)
        throw Error(ErrorKind::ConfigError, "step-size scales must be non-negative");
    if (sp.dt_mode == DtMode::Fixed && !(sp.dt > 0.0))
        throw Error(ErrorKind::ConfigError, "fixed dt must be positive");

    ScheduleSet s;
    s.alpha = sp.alpha;
    s.beta = sp.beta;
    s.c_gamma = sp.c_gamma;
    s.dt_mode = sp.dt_mode;

    const double a0 = std::pow(sp.alpha, 0.75);
    const double alpha_q = std::pow(sp.alpha, 0.25);
    const double beta = sp.beta;
    auto base_a = [a0, beta](long n) { return a0 / std::pow(static_cast<double>(n) + beta, 0.75); };
    s.a_phi = [base_a, k = sp.a_phi_scale](long n) { return k * base_a(n); };
    s.a_Gamma = [base_a, k = sp.a_Gamma_scale](long n) { return k * base_a(n); };
    s.a_theta = [base_a, k = sp.a_theta_scale](long n) { return k * base_a(n); };
    s.b = [alpha_q, beta, k = sp.b_scale](long n) {
        return k * std::max(1.0, std::pow(static_cast<double>(n) + beta, 0.25) / alpha_q);
    };
    s.c_phi = c_phi_default;
    s.c_Gamma = c_Gamma_default;
    if (sp.dt_mode == DtMode::Fixed)
        s.dt = [dt = sp.dt](long) { return dt; };
    else
        s.dt = [T](long n) { return T * std::pow(static_cast<double>(n) + 1.0, -0.625); };
    return s;
}

ScheduleSet theorem_schedules(double alpha, double beta, double T)
{
    ScheduleParams sp;
    sp.alpha = alpha;
    sp.beta = beta;
    return make_schedules(sp, T);
}

Eigen::VectorXd project_phi_n(const Eigen::VectorXd& phi, const ScheduleSet& sch,
                              const ProjectionSpec& proj, long n)
{
    if (proj.phi_box)
        return project_box(phi, proj.phi_box->lo, proj.phi_box->hi);
    return project_ball(phi, sch.c_phi(n));
}

Eigen::MatrixXd project_Gamma_n(const Eigen::MatrixXd& Gamma, const ScheduleSet& sch,
                                const ProjectionSpec& proj, long n)
{
    return project_gamma(Gamma, spd_lower(sch, n), sch.c_Gamma(n), proj.gamma_interval,
                         interval_floor(sch, proj, n));
}

bool in_gamma_set(const Eigen::MatrixXd& Gamma, const ScheduleSet& sch, const ProjectionSpec& proj,
                  long n, double tol)
{
    if ((Gamma - Gamma.transpose()).cwiseAbs().maxCoeff() > tol)
        return false;
    const auto [lo, hi] = eigen_range(Gamma);
    if (proj.gamma_interval) {
        const double floor = std::min(std::max(interval_floor(sch, proj, n), proj.gamma_interval->lo),
                                      proj.gamma_interval->hi);
        return lo >= floor - tol && hi <= proj.gamma_interval->hi + tol;
    }
    return lo >= spd_lower(sch, n) - tol && Gamma.norm() <= std::max(spd_lower(sch, n), sch.c_Gamma(n)) * (1.0 + tol) + tol;
}

bool in_phi_set(const Eigen::VectorXd& phi, const ScheduleSet& sch, const ProjectionSpec& proj,
                long n, double tol)
{
    if (proj.phi_box)
        return phi.minCoeff() >= proj.phi_box->lo - tol && phi.maxCoeff() <= proj.phi_box->hi + tol;
    return phi.norm() <= sch.c_phi(n) * (1.0 + tol);
}

LearnerConfig appendix_config()
{
    ScheduleParams sp;
    sp.alpha = 1.0;
    sp.beta = 1.0;
    sp.a_phi_scale = 0.05;
    sp.a_Gamma_scale = 1.0;
    sp.b_scale = 20.0;
    sp.dt_mode = DtMode::Fixed;
    sp.dt = 0.01;

    LearnerConfig cfg;
    cfg.schedules = make_schedules(sp, 1.0);
    cfg.projection.phi_box = Interval{-2.25, -1.1};
    cfg.projection.gamma_interval = Interval{0.0, 1.0};
    return cfg;
}

LearnerInit appendix_init()
{
    LearnerInit init;
    init.phi0 = Eigen::VectorXd::Constant(1, -1.1);
    init.Gamma0 = Eigen::MatrixXd::Constant(1, 1, 0.5);
    init.gamma0 = 2.0;
    return init;
}

double resolve_c_gamma(const ScheduleSet& sch, const Model& m)
{
    return sch.c_gamma.value_or(2.0 * m.derived().lambda_max_ddt);
}

CriticState pe_update(const Trajectory& traj, const CriticState& cs, const PolicyParams& pol,
                      double a_theta, const CriticParameterization& par, const Model& m)
{
    if (par.kind == CriticKind::ConstantOracleFree || a_theta == 0.0)
        return cs;
    const double Q = m.params().Q;
    const double dt = traj.dt;
    const double bonus = cs.gamma * entropy(pol.Gamma) * dt;

    Eigen::VectorXd step = Eigen::VectorXd::Zero(par.dim());
    const std::size_t K = traj.steps();
    for (std::size_t k = 0; k < K; ++k) {
        const double x0 = traj.states[k];
        const double x1 = traj.states[k + 1];
        const double td = value(traj.times[k + 1], x1, cs, par) - value(traj.times[k], x0, cs, par) -
                          0.5 * Q * x0 * x0 * dt + bonus;
        step += value_grad_theta(traj.times[k], x0, cs, par) * td;
    }
    CriticState out = cs;
    out.theta = project_ball(cs.theta + a_theta * step, par.c_theta);
    if (!out.theta.allFinite())
        throw Error(ErrorKind::NonFinite, "critic update produced a non-finite parameter");
    return out;
}

double gamma_update(const CriticState& cs, const ScheduleSet& sch, long n,
                    const CriticParameterization& par, const Model& m)
{
    const double T = m.params().T;
    const double dt = sch.dt(n);
    const std::size_t K = grid_steps(T, dt);
    // both critic kinds have time-constant k1
    const double integral = critic_k1(cs, par) * static_cast<double>(K) * dt;
    const double g = resolve_c_gamma(sch, m) / (sch.b(n) * T) * integral;
    return std::clamp(g, -par.c_gamma_cap, par.c_gamma_cap);
}

GradientEstimates compute_gradients(const Trajectory& traj, const CriticState& cs,
                                    const PolicyParams& pol, const CriticParameterization& par,
                                    const Model& m)
{
    const Eigen::Index l = pol.phi.size();
    const double Q = m.params().Q;
    const double dt = traj.dt;
    const double inv_dt = 1.0 / dt;
    const double k1 = critic_k1(cs, par);
    const double bonus = cs.gamma * entropy(pol.Gamma);
    const std::size_t K = traj.steps();

    auto J = [k1](double x) { return -0.5 * k1 * x * x; };

    // Y = Gamma^{-1} sum dt w_k x_k z_k,  Z = 1/2 Gamma sum dt w_k - 1/2 sum dt w_k z_k z_k' - 1/2 gamma Gamma K dt
    double s1 = 0.0;
    Eigen::VectorXd sz = Eigen::VectorXd::Zero(l);
    Eigen::MatrixXd szz = Eigen::MatrixXd::Zero(l, l);

    if (l == 1) {
        const double phi = pol.phi(0);
        double sz0 = 0.0;
        double szz0 = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            const double x0 = traj.states[k];
            const double x1 = traj.states[k + 1];
            const double z = traj.actions(0, static_cast<Eigen::Index>(k)) - phi * x0;
            const double w = dt * ((J(x1) - J(x0)) * inv_dt - 0.5 * Q * x0 * x0 + bonus);
            s1 += w;
            sz0 += w * x0 * z;
            szz0 += w * z * z;
        }
        sz(0) = sz0;
        szz(0, 0) = szz0;
    } else {
        Eigen::VectorXd z(l);
        for (std::size_t k = 0; k < K; ++k) {
            const double x0 = traj.states[k];
            const double x1 = traj.states[k + 1];
            z.noalias() = traj.actions.col(static_cast<Eigen::Index>(k)) - pol.phi * x0;
            const double w = dt * ((J(x1) - J(x0)) * inv_dt - 0.5 * Q * x0 * x0 + bonus);
            s1 += w;
            sz.noalias() += (w * x0) * z;
            szz.noalias() += w * z * z.transpose();
        }
    }

    GradientEstimates out;
    out.Y = pol.Gamma.llt().solve(sz);
    out.Z = 0.5 * s1 * pol.Gamma - 0.5 * szz -
            0.5 * cs.gamma * static_cast<double>(K) * dt * pol.Gamma;
    if (!out.Y.allFinite() || !out.Z.allFinite())
        throw Error(ErrorKind::NonFinite, "policy-gradient sum is not finite");
    return out;
}

Eigen::VectorXd compute_Y_hat(const Trajectory& traj, const CriticState& cs, const PolicyParams& pol,
                              const CriticParameterization& par, const Model& m)
{
    return compute_gradients(traj, cs, pol, par, m).Y;
}

Eigen::MatrixXd compute_Z_hat(const Trajectory& traj, const CriticState& cs, const PolicyParams& pol,
                              const CriticParameterization& par, const Model& m)
{
    return compute_gradients(traj, cs, pol, par, m).Z;
}

Eigen::VectorXd phi_update(const PolicyParams& pol, const Eigen::VectorXd& Y, const ScheduleSet& sch,
                           const ProjectionSpec& proj, long n)
{
    return project_phi_n(pol.phi + sch.a_phi(n) * Y, sch, proj, n + 1);
}

Eigen::MatrixXd Gamma_update(const PolicyParams& pol, const Eigen::MatrixXd& Z,
                             const ScheduleSet& sch, const ProjectionSpec& proj, long n)
{
    return project_Gamma_n(pol.Gamma - sch.a_Gamma(n) * Z, sch, proj, n + 1);
}

TrainResult train(const Model& m, const LearnerConfig& cfg, const LearnerInit& init, long n_iters,
                  RngStream& rng, const RecordSink& sink, ExplorationMode mode)
{
    const auto& sch = cfg.schedules;
    const auto& proj = cfg.projection;
    const auto& par = cfg.critic;
    const Eigen::Index l = m.l();
    if (init.phi0.size() != l || init.Gamma0.rows() != l || init.Gamma0.cols() != l)
        throw Error(ErrorKind::BadDimensions, "initial policy does not match the control dimension");
    if (init.theta0.size() != par.dim())
        throw Error(ErrorKind::BadDimensions, "initial critic parameter has the wrong length");
    if (n_iters < 0)
        throw Error(ErrorKind::ConfigError, "n_iters must be non-negative");

    const double jbar_opt = jbar(phi_star(m), Eigen::MatrixXd::Zero(l, l), m);

    TrainResult result;
    result.policy = {init.phi0, init.Gamma0};
    result.critic = {init.theta0, init.gamma0};
    if (!sink)
        result.records.reserve(static_cast<std::size_t>(n_iters));

    PolicyParams& pol = result.policy;
    CriticState& cs = result.critic;
    Trajectory traj;

    auto check = [&](long n) {
        if (!cfg.assert_invariants || n == 0)
            return;
        if (!in_phi_set(pol.phi, sch, proj, n) ||
            (mode == ExplorationMode::Adaptive && !in_gamma_set(pol.Gamma, sch, proj, n)))
            throw Error(ErrorKind::NonFinite,
                        "iterate left its projection set at n = " + std::to_string(n));
        if (std::abs(cs.gamma) > par.c_gamma_cap || cs.theta.norm() > par.c_theta * (1.0 + 1e-12))
            throw Error(ErrorKind::NonFinite,
                        "critic left its projection set at n = " + std::to_string(n));
    };

    for (long n = 0; n < n_iters; ++n) {
        check(n);
        IterationRecord rec;
        rec.n = n;
        rec.phi = pol.phi;
        rec.Gamma = pol.Gamma;
        rec.gamma = cs.gamma;
        rec.theta = cs.theta;
        rec.instant_regret = jbar_opt - jbar(pol.phi, pol.Gamma, m);

        const double dt = sch.dt(n);
        bool ok = rollout_into(traj, pol, dt, m, rng) == RolloutStatus::Ok;
        GradientEstimates grad;
        CriticState next_cs = cs;
        if (ok) {
            try {
                grad = compute_gradients(traj, cs, pol, par, m);
                next_cs = pe_update(traj, cs, pol, sch.a_theta(n), par, m);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::NonFinite)
                    throw;
                ok = false;
                next_cs = cs;
            }
        }
        rec.status = ok ? IterationStatus::Ok : IterationStatus::Diverged;
        if (!ok)
            ++result.diverged;

        PolicyParams next_pol;
        next_pol.phi = ok ? phi_update(pol, grad.Y, sch, proj, n)
                          : project_phi_n(pol.phi, sch, proj, n + 1);
        if (mode == ExplorationMode::Adaptive) {
            next_cs.gamma = gamma_update(cs, sch, n, par, m);
            next_pol.Gamma = ok ? Gamma_update(pol, grad.Z, sch, proj, n)
                                : project_Gamma_n(pol.Gamma, sch, proj, n + 1);
        } else {
            next_cs.gamma = init.gamma0;
            next_pol.Gamma = init.Gamma0 / static_cast<double>(n + 2);
        }
        next_cs.theta = project_ball(next_cs.theta, par.c_theta);

        if (sink)
            sink(rec);
        else
            result.records.push_back(std::move(rec));
        pol = std::move(next_pol);
        cs = std::move(next_cs);
    }
    check(n_iters);
    return result;
}

// --- schedule validation --------------------------------------------------------

bool ScheduleReport::all_passed() const
{
    return std::all_of(conditions.begin(), conditions.end(),
                       [](const ConditionResult& c) { return c.passed; });
}

const ConditionResult* ScheduleReport::find(const std::string& name) const
{
    for (const auto& c : conditions)
        if (c.name == name)
            return &c;
    return nullptr;
}

namespace {

struct DecadeSums {
    double previous = 0.0;
    double last = 0.0;

    [[nodiscard]] double ratio() const { return previous > 0.0 ? last / previous : 0.0; }
};

/// Sums of term(n) over [N/100, N/10) and [N/10, N].
DecadeSums decade_sums(const std::function<double(long)>& term, long N)
{
    DecadeSums s;
    for (long n = N / 100; n < N / 10; ++n)
        s.previous += term(n);
    for (long n = N / 10; n <= N; ++n)
        s.last += term(n);
    return s;
}

std::string fmt(const char* label, double v)
{
    std::ostringstream os;
    os << label << v;
    return os.str();
}

} // namespace

ScheduleReport validate_schedules(const ScheduleSet& sch, long horizon_n, double W,
                                  double decade_ratio)
{
    if (horizon_n < 1000)
        throw Error(ErrorKind::ConfigError, "schedule validation needs a horizon of at least 1000");
    const long N = horizon_n;
    ScheduleReport rep;
    auto add = [&rep](std::string name, bool passed, std::string detail) {
        rep.conditions.push_back({std::move(name), passed, std::move(detail)});
    };

    // 0 < a_n <= 1 and b_n >= 1, b non-decreasing
    {
        bool a_ok = true;
        bool b_ok = true;
        long bad_a = -1;
        long bad_b = -1;
        for (long n = 0; n <= N; ++n) {
            for (const auto* a : {&sch.a_Gamma, &sch.a_phi}) {
                const double v = (*a)(n);
                if (a_ok && !(v > 0.0 && v <= 1.0)) {
                    a_ok = false;
                    bad_a = n;
                }
            }
            if (b_ok && (!(sch.b(n) >= 1.0) || (n > 0 && sch.b(n) < sch.b(n - 1)))) {
                b_ok = false;
                bad_b = n;
            }
        }
        add("step_sizes_in_unit_interval", a_ok, a_ok ? "ok" : fmt("violated at n = ", bad_a));
        add("b_at_least_one_non_decreasing", b_ok, b_ok ? "ok" : fmt("violated at n = ", bad_b));
    }

    auto divergent = [&](const char* name, const std::function<double(long)>& term) {
        const auto s = decade_sums(term, N);
        add(name, s.ratio() >= decade_ratio, fmt("decade ratio ", s.ratio()));
    };
    auto convergent = [&](const char* name, const std::function<double(long)>& term) {
        const auto s = decade_sums(term, N);
        add(name, s.ratio() < decade_ratio, fmt("decade ratio ", s.ratio()));
    };

    divergent("sum_a_diverges", [&](long n) { return sch.a_Gamma(n); });

    // q1 = q2 = q3 = q4 = 4 and c = 1. The log factors dominate any horizon a
    // loop can reach, so the term is compared with a p-series far out instead:
    // its local log-log slope between 1e17 and 1e18 must be below -1.
    {
        const auto term = [&](long n) {
            const double a = sch.a_Gamma(n);
            const double cG = sch.c_Gamma(n);
            const double cP = sch.c_phi(n);
            const double lb = std::log(sch.b(n));
            return a * a * std::pow(cG, 4) * std::pow(cP, 4) * std::pow(lb, 4) * std::exp(std::pow(cP, 4));
        };
        const double far_lo = term(100000000000000000L);
        const double far_hi = term(1000000000000000000L);
        const double slope = std::log10(far_hi / far_lo);
        const bool ok = far_hi == 0.0 || (std::isfinite(slope) && slope < -1.0);
        add("sum_a2_growth_converges", ok,
            fmt("tail slope ", slope) + fmt(", decade ratio to horizon ", decade_sums(term, N).ratio()));
    }

    {
        const double lo = sch.b(N / 100);
        const double hi = sch.b(N);
        const auto grow = [](const Sequence& s, long N_) { return s(N_) > s(N_ / 100) * (1.0 + 1e-3); };
        add("b_increases_unbounded", hi > lo * (1.0 + 1e-3),
            fmt("b(N)/b(N/100) = ", hi / lo));
        const bool c_ok = grow(sch.c_phi, N) && grow(sch.c_Gamma, N);
        add("radii_increase_unbounded", c_ok,
            fmt("c_Gamma(N) = ", sch.c_Gamma(N)) + fmt(", c_phi(N) = ", sch.c_phi(N)));
    }

    divergent("sum_a_over_b_diverges", [&](long n) { return sch.a_Gamma(n) / sch.b(n); });
    divergent("sum_a_phi_over_b_diverges", [&](long n) { return sch.a_phi(n) / sch.b(n); });
    convergent("sum_inverse_b_variation_converges",
               [&](long n) { return std::abs(1.0 / sch.b(n) - 1.0 / sch.b(n + 1)); });

    {
        bool ok_hat = true;
        bool ok_a = true;
        long bad = -1;
        for (long n = 0; n < N; ++n) {
            const double h0 = sch.a_Gamma(n) / sch.b(n);
            const double h1 = sch.a_Gamma(n + 1) / sch.b(n + 1);
            const double a0 = sch.a_Gamma(n);
            const double a1 = sch.a_Gamma(n + 1);
            if (ok_hat && h0 > h1 * (1.0 + W * h1)) {
                ok_hat = false;
                bad = n;
            }
            if (ok_a && a0 > a1 * (1.0 + W * a1)) {
                ok_a = false;
                bad = n;
            }
        }
        add("a_hat_recursion", ok_hat, ok_hat ? "ok" : fmt("violated at n = ", bad));
        add("a_recursion", ok_a, ok_a ? "ok" : fmt("violated at n = ", bad));
    }
    return rep;
}

} // namespace lqexplore
