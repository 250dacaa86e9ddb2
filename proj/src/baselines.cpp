#include "lqexplore/baselines.hpp"

#include <cmath>

#include "lqexplore/errors.hpp"
#include "lqexplore/oracle.hpp"

namespace lqexplore {

namespace {

constexpr double kRelativeRidge = 1e-8;
constexpr double kConditionFloor = 1e-12;

template <int N>
Eigen::Matrix<double, N, 1> ridge_solve(const Eigen::Matrix<double, N, N>& G,
                                        const Eigen::Matrix<double, N, 1>& rhs, const char* what)
{
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, N, N>> eig(G, Eigen::EigenvaluesOnly);
    const double hi = eig.eigenvalues().maxCoeff();
    const double lo = eig.eigenvalues().minCoeff();
    if (!(hi > 0.0) || !(lo > kConditionFloor * hi))
        throw Error(ErrorKind::SingularRegression, std::string(what) + " design is rank deficient");
    const double ridge = kRelativeRidge * G.trace() / N;
    Eigen::Matrix<double, N, N> R = G;
    R.diagonal().array() += ridge;
    return R.llt().solve(rhs);
}

void require_scalar(const Model& m)
{
    if (m.l() != 1 || m.m() != 1)
        throw Error(ErrorKind::BadDimensions, "the plug-in baseline supports l = m = 1 only");
}

} // namespace

TrainResult run_fixed(const Model& m, const LearnerConfig& cfg, const LearnerInit& init,
                      long n_iters, RngStream& rng, const RecordSink& sink)
{
    return train(m, cfg, init, n_iters, rng, sink, ExplorationMode::Fixed);
}

ParamEstimates ParamEstimates::prior(double value)
{
    ParamEstimates e;
    e.A_hat = value;
    e.B_hat = Eigen::VectorXd::Constant(1, value);
    e.C_hat = {value};
    e.D_hat = {Eigen::VectorXd::Constant(1, value)};
    return e;
}

void RegressionStats::add_step(double x, double u, double dx, double dt)
{
    const double y = dx / dt;
    drift[0] += x * x;
    drift[1] += x * u;
    drift[2] += u * u;
    drift[3] += x * y;
    drift[4] += u * y;

    const std::array<double, 5> mono = {x * x * x * x, x * x * x * u, x * x * u * u, x * u * u * u,
                                        u * u * u * u};
    for (int j = 0; j < 5; ++j) {
        m4[j] += mono[j];
        w4[j] += dt * mono[j];
    }
    const std::array<double, 3> base = {x * x, x * u, u * u};
    for (int i = 0; i < 3; ++i) {
        t_dx2[i] += base[i] * dx * dx / dt;
        t_xdx[i] += base[i] * x * dx;
        t_udx[i] += base[i] * u * dx;
    }
    ++steps_;
}

void RegressionStats::add(const Trajectory& traj)
{
    if (traj.actions.rows() != 1)
        throw Error(ErrorKind::BadDimensions, "regression statistics need a scalar control");
    const std::size_t K = traj.steps();
    for (std::size_t k = 0; k < K; ++k)
        add_step(traj.states[k], traj.actions(0, static_cast<Eigen::Index>(k)),
                 traj.states[k + 1] - traj.states[k], traj.times[k + 1] - traj.times[k]);
}

ParamEstimates estimate_params(const RegressionStats& s)
{
    if (s.steps() == 0)
        throw Error(ErrorKind::SingularRegression, "no data to estimate from");

    Eigen::Matrix2d Gd;
    Gd << s.drift[0], s.drift[1], s.drift[1], s.drift[2];
    const Eigen::Vector2d ab = ridge_solve<2>(Gd, Eigen::Vector2d(s.drift[3], s.drift[4]), "drift");
    const double A = ab(0);
    const double B = ab(1);

    // regressors f_i x^{2-i} u^i with f = (1, 2, 1)
    const std::array<double, 3> f = {1.0, 2.0, 1.0};
    Eigen::Matrix3d Gv;
    Eigen::Vector3d rhs;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j)
            Gv(i, j) = f[i] * f[j] * s.m4[i + j];
        // residual^2 / dt = dx^2/dt - 2 dx (A x + B u) + (A x + B u)^2 dt
        rhs(i) = f[i] * (s.t_dx2[i] - 2.0 * A * s.t_xdx[i] - 2.0 * B * s.t_udx[i] +
                         A * A * s.w4[i] + 2.0 * A * B * s.w4[i + 1] + B * B * s.w4[i + 2]);
    }
    const Eigen::Vector3d v = ridge_solve<3>(Gv, rhs, "diffusion");
    const double c2 = v(0);
    const double cd = v(1);
    const double d2 = v(2);

    ParamEstimates e;
    e.A_hat = A;
    e.B_hat = Eigen::VectorXd::Constant(1, B);
    e.C_hat = {(cd < 0.0 ? -1.0 : 1.0) * std::sqrt(std::max(c2, 0.0))};
    e.D_hat = {Eigen::VectorXd::Constant(1, std::sqrt(std::max(d2, kDiffusionFloor)))};
    return e;
}

ParamEstimates estimate_params(const std::vector<Trajectory>& trajectories)
{
    RegressionStats s;
    for (const auto& t : trajectories)
        s.add(t);
    return estimate_params(s);
}

Eigen::VectorXd plug_in_gain(const ParamEstimates& est)
{
    const Eigen::Index l = est.B_hat.size();
    Eigen::MatrixXd ddt = Eigen::MatrixXd::Zero(l, l);
    Eigen::VectorXd rhs = est.B_hat;
    for (std::size_t j = 0; j < est.D_hat.size(); ++j) {
        ddt += est.D_hat[j] * est.D_hat[j].transpose();
        rhs += est.C_hat[j] * est.D_hat[j];
    }
    return -ddt.ldlt().solve(rhs);
}

TrainResult run_model_based(const Model& m, const ModelBasedConfig& cfg, long n_iters,
                            RngStream& rng, const RecordSink& sink)
{
    require_scalar(m);
    if (!(cfg.Gamma0 > 0.0) || !(cfg.dt > 0.0))
        throw Error(ErrorKind::ConfigError, "model-based baseline needs Gamma0 > 0 and dt > 0");
    const double jbar_opt = jbar(phi_star(m), Eigen::MatrixXd::Zero(1, 1), m);

    TrainResult result;
    if (!sink)
        result.records.reserve(static_cast<std::size_t>(std::max(0L, n_iters)));
    ParamEstimates est = ParamEstimates::prior(cfg.prior_estimate);
    RegressionStats stats;
    Trajectory traj;

    PolicyParams pol;
    pol.phi = project_box(plug_in_gain(est), cfg.phi_box.lo, cfg.phi_box.hi);
    pol.Gamma = Eigen::MatrixXd::Constant(1, 1, cfg.Gamma0);

    for (long n = 0; n < n_iters; ++n) {
        pol.phi = project_box(plug_in_gain(est), cfg.phi_box.lo, cfg.phi_box.hi);
        pol.Gamma(0, 0) = cfg.Gamma0 / static_cast<double>(n + 1);

        IterationRecord rec;
        rec.n = n;
        rec.phi = pol.phi;
        rec.Gamma = pol.Gamma;
        rec.instant_regret = jbar_opt - jbar(pol.phi, pol.Gamma, m);

        const bool ok = rollout_into(traj, pol, cfg.dt, m, rng) == RolloutStatus::Ok;
        rec.status = ok ? IterationStatus::Ok : IterationStatus::Diverged;
        if (ok) {
            stats.add(traj);
            try {
                est = estimate_params(stats);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::SingularRegression)
                    throw;
            }
        } else {
            ++result.diverged;
        }
        if (sink)
            sink(rec);
        else
            result.records.push_back(std::move(rec));
    }
    result.policy = {project_box(plug_in_gain(est), cfg.phi_box.lo, cfg.phi_box.hi),
                     Eigen::MatrixXd::Constant(1, 1, cfg.Gamma0 / static_cast<double>(n_iters + 1))};
    result.critic = {Eigen::VectorXd(), 0.0};
    return result;
}

} // namespace lqexplore
