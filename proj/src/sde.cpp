#include "lqexplore/sde.hpp"

#include <cmath>
#include <string>

#include "lqexplore/errors.hpp"

namespace lqexplore {

std::size_t grid_steps(double T, double dt)
{
    if (!(dt > 0.0))
        throw Error(ErrorKind::ConfigError, "time step must be positive");
    const double ratio = std::floor(T / dt + 1e-9);
    return ratio < 1.0 ? 1 : static_cast<std::size_t>(ratio);
}

GaussianSampler::GaussianSampler(const PolicyParams& pol) : phi_(pol.phi)
{
    Eigen::LLT<Eigen::MatrixXd> llt(pol.Gamma);
    if (llt.info() != Eigen::Success || !pol.Gamma.allFinite())
        throw Error(ErrorKind::CholeskyFail, "policy covariance is not positive definite");
    chol_ = llt.matrixL();
}

void GaussianSampler::sample(double x, RngStream& rng, Eigen::Ref<Eigen::VectorXd> out) const
{
    const Eigen::Index l = phi_.size();
    for (Eigen::Index i = 0; i < l; ++i)
        out(i) = phi_(i) * x;
    for (Eigen::Index j = 0; j < l; ++j) {
        const double xi = rng.normal();
        for (Eigen::Index i = j; i < l; ++i)
            out(i) += chol_(i, j) * xi;
    }
}

Eigen::VectorXd sample_action(double x, const PolicyParams& pol, RngStream& rng)
{
    Eigen::VectorXd u(pol.phi.size());
    GaussianSampler(pol).sample(x, rng, u);
    return u;
}

double euler_step(double x, const Eigen::VectorXd& u, double dt, std::span<const double> dW,
                  const Model& m)
{
    const auto& p = m.params();
    double next = x + (p.A * x + p.B.dot(u)) * dt;
    for (std::size_t j = 0; j < p.C.size(); ++j)
        next += (p.C[j] * x + p.D[j].dot(u)) * dW[j];
    return next;
}

RolloutStatus rollout_into(Trajectory& traj, const PolicyParams& pol, double dt, const Model& m,
                           RngStream& rng)
{
    const auto& p = m.params();
    const std::size_t K = grid_steps(p.T, dt);
    const Eigen::Index l = m.l();
    const std::size_t n_noise = m.m();
    const GaussianSampler sampler(pol);

    traj.dt = dt;
    traj.times.resize(K + 1);
    traj.states.resize(K + 1);
    if (traj.actions.rows() != l || traj.actions.cols() != static_cast<Eigen::Index>(K))
        traj.actions.resize(l, static_cast<Eigen::Index>(K));

    const double sqrt_dt = std::sqrt(dt);
    double x = p.x0;
    traj.times[0] = 0.0;
    traj.states[0] = x;
    for (std::size_t k = 0; k < K; ++k) {
        auto u = traj.actions.col(static_cast<Eigen::Index>(k));
        sampler.sample(x, rng, u);
        double next = x + (p.A * x + p.B.dot(u)) * dt;
        for (std::size_t j = 0; j < n_noise; ++j)
            next += (p.C[j] * x + p.D[j].dot(u)) * (sqrt_dt * rng.normal());
        x = next;
        traj.times[k + 1] = static_cast<double>(k + 1) * dt;
        traj.states[k + 1] = x;
        if (!std::isfinite(x)) {
            // keep the draw count per episode fixed so paired runs stay aligned
            for (std::size_t r = k + 1; r < K; ++r)
                for (Eigen::Index i = 0; i < l + static_cast<Eigen::Index>(n_noise); ++i)
                    rng.normal();
            return RolloutStatus::NonFinite;
        }
    }
    return RolloutStatus::Ok;
}

Trajectory rollout(const PolicyParams& pol, double dt, const Model& m, RngStream& rng)
{
    Trajectory traj;
    if (rollout_into(traj, pol, dt, m, rng) != RolloutStatus::Ok)
        throw Error(ErrorKind::NonFinite, "state diverged during rollout (dt = " +
                                              std::to_string(dt) + ")");
    return traj;
}

ExploratoryCoefficients exploratory_coefficients(double x, const PolicyParams& pol, const Model& m)
{
    const auto& p = m.params();
    ExploratoryCoefficients out;
    out.drift = p.A * x + p.B.dot(pol.phi) * x;
    out.sigmas.reserve(p.C.size());
    for (std::size_t j = 0; j < p.C.size(); ++j) {
        const double mean = p.C[j] * x + p.D[j].dot(pol.phi) * x;
        out.sigmas.push_back(std::sqrt(mean * mean + p.D[j].dot(pol.Gamma * p.D[j])));
    }
    return out;
}

} // namespace lqexplore
