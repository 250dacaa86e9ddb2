#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "lqexplore/model.hpp"
#include "lqexplore/policy.hpp"
#include "lqexplore/rng.hpp"

namespace lqexplore {

/// One episode on the grid t_k = k dt, k = 0..K with K = floor(T/dt).
/// actions.col(k) is the control held over [t_k, t_{k+1}).
struct Trajectory {
    double dt = 0.0;
    std::vector<double> times;
    std::vector<double> states;
    Eigen::MatrixXd actions;

    [[nodiscard]] std::size_t steps() const noexcept { return states.empty() ? 0 : states.size() - 1; }
};

/// Number of Euler steps on [0, T] for step size dt.
std::size_t grid_steps(double T, double dt);

/// Draws u ~ N(phi x, Gamma) through a Cholesky factor of Gamma.
class GaussianSampler {
public:
    explicit GaussianSampler(const PolicyParams& pol);

    /// Writes phi x + L xi into out, consuming l standard normals.
    void sample(double x, RngStream& rng, Eigen::Ref<Eigen::VectorXd> out) const;

private:
    Eigen::VectorXd phi_;
    Eigen::MatrixXd chol_;
};

Eigen::VectorXd sample_action(double x, const PolicyParams& pol, RngStream& rng);

/// One Euler-Maruyama step of the controlled SDE; dW holds the m Brownian increments.
double euler_step(double x, const Eigen::VectorXd& u, double dt, std::span<const double> dW,
                  const Model& m);

enum class RolloutStatus { Ok, NonFinite };

/// Simulates one episode into a reusable buffer. Per step the stream yields
/// l normals for the action, then m normals for the Brownian increments.
RolloutStatus rollout_into(Trajectory& traj, const PolicyParams& pol, double dt, const Model& m,
                           RngStream& rng);

/// Throws Error(NonFinite) when the state leaves the doubles.
Trajectory rollout(const PolicyParams& pol, double dt, const Model& m, RngStream& rng);

/// Drift and diffusion loadings of the exploratory (relaxed-control) dynamics
/// under a Gaussian policy.
struct ExploratoryCoefficients {
    double drift = 0.0;
    std::vector<double> sigmas;
};

ExploratoryCoefficients exploratory_coefficients(double x, const PolicyParams& pol, const Model& m);

} // namespace lqexplore
