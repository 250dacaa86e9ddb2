#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>

#include "lqexplore/learner.hpp"

namespace lqexplore {

/// Model-free learner with a deterministic exploration schedule: gamma stays at
/// gamma0 and Gamma_n = Gamma0 / (n + 1). Uses the same rollout stream as train().
TrainResult run_fixed(const Model& m, const LearnerConfig& cfg, const LearnerInit& init,
                      long n_iters, RngStream& rng, const RecordSink& sink = {});

/// Coefficient estimates for the l = m = 1 plug-in learner.
struct ParamEstimates {
    double A_hat = 0.0;
    Eigen::VectorXd B_hat;
    std::vector<double> C_hat;
    std::vector<Eigen::VectorXd> D_hat;

    static ParamEstimates prior(double value);
};

/// Smallest admissible D_hat^2.
inline constexpr double kDiffusionFloor = 1e-6;

/// Running sums over every (x_k, u_k, dx_k, dt) seen so far. They determine both
/// least-squares fits, so re-estimation costs O(1) regardless of data size.
class RegressionStats {
public:
    /// Appends all steps of an episode (l = 1 only).
    void add(const Trajectory& traj);
    void add_step(double x, double u, double dx, double dt);

    [[nodiscard]] long steps() const noexcept { return steps_; }

    // drift: sum x^2, x u, u^2, x dx/dt, u dx/dt
    std::array<double, 5> drift{};
    // sum x^{4-j} u^j and sum dt x^{4-j} u^j, j = 0..4
    std::array<double, 5> m4{};
    std::array<double, 5> w4{};
    // for base monomials x^{2-i} u^i: sum m dx^2/dt, sum m x dx, sum m u dx
    std::array<double, 3> t_dx2{};
    std::array<double, 3> t_xdx{};
    std::array<double, 3> t_udx{};

private:
    long steps_ = 0;
};

/// Drift by least squares of dx/dt on (x, u); diffusion by least squares of the
/// squared drift residual over dt on (x^2, 2xu, u^2), giving (C^2, CD, D^2).
/// C takes the sign of the cross term; D_hat = sqrt(max(D^2, kDiffusionFloor)).
/// Throws Error(SingularRegression) for an empty or rank-deficient design.
ParamEstimates estimate_params(const RegressionStats& stats);
ParamEstimates estimate_params(const std::vector<Trajectory>& trajectories);

/// -(sum D D')^{-1} (B + sum C D) evaluated at the estimates.
Eigen::VectorXd plug_in_gain(const ParamEstimates& est);

struct ModelBasedConfig {
    Interval phi_box{-2.25, -1.1};
    double Gamma0 = 0.5;
    double dt = 0.01;
    double prior_estimate = 10.0;
};

/// Certainty-equivalence learner: gain from the current estimates, exploration
/// Gamma_n = Gamma0 / (n + 1), re-estimation from all data after each episode.
TrainResult run_model_based(const Model& m, const ModelBasedConfig& cfg, long n_iters,
                            RngStream& rng, const RecordSink& sink = {});

} // namespace lqexplore
