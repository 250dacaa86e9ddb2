#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace lqexplore {

/// Coefficients of the scalar-state controlled SDE
///   dx = (A x + B'u) dt + sum_j (C_j x + D_j'u) dW_j
/// and of the reward  E[ -1/2 int Q x^2 dt - 1/2 H x(T)^2 ].
/// The control has dimension l = B.size(), the noise dimension is m = C.size().
struct ModelParams {
    double A = 0.0;
    Eigen::VectorXd B;
    std::vector<double> C;
    std::vector<Eigen::VectorXd> D;
    double Q = 1.0;
    double H = 1.0;
    double x0 = 1.0;
    double T = 1.0;

    [[nodiscard]] Eigen::Index control_dim() const noexcept { return B.size(); }
    [[nodiscard]] std::size_t noise_dim() const noexcept { return C.size(); }

    /// l = m = 1 shorthand.
    static ModelParams scalar(double A, double B, double C, double D, double Q = 1.0,
                              double H = 1.0, double x0 = 1.0, double T = 1.0);
    /// Every coefficient equal to one.
    static ModelParams unit() { return scalar(1.0, 1.0, 1.0, 1.0); }
};

/// Sums that recur throughout the oracle and the learner.
struct DerivedModel {
    Eigen::MatrixXd ddt;      ///< sum_j D_j D_j'
    Eigen::VectorXd cd;       ///< sum_j C_j D_j
    Eigen::MatrixXd ddt_inv;
    double lambda_max_ddt = 0.0;
    double lambda_min_ddt = 0.0;
};

/// Checks the standing assumptions (sum D_j D_j' > 0, Q, H >= 0, T > 0) and
/// returns the cached sums. Throws lqexplore::Error on violation.
DerivedModel validate_model(const ModelParams& p);

/// A validated model. Immutable once built.
class Model {
public:
    explicit Model(ModelParams params);

    [[nodiscard]] const ModelParams& params() const noexcept { return params_; }
    [[nodiscard]] const DerivedModel& derived() const noexcept { return derived_; }

    [[nodiscard]] Eigen::Index l() const noexcept { return params_.control_dim(); }
    [[nodiscard]] std::size_t m() const noexcept { return params_.noise_dim(); }

private:
    ModelParams params_;
    DerivedModel derived_;
};

/// Smallest admissible sum D_j^2 for randomly drawn environments.
inline constexpr double kRandomModelDiffusionFloor = 1e-3;

/// Draws A, B, C, D i.i.d. Uniform(-5, 5) (l = m = 1) with Q = H = x0 = T = 1,
/// redrawing until D^2 >= kRandomModelDiffusionFloor.
ModelParams sample_random_model(std::uint64_t rng_seed);

} // namespace lqexplore
