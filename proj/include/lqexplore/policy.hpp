#pragma once

#include <limits>
#include <optional>

#include <Eigen/Dense>

namespace lqexplore {

/// Gaussian feedback policy N(phi x, Gamma).
struct PolicyParams {
    Eigen::VectorXd phi;
    Eigen::MatrixXd Gamma;
};

/// Critic parameters and temperature.
struct CriticState {
    Eigen::VectorXd theta;
    double gamma = 0.0;
};

enum class CriticKind {
    /// k1 = 1, k3 = 0; no learnable parameters.
    ConstantOracleFree,
    /// k1 = clamp(exp(theta_0), 1/c2, c2), k3 = theta_1, constant in time.
    LearnedConstant,
};

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

struct CriticParameterization {
    CriticKind kind = CriticKind::ConstantOracleFree;
    double c1 = 1.0;
    double c2 = 10.0;
    double c3 = 1.0;
    double c_theta = kUnbounded;
    double c_gamma_cap = kUnbounded;

    /// Number of entries in theta.
    [[nodiscard]] Eigen::Index dim() const noexcept
    {
        return kind == CriticKind::LearnedConstant ? 2 : 0;
    }
};

/// k1(t; theta). Both supported kinds are constant in time.
double critic_k1(const CriticState& cs, const CriticParameterization& par);
/// k3(t; theta, gamma).
double critic_k3(const CriticState& cs, const CriticParameterization& par);

/// J(t, x; theta, gamma) = -1/2 k1 x^2 + k3.
double value(double t, double x, const CriticState& cs, const CriticParameterization& par);

/// dJ/dtheta at (t, x). Empty for ConstantOracleFree.
Eigen::VectorXd value_grad_theta(double t, double x, const CriticState& cs,
                                 const CriticParameterization& par);

/// Differential entropy 1/2 log((2 pi e)^l det Gamma).
double entropy(const Eigen::MatrixXd& Gamma);

/// Log density of u under N(phi x, Gamma).
double log_density(const Eigen::VectorXd& u, double x, const PolicyParams& pol);

/// d log pi / d phi = Gamma^{-1} (u - phi x) x.
Eigen::VectorXd score_phi(const Eigen::VectorXd& u, double x, const PolicyParams& pol);

/// d log pi / d Gamma^{-1} = 1/2 Gamma - 1/2 (u - phi x)(u - phi x)'.
Eigen::MatrixXd score_gamma_inv(const Eigen::VectorXd& u, double x, const PolicyParams& pol);

/// d entropy / d Gamma^{-1} = -1/2 Gamma.
Eigen::MatrixXd entropy_grad_gamma_inv(const Eigen::MatrixXd& Gamma);

/// Euclidean projection onto the closed ball of the given radius.
Eigen::VectorXd project_ball(const Eigen::VectorXd& v, double radius);

/// Coordinate-wise clamp onto [lo, hi]^l.
Eigen::VectorXd project_box(const Eigen::VectorXd& v, double lo, double hi);

struct Interval {
    double lo = 0.0;
    double hi = kUnbounded;
};

/// Eigenvalue floor used when an interval override would admit Gamma = 0.
inline constexpr double kGammaFloor = 1e-6;

/// Frobenius projection of a covariance onto {Gamma - lower I >= 0, |Gamma|_F <= cap},
/// computed on the eigenvalues. With an override interval the
/// eigenvalues are clamped to [max(floor, lo), hi] instead.
Eigen::MatrixXd project_gamma(const Eigen::MatrixXd& G, double lower, double cap,
                              const std::optional<Interval>& override_set = std::nullopt,
                              double floor = kGammaFloor);

/// Smallest and largest eigenvalue of a symmetric matrix.
std::pair<double, double> eigen_range(const Eigen::MatrixXd& S);

} // namespace lqexplore
