#pragma once

#include <vector>

#include <Eigen/Dense>

#include "lqexplore/model.hpp"

namespace lqexplore {

/// Below this |a| the closed forms of f and g switch to their a = 0 limits.
inline constexpr double kZeroRateThreshold = 1e-8;

/// Optimal feedback gain  -(sum D_j D_j')^{-1} (B + sum C_j D_j).
Eigen::VectorXd phi_star(const Model& m);

/// Second-moment growth rate of the state under the gain phi:
///   2A + 2B'phi + sum_j (C_j^2 + 2 C_j D_j'phi + D_j'phi phi'D_j).
double a_of_phi(const Eigen::VectorXd& phi, const Model& m);

/// Value of the unregularized objective with zero policy covariance, as a
/// function of the growth rate a.
double f_of_a(double a, const Model& m);

/// Coefficient of sum_j D_j' Gamma D_j in the unregularized objective.
double g_of_a(double a, const Model& m);

/// Unregularized objective of the Gaussian policy N(phi x, Gamma):
///   f(a(phi)) + (sum_j D_j' Gamma D_j) g(a(phi)).
double jbar(const Eigen::VectorXd& phi, const Eigen::MatrixXd& Gamma, const Model& m);

/// jbar(phi*, 0) - jbar(phi, Gamma).
double instant_regret(const Eigen::VectorXd& phi, const Eigen::MatrixXd& Gamma, const Model& m);

/// Closed-form solution of k1' = -a k1 - Q, k1(T) = H.
class K1Solution {
public:
    K1Solution(double a, double Q, double H, double T) : a_(a), Q_(Q), H_(H), T_(T) {}

    double operator()(double t) const;
    double derivative(double t) const { return -a_ * (*this)(t) - Q_; }
    /// int_0^T k1(t) dt
    double integral() const;
    double rate() const noexcept { return a_; }

private:
    double a_, Q_, H_, T_;
};

K1Solution solve_k1(const Model& m, const Eigen::VectorXd& phi_ref);

/// k3 on a uniform grid, integrated backward from k3(T) = 0 by the trapezoid
/// rule. Linear interpolation between nodes.
class K3Solution {
public:
    K3Solution(double T, std::vector<double> values) : T_(T), values_(std::move(values)) {}

    double operator()(double t) const;
    const std::vector<double>& nodes() const noexcept { return values_; }

private:
    double T_;
    std::vector<double> values_;
};

inline constexpr int kK3Nodes = 1000;

/// k3 for the entropy-regularized optimum at temperature gamma. gamma = 0 gives
/// k3 = 0 identically.
K3Solution solve_k3(const Model& m, double gamma, int nodes = kK3Nodes);

/// Fixed point that the adaptive covariance tracks: (c_gamma / b_n) (sum D_j D_j')^{-1}.
/// Requires c_gamma > lambda_max(sum D_j D_j').
Eigen::MatrixXd gamma_star_n(double b_n, double c_gamma, const Model& m);

struct OracleSolution {
    Eigen::VectorXd phi_star;
    K1Solution k1;
    double a_star;
    double jbar_opt;
};

OracleSolution solve_oracle(const Model& m);

} // namespace lqexplore
