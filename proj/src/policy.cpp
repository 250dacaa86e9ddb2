#include "lqexplore/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "lqexplore/errors.hpp"

namespace lqexplore {

namespace {

double learned_k1(double theta0, double c2)
{
    return std::clamp(std::exp(theta0), 1.0 / c2, c2);
}

Eigen::LLT<Eigen::MatrixXd> checked_llt(const Eigen::MatrixXd& Gamma)
{
    Eigen::LLT<Eigen::MatrixXd> llt(Gamma);
    if (llt.info() != Eigen::Success)
        throw Error(ErrorKind::CholeskyFail, "policy covariance is not positive definite");
    return llt;
}

} // namespace

double critic_k1(const CriticState& cs, const CriticParameterization& par)
{
    switch (par.kind) {
    case CriticKind::ConstantOracleFree: return 1.0;
    case CriticKind::LearnedConstant: return learned_k1(cs.theta(0), par.c2);
    }
    return 1.0;
}

double critic_k3(const CriticState& cs, const CriticParameterization& par)
{
    return par.kind == CriticKind::LearnedConstant ? cs.theta(1) : 0.0;
}

double value(double /*t*/, double x, const CriticState& cs, const CriticParameterization& par)
{
    return -0.5 * critic_k1(cs, par) * x * x + critic_k3(cs, par);
}

Eigen::VectorXd value_grad_theta(double /*t*/, double x, const CriticState& cs,
                                 const CriticParameterization& par)
{
    if (par.kind == CriticKind::ConstantOracleFree)
        return {};
    Eigen::VectorXd g(2);
    const double e = std::exp(cs.theta(0));
    // the clamp is flat outside (1/c2, c2)
    const bool interior = e > 1.0 / par.c2 && e < par.c2;
    g(0) = interior ? -0.5 * e * x * x : 0.0;
    g(1) = 1.0;
    return g;
}

double entropy(const Eigen::MatrixXd& Gamma)
{
    const auto llt = checked_llt(Gamma);
    const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    const auto l = static_cast<double>(Gamma.rows());
    return 0.5 * (l * std::log(2.0 * std::numbers::pi * std::numbers::e) + log_det);
}

double log_density(const Eigen::VectorXd& u, double x, const PolicyParams& pol)
{
    const auto llt = checked_llt(pol.Gamma);
    const Eigen::VectorXd z = u - pol.phi * x;
    const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    const auto l = static_cast<double>(u.size());
    return -0.5 * (l * std::log(2.0 * std::numbers::pi) + log_det + z.dot(llt.solve(z)));
}

Eigen::VectorXd score_phi(const Eigen::VectorXd& u, double x, const PolicyParams& pol)
{
    const Eigen::VectorXd z = u - pol.phi * x;
    return pol.Gamma.llt().solve(z) * x;
}

Eigen::MatrixXd score_gamma_inv(const Eigen::VectorXd& u, double x, const PolicyParams& pol)
{
    const Eigen::VectorXd z = u - pol.phi * x;
    return 0.5 * pol.Gamma - 0.5 * z * z.transpose();
}

Eigen::MatrixXd entropy_grad_gamma_inv(const Eigen::MatrixXd& Gamma)
{
    return -0.5 * Gamma;
}

Eigen::VectorXd project_ball(const Eigen::VectorXd& v, double radius)
{
    const double norm = v.norm();
    if (norm <= radius)
        return v;
    return v * (radius / norm);
}

Eigen::VectorXd project_box(const Eigen::VectorXd& v, double lo, double hi)
{
    return v.cwiseMax(lo).cwiseMin(hi);
}

Eigen::MatrixXd project_gamma(const Eigen::MatrixXd& G, double lower, double cap,
                              const std::optional<Interval>& override_set, double floor)
{
    const Eigen::MatrixXd sym = 0.5 * (G + G.transpose());
    if (sym.rows() == 1) {
        double g = sym(0, 0);
        if (override_set)
            g = std::clamp(g, std::min(std::max(floor, override_set->lo), override_set->hi), override_set->hi);
        else
            g = std::clamp(g, lower, std::max(lower, cap));
        return Eigen::MatrixXd::Constant(1, 1, g);
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
    Eigen::VectorXd lambda = eig.eigenvalues();
    if (override_set) {
        const double lo = std::min(std::max(floor, override_set->lo), override_set->hi);
        lambda = lambda.cwiseMax(lo).cwiseMin(override_set->hi);
    } else {
        const Eigen::VectorXd v = lambda;
        lambda = v.cwiseMax(lower);
        if (lambda.norm() > cap && lower * std::sqrt(static_cast<double>(v.size())) < cap) {
            // lambda_i = max(lower, v_i / (1 + mu)) with mu chosen so that |lambda| = cap
            const auto shrunk = [&](double mu) { return (v / (1.0 + mu)).cwiseMax(lower).eval(); };
            double lo = 0.0;
            double hi = 1.0;
            while (shrunk(hi).norm() > cap)
                hi *= 2.0;
            for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
                const double mid = 0.5 * (lo + hi);
                (shrunk(mid).norm() > cap ? lo : hi) = mid;
            }
            lambda = shrunk(hi);
        } else if (lambda.norm() > cap) {
            lambda.setConstant(lower);
        }
    }
    const Eigen::MatrixXd& V = eig.eigenvectors();
    Eigen::MatrixXd out = V * lambda.asDiagonal() * V.transpose();
    return 0.5 * (out + out.transpose());
}

std::pair<double, double> eigen_range(const Eigen::MatrixXd& S)
{
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S, Eigen::EigenvaluesOnly);
    return {eig.eigenvalues().minCoeff(), eig.eigenvalues().maxCoeff()};
}

} // namespace lqexplore
