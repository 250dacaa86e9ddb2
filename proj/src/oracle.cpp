#include "lqexplore/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "lqexplore/errors.hpp"

namespace lqexplore {

Eigen::VectorXd phi_star(const Model& m)
{
    const auto& dm = m.derived();
    return -dm.ddt.llt().solve(m.params().B + dm.cd);
}

double a_of_phi(const Eigen::VectorXd& phi, const Model& m)
{
    const auto& p = m.params();
    double a = 2.0 * p.A + 2.0 * p.B.dot(phi);
    for (std::size_t j = 0; j < p.C.size(); ++j) {
        const double dphi = p.D[j].dot(phi);
        a += p.C[j] * p.C[j] + 2.0 * p.C[j] * dphi + dphi * dphi;
    }
    return a;
}

double f_of_a(double a, const Model& m)
{
    const auto& p = m.params();
    const double x02 = p.x0 * p.x0;
    if (std::abs(a) < kZeroRateThreshold)
        return x02 * (-p.H - p.Q * p.T) / 2.0;
    // (Q - e^{aT} Q - H e^{aT} a) / (2a), with expm1 for the Q part
    const double growth = std::expm1(a * p.T);
    return -0.5 * x02 * (p.Q * growth / a + p.H * std::exp(a * p.T));
}

double g_of_a(double a, const Model& m)
{
    const auto& p = m.params();
    if (std::abs(a) < kZeroRateThreshold)
        return p.T * (-2.0 * p.H - p.Q * p.T) / 4.0;
    // (Q T a + Q + H a - e^{aT} Q - H e^{aT} a) / (2 a^2)
    const double growth = std::expm1(a * p.T);
    return (p.Q * (a * p.T - growth) - p.H * a * growth) / (2.0 * a * a);
}

double jbar(const Eigen::VectorXd& phi, const Eigen::MatrixXd& Gamma, const Model& m)
{
    const auto& p = m.params();
    const double a = a_of_phi(phi, m);
    double trace_term = 0.0;
    for (const auto& d : p.D)
        trace_term += d.dot(Gamma * d);
    return f_of_a(a, m) + trace_term * g_of_a(a, m);
}

double instant_regret(const Eigen::VectorXd& phi, const Eigen::MatrixXd& Gamma, const Model& m)
{
    const Eigen::VectorXd ps = phi_star(m);
    const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(m.l(), m.l());
    return jbar(ps, zero, m) - jbar(phi, Gamma, m);
}

double K1Solution::operator()(double t) const
{
    const double tau = T_ - t;
    if (std::abs(a_) < kZeroRateThreshold)
        return H_ + Q_ * tau;
    return H_ * std::exp(a_ * tau) + Q_ * std::expm1(a_ * tau) / a_;
}

double K1Solution::integral() const
{
    // int_0^T [H e^{a s} + Q (e^{a s} - 1)/a] ds
    if (std::abs(a_) < kZeroRateThreshold)
        return H_ * T_ + Q_ * T_ * T_ / 2.0;
    const double e = std::expm1(a_ * T_);
    return H_ * e / a_ + Q_ * (e / a_ - T_) / a_;
}

K1Solution solve_k1(const Model& m, const Eigen::VectorXd& phi_ref)
{
    const auto& p = m.params();
    return {a_of_phi(phi_ref, m), p.Q, p.H, p.T};
}

double K3Solution::operator()(double t) const
{
    const auto n = static_cast<double>(values_.size() - 1);
    const double s = std::clamp(t / T_, 0.0, 1.0) * n;
    const auto i = std::min(static_cast<std::size_t>(s), values_.size() - 2);
    const double w = s - static_cast<double>(i);
    return (1.0 - w) * values_[i] + w * values_[i + 1];
}

K3Solution solve_k3(const Model& m, double gamma, int nodes)
{
    const auto& p = m.params();
    const auto& dm = m.derived();
    std::vector<double> values(static_cast<std::size_t>(nodes), 0.0);
    if (gamma == 0.0)
        return {p.T, std::move(values)};

    const auto l = static_cast<double>(m.l());
    const double log_det_ddt = std::log(dm.ddt.determinant());
    const K1Solution k1 = solve_k1(m, phi_star(m));
    // With Sigma = (gamma / k1) ddt^{-1}:  sum_j D_j' Sigma D_j = l gamma / k1 and
    // log det Sigma = l log(gamma / k1) - log det ddt.
    auto rhs = [&](double t) {
        const double k = k1(t);
        const double log_det_sigma = l * std::log(gamma / k) - log_det_ddt;
        return 0.5 * k * (l * gamma / k) -
               0.5 * gamma * (l * std::log(2.0 * std::numbers::pi * std::numbers::e) + log_det_sigma);
    };
    const double h = p.T / static_cast<double>(nodes - 1);
    for (int i = nodes - 2; i >= 0; --i) {
        const double t0 = h * i;
        const double t1 = h * (i + 1);
        values[static_cast<std::size_t>(i)] =
            values[static_cast<std::size_t>(i) + 1] - 0.5 * h * (rhs(t0) + rhs(t1));
    }
    return {p.T, std::move(values)};
}

Eigen::MatrixXd gamma_star_n(double b_n, double c_gamma, const Model& m)
{
    const auto& dm = m.derived();
    if (!(c_gamma > dm.lambda_max_ddt))
        throw Error(ErrorKind::BadCGamma, "c_gamma = " + std::to_string(c_gamma) +
                                              " must exceed lambda_max(sum D_j D_j') = " +
                                              std::to_string(dm.lambda_max_ddt));
    return (c_gamma / b_n) * dm.ddt_inv;
}

OracleSolution solve_oracle(const Model& m)
{
    Eigen::VectorXd ps = phi_star(m);
    const double a = a_of_phi(ps, m);
    const double j = jbar(ps, Eigen::MatrixXd::Zero(m.l(), m.l()), m);
    K1Solution k1 = solve_k1(m, ps);
    return {std::move(ps), k1, a, j};
}

} // namespace lqexplore
