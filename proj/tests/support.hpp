#pragma once

// Oracles shared by the unit tests and the acceptance runner.

#include <algorithm>
#include <cmath>
#include <cstdint>

#include <Eigen/Dense>

#include "lqexplore/learner.hpp"
#include "lqexplore/model.hpp"
#include "lqexplore/oracle.hpp"
#include "lqexplore/policy.hpp"
#include "lqexplore/rng.hpp"
#include "lqexplore/sde.hpp"

namespace lqexplore::testing {

struct GradientErrors {
    double score_phi = 0.0;
    double score_gamma_inv = 0.0;
    double entropy_grad = 0.0;
    int configs = 0;
};

inline Eigen::MatrixXd random_spd(Eigen::Index l, RngStream& rng)
{
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(l, l);
    for (Eigen::Index i = 0; i < l; ++i) {
        L(i, i) = rng.uniform(0.3, 1.5);
        for (Eigen::Index j = 0; j < i; ++j)
            L(i, j) = rng.uniform(-0.5, 0.5);
    }
    return L * L.transpose();
}

// |fd - analytic| / max(1, |analytic|), worst case over every coordinate.
inline double rel_err(double fd, double an) { return std::abs(fd - an) / std::max(1.0, std::abs(an)); }

// Central differences of the log density and the entropy. Derivatives in
// Gamma^{-1} perturb the precision matrix P symmetrically, so the directional
// derivative along E_ij + E_ji equals 2 G_ij off the diagonal and G_ii on it.
inline GradientErrors check_gradients(int configs, std::uint64_t seed)
{
    RngStream rng(seed, 0x6664);
    GradientErrors out;
    out.configs = configs;
    for (int c = 0; c < configs; ++c) {
        const Eigen::Index l = 1 + c % 3;
        PolicyParams pol;
        pol.phi = Eigen::VectorXd(l);
        for (Eigen::Index i = 0; i < l; ++i)
            pol.phi(i) = rng.uniform(-3.0, 1.0);
        pol.Gamma = random_spd(l, rng);
        const double x = rng.uniform(-2.0, 2.0);
        Eigen::VectorXd u(l);
        for (Eigen::Index i = 0; i < l; ++i)
            u(i) = rng.uniform(-4.0, 4.0);

        const Eigen::VectorXd sp = score_phi(u, x, pol);
        for (Eigen::Index i = 0; i < l; ++i) {
            const double h = 1e-5 * std::max(1.0, std::abs(pol.phi(i)));
            PolicyParams hi = pol;
            PolicyParams lo = pol;
            hi.phi(i) += h;
            lo.phi(i) -= h;
            const double fd = (log_density(u, x, hi) - log_density(u, x, lo)) / (2.0 * h);
            out.score_phi = std::max(out.score_phi, rel_err(fd, sp(i)));
        }

        const Eigen::MatrixXd P = pol.Gamma.inverse();
        const Eigen::MatrixXd sg = score_gamma_inv(u, x, pol);
        const Eigen::MatrixXd eg = entropy_grad_gamma_inv(pol.Gamma);
        for (Eigen::Index i = 0; i < l; ++i) {
            for (Eigen::Index j = 0; j <= i; ++j) {
                const double h = 1e-5 * std::max(1.0, std::abs(P(i, j)));
                Eigen::MatrixXd E = Eigen::MatrixXd::Zero(l, l);
                E(i, j) = 1.0;
                E(j, i) = 1.0;
                PolicyParams hi = pol;
                PolicyParams lo = pol;
                hi.Gamma = (P + h * E).inverse();
                lo.Gamma = (P - h * E).inverse();
                const double weight = i == j ? 1.0 : 2.0;
                const double fd_score = (log_density(u, x, hi) - log_density(u, x, lo)) / (2.0 * h);
                const double fd_entropy = (entropy(hi.Gamma) - entropy(lo.Gamma)) / (2.0 * h);
                out.score_gamma_inv = std::max(out.score_gamma_inv, rel_err(fd_score, weight * sg(i, j)));
                out.entropy_grad = std::max(out.entropy_grad, rel_err(fd_entropy, weight * eg(i, j)));
            }
        }
    }
    return out;
}

struct MeanEstimate {
    double mean = 0.0;
    double se = 0.0;
};

struct IncrementSample {
    MeanEstimate Y;
    MeanEstimate Z;
    long episodes = 0;
};

// Monte-Carlo means of the policy-gradient sums at fixed parameters with the
// constant critic (l = 1).
inline IncrementSample sample_increments(const Model& m, double phi, double Gamma, double gamma,
                                         double dt, long episodes, std::uint64_t seed)
{
    const PolicyParams pol{Eigen::VectorXd::Constant(1, phi), Eigen::MatrixXd::Constant(1, 1, Gamma)};
    const CriticState cs{Eigen::VectorXd(0), gamma};
    const CriticParameterization par;
    RngStream rng(seed);
    Trajectory traj;
    double sy = 0.0, syy = 0.0, sz = 0.0, szz = 0.0;
    for (long e = 0; e < episodes; ++e) {
        if (rollout_into(traj, pol, dt, m, rng) != RolloutStatus::Ok)
            continue;
        const auto g = compute_gradients(traj, cs, pol, par, m);
        sy += g.Y(0);
        syy += g.Y(0) * g.Y(0);
        sz += g.Z(0, 0);
        szz += g.Z(0, 0) * g.Z(0, 0);
    }
    const auto n = static_cast<double>(episodes);
    IncrementSample out;
    out.episodes = episodes;
    out.Y.mean = sy / n;
    out.Y.se = std::sqrt(std::max(0.0, syy / n - out.Y.mean * out.Y.mean) / n);
    out.Z.mean = sz / n;
    out.Z.se = std::sqrt(std::max(0.0, szz / n - out.Z.mean * out.Z.mean) / n);
    return out;
}

// Mean increment of the covariance update with k1 = 1 on [0, T], l = 1:
// 1/2 T Gamma ddt Gamma - 1/2 gamma T Gamma.
inline double analytic_Z_mean(const Model& m, double Gamma, double gamma)
{
    const double T = m.params().T;
    const double ddt = m.derived().ddt(0, 0);
    return 0.5 * T * Gamma * ddt * Gamma - 0.5 * gamma * T * Gamma;
}

} // namespace lqexplore::testing
