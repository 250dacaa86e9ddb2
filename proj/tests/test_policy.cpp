#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "lqexplore/errors.hpp"
#include "lqexplore/policy.hpp"
#include "lqexplore/rng.hpp"
#include "lqexplore/sde.hpp"
#include "support.hpp"

using namespace lqexplore;

namespace {

const double kLog2piE = std::log(2.0 * std::numbers::pi * std::numbers::e);

PolicyParams scalar_policy(double phi, double G)
{
    return {Eigen::VectorXd::Constant(1, phi), Eigen::MatrixXd::Constant(1, 1, G)};
}

} // namespace

TEST(Critic, ConstantCriticValue)
{
    const CriticParameterization par;
    const CriticState cs{Eigen::VectorXd(0), 0.7};
    EXPECT_DOUBLE_EQ(value(0.3, 2.0, cs, par), -2.0);
    EXPECT_DOUBLE_EQ(value(0.3, 0.0, cs, par), 0.0);
    EXPECT_EQ(value_grad_theta(0.1, 1.0, cs, par).size(), 0);
}

TEST(Critic, LearnedConstantValue)
{
    CriticParameterization par;
    par.kind = CriticKind::LearnedConstant;
    CriticState cs{Eigen::Vector2d(0.0, 0.4), 1.0};
    EXPECT_DOUBLE_EQ(critic_k1(cs, par), 1.0);
    EXPECT_DOUBLE_EQ(value(0.0, 3.0, cs, par), -4.5 + 0.4);
    EXPECT_DOUBLE_EQ(value(0.0, 0.0, cs, par), 0.4);

    // k1 stays inside [1/c2, c2]
    cs.theta(0) = 50.0;
    EXPECT_DOUBLE_EQ(critic_k1(cs, par), par.c2);
    cs.theta(0) = -50.0;
    EXPECT_DOUBLE_EQ(critic_k1(cs, par), 1.0 / par.c2);
}

TEST(Critic, LearnedConstantGradientMatchesDifferences)
{
    CriticParameterization par;
    par.kind = CriticKind::LearnedConstant;
    const CriticState cs{Eigen::Vector2d(0.3, -0.2), 0.0};
    const double x = 1.7;
    const Eigen::VectorXd g = value_grad_theta(0.0, x, cs, par);
    for (int i = 0; i < 2; ++i) {
        CriticState hi = cs, lo = cs;
        hi.theta(i) += 1e-6;
        lo.theta(i) -= 1e-6;
        EXPECT_NEAR((value(0, x, hi, par) - value(0, x, lo, par)) / 2e-6, g(i), 1e-6);
    }
}

TEST(Policy, EntropyExamples)
{
    EXPECT_NEAR(entropy(Eigen::MatrixXd::Constant(1, 1, 1.0)), 0.5 * kLog2piE, 1e-14);
    EXPECT_NEAR(entropy(Eigen::MatrixXd::Constant(1, 1, std::exp(2.0))), 0.5 * kLog2piE + 1.0, 1e-14);
    const double c = 0.37;
    EXPECT_NEAR(entropy(c * Eigen::MatrixXd::Identity(2, 2)), 2.0 * 0.5 * std::log(2 * std::numbers::pi * std::numbers::e * c), 1e-14);
}

TEST(Policy, EntropyRejectsIndefiniteCovariance)
{
    try {
        entropy(Eigen::MatrixXd::Constant(1, 1, -1.0));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::CholeskyFail);
    }
}

TEST(Policy, ScoreExamples)
{
    const PolicyParams pol = scalar_policy(-2.0, 1.0);
    const Eigen::VectorXd at_mean = Eigen::VectorXd::Constant(1, -2.0 * 1.5);
    EXPECT_EQ(score_phi(at_mean, 1.5, pol)(0), 0.0);
    EXPECT_EQ(score_phi(Eigen::VectorXd::Constant(1, 4.0), 0.0, pol)(0), 0.0);
    EXPECT_DOUBLE_EQ(score_gamma_inv(at_mean, 1.5, pol)(0, 0), 0.5);
    EXPECT_DOUBLE_EQ(entropy_grad_gamma_inv(Eigen::MatrixXd::Constant(1, 1, 0.8))(0, 0), -0.4);
}

TEST(Policy, ScoresMatchFiniteDifferences)
{
    const auto err = lqexplore::testing::check_gradients(100, 42);
    EXPECT_LT(err.score_phi, 1e-6);
    EXPECT_LT(err.score_gamma_inv, 1e-6);
    EXPECT_LT(err.entropy_grad, 1e-6);
}

TEST(Policy, CovarianceScoreHasZeroMean)
{
    const PolicyParams pol = scalar_policy(-2.0, 0.6);
    RngStream rng(5);
    const int n = 200000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = score_gamma_inv(sample_action(1.3, pol, rng), 1.3, pol)(0, 0);
        s += v;
        s2 += v * v;
    }
    const double mean = s / n;
    const double se = std::sqrt((s2 / n - mean * mean) / n);
    EXPECT_LT(std::abs(mean), 4.0 * se);
}

TEST(Projection, BallExamples)
{
    const Eigen::Vector2d v(3.0, 4.0);
    const Eigen::VectorXd p = project_ball(v, 1.0);
    EXPECT_NEAR(p(0), 0.6, 1e-15);
    EXPECT_NEAR(p(1), 0.8, 1e-15);
    EXPECT_EQ(project_ball(p, 1.0), p);
    const Eigen::Vector2d inside(0.1, -0.2);
    EXPECT_EQ(project_ball(inside, 1.0), Eigen::VectorXd(inside));
}

TEST(Projection, BoxClampsEachCoordinate)
{
    const Eigen::Vector3d v(-3.0, -1.5, 0.0);
    const Eigen::VectorXd p = project_box(v, -2.25, -1.1);
    EXPECT_EQ(p(0), -2.25);
    EXPECT_EQ(p(1), -1.5);
    EXPECT_EQ(p(2), -1.1);
}

TEST(Projection, GammaExamples)
{
    const auto one = [](double g) { return Eigen::MatrixXd::Constant(1, 1, g); };
    EXPECT_EQ(project_gamma(one(1.5), 0.05, 10.0, Interval{0.0, 1.0})(0, 0), 1.0);
    EXPECT_EQ(project_gamma(one(0.4), 0.05, 10.0, Interval{0.0, 1.0})(0, 0), 0.4);
    EXPECT_EQ(project_gamma(one(-0.3), 0.25, 10.0)(0, 0), 0.25);
    EXPECT_EQ(project_gamma(one(-0.3), 0.25, 10.0, Interval{0.0, 1.0})(0, 0), kGammaFloor);
    EXPECT_EQ(project_gamma(one(-0.3), 0.25, 10.0, Interval{0.0, 1.0}, 0.05)(0, 0), 0.05);
    // a floor above the interval collapses onto its upper end
    EXPECT_EQ(project_gamma(one(0.3), 0.25, 10.0, Interval{0.0, 0.01}, 0.05)(0, 0), 0.01);
}

TEST(Projection, MatrixGammaLandsInTheSet)
{
    RngStream rng(9);
    for (int i = 0; i < 200; ++i) {
        Eigen::MatrixXd G(3, 3);
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                G(r, c) = rng.uniform(-3.0, 3.0);
        G = 0.5 * (G + G.transpose());
        const double lower = 0.1;
        const double cap = 2.0;
        const Eigen::MatrixXd P = project_gamma(G, lower, cap);
        const auto [lo, hi] = eigen_range(P);
        EXPECT_GE(lo, lower - 1e-12);
        EXPECT_LE(P.norm(), cap + 1e-12);
        EXPECT_LT((P - P.transpose()).cwiseAbs().maxCoeff(), 1e-15);
        // idempotent
        EXPECT_LT((project_gamma(P, lower, cap) - P).cwiseAbs().maxCoeff(), 1e-12);
    }
}
