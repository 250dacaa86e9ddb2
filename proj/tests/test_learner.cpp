#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "lqexplore/baselines.hpp"
#include "lqexplore/errors.hpp"
#include "lqexplore/learner.hpp"
#include "lqexplore/oracle.hpp"
#include "support.hpp"

using namespace lqexplore;

namespace {

Eigen::VectorXd vec1(double v) { return Eigen::VectorXd::Constant(1, v); }
Eigen::MatrixXd mat1(double v) { return Eigen::MatrixXd::Constant(1, 1, v); }

PolicyParams scalar_policy(double phi, double G) { return {vec1(phi), mat1(G)}; }

double median(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

TEST(Schedules, AppendixValues)
{
    const auto cfg = appendix_config();
    const auto& s = cfg.schedules;
    EXPECT_DOUBLE_EQ(s.a_phi(0), 0.05);
    EXPECT_DOUBLE_EQ(s.a_Gamma(0), 1.0);
    EXPECT_NEAR(s.a_phi(15), 0.05 / 8.0, 1e-16);
    EXPECT_DOUBLE_EQ(s.b(0), 20.0);
    EXPECT_NEAR(s.b(15), 40.0, 1e-12);
    EXPECT_EQ(s.dt(12345), 0.01);
}

TEST(Schedules, TheoremTimeStepShrinks)
{
    const auto s = theorem_schedules(1.0, 1.0, 1.0);
    EXPECT_DOUBLE_EQ(s.dt(0), 1.0);
    EXPECT_NEAR(s.dt(255), std::pow(256.0, -0.625), 1e-15);
    EXPECT_THROW(theorem_schedules(0.0, 1.0, 1.0), Error);
}

TEST(GammaUpdate, ConstantCriticGivesCGammaOverB)
{
    const Model m(ModelParams::unit());
    const CriticParameterization par;
    const CriticState cs{Eigen::VectorXd(0), 0.3};
    const auto cfg = appendix_config();
    for (long n : {0L, 1L, 99L, 10000L})
        EXPECT_NEAR(gamma_update(cs, cfg.schedules, n, par, m), 2.0 / cfg.schedules.b(n), 1e-12);

    ScheduleParams sp;
    sp.dt_mode = DtMode::Fixed;
    const auto unit_b = make_schedules(sp, 1.0);
    EXPECT_NEAR(gamma_update(cs, unit_b, 0, par, m), 2.0, 1e-12);
    EXPECT_LT(gamma_update(cs, unit_b, 100000000, par, m), 0.03);
}

TEST(GammaUpdate, CapClampsTheTemperature)
{
    const Model m(ModelParams::unit());
    CriticParameterization par;
    par.c_gamma_cap = 0.5;
    ScheduleParams sp;
    sp.dt_mode = DtMode::Fixed;
    EXPECT_DOUBLE_EQ(gamma_update({Eigen::VectorXd(0), 0.0}, make_schedules(sp, 1.0), 0, par, m), 0.5);
}

TEST(CriticUpdate, ConstantCriticAndZeroStepAreNoOps)
{
    const Model m(ModelParams::unit());
    RngStream rng(1);
    const auto pol = scalar_policy(-2.0, 0.2);
    const Trajectory t = rollout(pol, 0.01, m, rng);
    const CriticParameterization constant;
    const CriticState cs0{Eigen::VectorXd(0), 0.5};
    EXPECT_EQ(pe_update(t, cs0, pol, 0.3, constant, m).theta.size(), 0);

    CriticParameterization learned;
    learned.kind = CriticKind::LearnedConstant;
    const CriticState cs1{Eigen::Vector2d(0.2, -0.1), 0.5};
    EXPECT_EQ(pe_update(t, cs1, pol, 0.0, learned, m).theta, cs1.theta);
}

TEST(CriticUpdate, LearnedScaleDriftsTowardTruth)
{
    // a(phi*) = -2.01 and Q = 2.01, so k1 = 1 (theta_0 = 0) solves the
    // critic equation at phi* = -0.1; small diffusion keeps x^4 moments tame
    const Model m(ModelParams::scalar(-1.0, 0.1, 0.0, 1.0, 2.01, 1.0));
    ASSERT_NEAR(a_of_phi(vec1(-0.1), m), -2.01, 1e-12);
    const auto pol = scalar_policy(-0.1, 1e-4);
    CriticParameterization par;
    par.kind = CriticKind::LearnedConstant;
    for (double start : {0.5, -0.5}) {
        RngStream rng(2);
        const CriticState cs{Eigen::Vector2d(start, 0.0), 0.0};
        Trajectory t;
        double drift = 0.0;
        for (int e = 0; e < 10000; ++e) {
            ASSERT_EQ(rollout_into(t, pol, 0.01, m, rng), RolloutStatus::Ok);
            drift += pe_update(t, cs, pol, 1.0, par, m).theta(0) - start;
        }
        EXPECT_LT(drift * start, 0.0) << "start " << start;
    }
}

TEST(Gradients, SameSeedSameEstimates)
{
    // near-deterministic drift: tiny diffusion, gamma = 0
    const Model m(ModelParams::scalar(0.5, 1.0, 0.0, 1e-6));
    const auto pol = scalar_policy(-1.0, 0.3);
    const CriticState cs{Eigen::VectorXd(0), 0.0};
    const CriticParameterization par;
    RngStream a(3), b(3);
    const auto ya = compute_Y_hat(rollout(pol, 0.01, m, a), cs, pol, par, m);
    const auto yb = compute_Y_hat(rollout(pol, 0.01, m, b), cs, pol, par, m);
    EXPECT_TRUE(ya.allFinite());
    EXPECT_EQ(ya, yb);
}

TEST(Gradients, FusedSumsMatchTheMatrixPath)
{
    // l = 2 with a diagonal covariance and gamma = 0: the first coordinate of the
    // general branch must equal the scalar fast path on the same data
    ModelParams p;
    p.A = 0.2;
    p.B = Eigen::Vector2d(1.0, 0.0);
    p.C = {0.5, 0.0};
    p.D = {Eigen::Vector2d(1.0, 0.0), Eigen::Vector2d(0.0, 1.0)};
    const Model m2(p);
    const Model m1(ModelParams::scalar(0.2, 1.0, 0.5, 1.0));
    PolicyParams pol2{Eigen::Vector2d(-1.2, 0.3), Eigen::Vector2d(0.4, 0.7).asDiagonal()};
    RngStream rng(4);
    const Trajectory t = rollout(pol2, 0.01, m2, rng);
    const CriticState cs{Eigen::VectorXd(0), 0.0};
    const CriticParameterization par;
    const auto g2 = compute_gradients(t, cs, pol2, par, m2);
    Trajectory t1 = t;
    t1.actions = t.actions.topRows(1);
    const auto g1 = compute_gradients(t1, cs, scalar_policy(-1.2, 0.4), par, m1);
    EXPECT_NEAR(g2.Y(0), g1.Y(0), 1e-9 * (1.0 + std::abs(g1.Y(0))));
    EXPECT_NEAR(g2.Z(0, 0), g1.Z(0, 0), 1e-9 * (1.0 + std::abs(g1.Z(0, 0))));
}

TEST(Gradients, MeanIncrementsMatchAnalyticForms)
{
    const Model m(ModelParams::unit());
    const double phi = -1.5, G = 0.5, gamma = 0.4;
    const auto s = lqexplore::testing::sample_increments(m, phi, G, gamma, 0.01, 40000, 5);
    EXPECT_NEAR(s.Z.mean, lqexplore::testing::analytic_Z_mean(m, G, gamma), 4.0 * s.Z.se);

    // E Y = -D^2 (phi - phi*) int_0^T E x^2, with m' = a m + D^2 G
    const double a = a_of_phi(vec1(phi), m);
    const double m_inf = -G / a;
    const double int_m = m_inf + (1.0 - m_inf) * std::expm1(a) / a;
    EXPECT_NEAR(s.Y.mean, -(phi + 2.0) * int_m, 4.0 * s.Y.se + 0.01 * std::abs(int_m));

    const auto at_opt = lqexplore::testing::sample_increments(m, -2.0, G, gamma, 0.01, 40000, 6);
    EXPECT_LT(std::abs(at_opt.Y.mean), 4.0 * at_opt.Y.se);
}

TEST(Updates, TrivialCases)
{
    const auto cfg = appendix_config();
    const auto& s = cfg.schedules;
    const auto pol = scalar_policy(-1.5, 0.4);
    EXPECT_EQ(phi_update(pol, vec1(0.0), s, cfg.projection, 3)(0), -1.5);
    EXPECT_EQ(phi_update(scalar_policy(-3.0, 0.4), vec1(0.0), s, cfg.projection, 3)(0), -2.25);
    EXPECT_EQ(phi_update(scalar_policy(0.0, 0.4), vec1(0.0), s, cfg.projection, 3)(0), -1.1);
    EXPECT_EQ(Gamma_update(pol, mat1(0.0), s, cfg.projection, 3)(0, 0), 0.4);

    ScheduleParams sp;
    sp.a_phi_scale = 0.0;
    sp.a_Gamma_scale = 0.0;
    sp.dt_mode = DtMode::Fixed;
    const auto frozen = make_schedules(sp, 1.0);
    ProjectionSpec free;
    free.phi_box = Interval{-10, 10};
    free.gamma_interval = Interval{0, 10};
    free.band_floor = false;
    EXPECT_EQ(phi_update(pol, vec1(123.0), frozen, free, 0)(0), -1.5);
    EXPECT_EQ(Gamma_update(pol, mat1(-7.0), frozen, free, 0)(0, 0), 0.4);
}

TEST(Updates, BandFloorKeepsGammaAboveInverseB)
{
    const auto cfg = appendix_config();
    const auto& s = cfg.schedules;
    const auto pol = scalar_policy(-1.5, 0.4);
    // a huge positive Z drives Gamma to the floor of the next set
    EXPECT_DOUBLE_EQ(Gamma_update(pol, mat1(100.0), s, cfg.projection, 0)(0, 0), 1.0 / s.b(1));
    ProjectionSpec plain = cfg.projection;
    plain.band_floor = false;
    EXPECT_DOUBLE_EQ(Gamma_update(pol, mat1(100.0), s, plain, 0)(0, 0), kGammaFloor);
    EXPECT_TRUE(in_gamma_set(mat1(1.0 / s.b(7)), s, cfg.projection, 7));
    EXPECT_FALSE(in_gamma_set(mat1(0.5 / s.b(7)), s, cfg.projection, 7));
}

TEST(Train, ZeroIterationsReturnsInit)
{
    const Model m(ModelParams::unit());
    RngStream rng(1);
    const auto res = train(m, appendix_config(), appendix_init(), 0, rng);
    EXPECT_TRUE(res.records.empty());
    EXPECT_EQ(res.policy.phi(0), -1.1);
    EXPECT_EQ(res.policy.Gamma(0, 0), 0.5);
    EXPECT_EQ(res.critic.gamma, 2.0);
    EXPECT_EQ(rng.draws(), 0u);
}

TEST(Train, RejectsMismatchedInit)
{
    const Model m(ModelParams::unit());
    RngStream rng(1);
    auto init = appendix_init();
    init.phi0 = Eigen::Vector2d(-1, -1);
    EXPECT_THROW(train(m, appendix_config(), init, 3, rng), Error);
}

TEST(Train, SameSeedSameRecords)
{
    const Model m(ModelParams::unit());
    RngStream a(21), b(21);
    const auto ra = train(m, appendix_config(), appendix_init(), 300, a);
    const auto rb = train(m, appendix_config(), appendix_init(), 300, b);
    ASSERT_EQ(ra.records.size(), 300u);
    for (std::size_t i = 0; i < ra.records.size(); ++i) {
        EXPECT_EQ(ra.records[i].phi, rb.records[i].phi);
        EXPECT_EQ(ra.records[i].Gamma, rb.records[i].Gamma);
        EXPECT_EQ(ra.records[i].instant_regret, rb.records[i].instant_regret);
    }
}

TEST(Train, FirstIterationUsesSimultaneousUpdates)
{
    const Model m(ModelParams::unit());
    const auto cfg = appendix_config();
    const auto init = appendix_init();
    RngStream rng(33);
    const auto res = train(m, cfg, init, 1, rng);

    RngStream replay(33);
    const PolicyParams pol{init.phi0, init.Gamma0};
    const CriticState cs{init.theta0, init.gamma0};
    const Trajectory t = rollout(pol, 0.01, m, replay);
    const auto g = compute_gradients(t, cs, pol, cfg.critic, m);
    EXPECT_EQ(res.policy.phi, phi_update(pol, g.Y, cfg.schedules, cfg.projection, 0));
    EXPECT_EQ(res.policy.Gamma, Gamma_update(pol, g.Z, cfg.schedules, cfg.projection, 0));
    EXPECT_EQ(res.critic.gamma, gamma_update(cs, cfg.schedules, 0, cfg.critic, m));
    EXPECT_EQ(res.records[0].instant_regret, instant_regret(init.phi0, init.Gamma0, m));
}

TEST(Train, IteratesStayInTheirSets)
{
    const Model m(ModelParams::unit());
    auto cfg = appendix_config();
    cfg.assert_invariants = true;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        RngStream rng(seed);
        EXPECT_NO_THROW(train(m, cfg, appendix_init(), 3000, rng));
    }
    auto theorem = LearnerConfig{theorem_schedules(1.0, 1.0, 1.0), {}, {}, true};
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        RngStream rng(seed);
        EXPECT_NO_THROW(train(m, theorem, appendix_init(), 2000, rng));
    }
}

TEST(Train, TemperatureRespectsItsBound)
{
    const Model m(ModelParams::unit());
    const auto cfg = appendix_config();
    RngStream rng(8);
    const auto res = train(m, cfg, appendix_init(), 2000, rng);
    const double c2 = cfg.critic.c2;
    for (const auto& r : res.records)
        if (r.n > 0)
            EXPECT_LE(r.gamma, 2.0 * c2 / cfg.schedules.b(r.n - 1) + 1e-12);
}

TEST(Train, GammaTracksItsFixedPoint)
{
    const Model m(ModelParams::unit());
    const auto sch = theorem_schedules(1.0, 1.0, 1.0);
    const LearnerConfig cfg{sch, {}, {}, false};
    auto init = appendix_init();
    init.Gamma0 = mat1(0.05);
    const double start_gap = std::abs(0.05 - gamma_star_n(sch.b(0), 2.0, m)(0, 0));
    std::vector<double> gaps;
    const long N = 2000;
    for (std::uint64_t seed = 1; seed <= 15; ++seed) {
        RngStream rng(seed);
        const auto res = train(m, cfg, init, N, rng);
        gaps.push_back(std::abs(res.policy.Gamma(0, 0) - gamma_star_n(sch.b(N), 2.0, m)(0, 0)));
    }
    EXPECT_LT(median(gaps), start_gap);
}

TEST(Train, FixedModeFollowsDeterministicSchedule)
{
    const Model m(ModelParams::unit());
    RngStream rng(5);
    const auto res = run_fixed(m, appendix_config(), appendix_init(), 500, rng);
    for (const auto& r : res.records) {
        EXPECT_EQ(r.Gamma(0, 0), 0.5 / static_cast<double>(r.n + 1));
        EXPECT_EQ(r.gamma, 2.0);
    }
}

TEST(Train, AdaptiveAndFixedSharePairedNoise)
{
    const Model m(ModelParams::unit());
    RngStream a(77), b(77);
    const auto ra = train(m, appendix_config(), appendix_init(), 50, a);
    const auto rb = run_fixed(m, appendix_config(), appendix_init(), 50, b);
    EXPECT_EQ(a.draws(), b.draws());
    // identical first policy, so identical first episode and first phi step
    EXPECT_EQ(ra.records[1].phi, rb.records[1].phi);
}

TEST(Train, DivergedEpisodesAreRecordedAndSkipped)
{
    const Model m(ModelParams::scalar(5.0, 5.0, 5.0, 5.0));
    auto cfg = appendix_config();
    cfg.projection.phi_box = Interval{-100.0, 100.0};
    cfg.projection.gamma_interval = Interval{0.0, 100.0};
    auto init = appendix_init();
    init.phi0 = vec1(100.0);
    init.Gamma0 = mat1(50.0);
    RngStream rng(1);
    const auto res = train(m, cfg, init, 5, rng);
    EXPECT_EQ(res.diverged, 5);
    for (const auto& r : res.records)
        EXPECT_EQ(r.status, IterationStatus::Diverged);
    EXPECT_EQ(res.policy.phi(0), 100.0);
}
