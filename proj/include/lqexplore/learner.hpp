#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lqexplore/model.hpp"
#include "lqexplore/policy.hpp"
#include "lqexplore/rng.hpp"
#include "lqexplore/sde.hpp"

namespace lqexplore {

/// A deterministic sequence indexed by the iteration counter n >= 0.
using Sequence = std::function<double(long)>;

enum class DtMode { TheoremSchedule, Fixed };

/// Step sizes, exploration floor b_n, projection radii and time steps.
struct ScheduleSet {
    Sequence a_phi;
    Sequence a_Gamma;
    Sequence a_theta;
    Sequence b;
    Sequence c_phi;
    Sequence c_Gamma;
    Sequence dt;
    double alpha = 1.0;
    double beta = 1.0;
    /// Temperature scale; unset means 2 lambda_max(sum D_j D_j').
    std::optional<double> c_gamma;
    DtMode dt_mode = DtMode::Fixed;
};

/// Parametric family behind every preset:
///   a_phi(n)   = a_phi_scale   alpha^{3/4} / (n + beta)^{3/4}
///   a_Gamma(n) = a_Gamma_scale alpha^{3/4} / (n + beta)^{3/4}
///   b(n)       = b_scale max(1, (n + beta)^{1/4} / alpha^{1/4})
///   c_phi(n)   = max(1, (log log n)^{1/6}),  c_Gamma(n) = max(1, log n)
///   dt(n)      = T (n + 1)^{-5/8}  or a fixed value.
struct ScheduleParams {
    double alpha = 1.0;
    double beta = 1.0;
    double a_phi_scale = 1.0;
    double a_Gamma_scale = 1.0;
    double a_theta_scale = 0.0;
    double b_scale = 1.0;
    std::optional<double> c_gamma;
    DtMode dt_mode = DtMode::TheoremSchedule;
    double dt = 0.01;
};

ScheduleSet make_schedules(const ScheduleParams& sp, double T);

/// Schedules from the convergence theorem (all scales one, shrinking time step).
ScheduleSet theorem_schedules(double alpha, double beta, double T);

/// Projection sets. Without a box the mean gain lives in the ball of radius
/// c_phi(n); without an interval the covariance lives in
/// {Gamma - I/b_n >= 0, |Gamma| <= c_Gamma(n)}.
struct ProjectionSpec {
    std::optional<Interval> phi_box;
    std::optional<Interval> gamma_interval;
    double gamma_floor = kGammaFloor;
    /// With an interval override, also keep Gamma >= 1/b_n (the lower edge of
    /// the unmodified set). A bare 1e-6 floor is nearly absorbing: the gradient
    /// noise on phi grows like Gamma^{-1/2} once Gamma sits there.
    bool band_floor = true;
};

Eigen::VectorXd project_phi_n(const Eigen::VectorXd& phi, const ScheduleSet& sch,
                              const ProjectionSpec& proj, long n);
Eigen::MatrixXd project_Gamma_n(const Eigen::MatrixXd& Gamma, const ScheduleSet& sch,
                                const ProjectionSpec& proj, long n);

/// True if Gamma lies in the n-th covariance set (tolerance tol on eigenvalues).
bool in_gamma_set(const Eigen::MatrixXd& Gamma, const ScheduleSet& sch, const ProjectionSpec& proj,
                  long n, double tol = 1e-12);
bool in_phi_set(const Eigen::VectorXd& phi, const ScheduleSet& sch, const ProjectionSpec& proj,
                long n, double tol = 1e-12);

struct LearnerConfig {
    ScheduleSet schedules;
    ProjectionSpec projection;
    CriticParameterization critic;
    /// Throw if an iterate leaves its projection set (used by the test suite).
    bool assert_invariants = false;
};

/// Exp. 1 configuration: a_phi = 0.05/(n+1)^{3/4}, a_Gamma = 1/(n+1)^{3/4},
/// b_n = 20 max(1, (n+1)^{1/4}), phi in [-2.25, -1.1], Gamma in [0, 1], dt = 0.01.
LearnerConfig appendix_config();

struct LearnerInit {
    Eigen::VectorXd phi0;
    Eigen::MatrixXd Gamma0;
    double gamma0 = 0.0;
    Eigen::VectorXd theta0;
};

/// phi0 = -1.1, Gamma0 = 0.5, gamma0 = 2.
LearnerInit appendix_init();

enum class IterationStatus { Ok, Diverged };

struct IterationRecord {
    long n = 0;
    Eigen::VectorXd phi;
    Eigen::MatrixXd Gamma;
    double gamma = 0.0;
    Eigen::VectorXd theta;
    double instant_regret = 0.0;
    IterationStatus status = IterationStatus::Ok;
};

using RecordSink = std::function<void(const IterationRecord&)>;

struct TrainResult {
    /// Empty when a sink consumed the records.
    std::vector<IterationRecord> records;
    PolicyParams policy;
    CriticState critic;
    long diverged = 0;
};

// --- single-iteration building blocks ---------------------------------------

/// Policy-evaluation step on theta (gamma is left untouched).
CriticState pe_update(const Trajectory& traj, const CriticState& cs, const PolicyParams& pol,
                      double a_theta, const CriticParameterization& par, const Model& m);

/// gamma_{n+1} = Pi( c_gamma / (b_n T) sum_k k1(t_k; theta_n) dt_n ).
double gamma_update(const CriticState& cs, const ScheduleSet& sch, long n,
                    const CriticParameterization& par, const Model& m);

/// Discretized policy-gradient sums for the mean gain and the inverse covariance.
struct GradientEstimates {
    Eigen::VectorXd Y;
    Eigen::MatrixXd Z;
};

GradientEstimates compute_gradients(const Trajectory& traj, const CriticState& cs,
                                    const PolicyParams& pol, const CriticParameterization& par,
                                    const Model& m);
Eigen::VectorXd compute_Y_hat(const Trajectory& traj, const CriticState& cs, const PolicyParams& pol,
                              const CriticParameterization& par, const Model& m);
Eigen::MatrixXd compute_Z_hat(const Trajectory& traj, const CriticState& cs, const PolicyParams& pol,
                              const CriticParameterization& par, const Model& m);

Eigen::VectorXd phi_update(const PolicyParams& pol, const Eigen::VectorXd& Y, const ScheduleSet& sch,
                           const ProjectionSpec& proj, long n);
Eigen::MatrixXd Gamma_update(const PolicyParams& pol, const Eigen::MatrixXd& Z,
                             const ScheduleSet& sch, const ProjectionSpec& proj, long n);

/// Resolved temperature scale for a model.
double resolve_c_gamma(const ScheduleSet& sch, const Model& m);

// --- training loops -----------------------------------------------------------

enum class ExplorationMode {
    /// gamma and Gamma updated from data.
    Adaptive,
    /// gamma held at gamma0, Gamma_n = Gamma0 / (n + 1).
    Fixed,
};

/// Runs n_iters iterations of the actor-critic loop. All four updates in an
/// iteration read the iteration-n parameters. A diverged episode is recorded
/// and skipped; the parameters are re-projected onto the next sets.
TrainResult train(const Model& m, const LearnerConfig& cfg, const LearnerInit& init, long n_iters,
                  RngStream& rng, const RecordSink& sink = {},
                  ExplorationMode mode = ExplorationMode::Adaptive);

// --- schedule validation --------------------------------------------------------

struct ConditionResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct ScheduleReport {
    std::vector<ConditionResult> conditions;

    [[nodiscard]] bool all_passed() const;
    /// Null if no condition has that name.
    [[nodiscard]] const ConditionResult* find(const std::string& name) const;
};

/// Numerical proxies for the step-size conditions of the convergence theorem,
/// checked over 0 <= n <= horizon_n. A series counts as divergent when its last
/// decade contributes at least `decade_ratio` times the previous decade.
ScheduleReport validate_schedules(const ScheduleSet& sch, long horizon_n, double W = 2.0,
                                  double decade_ratio = 0.9);

} // namespace lqexplore
