#include "lqexplore/model.hpp"

#include <cmath>
#include <string>

#include "lqexplore/errors.hpp"
#include "lqexplore/rng.hpp"

namespace lqexplore {

ModelParams ModelParams::scalar(double A, double B, double C, double D, double Q, double H,
                                double x0, double T)
{
    ModelParams p;
    p.A = A;
    p.B = Eigen::VectorXd::Constant(1, B);
    p.C = {C};
    p.D = {Eigen::VectorXd::Constant(1, D)};
    p.Q = Q;
    p.H = H;
    p.x0 = x0;
    p.T = T;
    return p;
}

DerivedModel validate_model(const ModelParams& p)
{
    const Eigen::Index l = p.control_dim();
    if (l < 1)
        throw Error(ErrorKind::BadDimensions, "control dimension must be >= 1");
    if (p.C.empty() || p.C.size() != p.D.size())
        throw Error(ErrorKind::BadDimensions, "need m >= 1 with C and D of equal length");
    for (const auto& d : p.D) {
        if (d.size() != l)
            throw Error(ErrorKind::BadDimensions, "every D_j must have length l");
    }
    if (!(p.T > 0.0) || !std::isfinite(p.T))
        throw Error(ErrorKind::BadHorizon, "T must be positive, got " + std::to_string(p.T));
    if (p.Q < 0.0 || p.H < 0.0)
        throw Error(ErrorKind::NegativeWeight, "Q and H must be non-negative");

    DerivedModel dm;
    dm.ddt = Eigen::MatrixXd::Zero(l, l);
    dm.cd = Eigen::VectorXd::Zero(l);
    for (std::size_t j = 0; j < p.D.size(); ++j) {
        dm.ddt += p.D[j] * p.D[j].transpose();
        dm.cd += p.C[j] * p.D[j];
    }
    if (!dm.ddt.allFinite() || !dm.cd.allFinite() || !p.B.allFinite() || !std::isfinite(p.A))
        throw Error(ErrorKind::NonFinite, "model coefficients must be finite");

    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(dm.ddt, Eigen::EigenvaluesOnly);
    dm.lambda_min_ddt = eig.eigenvalues().minCoeff();
    dm.lambda_max_ddt = eig.eigenvalues().maxCoeff();
    if (!(dm.lambda_min_ddt > 0.0))
        throw Error(ErrorKind::NotPositiveDefinite,
                    "sum_j D_j D_j' has eigenvalue " + std::to_string(dm.lambda_min_ddt));
    dm.ddt_inv = dm.ddt.llt().solve(Eigen::MatrixXd::Identity(l, l));
    return dm;
}

Model::Model(ModelParams params) : params_(std::move(params)), derived_(validate_model(params_)) {}

ModelParams sample_random_model(std::uint64_t rng_seed)
{
    RngStream rng(rng_seed, 0x6d6f64656cULL);
    for (;;) {
        const double A = rng.uniform(-5.0, 5.0);
        const double B = rng.uniform(-5.0, 5.0);
        const double C = rng.uniform(-5.0, 5.0);
        const double D = rng.uniform(-5.0, 5.0);
        if (D * D >= kRandomModelDiffusionFloor)
            return ModelParams::scalar(A, B, C, D);
    }
}

} // namespace lqexplore
