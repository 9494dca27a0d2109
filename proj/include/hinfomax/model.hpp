#pragma once

#include <Eigen/Dense>

namespace hinfomax {

/// Parameters of the sigmoidal Poisson tuning g(y) = 1 / (1 + exp(-beta*y - b)).
///
/// `scale` is a = sqrt(K1/K0); outputs are y = a * C^T xhat and the
/// nonlinearity is evaluated on the normalized projection yhat = y / a.
/// Population densities are uniform (1/K1) and therefore not stored.
struct TuningParams {
    double beta = 0.0;
    double bias = 0.0;
    double scale = 1.0;
    int k0 = 0;
    int k1 = 0;
    double beta0 = 0.0;
    int t0 = 50;
};

/// Analytic initialization: b = 0, beta0 = 1.81 sqrt(K1/K0), a = sqrt(K1/K0).
/// `beta` starts at the first-phase value 0.5 * beta0.
TuningParams init_tuning(int k0, int k1, int t0 = 50);

/// 0.5 * beta0 for t <= t0, beta0 afterwards.
double beta_at_epoch(const TuningParams& params, int epoch);

/// Elementwise tuning quantities over a K1 x M matrix of projections.
struct Nonlinearity {
    Eigen::MatrixXd g;      // logistic(beta*yhat + b)
    Eigen::MatrixXd phi;    // a^-1 |dg/dyhat| = a^-1 beta g (1 - g)
    Eigen::MatrixXd omega;  // phi' / phi = beta (1 - 2g)
};

Nonlinearity eval_nonlinearity(const TuningParams& params, const Eigen::MatrixXd& yhat);

// Scalar forms, shared by the objectives and the tests.
double tuning_g(const TuningParams& params, double yhat);
double tuning_phi(const TuningParams& params, double yhat);
double tuning_log_phi(const TuningParams& params, double yhat);
double tuning_omega(const TuningParams& params, double yhat);
/// phi'(yhat) = a^-1 beta^2 g (1 - g) (1 - 2g).
double tuning_dphi(const TuningParams& params, double yhat);

}  // namespace hinfomax
