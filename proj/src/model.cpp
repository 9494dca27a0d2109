#include "hinfomax/model.hpp"

#include <cmath>
#include <string>

#include "hinfomax/errors.hpp"

namespace hinfomax {

TuningParams init_tuning(int k0, int k1, int t0) {
    if (k0 < 1 || k1 < 1)
        throw DomainError("init_tuning: counts must be positive (k0=" + std::to_string(k0) +
                          ", k1=" + std::to_string(k1) + ")");
    if (t0 < 0) throw DomainError("init_tuning: t0 must be non-negative");
    TuningParams p;
    p.k0 = k0;
    p.k1 = k1;
    p.scale = std::sqrt(static_cast<double>(k1) / k0);
    p.beta0 = 1.81 * p.scale;
    p.bias = 0.0;
    p.t0 = t0;
    p.beta = beta_at_epoch(p, 1);
    return p;
}

double beta_at_epoch(const TuningParams& params, int epoch) {
    return epoch <= params.t0 ? 0.5 * params.beta0 : params.beta0;
}

// All forms below go through s = exp(-|z|), z = beta*yhat + b, which keeps
// g(1-g) = s/(1+s)^2 accurate far into the saturated tails.

double tuning_g(const TuningParams& p, double yhat) {
    const double z = p.beta * yhat + p.bias;
    const double s = std::exp(-std::abs(z));
    return z >= 0 ? 1.0 / (1.0 + s) : s / (1.0 + s);
}

double tuning_phi(const TuningParams& p, double yhat) {
    const double z = p.beta * yhat + p.bias;
    const double s = std::exp(-std::abs(z));
    return p.beta / p.scale * s / ((1.0 + s) * (1.0 + s));
}

double tuning_log_phi(const TuningParams& p, double yhat) {
    const double z = p.beta * yhat + p.bias;
    const double a = std::abs(z);
    return std::log(p.beta / p.scale) - a - 2.0 * std::log1p(std::exp(-a));
}

double tuning_omega(const TuningParams& p, double yhat) {
    const double z = p.beta * yhat + p.bias;
    const double s = std::exp(-std::abs(z));
    const double one_minus_2g = (z >= 0 ? -1.0 : 1.0) * (1.0 - s) / (1.0 + s);
    return p.beta * one_minus_2g;
}

double tuning_dphi(const TuningParams& p, double yhat) {
    return tuning_phi(p, yhat) * tuning_omega(p, yhat);
}

Nonlinearity eval_nonlinearity(const TuningParams& params, const Eigen::MatrixXd& yhat) {
    Nonlinearity out;
    out.g.resize(yhat.rows(), yhat.cols());
    out.phi.resize(yhat.rows(), yhat.cols());
    out.omega.resize(yhat.rows(), yhat.cols());
    const double amp = params.beta / params.scale;
    for (Eigen::Index j = 0; j < yhat.cols(); ++j) {
        for (Eigen::Index i = 0; i < yhat.rows(); ++i) {
            const double z = params.beta * yhat(i, j) + params.bias;
            const double s = std::exp(-std::abs(z));
            const double inv = 1.0 / (1.0 + s);
            out.g(i, j) = z >= 0 ? inv : s * inv;
            out.phi(i, j) = amp * s * inv * inv;
            out.omega(i, j) = params.beta * (z >= 0 ? -1.0 : 1.0) * (1.0 - s) * inv;
        }
    }
    return out;
}

}  // namespace hinfomax
