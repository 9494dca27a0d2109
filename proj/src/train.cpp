#include "hinfomax/train.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "hinfomax/errors.hpp"
#include "hinfomax/io.hpp"
#include "hinfomax/parallel.hpp"
#include "hinfomax/random.hpp"

namespace hinfomax {

const char* to_string(Objective objective) {
    switch (objective) {
        case Objective::q1: return "q1";
        case Objective::q2: return "q2";
        case Objective::qhat: return "qhat";
        case Objective::exact: return "exact";
    }
    return "?";
}

const char* to_string(Algorithm algorithm) {
    switch (algorithm) {
        case Algorithm::alg1: return "alg1";
        case Algorithm::alg2: return "alg2";
        case Algorithm::exact: return "exact";
    }
    return "?";
}

Algorithm parse_algorithm(const std::string& name) {
    if (name == "alg1") return Algorithm::alg1;
    if (name == "alg2") return Algorithm::alg2;
    if (name == "exact") return Algorithm::exact;
    throw ConfigError("unknown algorithm '" + name + "' (expected alg1, alg2 or exact)");
}

namespace {

const double kLogFloor = std::log(kPhiFloor);

// Per-chunk accumulator shared by the separable objectives.
struct Partial {
    double sum = 0.0;
    std::int64_t floored = 0;
    std::int64_t first_floor = -1;  // flat index k + K1 * m
    Eigen::VectorXd phi_sum;
    Eigen::MatrixXd grad;
};

void fold_partial(Partial& acc, Partial& p) {
    acc.sum += p.sum;
    if (acc.first_floor < 0) acc.first_floor = p.first_floor;
    acc.floored += p.floored;
    if (p.grad.size()) {
        if (acc.grad.size()) acc.grad += p.grad;
        else acc.grad = std::move(p.grad);
    }
    if (p.phi_sum.size()) {
        if (acc.phi_sum.size()) acc.phi_sum += p.phi_sum;
        else acc.phi_sum = std::move(p.phi_sum);
    }
}

void check_saturation(const Partial& acc, Eigen::Index k1, Eigen::Index m) {
    const double entries = static_cast<double>(k1) * static_cast<double>(m);
    if (acc.floored > kMaxFlooredFraction * entries) {
        const std::int64_t k = acc.first_floor % k1;
        const std::int64_t s = acc.first_floor / k1;
        std::ostringstream msg;
        msg << "tuning saturated: " << acc.floored << " of " << static_cast<std::int64_t>(entries)
            << " phi values underflowed (first at output " << k << ", sample " << s << ")";
        throw SaturationError(msg.str());
    }
}

void check_shapes(const FilterBank& f, const Eigen::MatrixXd& xhat, const TuningParams& params) {
    if (xhat.rows() != f.C.rows())
        throw ShapeError("whitened data has " + std::to_string(xhat.rows()) + " rows but C has " +
                         std::to_string(f.C.rows()));
    if (xhat.cols() < 1) throw ShapeError("no samples");
    if (params.scale <= 0.0 || params.beta <= 0.0) throw DomainError("tuning slope and scale must be positive");
}

// -<sum_k ln phi>: value sum and X Omega^T over the chunk.
Partial separable_chunk(const Eigen::MatrixXd& C, const Eigen::MatrixXd& xhat, const TuningParams& p,
                        std::int64_t begin, std::int64_t end, bool with_gradient) {
    const auto X = xhat.middleCols(begin, end - begin);
    const Eigen::MatrixXd Y = C.transpose() * X;
    const double log_amp = std::log(p.beta / p.scale);
    Partial out;
    Eigen::MatrixXd omega;
    if (with_gradient) omega.resize(Y.rows(), Y.cols());
    for (Eigen::Index j = 0; j < Y.cols(); ++j) {
        for (Eigen::Index k = 0; k < Y.rows(); ++k) {
            const double z = p.beta * Y(k, j) + p.bias;
            const double a = std::abs(z);
            const double s = std::exp(-a);
            double lp = log_amp - a - 2.0 * std::log1p(s);
            if (lp < kLogFloor) {
                lp = kLogFloor;
                if (out.first_floor < 0) out.first_floor = k + Y.rows() * (begin + j);
                ++out.floored;
            }
            out.sum -= lp;
            if (with_gradient) omega(k, j) = p.beta * (z >= 0 ? -1.0 : 1.0) * (1.0 - s) / (1.0 + s);
        }
    }
    if (with_gradient) out.grad = -(X * omega.transpose());
    return out;
}

ObjectiveResult eval_q1(const FilterBank& f, const Eigen::MatrixXd& xhat, const TuningParams& p, bool with_gradient,
                        const EvalOptions& opts) {
    const auto M = xhat.cols();
    Partial acc = chunked_reduce<Partial>(
        M, opts.threads, [&](std::int64_t b, std::int64_t e) { return separable_chunk(f.C, xhat, p, b, e, with_gradient); },
        Partial{}, fold_partial);
    check_saturation(acc, f.C.cols(), M);
    ObjectiveResult r;
    r.value = acc.sum / static_cast<double>(M);
    r.floored = acc.floored;
    if (with_gradient) r.gradient = acc.grad / static_cast<double>(M);
    return r;
}

ObjectiveResult eval_q2(const FilterBank& f, const Eigen::MatrixXd& xhat, const TuningParams& p, bool with_gradient,
                        const EvalOptions& opts) {
    ObjectiveResult r = eval_q1(f, xhat, p, with_gradient, opts);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(f.C, with_gradient ? (Eigen::ComputeFullU | Eigen::ComputeFullV) : 0);
    const Eigen::VectorXd& sv = svd.singularValues();
    if (!(sv.minCoeff() > 1e-12 * sv.maxCoeff())) {
        std::ostringstream msg;
        msg << "C^T C is singular: smallest singular value " << sv.minCoeff() << " (largest " << sv.maxCoeff() << ")";
        throw ConditioningError(msg.str());
    }
    // ln det(C^T C) = 2 sum ln sigma_i.
    r.value -= sv.array().log().sum();
    if (with_gradient)
        r.gradient -= svd.matrixU() * sv.cwiseInverse().asDiagonal() * svd.matrixV().transpose();
    return r;
}

ObjectiveResult eval_qhat(const FilterBank& f, const Eigen::MatrixXd& xhat, const TuningParams& p, bool with_gradient,
                          const EvalOptions& opts) {
    const auto M = xhat.cols();
    const auto& C = f.C;
    const Eigen::Index K1 = C.cols();
    Partial acc = chunked_reduce<Partial>(
        M, opts.threads,
        [&](std::int64_t begin, std::int64_t end) {
            const auto X = xhat.middleCols(begin, end - begin);
            const Eigen::MatrixXd Y = C.transpose() * X;
            const Nonlinearity nl = eval_nonlinearity(p, Y);
            Partial out;
            out.phi_sum = nl.phi.rowwise().sum();
            if (with_gradient) out.grad = X * nl.phi.cwiseProduct(nl.omega).transpose();
            return out;
        },
        Partial{}, fold_partial);

    const Eigen::VectorXd m = acc.phi_sum / static_cast<double>(M);
    for (Eigen::Index k = 0; k < K1; ++k)
        if (!(m[k] > kPhiFloor))
            throw SaturationError("mean tuning slope of output " + std::to_string(k) + " vanished");

    const Eigen::VectorXd d = m.cwiseAbs2();
    const Eigen::MatrixXd CD = C * d.asDiagonal();
    const Eigen::MatrixXd Mdet = CD * C.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Mdet);
    const Eigen::VectorXd& lam = eig.eigenvalues();
    if (eig.info() != Eigen::Success || !(lam.minCoeff() > 1e-13 * lam.maxCoeff())) {
        std::ostringstream msg;
        msg << "C D C^T is singular: smallest eigenvalue " << lam.minCoeff() << " (largest " << lam.maxCoeff() << ")";
        throw ConditioningError(msg.str());
    }

    ObjectiveResult r;
    r.value = -0.5 * lam.array().log().sum();
    if (with_gradient) {
        const Eigen::MatrixXd Minv = eig.eigenvectors() * lam.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
        const Eigen::MatrixXd MinvC = Minv * C;
        r.gradient = -(MinvC * d.asDiagonal());
        const Eigen::MatrixXd mean_dphi_x = acc.grad / static_cast<double>(M);
        for (Eigen::Index k = 0; k < K1; ++k) {
            const double quad = C.col(k).dot(MinvC.col(k));
            r.gradient.col(k) -= m[k] * quad * mean_dphi_x.col(k);
        }
    }
    return r;
}

ObjectiveResult eval_exact(const FilterBank& f, const Eigen::MatrixXd& xhat, const TuningParams& p,
                           bool with_gradient, const EvalOptions& opts) {
    const auto M = xhat.cols();
    const auto& C = f.C;
    const Eigen::Index K0 = C.rows();
    const Eigen::Index K1 = C.cols();
    Partial acc = chunked_reduce<Partial>(
        M, opts.threads,
        [&](std::int64_t begin, std::int64_t end) {
            Partial out;
            if (with_gradient) out.grad = Eigen::MatrixXd::Zero(K0, K1);
            Eigen::VectorXd phi(K1), dphi(K1);
            for (std::int64_t m = begin; m < end; ++m) {
                const Eigen::VectorXd yhat = C.transpose() * xhat.col(m);
                for (Eigen::Index k = 0; k < K1; ++k) {
                    phi[k] = tuning_phi(p, yhat[k]);
                    dphi[k] = phi[k] * tuning_omega(p, yhat[k]);
                }
                // P = C Phi^2 C^T = R^T R from a QR of Phi C^T, which avoids
                // squaring the condition number.
                const Eigen::MatrixXd PhiCt = phi.asDiagonal() * C.transpose();
                Eigen::HouseholderQR<Eigen::MatrixXd> qr(PhiCt);
                const Eigen::MatrixXd R = qr.matrixQR().topRows(K0).triangularView<Eigen::Upper>();
                const Eigen::VectorXd diag = R.diagonal().cwiseAbs();
                if (!diag.allFinite() || !(diag.minCoeff() > 1e-7 * diag.maxCoeff())) {
                    std::ostringstream msg;
                    msg << "C Phi C^T is singular at sample " << m;
                    throw ConditioningError(msg.str());
                }
                out.sum += 2.0 * diag.array().log().sum();
                if (with_gradient) {
                    const auto upper = R.triangularView<Eigen::Upper>();
                    const Eigen::MatrixXd PinvC = upper.solve(upper.transpose().solve(C));
                    out.grad += PinvC * phi.cwiseAbs2().asDiagonal();
                    Eigen::VectorXd omega(K1);
                    for (Eigen::Index k = 0; k < K1; ++k) omega[k] = phi[k] * dphi[k] * C.col(k).dot(PinvC.col(k));
                    out.grad += xhat.col(m) * omega.transpose();
                }
            }
            return out;
        },
        Partial{}, fold_partial);

    ObjectiveResult r;
    r.value = -0.5 * acc.sum / static_cast<double>(M);
    if (with_gradient) r.gradient = -acc.grad / static_cast<double>(M);
    return r;
}

}  // namespace

ObjectiveResult evaluate_objective(Objective objective, const FilterBank& filters, const Eigen::MatrixXd& xhat,
                                   const TuningParams& params, bool with_gradient, const EvalOptions& opts) {
    check_shapes(filters, xhat, params);
    switch (objective) {
        case Objective::q1:
        case Objective::q2:
            if (filters.k0() != filters.k1())
                throw ShapeError(std::string("objective ") + to_string(objective) + " needs square C, got " +
                                 std::to_string(filters.k0()) + "x" + std::to_string(filters.k1()));
            return objective == Objective::q1 ? eval_q1(filters, xhat, params, with_gradient, opts)
                                              : eval_q2(filters, xhat, params, with_gradient, opts);
        case Objective::qhat:
        case Objective::exact:
            if (filters.k0() > filters.k1())
                throw ShapeError(std::string("objective ") + to_string(objective) + " needs K0 <= K1");
            return objective == Objective::qhat ? eval_qhat(filters, xhat, params, with_gradient, opts)
                                                : eval_exact(filters, xhat, params, with_gradient, opts);
    }
    throw ConfigError("unknown objective");
}

ObjectiveResult objective_grad_alg1(const FilterBank& f, const Eigen::MatrixXd& x, const TuningParams& p,
                                    const EvalOptions& o) {
    return evaluate_objective(Objective::q1, f, x, p, true, o);
}

ObjectiveResult objective_grad_q2(const FilterBank& f, const Eigen::MatrixXd& x, const TuningParams& p,
                                  const EvalOptions& o) {
    return evaluate_objective(Objective::q2, f, x, p, true, o);
}

ObjectiveResult objective_grad_alg2(const FilterBank& f, const Eigen::MatrixXd& x, const TuningParams& p,
                                    const EvalOptions& o) {
    return evaluate_objective(Objective::qhat, f, x, p, true, o);
}

ObjectiveResult objective_grad_exact(const FilterBank& f, const Eigen::MatrixXd& x, const TuningParams& p,
                                     const EvalOptions& o) {
    return evaluate_objective(Objective::exact, f, x, p, true, o);
}

Eigen::MatrixXd stiefel_step(const Eigen::MatrixXd& C, const Eigen::MatrixXd& grad, double mu) {
    if (C.rows() != grad.rows() || C.cols() != grad.cols()) throw ShapeError("stiefel_step: shape mismatch");
    return C + mu * (-grad + C * (grad.transpose() * C));
}

Eigen::MatrixXd gram_schmidt_rows(const Eigen::MatrixXd& C) {
    Eigen::MatrixXd Q = C;
    for (Eigen::Index i = 0; i < Q.rows(); ++i) {
        const double original = C.row(i).norm();
        Eigen::RowVectorXd v = Q.row(i);
        // Second pass restores orthogonality lost to cancellation in the first.
        for (int pass = 0; pass < 2; ++pass)
            for (Eigen::Index j = 0; j < i; ++j) v -= v.dot(Q.row(j)) * Q.row(j);
        const double n = v.norm();
        if (!(n > 1e-10 * original) || !std::isfinite(n))
            throw RankError("gram_schmidt_rows: row " + std::to_string(i) + " is linearly dependent on earlier rows");
        Q.row(i) = v / n;
    }
    return Q;
}

StepOutcome adapt_step(TrainState& state, const Eigen::MatrixXd& C, double objective, const Eigen::MatrixXd& grad,
                       const ObjectiveFn& objective_fn, double tau, const CandidateFn& candidate_fn) {
    double kappa = 0.0;
    for (Eigen::Index k = 0; k < C.cols(); ++k) {
        const double cn = C.col(k).norm();
        if (cn > 0.0) kappa += grad.col(k).norm() / cn;
    }
    kappa /= static_cast<double>(C.cols());

    if (!(kappa > 0.0) || !std::isfinite(kappa)) {
        state.step = 0.0;
        return {C, objective, 0};
    }

    for (int shrinks = 0;; ++shrinks) {
        const double mu = state.rate_factor / kappa;
        double candidate_value = std::numeric_limits<double>::infinity();
        Eigen::MatrixXd candidate;
        try {
            candidate = candidate_fn(C, grad, mu);
            candidate_value = objective_fn(candidate);
        } catch (const Error& e) {
            // A step that leaves the objective's domain counts as a rejection.
            if (e.category() != ErrorCategory::numerical) throw;
        }
        if (candidate_value < objective) {
            state.step = mu;
            return {std::move(candidate), candidate_value, shrinks};
        }
        if (shrinks == kMaxBacktracks) {
            std::ostringstream msg;
            msg << "step size stalled after " << kMaxBacktracks << " shrinks at objective " << objective;
            throw StallError(msg.str(), objective);
        }
        state.rate_factor *= tau;
    }
}

void validate(const TrainConfig& cfg) {
    if (cfg.t_max < 1) throw ConfigError("t_max must be at least 1");
    if (cfg.t0 < 1 || cfg.t0 > cfg.t_max) throw ConfigError("t0 must satisfy 1 <= t0 <= t_max");
    if (!(cfg.v1 > 0.0 && cfg.v1 < 1.0)) throw ConfigError("v1 must lie in (0, 1)");
    if (!(cfg.tau > 0.0 && cfg.tau < 1.0)) throw ConfigError("tau must lie in (0, 1)");
    if (cfg.batch_size < 0) throw ConfigError("batch size must be non-negative");
    if (cfg.threads < 1) throw ConfigError("thread count must be at least 1");
}

FilterBank random_filters(int k0, int k1, std::uint64_t seed) {
    if (k0 < 1 || k1 < 1) throw DomainError("filter counts must be positive");
    if (k0 > k1) throw ShapeError("random_filters: orthonormal rows need K0 <= K1");
    Rng rng(seed);
    Eigen::MatrixXd C(k0, k1);
    for (Eigen::Index j = 0; j < C.cols(); ++j)
        for (Eigen::Index i = 0; i < C.rows(); ++i) C(i, j) = rng.uniform(-1.0, 1.0);
    return {gram_schmidt_rows(C)};
}

namespace {

Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& X, const std::vector<Eigen::Index>& order, std::size_t begin,
                               std::size_t end) {
    Eigen::MatrixXd out(X.rows(), static_cast<Eigen::Index>(end - begin));
    for (std::size_t i = begin; i < end; ++i) out.col(static_cast<Eigen::Index>(i - begin)) = X.col(order[i]);
    return out;
}

// Scalar backtracked descent on the bias using a central-difference slope.
double bias_step(Objective objective, const FilterBank& f, const Eigen::MatrixXd& xhat, TuningParams& p,
                 double current, double tau, const EvalOptions& opts) {
    constexpr double h = 1e-5;
    auto value_at = [&](double b) {
        TuningParams q = p;
        q.bias = b;
        return evaluate_objective(objective, f, xhat, q, false, opts).value;
    };
    const double slope = (value_at(p.bias + h) - value_at(p.bias - h)) / (2.0 * h);
    if (!std::isfinite(slope) || slope == 0.0) return current;
    double step = 0.1;
    for (int i = 0; i < 30; ++i, step *= tau) {
        const double b = p.bias - step * slope;
        double v;
        try {
            v = value_at(b);
        } catch (const Error& e) {
            if (e.category() != ErrorCategory::numerical) throw;
            continue;
        }
        if (v < current) {
            p.bias = b;
            return v;
        }
    }
    return current;
}

}  // namespace

TrainResult run_training(const Eigen::MatrixXd& xhat, const TrainConfig& cfg, const TuningParams& params,
                         const EpochObserver& observer) {
    validate(cfg);
    if (xhat.rows() != params.k0)
        throw ShapeError("whitened data has " + std::to_string(xhat.rows()) + " rows but K0 = " +
                         std::to_string(params.k0));
    if (cfg.algorithm == Algorithm::alg1 && params.k0 != params.k1)
        throw ShapeError("alg1 needs K0 == K1 (K0=" + std::to_string(params.k0) + ", K1=" + std::to_string(params.k1) +
                         "); use alg2");
    if (params.k0 > params.k1) throw ShapeError("K0 must not exceed K1");

    const Objective constrained_objective = cfg.algorithm == Algorithm::alg1   ? Objective::q1
                                            : cfg.algorithm == Algorithm::alg2 ? Objective::qhat
                                                                               : Objective::exact;
    const Objective free_objective = cfg.algorithm == Algorithm::alg1 ? Objective::q2 : constrained_objective;
    const EvalOptions opts{cfg.threads};

    TrainResult result;
    result.filters = random_filters(params.k0, params.k1, cfg.seed);
    result.params = params;
    result.params.t0 = cfg.t0;
    result.state.rate_factor = cfg.v1;

    TrainState& state = result.state;
    FilterBank& filters = result.filters;
    TuningParams& tuning = result.params;

    const Eigen::Index M = xhat.cols();
    const bool full_batch = cfg.batch_size == 0 || cfg.batch_size >= M;
    std::vector<Eigen::Index> order(static_cast<std::size_t>(M));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    Rng shuffle_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);

    const auto start = std::chrono::steady_clock::now();
    for (int t = 1; t <= cfg.t_max; ++t) {
        state.epoch = t;
        tuning.beta = beta_at_epoch(tuning, t);
        const bool constrained = t <= cfg.t0;
        const Objective objective = constrained ? constrained_objective : free_objective;

        CandidateFn candidate;
        if (constrained) {
            candidate = [](const Eigen::MatrixXd& C, const Eigen::MatrixXd& g, double mu) {
                return gram_schmidt_rows(stiefel_step(C, g, mu));
            };
        } else if (cfg.algorithm == Algorithm::alg1) {
            candidate = [](const Eigen::MatrixXd& C, const Eigen::MatrixXd& g, double mu) -> Eigen::MatrixXd {
                return C - mu * g;
            };
        } else {
            candidate = [](const Eigen::MatrixXd& C, const Eigen::MatrixXd& g, double mu) { return stiefel_step(C, g, mu); };
        }

        HistoryEntry entry;
        entry.epoch = t;
        entry.phase = constrained ? 1 : 2;

        auto step_on = [&](const Eigen::MatrixXd& batch) {
            const ObjectiveResult here = evaluate_objective(objective, filters, batch, tuning, true, opts);
            Eigen::MatrixXd direction = here.gradient;
            // Relative-gradient form for the unconstrained square phase.
            if (!constrained && cfg.algorithm == Algorithm::alg1)
                direction = filters.C * (filters.C.transpose() * here.gradient);
            const ObjectiveFn value_of = [&](const Eigen::MatrixXd& candidate_C) {
                return evaluate_objective(objective, FilterBank{candidate_C}, batch, tuning, false, opts).value;
            };
            StepOutcome out = adapt_step(state, filters.C, here.value, direction, value_of, cfg.tau, candidate);
            filters.C = std::move(out.C);
            entry.backtracks += out.backtracks;
            return out.objective;
        };

        bool stalled = false;
        try {
          if (full_batch) {
            entry.objective = step_on(xhat);
          } else {
            for (std::size_t i = order.size() - 1; i > 0; --i)
                std::swap(order[i], order[static_cast<std::size_t>(shuffle_rng.index(i + 1))]);
            double sum = 0.0;
            int batches = 0;
            for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(cfg.batch_size), ++batches) {
                const std::size_t e = std::min(order.size(), b + static_cast<std::size_t>(cfg.batch_size));
                sum += step_on(gather_columns(xhat, order, b, e));
            }
            entry.objective = sum / batches;
          }
        } catch (const StallError& e) {
            stalled = true;
            entry.objective = e.objective;
            entry.backtracks = kMaxBacktracks + 1;
            state.stall_epochs.push_back(t);
        }

        if (cfg.train_bias && !stalled)
            entry.objective =
                bias_step(objective, filters, xhat, tuning,
                          full_batch ? entry.objective : evaluate_objective(objective, filters, xhat, tuning, false, opts).value,
                          cfg.tau, opts);

        entry.step = state.step;
        entry.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        state.history.push_back(entry);
        if (observer) observer(state, filters, tuning);
        if (stalled) {
            if (!constrained) break;
            t = cfg.t0;
            state.rate_factor = cfg.v1;
        }
    }
    return result;
}

namespace {
constexpr char kCheckpointMagic[] = "PICK";
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    io::ByteWriter w;
    w.raw(std::string(kCheckpointMagic, 4));
    w.u8(1);
    w.u32_le(static_cast<std::uint32_t>(ckpt.filters.k0()));
    w.u32_le(static_cast<std::uint32_t>(ckpt.filters.k1()));
    w.u32_le(static_cast<std::uint32_t>(ckpt.epoch));
    w.f64_le(ckpt.beta);
    w.f64_le(ckpt.bias);
    w.f64_le(ckpt.rate_factor);
    io::write_mat1(w, ckpt.filters.C);
    io::write_file_atomic(path, w.bytes());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    const auto bytes = io::read_file(path);
    io::ByteReader r(bytes);
    const auto magic = r.take(4);
    if (std::string(magic.begin(), magic.end()) != kCheckpointMagic)
        throw FormatError("'" + path.string() + "' is not a checkpoint file");
    if (r.u8() != 1) throw FormatError("unsupported checkpoint version");
    Checkpoint ckpt;
    const auto k0 = r.u32_le();
    const auto k1 = r.u32_le();
    ckpt.epoch = static_cast<int>(r.u32_le());
    ckpt.beta = r.f64_le();
    ckpt.bias = r.f64_le();
    ckpt.rate_factor = r.f64_le();
    ckpt.filters.C = io::read_mat1(r);
    if (ckpt.filters.C.rows() != k0 || ckpt.filters.C.cols() != k1)
        throw FormatError("checkpoint header declares " + std::to_string(k0) + "x" + std::to_string(k1) +
                          " but carries a " + std::to_string(ckpt.filters.C.rows()) + "x" +
                          std::to_string(ckpt.filters.C.cols()) + " matrix");
    return ckpt;
}

std::string history_csv(const TrainState& state) {
    std::ostringstream out;
    out.precision(17);
    out << "epoch,objective,step,backtracks,wall_seconds\n";
    for (const auto& h : state.history)
        out << h.epoch << ',' << h.objective << ',' << h.step << ',' << h.backtracks << ',' << h.wall_seconds << '\n';
    return out.str();
}

}  // namespace hinfomax
