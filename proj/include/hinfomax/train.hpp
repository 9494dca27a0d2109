#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hinfomax/model.hpp"

namespace hinfomax {

/// The K0 x K1 filter matrix C; output k responds to yhat_k = c_k^T xhat.
struct FilterBank {
    Eigen::MatrixXd C;

    int k0() const { return static_cast<int>(C.rows()); }
    int k1() const { return static_cast<int>(C.cols()); }
};

/// phi values below this are floored before logs are taken.
inline constexpr double kPhiFloor = 1e-300;
/// Fraction of floored phi entries beyond which an evaluation fails.
inline constexpr double kMaxFlooredFraction = 0.01;

struct ObjectiveResult {
    double value = 0.0;
    Eigen::MatrixXd gradient;  // empty when only the value was requested
    std::int64_t floored = 0;
};

enum class Objective {
    q1,     // -<sum_k ln phi(yhat_k)>, square C on the orthonormal manifold
    q2,     // q1 - 1/2 ln det(C^T C), square C unconstrained
    qhat,   // -1/2 ln det(C diag(<phi>^2) C^T)
    exact,  // -1/2 <ln det(C diag(phi^2) C^T)>, one K0 x K0 factorization per sample
};

const char* to_string(Objective objective);

struct EvalOptions {
    int threads = 1;
};

/// Value and optionally gradient of the chosen objective at C over the
/// whitened samples xhat (K0 x M). All values are per-sample averages.
ObjectiveResult evaluate_objective(Objective objective, const FilterBank& filters, const Eigen::MatrixXd& xhat,
                                   const TuningParams& params, bool with_gradient, const EvalOptions& opts = {});

ObjectiveResult objective_grad_alg1(const FilterBank& filters, const Eigen::MatrixXd& xhat, const TuningParams& params,
                                    const EvalOptions& opts = {});
ObjectiveResult objective_grad_q2(const FilterBank& filters, const Eigen::MatrixXd& xhat, const TuningParams& params,
                                  const EvalOptions& opts = {});
ObjectiveResult objective_grad_alg2(const FilterBank& filters, const Eigen::MatrixXd& xhat, const TuningParams& params,
                                    const EvalOptions& opts = {});
ObjectiveResult objective_grad_exact(const FilterBank& filters, const Eigen::MatrixXd& xhat,
                                     const TuningParams& params, const EvalOptions& opts = {});

/// C + mu (-grad + C grad^T C): first-order tangent to C C^T = I.
Eigen::MatrixXd stiefel_step(const Eigen::MatrixXd& C, const Eigen::MatrixXd& grad, double mu);

/// Row-wise Gram-Schmidt (two passes); throws RankError on dependent rows.
Eigen::MatrixXd gram_schmidt_rows(const Eigen::MatrixXd& C);

struct HistoryEntry {
    int epoch = 0;
    int phase = 1;
    double objective = 0.0;
    double step = 0.0;
    int backtracks = 0;
    double wall_seconds = 0.0;
};

struct TrainState {
    int epoch = 0;
    double rate_factor = 0.4;  // v_t
    double step = 0.0;         // mu_t
    std::vector<HistoryEntry> history;
    std::vector<int> stall_epochs;  // epochs whose step search was exhausted
};

inline constexpr int kMaxBacktracks = 60;

using ObjectiveFn = std::function<double(const Eigen::MatrixXd&)>;
using CandidateFn = std::function<Eigen::MatrixXd(const Eigen::MatrixXd& C, const Eigen::MatrixXd& grad, double mu)>;

struct StepOutcome {
    Eigen::MatrixXd C;
    double objective = 0.0;
    int backtracks = 0;
};

/// One adaptive step: mu = v / kappa with kappa the mean column ratio
/// |grad_k| / |C_k|. A candidate is accepted when its objective is strictly
/// below `objective`; otherwise v shrinks by `tau` and the candidate is
/// rebuilt. Updates state.rate_factor and state.step. Throws StallError after
/// kMaxBacktracks consecutive shrinks.
StepOutcome adapt_step(TrainState& state, const Eigen::MatrixXd& C, double objective, const Eigen::MatrixXd& grad,
                       const ObjectiveFn& objective_fn, double tau, const CandidateFn& candidate_fn = stiefel_step);

enum class Algorithm { alg1, alg2, exact };

const char* to_string(Algorithm algorithm);
Algorithm parse_algorithm(const std::string& name);

struct TrainConfig {
    Algorithm algorithm = Algorithm::alg1;
    int t_max = 300;
    int t0 = 50;
    double v1 = 0.4;
    double tau = 0.8;
    std::uint64_t seed = 0;
    bool train_bias = false;
    std::int64_t batch_size = 0;  // 0 means full batch
    int threads = 1;
};

void validate(const TrainConfig& cfg);

struct TrainResult {
    FilterBank filters;
    TrainState state;
    TuningParams params;  // final beta and bias
};

/// Called after every epoch with the accepted filters.
using EpochObserver = std::function<void(const TrainState&, const FilterBank&, const TuningParams&)>;

/// Seeded uniform [-1, 1] entries, rows orthonormalized.
FilterBank random_filters(int k0, int k1, std::uint64_t seed);

/// Full training loop. Epochs t <= t0 step on the orthonormal manifold with
/// Gram-Schmidt after each accepted update; later epochs drop the constraint
/// (alg1 switches to q2 with relative-gradient steps, alg2 and exact keep
/// their objective with plain manifold-form steps). A stalled step search
/// ends its phase: in the first phase training resumes at t0 + 1 with v reset
/// to v1, in the second it stops early.
TrainResult run_training(const Eigen::MatrixXd& xhat, const TrainConfig& cfg, const TuningParams& params,
                         const EpochObserver& observer = {});

/// Checkpoint file: magic "PICK", version 1, u32 K0, u32 K1, u32 epoch,
/// f64 beta, f64 bias, f64 v_t, then C as a mat1 block.
struct Checkpoint {
    FilterBank filters;
    int epoch = 0;
    double beta = 0.0;
    double bias = 0.0;
    double rate_factor = 0.0;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// CSV with header epoch,objective,step,backtracks,wall_seconds.
std::string history_csv(const TrainState& state);

}  // namespace hinfomax
