#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hinfomax/ingest.hpp"
#include "hinfomax/model.hpp"
#include "hinfomax/train.hpp"
#include "hinfomax/whiten.hpp"

namespace hinfomax {

struct MetricsReport {
    int epoch = 0;
    double cfe_bits = 0.0;
    double cde_nats = 0.0;
    double population_n = 1e6;
    double wall_seconds = 0.0;
};

/// Basis vectors B, analysis filters W and display filters C_check = U0 C,
/// all K x K1.
struct Dictionary {
    Eigen::MatrixXd B;
    Eigen::MatrixXd W;
    Eigen::MatrixXd C_check;
};

struct KdeOptions {
    int bins = 512;       // grid intervals across the padded range
    double margin = 3.0;  // padding on each side, in bandwidths
};

inline constexpr const char* kBandwidthRule = "silverman: 1.06 * sd * n^(-1/5)";

/// Silverman bandwidth used by kde_entropy.
double silverman_bandwidth(const std::vector<double>& samples);

/// Differential entropy in bits from a Gaussian-kernel density estimate on a
/// regular grid: -delta * sum q log2 q. The density is binned linearly onto
/// the grid and smoothed with a sampled kernel truncated at 6 bandwidths.
double kde_entropy(const std::vector<double>& samples, const KdeOptions& opts = {});

/// Mean per-output entropy (bits) of y_k = zeta c_check_k^T x_check with
/// zeta = K1 / sum_k |c_check_k|. `x_check` is the ZCA-whitened data, K x M.
double coefficient_entropy(const Dictionary& dict, const Eigen::MatrixXd& x_check, const KdeOptions& opts = {},
                           int threads = 1);

/// h1 = -(1/2M) sum_m ln det((N/K0 C diag(phi_m^2) C^T + I) / (2 pi e)), nats.
/// `phi` is K1 x M.
double conditional_entropy_from_phi(const Eigen::MatrixXd& C, const Eigen::MatrixXd& phi, double population_n,
                                    int threads = 1);

/// h1 with phi evaluated at yhat = C^T xhat. When max_samples > 0 and below M,
/// an evenly strided subset of that many samples is used.
double conditional_entropy(const FilterBank& filters, const Eigen::MatrixXd& xhat, const TuningParams& params,
                           double population_n, std::int64_t max_samples = 0, int threads = 1);

/// B = a^-1 U0 Sigma0^1/2 (C C^T)^-1 C, W = a U0 Sigma0^-1/2 C, C_check = U0 C.
Dictionary extract_bases(const WhiteningModel& model, const FilterBank& filters, const TuningParams& params);

/// Tiles the columns (each a row-major w x w patch) into a near-square grid
/// with 1-pixel separators at 0.5. Each column is scaled by its max absolute
/// entry and mapped from [-1, 1] to [0, 1]. Indices of all-zero columns
/// (drawn flat 0.5) are appended to `zero_columns` when given.
ImageGray render_filter_grid(const Eigen::MatrixXd& columns, int patch_width,
                             std::vector<int>* zero_columns = nullptr);

struct DenoiseOptions {
    int patch_width = 7;
    double threshold = 0.975;
    std::int64_t samples = 20000;  // training patches drawn from the clean region
    std::uint64_t seed = 0;
    int k1 = 0;                    // 0 means K1 = K0
    bool auto_algorithm = true;    // alg1 when K0 == K1, else alg2
    TrainConfig train;
};

struct DenoiseResult {
    ImageGray image;
    int k0 = 0;
    int k1 = 0;
};

/// Learns filters on patches of `clean` and reconstructs every stride-1 patch
/// of `noisy` as B W^T (x - mean) + mean, averaging overlaps and clamping to
/// [0, 1].
DenoiseResult denoise_image(const ImageGray& clean, const ImageGray& noisy, const DenoiseOptions& opts);

/// Overlap-averaged reconstruction of `image` with a fixed patch operator:
/// each window x becomes B W^T (x - mean) + mean.
ImageGray reconstruct_image(const ImageGray& image, const Dictionary& dict, const Eigen::VectorXd& mean,
                            int patch_width);

/// Frobenius norm of the pixel difference.
double image_distance(const ImageGray& a, const ImageGray& b);

/// CSV with header epoch,cfe_bits,cde_nats,wall_seconds.
std::string metrics_csv(const std::vector<MetricsReport>& rows);

}  // namespace hinfomax
