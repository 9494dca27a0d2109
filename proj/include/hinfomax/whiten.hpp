#pragma once

#include <filesystem>

#include <Eigen/Dense>

#include "hinfomax/ingest.hpp"

namespace hinfomax {

/// Eigendecomposition of the patch covariance plus the retained rank.
///
/// Columns of `eigvecs` are sorted by descending variance and each column's
/// largest-magnitude entry is positive. The first `retained_rank` columns and
/// variances form the reduced basis U0 and spectrum Sigma0.
struct WhiteningModel {
    Eigen::VectorXd mean;
    Eigen::MatrixXd eigvecs;
    Eigen::VectorXd spectrum;
    int retained_rank = 0;
    double threshold = 1.0;
    int patch_width = 0;

    Eigen::Index dim() const { return eigvecs.rows(); }
    auto basis() const { return eigvecs.leftCols(retained_rank); }
    auto variances() const { return spectrum.head(retained_rank); }
};

enum class WhitenMode { whiten, zca };

/// Smallest K0 whose cumulative energy ratio sqrt(sum_{k<=K0} s_k / sum_k s_k)
/// reaches `threshold`.
int select_rank(const Eigen::VectorXd& spectrum, double threshold);

/// Fits mean, eigenbasis and spectrum of XX^T/(M-1) after centering, and
/// selects the retained rank. Fails on a covariance whose smallest eigenvalue
/// is not above 1e-12 times the largest.
WhiteningModel fit_whitening(const PatchMatrix& patches, double threshold);

/// whiten: Sigma0^{-1/2} U0^T (x - mean), K0 x M.
/// zca:    U0 Sigma0^{-1/2} U0^T (x - mean), K x M.
Eigen::MatrixXd transform(const WhiteningModel& model, const Eigen::MatrixXd& patches, WhitenMode mode);

/// U0 U0^T (X - mean) + mean.
Eigen::MatrixXd reconstruct_lowrank(const WhiteningModel& model, const Eigen::MatrixXd& patches);

/// Binary model file: magic "PIWM", version 1, u32 K0, f64 threshold,
/// u32 patch width, then mean, eigenvectors and spectrum as mat1 blocks.
void save_whitening(const std::filesystem::path& path, const WhiteningModel& model);
WhiteningModel load_whitening(const std::filesystem::path& path);

}  // namespace hinfomax
