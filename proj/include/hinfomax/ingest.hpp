#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace hinfomax {

/// Grayscale image with row-major intensities in [0, 1].
struct ImageGray {
    int width = 0;
    int height = 0;
    std::vector<double> intensities;

    ImageGray() = default;
    ImageGray(int w, int h, double fill = 0.0)
        : width(w), height(h), intensities(static_cast<std::size_t>(w) * h, fill) {}

    double& at(int x, int y) { return intensities[static_cast<std::size_t>(y) * width + x]; }
    double at(int x, int y) const { return intensities[static_cast<std::size_t>(y) * width + x]; }
};

/// K x M matrix whose columns are row-major vectorized w x w patches (K = w^2).
struct PatchMatrix {
    Eigen::MatrixXd data;
    int patch_width = 0;

    Eigen::Index dim() const { return data.rows(); }
    Eigen::Index samples() const { return data.cols(); }
};

struct SamplerConfig {
    int patch_width = 12;
    std::int64_t count = 100000;
    std::uint64_t seed = 0;
};

/// Binary PGM ("P5"), 8-bit or big-endian 16-bit samples.
ImageGray load_pgm(const std::filesystem::path& path);
ImageGray parse_pgm(const std::vector<std::uint8_t>& bytes);

/// 8-bit P5 output; intensities are clamped to [0, 1] and rounded.
void save_pgm(const std::filesystem::path& path, const ImageGray& image);
std::vector<std::uint8_t> encode_pgm(const ImageGray& image);

/// IDX image archive (magic 0x00000803), one image per record.
std::vector<ImageGray> load_idx_images(const std::filesystem::path& path);
std::vector<ImageGray> parse_idx_images(const std::vector<std::uint8_t>& bytes);

/// Draws cfg.count patches uniformly over all (image, top-left corner) pairs,
/// with replacement.
PatchMatrix sample_patches(const std::vector<ImageGray>& images, const SamplerConfig& cfg);

/// Subtracts the row means; returns the centered patches and the means.
std::pair<PatchMatrix, Eigen::VectorXd> center(const PatchMatrix& patches);

/// Copies a w x w window with top-left corner (x, y) into a row-major vector.
Eigen::VectorXd extract_patch(const ImageGray& image, int x, int y, int w);

}  // namespace hinfomax
