#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <unistd.h>

#include <Eigen/Dense>

#include "hinfomax/ingest.hpp"
#include "hinfomax/random.hpp"
#include "hinfomax/train.hpp"

namespace testsupport {

// Normalized Amari index of a square composite unmixing; 0 for a scaled
// permutation, at most 1.
inline double amari_index(const Eigen::MatrixXd& G) {
    const Eigen::MatrixXd P = G.cwiseAbs();
    const auto n = P.rows();
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) s += P.row(i).sum() / P.row(i).maxCoeff() - 1.0;
    for (Eigen::Index j = 0; j < n; ++j) s += P.col(j).sum() / P.col(j).maxCoeff() - 1.0;
    return s / (2.0 * n * (n - 1));
}

inline Eigen::MatrixXd random_matrix(hinfomax::Rng& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i < r; ++i) m(i, j) = scale * rng.normal();
    return m;
}

// Rows orthonormal (K0 <= K1) via Householder QR of a Gaussian matrix.
inline Eigen::MatrixXd random_orthonormal_rows(hinfomax::Rng& rng, Eigen::Index k0, Eigen::Index k1) {
    const Eigen::MatrixXd g = random_matrix(rng, k1, k0);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(k1, k0);
    return q.transpose();
}

// Central differences of f over every entry of C.
inline Eigen::MatrixXd numeric_gradient(const std::function<double(const Eigen::MatrixXd&)>& f,
                                        const Eigen::MatrixXd& C, double h = 1e-6) {
    Eigen::MatrixXd g(C.rows(), C.cols());
    for (Eigen::Index j = 0; j < C.cols(); ++j)
        for (Eigen::Index i = 0; i < C.rows(); ++i) {
            Eigen::MatrixXd p = C, m = C;
            p(i, j) += h;
            m(i, j) -= h;
            g(i, j) = (f(p) - f(m)) / (2.0 * h);
        }
    return g;
}

inline double relative_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return (a - b).norm() / std::max(1e-12, std::max(a.norm(), b.norm()));
}

// Independent Laplacian sources mixed by a well-conditioned square matrix.
struct Mixture {
    Eigen::MatrixXd A;
    Eigen::MatrixXd X;
};

inline Mixture laplace_mixture(std::uint64_t seed, int n, Eigen::Index m) {
    hinfomax::Rng rng(seed);
    Mixture out;
    Eigen::MatrixXd S(n, m);
    for (Eigen::Index j = 0; j < m; ++j)
        for (int i = 0; i < n; ++i) S(i, j) = rng.laplace();
    out.A = Eigen::MatrixXd::Identity(n, n) * 1.5;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) out.A(i, j) += rng.uniform(-1.0, 1.0);
    out.X = out.A * S;
    return out;
}

// Smooth random field plus oriented gratings, intensities scaled into [0, 1].
inline hinfomax::ImageGray synthetic_texture(int width, int height, std::uint64_t seed) {
    hinfomax::Rng rng(seed);
    std::vector<double> field(static_cast<std::size_t>(width) * height);
    for (auto& v : field) v = rng.normal();
    // Separable Gaussian blur, sigma 1.5 px.
    const int r = 5;
    std::vector<double> k(2 * r + 1);
    double ks = 0.0;
    for (int i = -r; i <= r; ++i) ks += k[i + r] = std::exp(-0.5 * i * i / 2.25);
    for (auto& v : k) v /= ks;
    auto blur = [&](bool horizontal) {
        std::vector<double> out(field.size(), 0.0);
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) {
                double s = 0.0;
                for (int i = -r; i <= r; ++i) {
                    const int xx = horizontal ? std::clamp(x + i, 0, width - 1) : x;
                    const int yy = horizontal ? y : std::clamp(y + i, 0, height - 1);
                    s += k[i + r] * field[static_cast<std::size_t>(yy) * width + xx];
                }
                out[static_cast<std::size_t>(y) * width + x] = s;
            }
        field.swap(out);
    };
    blur(true);
    blur(false);
    hinfomax::ImageGray img(width, height);
    double mean = 0.0, sq = 0.0;
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const double v = 3.0 * field[static_cast<std::size_t>(y) * width + x] + 0.6 * std::sin(0.7 * x + 0.3 * y) +
                             0.4 * std::sin(0.25 * x - 0.9 * y) + 0.05 * rng.normal();
            img.at(x, y) = v;
            mean += v;
            sq += v * v;
        }
    const double n = static_cast<double>(width) * height;
    mean /= n;
    const double sd = std::sqrt(sq / n - mean * mean);
    for (auto& v : img.intensities) v = std::clamp(0.5 + 0.15 * (v - mean) / sd, 0.0, 1.0);
    return img;
}

// Fresh scratch directory, removed on destruction.
struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() /
               ("hinfomax_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

}  // namespace testsupport
