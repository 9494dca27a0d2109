#include "hinfomax/analyze.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "hinfomax/errors.hpp"
#include "hinfomax/parallel.hpp"

namespace hinfomax {

namespace {

void check_samples(const std::vector<double>& samples) {
    if (samples.size() < 100)
        throw DomainError("kde_entropy needs at least 100 samples, got " + std::to_string(samples.size()));
    for (double v : samples)
        if (!std::isfinite(v)) throw DomainError("kde_entropy: non-finite sample");
}

double sample_sd(const std::vector<double>& samples) {
    double mean = 0.0;
    for (double v : samples) mean += v;
    mean /= static_cast<double>(samples.size());
    double ss = 0.0;
    for (double v : samples) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(samples.size() - 1));
}

}  // namespace

double silverman_bandwidth(const std::vector<double>& samples) {
    check_samples(samples);
    const double sd = sample_sd(samples);
    if (!(sd >= 1e-12)) throw DegenerateError("kde_entropy: sample standard deviation is ~0");
    return 1.06 * sd * std::pow(static_cast<double>(samples.size()), -0.2);
}

double kde_entropy(const std::vector<double>& samples, const KdeOptions& opts) {
    if (opts.bins < 2) throw ConfigError("kde bins must be at least 2");
    if (!(opts.margin >= 0.0)) throw ConfigError("kde margin must be non-negative");
    const double h = silverman_bandwidth(samples);
    const auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
    const double lo = *mn - opts.margin * h;
    const double hi = *mx + opts.margin * h;
    const int points = opts.bins + 1;
    const double delta = (hi - lo) / opts.bins;

    std::vector<double> mass(static_cast<std::size_t>(points), 0.0);
    for (double v : samples) {
        const double pos = (v - lo) / delta;
        const int j = std::clamp(static_cast<int>(pos), 0, points - 2);
        const double frac = pos - j;
        mass[static_cast<std::size_t>(j)] += 1.0 - frac;
        mass[static_cast<std::size_t>(j) + 1] += frac;
    }

    const int reach = static_cast<int>(std::ceil(6.0 * h / delta));
    std::vector<double> kernel(static_cast<std::size_t>(reach) + 1);
    const double norm = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * h * static_cast<double>(samples.size()));
    for (int d = 0; d <= reach; ++d) {
        const double u = d * delta / h;
        kernel[static_cast<std::size_t>(d)] = norm * std::exp(-0.5 * u * u);
    }

    std::vector<double> q(static_cast<std::size_t>(points), 0.0);
    for (int j = 0; j < points; ++j) {
        const double m = mass[static_cast<std::size_t>(j)];
        if (m == 0.0) continue;
        const int a = std::max(0, j - reach);
        const int b = std::min(points - 1, j + reach);
        for (int i = a; i <= b; ++i) q[static_cast<std::size_t>(i)] += m * kernel[static_cast<std::size_t>(std::abs(i - j))];
    }

    // Renormalize so the grid density integrates to one.
    double total = 0.0;
    for (double v : q) total += v;
    total *= delta;
    double entropy = 0.0;
    for (double v : q) {
        const double p = v / total;
        if (p > 0.0) entropy -= p * std::log2(p);
    }
    return entropy * delta;
}

double coefficient_entropy(const Dictionary& dict, const Eigen::MatrixXd& x_check, const KdeOptions& opts,
                           int threads) {
    const auto& F = dict.C_check;
    if (F.rows() != x_check.rows())
        throw ShapeError("coefficient_entropy: filters have " + std::to_string(F.rows()) + " rows but data has " +
                         std::to_string(x_check.rows()));
    const Eigen::Index K1 = F.cols();
    if (K1 < 1) throw ShapeError("coefficient_entropy: no filters");
    double norm_sum = 0.0;
    for (Eigen::Index k = 0; k < K1; ++k) {
        const double n = F.col(k).norm();
        if (!(n > 0.0)) throw DegenerateError("coefficient_entropy: filter " + std::to_string(k) + " has zero norm");
        norm_sum += n;
    }
    const double zeta = static_cast<double>(K1) / norm_sum;

    std::vector<double> per_filter(static_cast<std::size_t>(K1));
    parallel_for(K1, threads, [&](std::int64_t k) {
        const Eigen::VectorXd y = zeta * (x_check.transpose() * F.col(k));
        std::vector<double> s(y.data(), y.data() + y.size());
        per_filter[static_cast<std::size_t>(k)] = kde_entropy(s, opts);
    });
    double total = 0.0;
    for (double v : per_filter) total += v;
    return total / static_cast<double>(K1);
}

double conditional_entropy_from_phi(const Eigen::MatrixXd& C, const Eigen::MatrixXd& phi, double population_n,
                                    int threads) {
    if (!(population_n >= 1.0)) throw DomainError("population size N must be at least 1");
    if (phi.rows() != C.cols()) throw ShapeError("conditional_entropy: phi rows must equal K1");
    if (phi.cols() < 1) throw ShapeError("conditional_entropy: no samples");
    const Eigen::Index K0 = C.rows();
    const double gain = population_n / static_cast<double>(K0);
    const double log_2pie = std::log(2.0 * std::numbers::pi * std::numbers::e);

    const double sum = chunked_reduce<double>(
        phi.cols(), threads,
        [&](std::int64_t begin, std::int64_t end) {
            double s = 0.0;
            for (std::int64_t m = begin; m < end; ++m) {
                const Eigen::MatrixXd CPhi = C * phi.col(m).asDiagonal();
                Eigen::MatrixXd P = gain * (CPhi * CPhi.transpose());
                P.diagonal().array() += 1.0;
                Eigen::LLT<Eigen::MatrixXd> llt(P);
                // P >= I by construction, so this only trips on non-finite input.
                if (llt.info() != Eigen::Success)
                    throw ConditioningError("conditional_entropy: factorization failed at sample " + std::to_string(m));
                s += 2.0 * llt.matrixLLT().diagonal().array().log().sum() - static_cast<double>(K0) * log_2pie;
            }
            return s;
        },
        0.0, [](double& acc, double& p) { acc += p; });
    return -0.5 * sum / static_cast<double>(phi.cols());
}

double conditional_entropy(const FilterBank& filters, const Eigen::MatrixXd& xhat, const TuningParams& params,
                           double population_n, std::int64_t max_samples, int threads) {
    if (xhat.rows() != filters.C.rows())
        throw ShapeError("conditional_entropy: data has " + std::to_string(xhat.rows()) + " rows but K0 = " +
                         std::to_string(filters.C.rows()));
    Eigen::MatrixXd subset;
    const Eigen::MatrixXd* X = &xhat;
    if (max_samples > 0 && max_samples < xhat.cols()) {
        subset.resize(xhat.rows(), max_samples);
        for (std::int64_t i = 0; i < max_samples; ++i) subset.col(i) = xhat.col(i * xhat.cols() / max_samples);
        X = &subset;
    }
    const Nonlinearity nl = eval_nonlinearity(params, filters.C.transpose() * *X);
    return conditional_entropy_from_phi(filters.C, nl.phi, population_n, threads);
}

Dictionary extract_bases(const WhiteningModel& model, const FilterBank& filters, const TuningParams& params) {
    const auto& C = filters.C;
    if (C.rows() != model.retained_rank)
        throw ShapeError("extract_bases: C has " + std::to_string(C.rows()) + " rows but the model keeps " +
                         std::to_string(model.retained_rank) + " components");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(C * C.transpose());
    const Eigen::VectorXd& lam = eig.eigenvalues();
    if (eig.info() != Eigen::Success || !(lam.minCoeff() > 1e-12 * lam.maxCoeff()))
        throw ConditioningError("extract_bases: C C^T is singular");
    const Eigen::MatrixXd gram_inv_C =
        eig.eigenvectors() * lam.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose() * C;
    const Eigen::MatrixXd U0 = model.basis();
    const Eigen::VectorXd sd = model.variances().cwiseSqrt();
    const double a = params.scale;
    Dictionary d;
    d.B = (U0 * sd.asDiagonal() * gram_inv_C) / a;
    d.W = a * (U0 * sd.cwiseInverse().asDiagonal() * C);
    d.C_check = U0 * C;
    return d;
}

ImageGray render_filter_grid(const Eigen::MatrixXd& columns, int patch_width, std::vector<int>* zero_columns) {
    const int w = patch_width;
    if (w < 1 || columns.rows() != static_cast<Eigen::Index>(w) * w)
        throw ShapeError("render_filter_grid: column length " + std::to_string(columns.rows()) +
                         " is not patch_width^2 = " + std::to_string(w * w));
    const int n = static_cast<int>(columns.cols());
    if (n < 1) throw ShapeError("render_filter_grid: no columns");
    const int grid_cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n)) - 1e-9));
    const int grid_rows = (n + grid_cols - 1) / grid_cols;
    ImageGray img(grid_cols * w + grid_cols - 1, grid_rows * w + grid_rows - 1, 0.5);
    for (int k = 0; k < n; ++k) {
        const double peak = columns.col(k).cwiseAbs().maxCoeff();
        if (!(peak > 0.0)) {
            if (zero_columns) zero_columns->push_back(k);
            continue;
        }
        const int ox = (k % grid_cols) * (w + 1);
        const int oy = (k / grid_cols) * (w + 1);
        for (int y = 0; y < w; ++y)
            for (int x = 0; x < w; ++x) img.at(ox + x, oy + y) = 0.5 + 0.5 * columns(y * w + x, k) / peak;
    }
    return img;
}

ImageGray reconstruct_image(const ImageGray& image, const Dictionary& dict, const Eigen::VectorXd& mean,
                            int patch_width) {
    const int w = patch_width;
    if (dict.B.rows() != static_cast<Eigen::Index>(w) * w || dict.W.rows() != dict.B.rows() ||
        mean.size() != dict.B.rows())
        throw ShapeError("reconstruct_image: dictionary does not match patch width " + std::to_string(w));
    if (image.width < w || image.height < w)
        throw GeometryError("reconstruct_image: image " + std::to_string(image.width) + "x" +
                            std::to_string(image.height) + " is smaller than a " + std::to_string(w) + "x" +
                            std::to_string(w) + " patch");
    const Eigen::MatrixXd Wt = dict.W.transpose();
    std::vector<double> acc(image.intensities.size(), 0.0);
    std::vector<int> hits(image.intensities.size(), 0);
    for (int y0 = 0; y0 + w <= image.height; ++y0) {
        for (int x0 = 0; x0 + w <= image.width; ++x0) {
            const Eigen::VectorXd x = extract_patch(image, x0, y0, w);
            const Eigen::VectorXd rec = dict.B * (Wt * (x - mean)) + mean;
            for (int dy = 0; dy < w; ++dy)
                for (int dx = 0; dx < w; ++dx) {
                    const auto idx = static_cast<std::size_t>(y0 + dy) * image.width + (x0 + dx);
                    acc[idx] += rec[dy * w + dx];
                    ++hits[idx];
                }
        }
    }
    ImageGray out(image.width, image.height);
    for (std::size_t i = 0; i < acc.size(); ++i) out.intensities[i] = std::clamp(acc[i] / hits[i], 0.0, 1.0);
    return out;
}

DenoiseResult denoise_image(const ImageGray& clean, const ImageGray& noisy, const DenoiseOptions& opts) {
    if (opts.patch_width < 2) throw ConfigError("denoise: patch width must be at least 2");
    SamplerConfig sc;
    sc.patch_width = opts.patch_width;
    sc.count = opts.samples;
    sc.seed = opts.seed;
    const PatchMatrix patches = sample_patches({clean}, sc);
    const WhiteningModel model = fit_whitening(patches, opts.threshold);
    const Eigen::MatrixXd xhat = transform(model, patches.data, WhitenMode::whiten);

    const int k0 = model.retained_rank;
    const int k1 = opts.k1 > 0 ? opts.k1 : k0;
    TrainConfig cfg = opts.train;
    if (opts.auto_algorithm) cfg.algorithm = k0 == k1 ? Algorithm::alg1 : Algorithm::alg2;
    const TuningParams params = init_tuning(k0, k1, cfg.t0);
    const TrainResult trained = run_training(xhat, cfg, params);
    const Dictionary dict = extract_bases(model, trained.filters, trained.params);

    return {reconstruct_image(noisy, dict, model.mean, opts.patch_width), k0, k1};
}

double image_distance(const ImageGray& a, const ImageGray& b) {
    if (a.width != b.width || a.height != b.height) throw ShapeError("image_distance: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.intensities.size(); ++i) {
        const double d = a.intensities[i] - b.intensities[i];
        s += d * d;
    }
    return std::sqrt(s);
}

std::string metrics_csv(const std::vector<MetricsReport>& rows) {
    std::ostringstream out;
    out.precision(12);
    out << "epoch,cfe_bits,cde_nats,wall_seconds\n";
    for (const auto& r : rows) out << r.epoch << ',' << r.cfe_bits << ',' << r.cde_nats << ',' << r.wall_seconds << '\n';
    return out.str();
}

}  // namespace hinfomax
