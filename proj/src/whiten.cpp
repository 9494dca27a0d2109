#include "hinfomax/whiten.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "hinfomax/errors.hpp"
#include "hinfomax/io.hpp"

namespace hinfomax {

int select_rank(const Eigen::VectorXd& spectrum, double threshold) {
    if (spectrum.size() == 0) throw DomainError("select_rank: empty spectrum");
    if (!(threshold > 0.0 && threshold <= 1.0))
        throw DomainError("select_rank: threshold must lie in (0, 1], got " + std::to_string(threshold));
    for (Eigen::Index k = 0; k < spectrum.size(); ++k)
        if (!(spectrum[k] > 0.0))
            throw DomainError("select_rank: spectrum entry " + std::to_string(k) + " is not positive");

    const auto K = static_cast<int>(spectrum.size());
    // Every partial sum of a positive spectrum is strictly below the total.
    if (threshold == 1.0) return K;

    Eigen::VectorXd cumulative(K);
    double acc = 0.0;
    for (int k = 0; k < K; ++k) cumulative[k] = (acc += spectrum[k]);
    const double total = cumulative[K - 1];
    for (int k = 0; k < K; ++k)
        if (std::sqrt(cumulative[k] / total) >= threshold) return k + 1;
    return K;
}

WhiteningModel fit_whitening(const PatchMatrix& patches, double threshold) {
    const Eigen::Index M = patches.samples();
    if (M < 2) throw GeometryError("fit_whitening needs at least 2 samples, got " + std::to_string(M));

    auto [centered, mean] = center(patches);
    const Eigen::MatrixXd cov = (centered.data * centered.data.transpose()) / static_cast<double>(M - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success) throw ConditioningError("covariance eigendecomposition did not converge");

    const Eigen::Index K = cov.rows();
    WhiteningModel model;
    model.mean = std::move(mean);
    model.eigvecs.resize(K, K);
    model.spectrum.resize(K);
    // The solver returns ascending eigenvalues; reverse into descending order.
    for (Eigen::Index k = 0; k < K; ++k) {
        model.spectrum[k] = eig.eigenvalues()[K - 1 - k];
        Eigen::VectorXd v = eig.eigenvectors().col(K - 1 - k);
        Eigen::Index imax = 0;
        v.cwiseAbs().maxCoeff(&imax);
        if (v[imax] < 0) v = -v;
        model.eigvecs.col(k) = v;
    }

    const double largest = model.spectrum[0];
    for (Eigen::Index k = 0; k < K; ++k) {
        if (!(model.spectrum[k] > 1e-12 * largest)) {
            std::ostringstream msg;
            msg << "covariance is rank-deficient: eigenvalue " << k + 1 << " of " << K << " is "
                << model.spectrum[k] << " (largest " << largest << ")";
            throw ConditioningError(msg.str());
        }
    }

    model.threshold = threshold;
    model.retained_rank = select_rank(model.spectrum, threshold);
    model.patch_width = patches.patch_width;
    return model;
}

namespace {
void check_dim(const WhiteningModel& model, const Eigen::MatrixXd& patches) {
    if (patches.rows() != model.dim())
        throw GeometryError("patch dimension " + std::to_string(patches.rows()) + " does not match model dimension " +
                            std::to_string(model.dim()));
}
}  // namespace

Eigen::MatrixXd transform(const WhiteningModel& model, const Eigen::MatrixXd& patches, WhitenMode mode) {
    check_dim(model, patches);
    const Eigen::VectorXd inv_sqrt = model.variances().cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd white = inv_sqrt.asDiagonal() * (model.basis().transpose() * (patches.colwise() - model.mean));
    if (mode == WhitenMode::whiten) return white;
    return model.basis() * white;
}

Eigen::MatrixXd reconstruct_lowrank(const WhiteningModel& model, const Eigen::MatrixXd& patches) {
    check_dim(model, patches);
    const auto U0 = model.basis();
    Eigen::MatrixXd out = U0 * (U0.transpose() * (patches.colwise() - model.mean));
    out.colwise() += model.mean;
    return out;
}

namespace {
constexpr char kModelMagic[] = "PIWM";
}

void save_whitening(const std::filesystem::path& path, const WhiteningModel& model) {
    io::ByteWriter w;
    w.raw(std::string(kModelMagic, 4));
    w.u8(1);
    w.u32_le(static_cast<std::uint32_t>(model.retained_rank));
    w.f64_le(model.threshold);
    w.u32_le(static_cast<std::uint32_t>(model.patch_width));
    io::write_mat1(w, model.mean);
    io::write_mat1(w, model.eigvecs);
    io::write_mat1(w, model.spectrum);
    io::write_file_atomic(path, w.bytes());
}

WhiteningModel load_whitening(const std::filesystem::path& path) {
    const auto bytes = io::read_file(path);
    io::ByteReader r(bytes);
    const auto magic = r.take(4);
    if (std::string(magic.begin(), magic.end()) != kModelMagic)
        throw FormatError("'" + path.string() + "' is not a whitening model file");
    if (r.u8() != 1) throw FormatError("unsupported whitening model version");
    WhiteningModel model;
    model.retained_rank = static_cast<int>(r.u32_le());
    model.threshold = r.f64_le();
    model.patch_width = static_cast<int>(r.u32_le());
    const Eigen::MatrixXd mean = io::read_mat1(r);
    model.eigvecs = io::read_mat1(r);
    const Eigen::MatrixXd spectrum = io::read_mat1(r);
    const Eigen::Index K = model.eigvecs.rows();
    if (model.eigvecs.cols() != K || mean.rows() != K || mean.cols() != 1 || spectrum.rows() != K ||
        spectrum.cols() != 1 || model.retained_rank < 1 || model.retained_rank > K)
        throw FormatError("inconsistent whitening model dimensions in '" + path.string() + "'");
    model.mean = mean.col(0);
    model.spectrum = spectrum.col(0);
    return model;
}

}  // namespace hinfomax
