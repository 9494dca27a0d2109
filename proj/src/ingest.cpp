#include "hinfomax/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <string>

#include "hinfomax/errors.hpp"
#include "hinfomax/io.hpp"
#include "hinfomax/random.hpp"

namespace hinfomax {

namespace {

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string pgm_token(const std::vector<std::uint8_t>& bytes, std::size_t& pos) {
    while (pos < bytes.size()) {
        const char c = static_cast<char>(bytes[pos]);
        if (c == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        } else if (std::isspace(static_cast<unsigned char>(c))) {
            ++pos;
        } else {
            break;
        }
    }
    std::string token;
    while (pos < bytes.size() && !std::isspace(bytes[pos]) && bytes[pos] != '#')
        token.push_back(static_cast<char>(bytes[pos++]));
    if (token.empty()) throw FormatError("PGM header ended prematurely");
    return token;
}

int pgm_int(const std::vector<std::uint8_t>& bytes, std::size_t& pos, const char* field) {
    const std::string tok = pgm_token(bytes, pos);
    if (!std::all_of(tok.begin(), tok.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }) ||
        tok.size() > 9)
        throw FormatError(std::string("PGM header field '") + field + "' is not a valid integer: " + tok);
    return std::stoi(tok);
}

}  // namespace

ImageGray parse_pgm(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
        std::string magic(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(2, bytes.size())));
        throw FormatError("unsupported PGM magic '" + magic + "' (only binary P5 is accepted)");
    }
    std::size_t pos = 2;
    const int width = pgm_int(bytes, pos, "width");
    const int height = pgm_int(bytes, pos, "height");
    const int maxval = pgm_int(bytes, pos, "maxval");
    if (width <= 0 || height <= 0) throw FormatError("PGM dimensions must be positive");
    if (maxval < 1 || maxval > 65535) throw FormatError("PGM maxval out of range: " + std::to_string(maxval));
    if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw FormatError("PGM header not terminated by whitespace");
    ++pos;

    const std::size_t bytes_per_sample = maxval > 255 ? 2 : 1;
    const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    const std::size_t need = count * bytes_per_sample;
    if (bytes.size() - pos < need)
        throw LengthError("PGM payload truncated: expected " + std::to_string(need) + " bytes, found " +
                          std::to_string(bytes.size() - pos));

    ImageGray img(width, height);
    const double scale = 1.0 / maxval;
    for (std::size_t i = 0; i < count; ++i) {
        unsigned v;
        if (bytes_per_sample == 1) {
            v = bytes[pos + i];
        } else {
            v = (unsigned{bytes[pos + 2 * i]} << 8) | bytes[pos + 2 * i + 1];
        }
        if (v > static_cast<unsigned>(maxval)) throw FormatError("PGM sample exceeds maxval");
        img.intensities[i] = v * scale;
    }
    return img;
}

ImageGray load_pgm(const std::filesystem::path& path) { return parse_pgm(io::read_file(path)); }

std::vector<std::uint8_t> encode_pgm(const ImageGray& image) {
    const std::string header =
        "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + image.intensities.size());
    for (double v : image.intensities) {
        const double c = std::clamp(v, 0.0, 1.0);
        out.push_back(static_cast<std::uint8_t>(std::lround(c * 255.0)));
    }
    return out;
}

void save_pgm(const std::filesystem::path& path, const ImageGray& image) {
    io::write_file_atomic(path, encode_pgm(image));
}

std::vector<ImageGray> parse_idx_images(const std::vector<std::uint8_t>& bytes) {
    io::ByteReader in(bytes);
    const std::uint32_t magic = in.u32_be();
    if (magic != 0x00000803u) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "0x%08x", magic);
        throw FormatError(std::string("not an IDX image archive: magic ") + buf + " (expected 0x00000803)");
    }
    const std::uint32_t count = in.u32_be();
    const std::uint32_t rows = in.u32_be();
    const std::uint32_t cols = in.u32_be();
    const std::uint64_t pixels = std::uint64_t{rows} * cols;
    const std::uint64_t expected = pixels * count;
    if (in.remaining() != expected)
        throw LengthError("IDX payload holds " + std::to_string(in.remaining()) + " bytes but header declares " +
                          std::to_string(count) + "x" + std::to_string(rows) + "x" + std::to_string(cols));

    std::vector<ImageGray> images;
    images.reserve(count);
    const auto payload = in.take(static_cast<std::size_t>(expected));
    for (std::uint32_t n = 0; n < count; ++n) {
        ImageGray img(static_cast<int>(cols), static_cast<int>(rows));
        const auto* p = payload.data() + n * pixels;
        for (std::uint64_t i = 0; i < pixels; ++i) img.intensities[i] = p[i] / 255.0;
        images.push_back(std::move(img));
    }
    return images;
}

std::vector<ImageGray> load_idx_images(const std::filesystem::path& path) {
    return parse_idx_images(io::read_file(path));
}

Eigen::VectorXd extract_patch(const ImageGray& image, int x, int y, int w) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(w) * w);
    for (int r = 0; r < w; ++r)
        for (int c = 0; c < w; ++c) v[r * w + c] = image.at(x + c, y + r);
    return v;
}

PatchMatrix sample_patches(const std::vector<ImageGray>& images, const SamplerConfig& cfg) {
    if (cfg.patch_width < 1) throw ConfigError("patch width must be at least 1");
    if (cfg.count < 1) throw ConfigError("patch count must be at least 1");
    if (images.empty()) throw GeometryError("no images to sample patches from");

    const int w = cfg.patch_width;
    // Cumulative corner counts give a uniform draw over (image, corner) pairs.
    std::vector<std::uint64_t> cumulative;
    cumulative.reserve(images.size());
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < images.size(); ++i) {
        const auto& img = images[i];
        if (img.width < w || img.height < w)
            throw GeometryError("image " + std::to_string(i) + " is " + std::to_string(img.width) + "x" +
                                std::to_string(img.height) + ", smaller than the " + std::to_string(w) + "x" +
                                std::to_string(w) + " patch");
        total += static_cast<std::uint64_t>(img.width - w + 1) * static_cast<std::uint64_t>(img.height - w + 1);
        cumulative.push_back(total);
    }

    PatchMatrix out;
    out.patch_width = w;
    out.data.resize(static_cast<Eigen::Index>(w) * w, cfg.count);
    Rng rng(cfg.seed);
    for (std::int64_t m = 0; m < cfg.count; ++m) {
        const std::uint64_t pick = rng.index(total);
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
        const auto idx = static_cast<std::size_t>(it - cumulative.begin());
        const std::uint64_t local = pick - (idx == 0 ? 0 : cumulative[idx - 1]);
        const auto& img = images[idx];
        const auto span_x = static_cast<std::uint64_t>(img.width - w + 1);
        const int x = static_cast<int>(local % span_x);
        const int y = static_cast<int>(local / span_x);
        out.data.col(m) = extract_patch(img, x, y, w);
    }
    return out;
}

std::pair<PatchMatrix, Eigen::VectorXd> center(const PatchMatrix& patches) {
    Eigen::VectorXd mean = patches.data.rowwise().mean();
    PatchMatrix centered{patches.data.colwise() - mean, patches.patch_width};
    return {std::move(centered), std::move(mean)};
}

}  // namespace hinfomax
