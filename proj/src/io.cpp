#include "hinfomax/io.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <unistd.h>

#include <openssl/evp.h>

#include "hinfomax/errors.hpp"

namespace hinfomax::io {

namespace fs = std::filesystem;

Bytes read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failure on '" + path.string() + "'");
    return data;
}

void write_file_atomic(const fs::path& path, std::span<const std::uint8_t> bytes) {
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) {
            out.close();
            std::error_code ec;
            fs::remove(tmp, ec);
            throw IoError("write failure on '" + tmp.string() + "'");
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError("cannot move output into place at '" + path.string() + "'");
    }
}

void write_file_atomic(const fs::path& path, const std::string& text) {
    write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw IoError("SHA-256 digest failed");
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i)
        hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    return hex.str();
}

std::string sha256_file(const fs::path& path) {
    const Bytes data = read_file(path);
    return sha256_hex(data);
}

void ByteReader::need(std::size_t n) const {
    if (remaining() < n)
        throw LengthError("unexpected end of data: need " + std::to_string(n) + " bytes at offset " +
                          std::to_string(pos_) + ", have " + std::to_string(remaining()));
}

std::uint8_t ByteReader::u8() {
    need(1);
    return bytes_[pos_++];
}

std::uint32_t ByteReader::u32_be() {
    need(4);
    const auto* p = bytes_.data() + pos_;
    pos_ += 4;
    return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) |
           std::uint32_t{p[3]};
}

std::uint32_t ByteReader::u32_le() {
    need(4);
    const auto* p = bytes_.data() + pos_;
    pos_ += 4;
    return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
           (std::uint32_t{p[3]} << 24);
}

float ByteReader::f32_le() { return std::bit_cast<float>(u32_le()); }

double ByteReader::f64_le() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | bytes_[pos_ + static_cast<std::size_t>(i)];
    pos_ += 8;
    return std::bit_cast<double>(v);
}

std::span<const std::uint8_t> ByteReader::take(std::size_t n) {
    need(n);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
}

void ByteWriter::u32_le(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::f32_le(float v) { u32_le(std::bit_cast<std::uint32_t>(v)); }

void ByteWriter::f64_le(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

void ByteWriter::raw(std::span<const std::uint8_t> bytes) { out_.insert(out_.end(), bytes.begin(), bytes.end()); }

void ByteWriter::raw(const std::string& s) { out_.insert(out_.end(), s.begin(), s.end()); }

namespace {
constexpr char kMatMagic[4] = {'P', 'I', 'M', 'X'};
constexpr std::uint8_t kMatVersion = 1;
}  // namespace

void write_mat1(ByteWriter& out, const Eigen::MatrixXd& m) {
    out.raw(std::span(reinterpret_cast<const std::uint8_t*>(kMatMagic), 4));
    out.u8(kMatVersion);
    out.u32_le(static_cast<std::uint32_t>(m.rows()));
    out.u32_le(static_cast<std::uint32_t>(m.cols()));
    // Eigen's default storage is column-major, so data() is already in file order.
    const double* p = m.data();
    for (Eigen::Index i = 0; i < m.size(); ++i) out.f32_le(static_cast<float>(p[i]));
}

Eigen::MatrixXd read_mat1(ByteReader& in) {
    const auto magic = in.take(4);
    if (!std::equal(magic.begin(), magic.end(), kMatMagic))
        throw FormatError("not a mat1 matrix: bad magic");
    const auto version = in.u8();
    if (version != kMatVersion)
        throw FormatError("unsupported mat1 version " + std::to_string(version));
    const std::uint32_t rows = in.u32_le();
    const std::uint32_t cols = in.u32_le();
    const std::uint64_t count = std::uint64_t{rows} * cols;
    if (in.remaining() < count * 4)
        throw LengthError("mat1 payload truncated: expected " + std::to_string(count * 4) + " bytes, have " +
                          std::to_string(in.remaining()));
    Eigen::MatrixXd m(rows, cols);
    double* p = m.data();
    for (std::uint64_t i = 0; i < count; ++i) p[i] = in.f32_le();
    return m;
}

void save_mat1(const fs::path& path, const Eigen::MatrixXd& m) {
    ByteWriter w;
    write_mat1(w, m);
    write_file_atomic(path, w.bytes());
}

Eigen::MatrixXd load_mat1(const fs::path& path) {
    const Bytes data = read_file(path);
    ByteReader r(data);
    Eigen::MatrixXd m = read_mat1(r);
    if (r.remaining() != 0) throw LengthError("trailing bytes after mat1 payload in '" + path.string() + "'");
    return m;
}

}  // namespace hinfomax::io
