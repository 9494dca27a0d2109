#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hinfomax::io {

using Bytes = std::vector<std::uint8_t>;

Bytes read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it into place, so readers
/// never observe a partially written artifact.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

/// Hex-encoded SHA-256 of a file's contents.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(std::span<const std::uint8_t> bytes);

// Cursor over an in-memory byte buffer with endian-aware readers. Every read
// past the end raises LengthError.
class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint8_t u8();
    std::uint32_t u32_be();
    std::uint32_t u32_le();
    float f32_le();
    double f64_le();
    std::span<const std::uint8_t> take(std::size_t n);

    std::size_t position() const { return pos_; }
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    void need(std::size_t n) const;

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

class ByteWriter {
public:
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u32_le(std::uint32_t v);
    void f32_le(float v);
    void f64_le(double v);
    void raw(std::span<const std::uint8_t> bytes);
    void raw(const std::string& s);

    const Bytes& bytes() const { return out_; }
    Bytes take() { return std::move(out_); }

private:
    Bytes out_;
};

// "mat1" raw matrix format: magic "PIMX", version byte 1, u32 LE rows, u32 LE
// cols, then rows*cols LE float32 values in column-major order.
void write_mat1(ByteWriter& out, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_mat1(ByteReader& in);

void save_mat1(const std::filesystem::path& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd load_mat1(const std::filesystem::path& path);

}  // namespace hinfomax::io
