#include <doctest.h>

#include <cmath>
#include <cstring>
#include <string>

#include "hinfomax/errors.hpp"
#include "hinfomax/ingest.hpp"
#include "hinfomax/io.hpp"
#include "support.hpp"

using namespace hinfomax;

namespace {

std::vector<std::uint8_t> bytes_of(const std::string& header, std::initializer_list<int> payload) {
    std::vector<std::uint8_t> b(header.begin(), header.end());
    for (int v : payload) b.push_back(static_cast<std::uint8_t>(v));
    return b;
}

std::vector<std::uint8_t> idx_file(std::uint32_t magic, std::uint32_t n, std::uint32_t rows, std::uint32_t cols,
                                   const std::vector<int>& payload) {
    std::vector<std::uint8_t> b;
    for (std::uint32_t v : {magic, n, rows, cols})
        for (int s = 24; s >= 0; s -= 8) b.push_back(static_cast<std::uint8_t>(v >> s));
    for (int v : payload) b.push_back(static_cast<std::uint8_t>(v));
    return b;
}

}  // namespace

TEST_CASE("pgm 8-bit values scale by maxval") {
    const auto img = parse_pgm(bytes_of("P5\n2 2\n255\n", {0, 255, 128, 64}));
    CHECK(img.width == 2);
    CHECK(img.height == 2);
    CHECK(img.at(0, 0) == 0.0);
    CHECK(img.at(1, 0) == 1.0);
    CHECK(img.at(0, 1) == doctest::Approx(0.50196).epsilon(1e-5));
    CHECK(img.at(1, 1) == doctest::Approx(0.25098).epsilon(1e-5));
}

TEST_CASE("pgm 16-bit big-endian and comments") {
    const auto zero = parse_pgm(bytes_of("P5\n2 1\n65535\n", {0, 0, 0, 0}));
    CHECK(zero.intensities == std::vector<double>{0.0, 0.0});
    const auto img = parse_pgm(bytes_of("P5 # a comment\n# another\n2 1 65535\n", {0xff, 0xff, 0x80, 0x00}));
    CHECK(img.at(0, 0) == 1.0);
    CHECK(img.at(1, 0) == doctest::Approx(32768.0 / 65535.0));
}

TEST_CASE("pgm rejects ascii magic and truncated payloads") {
    CHECK_THROWS_AS(parse_pgm(bytes_of("P2\n2 2\n255\n0 1 2 3\n", {})), FormatError);
    CHECK_THROWS_AS(parse_pgm(bytes_of("P5\n2 2\n255\n", {1, 2, 3})), LengthError);
    CHECK_THROWS_AS(parse_pgm(bytes_of("P5\n2 2\n", {})), Error);
    CHECK_THROWS_AS(parse_pgm(bytes_of("P5\n2 2\n0\n", {0, 0, 0, 0})), FormatError);
}

TEST_CASE("pgm encode round trip stays within quantization") {
    ImageGray img(3, 2);
    img.intensities = {0.0, 0.25, 0.5, 0.75, 1.0, 0.1};
    const auto back = parse_pgm(encode_pgm(img));
    REQUIRE(back.width == 3);
    for (std::size_t i = 0; i < img.intensities.size(); ++i)
        CHECK(std::abs(back.intensities[i] - img.intensities[i]) <= 0.5 / 255 + 1e-12);
    testsupport::TempDir dir("pgm");
    save_pgm(dir.path / "x.pgm", img);
    CHECK(load_pgm(dir.path / "x.pgm").intensities == back.intensities);
}

TEST_CASE("idx images") {
    const auto imgs = parse_idx_images(idx_file(0x803, 1, 2, 2, {0, 51, 102, 255}));
    REQUIRE(imgs.size() == 1);
    CHECK(imgs[0].intensities[0] == 0.0);
    CHECK(imgs[0].intensities[1] == doctest::Approx(0.2));
    CHECK(imgs[0].intensities[2] == doctest::Approx(0.4));
    CHECK(imgs[0].intensities[3] == 1.0);
    CHECK(parse_idx_images(idx_file(0x803, 3, 2, 1, {1, 2, 3, 4, 5, 6})).size() == 3);
    CHECK_THROWS_AS(parse_idx_images(idx_file(0x801, 1, 2, 2, {0, 0, 0, 0})), FormatError);
    CHECK_THROWS_AS(parse_idx_images(idx_file(0x803, 2, 2, 2, {0, 0, 0, 0})), LengthError);
    CHECK_THROWS_AS(parse_idx_images(idx_file(0x803, 1, 2, 2, {0, 0, 0, 0, 9})), LengthError);
}

TEST_CASE("sample_patches single corner gives identical columns") {
    ImageGray img(12, 12);
    for (std::size_t i = 0; i < img.intensities.size(); ++i) img.intensities[i] = (i % 17) / 16.0;
    const auto p = sample_patches({img}, {12, 3, 5});
    REQUIRE(p.dim() == 144);
    REQUIRE(p.samples() == 3);
    for (int j = 0; j < 3; ++j)
        for (int i = 0; i < 144; ++i) CHECK(p.data(i, j) == img.intensities[static_cast<std::size_t>(i)]);
}

TEST_CASE("sample_patches is deterministic and every column is a real window") {
    hinfomax::Rng rng(3);
    ImageGray a(20, 15), b(9, 30);
    for (auto& v : a.intensities) v = rng.uniform();
    for (auto& v : b.intensities) v = rng.uniform();
    const SamplerConfig cfg{5, 400, 77};
    const auto p1 = sample_patches({a, b}, cfg);
    const auto p2 = sample_patches({a, b}, cfg);
    CHECK(p1.data == p2.data);
    CHECK(sample_patches({a, b}, {5, 400, 78}).data != p1.data);
    for (Eigen::Index j = 0; j < p1.samples(); ++j) {
        bool found = false;
        for (const auto* img : {&a, &b})
            for (int y = 0; y + 5 <= img->height && !found; ++y)
                for (int x = 0; x + 5 <= img->width && !found; ++x)
                    found = extract_patch(*img, x, y, 5) == p1.data.col(j);
        CHECK(found);
    }
}

TEST_CASE("sample_patches corner distribution is uniform over (image, corner)") {
    // Two images with 1 and 4 valid corners: image membership should be ~1/5 vs 4/5.
    ImageGray small(2, 2, 0.0), big(3, 3, 1.0);
    const auto p = sample_patches({small, big}, {2, 20000, 1});
    double from_small = 0;
    for (Eigen::Index j = 0; j < p.samples(); ++j) from_small += p.data.col(j).sum() == 0.0;
    CHECK(from_small / 20000.0 == doctest::Approx(0.2).epsilon(0.1));
}

TEST_CASE("sample_patches errors") {
    ImageGray img(4, 4);
    CHECK_THROWS_AS(sample_patches({img}, {5, 10, 0}), GeometryError);
    CHECK_THROWS_AS(sample_patches({}, {2, 10, 0}), GeometryError);
    CHECK_THROWS_AS(sample_patches({img}, {0, 10, 0}), ConfigError);
    CHECK_THROWS_AS(sample_patches({img}, {2, 0, 0}), ConfigError);
}

TEST_CASE("extract_patch is row-major") {
    ImageGray img(3, 3);
    for (int i = 0; i < 9; ++i) img.intensities[static_cast<std::size_t>(i)] = i / 10.0;
    const Eigen::VectorXd p = extract_patch(img, 1, 1, 2);
    CHECK(p[0] == doctest::Approx(0.4));
    CHECK(p[1] == doctest::Approx(0.5));
    CHECK(p[2] == doctest::Approx(0.7));
    CHECK(p[3] == doctest::Approx(0.8));
}

TEST_CASE("center") {
    PatchMatrix p;
    p.data.resize(1, 2);
    p.data << 1, 3;
    p.patch_width = 1;
    auto [c, mean] = center(p);
    CHECK(c.data(0, 0) == -1.0);
    CHECK(c.data(0, 1) == 1.0);
    CHECK(mean[0] == 2.0);

    auto [c2, mean2] = center(c);
    CHECK(c2.data == c.data);
    CHECK(mean2.isZero());

    hinfomax::Rng rng(9);
    PatchMatrix r;
    r.data = testsupport::random_matrix(rng, 5, 100, 3.0).array() + 7.0;
    auto [rc, rm] = center(r);
    CHECK(rc.data.rowwise().mean().cwiseAbs().maxCoeff() < 1e-12);
    CHECK((rc.data.colwise() + rm - r.data).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("mat1 format") {
    Eigen::MatrixXd m(2, 3);
    m << 1, 2, 3, 4.5, -5, 6.25;
    io::ByteWriter w;
    io::write_mat1(w, m);
    const auto& b = w.bytes();
    REQUIRE(b.size() == 4 + 1 + 8 + 6 * 4);
    CHECK(std::string(b.begin(), b.begin() + 4) == "PIMX");
    CHECK(b[4] == 1);
    CHECK(b[5] == 2);  // rows, little-endian
    CHECK(b[9] == 3);  // cols
    float first_col_second;
    std::memcpy(&first_col_second, b.data() + 13 + 4, 4);
    CHECK(first_col_second == 4.5f);  // column-major
    io::ByteReader r(b);
    CHECK(io::read_mat1(r) == m);

    testsupport::TempDir dir("mat1");
    io::save_mat1(dir.path / "m.mat1", m);
    CHECK(io::load_mat1(dir.path / "m.mat1") == m);

    auto bad = b;
    bad[0] = 'X';
    io::ByteReader rb(bad);
    CHECK_THROWS_AS(io::read_mat1(rb), FormatError);
    auto version = b;
    version[4] = 2;
    io::ByteReader rv(version);
    CHECK_THROWS_AS(io::read_mat1(rv), FormatError);
    auto shortb = b;
    shortb.pop_back();
    io::ByteReader rs(shortb);
    CHECK_THROWS_AS(io::read_mat1(rs), LengthError);
    CHECK_THROWS_AS(io::load_mat1(dir.path / "missing.mat1"), IoError);
}

TEST_CASE("sha256 of a known string") {
    const std::string abc = "abc";
    CHECK(io::sha256_hex(std::span(reinterpret_cast<const std::uint8_t*>(abc.data()), abc.size())) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("loaded intensities stay in [0, 1]") {
    hinfomax::Rng rng(4);
    std::vector<std::uint8_t> b{'P', '5', '\n', '8', ' ', '8', '\n', '2', '5', '5', '\n'};
    for (int i = 0; i < 64; ++i) b.push_back(static_cast<std::uint8_t>(rng.index(256)));
    for (double v : parse_pgm(b).intensities) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}
