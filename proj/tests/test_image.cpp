#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <string>

#include "common.hpp"
#include "image.hpp"
#include "liftspace.hpp"

namespace {

std::string temp_path(const std::string& name) {
    return std::string("/tmp/cg_test_") + name;
}

}  // namespace

TEST_CASE("pgm 8-bit round trip is exact") {
    cg::Image2D img(7, 5, 1);
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 7; ++x) img.at(x, y) = (y * 7 + x) / 255.0;
    const std::string path = temp_path("roundtrip.pgm");
    cg::write_pgm(img, path, 8);
    const cg::Image2D back = cg::read_pnm(path);
    REQUIRE(back.width == 7);
    REQUIRE(back.height == 5);
    for (std::size_t i = 0; i < img.values.size(); ++i)
        CHECK(back.values[i] == doctest::Approx(img.values[i]).epsilon(1e-12));
    std::remove(path.c_str());
}

TEST_CASE("pgm 16-bit uses big-endian samples") {
    cg::Image2D img(2, 1, 1);
    img.at(0, 0) = 0.0;
    img.at(1, 0) = 1.0;
    const std::string path = temp_path("deep.pgm");
    cg::write_pgm(img, path, 16);
    std::ifstream in(path, std::ios::binary);
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    // header "P5\n2 1\n65535\n" then 00 00 ff ff
    const std::string tail = data.substr(data.size() - 4);
    CHECK(static_cast<unsigned char>(tail[0]) == 0x00);
    CHECK(static_cast<unsigned char>(tail[1]) == 0x00);
    CHECK(static_cast<unsigned char>(tail[2]) == 0xff);
    CHECK(static_cast<unsigned char>(tail[3]) == 0xff);
    const cg::Image2D back = cg::read_pnm(path);
    CHECK(back.at(0, 0) == 0.0);
    CHECK(back.at(1, 0) == 1.0);
    std::remove(path.c_str());
}

TEST_CASE("pnm header comments are skipped") {
    const std::string path = temp_path("comment.pgm");
    {
        std::ofstream out(path, std::ios::binary);
        out << "P5\n# a comment\n2 2\n255\n";
        out.put(0).put(64).put(char(128)).put(char(255));
    }
    const cg::Image2D img = cg::read_pnm(path);
    CHECK(img.width == 2);
    CHECK(img.at(1, 1) == 1.0);
    std::remove(path.c_str());
}

TEST_CASE("mask reader insists on {0, maxval}") {
    const std::string path = temp_path("mask.pgm");
    {
        std::ofstream out(path, std::ios::binary);
        out << "P5\n2 1\n255\n";
        out.put(0).put(char(255));
    }
    const cg::Mask mask = cg::read_mask_pgm(path);
    CHECK(mask.at(0, 0) == 0);
    CHECK(mask.at(1, 0) == 1);
    {
        std::ofstream out(path, std::ios::binary);
        out << "P5\n2 1\n255\n";
        out.put(0).put(char(100));
    }
    CHECK_THROWS_AS(cg::read_mask_pgm(path), cg::Error);
    std::remove(path.c_str());
}

TEST_CASE("truncated raster is rejected") {
    const std::string path = temp_path("trunc.pgm");
    {
        std::ofstream out(path, std::ios::binary);
        out << "P5\n4 4\n255\n";
        out.put(1).put(2);
    }
    CHECK_THROWS_AS(cg::read_pnm(path), cg::Error);
    std::remove(path.c_str());
}

TEST_CASE("preprocess: constant channels give a constant image") {
    cg::Image2D r(32, 32, 1, 0.4), g(32, 32, 1, 0.4);
    const cg::Image2D out = cg::preprocess(r, g);
    for (double v : out.values) {
        CHECK(v == doctest::Approx(out.values[0]).epsilon(1e-12));
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("preprocess: normalized 0.6/0.8 pair combines to 1 before rescale") {
    // direct arithmetic on the combination formula
    const double combined = std::sqrt(0.6 * 0.6 + 0.8 * 0.8);
    CHECK(combined == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("preprocess: grayscale input equals the rescaled channel") {
    cg::Image2D ch(48, 48, 1, 0.0);
    for (int y = 0; y < 48; ++y)
        for (int x = 0; x < 48; ++x) ch.at(x, y) = 0.5 + 0.4 * std::sin(0.3 * x) * std::cos(0.2 * y);
    // single-channel rule: the channel is used as both I_g and I_r, so the
    // combination is channel * sqrt(2) and the rescale removes the factor
    const cg::Image2D both = cg::preprocess(ch, ch);
    cg::Image2D doubled = ch;
    const cg::Image2D again = cg::preprocess(doubled, doubled);
    for (std::size_t i = 0; i < both.values.size(); ++i)
        CHECK(both.values[i] == doctest::Approx(again.values[i]).epsilon(1e-12));
    double lo = 2.0, hi = -1.0;
    for (double v : both.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    CHECK(lo == doctest::Approx(0.0));
    CHECK(hi == doctest::Approx(1.0));
}

TEST_CASE("preprocess rejects mismatched and non-finite input") {
    cg::Image2D a(4, 4, 1), b(5, 4, 1);
    CHECK_THROWS_AS(cg::preprocess(a, b), cg::Error);
    cg::Image2D c(4, 4, 1), d(4, 4, 1);
    d.at(1, 1) = std::nan("");
    CHECK_THROWS_AS(cg::preprocess(c, d), cg::Error);
}
