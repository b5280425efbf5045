#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "anomap/error.hpp"
#include "anomap/image_io.hpp"
#include "anomap/rng.hpp"
#include "anomap/serialize.hpp"
#include "doctest.h"

using namespace anomap;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(std::string p) : path(std::move(p)) {}
    ~TempFile() { std::remove(path.c_str()); }
};

std::vector<char> slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::string& path, const std::vector<char>& bytes, std::size_t n) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(n));
}

Image8 random_image(int w, int h, int channels, Rng& rng) {
    Image8 img;
    img.width = w;
    img.height = h;
    img.channels = channels;
    img.data.resize(static_cast<std::size_t>(w) * h * channels);
    for (uint8_t& b : img.data) b = static_cast<uint8_t>(rng.uniform_below(256));
    return img;
}

}  // namespace

TEST_CASE("binary scalars round-trip and are little-endian on disk") {
    TempFile f("io_scalars_tmp.bin");
    {
        BinaryWriter w(f.path);
        w.magic("TST1");
        w.u32(0x01020304u);
        w.u64(0x0807060504030201ull);
        w.f64(-1234.5678);
        w.f64(-0.0);
        w.str("hello");
        w.doubles({1.5, -2.5, 3.25});
        w.close();
    }
    std::vector<char> bytes = slurp(f.path);
    REQUIRE(bytes.size() > 8);
    CHECK(bytes[4] == 0x04);  // least significant byte first
    CHECK(bytes[5] == 0x03);
    CHECK(bytes[6] == 0x02);
    CHECK(bytes[7] == 0x01);

    BinaryReader r(f.path);
    r.expect_magic("TST1");
    CHECK(r.u32() == 0x01020304u);
    CHECK(r.u64() == 0x0807060504030201ull);
    CHECK(r.f64() == -1234.5678);
    double neg_zero = r.f64();
    CHECK(neg_zero == 0.0);
    CHECK(std::signbit(neg_zero));
    CHECK(r.str() == "hello");
    CHECK(r.doubles() == std::vector<double>{1.5, -2.5, 3.25});
    CHECK(r.at_eof());
}

TEST_CASE("tensors round-trip with shape intact") {
    TempFile f("io_tensor_tmp.bin");
    Rng rng(41);
    Tensor t({2, 3, 4});
    for (double& v : t.data) v = rng.uniform(-10.0, 10.0);
    {
        BinaryWriter w(f.path);
        w.tensor(t);
        w.close();
    }
    BinaryReader r(f.path);
    Tensor back = r.tensor();
    CHECK(back.shape == t.shape);
    CHECK(back.data == t.data);
}

TEST_CASE("wrong magic and truncation raise the right errors") {
    TempFile f("io_errors_tmp.bin");
    {
        BinaryWriter w(f.path);
        w.magic("GOOD");
        w.u64(7);
        w.close();
    }
    {
        BinaryReader r(f.path);
        CHECK_THROWS_AS(r.expect_magic("EVIL"), VersionError);
    }
    std::vector<char> bytes = slurp(f.path);
    spit(f.path, bytes, 6);  // magic + 2 bytes of the u64
    BinaryReader r(f.path);
    r.expect_magic("GOOD");
    CHECK_THROWS_AS(r.u64(), DataError);
}

TEST_CASE("pgm and ppm round-trip bitwise") {
    Rng rng(42);
    for (int channels : {1, 3}) {
        TempFile f(channels == 1 ? "io_tmp.pgm" : "io_tmp.ppm");
        Image8 img = random_image(17, 11, channels, rng);
        write_image(f.path, img);
        Image8 back = read_image(f.path);
        CHECK(back.width == img.width);
        CHECK(back.height == img.height);
        CHECK(back.channels == img.channels);
        CHECK(back.data == img.data);
    }
}

TEST_CASE("png round-trips losslessly for gray and rgb") {
    Rng rng(43);
    for (int channels : {1, 3}) {
        TempFile f(channels == 1 ? "io_gray_tmp.png" : "io_rgb_tmp.png");
        Image8 img = random_image(23, 9, channels, rng);
        write_image(f.path, img);
        Image8 back = read_image(f.path);
        CHECK(back.channels == img.channels);
        CHECK(back.data == img.data);
    }
}

TEST_CASE("reported dimensions match a 760x570 three-channel file") {
    TempFile f("io_roi_tmp.ppm");
    Rng rng(44);
    Image8 img = random_image(760, 570, 3, rng);
    write_image(f.path, img);
    Image8 back = read_image(f.path);
    CHECK(back.width == 760);
    CHECK(back.height == 570);
    CHECK(back.channels == 3);
}

TEST_CASE("pnm comments are skipped") {
    TempFile f("io_comment_tmp.pgm");
    {
        std::ofstream out(f.path, std::ios::binary);
        out << "P5\n# a comment\n2 2\n# another\n255\n";
        out.write("\x01\x02\x03\x04", 4);
    }
    Image8 img = read_image(f.path);
    CHECK(img.width == 2);
    CHECK(img.height == 2);
    CHECK(img.data == std::vector<uint8_t>{1, 2, 3, 4});
}

TEST_CASE("truncated files and unknown extensions are rejected") {
    TempFile f("io_trunc_tmp.pgm");
    {
        std::ofstream out(f.path, std::ios::binary);
        out << "P5\n4 4\n255\n";
        out.write("\x01\x02", 2);  // 14 bytes short
    }
    CHECK_THROWS_AS(read_image(f.path), DataError);
    CHECK_THROWS(read_image("no_such_file_anywhere.pgm"));
    TempFile g("io_bad_ext_tmp.bmp");
    {
        std::ofstream out(g.path, std::ios::binary);
        out << "BM";
    }
    CHECK_THROWS(read_image(g.path));
    Image8 img;
    img.width = 1;
    img.height = 1;
    img.data = {0};
    CHECK_THROWS(write_image(g.path, img));
}

TEST_CASE("float map container round-trips at float precision") {
    TempFile f("io_map_tmp.bin");
    Rng rng(45);
    Tensor map({5, 7});
    for (double& v : map.data) v = rng.uniform();
    write_map(f.path, map);
    Tensor back = read_map(f.path);
    REQUIRE(back.shape == map.shape);
    for (std::size_t i = 0; i < map.size(); ++i)
        CHECK(back.data[i] == static_cast<double>(static_cast<float>(map.data[i])));

    std::vector<char> bytes = slurp(f.path);
    spit(f.path, bytes, bytes.size() - 3);
    CHECK_THROWS_AS(read_map(f.path), DataError);
    bytes[0] = 'Q';
    spit(f.path, bytes, bytes.size());
    CHECK_THROWS_AS(read_map(f.path), VersionError);
}

TEST_CASE("map rendering scales and clamps") {
    Tensor map({1, 4});
    map.data = {0.0, 1.0, -0.5, 2.0};
    Image8 img = map_to_image(map);
    CHECK(img.channels == 1);
    CHECK(img.data == std::vector<uint8_t>{0, 255, 0, 255});
    Tensor half({1, 1});
    half.data = {0.5};
    CHECK(map_to_image(half).data[0] == 128);  // lround(127.5)
}
