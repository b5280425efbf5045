#include "anomap/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <stdexcept>

#include "anomap/error.hpp"
#include "anomap/serialize.hpp"

namespace anomap {

namespace {

std::string lower_ext(const std::string& path) {
    std::size_t dot = path.find_last_of('.');
    if (dot == std::string::npos) return "";
    std::string ext = path.substr(dot + 1);
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext;
}

void check_dims(int w, int h, int channels, const std::string& path) {
    if (w <= 0 || h <= 0 || w > (1 << 20) || h > (1 << 20))
        throw DataError("implausible image size in " + path);
    if (channels != 1 && channels != 3)
        throw DataError("unsupported channel count " + std::to_string(channels) + " in " + path);
}

// P5/P6 with maxval 255. Comments allowed in the header per the format.
int pnm_token(std::istream& in, const std::string& path) {
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
        } else if (!std::isspace(c)) {
            in.unget();
            break;
        }
    }
    int value;
    if (!(in >> value)) throw DataError("malformed header: " + path);
    return value;
}

Image8 read_pnm(const std::string& path, int channels) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    char p, kind;
    in.get(p);
    in.get(kind);
    const char want = channels == 1 ? '5' : '6';
    if (p != 'P' || kind != want)
        throw DataError(std::string("not a P") + want + " file: " + path);
    Image8 img;
    img.width = pnm_token(in, path);
    img.height = pnm_token(in, path);
    int maxval = pnm_token(in, path);
    check_dims(img.width, img.height, channels, path);
    if (maxval != 255) throw DataError("only 8-bit maxval 255 supported: " + path);
    in.get();  // single whitespace after maxval
    img.channels = channels;
    img.data.resize(static_cast<std::size_t>(img.width) * img.height * channels);
    in.read(reinterpret_cast<char*>(img.data.data()),
            static_cast<std::streamsize>(img.data.size()));
    if (static_cast<std::size_t>(in.gcount()) != img.data.size())
        throw DataError("truncated file: " + path);
    return img;
}

void write_pnm(const std::string& path, const Image8& img, int channels) {
    if (img.channels != channels)
        throw std::invalid_argument("channel count " + std::to_string(img.channels) +
                                    " does not fit format of " + path);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << (channels == 1 ? "P5" : "P6") << '\n'
        << img.width << ' ' << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.data.data()),
              static_cast<std::streamsize>(img.data.size()));
    if (!out) throw IoError("write failed: " + path);
}

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void png_warn_fn(png_structp, png_const_charp) {}

// libpng reports errors by longjmp to png_jmpbuf; the jump lands back in the
// frame below, which then throws normally so destructors still run.
Image8 read_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw IoError("cannot open: " + path);

    png_structp png =
        png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, png_warn_fn);
    if (!png) throw IoError("png reader allocation failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("png info allocation failed");
    }

    Image8 img;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("corrupt or truncated png: " + path);
    }

    png_init_io(png, fp.get());
    png_read_info(png, info);

    png_uint_32 w = png_get_image_width(png, info);
    png_uint_32 h = png_get_image_height(png, info);
    int color = png_get_color_type(png, info);
    int depth = png_get_bit_depth(png, info);

    // Normalize everything to 8-bit gray or RGB.
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    int channels = static_cast<int>(png_get_channels(png, info));
    img.width = static_cast<int>(w);
    img.height = static_cast<int>(h);
    img.channels = channels;
    if (img.width <= 0 || img.height <= 0 || (channels != 1 && channels != 3)) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("unsupported png layout in " + path);
    }
    img.data.resize(static_cast<std::size_t>(img.width) * img.height * channels);

    rows.resize(static_cast<std::size_t>(img.height));
    for (int y = 0; y < img.height; ++y)
        rows[static_cast<std::size_t>(y)] =
            img.data.data() + static_cast<std::size_t>(y) * img.width * channels;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

void write_png(const std::string& path, const Image8& img) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IoError("cannot open for writing: " + path);

    png_structp png =
        png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, png_warn_fn);
    if (!png) throw IoError("png writer allocation failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("png info allocation failed");
    }

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("png encode failed: " + path);
    }

    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
                 static_cast<png_uint_32>(img.height), 8,
                 img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < img.height; ++y)
        png_write_row(png, const_cast<png_bytep>(img.data.data() +
                                                 static_cast<std::size_t>(y) * img.width *
                                                     img.channels));
    png_write_end(png, info);
    png_destroy_write_struct(&png, &info);
}

constexpr char kMapMagic[4] = {'P', 'M', 'A', 'P'};
constexpr uint32_t kMapVersion = 1;

}  // namespace

Image8 read_image(const std::string& path) {
    std::string ext = lower_ext(path);
    if (ext == "pgm") return read_pnm(path, 1);
    if (ext == "ppm") return read_pnm(path, 3);
    if (ext == "png") return read_png(path);
    throw DataError("unsupported image format: " + path);
}

void write_image(const std::string& path, const Image8& img) {
    if (img.width <= 0 || img.height <= 0)
        throw std::invalid_argument("write_image: empty image");
    if (img.channels != 1 && img.channels != 3)
        throw std::invalid_argument("write_image: channels must be 1 or 3");
    if (img.data.size() != static_cast<std::size_t>(img.width) * img.height * img.channels)
        throw std::invalid_argument("write_image: pixel buffer size mismatch");
    std::string ext = lower_ext(path);
    if (ext == "pgm") {
        write_pnm(path, img, 1);
    } else if (ext == "ppm") {
        write_pnm(path, img, 3);
    } else if (ext == "png") {
        write_png(path, img);
    } else {
        throw DataError("unsupported image format: " + path);
    }
}

void write_map(const std::string& path, const Tensor& map) {
    if (map.rank() != 2)
        throw std::invalid_argument("write_map: expected {H,W}, got " + shape_str(map.shape));
    BinaryWriter w(path);
    w.magic(kMapMagic);
    w.u32(kMapVersion);
    w.u32(static_cast<uint32_t>(map.dim(1)));
    w.u32(static_cast<uint32_t>(map.dim(0)));
    for (double v : map.data) {
        float f = static_cast<float>(v);
        uint32_t bits;
        std::memcpy(&bits, &f, 4);
        w.u32(bits);
    }
    w.close();
}

Tensor read_map(const std::string& path) {
    BinaryReader r(path);
    r.expect_magic(kMapMagic);
    uint32_t version = r.u32();
    if (version != kMapVersion)
        throw VersionError("unsupported map version " + std::to_string(version) + " in " + path);
    int w = static_cast<int>(r.u32());
    int h = static_cast<int>(r.u32());
    check_dims(w, h, 1, path);
    Tensor map({h, w});
    for (double& v : map.data) {
        uint32_t bits = r.u32();
        float f;
        std::memcpy(&f, &bits, 4);
        v = static_cast<double>(f);
    }
    return map;
}

Image8 map_to_image(const Tensor& map) {
    if (map.rank() != 2)
        throw std::invalid_argument("map_to_image: expected {H,W}, got " + shape_str(map.shape));
    Image8 img;
    img.width = map.dim(1);
    img.height = map.dim(0);
    img.channels = 1;
    img.data.resize(map.size());
    for (std::size_t i = 0; i < map.size(); ++i) {
        double v = std::clamp(map.data[i], 0.0, 1.0);
        img.data[i] = static_cast<uint8_t>(std::lround(v * 255.0));
    }
    return img;
}

}  // namespace anomap
