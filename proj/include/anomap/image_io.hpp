#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "anomap/tensor.hpp"

namespace anomap {

// 8-bit raster, row-major, interleaved channels (1 = gray, 3 = RGB).
struct Image8 {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<uint8_t> data;

    uint8_t& at(int y, int x, int c) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    uint8_t at(int y, int x, int c) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
};

// Dispatch on extension: .pgm (P5), .ppm (P6), .png (gray or RGB, 8-bit).
// Truncated or malformed files raise DataError; nothing partial is returned.
Image8 read_image(const std::string& path);
void write_image(const std::string& path, const Image8& img);

// Probability maps as float32 grids in a small versioned container.
void write_map(const std::string& path, const Tensor& map);
Tensor read_map(const std::string& path);

// Grayscale rendering of a [0,1] map, values scaled to 0..255.
Image8 map_to_image(const Tensor& map);

}  // namespace anomap
