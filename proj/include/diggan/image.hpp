#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace diggan {

inline constexpr int kGeiHeight = 128;
inline constexpr int kGeiWidth = 88;

// Row-major 2-D grid.
template <class T>
struct Grid {
    int height = 0;
    int width = 0;
    std::vector<T> data;

    Grid() = default;
    Grid(int h, int w, T fill = T{}) : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {}

    T& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * width + c]; }
    const T& operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * width + c]; }
    std::size_t size() const { return data.size(); }
    bool empty() const { return data.empty(); }

    friend bool operator==(const Grid&, const Grid&) = default;
};

// Binary silhouette, values exactly 0 or 1.
using Mask = Grid<std::uint8_t>;

// Real-valued image with pixels in [0,1].
using Image = Grid<double>;

// Size-normalized gait template. Dimensions are 128x88 for everything the
// pipeline produces; the type itself only enforces the [0,1] range.
struct GeiImage {
    Image pixels;
    std::string meta;

    int height() const { return pixels.height; }
    int width() const { return pixels.width; }
};

// 8-bit binary PGM (P5). Comments in the header are skipped.
Grid<std::uint8_t> read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const Grid<std::uint8_t>& img);

// Quantize [0,1] to 0..255 with rounding, and back.
Grid<std::uint8_t> quantize(const Image& img);
Image dequantize(const Grid<std::uint8_t>& img);

GeiImage load_gei(const std::filesystem::path& path);
void save_gei(const std::filesystem::path& path, const GeiImage& gei);

// Tile equally sized images into a rows x cols canvas; missing tiles stay 0.
Image tile_images(const std::vector<const Image*>& tiles, int rows, int cols);

}  // namespace diggan
