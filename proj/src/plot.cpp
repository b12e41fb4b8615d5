#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include "diggan/errors.hpp"
#include "diggan/evaluator.hpp"

namespace diggan {

namespace {

struct Canvas {
    int width, height;
    std::vector<unsigned char> rgb;

    Canvas(int w, int h) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, 255) {}

    void put(int x, int y, unsigned char r, unsigned char g, unsigned char b) {
        if (x < 0 || y < 0 || x >= width || y >= height) return;
        auto* p = &rgb[(static_cast<std::size_t>(y) * width + x) * 3];
        p[0] = r;
        p[1] = g;
        p[2] = b;
    }

    void line(int x0, int y0, int x1, int y1, unsigned char r, unsigned char g, unsigned char b) {
        const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
        const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
        int err = dx + dy;
        for (;;) {
            put(x0, y0, r, g, b);
            if (x0 == x1 && y0 == y1) break;
            const int e2 = 2 * err;
            if (e2 >= dy) {
                err += dy;
                x0 += sx;
            }
            if (e2 <= dx) {
                err += dx;
                y0 += sy;
            }
        }
    }

    void dot(int x, int y, int radius, unsigned char r, unsigned char g, unsigned char b) {
        for (int j = -radius; j <= radius; ++j)
            for (int i = -radius; i <= radius; ++i) put(x + i, y + j, r, g, b);
    }
};

}  // namespace

void write_curve_png(const std::vector<CurvePoint>& curve, const std::filesystem::path& path) {
    constexpr int W = 480, H = 320, left = 40, right = 20, top = 20, bottom = 40;
    Canvas c(W, H);
    const int x0 = left, x1 = W - right, y0 = H - bottom, y1 = top;

    // Axes and 10% gridlines.
    for (int k = 0; k <= 10; ++k) {
        const int y = y0 + (y1 - y0) * k / 10;
        c.line(x0, y, x1, y, 225, 225, 225);
        c.line(x0 - 4, y, x0, y, 0, 0, 0);
    }
    c.line(x0, y0, x1, y0, 0, 0, 0);
    c.line(x0, y0, x0, y1, 0, 0, 0);

    if (!curve.empty()) {
        int lo = curve.front().size, hi = curve.front().size;
        for (const auto& p : curve) {
            lo = std::min(lo, p.size);
            hi = std::max(hi, p.size);
        }
        auto px = [&](int size) {
            if (hi == lo) return (x0 + x1) / 2;
            return x0 + 10 + (x1 - x0 - 20) * (size - lo) / (hi - lo);
        };
        auto py = [&](double pct) {
            const double v = std::clamp(std::isnan(pct) ? 0.0 : pct, 0.0, 100.0);
            return y0 + static_cast<int>(std::lround((y1 - y0) * v / 100.0));
        };
        for (const auto& p : curve) {
            const int x = px(p.size);
            c.line(x, y0, x, y0 + 4, 0, 0, 0);
            c.line(x, py(p.mean - p.stddev), x, py(p.mean + p.stddev), 120, 120, 220);
            c.line(x - 3, py(p.mean - p.stddev), x + 3, py(p.mean - p.stddev), 120, 120, 220);
            c.line(x - 3, py(p.mean + p.stddev), x + 3, py(p.mean + p.stddev), 120, 120, 220);
        }
        for (std::size_t i = 1; i < curve.size(); ++i)
            c.line(px(curve[i - 1].size), py(curve[i - 1].mean), px(curve[i].size), py(curve[i].mean), 20, 20, 160);
        for (const auto& p : curve) c.dot(px(p.size), py(p.mean), 2, 200, 30, 30);
    }

    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw UnwritablePathError("cannot write " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw UnwritablePathError("libpng failed writing " + path.string());
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, W, H, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < H; ++y) png_write_row(png, &c.rgb[static_cast<std::size_t>(y) * W * 3]);
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

}  // namespace diggan
