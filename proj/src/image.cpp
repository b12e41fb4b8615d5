#include "diggan/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "diggan/errors.hpp"

namespace diggan {

namespace {

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string next_token(std::istream& in) {
    std::string tok;
    while (true) {
        int ch = in.get();
        if (ch == EOF) return tok;
        if (ch == '#') {
            std::string dummy;
            std::getline(in, dummy);
            if (!tok.empty()) return tok;
            continue;
        }
        if (std::isspace(ch)) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(static_cast<char>(ch));
    }
}

int parse_int(const std::string& tok, const std::filesystem::path& path) {
    try {
        std::size_t used = 0;
        int v = std::stoi(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw ImageFormatError("bad PGM header field '" + tok + "' in " + path.string());
    }
}

}  // namespace

Grid<std::uint8_t> read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ImageFormatError("cannot open " + path.string());
    if (next_token(in) != "P5") throw ImageFormatError("not a binary PGM (P5): " + path.string());
    const int width = parse_int(next_token(in), path);
    const int height = parse_int(next_token(in), path);
    const int maxval = parse_int(next_token(in), path);
    if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 255)
        throw ImageFormatError("unsupported PGM geometry in " + path.string());

    Grid<std::uint8_t> img(height, width);
    in.read(reinterpret_cast<char*>(img.data.data()), static_cast<std::streamsize>(img.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.size()))
        throw ImageFormatError("truncated PGM payload in " + path.string());
    if (maxval != 255) {
        for (auto& v : img.data) v = static_cast<std::uint8_t>(std::lround(v * 255.0 / maxval));
    }
    return img;
}

void write_pgm(const std::filesystem::path& path, const Grid<std::uint8_t>& img) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw UnwritablePathError("cannot write " + path.string());
    out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.data.data()), static_cast<std::streamsize>(img.size()));
    if (!out) throw UnwritablePathError("write failed for " + path.string());
}

Grid<std::uint8_t> quantize(const Image& img) {
    Grid<std::uint8_t> q(img.height, img.width);
    for (std::size_t i = 0; i < img.size(); ++i) {
        const double v = std::clamp(img.data[i], 0.0, 1.0);
        q.data[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
    return q;
}

Image dequantize(const Grid<std::uint8_t>& img) {
    Image out(img.height, img.width);
    for (std::size_t i = 0; i < img.size(); ++i) out.data[i] = img.data[i] / 255.0;
    return out;
}

GeiImage load_gei(const std::filesystem::path& path) {
    return GeiImage{dequantize(read_pgm(path)), path.string()};
}

void save_gei(const std::filesystem::path& path, const GeiImage& gei) {
    write_pgm(path, quantize(gei.pixels));
}

Image tile_images(const std::vector<const Image*>& tiles, int rows, int cols) {
    int th = 0, tw = 0;
    for (const auto* t : tiles) {
        if (!t) continue;
        if (th == 0) {
            th = t->height;
            tw = t->width;
        } else if (t->height != th || t->width != tw) {
            throw DimensionMismatchError("tile_images: tiles differ in size");
        }
    }
    if (static_cast<int>(tiles.size()) > rows * cols)
        throw InvalidArgumentError("tile_images: more tiles than grid cells");
    Image canvas(rows * th, cols * tw, 0.0);
    for (std::size_t i = 0; i < tiles.size(); ++i) {
        if (!tiles[i]) continue;
        const int r0 = static_cast<int>(i) / cols * th;
        const int c0 = static_cast<int>(i) % cols * tw;
        for (int r = 0; r < th; ++r)
            std::copy_n(&(*tiles[i])(r, 0), tw, &canvas(r0 + r, c0));
    }
    return canvas;
}

}  // namespace diggan
