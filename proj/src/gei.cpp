#include "diggan/gei.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <regex>
#include <string>

#include "diggan/errors.hpp"

namespace fs = std::filesystem;

namespace diggan {

namespace {

long frame_index(const fs::path& p) {
    static const std::regex digits("(\\d+)");
    const std::string stem = p.stem().string();
    std::smatch m;
    long idx = -1;
    auto it = stem.cbegin();
    while (std::regex_search(it, stem.cend(), m, digits)) {
        idx = std::stol(m.str(1));
        it = m.suffix().first;
    }
    return idx;
}

double bilinear(const Image& img, double y, double x) {
    const int y0 = static_cast<int>(std::floor(y));
    const int x0 = static_cast<int>(std::floor(x));
    const double fy = y - y0, fx = x - x0;
    auto px = [&](int r, int c) {
        if (r < 0 || r >= img.height || c < 0 || c >= img.width) return 0.0;
        return img(r, c);
    };
    return (1 - fy) * ((1 - fx) * px(y0, x0) + fx * px(y0, x0 + 1)) +
           fy * ((1 - fx) * px(y0 + 1, x0) + fx * px(y0 + 1, x0 + 1));
}

}  // namespace

void validate(const SilhouetteSequence& seq) {
    if (seq.frames.empty()) throw EmptySequenceError("silhouette sequence has no frames");
    const int h = seq.frames.front().height, w = seq.frames.front().width;
    for (std::size_t i = 0; i < seq.frames.size(); ++i) {
        const auto& f = seq.frames[i];
        if (f.height != h || f.width != w)
            throw DimensionMismatchError("frame " + std::to_string(i) + " is " + std::to_string(f.height) + "x" +
                                         std::to_string(f.width) + ", expected " + std::to_string(h) + "x" +
                                         std::to_string(w));
        for (auto v : f.data)
            if (v > 1) throw InvalidArgumentError("silhouette frame " + std::to_string(i) + " is not binary");
    }
}

SilhouetteSequence load_silhouette_sequence(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw MissingDirectoryError("no such directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".pgm") files.push_back(e.path());
    if (files.empty()) throw EmptySequenceError("no frame files in " + dir.string());
    std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
        const long ia = frame_index(a), ib = frame_index(b);
        return ia != ib ? ia < ib : a.filename() < b.filename();
    });

    SilhouetteSequence seq;
    for (const auto& f : files) {
        auto gray = read_pgm(f);
        if (!seq.frames.empty() && (gray.height != seq.height() || gray.width != seq.width()))
            throw DimensionMismatchError("frame " + f.filename().string() + " differs in size from " +
                                         files.front().filename().string());
        for (auto& v : gray.data) v = v >= kBinarizeThreshold ? 1 : 0;
        seq.frames.push_back(std::move(gray));
    }
    return seq;
}

void save_silhouette_sequence(const fs::path& dir, const SilhouetteSequence& seq) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw UnwritablePathError("cannot create " + dir.string() + ": " + ec.message());
    for (std::size_t i = 0; i < seq.frames.size(); ++i) {
        Grid<std::uint8_t> out = seq.frames[i];
        for (auto& v : out.data) v = v ? 255 : 0;
        char name[32];
        std::snprintf(name, sizeof name, "frame_%04zu.pgm", i);
        write_pgm(dir / name, out);
    }
}

GaitCycle estimate_gait_cycle(const SilhouetteSequence& seq) {
    const int n = static_cast<int>(seq.frames.size());
    if (n < 4) return {0, n, true};

    std::vector<double> signal(n);
    for (int t = 0; t < n; ++t) {
        long count = 0;
        for (auto v : seq.frames[t].data) count += v;
        signal[t] = static_cast<double>(count);
    }
    double mean = 0;
    for (double s : signal) mean += s;
    mean /= n;
    double energy = 0;
    for (double& s : signal) {
        s -= mean;
        energy += s * s;
    }
    if (energy <= 0) return {0, n, true};

    int best_lag = 0;
    double best = kMinCycleAutocorrelation;
    for (int lag = 4; lag <= n / 2; ++lag) {
        double acc = 0;
        for (int t = 0; t + lag < n; ++t) acc += signal[t] * signal[t + lag];
        const double r = acc / energy;
        if (r > best) {
            best = r;
            best_lag = lag;
        }
    }
    if (best_lag == 0) return {0, n, true};
    return {0, best_lag, false};
}

Image average_frames(const SilhouetteSequence& seq, const GaitCycle& cycle) {
    validate(seq);
    const int n = static_cast<int>(seq.frames.size());
    if (cycle.start < 0 || cycle.period <= 0 || cycle.start + cycle.period > n)
        throw InvalidArgumentError("gait cycle [" + std::to_string(cycle.start) + ", +" +
                                   std::to_string(cycle.period) + ") outside a " + std::to_string(n) +
                                   "-frame sequence");
    std::vector<int> counts(seq.frames.front().size(), 0);
    for (int t = cycle.start; t < cycle.start + cycle.period; ++t) {
        const auto& f = seq.frames[t].data;
        for (std::size_t i = 0; i < f.size(); ++i) counts[i] += f[i];
    }
    Image mean(seq.height(), seq.width());
    for (std::size_t i = 0; i < counts.size(); ++i) mean.data[i] = static_cast<double>(counts[i]) / cycle.period;
    return mean;
}

Image size_normalize(const Image& mean, int out_height, int out_width) {
    int top = mean.height, bottom = -1, left = mean.width, right = -1;
    double mass = 0, moment = 0;
    for (int r = 0; r < mean.height; ++r)
        for (int c = 0; c < mean.width; ++c) {
            const double v = mean(r, c);
            if (v <= 0) continue;
            top = std::min(top, r);
            bottom = std::max(bottom, r);
            left = std::min(left, c);
            right = std::max(right, c);
            mass += v;
            moment += v * c;
        }
    if (bottom < 0) throw EmptySilhouetteError("silhouette has no foreground pixels");

    const double scale = static_cast<double>(out_height) / (bottom - top + 1);
    const double centroid = moment / mass;
    const int supersample = std::max(1, static_cast<int>(std::ceil(1.0 / scale)));
    const double sub = 1.0 / supersample;

    Image out(out_height, out_width, 0.0);
    for (int r = 0; r < out_height; ++r)
        for (int c = 0; c < out_width; ++c) {
            double acc = 0;
            for (int sy = 0; sy < supersample; ++sy)
                for (int sx = 0; sx < supersample; ++sx) {
                    const double oy = r + (sy + 0.5) * sub;
                    const double ox = c + (sx + 0.5) * sub;
                    const double y = top + oy / scale - 0.5;
                    const double x = centroid + 0.5 + (ox - 0.5 * out_width) / scale - 0.5;
                    acc += bilinear(mean, y, x);
                }
            out(r, c) = std::clamp(acc * sub * sub, 0.0, 1.0);
        }
    return out;
}

GeiImage compute_gei(const SilhouetteSequence& seq, std::optional<GaitCycle> cycle) {
    validate(seq);
    const GaitCycle window = cycle ? *cycle : estimate_gait_cycle(seq);
    return GeiImage{size_normalize(average_frames(seq, window)), {}};
}

}  // namespace diggan
