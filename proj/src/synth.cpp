#include "diggan/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "diggan/errors.hpp"
#include "diggan/rng.hpp"

namespace fs = std::filesystem;

namespace diggan {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kBodyPixels = 112.0;
constexpr double kGroundRow = 122.0;

struct Canvas {
    Mask mask{kCanvasHeight, kCanvasWidth, 0};
    double scale = 1.0;
    double center_col = kCanvasWidth / 2.0;

    double col(double u) const { return center_col + u * scale; }
    double row(double y) const { return kGroundRow - y * scale; }

    void capsule(double u0, double y0, double u1, double y1, double radius) {
        const double c0 = col(u0), r0 = row(y0), c1 = col(u1), r1 = row(y1);
        const double rad = radius * scale;
        const int rmin = std::max(0, static_cast<int>(std::floor(std::min(r0, r1) - rad)));
        const int rmax = std::min(mask.height - 1, static_cast<int>(std::ceil(std::max(r0, r1) + rad)));
        const int cmin = std::max(0, static_cast<int>(std::floor(std::min(c0, c1) - rad)));
        const int cmax = std::min(mask.width - 1, static_cast<int>(std::ceil(std::max(c0, c1) + rad)));
        const double dr = r1 - r0, dc = c1 - c0;
        const double len2 = dr * dr + dc * dc;
        for (int r = rmin; r <= rmax; ++r)
            for (int c = cmin; c <= cmax; ++c) {
                const double pr = r + 0.5 - r0, pc = c + 0.5 - c0;
                double t = len2 > 0 ? (pr * dr + pc * dc) / len2 : 0.0;
                t = std::clamp(t, 0.0, 1.0);
                const double er = pr - t * dr, ec = pc - t * dc;
                if (er * er + ec * ec <= rad * rad) mask(r, c) = 1;
            }
    }

    void ellipse(double u, double y, double semi_u, double semi_y) {
        const double cc = col(u), rc = row(y);
        const double a = semi_u * scale, b = semi_y * scale;
        const int rmin = std::max(0, static_cast<int>(std::floor(rc - b)));
        const int rmax = std::min(mask.height - 1, static_cast<int>(std::ceil(rc + b)));
        const int cmin = std::max(0, static_cast<int>(std::floor(cc - a)));
        const int cmax = std::min(mask.width - 1, static_cast<int>(std::ceil(cc + a)));
        for (int r = rmin; r <= rmax; ++r)
            for (int c = cmin; c <= cmax; ++c) {
                const double dy = (r + 0.5 - rc) / b, dx = (c + 0.5 - cc) / a;
                if (dx * dx + dy * dy <= 1.0) mask(r, c) = 1;
            }
    }
};

std::string padded(int v, int width) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%0*d", width, v);
    return buf;
}

}  // namespace

std::vector<int> fourteen_view_preset() {
    return {0, 15, 30, 45, 60, 75, 90, 180, 195, 210, 225, 240, 255, 270};
}

SubjectParams make_subject_params(std::uint64_t seed, int subject_id) {
    Rng rng = Rng::derive(seed, {0x5B1EC7, static_cast<std::uint64_t>(subject_id)});
    SubjectParams p;
    p.subject_id = subject_id;
    p.torso_width = rng.uniform(0.16, 0.30);
    p.torso_height = rng.uniform(0.26, 0.38);
    p.leg_length = rng.uniform(0.40, 0.54);
    p.head_radius = rng.uniform(0.045, 0.080);
    p.stride_amplitude = rng.uniform(0.22, 0.52);
    p.cadence = 10 + static_cast<int>(rng.index(7));
    return p;
}

Mask render_silhouette_frame(const SubjectParams& p, double view_deg, double phase) {
    const double theta = view_deg * kPi / 180.0;
    const double ct = std::cos(theta), st = std::sin(theta);
    // Horizontal image coordinate of a body point (lateral x, forward z).
    auto project = [&](double x, double z) { return x * ct + z * st; };

    const double neck = 0.04;
    const double height = p.leg_length + p.torso_height + neck + 2.0 * p.head_radius;
    Canvas cv;
    cv.scale = kBodyPixels / height;

    const double swing = p.stride_amplitude * std::sin(2.0 * kPi * phase);
    const double hip_y = p.leg_length * std::cos(swing);
    const double torso_depth = 0.55 * p.torso_width;
    const double leg_radius = 0.16 * p.torso_width;
    const double arm_radius = 0.11 * p.torso_width;
    const double hip_x = 0.30 * p.torso_width;
    const double shoulder_x = 0.50 * p.torso_width;
    const double shoulder_y = hip_y + 0.92 * p.torso_height;
    const double arm_length = 0.85 * p.torso_height + 0.10;
    const double arm_swing = 0.7 * swing;

    // Legs (left leg swings forward by +swing, right by -swing).
    for (int side : {-1, 1}) {
        const double phi = side * swing;
        const double fx = side * hip_x;
        const double foot_y = hip_y - p.leg_length * std::cos(phi);
        const double foot_z = p.leg_length * std::sin(phi);
        cv.capsule(project(fx, 0.0), hip_y, project(fx, foot_z), foot_y, leg_radius);
    }
    // Arms swing against the leg on the same side.
    for (int side : {-1, 1}) {
        const double psi = -side * arm_swing;
        const double sx = side * shoulder_x;
        const double hand_y = shoulder_y - arm_length * std::cos(psi);
        const double hand_z = arm_length * std::sin(psi);
        cv.capsule(project(sx, 0.0), shoulder_y, project(sx, hand_z), hand_y, arm_radius);
    }
    const double semi_u = 0.5 * std::hypot(p.torso_width * ct, torso_depth * st);
    cv.ellipse(0.0, hip_y + 0.5 * p.torso_height, semi_u, 0.5 * p.torso_height + 0.02);
    const double neck_top = hip_y + p.torso_height + neck;
    cv.capsule(0.0, hip_y + p.torso_height, 0.0, neck_top, 0.25 * p.head_radius + 0.01);
    const double head_c = neck_top + p.head_radius;
    cv.ellipse(0.0, head_c, p.head_radius, p.head_radius);
    return cv.mask;
}

SilhouetteSequence render_sequence(const SynthDatasetSpec& spec, const SubjectParams& base, int view_deg,
                                   int seq_id) {
    Rng rng = Rng::derive(spec.seed, {0x5E0, static_cast<std::uint64_t>(base.subject_id),
                                      static_cast<std::uint64_t>(view_deg), static_cast<std::uint64_t>(seq_id)});
    SubjectParams p = base;
    p.stride_amplitude *= 1.0 + 0.05 * rng.normal();
    p.torso_width *= 1.0 + 0.03 * rng.normal();
    const double view = view_deg + 2.0 * rng.normal();
    const double phase0 = rng.uniform();

    SilhouetteSequence seq;
    seq.frame_rate = 25.0;
    seq.frames.reserve(spec.frames_per_seq);
    for (int f = 0; f < spec.frames_per_seq; ++f) {
        const double phase = std::fmod(phase0 + static_cast<double>(f) / p.cadence, 1.0);
        Mask m = render_silhouette_frame(p, view, phase);
        Rng noise = Rng::derive(spec.seed, {0xF4A3, static_cast<std::uint64_t>(base.subject_id),
                                            static_cast<std::uint64_t>(view_deg), static_cast<std::uint64_t>(seq_id),
                                            static_cast<std::uint64_t>(f)});
        for (auto& v : m.data)
            if (v && noise.uniform() < 0.02) v = 0;
        seq.frames.push_back(std::move(m));
    }
    return seq;
}

void validate(const SynthDatasetSpec& spec) {
    if (spec.n_subjects < 2) throw InvalidArgumentError("synthetic dataset needs at least 2 subjects");
    const std::set<int> distinct(spec.views_deg.begin(), spec.views_deg.end());
    if (distinct.size() < 2 || distinct.size() != spec.views_deg.size())
        throw InvalidArgumentError("synthetic dataset needs at least 2 distinct views");
    for (int v : spec.views_deg)
        if (v < 0 || v >= 360) throw InvalidArgumentError("view angles must lie in [0,360)");
    if (spec.seqs_per_view < 1) throw InvalidArgumentError("seqs_per_view must be >= 1");
    if (spec.frames_per_seq < 1) throw InvalidArgumentError("frames_per_seq must be >= 1");
}

namespace {

template <class Sink>
Dataset synthesize_impl(const SynthDatasetSpec& spec, Sink&& sink) {
    validate(spec);
    Dataset ds;
    ds.views_deg = spec.views_deg;
    std::sort(ds.views_deg.begin(), ds.views_deg.end());
    for (int s = 1; s <= spec.n_subjects; ++s) {
        const SubjectParams params = make_subject_params(spec.seed, s);
        for (int vi = 0; vi < ds.n_views(); ++vi) {
            for (int q = 1; q <= spec.seqs_per_view; ++q) {
                const int deg = ds.views_deg[vi];
                SilhouetteSequence seq = render_sequence(spec, params, deg, q);
                const int period = std::min(params.cadence, static_cast<int>(seq.frames.size()));
                SampleRecord r;
                r.subject_id = s;
                r.view_index = vi;
                r.seq_id = q;
                r.gei = compute_gei(seq, GaitCycle{0, period, false});
                sink(r, deg, seq);
                ds.records.push_back(std::move(r));
            }
        }
    }
    return ds;
}

}  // namespace

Dataset synthesize_dataset(const SynthDatasetSpec& spec) {
    return synthesize_impl(spec, [](SampleRecord&, int, const SilhouetteSequence&) {});
}

Dataset generate_dataset(const SynthDatasetSpec& spec, const fs::path& out_root) {
    validate(spec);
    std::error_code ec;
    fs::create_directories(out_root / "gei", ec);
    if (ec || !fs::is_directory(out_root)) throw UnwritablePathError("cannot create " + out_root.string());

    Dataset ds = synthesize_impl(spec, [&](SampleRecord& r, int deg, const SilhouetteSequence& seq) {
        const std::string subj = padded(r.subject_id, 5), view = padded(deg, 3), sq = padded(r.seq_id, 2);
        if (spec.write_silhouettes) save_silhouette_sequence(out_root / subj / view / sq, seq);
        const fs::path rel = fs::path("gei") / subj / view / (sq + ".pgm");
        fs::create_directories((out_root / rel).parent_path(), ec);
        if (ec) throw UnwritablePathError("cannot create " + (out_root / rel).parent_path().string());
        save_gei(out_root / rel, r.gei);
        // The in-memory copy matches what a reader gets back from disk.
        r.gei = GeiImage{dequantize(quantize(r.gei.pixels)), rel.generic_string()};
    });
    write_manifest(out_root / "manifest.csv", ds, {});
    return ds;
}

}  // namespace diggan
