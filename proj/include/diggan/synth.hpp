#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "diggan/dataset.hpp"
#include "diggan/gei.hpp"

namespace diggan {

// Body-shape ratios are in units of a nominal body height; all are drawn
// from (seed, subject_id) alone.
struct SubjectParams {
    int subject_id = 0;
    double torso_width = 0;       // [0.16, 0.30]
    double torso_height = 0;      // [0.26, 0.38]
    double leg_length = 0;        // [0.40, 0.54]
    double head_radius = 0;       // [0.045, 0.080]
    double stride_amplitude = 0;  // hip swing in radians, [0.22, 0.52]
    int cadence = 0;              // frames per gait cycle, [10, 16]

    friend bool operator==(const SubjectParams&, const SubjectParams&) = default;
};

struct SynthDatasetSpec {
    int n_subjects = 64;
    std::vector<int> views_deg{0, 30, 60, 90};
    int seqs_per_view = 2;
    int frames_per_seq = 32;
    std::uint64_t seed = 1;
    bool write_silhouettes = true;
};

// The 14 angles of the large multi-view preset (0..90 and 180..270, step 15).
std::vector<int> fourteen_view_preset();

inline constexpr int kCanvasHeight = 128;
inline constexpr int kCanvasWidth = 112;

SubjectParams make_subject_params(std::uint64_t seed, int subject_id);

// Articulated head/torso/legs/arms figure projected for a camera at
// `view_deg` (0 = frontal, 90 = side). `phase` in [0,1) is the gait phase.
Mask render_silhouette_frame(const SubjectParams& p, double view_deg, double phase);

// Full sequence for (subject, view, seq); per-sequence jitter comes from
// a stream keyed by (seed, subject, view, seq).
SilhouetteSequence render_sequence(const SynthDatasetSpec& spec, const SubjectParams& p, int view_deg, int seq_id);

// In-memory dataset (GEIs only). Sequence ids start at 1.
Dataset synthesize_dataset(const SynthDatasetSpec& spec);

// Writes silhouettes (optional), GEIs and `manifest.csv` under `out_root`.
Dataset generate_dataset(const SynthDatasetSpec& spec, const std::filesystem::path& out_root);

void validate(const SynthDatasetSpec& spec);

}  // namespace diggan
