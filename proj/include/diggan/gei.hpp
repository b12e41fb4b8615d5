#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "diggan/image.hpp"

namespace diggan {

// Ordered binary silhouette frames of one walking sequence.
struct SilhouetteSequence {
    std::vector<Mask> frames;
    double frame_rate = 25.0;

    int height() const { return frames.empty() ? 0 : frames.front().height; }
    int width() const { return frames.empty() ? 0 : frames.front().width; }
};

struct GaitCycle {
    int start = 0;
    int period = 0;
    bool fallback = false;  // no periodic structure found, or too few frames
};

// Grayscale inputs are binarized at this level (value >= threshold -> 1).
inline constexpr int kBinarizeThreshold = 128;

// Lowest autocorrelation accepted as evidence of a periodic gait.
inline constexpr double kMinCycleAutocorrelation = 0.2;

// Loads `frame_####.pgm` files (any `*.pgm`, ordered by the numeric index in
// the file name) from a directory.
SilhouetteSequence load_silhouette_sequence(const std::filesystem::path& dir);

void save_silhouette_sequence(const std::filesystem::path& dir, const SilhouetteSequence& seq);

// Validates shape and binary-value invariants; throws on violation.
void validate(const SilhouetteSequence& seq);

GaitCycle estimate_gait_cycle(const SilhouetteSequence& seq);

// Per-pixel mean of the frames in [cycle.start, cycle.start + cycle.period),
// before size normalization.
Image average_frames(const SilhouetteSequence& seq, const GaitCycle& cycle);

// Crop to the foreground bounding box, scale to `out_height` keeping the
// aspect ratio, center on the intensity centroid and pad/crop to `out_width`.
Image size_normalize(const Image& mean, int out_height = kGeiHeight, int out_width = kGeiWidth);

GeiImage compute_gei(const SilhouetteSequence& seq, std::optional<GaitCycle> cycle = std::nullopt);

}  // namespace diggan
