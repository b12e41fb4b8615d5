#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "diggan/errors.hpp"
#include "diggan/gei.hpp"
#include "helpers.hpp"

using namespace diggan;

namespace {

SilhouetteSequence random_sequence(Rng& rng, int n, int h, int w) {
    SilhouetteSequence s;
    for (int i = 0; i < n; ++i) s.frames.push_back(testutil::random_mask(rng, h, w, 0.4));
    return s;
}

// Sequence whose foreground count follows `counts` (first count pixels set).
SilhouetteSequence counted_sequence(const std::vector<int>& counts, int h = 16, int w = 16) {
    SilhouetteSequence s;
    for (int c : counts) {
        Mask m(h, w);
        for (int i = 0; i < c; ++i) m.data[i] = 1;
        s.frames.push_back(m);
    }
    return s;
}

// Brute-force: lag maximizing the mean-removed autocorrelation over [4, n/2].
int oracle_period(const std::vector<int>& counts) {
    const int n = static_cast<int>(counts.size());
    double mean = 0;
    for (int c : counts) mean += c;
    mean /= n;
    double energy = 0;
    for (int c : counts) energy += (c - mean) * (c - mean);
    int best = n;
    double best_r = 0.2;
    for (int lag = 4; lag <= n / 2; ++lag) {
        double acc = 0;
        for (int t = 0; t + lag < n; ++t) acc += (counts[t] - mean) * (counts[t + lag] - mean);
        if (acc / energy > best_r) {
            best_r = acc / energy;
            best = lag;
        }
    }
    return best;
}

Image oracle_mean(const SilhouetteSequence& s, int start, int period) {
    Image out(s.height(), s.width());
    for (int r = 0; r < out.height; ++r)
        for (int c = 0; c < out.width; ++c) {
            double sum = 0;
            for (int t = start; t < start + period; ++t) sum += s.frames[t](r, c);
            out(r, c) = sum / period;
        }
    return out;
}

}  // namespace

TEST(LoadSequence, ThreeIdenticalMasks) {
    auto dir = testutil::scratch_dir();
    Rng r(1);
    const auto m = testutil::random_mask(r, 16, 16);
    save_silhouette_sequence(dir, SilhouetteSequence{{m, m, m}});
    const auto s = load_silhouette_sequence(dir);
    ASSERT_EQ(s.frames.size(), 3u);
    for (const auto& f : s.frames) EXPECT_EQ(f, m);
}

TEST(LoadSequence, RandomFramesRoundTripBitIdentical) {
    auto dir = testutil::scratch_dir();
    Rng r(2);
    const auto seq = random_sequence(r, 10, 20, 14);
    save_silhouette_sequence(dir, seq);
    const auto back = load_silhouette_sequence(dir);
    ASSERT_EQ(back.frames.size(), seq.frames.size());
    for (std::size_t i = 0; i < seq.frames.size(); ++i) EXPECT_EQ(back.frames[i], seq.frames[i]);
}

TEST(LoadSequence, OrdersByNumericIndexNotLexically) {
    auto dir = testutil::scratch_dir();
    for (int i : {10, 2, 1}) {
        Grid<std::uint8_t> g(2, 2, 0);
        g.data[0] = static_cast<std::uint8_t>(i == 1 ? 255 : 0);
        g.data[1] = static_cast<std::uint8_t>(i == 2 ? 255 : 0);
        g.data[2] = static_cast<std::uint8_t>(i == 10 ? 255 : 0);
        write_pgm(dir / ("frame_" + std::to_string(i) + ".pgm"), g);
    }
    const auto s = load_silhouette_sequence(dir);
    ASSERT_EQ(s.frames.size(), 3u);
    EXPECT_EQ(s.frames[0].data[0], 1);
    EXPECT_EQ(s.frames[1].data[1], 1);
    EXPECT_EQ(s.frames[2].data[2], 1);
}

TEST(LoadSequence, GrayscaleBinarizedAt128) {
    auto dir = testutil::scratch_dir();
    Grid<std::uint8_t> g(1, 4);
    g.data = {0, 127, 128, 255};
    write_pgm(dir / "frame_0000.pgm", g);
    const auto s = load_silhouette_sequence(dir);
    EXPECT_EQ(s.frames[0].data, (std::vector<std::uint8_t>{0, 0, 1, 1}));
}

TEST(LoadSequence, DistinctErrors) {
    auto dir = testutil::scratch_dir();
    EXPECT_THROW(load_silhouette_sequence(dir / "nope"), MissingDirectoryError);
    EXPECT_THROW(load_silhouette_sequence(dir), EmptySequenceError);
    write_pgm(dir / "frame_0000.pgm", Grid<std::uint8_t>(8, 8, 255));
    write_pgm(dir / "frame_0001.pgm", Grid<std::uint8_t>(8, 9, 255));
    EXPECT_THROW(load_silhouette_sequence(dir), DimensionMismatchError);
}

TEST(Validate, RejectsNonBinaryAndEmpty) {
    EXPECT_THROW(validate(SilhouetteSequence{}), EmptySequenceError);
    Mask m(2, 2);
    m.data[0] = 2;
    EXPECT_THROW(validate(SilhouetteSequence{{m}}), InvalidArgumentError);
}

TEST(GaitCycle, PeriodEightMatchesBruteForce) {
    std::vector<int> counts;
    const int pattern[8] = {10, 20, 40, 60, 70, 55, 35, 15};
    for (int t = 0; t < 32; ++t) counts.push_back(pattern[t % 8]);
    const auto c = estimate_gait_cycle(counted_sequence(counts));
    EXPECT_EQ(c.period, 8);
    EXPECT_EQ(c.start, 0);
    EXPECT_FALSE(c.fallback);
    EXPECT_EQ(c.period, oracle_period(counts));
}

TEST(GaitCycle, RandomSignalsMatchBruteForce) {
    Rng r(3);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 8 + static_cast<int>(r.index(40));
        const int period = 4 + static_cast<int>(r.index(6));
        std::vector<int> counts;
        for (int t = 0; t < n; ++t)
            counts.push_back(100 + static_cast<int>(60 * std::sin(2 * M_PI * t / period)) +
                             static_cast<int>(r.index(25)));
        const auto c = estimate_gait_cycle(counted_sequence(counts));
        EXPECT_EQ(c.period, oracle_period(counts)) << "trial " << trial;
        EXPECT_EQ(c.fallback, c.period == n);
    }
}

TEST(GaitCycle, FlatSignalFallsBack) {
    const auto c = estimate_gait_cycle(counted_sequence(std::vector<int>(20, 30)));
    EXPECT_EQ(c.period, 20);
    EXPECT_TRUE(c.fallback);
}

TEST(GaitCycle, ShortSequenceFallsBack) {
    const auto c = estimate_gait_cycle(counted_sequence({5, 9, 5}));
    EXPECT_EQ(c.period, 3);
    EXPECT_TRUE(c.fallback);
}

TEST(ComputeGei, IdenticalCopiesGiveTheNormalizedMask) {
    Rng r(4);
    Mask m(60, 40);
    for (int y = 10; y < 50; ++y)
        for (int x = 12; x < 28; ++x) m(y, x) = r.uniform() < 0.8 ? 1 : 0;
    SilhouetteSequence s{{m, m, m, m, m}};
    Image as_image(m.height, m.width);
    for (std::size_t i = 0; i < m.size(); ++i) as_image.data[i] = m.data[i];
    const auto g = compute_gei(s);
    EXPECT_EQ(g.pixels, size_normalize(as_image));
}

TEST(ComputeGei, HalfOnPixelPreNormalization) {
    Mask a(4, 4), b(4, 4);
    a(1, 2) = 1;
    const auto mean = average_frames(SilhouetteSequence{{a, b}}, GaitCycle{0, 2});
    EXPECT_EQ(mean(1, 2), 0.5);
    EXPECT_EQ(mean(0, 0), 0.0);
}

TEST(ComputeGei, MeanEqualsBruteForceSumOverN) {
    Rng r(5);
    const auto s = random_sequence(r, 10, 24, 18);
    const auto mean = average_frames(s, GaitCycle{0, 10});
    EXPECT_EQ(mean, oracle_mean(s, 0, 10));
    const auto sub = average_frames(s, GaitCycle{3, 5});
    EXPECT_EQ(sub, oracle_mean(s, 3, 5));
}

TEST(ComputeGei, PermutationInvariantWithinWindow) {
    Rng r(6);
    auto s = random_sequence(r, 12, 30, 20);
    const auto g = compute_gei(s, GaitCycle{0, 12});
    std::reverse(s.frames.begin(), s.frames.end());
    std::swap(s.frames[2], s.frames[7]);
    EXPECT_EQ(compute_gei(s, GaitCycle{0, 12}).pixels, g.pixels);
}

TEST(ComputeGei, OutputShapeAndRangeOnRandomInputs) {
    Rng r(7);
    for (int t = 0; t < 20; ++t) {
        const int h = 10 + static_cast<int>(r.index(200)), w = 10 + static_cast<int>(r.index(150));
        const auto s = random_sequence(r, 4 + static_cast<int>(r.index(20)), h, w);
        const auto g = compute_gei(s);
        ASSERT_EQ(g.height(), kGeiHeight);
        ASSERT_EQ(g.width(), kGeiWidth);
        for (double v : g.pixels.data) {
            ASSERT_GE(v, 0.0);
            ASSERT_LE(v, 1.0);
        }
    }
}

TEST(ComputeGei, EmptySilhouetteIsAnError) {
    SilhouetteSequence s{{Mask(8, 8), Mask(8, 8)}};
    EXPECT_THROW(compute_gei(s), EmptySilhouetteError);
}

TEST(ComputeGei, CycleOutsideSequenceIsRejected) {
    Rng r(8);
    const auto s = random_sequence(r, 5, 8, 8);
    EXPECT_THROW(compute_gei(s, GaitCycle{3, 4}), InvalidArgumentError);
}

TEST(SizeNormalize, FullBodyFillsTheHeight) {
    Image box(40, 30);
    for (int y = 5; y < 25; ++y)
        for (int x = 10; x < 20; ++x) box(y, x) = 1.0;
    const auto out = size_normalize(box);
    // Box spans every row; width 10 scaled by 128/20 = 64 pixels centered at 44.
    for (int y = 0; y < kGeiHeight; ++y) {
        if (y >= 4 && y < kGeiHeight - 4) {
            EXPECT_NEAR(out(y, kGeiWidth / 2), 1.0, 1e-12);
        }
        EXPECT_GT(out(y, kGeiWidth / 2), 0.5);
        EXPECT_EQ(out(y, 0), 0.0);
        EXPECT_EQ(out(y, kGeiWidth - 1), 0.0);
    }
    int on = 0;
    for (int x = 0; x < kGeiWidth; ++x) on += out(64, x) > 0.5;
    EXPECT_NEAR(on, 64, 1);
}

TEST(SizeNormalize, TranslationInvariant) {
    Image a(50, 50), b(50, 50);
    Rng r(9);
    for (int y = 0; y < 20; ++y)
        for (int x = 0; x < 12; ++x) {
            const double v = r.uniform() < 0.7 ? 1.0 : 0.0;
            a(y + 3, x + 4) = v;
            b(y + 25, x + 30) = v;
        }
    a(3, 4) = b(25, 30) = 1.0;
    a(22, 15) = b(44, 41) = 1.0;
    const auto na = size_normalize(a), nb = size_normalize(b);
    for (std::size_t i = 0; i < na.size(); ++i) EXPECT_NEAR(na.data[i], nb.data[i], 1e-12);
}
