#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "diggan/errors.hpp"
#include "diggan/image.hpp"
#include "diggan/rng.hpp"
#include "helpers.hpp"

using namespace diggan;

TEST(Rng, SameSeedSameStream) {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
}

TEST(Rng, DerivedStreamsDifferByKey) {
    auto a = Rng::derive(1, {2, 3}), b = Rng::derive(1, {2, 4}), c = Rng::derive(1, {2, 3});
    const auto va = a.next();
    EXPECT_NE(va, b.next());
    EXPECT_EQ(va, c.next());
}

TEST(Rng, IndexStaysInRangeAndCoversIt) {
    Rng r(5);
    std::vector<int> hist(7, 0);
    for (int i = 0; i < 7000; ++i) {
        const auto k = r.index(7);
        ASSERT_LT(k, 7u);
        ++hist[k];
    }
    for (int h : hist) EXPECT_NEAR(h, 1000, 150);
}

TEST(Rng, NormalHasUnitMoments) {
    Rng r(11);
    double s = 0, s2 = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double x = r.normal();
        s += x;
        s2 += x * x;
    }
    EXPECT_NEAR(s / n, 0.0, 0.03);
    EXPECT_NEAR(s2 / n, 1.0, 0.05);
}

TEST(Pgm, RoundTripIsExact) {
    auto dir = testutil::scratch_dir();
    Grid<std::uint8_t> g(5, 7);
    for (std::size_t i = 0; i < g.size(); ++i) g.data[i] = static_cast<std::uint8_t>(i * 37);
    write_pgm(dir / "a.pgm", g);
    EXPECT_EQ(read_pgm(dir / "a.pgm"), g);
}

TEST(Pgm, HeaderCommentsAreSkipped) {
    auto dir = testutil::scratch_dir();
    {
        std::ofstream out(dir / "c.pgm", std::ios::binary);
        out << "P5\n# made by hand\n2 1\n# another\n255\n";
        out.put(static_cast<char>(10));
        out.put(static_cast<char>(200));
    }
    const auto g = read_pgm(dir / "c.pgm");
    ASSERT_EQ(g.width, 2);
    EXPECT_EQ(g.data[0], 10);
    EXPECT_EQ(g.data[1], 200);
}

TEST(Pgm, RejectsOtherFormats) {
    auto dir = testutil::scratch_dir();
    {
        std::ofstream out(dir / "p2.pgm");
        out << "P2\n1 1\n255\n0\n";
    }
    EXPECT_THROW(read_pgm(dir / "p2.pgm"), ImageFormatError);
    {
        std::ofstream out(dir / "short.pgm", std::ios::binary);
        out << "P5\n4 4\n255\n";
        out.put('x');
    }
    EXPECT_THROW(read_pgm(dir / "short.pgm"), ImageFormatError);
}

TEST(Gei, QuantizedRoundTripWithinOneLevel) {
    Rng r(9);
    auto dir = testutil::scratch_dir();
    GeiImage g{Image(kGeiHeight, kGeiWidth), "x"};
    for (auto& v : g.pixels.data) v = r.uniform();
    save_gei(dir / "g.pgm", g);
    const auto back = load_gei(dir / "g.pgm");
    ASSERT_EQ(back.height(), kGeiHeight);
    ASSERT_EQ(back.width(), kGeiWidth);
    for (std::size_t i = 0; i < g.pixels.size(); ++i)
        EXPECT_LE(std::abs(back.pixels.data[i] - g.pixels.data[i]), 1.0 / 255 + 1e-12);
}

TEST(Tiles, LayoutArithmetic) {
    Image a(2, 3, 0.25), b(2, 3, 0.75);
    const auto t = tile_images({&a, nullptr, &b}, 2, 2);
    EXPECT_EQ(t.height, 4);
    EXPECT_EQ(t.width, 6);
    EXPECT_EQ(t(0, 0), 0.25);
    EXPECT_EQ(t(0, 3), 0.0);
    EXPECT_EQ(t(2, 0), 0.75);
    EXPECT_EQ(t(3, 5), 0.0);
}
