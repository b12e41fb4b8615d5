#include <gtest/gtest.h>

#include <cmath>

#include "../support/oracles.hpp"
#include "diggan/errors.hpp"
#include "diggan/losses.hpp"
#include "diggan/network.hpp"

using namespace diggan;

namespace {

std::vector<double> scores(Rng& r, std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = r.uniform(1e-4, 1 - 1e-4);
    return v;
}

std::vector<std::vector<double>> codes(Rng& r, std::size_t n, std::size_t d) {
    std::vector<std::vector<double>> v(n, std::vector<double>(d));
    for (auto& row : v)
        for (auto& x : row) x = r.normal();
    return v;
}

}  // namespace

TEST(AdversarialLoss, HalfScoresGiveTwoLnTwo) {
    const std::vector<double> h{0.5, 0.5, 0.5};
    const auto a = angle_adv_losses(h, h);
    EXPECT_EQ(a.discriminator, 2 * std::log(2.0));
    EXPECT_EQ(a.generator, std::log(2.0));
    EXPECT_NEAR(a.discriminator, 1.3863, 1e-4);
    EXPECT_NEAR(a.generator, 0.6931, 1e-4);
    EXPECT_EQ(id_adv_losses(h, h).discriminator, 2 * std::log(2.0));
}

TEST(AdversarialLoss, PerfectDiscriminatorApproachesZero) {
    const std::vector<double> real{1 - 1e-12}, fake{1e-12};
    EXPECT_LT(angle_adv_losses(real, fake).discriminator, 1e-9);
    EXPECT_LT(id_adv_losses(real, fake).discriminator, 1e-9);
}

TEST(AdversarialLoss, MatchesScalarOracle) {
    Rng r(1);
    for (int t = 0; t < 100; ++t) {
        const auto real = scores(r, 1 + r.index(16)), fake = scores(r, 1 + r.index(16));
        const auto [d, g] = oracle::adversarial(real, fake);
        const auto a = angle_adv_losses(real, fake), i = id_adv_losses(real, fake);
        EXPECT_NEAR(a.discriminator, d, 1e-6);
        EXPECT_NEAR(a.generator, g, 1e-6);
        EXPECT_NEAR(i.discriminator, d, 1e-6);
        EXPECT_NEAR(i.generator, g, 1e-6);
        EXPECT_GE(a.discriminator, 0);
        EXPECT_GE(a.generator, 0);
    }
}

TEST(AdversarialLoss, DomainErrors) {
    const std::vector<double> ok{0.5}, zero{0.0}, one{1.0};
    EXPECT_THROW(angle_adv_losses(zero, ok), LossDomainError);
    EXPECT_THROW(angle_adv_losses(ok, one), LossDomainError);
    EXPECT_THROW(id_adv_losses(ok, std::vector<double>{1.5}), LossDomainError);
}

TEST(AdversarialLoss, GradientsMatchFiniteDifferences) {
    Rng r(2);
    const auto real = scores(r, 5), fake = scores(r, 4);
    const auto g = adv_loss_gradients(real, fake);
    const double h = 1e-6;
    for (std::size_t i = 0; i < real.size(); ++i) {
        auto up = real, dn = real;
        up[i] += h;
        dn[i] -= h;
        const double num = (angle_adv_losses(up, fake).discriminator - angle_adv_losses(dn, fake).discriminator) / (2 * h);
        EXPECT_NEAR(g.disc_wrt_real[i], num, 1e-3 * std::fabs(num));
    }
    for (std::size_t i = 0; i < fake.size(); ++i) {
        auto up = fake, dn = fake;
        up[i] += h;
        dn[i] -= h;
        const auto lu = angle_adv_losses(real, up), ld = angle_adv_losses(real, dn);
        EXPECT_NEAR(g.disc_wrt_fake[i], (lu.discriminator - ld.discriminator) / (2 * h), 1e-3 * std::fabs(g.disc_wrt_fake[i]));
        EXPECT_NEAR(g.gen_wrt_fake[i], (lu.generator - ld.generator) / (2 * h), 1e-3 * std::fabs(g.gen_wrt_fake[i]));
    }
}

TEST(BceLogits, EqualsProbabilityForm) {
    Rng r(3);
    for (int t = 0; t < 50; ++t) {
        std::vector<double> lr(6), lf(6), pr, pf;
        for (auto& l : lr) l = r.normal() * 3;
        for (auto& l : lf) l = r.normal() * 3;
        for (double l : lr) pr.push_back(sigmoid(l));
        for (double l : lf) pf.push_back(sigmoid(l));
        const auto a = angle_adv_losses(pr, pf);
        EXPECT_NEAR(bce_with_logits(lr, 1.0).value + bce_with_logits(lf, 0.0).value, a.discriminator, 1e-9);
        EXPECT_NEAR(bce_with_logits(lf, 1.0).value, a.generator, 1e-9);
    }
}

TEST(BceLogits, FiniteForExtremeLogitsAndGradientMatches) {
    const std::vector<double> l{-800.0, 800.0, 0.0};
    const auto b = bce_with_logits(l, 1.0);
    EXPECT_TRUE(std::isfinite(b.value));
    EXPECT_NEAR(b.value, (800.0 + 0.0 + std::log(2.0)) / 3, 1e-9);
    std::vector<double> x{0.3, -1.2, 2.5};
    const std::vector<double> targets{1.0, 0.0, 1.0};
    const auto g = bce_with_logits(x, targets);
    for (std::size_t i = 0; i < x.size(); ++i) {
        auto up = x, dn = x;
        up[i] += 1e-6;
        dn[i] -= 1e-6;
        const double num = (bce_with_logits(up, targets).value - bce_with_logits(dn, targets).value) / 2e-6;
        EXPECT_NEAR(g.grad[i], num, 1e-6);
    }
}

TEST(Triplet, SatisfiedMarginIsZero) {
    EXPECT_EQ(triplet_loss({{0, 0}}, {{0, 0}}, {{1, 0}}, 0.2), 0.0);
}

TEST(Triplet, WorkedExampleIsPointFour) {
    EXPECT_DOUBLE_EQ(triplet_loss({{0, 0}}, {{0.3, 0}}, {{0.1, 0}}, 0.2), 0.4);
}

TEST(Triplet, MatchesScalarOracle) {
    Rng r(4);
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 1 + r.index(12), d = 1 + r.index(32);
        const auto a = codes(r, n, d), p = codes(r, n, d), q = codes(r, n, d);
        const double margin = r.uniform(0.05, 2.0);
        const double v = triplet_loss(a, p, q, margin);
        EXPECT_NEAR(v, oracle::triplet(a, p, q, margin), 1e-6);
        EXPECT_GE(v, 0.0);
    }
}

TEST(Triplet, ZeroWhenAllMarginsHold) {
    Rng r(5);
    auto a = codes(r, 8, 4), p = a, n = a;
    for (std::size_t i = 0; i < a.size(); ++i) {
        p[i][0] += 0.1;
        n[i][1] += 0.3 + 0.01 * static_cast<double>(i);
    }
    EXPECT_EQ(triplet_loss(a, p, n, 0.2), 0.0);
}

TEST(Triplet, GradientMatchesFiniteDifferences) {
    Rng r(6);
    const auto a = codes(r, 4, 5), p = codes(r, 4, 5), n = codes(r, 4, 5);
    const auto g = triplet_loss_with_grad(a, p, n, 3.0);
    EXPECT_EQ(g.active_fraction, 1.0);
    const double h = 1e-6;
    for (int which = 0; which < 3; ++which)
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t k = 0; k < 5; ++k) {
                auto aa = a, pp = p, nn = n;
                auto& target = which == 0 ? aa : which == 1 ? pp : nn;
                target[i][k] += h;
                const double up = triplet_loss(aa, pp, nn, 3.0);
                target[i][k] -= 2 * h;
                const double dn = triplet_loss(aa, pp, nn, 3.0);
                const auto& an = which == 0 ? g.anchor : which == 1 ? g.positive : g.negative;
                EXPECT_NEAR(an[i][k], (up - dn) / (2 * h), 1e-6);
            }
}

TEST(Triplet, LengthMismatch) {
    EXPECT_THROW(triplet_loss({{0, 0}}, {{0}}, {{1, 0}}, 0.2), DimensionMismatchError);
    EXPECT_THROW(triplet_loss({{0, 0}}, {{0, 0}, {1, 1}}, {{1, 0}}, 0.2), DimensionMismatchError);
}

TEST(Recon, WorkedExamples) {
    Image a(4, 4, 0.0), b(4, 4, 1.0);
    EXPECT_EQ(recon_loss(a, a), 0.0);
    EXPECT_EQ(recon_loss(a, b), 1.0);
    EXPECT_THROW(recon_loss(a, Image(4, 5)), DimensionMismatchError);
}

TEST(Recon, MatchesScalarOracleAndTriangleBound) {
    Rng r(7);
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 1 + r.index(500);
        std::vector<double> x(n), y(n), z(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = r.uniform();
            y[i] = r.uniform();
            z[i] = r.uniform();
        }
        EXPECT_NEAR(recon_loss(x, y), oracle::recon(x, y), 1e-6);
        EXPECT_LE(std::fabs(recon_loss(x, z) - recon_loss(x, y)), recon_loss(y, z) + 1e-12);
    }
}

TEST(Recon, GradientIsSignOverN) {
    const std::vector<double> x{0.2, 0.5, 0.9, 0.4}, y{0.1, 0.5, 1.0, 0.0};
    const auto g = recon_loss_grad(x, y);
    EXPECT_EQ(g, (std::vector<double>{0.25, 0.0, -0.25, 0.25}));
}

TEST(Total, WorkedExamples) {
    LossWeights w;
    EXPECT_EQ(total_generator_objective({0, 0, 0, 0}, w), 0.0);
    EXPECT_EQ(total_generator_objective({1, 1, 1, 1}, w), 4.0);
}

TEST(Total, MatchesHandSum) {
    Rng r(8);
    for (int t = 0; t < 100; ++t) {
        LossWeights w;
        w.triplet = r.uniform(0, 3);
        w.rec = r.uniform(0, 3);
        w.angle = r.uniform(0, 3);
        w.id = r.uniform(0, 3);
        const GeneratorComponents c{r.uniform(0, 2), r.uniform(0, 2), r.uniform(0, 5), r.uniform(0, 5)};
        EXPECT_NEAR(total_generator_objective(c, w),
                    oracle::total(c.triplet, c.rec, c.angle, c.id, w.triplet, w.rec, w.angle, w.id), 1e-9);
    }
}

TEST(Total, NonFiniteComponent) {
    EXPECT_THROW(total_generator_objective({0, NAN, 0, 0}, LossWeights{}), NonFiniteError);
    EXPECT_THROW(total_generator_objective({0, 0, INFINITY, 0}, LossWeights{}), NonFiniteError);
}

TEST(Weights, Validation) {
    LossWeights w;
    EXPECT_NO_THROW(w.validate());
    w.margin = 0;
    EXPECT_THROW(w.validate(), InvalidArgumentError);
    w.margin = 0.2;
    w.rec = -1;
    EXPECT_THROW(w.validate(), InvalidArgumentError);
}
