#pragma once

// Central finite-difference checks of every network loss on a miniature
// double-precision model (8x8 images, 4-dimensional latent code).

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "diggan/objectives.hpp"

namespace gradcheck {

using Model = diggan::Model<double>;
using Tensor = diggan::nn::Tensor<double>;

inline diggan::ArchSpec mini_arch() {
    diggan::ArchSpec a;
    a.latent_dim = 4;
    a.n_views = 3;
    a.image_height = 8;
    a.image_width = 8;
    a.encoder_channels = {2, 3, 3, 4};
    a.generator_channels = {3, 3, 2, 2};
    a.discriminator_channels = {2, 3, 3, 3};
    return a;
}

inline Tensor random_images(diggan::Rng& rng, int n) {
    Tensor t(1, n, 8, 8);
    for (auto& v : t.data) v = rng.uniform();
    return t;
}

inline Tensor one_hots(diggan::Rng& rng, int n, int nv) {
    Tensor t(nv, n, 1, 1);
    for (int i = 0; i < n; ++i) t.data[static_cast<std::size_t>(rng.index(nv)) * n + i] = 1.0;
    return t;
}

struct TensorResult {
    std::string loss;
    std::string parameter;
    int sampled = 0;
    int passed = 0;
    double worst = 0;
};

struct Options {
    double step = 1e-5;
    double tolerance = 1e-3;
    int samples_per_tensor = 12;
    // Coordinates where both gradients are below this are counted as agreeing.
    double zero_floor = 1e-8;
};

// Compares the analytic gradient accumulated by `loss` against central
// differences for up to `samples_per_tensor` coordinates of every
// parameter tensor that the loss touches.
inline std::vector<TensorResult> check_loss(Model& m, const std::string& name,
                                            const std::function<double(Model&)>& loss, diggan::Rng& rng,
                                            const Options& opt = {}) {
    m.zero_grad();
    loss(m);
    auto params = m.all_parameters();
    std::vector<diggan::nn::Buffer<double>> analytic;
    for (auto* p : params) analytic.push_back(p->grad);

    std::vector<TensorResult> out;
    for (std::size_t t = 0; t < params.size(); ++t) {
        auto* p = params[t];
        const bool touched = std::any_of(analytic[t].begin(), analytic[t].end(), [](double g) { return g != 0.0; });
        if (!touched) continue;
        TensorResult r{name, p->name};
        std::vector<std::size_t> coords;
        if (static_cast<int>(p->size()) <= opt.samples_per_tensor) {
            for (std::size_t i = 0; i < p->size(); ++i) coords.push_back(i);
        } else {
            for (int i = 0; i < opt.samples_per_tensor; ++i) coords.push_back(rng.index(p->size()));
        }
        for (auto i : coords) {
            const double saved = p->value[i];
            p->value[i] = saved + opt.step;
            const double up = loss(m);
            p->value[i] = saved - opt.step;
            const double down = loss(m);
            p->value[i] = saved;
            const double numeric = (up - down) / (2 * opt.step);
            const double a = analytic[t][i];
            const double scale = std::max(std::fabs(a), std::fabs(numeric));
            const double rel = scale < opt.zero_floor ? 0.0 : std::fabs(a - numeric) / scale;
            ++r.sampled;
            if (rel <= opt.tolerance) ++r.passed;
            r.worst = std::max(r.worst, rel);
        }
        out.push_back(r);
    }
    m.zero_grad();
    return out;
}

struct Suite {
    std::vector<TensorResult> results;
    // Parameter tensors of each network that at least one loss covered.
    std::vector<std::string> covered;
};

// Every training loss on the miniature model: stage-A BCE, both
// discriminator losses, each generator component alone, and the weighted total.
inline Suite run_all(std::uint64_t seed, const Options& opt = {}) {
    diggan::Rng rng = diggan::Rng::derive(seed, {0x6C});
    Model m(mini_arch());
    m.initialize(seed);
    const int n = 3, nv = m.arch.n_views;

    diggan::PairBatch<double> b{random_images(rng, n), random_images(rng, n), one_hots(rng, n, nv)};
    diggan::TripletBatch<double> tb{random_images(rng, n), random_images(rng, n), random_images(rng, n)};
    const auto labels = one_hots(rng, n, nv);
    const std::vector<double> truth{1.0, 0.0, 1.0};
    const auto fixed_fake = random_images(rng, n);

    Suite s;
    auto add = [&](const std::string& name, const std::function<double(Model&)>& f) {
        for (auto& r : check_loss(m, name, f, rng, opt)) s.results.push_back(r);
    };

    add("angle_pretrain", [&](Model& mm) { return diggan::angle_pretrain_loss(mm, b.source, labels, truth); });
    add("discriminators", [&](Model& mm) {
        const auto l = diggan::discriminator_losses(mm, b, fixed_fake);
        return l.angle + l.id;
    });
    auto generator = [&](double wt, double wr, double wa, double wi, bool with_triplets) {
        return [&, wt, wr, wa, wi, with_triplets](Model& mm) {
            diggan::LossWeights w;
            w.triplet = wt;
            w.rec = wr;
            w.angle = wa;
            w.id = wi;
            w.margin = 0.2;
            const auto cache = diggan::generate_fakes(mm, b);
            return diggan::generator_losses(mm, b, cache, with_triplets ? &tb : nullptr, w).total;
        };
    };
    add("gen_angle", generator(0, 0, 1, 0, false));
    add("gen_id", generator(0, 0, 0, 1, false));
    add("gen_rec", generator(0, 1, 0, 0, false));
    add("triplet", [&](Model& mm) { return diggan::triplet_objective(mm, tb, 5.0, 1.0); });
    add("total", generator(1, 1, 1, 1, true));

    for (auto* p : m.all_parameters()) {
        const bool seen = std::any_of(s.results.begin(), s.results.end(),
                                      [&](const TensorResult& r) { return r.parameter == p->name; });
        if (seen) s.covered.push_back(p->name);
    }
    return s;
}

}  // namespace gradcheck
