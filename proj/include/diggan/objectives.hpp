#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "diggan/losses.hpp"
#include "diggan/network.hpp"

namespace diggan {

// Network-level loss evaluation shared by the trainer (float) and the
// gradient checks (double). Each function returns loss values and
// accumulates parameter gradients; callers zero gradients beforehand.

template <class T>
struct PairBatch {
    nn::Tensor<T> source;  // x_i^p
    nn::Tensor<T> target;  // x_i^k
    nn::Tensor<T> view;    // one-hot of k, (N_v, B, 1, 1)
};

template <class T>
struct TripletBatch {
    nn::Tensor<T> anchor, positive, negative;
};

template <class T>
struct FakeCache {
    nn::Tape<T> encoder, generator;
    nn::Tensor<T> fake;
};

struct DiscriminatorLosses {
    double angle = 0;
    double id = 0;
};

struct GeneratorLosses {
    double angle = 0;
    double id = 0;
    double rec = 0;
    double triplet = 0;
    double total = 0;
};

namespace detail {

template <class T>
std::vector<double> to_double(const nn::Tensor<T>& t) {
    return std::vector<double>(t.data.begin(), t.data.end());
}

template <class T>
nn::Tensor<T> from_grad(const std::vector<double>& g, int batch) {
    nn::Tensor<T> t(1, batch, 1, 1);
    for (std::size_t i = 0; i < g.size(); ++i) t.data[i] = static_cast<T>(g[i]);
    return t;
}

template <class T>
nn::Tensor<T> scaled(const std::vector<double>& g, int batch, double w) {
    nn::Tensor<T> t(1, batch, 1, 1);
    for (std::size_t i = 0; i < g.size(); ++i) t.data[i] = static_cast<T>(w * g[i]);
    return t;
}

}  // namespace detail

// E and G forward with tapes kept for the generator update.
template <class T>
FakeCache<T> generate_fakes(const Model<T>& m, const PairBatch<T>& b) {
    FakeCache<T> c;
    const auto z = m.encoder.forward(b.source, &c.encoder);
    c.fake = m.generator.forward(z, b.view, &c.generator);
    return c;
}

// Binary cross-entropy of D_angle on labelled images (stage A).
template <class T>
double angle_pretrain_loss(Model<T>& m, const nn::Tensor<T>& x, const nn::Tensor<T>& view,
                           std::span<const double> truth) {
    typename AngleDiscriminator<T>::Trace tr;
    const auto logits = m.angle.forward(x, view, &tr);
    const auto bce = bce_with_logits(detail::to_double(logits), truth);
    m.angle.backward(tr, detail::from_grad<T>(bce.grad, x.batch), false);
    return bce.value;
}

// Discriminator side: real (x^k, k) vs (fake, k) for D_angle, and
// (x^p, x^k) vs (x^p, fake) for D_id. The fake is treated as a constant.
template <class T>
DiscriminatorLosses discriminator_losses(Model<T>& m, const PairBatch<T>& b, const nn::Tensor<T>& fake) {
    const int n = b.source.batch;
    DiscriminatorLosses out;
    {
        typename AngleDiscriminator<T>::Trace tr_real, tr_fake;
        const auto lr = m.angle.forward(b.target, b.view, &tr_real);
        const auto lf = m.angle.forward(fake, b.view, &tr_fake);
        const auto r = bce_with_logits(detail::to_double(lr), 1.0);
        const auto f = bce_with_logits(detail::to_double(lf), 0.0);
        out.angle = r.value + f.value;
        m.angle.backward(tr_real, detail::from_grad<T>(r.grad, n), false);
        m.angle.backward(tr_fake, detail::from_grad<T>(f.grad, n), false);
    }
    {
        nn::Tape<T> tr_real, tr_fake;
        const auto lr = m.identity.forward(b.source, b.target, &tr_real);
        const auto lf = m.identity.forward(b.source, fake, &tr_fake);
        const auto r = bce_with_logits(detail::to_double(lr), 1.0);
        const auto f = bce_with_logits(detail::to_double(lf), 0.0);
        out.id = r.value + f.value;
        m.identity.backward(tr_real, detail::from_grad<T>(r.grad, n));
        m.identity.backward(tr_fake, detail::from_grad<T>(f.grad, n));
    }
    return out;
}

// Triplet hinge on E codes; accumulates encoder gradients scaled by `weight`.
template <class T>
double triplet_objective(Model<T>& m, const TripletBatch<T>& t, double margin, double weight) {
    nn::Tape<T> ta, tp, tn;
    const auto za = m.encoder.forward(t.anchor, &ta);
    const auto zp = m.encoder.forward(t.positive, &tp);
    const auto zn = m.encoder.forward(t.negative, &tn);
    const auto g = triplet_loss_with_grad(tensor_to_rows(za), tensor_to_rows(zp), tensor_to_rows(zn), margin);
    if (weight != 0.0) {
        const int k = za.channels;
        auto grad_tensor = [&](const std::vector<std::vector<double>>& rows) {
            auto out = rows_to_tensor<T>(rows, k);
            for (auto& v : out.data) v = static_cast<T>(v * weight);
            return out;
        };
        m.encoder.backward(ta, grad_tensor(g.anchor));
        m.encoder.backward(tp, grad_tensor(g.positive));
        m.encoder.backward(tn, grad_tensor(g.negative));
    }
    return g.value;
}

// Generator/encoder side of the weighted objective. Gradients also land in
// the discriminators' parameters; the trainer discards those.
template <class T>
GeneratorLosses generator_losses(Model<T>& m, const PairBatch<T>& b, const FakeCache<T>& c,
                                 const TripletBatch<T>* triplets, const LossWeights& w) {
    const int n = b.source.batch;
    GeneratorLosses out;
    nn::Tensor<T> dfake(c.fake.channels, c.fake.batch, c.fake.height, c.fake.width);

    typename AngleDiscriminator<T>::Trace tr_angle;
    const auto la = m.angle.forward(c.fake, b.view, &tr_angle);
    const auto ga = bce_with_logits(detail::to_double(la), 1.0);
    out.angle = ga.value;
    if (w.angle != 0.0) {
        const auto dx = m.angle.backward(tr_angle, detail::scaled<T>(ga.grad, n, w.angle), true);
        for (std::size_t i = 0; i < dfake.size(); ++i) dfake.data[i] += dx.data[i];
    }

    nn::Tape<T> tr_id;
    const auto li = m.identity.forward(b.source, c.fake, &tr_id);
    const auto gi = bce_with_logits(detail::to_double(li), 1.0);
    out.id = gi.value;
    if (w.id != 0.0) {
        const auto dx = m.identity.backward(tr_id, detail::scaled<T>(gi.grad, n, w.id)).second;
        for (std::size_t i = 0; i < dfake.size(); ++i) dfake.data[i] += dx.data[i];
    }

    const auto fake_d = detail::to_double(c.fake), target_d = detail::to_double(b.target);
    out.rec = recon_loss(fake_d, target_d);
    if (w.rec != 0.0) {
        const auto dr = recon_loss_grad(fake_d, target_d);
        for (std::size_t i = 0; i < dfake.size(); ++i) dfake.data[i] += static_cast<T>(w.rec * dr[i]);
    }

    const auto dz = m.generator.backward(c.generator, dfake);
    m.encoder.backward(c.encoder, dz);

    if (triplets) out.triplet = triplet_objective(m, *triplets, w.margin, w.triplet);

    out.total = total_generator_objective({out.triplet, out.rec, out.angle, out.id}, w);
    return out;
}

}  // namespace diggan
