#include "diggan/losses.hpp"

#include <cmath>
#include <string>

#include "diggan/errors.hpp"

namespace diggan {

namespace {

void check_scores(std::span<const double> s, const char* what) {
    if (s.empty()) throw InvalidArgumentError(std::string(what) + ": empty score batch");
    for (double v : s)
        if (!(v > 0.0 && v < 1.0))
            throw LossDomainError(std::string(what) + ": score " + std::to_string(v) + " outside (0,1)");
}

AdversarialLosses adversarial(std::span<const double> real, std::span<const double> fake, const char* what) {
    check_scores(real, what);
    check_scores(fake, what);
    double log_real = 0, log_not_fake = 0, log_fake = 0;
    for (double r : real) log_real += std::log(r);
    for (double f : fake) {
        log_not_fake += std::log1p(-f);
        log_fake += std::log(f);
    }
    const double nr = static_cast<double>(real.size()), nf = static_cast<double>(fake.size());
    return {-log_real / nr - log_not_fake / nf, -log_fake / nf};
}

double distance(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

void check_triplet_shapes(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& p,
                          const std::vector<std::vector<double>>& n) {
    if (a.empty()) throw InvalidArgumentError("triplet_loss: empty batch");
    if (a.size() != p.size() || a.size() != n.size())
        throw DimensionMismatchError("triplet_loss: batch sizes differ");
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].size() != a[0].size() || p[i].size() != a[0].size() || n[i].size() != a[0].size())
            throw DimensionMismatchError("triplet_loss: code lengths differ");
}

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

}  // namespace

void LossWeights::validate() const {
    if (!(margin > 0.0)) throw InvalidArgumentError("triplet margin must be positive");
    for (double w : {triplet, rec, angle, id})
        if (!(w >= 0.0)) throw InvalidArgumentError("loss weights must be non-negative");
}

AdversarialLosses angle_adv_losses(std::span<const double> d_real, std::span<const double> d_fake) {
    return adversarial(d_real, d_fake, "angle_adv_losses");
}

AdversarialLosses id_adv_losses(std::span<const double> d_real_pair, std::span<const double> d_fake_pair) {
    return adversarial(d_real_pair, d_fake_pair, "id_adv_losses");
}

AdversarialGradients adv_loss_gradients(std::span<const double> d_real, std::span<const double> d_fake) {
    check_scores(d_real, "adv_loss_gradients");
    check_scores(d_fake, "adv_loss_gradients");
    const double nr = static_cast<double>(d_real.size()), nf = static_cast<double>(d_fake.size());
    AdversarialGradients g;
    for (double r : d_real) g.disc_wrt_real.push_back(-1.0 / (nr * r));
    for (double f : d_fake) {
        g.disc_wrt_fake.push_back(1.0 / (nf * (1.0 - f)));
        g.gen_wrt_fake.push_back(-1.0 / (nf * f));
    }
    return g;
}

double triplet_loss(const std::vector<std::vector<double>>& anchor, const std::vector<std::vector<double>>& positive,
                    const std::vector<std::vector<double>>& negative, double margin) {
    return triplet_loss_with_grad(anchor, positive, negative, margin).value;
}

TripletGradients triplet_loss_with_grad(const std::vector<std::vector<double>>& a,
                                        const std::vector<std::vector<double>>& p,
                                        const std::vector<std::vector<double>>& n, double margin) {
    check_triplet_shapes(a, p, n);
    const std::size_t batch = a.size(), dim = a[0].size();
    TripletGradients out;
    out.anchor.assign(batch, std::vector<double>(dim, 0.0));
    out.positive = out.anchor;
    out.negative = out.anchor;
    const double inv_b = 1.0 / static_cast<double>(batch);
    std::size_t active = 0;
    for (std::size_t i = 0; i < batch; ++i) {
        const double dp = distance(a[i], p[i]), dn = distance(a[i], n[i]);
        const double hinge = dp - dn + margin;
        if (hinge <= 0) continue;
        ++active;
        out.value += hinge;
        for (std::size_t k = 0; k < dim; ++k) {
            // d|a-p|/da = (a-p)/|a-p|; the subgradient at |a-p| = 0 is taken as 0.
            const double up = dp > 1e-12 ? (a[i][k] - p[i][k]) / dp : 0.0;
            const double un = dn > 1e-12 ? (a[i][k] - n[i][k]) / dn : 0.0;
            out.anchor[i][k] = (up - un) * inv_b;
            out.positive[i][k] = -up * inv_b;
            out.negative[i][k] = un * inv_b;
        }
    }
    out.value *= inv_b;
    out.active_fraction = static_cast<double>(active) * inv_b;
    return out;
}

double recon_loss(std::span<const double> generated, std::span<const double> target) {
    if (generated.size() != target.size()) throw DimensionMismatchError("recon_loss: size mismatch");
    if (generated.empty()) throw InvalidArgumentError("recon_loss: empty input");
    double s = 0;
    for (std::size_t i = 0; i < generated.size(); ++i) s += std::abs(generated[i] - target[i]);
    return s / static_cast<double>(generated.size());
}

double recon_loss(const Image& generated, const Image& target) {
    if (generated.height != target.height || generated.width != target.width)
        throw DimensionMismatchError("recon_loss: image dimensions differ");
    return recon_loss(std::span<const double>(generated.data), std::span<const double>(target.data));
}

std::vector<double> recon_loss_grad(std::span<const double> generated, std::span<const double> target) {
    if (generated.size() != target.size()) throw DimensionMismatchError("recon_loss_grad: size mismatch");
    const double inv = 1.0 / static_cast<double>(generated.size());
    std::vector<double> g(generated.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double d = generated[i] - target[i];
        g[i] = d > 0 ? inv : (d < 0 ? -inv : 0.0);
    }
    return g;
}

double total_generator_objective(const GeneratorComponents& c, const LossWeights& w) {
    for (double v : {c.triplet, c.rec, c.angle, c.id})
        if (!std::isfinite(v)) throw NonFiniteError("non-finite loss component");
    return w.triplet * c.triplet + w.rec * c.rec + w.angle * c.angle + w.id * c.id;
}

BceResult bce_with_logits(std::span<const double> logits, double target) {
    std::vector<double> t(logits.size(), target);
    return bce_with_logits(logits, t);
}

BceResult bce_with_logits(std::span<const double> logits, std::span<const double> targets) {
    if (logits.size() != targets.size()) throw DimensionMismatchError("bce_with_logits: size mismatch");
    if (logits.empty()) throw InvalidArgumentError("bce_with_logits: empty batch");
    const double inv = 1.0 / static_cast<double>(logits.size());
    BceResult r;
    r.grad.resize(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double l = logits[i], t = targets[i];
        // -log s(l) = softplus(-l), -log(1 - s(l)) = softplus(l)
        r.value += t * softplus(-l) + (1.0 - t) * softplus(l);
        const double s = l >= 0 ? 1.0 / (1.0 + std::exp(-l)) : std::exp(l) / (1.0 + std::exp(l));
        r.grad[i] = (s - t) * inv;
    }
    r.value *= inv;
    return r;
}

}  // namespace diggan
