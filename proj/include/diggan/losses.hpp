#pragma once

#include <span>
#include <vector>

#include "diggan/image.hpp"

namespace diggan {

struct LossWeights {
    double triplet = 1.0;
    double rec = 1.0;
    double angle = 1.0;
    double id = 1.0;
    double margin = 0.2;  // triplet margin, in latent distance units

    void validate() const;
};

struct AdversarialLosses {
    double discriminator = 0;  // -mean log D(real) - mean log(1 - D(fake))
    double generator = 0;      // -mean log D(fake), non-saturating form
};

// Scores are discriminator probabilities, each strictly inside (0,1).
AdversarialLosses angle_adv_losses(std::span<const double> d_real, std::span<const double> d_fake);
AdversarialLosses id_adv_losses(std::span<const double> d_real_pair, std::span<const double> d_fake_pair);

// Gradients of both adversarial losses with respect to the scores.
struct AdversarialGradients {
    std::vector<double> disc_wrt_real, disc_wrt_fake, gen_wrt_fake;
};
AdversarialGradients adv_loss_gradients(std::span<const double> d_real, std::span<const double> d_fake);

// Mean hinge max(|a-p| - |a-n| + margin, 0) with non-squared Euclidean |.|.
double triplet_loss(const std::vector<std::vector<double>>& anchor, const std::vector<std::vector<double>>& positive,
                    const std::vector<std::vector<double>>& negative, double margin);

struct TripletGradients {
    double value = 0;
    std::vector<std::vector<double>> anchor, positive, negative;
    double active_fraction = 0;
};
TripletGradients triplet_loss_with_grad(const std::vector<std::vector<double>>& anchor,
                                        const std::vector<std::vector<double>>& positive,
                                        const std::vector<std::vector<double>>& negative, double margin);

// Mean absolute pixel difference.
double recon_loss(std::span<const double> generated, std::span<const double> target);
double recon_loss(const Image& generated, const Image& target);
// d recon_loss / d generated (subgradient 0 where equal).
std::vector<double> recon_loss_grad(std::span<const double> generated, std::span<const double> target);

struct GeneratorComponents {
    double triplet = 0;
    double rec = 0;
    double angle = 0;  // generator side of the angle adversarial loss
    double id = 0;     // generator side of the identity adversarial loss
};

double total_generator_objective(const GeneratorComponents& c, const LossWeights& w);

// Binary cross-entropy on logits: mean_i -[t log s(l_i) + (1-t) log(1 - s(l_i))].
// Equal in value to the probability forms above, but finite for any logit.
struct BceResult {
    double value = 0;
    std::vector<double> grad;  // d value / d logit
};
BceResult bce_with_logits(std::span<const double> logits, double target);
BceResult bce_with_logits(std::span<const double> logits, std::span<const double> targets);

}  // namespace diggan
