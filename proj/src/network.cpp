#include "diggan/network.hpp"

#include <cmath>

#include "diggan/errors.hpp"

namespace diggan {

void ArchSpec::validate() const {
    if (latent_dim < 1) throw InvalidArgumentError("latent_dim must be positive");
    if (n_views < 2) throw InvalidArgumentError("at least 2 views are required");
    if (image_height < 2 || image_width < 2) throw InvalidArgumentError("image dimensions too small");
    if (encoder_channels.empty() || discriminator_channels.empty())
        throw InvalidArgumentError("encoder and discriminator need at least one block");
    if (generator_channels.size() != 4) throw InvalidArgumentError("generator has exactly 4 upsampling blocks");
    for (const auto* list : {&encoder_channels, &generator_channels, &discriminator_channels})
        for (int c : *list)
            if (c < 1) throw InvalidArgumentError("channel widths must be positive");
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

double sigmoid(double logit) {
    return logit >= 0 ? 1.0 / (1.0 + std::exp(-logit)) : std::exp(logit) / (1.0 + std::exp(logit));
}

namespace {

void check_view_vectors(const std::vector<ViewVector>& views, int n_views) {
    for (const auto& v : views) {
        if (static_cast<int>(v.size()) != n_views)
            throw DimensionMismatchError("view vector has length " + std::to_string(v.size()) + ", expected " +
                                         std::to_string(n_views));
        double sum = 0;
        for (double x : v) {
            if (!(x >= 0.0)) throw InvalidArgumentError("view vector entries must be non-negative");
            sum += x;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw InvalidArgumentError("view vector must sum to 1");
    }
}

std::vector<double> probabilities(const nn::Tensor<float>& logits) {
    std::vector<double> out(logits.data.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = sigmoid(logits.data[i]);
    return out;
}

}  // namespace

std::vector<Code> encode(const ModelParams& m, std::span<const Image* const> images) {
    if (images.empty()) return {};
    auto x = images_to_tensor<float>(images, m.arch.image_height, m.arch.image_width);
    return tensor_to_rows(m.encoder.forward(x));
}

std::vector<Image> generate(const ModelParams& m, const std::vector<Code>& codes, const std::vector<ViewVector>& views) {
    if (codes.size() != views.size())
        throw DimensionMismatchError("generate: " + std::to_string(codes.size()) + " codes but " +
                                     std::to_string(views.size()) + " view vectors");
    if (codes.empty()) return {};
    check_view_vectors(views, m.arch.n_views);
    auto z = rows_to_tensor<float>(codes, m.arch.latent_dim);
    auto v = rows_to_tensor<float>(views, m.arch.n_views);
    return tensor_to_images(m.generator.forward(z, v));
}

std::vector<double> discriminate_angle(const ModelParams& m, std::span<const Image* const> images,
                                       const std::vector<ViewVector>& views) {
    if (images.size() != views.size()) throw DimensionMismatchError("discriminate_angle: batch size mismatch");
    if (images.empty()) return {};
    check_view_vectors(views, m.arch.n_views);
    auto x = images_to_tensor<float>(images, m.arch.image_height, m.arch.image_width);
    auto v = rows_to_tensor<float>(views, m.arch.n_views);
    return probabilities(m.angle.forward(x, v));
}

std::vector<double> discriminate_identity(const ModelParams& m, std::span<const Image* const> a,
                                          std::span<const Image* const> b) {
    if (a.size() != b.size()) throw DimensionMismatchError("discriminate_identity: batch size mismatch");
    if (a.empty()) return {};
    auto xa = images_to_tensor<float>(a, m.arch.image_height, m.arch.image_width);
    auto xb = images_to_tensor<float>(b, m.arch.image_height, m.arch.image_width);
    return probabilities(m.identity.forward(xa, xb));
}

}  // namespace diggan
