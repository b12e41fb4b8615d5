#pragma once

#include <cstdint>
#include <cstdio>
#include <string_view>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "diggan/image.hpp"
#include "diggan/nn/layers.hpp"

namespace diggan {

// Shape of the four networks. Widths are per block.
struct ArchSpec {
    int latent_dim = 128;
    int n_views = 4;
    int image_height = kGeiHeight;
    int image_width = kGeiWidth;
    std::vector<int> encoder_channels{8, 16, 32, 64};
    std::vector<int> generator_channels{32, 16, 8, 4};
    std::vector<int> discriminator_channels{8, 16, 32, 32};

    void validate() const;
    // Spatial size of the generator seed map (image / 16, rounded up).
    int seed_height() const { return (image_height + 15) / 16; }
    int seed_width() const { return (image_width + 15) / 16; }
};

// Encoder E: 4 strided conv blocks -> flatten -> linear to the latent code.
template <class T>
class Encoder {
public:
    explicit Encoder(const ArchSpec& a) {
        int c = 1, h = a.image_height, w = a.image_width;
        for (std::size_t i = 0; i < a.encoder_channels.size(); ++i) {
            const int out = a.encoder_channels[i];
            net_.template add<nn::Conv2d<T>>("E.conv" + std::to_string(i + 1), c, out, 3, 2, 1);
            net_.template add<nn::LeakyRelu<T>>();
            c = out;
            h = nn::conv_output_size(h, 3, 2, 1);
            w = nn::conv_output_size(w, 3, 2, 1);
        }
        net_.template add<nn::Flatten<T>>();
        net_.template add<nn::Linear<T>>("E.fc", c * h * w, a.latent_dim, 1.0);
    }

    nn::Tensor<T> forward(const nn::Tensor<T>& x, nn::Tape<T>* tape = nullptr) const { return net_.forward(x, tape); }
    void backward(const nn::Tape<T>& tape, const nn::Tensor<T>& dz) { net_.backward(tape, dz, false); }
    std::vector<nn::Parameter<T>*> parameters() { return net_.parameters(); }
    void initialize(Rng& rng) { net_.initialize(rng); }
    std::string describe() const { return net_.describe(); }

private:
    nn::Sequential<T> net_;
};

// Generator G: linear from [z; v] -> 4 (upsample, conv) blocks -> crop -> sigmoid.
template <class T>
class Generator {
public:
    explicit Generator(const ArchSpec& a) : latent_dim_(a.latent_dim), n_views_(a.n_views) {
        const auto& g = a.generator_channels;
        const int h0 = a.seed_height(), w0 = a.seed_width();
        net_.template add<nn::Linear<T>>("G.fc", a.latent_dim + a.n_views, g[0] * h0 * w0);
        net_.template add<nn::LeakyRelu<T>>();
        net_.template add<nn::Unflatten<T>>(g[0], h0, w0);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const bool last = i + 1 == g.size();
            net_.template add<nn::Upsample2x<T>>();
            net_.template add<nn::Conv2d<T>>("G.conv" + std::to_string(i + 1), g[i], last ? 1 : g[i + 1], 3, 1, 1,
                                             last ? 1.0 : std::sqrt(2.0));
            if (!last) net_.template add<nn::LeakyRelu<T>>();
        }
        net_.template add<nn::CenterCrop<T>>(a.image_height, a.image_width);
        net_.template add<nn::Sigmoid<T>>();
    }

    nn::Tensor<T> forward(const nn::Tensor<T>& z, const nn::Tensor<T>& v, nn::Tape<T>* tape = nullptr) const {
        if (z.channels != latent_dim_ || v.channels != n_views_ || z.batch != v.batch)
            throw DimensionMismatchError("generator expects (" + std::to_string(latent_dim_) + ", " +
                                         std::to_string(n_views_) + ") inputs with equal batch sizes");
        return net_.forward(nn::concat_channels(z, v), tape);
    }
    // Returns dL/dz.
    nn::Tensor<T> backward(const nn::Tape<T>& tape, const nn::Tensor<T>& dimg) {
        return nn::split_channels(net_.backward(tape, dimg, true), latent_dim_).first;
    }
    std::vector<nn::Parameter<T>*> parameters() { return net_.parameters(); }
    void initialize(Rng& rng) { net_.initialize(rng); }
    std::string describe() const { return net_.describe(); }

private:
    int latent_dim_, n_views_;
    nn::Sequential<T> net_;
};

// Conditional angle discriminator: the view one-hot is broadcast to N_v
// constant maps and concatenated after the first convolution. Emits logits.
template <class T>
class AngleDiscriminator {
public:
    struct Trace {
        nn::Tape<T> head, tail;
    };

    explicit AngleDiscriminator(const ArchSpec& a) : n_views_(a.n_views) {
        const auto& d = a.discriminator_channels;
        first_channels_ = d[0];
        head_.template add<nn::Conv2d<T>>("Dangle.conv1", 1, d[0], 3, 2, 1);
        head_.template add<nn::LeakyRelu<T>>();
        int c = d[0] + a.n_views;
        int h = nn::conv_output_size(a.image_height, 3, 2, 1), w = nn::conv_output_size(a.image_width, 3, 2, 1);
        for (std::size_t i = 1; i < d.size(); ++i) {
            tail_.template add<nn::Conv2d<T>>("Dangle.conv" + std::to_string(i + 1), c, d[i], 3, 2, 1);
            tail_.template add<nn::LeakyRelu<T>>();
            c = d[i];
            h = nn::conv_output_size(h, 3, 2, 1);
            w = nn::conv_output_size(w, 3, 2, 1);
        }
        tail_.template add<nn::Flatten<T>>();
        tail_.template add<nn::Linear<T>>("Dangle.fc", c * h * w, 1, 1.0);
    }

    nn::Tensor<T> forward(const nn::Tensor<T>& x, const nn::Tensor<T>& v, Trace* trace = nullptr) const {
        if (v.channels != n_views_ || v.batch != x.batch)
            throw DimensionMismatchError("angle discriminator expects one " + std::to_string(n_views_) +
                                         "-way label per image");
        const auto h = head_.forward(x, trace ? &trace->head : nullptr);
        return tail_.forward(nn::concat_channels(h, nn::broadcast_maps(v, h.height, h.width)),
                             trace ? &trace->tail : nullptr);
    }
    // Returns dL/dx (empty when not requested).
    nn::Tensor<T> backward(const Trace& trace, const nn::Tensor<T>& dlogit, bool need_input_grad) {
        auto dcat = tail_.backward(trace.tail, dlogit, true);
        return head_.backward(trace.head, nn::split_channels(dcat, first_channels_).first, need_input_grad);
    }
    std::vector<nn::Parameter<T>*> parameters() {
        auto p = head_.parameters();
        for (auto* q : tail_.parameters()) p.push_back(q);
        return p;
    }
    void initialize(Rng& rng) {
        head_.initialize(rng);
        tail_.initialize(rng);
    }
    std::string describe() const { return head_.describe() + ",onehot+" + std::to_string(n_views_) + "," + tail_.describe(); }

private:
    int n_views_;
    int first_channels_ = 0;
    nn::Sequential<T> head_, tail_;
};

// Pair discriminator over the 2-channel stack (x_a, x_b). Emits logits.
template <class T>
class IdentityDiscriminator {
public:
    explicit IdentityDiscriminator(const ArchSpec& a) {
        const auto& d = a.discriminator_channels;
        int c = 2, h = a.image_height, w = a.image_width;
        for (std::size_t i = 0; i < d.size(); ++i) {
            net_.template add<nn::Conv2d<T>>("Did.conv" + std::to_string(i + 1), c, d[i], 3, 2, 1);
            net_.template add<nn::LeakyRelu<T>>();
            c = d[i];
            h = nn::conv_output_size(h, 3, 2, 1);
            w = nn::conv_output_size(w, 3, 2, 1);
        }
        net_.template add<nn::Flatten<T>>();
        net_.template add<nn::Linear<T>>("Did.fc", c * h * w, 1, 1.0);
    }

    nn::Tensor<T> forward(const nn::Tensor<T>& xa, const nn::Tensor<T>& xb, nn::Tape<T>* tape = nullptr) const {
        if (!xa.same_shape(xb)) throw DimensionMismatchError("identity discriminator inputs differ in shape");
        return net_.forward(nn::concat_channels(xa, xb), tape);
    }
    // Returns (dL/dx_a, dL/dx_b).
    std::pair<nn::Tensor<T>, nn::Tensor<T>> backward(const nn::Tape<T>& tape, const nn::Tensor<T>& dlogit) {
        return nn::split_channels(net_.backward(tape, dlogit, true), 1);
    }
    std::vector<nn::Parameter<T>*> parameters() { return net_.parameters(); }
    void initialize(Rng& rng) { net_.initialize(rng); }
    std::string describe() const { return net_.describe(); }

private:
    nn::Sequential<T> net_;
};

enum class Net { Encoder, Generator, AngleDiscriminator, IdentityDiscriminator };

template <class T>
struct Model {
    ArchSpec arch;
    Encoder<T> encoder;
    Generator<T> generator;
    AngleDiscriminator<T> angle;
    IdentityDiscriminator<T> identity;

    explicit Model(const ArchSpec& a) : arch((a.validate(), a)), encoder(a), generator(a), angle(a), identity(a) {}

    void initialize(std::uint64_t seed) {
        Rng re = Rng::derive(seed, {1}), rg = Rng::derive(seed, {2}), ra = Rng::derive(seed, {3}),
            ri = Rng::derive(seed, {4});
        encoder.initialize(re);
        generator.initialize(rg);
        angle.initialize(ra);
        identity.initialize(ri);
    }

    std::vector<nn::Parameter<T>*> parameters(Net which) {
        switch (which) {
            case Net::Encoder: return encoder.parameters();
            case Net::Generator: return generator.parameters();
            case Net::AngleDiscriminator: return angle.parameters();
            case Net::IdentityDiscriminator: return identity.parameters();
        }
        return {};
    }

    std::vector<nn::Parameter<T>*> all_parameters() {
        std::vector<nn::Parameter<T>*> out;
        for (Net n : {Net::Encoder, Net::Generator, Net::AngleDiscriminator, Net::IdentityDiscriminator})
            for (auto* p : parameters(n)) out.push_back(p);
        return out;
    }

    void zero_grad() {
        for (auto* p : all_parameters()) p->zero_grad();
    }

    // Architecture string covering every layer and dimension.
    std::string descriptor() const {
        return "dz=" + std::to_string(arch.latent_dim) + ";nv=" + std::to_string(arch.n_views) +
               ";img=" + std::to_string(arch.image_height) + "x" + std::to_string(arch.image_width) +
               ";E=" + encoder.describe() + ";G=" + generator.describe() + ";Dangle=" + angle.describe() +
               ";Did=" + identity.describe();
    }
};

using ModelParams = Model<float>;

// Copies parameter values between models of identical architecture.
template <class T>
void copy_parameters(const Model<T>& from, Model<T>& to) {
    auto src = const_cast<Model<T>&>(from).all_parameters();
    auto dst = to.all_parameters();
    if (src.size() != dst.size()) throw ArchitectureMismatchError("models have different parameter lists");
    for (std::size_t i = 0; i < src.size(); ++i) {
        if (src[i]->shape != dst[i]->shape || src[i]->name != dst[i]->name)
            throw ArchitectureMismatchError("parameter " + src[i]->name + " differs in shape");
        dst[i]->value = src[i]->value;
    }
}

std::uint64_t fnv1a64(std::string_view bytes);

template <class T>
std::string architecture_hash(const Model<T>& m) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(m.descriptor())));
    return buf;
}

// Deterministic fan-in-scaled (He-normal) weights and zero biases.
inline ModelParams init_params(const ArchSpec& arch, std::uint64_t seed) {
    if (arch.latent_dim < 8) throw InvalidArgumentError("latent_dim must be at least 8");
    ModelParams m(arch);
    m.initialize(seed);
    return m;
}

// ---- batch conversion ----

template <class T>
nn::Tensor<T> images_to_tensor(std::span<const Image* const> images, int height, int width) {
    nn::Tensor<T> t(1, static_cast<int>(images.size()), height, width);
    for (std::size_t n = 0; n < images.size(); ++n) {
        const Image& img = *images[n];
        if (img.height != height || img.width != width)
            throw DimensionMismatchError("image is " + std::to_string(img.height) + "x" + std::to_string(img.width) +
                                         ", network expects " + std::to_string(height) + "x" + std::to_string(width));
        T* dst = &t.at(0, static_cast<int>(n), 0, 0);
        for (std::size_t i = 0; i < img.size(); ++i) dst[i] = static_cast<T>(img.data[i]);
    }
    return t;
}

template <class T>
std::vector<Image> tensor_to_images(const nn::Tensor<T>& t) {
    std::vector<Image> out;
    for (int n = 0; n < t.batch; ++n) {
        Image img(t.height, t.width);
        const T* src = &t.at(0, n, 0, 0);
        for (std::size_t i = 0; i < img.size(); ++i) img.data[i] = static_cast<double>(src[i]);
        out.push_back(std::move(img));
    }
    return out;
}

// (K, N, 1, 1) tensor from N row vectors of length K.
template <class T, class Row>
nn::Tensor<T> rows_to_tensor(const std::vector<Row>& rows, int k) {
    nn::Tensor<T> t(k, static_cast<int>(rows.size()), 1, 1);
    for (std::size_t n = 0; n < rows.size(); ++n) {
        if (static_cast<int>(rows[n].size()) != k)
            throw DimensionMismatchError("vector of length " + std::to_string(rows[n].size()) + ", expected " +
                                         std::to_string(k));
        for (int c = 0; c < k; ++c) t.data[static_cast<std::size_t>(c) * rows.size() + n] = static_cast<T>(rows[n][c]);
    }
    return t;
}

template <class T>
std::vector<std::vector<double>> tensor_to_rows(const nn::Tensor<T>& t) {
    std::vector<std::vector<double>> out(t.batch, std::vector<double>(t.channels));
    for (int c = 0; c < t.channels; ++c)
        for (int n = 0; n < t.batch; ++n) out[n][c] = static_cast<double>(t.data[static_cast<std::size_t>(c) * t.batch + n]);
    return out;
}

// ---- inference-mode entry points (read-only on the model) ----

using Code = std::vector<double>;
using ViewVector = std::vector<double>;

std::vector<Code> encode(const ModelParams& m, std::span<const Image* const> images);
std::vector<Image> generate(const ModelParams& m, const std::vector<Code>& codes, const std::vector<ViewVector>& views);
std::vector<double> discriminate_angle(const ModelParams& m, std::span<const Image* const> images,
                                       const std::vector<ViewVector>& views);
std::vector<double> discriminate_identity(const ModelParams& m, std::span<const Image* const> a,
                                          std::span<const Image* const> b);

double sigmoid(double logit);

}  // namespace diggan
