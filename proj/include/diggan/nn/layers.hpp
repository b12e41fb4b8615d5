#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "diggan/errors.hpp"
#include "diggan/nn/tensor.hpp"
#include "diggan/rng.hpp"

namespace diggan::nn {

// Layers are stateless during forward (so inference is read-only); the
// backward pass receives the input and output recorded by the caller and
// accumulates into Parameter::grad.
template <class T>
class Layer {
public:
    virtual ~Layer() = default;
    virtual Tensor<T> forward(const Tensor<T>& x) const = 0;
    virtual Tensor<T> backward(const Tensor<T>& x, const Tensor<T>& y, const Tensor<T>& dy, bool need_input_grad) = 0;
    virtual std::vector<Parameter<T>*> parameters() { return {}; }
    virtual void initialize(Rng&) {}
    virtual std::string describe() const = 0;
};

inline int conv_output_size(int in, int kernel, int stride, int pad) {
    const int span = in + 2 * pad - kernel;
    if (span < 0) throw DimensionMismatchError("convolution input of size " + std::to_string(in) + " is too small");
    return span / stride + 1;
}

template <class T>
class Conv2d final : public Layer<T> {
public:
    Conv2d(const std::string& name, int in_channels, int out_channels, int kernel, int stride, int pad,
           double gain = std::sqrt(2.0))
        : in_(in_channels), out_(out_channels), k_(kernel), stride_(stride), pad_(pad), gain_(gain),
          weight_(name + ".weight", {out_channels, in_channels, kernel, kernel}),
          bias_(name + ".bias", {out_channels}) {}

    Tensor<T> forward(const Tensor<T>& x) const override {
        check_input(x);
        const int ho = conv_output_size(x.height, k_, stride_, pad_);
        const int wo = conv_output_size(x.width, k_, stride_, pad_);
        const auto cols = static_cast<Eigen::Index>(x.batch) * ho * wo;
        Buffer<T> col = im2col(x, ho, wo);
        Tensor<T> y(out_, x.batch, ho, wo);
        auto ym = as_matrix(y);
        ConstMatrixView<T> cm(col.data(), kdim(), cols);
        ConstMatrixView<T> wm(weight_.value.data(), out_, kdim());
        ym.noalias() = wm * cm;
        for (int o = 0; o < out_; ++o) ym.row(o).array() += bias_.value[o];
        return y;
    }

    Tensor<T> backward(const Tensor<T>& x, const Tensor<T>& y, const Tensor<T>& dy, bool need_input_grad) override {
        const auto cols = static_cast<Eigen::Index>(y.columns());
        Buffer<T> col = im2col(x, y.height, y.width);
        ConstMatrixView<T> cm(col.data(), kdim(), cols);
        auto dym = as_matrix(dy);
        MatrixView<T> dw(weight_.grad.data(), out_, kdim());
        dw.noalias() += dym * cm.transpose();
        for (int o = 0; o < out_; ++o) bias_.grad[o] += dym.row(o).sum();
        if (!need_input_grad) return {};

        ConstMatrixView<T> wm(weight_.value.data(), out_, kdim());
        MatrixView<T> dcm(col.data(), kdim(), cols);
        dcm.noalias() = wm.transpose() * dym;
        Tensor<T> dx(x.channels, x.batch, x.height, x.width);
        col2im(col, dx, y.height, y.width);
        return dx;
    }

    std::vector<Parameter<T>*> parameters() override { return {&weight_, &bias_}; }

    void initialize(Rng& rng) override {
        const double stddev = gain_ / std::sqrt(static_cast<double>(kdim()));
        for (auto& w : weight_.value) w = static_cast<T>(stddev * rng.normal());
        std::fill(bias_.value.begin(), bias_.value.end(), T(0));
    }

    std::string describe() const override {
        return "conv" + std::to_string(k_) + "s" + std::to_string(stride_) + "p" + std::to_string(pad_) + ":" +
               std::to_string(in_) + ">" + std::to_string(out_);
    }

private:
    int kdim() const { return in_ * k_ * k_; }

    void check_input(const Tensor<T>& x) const {
        if (x.channels != in_)
            throw DimensionMismatchError(describe() + " expects " + std::to_string(in_) + " channels, got " +
                                         std::to_string(x.channels));
    }

    Buffer<T> im2col(const Tensor<T>& x, int ho, int wo) const {
        const std::size_t cols = static_cast<std::size_t>(x.batch) * ho * wo;
        Buffer<T> col(static_cast<std::size_t>(kdim()) * cols);
        for (int ci = 0; ci < in_; ++ci)
            for (int ky = 0; ky < k_; ++ky)
                for (int kx = 0; kx < k_; ++kx) {
                    T* dst = col.data() + static_cast<std::size_t>((ci * k_ + ky) * k_ + kx) * cols;
                    for (int n = 0; n < x.batch; ++n)
                        for (int oy = 0; oy < ho; ++oy) {
                            T* d = dst + (static_cast<std::size_t>(n) * ho + oy) * wo;
                            const int iy = oy * stride_ - pad_ + ky;
                            if (iy < 0 || iy >= x.height) {
                                std::fill(d, d + wo, T(0));
                                continue;
                            }
                            const T* src = &x.at(ci, n, iy, 0);
                            for (int ox = 0; ox < wo; ++ox) {
                                const int ix = ox * stride_ - pad_ + kx;
                                d[ox] = (ix >= 0 && ix < x.width) ? src[ix] : T(0);
                            }
                        }
                }
        return col;
    }

    void col2im(const Buffer<T>& col, Tensor<T>& dx, int ho, int wo) const {
        const std::size_t cols = static_cast<std::size_t>(dx.batch) * ho * wo;
        for (int ci = 0; ci < in_; ++ci)
            for (int ky = 0; ky < k_; ++ky)
                for (int kx = 0; kx < k_; ++kx) {
                    const T* src = col.data() + static_cast<std::size_t>((ci * k_ + ky) * k_ + kx) * cols;
                    for (int n = 0; n < dx.batch; ++n)
                        for (int oy = 0; oy < ho; ++oy) {
                            const int iy = oy * stride_ - pad_ + ky;
                            if (iy < 0 || iy >= dx.height) continue;
                            const T* s = src + (static_cast<std::size_t>(n) * ho + oy) * wo;
                            T* d = &dx.at(ci, n, iy, 0);
                            for (int ox = 0; ox < wo; ++ox) {
                                const int ix = ox * stride_ - pad_ + kx;
                                if (ix >= 0 && ix < dx.width) d[ix] += s[ox];
                            }
                        }
                }
    }

    int in_, out_, k_, stride_, pad_;
    double gain_;
    Parameter<T> weight_, bias_;
};

// Fully connected layer over (features, N, 1, 1) tensors.
template <class T>
class Linear final : public Layer<T> {
public:
    Linear(const std::string& name, int in_features, int out_features, double gain = std::sqrt(2.0))
        : in_(in_features), out_(out_features), gain_(gain), weight_(name + ".weight", {out_features, in_features}),
          bias_(name + ".bias", {out_features}) {}

    Tensor<T> forward(const Tensor<T>& x) const override {
        if (x.channels != in_ || x.plane() != 1)
            throw DimensionMismatchError(describe() + " expects " + std::to_string(in_) + " features, got " +
                                         std::to_string(x.channels) + "x" + std::to_string(x.plane()));
        Tensor<T> y(out_, x.batch, 1, 1);
        ConstMatrixView<T> wm(weight_.value.data(), out_, in_);
        auto ym = as_matrix(y);
        ym.noalias() = wm * as_matrix(x);
        for (int o = 0; o < out_; ++o) ym.row(o).array() += bias_.value[o];
        return y;
    }

    Tensor<T> backward(const Tensor<T>& x, const Tensor<T>&, const Tensor<T>& dy, bool need_input_grad) override {
        auto dym = as_matrix(dy);
        MatrixView<T> dw(weight_.grad.data(), out_, in_);
        dw.noalias() += dym * as_matrix(x).transpose();
        for (int o = 0; o < out_; ++o) bias_.grad[o] += dym.row(o).sum();
        if (!need_input_grad) return {};
        Tensor<T> dx(in_, x.batch, 1, 1);
        ConstMatrixView<T> wm(weight_.value.data(), out_, in_);
        as_matrix(dx).noalias() = wm.transpose() * dym;
        return dx;
    }

    std::vector<Parameter<T>*> parameters() override { return {&weight_, &bias_}; }

    void initialize(Rng& rng) override {
        const double stddev = gain_ / std::sqrt(static_cast<double>(in_));
        for (auto& w : weight_.value) w = static_cast<T>(stddev * rng.normal());
        std::fill(bias_.value.begin(), bias_.value.end(), T(0));
    }

    std::string describe() const override { return "linear:" + std::to_string(in_) + ">" + std::to_string(out_); }

private:
    int in_, out_;
    double gain_;
    Parameter<T> weight_, bias_;
};

template <class T>
class LeakyRelu final : public Layer<T> {
public:
    explicit LeakyRelu(double slope = 0.2) : slope_(static_cast<T>(slope)) {}

    Tensor<T> forward(const Tensor<T>& x) const override {
        Tensor<T> y = x;
        for (auto& v : y.data) v = v > T(0) ? v : v * slope_;
        return y;
    }
    Tensor<T> backward(const Tensor<T>& x, const Tensor<T>&, const Tensor<T>& dy, bool) override {
        Tensor<T> dx = dy;
        for (std::size_t i = 0; i < dx.size(); ++i)
            if (!(x.data[i] > T(0))) dx.data[i] *= slope_;
        return dx;
    }
    std::string describe() const override { return "lrelu"; }

private:
    T slope_;
};

template <class T>
class Sigmoid final : public Layer<T> {
public:
    Tensor<T> forward(const Tensor<T>& x) const override {
        Tensor<T> y = x;
        for (auto& v : y.data) v = T(1) / (T(1) + std::exp(-v));
        return y;
    }
    Tensor<T> backward(const Tensor<T>&, const Tensor<T>& y, const Tensor<T>& dy, bool) override {
        Tensor<T> dx = dy;
        for (std::size_t i = 0; i < dx.size(); ++i) dx.data[i] *= y.data[i] * (T(1) - y.data[i]);
        return dx;
    }
    std::string describe() const override { return "sigmoid"; }
};

// Nearest-neighbour 2x upsampling.
template <class T>
class Upsample2x final : public Layer<T> {
public:
    Tensor<T> forward(const Tensor<T>& x) const override {
        Tensor<T> y(x.channels, x.batch, 2 * x.height, 2 * x.width);
        for (int c = 0; c < x.channels; ++c)
            for (int n = 0; n < x.batch; ++n)
                for (int h = 0; h < y.height; ++h) {
                    const T* src = &x.at(c, n, h / 2, 0);
                    T* dst = &y.at(c, n, h, 0);
                    for (int w = 0; w < y.width; ++w) dst[w] = src[w / 2];
                }
        return y;
    }
    Tensor<T> backward(const Tensor<T>& x, const Tensor<T>& y, const Tensor<T>& dy, bool) override {
        Tensor<T> dx(x.channels, x.batch, x.height, x.width);
        for (int c = 0; c < x.channels; ++c)
            for (int n = 0; n < x.batch; ++n)
                for (int h = 0; h < y.height; ++h) {
                    const T* src = &dy.at(c, n, h, 0);
                    T* dst = &dx.at(c, n, h / 2, 0);
                    for (int w = 0; w < y.width; ++w) dst[w / 2] += src[w];
                }
        return dx;
    }
    std::string describe() const override { return "up2"; }
};

template <class T>
class CenterCrop final : public Layer<T> {
public:
    CenterCrop(int height, int width) : height_(height), width_(width) {}

    Tensor<T> forward(const Tensor<T>& x) const override {
        if (x.height < height_ || x.width < width_) throw DimensionMismatchError("crop larger than input");
        const int oy = (x.height - height_) / 2, ox = (x.width - width_) / 2;
        Tensor<T> y(x.channels, x.batch, height_, width_);
        for (int c = 0; c < x.channels; ++c)
            for (int n = 0; n < x.batch; ++n)
                for (int h = 0; h < height_; ++h) std::copy_n(&x.at(c, n, h + oy, ox), width_, &y.at(c, n, h, 0));
        return y;
    }
    Tensor<T> backward(const Tensor<T>& x, const Tensor<T>&, const Tensor<T>& dy, bool) override {
        const int oy = (x.height - height_) / 2, ox = (x.width - width_) / 2;
        Tensor<T> dx(x.channels, x.batch, x.height, x.width);
        for (int c = 0; c < x.channels; ++c)
            for (int n = 0; n < x.batch; ++n)
                for (int h = 0; h < height_; ++h) std::copy_n(&dy.at(c, n, h, 0), width_, &dx.at(c, n, h + oy, ox));
        return dx;
    }
    std::string describe() const override {
        return "crop:" + std::to_string(height_) + "x" + std::to_string(width_);
    }

private:
    int height_, width_;
};

// (C, N, H, W) -> (C*H*W, N, 1, 1)
template <class T>
class Flatten final : public Layer<T> {
public:
    Tensor<T> forward(const Tensor<T>& x) const override {
        const int features = x.channels * x.height * x.width;
        Tensor<T> y(features, x.batch, 1, 1);
        for (int c = 0; c < x.channels; ++c)
            for (int n = 0; n < x.batch; ++n)
                for (int h = 0; h < x.height; ++h)
                    for (int w = 0; w < x.width; ++w) {
                        const int f = (c * x.height + h) * x.width + w;
                        y.data[static_cast<std::size_t>(f) * x.batch + n] = x.at(c, n, h, w);
                    }
        return y;
    }
    Tensor<T> backward(const Tensor<T>& x, const Tensor<T>&, const Tensor<T>& dy, bool) override {
        Tensor<T> dx(x.channels, x.batch, x.height, x.width);
        for (int c = 0; c < x.channels; ++c)
            for (int n = 0; n < x.batch; ++n)
                for (int h = 0; h < x.height; ++h)
                    for (int w = 0; w < x.width; ++w) {
                        const int f = (c * x.height + h) * x.width + w;
                        dx.at(c, n, h, w) = dy.data[static_cast<std::size_t>(f) * x.batch + n];
                    }
        return dx;
    }
    std::string describe() const override { return "flatten"; }
};

// (C*H*W, N, 1, 1) -> (C, N, H, W)
template <class T>
class Unflatten final : public Layer<T> {
public:
    Unflatten(int channels, int height, int width) : c_(channels), h_(height), w_(width) {}

    Tensor<T> forward(const Tensor<T>& x) const override {
        if (x.channels != c_ * h_ * w_ || x.plane() != 1) throw DimensionMismatchError("unflatten size mismatch");
        Tensor<T> y(c_, x.batch, h_, w_);
        for (int c = 0; c < c_; ++c)
            for (int n = 0; n < x.batch; ++n)
                for (int h = 0; h < h_; ++h)
                    for (int w = 0; w < w_; ++w)
                        y.at(c, n, h, w) = x.data[static_cast<std::size_t>((c * h_ + h) * w_ + w) * x.batch + n];
        return y;
    }
    Tensor<T> backward(const Tensor<T>& x, const Tensor<T>&, const Tensor<T>& dy, bool) override {
        Tensor<T> dx(x.channels, x.batch, 1, 1);
        for (int c = 0; c < c_; ++c)
            for (int n = 0; n < x.batch; ++n)
                for (int h = 0; h < h_; ++h)
                    for (int w = 0; w < w_; ++w)
                        dx.data[static_cast<std::size_t>((c * h_ + h) * w_ + w) * x.batch + n] = dy.at(c, n, h, w);
        return dx;
    }
    std::string describe() const override {
        return "unflatten:" + std::to_string(c_) + "x" + std::to_string(h_) + "x" + std::to_string(w_);
    }

private:
    int c_, h_, w_;
};

// Activations recorded by a forward pass: tape[i] is the input of layer i,
// tape.back() the final output.
template <class T>
using Tape = std::vector<Tensor<T>>;

template <class T>
class Sequential {
public:
    Sequential() = default;
    Sequential(Sequential&&) noexcept = default;
    Sequential& operator=(Sequential&&) noexcept = default;

    template <class L, class... Args>
    Sequential& add(Args&&... args) {
        layers_.push_back(std::make_unique<L>(std::forward<Args>(args)...));
        return *this;
    }

    Tensor<T> forward(const Tensor<T>& x, Tape<T>* tape = nullptr) const {
        if (tape) {
            tape->clear();
            tape->push_back(x);
            for (const auto& l : layers_) tape->push_back(l->forward(tape->back()));
            return tape->back();
        }
        Tensor<T> cur = x;
        for (const auto& l : layers_) cur = l->forward(cur);
        return cur;
    }

    Tensor<T> backward(const Tape<T>& tape, const Tensor<T>& dy, bool need_input_grad) {
        Tensor<T> grad = dy;
        for (std::size_t i = layers_.size(); i-- > 0;) {
            const bool want = need_input_grad || i > 0;
            grad = layers_[i]->backward(tape[i], tape[i + 1], grad, want);
        }
        return grad;
    }

    std::vector<Parameter<T>*> parameters() {
        std::vector<Parameter<T>*> out;
        for (auto& l : layers_)
            for (auto* p : l->parameters()) out.push_back(p);
        return out;
    }

    void initialize(Rng& rng) {
        for (auto& l : layers_) l->initialize(rng);
    }

    std::string describe() const {
        std::string s;
        for (const auto& l : layers_) s += (s.empty() ? "" : ",") + l->describe();
        return s;
    }

private:
    std::vector<std::unique_ptr<Layer<T>>> layers_;
};

// Channel concatenation of two tensors sharing (N, H, W).
template <class T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.batch != b.batch || a.height != b.height || a.width != b.width)
        throw DimensionMismatchError("concat_channels: shape mismatch");
    Tensor<T> y(a.channels + b.channels, a.batch, a.height, a.width);
    std::copy(a.data.begin(), a.data.end(), y.data.begin());
    std::copy(b.data.begin(), b.data.end(), y.data.begin() + static_cast<std::ptrdiff_t>(a.size()));
    return y;
}

// Inverse of concat_channels for gradients: first `channels_a` channels go to a.
template <class T>
std::pair<Tensor<T>, Tensor<T>> split_channels(const Tensor<T>& y, int channels_a) {
    Tensor<T> a(channels_a, y.batch, y.height, y.width);
    Tensor<T> b(y.channels - channels_a, y.batch, y.height, y.width);
    std::copy(y.data.begin(), y.data.begin() + static_cast<std::ptrdiff_t>(a.size()), a.data.begin());
    std::copy(y.data.begin() + static_cast<std::ptrdiff_t>(a.size()), y.data.end(), b.data.begin());
    return {std::move(a), std::move(b)};
}

// Broadcast per-sample vectors (K, N, 1, 1) to constant maps (K, N, H, W).
template <class T>
Tensor<T> broadcast_maps(const Tensor<T>& v, int height, int width) {
    Tensor<T> y(v.channels, v.batch, height, width);
    for (int c = 0; c < v.channels; ++c)
        for (int n = 0; n < v.batch; ++n) {
            T* dst = &y.at(c, n, 0, 0);
            std::fill(dst, dst + y.plane(), v.data[static_cast<std::size_t>(c) * v.batch + n]);
        }
    return y;
}

}  // namespace diggan::nn
