#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <new>
#include <string>
#include <vector>

namespace diggan::nn {

// Eigen picks its vectorized code path from the actual pointer alignment, so
// buffers with varying alignment would round differently from run to run.
// Every buffer Eigen touches is allocated on a fixed 64-byte boundary.
template <class T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::align_val_t kAlign{64};

    AlignedAllocator() = default;
    template <class U>
    AlignedAllocator(const AlignedAllocator<U>&) {}

    T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
    void deallocate(T* p, std::size_t) { ::operator delete(p, kAlign); }

    template <class U>
    bool operator==(const AlignedAllocator<U>&) const { return true; }
};

template <class T>
using Buffer = std::vector<T, AlignedAllocator<T>>;

// Activation batch stored channel-major across the batch: element
// (c, n, h, w) lives at ((c * N + n) * H + h) * W + w. Viewed as a row-major
// C x (N*H*W) matrix this is exactly the GEMM layout convolutions produce.
template <class T>
struct Tensor {
    int channels = 0;
    int batch = 0;
    int height = 1;
    int width = 1;
    Buffer<T> data;

    Tensor() = default;
    Tensor(int c, int n, int h, int w, T fill = T(0))
        : channels(c), batch(n), height(h), width(w), data(static_cast<std::size_t>(c) * n * h * w, fill) {}

    std::size_t plane() const { return static_cast<std::size_t>(height) * width; }
    std::size_t columns() const { return static_cast<std::size_t>(batch) * plane(); }
    std::size_t size() const { return data.size(); }

    T& at(int c, int n, int h, int w) { return data[((static_cast<std::size_t>(c) * batch + n) * height + h) * width + w]; }
    const T& at(int c, int n, int h, int w) const {
        return data[((static_cast<std::size_t>(c) * batch + n) * height + h) * width + w];
    }

    bool same_shape(const Tensor& o) const {
        return channels == o.channels && batch == o.batch && height == o.height && width == o.width;
    }
};

template <class T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MatrixView = Eigen::Map<RowMatrix<T>>;
template <class T>
using ConstMatrixView = Eigen::Map<const RowMatrix<T>>;

template <class T>
MatrixView<T> as_matrix(Tensor<T>& t) {
    return MatrixView<T>(t.data.data(), t.channels, static_cast<Eigen::Index>(t.columns()));
}
template <class T>
ConstMatrixView<T> as_matrix(const Tensor<T>& t) {
    return ConstMatrixView<T>(t.data.data(), t.channels, static_cast<Eigen::Index>(t.columns()));
}

// Learnable tensor with its accumulated gradient.
template <class T>
struct Parameter {
    std::string name;
    std::vector<int> shape;
    Buffer<T> value;
    Buffer<T> grad;

    Parameter() = default;
    Parameter(std::string n, std::vector<int> s) : name(std::move(n)), shape(std::move(s)) {
        std::size_t count = 1;
        for (int d : shape) count *= static_cast<std::size_t>(d);
        value.assign(count, T(0));
        grad.assign(count, T(0));
    }
    std::size_t size() const { return value.size(); }
    void zero_grad() { std::fill(grad.begin(), grad.end(), T(0)); }
};

}  // namespace diggan::nn
