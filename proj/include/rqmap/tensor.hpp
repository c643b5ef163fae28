#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "rqmap/errors.hpp"

namespace rqmap {

// Buffer with a fixed, maximal SIMD alignment. Keeping every tensor buffer
// identically aligned makes Eigen's vectorized code paths independent of
// where the allocator happened to place the data, so results are bit-stable
// across runs and across call sites without giving up aligned kernels.
template <typename T>
using AlignedVec = std::vector<T, Eigen::aligned_allocator<T>>;

// Dense row-major tensor. float for training, double inside verification
// oracles; all layer code is templated on the scalar type.
template <typename T>
struct Tensor {
    std::vector<int> shape;
    AlignedVec<T> v;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)), v(count(shape), T(0)) {}
    template <typename Alloc>
    Tensor(std::vector<int> s, const std::vector<T, Alloc>& data)
        : shape(std::move(s)), v(data.begin(), data.end()) {
        if (count(shape) != v.size()) throw ShapeError("tensor: buffer length does not match shape");
    }

    static std::size_t count(const std::vector<int>& s) {
        std::size_t n = 1;
        for (int d : s) {
            if (d < 0) throw ShapeError("tensor: negative dimension");
            n *= static_cast<std::size_t>(d);
        }
        return n;
    }

    std::size_t size() const { return v.size(); }
    T* data() { return v.data(); }
    const T* data() const { return v.data(); }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    void fill(T x) { std::fill(v.begin(), v.end(), x); }

    bool finite() const {
        Eigen::Map<const Eigen::Array<T, Eigen::Dynamic, 1>> m(
            v.data(), static_cast<Eigen::Index>(v.size()));
        return m.allFinite();
    }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out(shape);
        for (std::size_t i = 0; i < v.size(); ++i) out.v[i] = static_cast<U>(v[i]);
        return out;
    }

    std::string shape_str() const {
        std::string s = "(";
        for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? "," : "") + std::to_string(shape[i]);
        return s + ")";
    }
};

}  // namespace rqmap
