#pragma once

#include <cstddef>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace tearnet {

// Dense row-major N-d array. The scalar type is a template parameter so the
// simulator can run in double while training runs in float.
template <typename T>
struct TensorT {
    std::vector<std::size_t> dims;
    std::vector<T> data;

    TensorT() = default;
    explicit TensorT(std::vector<std::size_t> d, T fill = T(0))
        : dims(std::move(d)), data(numel_of(dims), fill) {}
    TensorT(std::vector<std::size_t> d, std::vector<T> values)
        : dims(std::move(d)), data(std::move(values)) {
        if (data.size() != numel_of(dims))
            throw std::invalid_argument("tensor: dims/data size mismatch");
    }

    static std::size_t numel_of(const std::vector<std::size_t>& d) {
        std::size_t n = 1;
        for (std::size_t x : d) {
            if (x == 0) throw std::invalid_argument("tensor: zero dimension");
            n *= x;
        }
        return n;
    }

    std::size_t numel() const { return data.size(); }
    std::size_t rank() const { return dims.size(); }

    T& operator[](std::size_t i) { return data[i]; }
    const T& operator[](std::size_t i) const { return data[i]; }

    // 2-d accessors (rows x cols), used heavily by the layer kernels.
    T& at2(std::size_t r, std::size_t c) { return data[r * dims[1] + c]; }
    const T& at2(std::size_t r, std::size_t c) const { return data[r * dims[1] + c]; }

    void fill(T v) { std::fill(data.begin(), data.end(), v); }

    bool same_shape(const TensorT& other) const { return dims == other.dims; }

    bool all_finite() const {
        for (T v : data)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    template <typename U>
    TensorT<U> cast() const {
        TensorT<U> out;
        out.dims = dims;
        out.data.resize(data.size());
        for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }
};

using Tensor = TensorT<double>;
using TensorF = TensorT<float>;

inline std::string shape_str(const std::vector<std::size_t>& dims) {
    std::string s = "(";
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(dims[i]);
    }
    return s + ")";
}

// y[r,c] = sum_k a[r,k] * b[k,c].  a: (ra x ca), b: (ca x cb).
// Plain ikj loop; the shapes in this project are small enough that this
// vectorizes well and stays within cache.
template <typename T>
inline void matmul(const T* a, std::size_t ra, std::size_t ca,
                   const T* b, std::size_t cb, T* y) {
    std::fill(y, y + ra * cb, T(0));
    for (std::size_t i = 0; i < ra; ++i) {
        const T* arow = a + i * ca;
        T* yrow = y + i * cb;
        for (std::size_t k = 0; k < ca; ++k) {
            const T aik = arow[k];
            const T* brow = b + k * cb;
            for (std::size_t j = 0; j < cb; ++j) yrow[j] += aik * brow[j];
        }
    }
}

// y[r,c] = sum_k a[r,k] * b[c,k]  (b transposed; b: (cb x ca)).
template <typename T>
inline void matmul_bt(const T* a, std::size_t ra, std::size_t ca,
                      const T* b, std::size_t cb, T* y) {
    for (std::size_t i = 0; i < ra; ++i) {
        const T* arow = a + i * ca;
        T* yrow = y + i * cb;
        for (std::size_t j = 0; j < cb; ++j) {
            const T* brow = b + j * ca;
            T acc = T(0);
            for (std::size_t k = 0; k < ca; ++k) acc += arow[k] * brow[k];
            yrow[j] = acc;
        }
    }
}

// y[r,c] = sum_k a[k,r] * b[k,c]  (a transposed; a: (ka x ra)).
template <typename T>
inline void matmul_at(const T* a, std::size_t ka, std::size_t ra,
                      const T* b, std::size_t cb, T* y) {
    std::fill(y, y + ra * cb, T(0));
    for (std::size_t k = 0; k < ka; ++k) {
        const T* arow = a + k * ra;
        const T* brow = b + k * cb;
        for (std::size_t i = 0; i < ra; ++i) {
            const T aki = arow[i];
            T* yrow = y + i * cb;
            for (std::size_t j = 0; j < cb; ++j) yrow[j] += aki * brow[j];
        }
    }
}

}  // namespace tearnet
