#pragma once

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "tearnet/core/rng.hpp"
#include "tearnet/core/tensor.hpp"

namespace tearnet::nn {

enum class Activation { identity, leaky_relu };

struct ShapeError : std::invalid_argument {
    explicit ShapeError(const std::string& m) : std::invalid_argument(m) {}
};
struct UsageError : std::logic_error {
    explicit UsageError(const std::string& m) : std::logic_error(m) {}
};

// One trainable tensor plus its gradient buffer. `regularized` marks the
// parameters that enter the L2 penalty (trunk net and output layer).
template <typename T>
struct ParamRef {
    std::vector<T>* value = nullptr;
    std::vector<T>* grad = nullptr;
    bool regularized = false;
    std::string name;
};

template <typename T>
inline T leaky(T z, T slope) { return z > T(0) ? z : slope * z; }

template <typename T>
inline T leaky_grad(T z, T slope) { return z > T(0) ? T(1) : slope; }

// ---------------------------------------------------------------------------
// Dense layer: y = act(W x + b), batched as row-major (N x in) -> (N x out).
// ---------------------------------------------------------------------------
template <typename T>
struct DenseLayer {
    std::size_t in_width = 0;
    std::size_t out_width = 0;
    Activation act = Activation::identity;
    T slope = T(0.01);

    std::vector<T> weights;  // out x in
    std::vector<T> bias;     // out
    std::vector<T> gweights;
    std::vector<T> gbias;

    // caches for backward
    std::vector<T> x_cache;  // N x in
    std::vector<T> z_cache;  // N x out (pre-activation)
    std::size_t cached_batch = 0;

    DenseLayer() = default;
    DenseLayer(std::size_t in, std::size_t out, Activation a, T leaky_slope = T(0.01))
        : in_width(in), out_width(out), act(a), slope(leaky_slope),
          weights(in * out, T(0)), bias(out, T(0)),
          gweights(in * out, T(0)), gbias(out, T(0)) {}

    void init(std::mt19937_64& rng) {
        const double bound = glorot_bound(in_width, out_width);
        fill_uniform(rng, weights, -bound, bound);
        std::fill(bias.begin(), bias.end(), T(0));
    }

    void zero_grad() {
        std::fill(gweights.begin(), gweights.end(), T(0));
        std::fill(gbias.begin(), gbias.end(), T(0));
    }

    // y must hold n*out_width values.
    void forward(const T* x, std::size_t n, T* y, bool cache = true) {
        if (cache) {
            x_cache.assign(x, x + n * in_width);
            z_cache.resize(n * out_width);
            cached_batch = n;
        }
        // z = x W^T + b
        matmul_bt(x, n, in_width, weights.data(), out_width, y);
        for (std::size_t i = 0; i < n; ++i) {
            T* row = y + i * out_width;
            for (std::size_t j = 0; j < out_width; ++j) row[j] += bias[j];
        }
        if (cache) std::copy(y, y + n * out_width, z_cache.begin());
        if (act == Activation::leaky_relu)
            for (std::size_t i = 0; i < n * out_width; ++i) y[i] = leaky(y[i], slope);
    }

    // dy: (N x out), dx out-param: (N x in). Accumulates parameter gradients.
    void backward(const T* dy, std::size_t n, T* dx) {
        if (cached_batch != n) throw UsageError("dense backward before matching forward");
        std::vector<T> dz(n * out_width);
        if (act == Activation::leaky_relu) {
            for (std::size_t i = 0; i < n * out_width; ++i)
                dz[i] = dy[i] * leaky_grad(z_cache[i], slope);
        } else {
            std::copy(dy, dy + n * out_width, dz.begin());
        }
        // gW += dz^T x ; gb += sum_rows dz ; dx = dz W
        std::vector<T> gw(out_width * in_width);
        matmul_at(dz.data(), n, out_width, x_cache.data(), in_width, gw.data());
        for (std::size_t i = 0; i < gw.size(); ++i) gweights[i] += gw[i];
        for (std::size_t i = 0; i < n; ++i) {
            const T* row = dz.data() + i * out_width;
            for (std::size_t j = 0; j < out_width; ++j) gbias[j] += row[j];
        }
        if (dx) matmul(dz.data(), n, out_width, weights.data(), in_width, dx);
    }

    void collect_params(std::vector<ParamRef<T>>& out, const std::string& prefix, bool reg) {
        out.push_back({&weights, &gweights, reg, prefix + ".weights"});
        out.push_back({&bias, &gbias, reg, prefix + ".bias"});
    }
};

// Free-standing single-vector dense evaluation (the layer math without the
// training caches); shape-checked.
template <typename T>
inline TensorT<T> dense_forward(const TensorT<T>& x, const DenseLayer<T>& params,
                                Activation act) {
    if (x.numel() != params.in_width)
        throw ShapeError("dense_forward: input width " + std::to_string(x.numel()) +
                         " != layer in_width " + std::to_string(params.in_width));
    TensorT<T> y({params.out_width});
    for (std::size_t o = 0; o < params.out_width; ++o) {
        T acc = params.bias[o];
        const T* wrow = params.weights.data() + o * params.in_width;
        for (std::size_t i = 0; i < params.in_width; ++i) acc += wrow[i] * x[i];
        y[o] = act == Activation::leaky_relu ? leaky(acc, params.slope) : acc;
    }
    return y;
}

// ---------------------------------------------------------------------------
// Conv block: 3x3 (configurable odd) convolution with stride 1 and zero
// padding that preserves H x W, then LeakyReLU, then batch normalization.
// Batched input layout: (N, C, H, W) row-major.
// ---------------------------------------------------------------------------
template <typename T>
struct ConvBlock {
    std::size_t in_ch = 0, out_ch = 0, kh = 3, kw = 3;
    T slope = T(0.01);
    bool bn_enabled = true;
    T bn_eps = T(1e-5);
    T bn_momentum = T(0.1);

    std::vector<T> kernels;  // out x in x kh x kw
    std::vector<T> bias;     // out
    std::vector<T> bn_gamma, bn_beta;
    std::vector<T> bn_running_mean, bn_running_var;

    std::vector<T> gkernels, gbias, gbn_gamma, gbn_beta;

    // caches
    std::vector<T> x_cache;     // N,C,H,W
    std::vector<T> z_cache;     // conv pre-activation
    std::vector<T> a_cache;     // post-leaky (input to BN)
    std::vector<T> mean_cache, var_cache;  // per out channel, batch stats
    std::size_t cached_batch = 0, cached_h = 0, cached_w = 0;
    bool cached_training = false;

    ConvBlock() = default;
    ConvBlock(std::size_t cin, std::size_t cout, std::size_t k = 3, T leaky_slope = T(0.01))
        : in_ch(cin), out_ch(cout), kh(k), kw(k), slope(leaky_slope),
          kernels(cout * cin * k * k, T(0)), bias(cout, T(0)),
          bn_gamma(cout, T(1)), bn_beta(cout, T(0)),
          bn_running_mean(cout, T(0)), bn_running_var(cout, T(1)),
          gkernels(kernels.size(), T(0)), gbias(cout, T(0)),
          gbn_gamma(cout, T(0)), gbn_beta(cout, T(0)) {
        if (k % 2 == 0) throw ShapeError("conv kernel extent must be odd");
    }

    void init(std::mt19937_64& rng) {
        const double bound = glorot_bound(in_ch * kh * kw, out_ch * kh * kw);
        fill_uniform(rng, kernels, -bound, bound);
        std::fill(bias.begin(), bias.end(), T(0));
    }

    void zero_grad() {
        std::fill(gkernels.begin(), gkernels.end(), T(0));
        std::fill(gbias.begin(), gbias.end(), T(0));
        std::fill(gbn_gamma.begin(), gbn_gamma.end(), T(0));
        std::fill(gbn_beta.begin(), gbn_beta.end(), T(0));
    }

    std::size_t out_size(std::size_t n, std::size_t h, std::size_t w) const {
        return n * out_ch * h * w;
    }

    void forward(const T* x, std::size_t n, std::size_t h, std::size_t w, T* y,
                 bool training, bool cache = true) {
        const std::size_t plane = h * w;
        if (cache) {
            x_cache.assign(x, x + n * in_ch * plane);
            cached_batch = n;
            cached_h = h;
            cached_w = w;
            cached_training = training;
        }
        const long rh = static_cast<long>(kh / 2), rw = static_cast<long>(kw / 2);
        // convolution + leaky
        std::vector<T>& z = cache ? z_cache : scratch_z_;
        z.resize(n * out_ch * plane);
        for (std::size_t s = 0; s < n; ++s) {
            const T* xs = x + s * in_ch * plane;
            T* zs = z.data() + s * out_ch * plane;
            for (std::size_t o = 0; o < out_ch; ++o) {
                T* zplane = zs + o * plane;
                for (std::size_t i = 0; i < h; ++i)
                    for (std::size_t j = 0; j < w; ++j) {
                        T acc = bias[o];
                        for (std::size_t c = 0; c < in_ch; ++c) {
                            const T* xp = xs + c * plane;
                            const T* k = kernels.data() + ((o * in_ch + c) * kh) * kw;
                            for (std::size_t ki = 0; ki < kh; ++ki) {
                                const long ii = static_cast<long>(i) + static_cast<long>(ki) - rh;
                                if (ii < 0 || ii >= static_cast<long>(h)) continue;
                                for (std::size_t kj = 0; kj < kw; ++kj) {
                                    const long jj = static_cast<long>(j) + static_cast<long>(kj) - rw;
                                    if (jj < 0 || jj >= static_cast<long>(w)) continue;
                                    acc += k[ki * kw + kj] * xp[static_cast<std::size_t>(ii) * w +
                                                                static_cast<std::size_t>(jj)];
                                }
                            }
                        }
                        zplane[i * w + j] = acc;
                    }
            }
        }
        std::vector<T>& a = cache ? a_cache : scratch_a_;
        a.resize(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) a[i] = leaky(z[i], slope);

        if (!bn_enabled) {
            std::copy(a.begin(), a.end(), y);
            return;
        }
        // batch normalization per out channel over (N, H, W)
        if (cache) {
            mean_cache.assign(out_ch, T(0));
            var_cache.assign(out_ch, T(0));
        }
        const T m_count = static_cast<T>(n * plane);
        for (std::size_t o = 0; o < out_ch; ++o) {
            T mu, var;
            if (training) {
                T sum = T(0), sq = T(0);
                for (std::size_t s = 0; s < n; ++s) {
                    const T* ap = a.data() + (s * out_ch + o) * plane;
                    for (std::size_t i = 0; i < plane; ++i) {
                        sum += ap[i];
                        sq += ap[i] * ap[i];
                    }
                }
                mu = sum / m_count;
                var = sq / m_count - mu * mu;
                if (var < T(0)) var = T(0);
                bn_running_mean[o] = (T(1) - bn_momentum) * bn_running_mean[o] + bn_momentum * mu;
                bn_running_var[o] = (T(1) - bn_momentum) * bn_running_var[o] + bn_momentum * var;
            } else {
                mu = bn_running_mean[o];
                var = bn_running_var[o];
            }
            if (cache) {
                mean_cache[o] = mu;
                var_cache[o] = var;
            }
            const T inv = T(1) / std::sqrt(var + bn_eps);
            for (std::size_t s = 0; s < n; ++s) {
                const T* ap = a.data() + (s * out_ch + o) * plane;
                T* yp = y + (s * out_ch + o) * plane;
                for (std::size_t i = 0; i < plane; ++i)
                    yp[i] = bn_gamma[o] * (ap[i] - mu) * inv + bn_beta[o];
            }
        }
    }

    void backward(const T* dy, std::size_t n, std::size_t h, std::size_t w, T* dx) {
        if (cached_batch != n || cached_h != h || cached_w != w)
            throw UsageError("conv backward before matching forward");
        const std::size_t plane = h * w;
        std::vector<T> da(n * out_ch * plane);

        if (bn_enabled) {
            const T m_count = static_cast<T>(n * plane);
            for (std::size_t o = 0; o < out_ch; ++o) {
                const T mu = mean_cache[o];
                const T var = var_cache[o];
                const T inv = T(1) / std::sqrt(var + bn_eps);
                if (cached_training) {
                    // batch-stat backward
                    T sum_dy = T(0), sum_dy_xhat = T(0);
                    for (std::size_t s = 0; s < n; ++s) {
                        const T* ap = a_cache.data() + (s * out_ch + o) * plane;
                        const T* dyp = dy + (s * out_ch + o) * plane;
                        for (std::size_t i = 0; i < plane; ++i) {
                            sum_dy += dyp[i];
                            sum_dy_xhat += dyp[i] * (ap[i] - mu) * inv;
                        }
                    }
                    gbn_beta[o] += sum_dy;
                    gbn_gamma[o] += sum_dy_xhat;
                    for (std::size_t s = 0; s < n; ++s) {
                        const T* ap = a_cache.data() + (s * out_ch + o) * plane;
                        const T* dyp = dy + (s * out_ch + o) * plane;
                        T* dap = da.data() + (s * out_ch + o) * plane;
                        for (std::size_t i = 0; i < plane; ++i) {
                            const T xhat = (ap[i] - mu) * inv;
                            dap[i] = bn_gamma[o] * inv *
                                     (dyp[i] - sum_dy / m_count - xhat * sum_dy_xhat / m_count);
                        }
                    }
                } else {
                    // running-stat (inference) backward: affine only
                    for (std::size_t s = 0; s < n; ++s) {
                        const T* ap = a_cache.data() + (s * out_ch + o) * plane;
                        const T* dyp = dy + (s * out_ch + o) * plane;
                        T* dap = da.data() + (s * out_ch + o) * plane;
                        for (std::size_t i = 0; i < plane; ++i) {
                            gbn_beta[o] += dyp[i];
                            gbn_gamma[o] += dyp[i] * (ap[i] - mu) * inv;
                            dap[i] = dyp[i] * bn_gamma[o] * inv;
                        }
                    }
                }
            }
        } else {
            std::copy(dy, dy + da.size(), da.begin());
        }

        // leaky
        std::vector<T> dz(da.size());
        for (std::size_t i = 0; i < da.size(); ++i)
            dz[i] = da[i] * leaky_grad(z_cache[i], slope);

        // conv backward
        const long rh = static_cast<long>(kh / 2), rw = static_cast<long>(kw / 2);
        if (dx) std::fill(dx, dx + n * in_ch * plane, T(0));
        for (std::size_t s = 0; s < n; ++s) {
            const T* xs = x_cache.data() + s * in_ch * plane;
            const T* dzs = dz.data() + s * out_ch * plane;
            T* dxs = dx ? dx + s * in_ch * plane : nullptr;
            for (std::size_t o = 0; o < out_ch; ++o) {
                const T* dzp = dzs + o * plane;
                for (std::size_t i = 0; i < h; ++i)
                    for (std::size_t j = 0; j < w; ++j) {
                        const T g = dzp[i * w + j];
                        if (g == T(0)) continue;
                        gbias[o] += g;
                        for (std::size_t c = 0; c < in_ch; ++c) {
                            const T* xp = xs + c * plane;
                            T* gk = gkernels.data() + ((o * in_ch + c) * kh) * kw;
                            const T* k = kernels.data() + ((o * in_ch + c) * kh) * kw;
                            T* dxp = dxs ? dxs + c * plane : nullptr;
                            for (std::size_t ki = 0; ki < kh; ++ki) {
                                const long ii = static_cast<long>(i) + static_cast<long>(ki) - rh;
                                if (ii < 0 || ii >= static_cast<long>(h)) continue;
                                for (std::size_t kj = 0; kj < kw; ++kj) {
                                    const long jj = static_cast<long>(j) + static_cast<long>(kj) - rw;
                                    if (jj < 0 || jj >= static_cast<long>(w)) continue;
                                    const std::size_t xi =
                                        static_cast<std::size_t>(ii) * w + static_cast<std::size_t>(jj);
                                    gk[ki * kw + kj] += g * xp[xi];
                                    if (dxp) dxp[xi] += g * k[ki * kw + kj];
                                }
                            }
                        }
                    }
            }
        }
    }

    void collect_params(std::vector<ParamRef<T>>& out, const std::string& prefix, bool reg) {
        out.push_back({&kernels, &gkernels, reg, prefix + ".kernels"});
        out.push_back({&bias, &gbias, reg, prefix + ".bias"});
        if (bn_enabled) {
            out.push_back({&bn_gamma, &gbn_gamma, reg, prefix + ".bn_gamma"});
            out.push_back({&bn_beta, &gbn_beta, reg, prefix + ".bn_beta"});
        }
    }

  private:
    std::vector<T> scratch_z_, scratch_a_;
};

// Non-caching convenience wrapper matching the (C,H,W) single-image call.
template <typename T>
inline TensorT<T> conv_block_forward(const TensorT<T>& x, ConvBlock<T>& params, bool training) {
    if (x.rank() != 3) throw ShapeError("conv_block_forward: expected rank-3 (C,H,W) input");
    if (x.dims[0] != params.in_ch)
        throw ShapeError("conv_block_forward: channel mismatch: input " +
                         std::to_string(x.dims[0]) + " vs layer " + std::to_string(params.in_ch));
    const std::size_t h = x.dims[1], w = x.dims[2];
    if (h < params.kh || w < params.kw)
        throw ShapeError("conv_block_forward: spatial dims smaller than kernel");
    TensorT<T> y({params.out_ch, h, w});
    params.forward(x.data.data(), 1, h, w, y.data.data(), training, /*cache=*/false);
    return y;
}

}  // namespace tearnet::nn
