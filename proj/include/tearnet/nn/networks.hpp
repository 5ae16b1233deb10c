#pragma once

#include <random>
#include <string>
#include <vector>

#include "tearnet/nn/layers.hpp"

namespace tearnet::nn {

// Fully connected stack. `activate_last` distinguishes the trunk net (all
// layers activated) from a branch FNN whose final layer is the linear
// projection onto the latent width.
template <typename T>
struct Mlp {
    std::vector<DenseLayer<T>> layers;
    std::vector<std::vector<T>> acts_;  // per-layer outputs for backward

    Mlp() = default;
    Mlp(std::size_t in, const std::vector<std::size_t>& widths, bool activate_last,
        T slope = T(0.01)) {
        std::size_t prev = in;
        for (std::size_t i = 0; i < widths.size(); ++i) {
            const bool last = (i + 1 == widths.size());
            const Activation a =
                (!last || activate_last) ? Activation::leaky_relu : Activation::identity;
            layers.emplace_back(prev, widths[i], a, slope);
            prev = widths[i];
        }
    }

    std::size_t in_width() const { return layers.front().in_width; }
    std::size_t out_width() const { return layers.back().out_width; }

    void init(std::mt19937_64& rng) {
        for (auto& l : layers) l.init(rng);
    }
    void zero_grad() {
        for (auto& l : layers) l.zero_grad();
    }

    void forward(const T* x, std::size_t n, T* y, bool cache = true) {
        acts_.resize(layers.size());
        const T* cur = x;
        for (std::size_t i = 0; i < layers.size(); ++i) {
            std::vector<T>& out = acts_[i];
            out.resize(n * layers[i].out_width);
            layers[i].forward(cur, n, out.data(), cache);
            cur = out.data();
        }
        std::copy(cur, cur + n * out_width(), y);
    }

    // dy: (N x out). dx may be null when input gradients are not needed.
    void backward(const T* dy, std::size_t n, T* dx) {
        std::vector<T> cur(dy, dy + n * out_width());
        for (std::size_t i = layers.size(); i-- > 0;) {
            if (i == 0) {
                layers[i].backward(cur.data(), n, dx);
            } else {
                std::vector<T> next(n * layers[i].in_width);
                layers[i].backward(cur.data(), n, next.data());
                cur.swap(next);
            }
        }
    }

    void collect_params(std::vector<ParamRef<T>>& out, const std::string& prefix, bool reg) {
        for (std::size_t i = 0; i < layers.size(); ++i)
            layers[i].collect_params(out, prefix + ".l" + std::to_string(i), reg);
    }
};

// Convolutional branch: conv blocks at fixed spatial size, flattened and
// projected to the latent width by a linear layer.
template <typename T>
struct ConvNet {
    std::size_t in_ch = 0, height = 0, width = 0;
    std::vector<ConvBlock<T>> blocks;
    DenseLayer<T> proj;
    std::vector<std::vector<T>> acts_;

    ConvNet() = default;
    ConvNet(std::size_t cin, std::size_t h, std::size_t w,
            const std::vector<std::size_t>& channels, std::size_t latent,
            std::size_t kernel = 3, T slope = T(0.01))
        : in_ch(cin), height(h), width(w) {
        std::size_t prev = cin;
        for (std::size_t c : channels) {
            blocks.emplace_back(prev, c, kernel, slope);
            prev = c;
        }
        proj = DenseLayer<T>(prev * h * w, latent, Activation::identity, slope);
    }

    std::size_t out_width() const { return proj.out_width; }

    void init(std::mt19937_64& rng) {
        for (auto& b : blocks) b.init(rng);
        proj.init(rng);
    }
    void zero_grad() {
        for (auto& b : blocks) b.zero_grad();
        proj.zero_grad();
    }

    void forward(const T* x, std::size_t n, T* y, bool training, bool cache = true) {
        acts_.resize(blocks.size());
        const T* cur = x;
        for (std::size_t i = 0; i < blocks.size(); ++i) {
            acts_[i].resize(blocks[i].out_size(n, height, width));
            blocks[i].forward(cur, n, height, width, acts_[i].data(), training, cache);
            cur = acts_[i].data();
        }
        proj.forward(cur, n, y, cache);  // flatten is a no-op on row-major data
    }

    void backward(const T* dy, std::size_t n, T* dx) {
        std::vector<T> cur(n * proj.in_width);
        proj.backward(dy, n, cur.data());
        for (std::size_t i = blocks.size(); i-- > 0;) {
            if (i == 0) {
                blocks[i].backward(cur.data(), n, height, width, dx);
            } else {
                std::vector<T> next(blocks[i - 1].out_size(n, height, width));
                blocks[i].backward(cur.data(), n, height, width, next.data());
                cur.swap(next);
            }
        }
    }

    void collect_params(std::vector<ParamRef<T>>& out, const std::string& prefix,
                        bool reg_blocks, bool reg_proj) {
        for (std::size_t i = 0; i < blocks.size(); ++i)
            blocks[i].collect_params(out, prefix + ".b" + std::to_string(i), reg_blocks);
        proj.collect_params(out, prefix + ".proj", reg_proj);
    }
};

}  // namespace tearnet::nn
