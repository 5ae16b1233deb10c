#pragma once

#include <random>
#include <vector>

#include "tearnet/deeponet/task.hpp"
#include "tearnet/nn/networks.hpp"

namespace tearnet::deeponet {

// DeepONet merge: G(u)(y) ~ sum_k b_k t_k + b0.
template <typename T>
inline T merge(const std::vector<T>& b, const std::vector<T>& t, T b0) {
    if (b.size() != t.size())
        throw nn::ShapeError("merge: branch width " + std::to_string(b.size()) +
                             " != trunk width " + std::to_string(t.size()));
    T acc = b0;
    for (std::size_t k = 0; k < b.size(); ++k) acc += b[k] * t[k];
    return acc;
}

// Unstacked DeepONet for one task. The branch encodes the stacked field
// images; the trunk encodes the query point; both emit latent vectors of
// width p. The L2 penalty of the loss covers the trunk net and the output
// layer (branch projection onto p, plus b0).
template <typename T>
struct DeepONet {
    TaskConfig cfg;
    nn::Mlp<T> branch_fnn;
    nn::ConvNet<T> branch_cnn;
    nn::Mlp<T> trunk;
    std::vector<T> b0 = {T(0)};
    std::vector<T> gb0 = {T(0)};

    // caches for the grouped backward
    std::vector<T> b_cache_;   // latent branch output (p)
    std::vector<T> t_cache_;   // n x p trunk outputs
    std::size_t cached_n_ = 0;

    DeepONet() = default;
    explicit DeepONet(const TaskConfig& c, double leaky_slope = 0.01) : cfg(c) {
        cfg.validate();
        const T slope = static_cast<T>(leaky_slope);
        trunk = nn::Mlp<T>(cfg.trunk_dims(), cfg.trunk_widths, /*activate_last=*/true, slope);
        if (cfg.branch_arch == BranchArch::FNN) {
            branch_fnn = nn::Mlp<T>(cfg.branch_input_size(), cfg.branch_widths,
                                    /*activate_last=*/false, slope);
        } else {
            branch_cnn = nn::ConvNet<T>(cfg.branch_channels.size(), cfg.grid, cfg.grid,
                                        cfg.branch_widths, cfg.latent(), 3, slope);
        }
    }

    void init(std::uint64_t seed) {
        auto rng = make_rng(seed);
        if (cfg.branch_arch == BranchArch::FNN)
            branch_fnn.init(rng);
        else
            branch_cnn.init(rng);
        trunk.init(rng);
        b0[0] = T(0);
    }

    std::size_t latent() const { return cfg.latent(); }

    void zero_grad() {
        if (cfg.branch_arch == BranchArch::FNN)
            branch_fnn.zero_grad();
        else
            branch_cnn.zero_grad();
        trunk.zero_grad();
        gb0[0] = T(0);
    }

    // One step group: a single branch input evaluated at n query points.
    // outputs must hold n values.
    void forward_group(const T* branch_in, const T* ys, std::size_t n, T* outputs,
                       bool training, bool cache = true) {
        const std::size_t p = latent();
        std::vector<T>& b = cache ? b_cache_ : b_scratch_;
        std::vector<T>& t = cache ? t_cache_ : t_scratch_;
        b.resize(p);
        t.resize(n * p);
        if (cfg.branch_arch == BranchArch::FNN)
            branch_fnn.forward(branch_in, 1, b.data(), cache);
        else
            branch_cnn.forward(branch_in, 1, b.data(), training, cache);
        trunk.forward(ys, n, t.data(), cache);
        for (std::size_t j = 0; j < n; ++j) {
            T acc = b0[0];
            const T* trow = t.data() + j * p;
            for (std::size_t k = 0; k < p; ++k) acc += b[k] * trow[k];
            outputs[j] = acc;
        }
        if (cache) cached_n_ = n;
    }

    // dout: gradient of the loss with respect to each group output.
    void backward_group(const T* dout, std::size_t n) {
        if (cached_n_ != n) throw nn::UsageError("deeponet backward before matching forward");
        const std::size_t p = latent();
        std::vector<T> db(p, T(0)), dt(n * p);
        for (std::size_t j = 0; j < n; ++j) {
            const T g = dout[j];
            gb0[0] += g;
            const T* trow = t_cache_.data() + j * p;
            T* dtrow = dt.data() + j * p;
            for (std::size_t k = 0; k < p; ++k) {
                db[k] += g * trow[k];
                dtrow[k] = g * b_cache_[k];
            }
        }
        if (cfg.branch_arch == BranchArch::FNN)
            branch_fnn.backward(db.data(), 1, nullptr);
        else
            branch_cnn.backward(db.data(), 1, nullptr);
        trunk.backward(dt.data(), n, nullptr);
    }

    // Parameter registry; order fixed, which pins the optimizer trajectory.
    std::vector<nn::ParamRef<T>> params() {
        std::vector<nn::ParamRef<T>> out;
        if (cfg.branch_arch == BranchArch::FNN) {
            for (std::size_t i = 0; i < branch_fnn.layers.size(); ++i) {
                const bool is_proj = (i + 1 == branch_fnn.layers.size());
                branch_fnn.layers[i].collect_params(out, "branch.l" + std::to_string(i),
                                                    is_proj);
            }
        } else {
            branch_cnn.collect_params(out, "branch", /*reg_blocks=*/false, /*reg_proj=*/true);
        }
        trunk.collect_params(out, "trunk", true);
        out.push_back({&b0, &gb0, true, "b0"});
        return out;
    }

    std::vector<const std::vector<T>*> regularized_params() {
        std::vector<const std::vector<T>*> out;
        for (auto& p : params())
            if (p.regularized) out.push_back(p.value);
        return out;
    }

  private:
    std::vector<T> b_scratch_, t_scratch_;
};

}  // namespace tearnet::deeponet
