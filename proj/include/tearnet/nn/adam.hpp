#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "tearnet/nn/layers.hpp"

namespace tearnet::nn {

struct TrainHyper {
    double learning_rate = 1e-3;
    std::size_t epochs = 3000;
    std::size_t batch_size = 256;
    double l2_weight = 1e-5;   // alpha in the regularized loss
    double leaky_slope = 0.01;
    std::uint64_t seed = 0;

    void validate() const {
        if (learning_rate <= 0) throw std::invalid_argument("hyper: learning_rate must be > 0");
        if (epochs == 0) throw std::invalid_argument("hyper: epochs must be > 0");
        if (batch_size == 0) throw std::invalid_argument("hyper: batch_size must be > 0");
        if (l2_weight < 0) throw std::invalid_argument("hyper: l2_weight must be >= 0");
        if (leaky_slope <= 0 || leaky_slope >= 1)
            throw std::invalid_argument("hyper: leaky_slope must be in (0,1)");
    }
};

struct OptimError : std::runtime_error {
    explicit OptimError(const std::string& m) : std::runtime_error(m) {}
};

// Adaptive-moment SGD (decays 0.9 / 0.999, epsilon 1e-8). Parameters are
// visited in registry order, so trajectories are deterministic for a fixed
// seed and data order.
template <typename T>
struct Adam {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    std::vector<std::vector<T>> m, v;  // one slot per parameter tensor
    std::uint64_t t = 0;

    void reset(const std::vector<ParamRef<T>>& params) {
        m.assign(params.size(), {});
        v.assign(params.size(), {});
        for (std::size_t i = 0; i < params.size(); ++i) {
            m[i].assign(params[i].value->size(), T(0));
            v[i].assign(params[i].value->size(), T(0));
        }
        t = 0;
    }

    void step(const std::vector<ParamRef<T>>& params) {
        if (m.size() != params.size()) throw UsageError("adam: step before reset");
        ++t;
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        for (std::size_t pi = 0; pi < params.size(); ++pi) {
            auto& value = *params[pi].value;
            auto& grad = *params[pi].grad;
            auto& mi = m[pi];
            auto& vi = v[pi];
            for (std::size_t k = 0; k < value.size(); ++k) {
                const double g = static_cast<double>(grad[k]);
                if (!std::isfinite(g))
                    throw OptimError("adam: non-finite gradient in " + params[pi].name +
                                     "[" + std::to_string(k) + "] at step " + std::to_string(t));
                const double mk = beta1 * static_cast<double>(mi[k]) + (1.0 - beta1) * g;
                const double vk = beta2 * static_cast<double>(vi[k]) + (1.0 - beta2) * g * g;
                mi[k] = static_cast<T>(mk);
                vi[k] = static_cast<T>(vk);
                const double mhat = mk / bc1;
                const double vhat = vk / bc2;
                value[k] = static_cast<T>(static_cast<double>(value[k]) -
                                          lr * mhat / (std::sqrt(vhat) + eps));
            }
        }
    }
};

}  // namespace tearnet::nn
