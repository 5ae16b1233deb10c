#pragma once

#include <stdexcept>
#include <vector>

#include "tearnet/core/tensor.hpp"
#include "tearnet/nn/layers.hpp"

namespace tearnet::nn {

// Mean squared error over all entries plus an L2 penalty over the given
// parameter tensors:  (1/numel) * sum (pred - target)^2 + alpha * sum xi^2.
// The caller decides which parameters count (trunk net and output layer).
template <typename T>
inline double loss_mse_l2(const TensorT<T>& pred, const TensorT<T>& target,
                          const std::vector<const std::vector<T>*>& reg_params,
                          double alpha) {
    if (!pred.same_shape(target))
        throw ShapeError("loss_mse_l2: pred shape " + shape_str(pred.dims) +
                         " != target shape " + shape_str(target.dims));
    double mse = 0.0;
    for (std::size_t i = 0; i < pred.numel(); ++i) {
        const double d = static_cast<double>(pred[i]) - static_cast<double>(target[i]);
        mse += d * d;
    }
    mse /= static_cast<double>(pred.numel());
    double penalty = 0.0;
    for (const auto* p : reg_params)
        for (T v : *p) penalty += static_cast<double>(v) * static_cast<double>(v);
    return mse + alpha * penalty;
}

}  // namespace tearnet::nn
