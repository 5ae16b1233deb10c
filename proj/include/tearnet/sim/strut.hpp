#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "tearnet/core/rng.hpp"
#include "tearnet/core/tensor.hpp"

namespace tearnet {

// Binary microstructure grid: 1 = elastic strut, 0 = interlamellar matrix.
struct StrutMap {
    TensorT<std::uint8_t> grid;  // H x W
    double pixel_size = 1.0;     // micrometers

    StrutMap() = default;
    StrutMap(std::size_t h, std::size_t w, double px = 1.0)
        : grid({h, w}, std::uint8_t(0)), pixel_size(px) {}

    std::size_t height() const { return grid.dims[0]; }
    std::size_t width() const { return grid.dims[1]; }
    bool is_strut(std::size_t i, std::size_t j) const { return grid.at2(i, j) != 0; }

    double strut_fraction() const {
        std::size_t n = 0;
        for (auto v : grid.data) n += v;
        return static_cast<double>(n) / static_cast<double>(grid.numel());
    }

    Tensor as_field() const {
        Tensor f(grid.dims);
        for (std::size_t i = 0; i < grid.numel(); ++i) f[i] = grid[i];
        return f;
    }
};

// i.i.d. Bernoulli(rho) strut placement; deterministic per seed.
inline StrutMap sample_strut_map(std::uint64_t seed, double density, std::size_t h,
                                 std::size_t w, double pixel_size = 1.0) {
    if (!(density > 0.0 && density < 1.0))
        throw std::invalid_argument("sample_strut_map: density must be in (0,1)");
    StrutMap m(h, w, pixel_size);
    auto rng = make_rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto& v : m.grid.data) v = (u(rng) < density) ? 1 : 0;
    return m;
}

}  // namespace tearnet
