#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "tearnet/core/tensor.hpp"
#include "tearnet/sim/strut.hpp"

namespace tearnet {

struct DataError : std::runtime_error {
    explicit DataError(const std::string& m) : std::runtime_error(m) {}
};

// One quasi-static injection increment: prescribed volume, converged
// injection pressure (the fluid Lagrange multiplier), and the two planar
// fields extracted at that increment.
struct StepRecord {
    double volume = 0.0;    // micrometers^3
    double pressure = 0.0;  // kPa
    Tensor damage;          // tear fraction in [0,1], H x W
    Tensor displacement;    // out-of-plane displacement, micrometers, H x W
    bool degraded = false;  // minimizer failed to converge at this increment
};

struct CaseRecord {
    std::uint64_t case_id = 0;
    std::uint64_t seed = 0;
    StrutMap strut;
    std::vector<StepRecord> steps;
    bool failed_early = false;  // tear reached the far boundary

    std::size_t degraded_count() const {
        std::size_t n = 0;
        for (const auto& s : steps) n += s.degraded ? 1 : 0;
        return n;
    }
    // Cases with more than 10% degraded increments are excluded from training.
    bool usable() const {
        return !steps.empty() && 10 * degraded_count() <= steps.size();
    }
    double max_volume() const { return steps.empty() ? 0.0 : steps.back().volume; }
    double max_pressure() const {
        double m = 0.0;
        for (const auto& s : steps) m = std::max(m, s.pressure);
        return m;
    }

    void validate() const {
        if (steps.size() < 1) throw DataError("case " + std::to_string(case_id) + ": no steps");
        for (std::size_t k = 1; k < steps.size(); ++k) {
            if (!(steps[k].volume > steps[k - 1].volume))
                throw DataError("case " + std::to_string(case_id) +
                                ": volumes not strictly increasing at step " + std::to_string(k));
            const auto& a = steps[k - 1].damage;
            const auto& b = steps[k].damage;
            for (std::size_t i = 0; i < a.numel(); ++i)
                if (b[i] < a[i] - 1e-12)
                    throw DataError("case " + std::to_string(case_id) +
                                    ": damage not monotone at step " + std::to_string(k));
        }
        for (const auto& s : steps)
            for (double v : s.damage.data)
                if (v < -1e-12 || v > 1.0 + 1e-12)
                    throw DataError("case " + std::to_string(case_id) + ": damage out of [0,1]");
    }
};

}  // namespace tearnet
