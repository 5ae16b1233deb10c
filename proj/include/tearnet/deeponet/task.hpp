#pragma once

#include <string>
#include <vector>

#include "tearnet/data/downsample.hpp"

namespace tearnet::deeponet {

enum class Task { NetD, NetPV, NetDisp };
enum class BranchArch { FNN, CNN };
enum class Channel { strut, displacement, damage };

inline std::string to_string(Task t) {
    switch (t) {
        case Task::NetD: return "netd";
        case Task::NetPV: return "netpv";
        case Task::NetDisp: return "netdisp";
    }
    return "?";
}
inline std::string to_string(BranchArch a) { return a == BranchArch::FNN ? "fnn" : "cnn"; }
inline std::string to_string(Channel c) {
    switch (c) {
        case Channel::strut: return "strut";
        case Channel::displacement: return "displacement";
        case Channel::damage: return "damage";
    }
    return "?";
}

// Task wiring: which field images feed the branch net, what the trunk sees,
// and the network sizes. Width lists give the per-layer widths (FNN) or the
// per-block channel counts (CNN); the last trunk width is the latent size p
// shared by both nets.
struct TaskConfig {
    Task task = Task::NetD;
    BranchArch branch_arch = BranchArch::CNN;
    std::vector<Channel> branch_channels;
    std::size_t grid = 6;  // downsampled field edge length
    std::vector<std::size_t> branch_widths;  // FNN widths (ending in p) or CNN channels
    std::vector<std::size_t> trunk_widths = {50, 50, 50};
    double volume_scale = 3500.0;   // micrometers^3, the schedule maximum
    double pressure_scale = 100.0;  // kPa; P-V targets are pressure / 100

    std::size_t latent() const { return trunk_widths.back(); }
    std::size_t trunk_dims() const { return task == Task::NetPV ? 1 : 3; }
    std::size_t branch_input_size() const {
        return branch_channels.size() * grid * grid;
    }
    std::size_t points_per_step() const { return task == Task::NetPV ? 1 : grid * grid; }

    static TaskConfig defaults(Task t) {
        TaskConfig c;
        c.task = t;
        switch (t) {
            case Task::NetD:
                c.branch_arch = BranchArch::CNN;
                c.branch_channels = {Channel::strut, Channel::displacement};
                c.branch_widths = {4, 8, 12};
                break;
            case Task::NetPV:
                c.branch_arch = BranchArch::FNN;
                c.branch_channels = {Channel::strut, Channel::damage};
                c.branch_widths = {50, 50, 50};
                break;
            case Task::NetDisp:
                c.branch_arch = BranchArch::CNN;
                c.branch_channels = {Channel::strut, Channel::damage};
                c.branch_widths = {4, 8, 12};
                break;
        }
        return c;
    }

    // Input ablation: condition on the strut map alone.
    TaskConfig strut_only() const {
        TaskConfig c = *this;
        c.branch_channels = {Channel::strut};
        return c;
    }

    void validate() const {
        if (branch_channels.empty()) throw DataError("task: no branch channels");
        if (trunk_widths.empty()) throw DataError("task: empty trunk");
        if (branch_widths.empty()) throw DataError("task: empty branch");
        if (branch_arch == BranchArch::FNN && branch_widths.back() != latent())
            throw DataError("task: FNN branch must end at the latent width");
    }
};

// One training sample: replicated branch images u, query point y, target
// G(u)(y). Trunk coordinates are normalized to [0,1].
struct Triplet {
    Tensor branch_input;          // (C, g, g)
    std::vector<double> trunk_input;  // length 1 or 3
    double target = 0.0;
};

inline Tensor stack_branch_channels(const TaskConfig& cfg, const CaseFields& c,
                                    std::size_t step) {
    const std::size_t g = cfg.grid;
    Tensor u({cfg.branch_channels.size(), g, g});
    std::size_t offset = 0;
    for (Channel ch : cfg.branch_channels) {
        const Tensor* src = nullptr;
        switch (ch) {
            case Channel::strut: src = &c.strut; break;
            case Channel::displacement:
                if (c.displacement.size() <= step)
                    throw DataError("case missing displacement frames for task");
                src = &c.displacement[step];
                break;
            case Channel::damage:
                if (c.damage.size() <= step)
                    throw DataError("case missing damage frames for task");
                src = &c.damage[step];
                break;
        }
        if (src->dims != std::vector<std::size_t>{g, g})
            throw DataError("branch channel has shape " + shape_str(src->dims) +
                            ", expected " + std::to_string(g) + "x" + std::to_string(g));
        std::copy(src->data.begin(), src->data.end(), u.data.begin() + offset);
        offset += g * g;
    }
    return u;
}

// Pixel-center coordinate in [0,1] for a downsampled grid of edge g.
inline double pixel_coord(std::size_t idx, std::size_t g) {
    return (static_cast<double>(idx) + 0.5) / static_cast<double>(g);
}

// Expands one case into training triplets. Field tasks emit one triplet per
// pixel per injection step with the branch images replicated across the
// step's 36 query points; the P-V task emits one triplet per step.
inline std::vector<Triplet> assemble_triplets(const CaseFields& c, const TaskConfig& cfg) {
    cfg.validate();
    std::vector<Triplet> out;
    const std::size_t g = cfg.grid;
    for (std::size_t k = 0; k < c.n_steps(); ++k) {
        const Tensor u = stack_branch_channels(cfg, c, k);
        const double v = c.volumes[k] / cfg.volume_scale;
        if (cfg.task == Task::NetPV) {
            Triplet t;
            t.branch_input = u;
            t.trunk_input = {v};
            t.target = c.pressures[k] / cfg.pressure_scale;
            out.push_back(std::move(t));
        } else {
            const Tensor& field = cfg.task == Task::NetD ? c.damage[k] : c.displacement[k];
            for (std::size_t i = 0; i < g; ++i)
                for (std::size_t j = 0; j < g; ++j) {
                    Triplet t;
                    t.branch_input = u;
                    t.trunk_input = {pixel_coord(j, g), pixel_coord(i, g), v};
                    t.target = field.at2(i, j);
                    out.push_back(std::move(t));
                }
        }
    }
    return out;
}

}  // namespace tearnet::deeponet
