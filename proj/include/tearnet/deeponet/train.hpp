#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "tearnet/deeponet/model.hpp"
#include "tearnet/nn/adam.hpp"
#include "tearnet/nn/loss.hpp"

namespace tearnet::deeponet {

// Internal training layout: the branch images of one injection step stored
// once, shared by that step's query points (the Eq.-style replication is
// materialized only in assemble_triplets).
template <typename T>
struct StepGroup {
    std::vector<T> branch;   // C * g * g
    std::vector<T> ys;       // n x trunk_dims
    std::vector<T> targets;  // n
    std::uint64_t case_id = 0;
    std::size_t step = 0;
    std::size_t n() const { return targets.size(); }
};

template <typename T>
inline std::vector<StepGroup<T>> build_groups(const std::vector<CaseFields>& cases,
                                              const TaskConfig& cfg) {
    std::vector<StepGroup<T>> out;
    const std::size_t g = cfg.grid, ydim = cfg.trunk_dims();
    for (const auto& c : cases) {
        for (std::size_t k = 0; k < c.n_steps(); ++k) {
            const Tensor u = stack_branch_channels(cfg, c, k);
            StepGroup<T> grp;
            grp.case_id = c.case_id;
            grp.step = k;
            grp.branch.assign(u.data.begin(), u.data.end());
            const double v = c.volumes[k] / cfg.volume_scale;
            if (cfg.task == Task::NetPV) {
                grp.ys = {static_cast<T>(v)};
                grp.targets = {static_cast<T>(c.pressures[k] / cfg.pressure_scale)};
            } else {
                const Tensor& field = cfg.task == Task::NetD ? c.damage[k] : c.displacement[k];
                grp.ys.resize(g * g * ydim);
                grp.targets.resize(g * g);
                for (std::size_t i = 0; i < g; ++i)
                    for (std::size_t j = 0; j < g; ++j) {
                        const std::size_t q = i * g + j;
                        grp.ys[q * 3 + 0] = static_cast<T>(pixel_coord(j, g));
                        grp.ys[q * 3 + 1] = static_cast<T>(pixel_coord(i, g));
                        grp.ys[q * 3 + 2] = static_cast<T>(v);
                        grp.targets[q] = static_cast<T>(field.at2(i, j));
                    }
            }
            out.push_back(std::move(grp));
        }
    }
    return out;
}

template <typename T>
inline double eval_mse(DeepONet<T>& model, const std::vector<StepGroup<T>>& groups) {
    double sq = 0.0;
    std::size_t count = 0;
    std::vector<T> out;
    for (const auto& g : groups) {
        out.resize(g.n());
        model.forward_group(g.branch.data(), g.ys.data(), g.n(), out.data(),
                            /*training=*/false, /*cache=*/false);
        for (std::size_t i = 0; i < g.n(); ++i) {
            const double d = static_cast<double>(out[i]) - static_cast<double>(g.targets[i]);
            sq += d * d;
        }
        count += g.n();
    }
    return count ? sq / static_cast<double>(count) : 0.0;
}

struct TrainHistory {
    std::vector<double> train_mse;
    std::vector<double> test_mse;
};

struct TrainingDivergence : std::runtime_error {
    std::size_t epoch;
    explicit TrainingDivergence(std::size_t e)
        : std::runtime_error("training diverged (non-finite loss) at epoch " +
                             std::to_string(e)),
          epoch(e) {}
};

template <typename T>
struct TrainResult {
    DeepONet<T> model;
    TrainHistory history;
};

// Minibatch Adam on the regularized MSE loss. Batches are whole step groups;
// batch_size counts triplets. Deterministic for a fixed seed and data order.
template <typename T>
inline TrainResult<T> train_task(const std::vector<CaseFields>& train_cases,
                                 const std::vector<CaseFields>& test_cases,
                                 const TaskConfig& cfg, const nn::TrainHyper& hyper,
                                 DeepONet<T>* resume_from = nullptr,
                                 nn::Adam<T>* resume_opt = nullptr) {
    hyper.validate();
    if (train_cases.empty()) throw DataError("train_task: empty training split");

    TrainResult<T> result;
    result.model = resume_from ? *resume_from : DeepONet<T>(cfg, hyper.leaky_slope);
    if (!resume_from) result.model.init(derive_seed(hyper.seed, 0xd0e));
    DeepONet<T>& model = result.model;

    auto train_groups = build_groups<T>(train_cases, cfg);
    auto test_groups = build_groups<T>(test_cases, cfg);

    auto params = model.params();
    nn::Adam<T> local_opt;
    nn::Adam<T>& opt = resume_opt ? *resume_opt : local_opt;
    if (!resume_opt) {
        opt.lr = hyper.learning_rate;
        opt.reset(params);
    }

    std::vector<std::size_t> order(train_groups.size());
    std::iota(order.begin(), order.end(), 0);
    auto shuffle_rng = make_rng(derive_seed(hyper.seed, 0x5409));

    std::vector<T> out, dout;
    for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        std::size_t at = 0;
        while (at < order.size()) {
            // gather a batch of whole groups totaling >= batch_size triplets
            std::size_t end = at, total = 0;
            while (end < order.size() && total < hyper.batch_size) {
                total += train_groups[order[end]].n();
                ++end;
            }
            model.zero_grad();
            double batch_sq = 0.0;
            for (std::size_t gi = at; gi < end; ++gi) {
                const auto& grp = train_groups[order[gi]];
                out.resize(grp.n());
                model.forward_group(grp.branch.data(), grp.ys.data(), grp.n(), out.data(),
                                    /*training=*/true);
                dout.resize(grp.n());
                for (std::size_t i = 0; i < grp.n(); ++i) {
                    const double d =
                        static_cast<double>(out[i]) - static_cast<double>(grp.targets[i]);
                    batch_sq += d * d;
                    dout[i] = static_cast<T>(2.0 * d / static_cast<double>(total));
                }
                model.backward_group(dout.data(), grp.n());
            }
            if (!std::isfinite(batch_sq)) throw TrainingDivergence(epoch);
            // L2 penalty on trunk and output layer
            if (hyper.l2_weight > 0.0) {
                for (auto& p : params) {
                    if (!p.regularized) continue;
                    auto& val = *p.value;
                    auto& grd = *p.grad;
                    for (std::size_t i = 0; i < val.size(); ++i)
                        grd[i] += static_cast<T>(2.0 * hyper.l2_weight *
                                                 static_cast<double>(val[i]));
                }
            }
            opt.step(params);
            at = end;
        }
        const double tr = eval_mse(model, train_groups);
        if (!std::isfinite(tr)) throw TrainingDivergence(epoch);
        result.history.train_mse.push_back(tr);
        result.history.test_mse.push_back(test_groups.empty() ? 0.0
                                                              : eval_mse(model, test_groups));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Prediction and evaluation
// ---------------------------------------------------------------------------

// Evaluate a field task at every pixel of the downsampled grid for one
// branch input. NetD outputs are clamped to [0,1] only when `clamp01` is set
// (reporting); raw values are what downstream consumers should use.
template <typename T>
inline Tensor predict_field(DeepONet<T>& model, const Tensor& branch_images, double volume,
                            bool clamp01 = false) {
    const auto& cfg = model.cfg;
    if (cfg.task == Task::NetPV)
        throw nn::UsageError("predict_field: model task must be NetD or NetDisp");
    const std::size_t g = cfg.grid;
    std::vector<T> branch(branch_images.data.begin(), branch_images.data.end());
    std::vector<T> ys(g * g * 3), out(g * g);
    const double v = volume / cfg.volume_scale;
    for (std::size_t i = 0; i < g; ++i)
        for (std::size_t j = 0; j < g; ++j) {
            const std::size_t q = i * g + j;
            ys[q * 3 + 0] = static_cast<T>(pixel_coord(j, g));
            ys[q * 3 + 1] = static_cast<T>(pixel_coord(i, g));
            ys[q * 3 + 2] = static_cast<T>(v);
        }
    model.forward_group(branch.data(), ys.data(), g * g, out.data(), /*training=*/false,
                        /*cache=*/false);
    Tensor field({g, g});
    for (std::size_t q = 0; q < g * g; ++q) {
        double val = static_cast<double>(out[q]);
        if (clamp01) val = std::clamp(val, 0.0, 1.0);
        field[q] = val;
    }
    return field;
}

// P-V prediction: pressure_k = pressure_scale * G((strut, damage_k))(v_k).
template <typename T>
inline std::vector<double> predict_pv(DeepONet<T>& model, const Tensor& strut,
                                      const std::vector<Tensor>& damage_seq,
                                      const std::vector<double>& volumes) {
    const auto& cfg = model.cfg;
    if (cfg.task != Task::NetPV) throw nn::UsageError("predict_pv: model task must be NetPV");
    const bool with_damage =
        std::find(cfg.branch_channels.begin(), cfg.branch_channels.end(), Channel::damage) !=
        cfg.branch_channels.end();
    if (with_damage && damage_seq.size() != volumes.size())
        throw DataError("predict_pv: damage sequence and volumes differ in length");
    const std::size_t g = cfg.grid;
    std::vector<double> pressures(volumes.size());
    std::vector<T> branch(cfg.branch_input_size());
    for (std::size_t k = 0; k < volumes.size(); ++k) {
        std::size_t offset = 0;
        for (Channel ch : cfg.branch_channels) {
            const Tensor& src = ch == Channel::strut ? strut : damage_seq[k];
            if (ch == Channel::displacement)
                throw DataError("predict_pv: NetPV takes strut/damage channels only");
            for (std::size_t i = 0; i < g * g; ++i)
                branch[offset + i] = static_cast<T>(src[i]);
            offset += g * g;
        }
        T out;
        const T y = static_cast<T>(volumes[k] / cfg.volume_scale);
        model.forward_group(branch.data(), &y, 1, &out, /*training=*/false, /*cache=*/false);
        pressures[k] = cfg.pressure_scale * static_cast<double>(out);
    }
    return pressures;
}

// NetD-driven damage sequence for the coupled NetD -> NetPV pipeline; raw
// (unclamped) predictions, matching the training data distribution.
template <typename T>
inline std::vector<Tensor> predict_damage_sequence(DeepONet<T>& netd, const CaseFields& c) {
    std::vector<Tensor> frames;
    frames.reserve(c.n_steps());
    for (std::size_t k = 0; k < c.n_steps(); ++k) {
        const Tensor u = stack_branch_channels(netd.cfg, c, k);
        frames.push_back(predict_field(netd, u, c.volumes[k], /*clamp01=*/false));
    }
    return frames;
}

struct CaseError {
    std::uint64_t case_id = 0;
    double mse = 0.0;
    double rel_err = 0.0;  // percent
};

// MSE is (1/(M N)) over all evaluation points; the relative error is the
// mean over cases of ||pred - true||_2 / ||true||_2, in percent.
struct EvalReport {
    double mse = 0.0;
    double relative_error = 0.0;
    std::vector<CaseError> per_case;
};

template <typename T>
inline EvalReport evaluate(DeepONet<T>& model, const std::vector<CaseFields>& cases) {
    if (cases.empty()) throw nn::UsageError("evaluate: empty test set");
    EvalReport report;
    double total_sq = 0.0;
    std::size_t total_n = 0;
    std::vector<T> out;
    for (const auto& c : cases) {
        auto groups = build_groups<T>({c}, model.cfg);
        double sq = 0.0, norm_true = 0.0;
        std::size_t n = 0;
        for (const auto& g : groups) {
            out.resize(g.n());
            model.forward_group(g.branch.data(), g.ys.data(), g.n(), out.data(), false, false);
            for (std::size_t i = 0; i < g.n(); ++i) {
                const double d =
                    static_cast<double>(out[i]) - static_cast<double>(g.targets[i]);
                sq += d * d;
                norm_true += static_cast<double>(g.targets[i]) *
                             static_cast<double>(g.targets[i]);
            }
            n += g.n();
        }
        CaseError ce;
        ce.case_id = c.case_id;
        ce.mse = n ? sq / static_cast<double>(n) : 0.0;
        ce.rel_err = norm_true > 0.0 ? 100.0 * std::sqrt(sq / norm_true)
                                     : (sq > 0.0 ? 100.0 : 0.0);
        report.per_case.push_back(ce);
        total_sq += sq;
        total_n += n;
    }
    report.mse = total_n ? total_sq / static_cast<double>(total_n) : 0.0;
    double rel = 0.0;
    for (const auto& ce : report.per_case) rel += ce.rel_err;
    report.relative_error = rel / static_cast<double>(report.per_case.size());
    return report;
}

// Deterministic split by case index under a named seed.
inline void split_indices(std::size_t n_cases, std::size_t n_test, std::uint64_t seed,
                          std::vector<std::size_t>& train, std::vector<std::size_t>& test) {
    std::vector<std::size_t> idx(n_cases);
    std::iota(idx.begin(), idx.end(), 0);
    auto rng = make_rng(derive_seed(seed, 0x5911f));
    std::shuffle(idx.begin(), idx.end(), rng);
    n_test = std::min(n_test, n_cases);
    test.assign(idx.begin(), idx.begin() + static_cast<long>(n_test));
    train.assign(idx.begin() + static_cast<long>(n_test), idx.end());
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
}

}  // namespace tearnet::deeponet
