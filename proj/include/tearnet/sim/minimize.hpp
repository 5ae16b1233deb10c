#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "tearnet/sim/energy.hpp"

namespace tearnet {

struct StepDiagnostics {
    std::vector<double> sweep_energies;  // recorded working energy per sweep
    bool sweeps_converged = false;
    bool volume_converged = false;
    std::size_t sweeps = 0;
    std::size_t attempts = 0;
    double volume_residual = 0.0;  // V - sum(phi J dV) at exit
};

struct StepResult {
    FieldState state;
    StepDiagnostics diag;
    bool degraded() const { return !(diag.sweeps_converged && diag.volume_converged); }
};

namespace detail {

// Monotone projected gradient descent with Barzilai-Borwein steps and Armijo
// backtracking on the projection arc. Bounds are per-entry boxes; fixed
// (Dirichlet/seed) entries use lo == hi.
struct BoxDescent {
    double sigma = 1e-4;
    std::size_t max_backtracks = 40;
    double step_init = 1e-3;
    double step_max = 1e6;

    // f(x, grad_or_null) -> energy. Returns final energy.
    template <typename F>
    double run(std::vector<double>& x, const std::vector<double>& lo,
               const std::vector<double>& hi, std::size_t iters, F&& eval) const {
        const std::size_t n = x.size();
        std::vector<double> g(n), xprev, gprev, cand(n);
        auto project = [&](std::vector<double>& v) {
            for (std::size_t k = 0; k < n; ++k) v[k] = std::clamp(v[k], lo[k], hi[k]);
        };
        project(x);
        double fx = eval(x, &g);
        double step = step_init;
        for (std::size_t it = 0; it < iters; ++it) {
            if (!xprev.empty()) {
                // BB1 step from the last accepted move
                double sty = 0.0, sts = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    const double sk = x[k] - xprev[k];
                    sts += sk * sk;
                    sty += sk * (g[k] - gprev[k]);
                }
                step = (sty > 1e-300) ? sts / sty : step * 2.0;
                step = std::clamp(step, 1e-12, step_max);
            }
            xprev = x;
            gprev = g;
            bool accepted = false;
            double trial = step;
            for (std::size_t bt = 0; bt < max_backtracks; ++bt) {
                for (std::size_t k = 0; k < n; ++k) cand[k] = x[k] - trial * g[k];
                project(cand);
                double decrease = 0.0;  // g . (x - cand), >= 0 on the arc
                double move = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    decrease += g[k] * (x[k] - cand[k]);
                    move += (x[k] - cand[k]) * (x[k] - cand[k]);
                }
                if (move == 0.0) break;  // stationary w.r.t. bounds
                const double fc = eval(cand, nullptr);
                if (std::isfinite(fc) && fc <= fx - sigma * decrease) {
                    x.swap(cand);
                    fx = fc;
                    accepted = true;
                    break;
                }
                trial *= 0.5;
            }
            if (!accepted) break;  // no admissible descent direction left
            fx = eval(x, &g);
        }
        return fx;
    }
};

}  // namespace detail

// Relaxed initial phase field: the seeded column is a sharp interface, which
// the tear functional would immediately smooth into its diffuse profile,
// irreversibly adding fluid volume. Starting from the 1-d minimizer of the
// discrete tear energy (phi fixed to 1 on the seed column) removes that
// transient. Rows are identical, so a single 1-d solve suffices.
inline Tensor relaxed_seed_phi(const SimContext& ctx) {
    const Grid& g = ctx.grid;
    const double l = ctx.pf.length_scale, h = g.spacing;
    std::vector<double> x(g.W, 0.0), lo(g.W, 0.0), hi(g.W, 1.0);
    x[0] = 1.0;
    lo[0] = 1.0;
    auto grad_x = [&](const std::vector<double>& f, std::size_t j) {
        if (j == 0) return (f[1] - f[0]) / h;
        if (j == g.W - 1) return (f[g.W - 1] - f[g.W - 2]) / h;
        return (f[j + 1] - f[j - 1]) / (2.0 * h);
    };
    auto eval = [&](const std::vector<double>& f, std::vector<double>* grad) {
        double e = 0.0;
        if (grad) grad->assign(g.W, 0.0);
        for (std::size_t j = 0; j < g.W; ++j) {
            const double gx = grad_x(f, j);
            e += f[j] * f[j] / l + l * gx * gx;
            if (grad) {
                (*grad)[j] += 2.0 * f[j] / l;
                const double v = 2.0 * l * gx;
                if (j == 0) {
                    (*grad)[1] += v / h;
                    (*grad)[0] -= v / h;
                } else if (j == g.W - 1) {
                    (*grad)[g.W - 1] += v / h;
                    (*grad)[g.W - 2] -= v / h;
                } else {
                    (*grad)[j + 1] += v / (2.0 * h);
                    (*grad)[j - 1] -= v / (2.0 * h);
                }
            }
        }
        return e;
    };
    detail::BoxDescent solver;
    solver.run(x, lo, hi, 2000, eval);
    Tensor phi({g.H, g.W});
    for (std::size_t i = 0; i < g.H; ++i)
        for (std::size_t j = 0; j < g.W; ++j)
            phi.at2(i, j) = std::max(x[j], ctx.seed.at2(i, j));
    return phi;
}

// Fluid volume held by a state (sum phi J dV).
inline double fluid_volume(const FieldState& s, const SimContext& ctx) {
    EnergyBreakdown eb;
    total_energy(s, ctx, 0.0, 0.0, &eb);
    return eb.v_current;
}

// One quasi-static injection increment: staggered alternating minimization
// over the displacement field and the phase field at fixed multiplier, with
// augmented-Lagrangian updates of m between attempts until the prescribed
// volume is met. phi is constrained to [max(phi_prev, seed), 1]
// (irreversibility); boundary w stays zero.
inline StepResult minimize_step(const FieldState& prev, double v_injection,
                                const SimContext& ctx) {
    const Grid& g = ctx.grid;
    const std::size_t n = g.n();
    const PhaseFieldParams& pf = ctx.pf;

    StepResult res;
    res.state = prev;
    FieldState& s = res.state;

    // bounds
    std::vector<double> w_lo(n, -0.45 * g.thickness), w_hi(n, 1e9);
    for (std::size_t i = 0; i < g.H; ++i)
        for (std::size_t j = 0; j < g.W; ++j)
            if (i == 0 || j == 0 || i + 1 == g.H || j + 1 == g.W) {
                w_lo[i * g.W + j] = 0.0;
                w_hi[i * g.W + j] = 0.0;
            }
    std::vector<double> phi_lo(n), phi_hi(n, 1.0);
    for (std::size_t k = 0; k < n; ++k)
        phi_lo[k] = std::clamp(std::max(prev.phi[k], ctx.seed[k]), 0.0, 1.0);

    detail::BoxDescent solver;
    Tensor grad_buf({g.H, g.W});

    double m = prev.m;
    const double kappa = pf.kappa0;
    const double vol_floor = std::max(v_injection, 1e-9);
    // multiplier iteration: residual V - Vcur(m) is decreasing in m, so a
    // safeguarded secant (with bisection bracket) converges in few attempts
    bool have_prev_pt = false, have_lo = false, have_hi = false;
    double m_prev_pt = 0.0, r_prev_pt = 0.0, m_lo = 0.0, m_hi = 0.0;

    for (std::size_t attempt = 0; attempt < pf.max_attempts; ++attempt) {
        ++res.diag.attempts;
        s.m = m;
        res.diag.sweep_energies.clear();
        res.diag.sweeps_converged = false;

        // proximal anchors for the optional viscous damping
        Tensor w_anchor = s.w, phi_anchor = s.phi;

        EnergyBreakdown eb;
        double e_prev = total_energy(s, ctx, v_injection, kappa, &eb);
        res.diag.sweep_energies.push_back(e_prev);

        for (std::size_t sweep = 0; sweep < pf.max_sweeps; ++sweep) {
            ++res.diag.sweeps;
            if (pf.damping > 0.0) {
                w_anchor = s.w;
                phi_anchor = s.phi;
            }
            // displacement subproblem at fixed phi
            auto eval_w = [&](const std::vector<double>& x, std::vector<double>* grad) {
                s.w.data = x;
                double e = total_energy(s, ctx, v_injection, kappa, nullptr,
                                        grad ? &grad_buf : nullptr, nullptr, nullptr);
                if (pf.damping > 0.0) {
                    for (std::size_t k = 0; k < n; ++k) {
                        const double d = x[k] - w_anchor[k];
                        e += pf.damping * d * d;
                        if (grad) grad_buf[k] += 2.0 * pf.damping * d;
                    }
                }
                if (grad) *grad = grad_buf.data;
                return e;
            };
            {
                std::vector<double> wx = s.w.data;
                solver.run(wx, w_lo, w_hi, pf.inner_iters, eval_w);
                s.w.data = wx;
            }

            // phase-field subproblem at fixed w
            auto eval_phi = [&](const std::vector<double>& x, std::vector<double>* grad) {
                s.phi.data = x;
                double e = total_energy(s, ctx, v_injection, kappa, nullptr, nullptr,
                                        grad ? &grad_buf : nullptr, nullptr);
                if (pf.damping > 0.0) {
                    for (std::size_t k = 0; k < n; ++k) {
                        const double d = x[k] - phi_anchor[k];
                        e += pf.damping * d * d;
                        if (grad) grad_buf[k] += 2.0 * pf.damping * d;
                    }
                }
                if (grad) *grad = grad_buf.data;
                return e;
            };
            {
                std::vector<double> px = s.phi.data;
                solver.run(px, phi_lo, phi_hi, pf.inner_iters, eval_phi);
                s.phi.data = px;
            }

            const double e_now = total_energy(s, ctx, v_injection, kappa, &eb);
            res.diag.sweep_energies.push_back(e_now);
            const double scale = std::max({std::abs(e_now), std::abs(e_prev), 1e-12});
            if (std::abs(e_prev - e_now) <= pf.tol_energy * scale) {
                res.diag.sweeps_converged = true;
                break;
            }
            e_prev = e_now;
        }

        const double resid = v_injection - eb.v_current;
        res.diag.volume_residual = resid;
        if (std::abs(resid) <= pf.vol_tol_rel * vol_floor) {
            // the quadratic term's first-order multiplier estimate
            m = std::max(0.0, m + kappa * resid);
            res.diag.volume_converged = true;
            break;
        }
        if (resid > 0.0) {  // pressure too low
            have_lo = true;
            m_lo = m;
        } else {
            have_hi = true;
            m_hi = m;
        }
        double m_next;
        if (have_prev_pt && std::abs(resid - r_prev_pt) > 1e-14) {
            m_next = m - resid * (m - m_prev_pt) / (resid - r_prev_pt);  // secant
        } else {
            m_next = m + kappa * resid;  // dual ascent bootstrap
        }
        m_prev_pt = m;
        r_prev_pt = resid;
        if (have_lo && have_hi && (m_next <= std::min(m_lo, m_hi) ||
                                   m_next >= std::max(m_lo, m_hi)))
            m_next = 0.5 * (m_lo + m_hi);  // bisection safeguard
        if (!have_hi)  // cap runaway extrapolation while unbracketed
            m_next = std::min(m_next, std::max(4.0 * (m + 1.0), 50.0));
        m = std::max(0.0, m_next);
        if (m == 0.0 && resid < 0.0 && !have_lo) break;  // over-filled at zero pressure
    }

    // report: multiplier estimate is the injection pressure; p field from the
    // volumetric stationarity
    s.m = m;
    const double h = g.spacing, t0 = g.thickness;
    for (std::size_t i = 0; i < g.H; ++i)
        for (std::size_t j = 0; j < g.W; ++j) {
            const std::size_t k = i * g.W + j;
            const double wx = detail::dxf(s.w, i, j, h);
            const double wy = detail::dyf(s.w, i, j, h);
            const double J = std::sqrt((1.0 + wx * wx) * (1.0 + wy * wy)) *
                             (1.0 + s.w[k] / t0);
            s.p[k] = volumetric_pressure_stationary(s.phi[k], J, pf.eps_vol);
        }
    return res;
}

}  // namespace tearnet
