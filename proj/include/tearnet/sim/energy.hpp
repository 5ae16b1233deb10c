#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "tearnet/core/tensor.hpp"
#include "tearnet/sim/material.hpp"
#include "tearnet/sim/strut.hpp"

namespace tearnet {

// Phase-field and solver constants. Gc values are in J/m^2 as reported;
// energies are assembled in kPa*um^3 (femtojoules), so Gc converts by 1e3 to
// fJ/um^2. The length scale l and the regularizers have no published values;
// these defaults are solver decisions.
struct PhaseFieldParams {
    double gc_strut = 5.77;    // J/m^2
    double gc_matrix = 0.20;   // J/m^2
    double length_scale = 2.0; // um, >= 2 lattice spacings
    double eps_degrade = 1e-3; // residual elastic fraction in torn material
    double eps_vol = 1e3;      // kPa, volumetric penalty stiffness (>> c)
    double damping = 0.0;      // eta, per-sweep proximal coefficient
    double tol_energy = 1e-8;  // relative sweep-energy change at convergence
    std::size_t max_sweeps = 200;
    std::size_t inner_iters = 30;   // descent iterations per field per sweep
    double vol_tol_rel = 1e-3;      // |sum(phi J dV) - V| / max(V, floor)
    double kappa0 = 0.5;            // kPa/um^3, volume-constraint penalty
    std::size_t max_attempts = 14;  // multiplier updates per injection step

    void validate() const {
        if (!(gc_strut > 0 && gc_matrix > 0 && length_scale > 0 && eps_vol > 0))
            throw std::invalid_argument("phasefield: parameters must be positive");
        if (!(eps_degrade > 0 && eps_degrade < 1))
            throw std::invalid_argument("phasefield: eps_degrade must be in (0,1)");
    }
};

// Regular lattice at the strut-map resolution. `thickness` is the reference
// interlamellar gap the membrane bounds; it sets the volume element and the
// thickness stretch scale.
struct Grid {
    std::size_t H = 36, W = 36;
    double spacing = 1.0;    // um
    double thickness = 2.0;  // um
    double dA() const { return spacing * spacing; }
    double dV() const { return dA() * thickness; }
    std::size_t n() const { return H * W; }
};

// Unknowns of one injection increment. phi = 1 is torn, 0 intact (the
// convention under which degradation (1-phi)^2 and fluid volume phi*J read
// consistently). p stores the wall hydrostatic pressure recovered from the
// volumetric stationarity; m is the fluid multiplier reported as injection
// pressure.
struct FieldState {
    Tensor w;    // out-of-plane displacement, um
    Tensor p;    // kPa
    Tensor phi;  // tear fraction
    double m = 0.0;  // kPa

    static FieldState zeros(const Grid& g) {
        FieldState s;
        s.w = Tensor({g.H, g.W}, 0.0);
        s.p = Tensor({g.H, g.W}, 0.0);
        s.phi = Tensor({g.H, g.W}, 0.0);
        s.m = 0.0;
        return s;
    }
};

// ---------------------------------------------------------------------------
// Spec-facing energy terms (paper forms, per-pixel / closed formulas)
// ---------------------------------------------------------------------------

// Perturbed-Lagrangian volumetric density as printed:
//   W_vol = -(1-phi)^3 p (J-1) + p^2 / (2 eps_vol)
// Stationarity in p gives p* = eps_vol (1-phi)^3 (J-1).
inline double volumetric_energy(double phi, double p, double J, double eps_vol) {
    if (!(J > 0)) throw std::domain_error("volumetric_energy: J must be > 0");
    const double omp = 1.0 - phi;
    return -omp * omp * omp * p * (J - 1.0) + p * p / (2.0 * eps_vol);
}

inline double volumetric_pressure_stationary(double phi, double J, double eps_vol) {
    const double omp = 1.0 - phi;
    return eps_vol * omp * omp * omp * (J - 1.0);
}

// Tear energy on the lattice:
//   (3/8) sum_px Gc (phi^2/l + l |grad phi|^2) dA * thickness
// with central differences inside and one-sided differences at boundaries.
inline double tear_energy(const Tensor& phi, const Tensor& gc_map, double l,
                          double spacing = 1.0, double thickness = 1.0) {
    if (phi.dims != gc_map.dims) throw std::invalid_argument("tear_energy: dims mismatch");
    const std::size_t H = phi.dims[0], W = phi.dims[1];
    const double dA = spacing * spacing;
    double e = 0.0;
    for (std::size_t i = 0; i < H; ++i)
        for (std::size_t j = 0; j < W; ++j) {
            const double f = phi.at2(i, j);
            double fx, fy;
            if (j == 0)
                fx = (phi.at2(i, 1) - phi.at2(i, 0)) / spacing;
            else if (j == W - 1)
                fx = (phi.at2(i, W - 1) - phi.at2(i, W - 2)) / spacing;
            else
                fx = (phi.at2(i, j + 1) - phi.at2(i, j - 1)) / (2.0 * spacing);
            if (i == 0)
                fy = (phi.at2(1, j) - phi.at2(0, j)) / spacing;
            else if (i == H - 1)
                fy = (phi.at2(H - 1, j) - phi.at2(H - 2, j)) / spacing;
            else
                fy = (phi.at2(i + 1, j) - phi.at2(i - 1, j)) / (2.0 * spacing);
            e += gc_map.at2(i, j) * (f * f / l + l * (fx * fx + fy * fy));
        }
    return 0.375 * e * dA * thickness;
}

// Fluid volume constraint term as printed: m (sum phi J dV - V_injection).
inline double fluid_constraint_energy(const Tensor& phi, const Tensor& J, double m,
                                      double v_injection, double dV) {
    if (phi.dims != J.dims)
        throw std::invalid_argument("fluid_constraint_energy: dims mismatch");
    if (v_injection < 0)
        throw std::invalid_argument("fluid_constraint_energy: V_injection must be >= 0");
    double vol = 0.0;
    for (std::size_t i = 0; i < phi.numel(); ++i) vol += phi[i] * J[i];
    return m * (vol * dV - v_injection);
}

// ---------------------------------------------------------------------------
// Assembled lattice model
// ---------------------------------------------------------------------------

// Precomputed per-pixel data for one simulation case.
struct SimContext {
    Grid grid;
    MaterialParams mat;         // homogeneous-wall values
    PhaseFieldParams pf;
    std::vector<double> stiffness_scale;  // per pixel: matrix_scale or strut_scale
    Tensor gc;                  // per pixel, fJ/um^2
    Tensor seed;                // initial damage (phi lower bound), values in {0,1}
    std::vector<std::uint8_t> strut_mask;

    static SimContext make(const StrutMap& strut, const MaterialParams& mat,
                           const PhaseFieldParams& pf, const Grid& grid) {
        mat.validate();
        pf.validate();
        if (strut.height() != grid.H || strut.width() != grid.W)
            throw std::invalid_argument("sim: strut map does not match grid");
        if (pf.length_scale < 2.0 * grid.spacing)
            throw std::invalid_argument("sim: length scale below 2 lattice spacings");
        SimContext ctx;
        ctx.grid = grid;
        ctx.mat = mat;
        ctx.pf = pf;
        ctx.stiffness_scale.resize(grid.n());
        ctx.gc = Tensor({grid.H, grid.W});
        ctx.strut_mask.resize(grid.n());
        const double ms = mat.matrix_scale(), ss = mat.strut_scale();
        for (std::size_t k = 0; k < grid.n(); ++k) {
            const bool s = strut.grid[k] != 0;
            ctx.strut_mask[k] = s ? 1 : 0;
            ctx.stiffness_scale[k] = s ? ss : ms;
            ctx.gc[k] = 1e3 * (s ? pf.gc_strut : pf.gc_matrix);  // J/m^2 -> fJ/um^2
        }
        // initial damage imposed along the left boundary (injection seed)
        ctx.seed = Tensor({grid.H, grid.W}, 0.0);
        for (std::size_t i = 0; i < grid.H; ++i) ctx.seed.at2(i, 0) = 1.0;
        return ctx;
    }

    double seed_volume() const {
        double v = 0.0;
        for (double s : seed.data) v += s;
        return v * grid.dV();
    }
};

struct EnergyBreakdown {
    double elastic = 0.0;      // degraded Fung energy
    double volumetric = 0.0;   // (eps_vol/2)(1-phi)^3 (J-1)^2 penalty
    double tear = 0.0;
    double fluid = 0.0;        // m (V - Vcur) + (kappa/2)(V - Vcur)^2
    double total = 0.0;
    double v_current = 0.0;    // sum phi J dV
};

namespace detail {

inline double dxf(const Tensor& f, std::size_t i, std::size_t j, double h) {
    const std::size_t W = f.dims[1];
    if (j == 0) return (f.at2(i, 1) - f.at2(i, 0)) / h;
    if (j == W - 1) return (f.at2(i, W - 1) - f.at2(i, W - 2)) / h;
    return (f.at2(i, j + 1) - f.at2(i, j - 1)) / (2.0 * h);
}
inline double dyf(const Tensor& f, std::size_t i, std::size_t j, double h) {
    const std::size_t H = f.dims[0];
    if (i == 0) return (f.at2(1, j) - f.at2(0, j)) / h;
    if (i == H - 1) return (f.at2(H - 1, j) - f.at2(H - 2, j)) / h;
    return (f.at2(i + 1, j) - f.at2(i - 1, j)) / (2.0 * h);
}

// Adjoint of the difference stencils: scatter dE/d(fx at i,j) into dE/df.
inline void scatter_dx(Tensor& g, std::size_t i, std::size_t j, double v, double h) {
    const std::size_t W = g.dims[1];
    if (j == 0) {
        g.at2(i, 1) += v / h;
        g.at2(i, 0) -= v / h;
    } else if (j == W - 1) {
        g.at2(i, W - 1) += v / h;
        g.at2(i, W - 2) -= v / h;
    } else {
        g.at2(i, j + 1) += v / (2.0 * h);
        g.at2(i, j - 1) -= v / (2.0 * h);
    }
}
inline void scatter_dy(Tensor& g, std::size_t i, std::size_t j, double v, double h) {
    const std::size_t H = g.dims[0];
    if (i == 0) {
        g.at2(1, j) += v / h;
        g.at2(0, j) -= v / h;
    } else if (i == H - 1) {
        g.at2(H - 1, j) += v / h;
        g.at2(H - 2, j) -= v / h;
    } else {
        g.at2(i + 1, j) += v / (2.0 * h);
        g.at2(i - 1, j) -= v / (2.0 * h);
    }
}

constexpr double kExpCap = 60.0;  // exp argument guard; beyond this the
                                  // energy is +inf and line searches back off

}  // namespace detail

// Total energy of the lattice model and (optionally) its analytic gradients.
//
//   E = sum_px [ ((1-phi)^2 + eps) W_wall
//              + (eps_vol/2)(1-phi)^3 (J-1)^2 ] dV
//     + E_tear + m (V - Vcur) + (kappa/2)(V - Vcur)^2
//
// The volumetric term is the penalty obtained by eliminating p at its
// stationary value (the printed saddle form is unbounded below under joint
// minimization); the fluid term is the loading potential of the prescribed
// volume with multiplier m and optional quadratic augmentation kappa.
// Returns +inf when stretches leave the admissible range.
inline double total_energy(const FieldState& s, const SimContext& ctx, double v_injection,
                           double kappa = 0.0, EnergyBreakdown* out = nullptr,
                           Tensor* grad_w = nullptr, Tensor* grad_phi = nullptr,
                           double* dE_dm = nullptr) {
    const Grid& g = ctx.grid;
    const double h = g.spacing, t0 = g.thickness, dV = g.dV();
    const double eps = ctx.pf.eps_degrade, ev = ctx.pf.eps_vol, l = ctx.pf.length_scale;
    const bool want_grad = grad_w || grad_phi || dE_dm;
    if (grad_w) grad_w->fill(0.0);
    if (grad_phi) grad_phi->fill(0.0);

    double e_el = 0.0, e_vol = 0.0, v_cur = 0.0;
    // first pass: elastic + volumetric + fluid volume; gradients need m_est,
    // so per-pixel factors are stashed when gradients are requested.
    const std::size_t H = g.H, W = g.W;
    // workspace reused across calls (per thread; cases are thread-private)
    thread_local std::vector<double> jq1, jq2, jl3, jphi, wxv, wyv;
    thread_local Tensor gw_local, gphi_local;
    if (want_grad) {
        jq1.assign(g.n(), 0.0);
        jq2.assign(g.n(), 0.0);
        jl3.assign(g.n(), 0.0);
        jphi.assign(g.n(), 0.0);
        wxv.assign(g.n(), 0.0);
        wyv.assign(g.n(), 0.0);
        gw_local.dims = {H, W};
        gw_local.data.assign(g.n(), 0.0);
        gphi_local.dims = {H, W};
        gphi_local.data.assign(g.n(), 0.0);
    }

    for (std::size_t i = 0; i < H; ++i) {
        for (std::size_t j = 0; j < W; ++j) {
            const std::size_t k = i * W + j;
            const double wx = detail::dxf(s.w, i, j, h);
            const double wy = detail::dyf(s.w, i, j, h);
            const double q1 = 1.0 + wx * wx;  // lambda1^2
            const double q2 = 1.0 + wy * wy;  // lambda2^2
            const double l3 = 1.0 + s.w[k] / t0;
            if (!(l3 > 0.0)) return std::numeric_limits<double>::infinity();
            const double phi = s.phi[k];
            const double omp = 1.0 - phi;
            const double deg = omp * omp + eps;
            const double pen3 = omp * omp * omp;
            const double scale = ctx.stiffness_scale[k];
            const double cp = ctx.mat.c * scale;

            // Fung energy in squared-stretch form; fiber families:
            // axial -> q1, circumferential -> q2, diagonals -> (q1+q2)/2.
            // The -c ln J augmentation makes the undeformed state stress-free
            // under the penalty formulation (the printed form relies on the
            // hard incompressibility constraint for that); it keeps
            // W_wall >= 0 with equality exactly at the identity.
            const double lnJ = 0.5 * std::log(q1) + 0.5 * std::log(q2) + std::log(l3);
            double wall = 0.5 * cp * (q1 + q2 + l3 * l3 - 3.0) - cp * lnJ;
            double dwall_dq1 = 0.5 * cp - 0.5 * cp / q1;
            double dwall_dq2 = 0.5 * cp - 0.5 * cp / q2;
            const double fq[3] = {q1, q2, 0.5 * (q1 + q2)};
            const int fam_of[4] = {0, 1, 2, 2};
            for (int f = 0; f < 4; ++f) {
                const double c1 = ctx.mat.c1[static_cast<std::size_t>(f)] * scale;
                if (c1 == 0.0) continue;
                const double c2 = ctx.mat.c2[static_cast<std::size_t>(f)];
                const double e = fq[fam_of[f]] - 1.0;
                const double arg = c2 * e * e;
                if (arg > detail::kExpCap) return std::numeric_limits<double>::infinity();
                const double ex = std::exp(arg);
                wall += c1 / (4.0 * c2) * (ex - 1.0);
                const double dterm = 0.5 * c1 * e * ex;  // d/d(fq)
                if (fam_of[f] == 0) dwall_dq1 += dterm;
                else if (fam_of[f] == 1) dwall_dq2 += dterm;
                else {
                    dwall_dq1 += 0.5 * dterm;
                    dwall_dq2 += 0.5 * dterm;
                }
            }

            const double l1l2 = std::sqrt(q1 * q2);
            const double J = l1l2 * l3;
            const double jm1 = J - 1.0;
            e_el += deg * wall * dV;
            e_vol += 0.5 * ev * pen3 * jm1 * jm1 * dV;
            v_cur += phi * J * dV;

            if (want_grad) {
                const double dJ_dq1 = J / (2.0 * q1);
                const double dJ_dq2 = J / (2.0 * q2);
                const double dJ_dl3 = l1l2;
                // m_est-independent parts
                const double dE_dq1 = (deg * dwall_dq1 + ev * pen3 * jm1 * dJ_dq1) * dV;
                const double dE_dq2 = (deg * dwall_dq2 + ev * pen3 * jm1 * dJ_dq2) * dV;
                const double dE_dl3 =
                    (deg * cp * (l3 - 1.0 / l3) + ev * pen3 * jm1 * dJ_dl3) * dV;
                // stash J-derivatives for the fluid part (scaled by -m_est later)
                jq1[k] = phi * dJ_dq1 * dV;
                jq2[k] = phi * dJ_dq2 * dV;
                jl3[k] = phi * dJ_dl3 * dV;
                jphi[k] = J * dV;
                wxv[k] = wx;
                wyv[k] = wy;
                // chain rule into w via q = 1 + (dw)^2 and l3 = 1 + w/t0
                detail::scatter_dx(gw_local, i, j, dE_dq1 * 2.0 * wx, h);
                detail::scatter_dy(gw_local, i, j, dE_dq2 * 2.0 * wy, h);
                gw_local[k] += dE_dl3 / t0;
                gphi_local[k] +=
                    (-2.0 * omp * wall - 1.5 * ev * omp * omp * jm1 * jm1) * dV;
            }
        }
    }

    const double e_tear = tear_energy(s.phi, ctx.gc, l, h, t0);
    const double resid = v_injection - v_cur;
    const double e_fluid = s.m * resid + 0.5 * kappa * resid * resid;
    const double total = e_el + e_vol + e_tear + e_fluid;

    if (out) {
        out->elastic = e_el;
        out->volumetric = e_vol;
        out->tear = e_tear;
        out->fluid = e_fluid;
        out->total = total;
        out->v_current = v_cur;
    }

    if (want_grad) {
        const double m_est = s.m + kappa * resid;  // dE/dVcur = -m_est
        for (std::size_t i = 0; i < H; ++i)
            for (std::size_t j = 0; j < W; ++j) {
                const std::size_t k = i * W + j;
                if (grad_w) {
                    detail::scatter_dx(*grad_w, i, j, -m_est * jq1[k] * 2.0 * wxv[k], h);
                    detail::scatter_dy(*grad_w, i, j, -m_est * jq2[k] * 2.0 * wyv[k], h);
                    (*grad_w)[k] += -m_est * jl3[k] / t0;
                }
                if (grad_phi) (*grad_phi)[k] += -m_est * jphi[k];
            }
        if (grad_w)
            for (std::size_t k = 0; k < g.n(); ++k) (*grad_w)[k] += gw_local[k];
        if (grad_phi) {
            // tear-energy gradient
            const double c0 = 0.375 * g.dA() * t0;
            for (std::size_t i = 0; i < H; ++i)
                for (std::size_t j = 0; j < W; ++j) {
                    const std::size_t k = i * W + j;
                    (*grad_phi)[k] += gphi_local[k] + c0 * ctx.gc[k] * 2.0 * s.phi[k] / l;
                    const double fx = detail::dxf(s.phi, i, j, h);
                    const double fy = detail::dyf(s.phi, i, j, h);
                    detail::scatter_dx(*grad_phi, i, j, c0 * ctx.gc[k] * l * 2.0 * fx, h);
                    detail::scatter_dy(*grad_phi, i, j, c0 * ctx.gc[k] * l * 2.0 * fy, h);
                }
        }
        if (dE_dm) *dE_dm = resid;
    }
    return total;
}

}  // namespace tearnet
