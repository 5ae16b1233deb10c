#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tearnet {

// Fung exponential stiffening constants. The four fiber families are axial,
// circumferential, and the two diagonals, in that order. The published
// constants live in external references; the shipped "human-aorta-default"
// profile carries documented placeholder values of the right magnitude.
// Strut and matrix stiffnesses differ by `strut_stiffness_ratio` with their
// arithmetic mean equal to the homogeneous-wall values below.
struct MaterialParams {
    double c = 30.0;                              // kPa, shear-like modulus
    std::array<double, 4> c1{3.0, 3.0, 5.0, 5.0};  // kPa, fiber stiffening
    std::array<double, 4> c2{1.2, 1.2, 1.5, 1.5};  // dimensionless exponents
    double strut_stiffness_ratio = 20.0;

    // mean(matrix, strut) == homogeneous value, strut/matrix == ratio
    double matrix_scale() const { return 2.0 / (1.0 + strut_stiffness_ratio); }
    double strut_scale() const {
        return 2.0 * strut_stiffness_ratio / (1.0 + strut_stiffness_ratio);
    }

    MaterialParams scaled(double factor) const {
        MaterialParams s = *this;
        s.c *= factor;
        for (auto& v : s.c1) v *= factor;
        return s;
    }

    void validate() const {
        if (!(c > 0)) throw std::invalid_argument("material: c must be > 0");
        for (double v : c1)
            if (v < 0) throw std::invalid_argument("material: c1 must be >= 0");
        for (double v : c2)
            if (v < 0) throw std::invalid_argument("material: c2 must be >= 0");
        if (!(strut_stiffness_ratio > 0))
            throw std::invalid_argument("material: stiffness ratio must be > 0");
    }
};

// Fung strain energy density:
//   W = (c/2)(l1^2 + l2^2 + l3^2 - 3)
//     + sum_i c1_i/(4 c2_i) (exp(c2_i (lf_i^2 - 1)^2) - 1)
// A fiber term with c1_i = 0 contributes 0 regardless of c2_i.
inline double fung_energy_density(double l1, double l2, double l3,
                                  const std::array<double, 4>& lfiber,
                                  const MaterialParams& mat) {
    if (!(l1 > 0) || !(l2 > 0) || !(l3 > 0))
        throw std::domain_error("fung_energy_density: nonpositive principal stretch");
    for (double lf : lfiber)
        if (!(lf > 0)) throw std::domain_error("fung_energy_density: nonpositive fiber stretch");
    double w = 0.5 * mat.c * (l1 * l1 + l2 * l2 + l3 * l3 - 3.0);
    for (int i = 0; i < 4; ++i) {
        if (mat.c1[i] == 0.0) continue;
        const double e = lfiber[i] * lfiber[i] - 1.0;
        w += mat.c1[i] / (4.0 * mat.c2[i]) * (std::exp(mat.c2[i] * e * e) - 1.0);
    }
    return w;
}

}  // namespace tearnet
