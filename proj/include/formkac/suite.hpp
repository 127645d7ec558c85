#pragma once

// Batteries of exact algebraic identities, shared by the selftest, the
// algebra-suite experiment and the acceptance checks.

#include <cstdint>
#include <string>
#include <vector>

#include "formkac/exterior.hpp"
#include "formkac/geometry.hpp"
#include "formkac/oracles.hpp"

namespace formkac {

struct IdentityCheck {
    std::string name;
    std::string subject;  ///< model id or "random"
    int n = 0;
    int q = -1;
    double error = 0.0;
    double tolerance = 0.0;
    bool pass() const { return error < tolerance; }
};

/// A random algebraic curvature tensor (sum of Kulkarni-Nomizu products of
/// random symmetric matrices).
CurvatureTensor random_curvature(int n, std::uint64_t seed);

/// A random orthogonal matrix with determinant +1.
Mat random_rotation(int n, std::uint64_t seed);

/// Wedge/contraction adjointness, Hodge identities, projections, shape
/// spectra, relative-condition identity, Weitzenbock pinning on random tensors.
std::vector<IdentityCheck> form_algebra_checks(int n_max, std::uint64_t seed, double tol = 1e-12);

/// Weitzenbock pinning (R_1 = Ric, duality, constant curvature) and curvature
/// symmetries for every catalog model and dimension.
std::vector<IdentityCheck> curvature_pinning_checks(std::uint64_t seed, double tol = 1e-12);

/// Clifford relations, chirality, boundary projections and intertwining.
std::vector<IdentityCheck> spinor_algebra_checks(std::uint64_t seed, double tol = 1e-12);

/// f = x^T S x / 2 + b.x + a x_0 x_1 x_2 and a q-form with random affine
/// coefficients times a Gaussian envelope, for the integral identity on the
/// 3-ball.
struct IntforPair {
    ScalarFunction f;
    FormField omega;
};
IntforPair random_intfor_pair(int q, std::uint64_t seed);

/// Product bump supported in the chart box times random affine coefficients.
FormField random_bump_form(int n, int p, const ChartBox& box, std::uint64_t seed);

}  // namespace formkac
