#pragma once

// Deterministic reference computations: image-method kernels, a 1-D
// Crank-Nicolson heat solver, finite-difference exterior calculus, and
// quadrature checks of two integral identities.

#include <functional>
#include <string>
#include <vector>

#include "formkac/estimators.hpp"

namespace formkac {

enum class KernelKind { neumann, dirichlet };

/// phi_t(x - y) +- phi_t(x + y), phi_t the centred Gaussian of variance t.
double halfspace_kernel(KernelKind kind, double t, double xn, double yn);

/// int_0^inf kernel(t, xn, y) g(y) dy by composite Gauss-Legendre.
double image_method_evolve(KernelKind kind, const std::function<double(double)>& g, double t, double xn);

struct GaussRule {
    std::vector<double> nodes;    ///< on [-1, 1]
    std::vector<double> weights;
};

/// Gauss-Legendre rule of the given order (Golub-Welsch).
const GaussRule& gauss_legendre(int order);

/// Composite Gauss-Legendre integral of f over [a, b].
double integrate(const std::function<double(double)>& f, double a, double b, int panels = 16, int order = 8);

enum class BoundaryCondition { neumann, dirichlet, robin };
enum class GridGeometry { half_line, radial };

/// Cell-centred grid. half_line: cells cover [0, L], boundary condition at 0,
/// no flux at L. radial: cells cover [0, R] in radius for the flat
/// `radial_dim`-ball, boundary condition at R.
struct GridField {
    std::vector<double> grid;
    std::vector<double> values;
    BoundaryCondition bc = BoundaryCondition::neumann;
    double robin_c = 0.0;  ///< inward normal derivative = robin_c * u
    GridGeometry geometry = GridGeometry::half_line;
    int radial_dim = 1;
};

/// Uniform cell-centred grid on [0, length] with `cells` cells.
std::vector<double> cell_centres(double length, int cells);

/// Crank-Nicolson for u_t = u''/2 (or the radial Laplacian / 2) up to time t.
/// Requires t / steps <= dx^2.
GridField pde_solve_1d(const GridField& field, double t, int steps);

/// Linear interpolation of a grid field (constant beyond the ends).
double sample_grid(const GridField& field, double x);

/// d omega at x, in the canonical frame, by central differences of chart components.
FVec exterior_derivative_fd(const ManifoldModel& model, const FormField& omega, const Vec& x, double h = 1e-4);
/// d* omega = (-1)^(n(q+1)+1) * d * omega at x (the L^2 adjoint of d).
FVec codifferential_fd(const ManifoldModel& model, const FormField& omega, const Vec& x, double h = 1e-4);

/// A C^2 function with analytic gradient and Hessian (chart = frame on flat models).
struct ScalarFunction {
    std::function<double(const Vec&)> value;
    std::function<Vec(const Vec&)> gradient;
    std::function<Mat(const Vec&)> hessian;
};

struct BallQuadrature {
    int radial = 16;
    int polar = 16;
    int azimuthal = 32;
    double fd_step = 1e-3;
};

struct IntforResult {
    double lhs = 0.0;              ///< int <d omega, grad f ^ omega> + <d* omega, grad f _| omega>
    double rhs = 0.0;              ///< interior + boundary_contraction - boundary_flux
    double interior = 0.0;
    double boundary_contraction = 0.0;  ///< int_dN <grad f _| omega, nu _| omega>
    double boundary_flux = 0.0;         ///< 1/2 int_dN |omega|^2 <grad f, nu>
    double residual = 0.0;
    /// |lhs - (interior - boundary_contraction - boundary_flux)|: the contraction
    /// term with the opposite sign, which only balances when nu _| omega = 0.
    double residual_as_printed = 0.0;
};

/// Both sides of the integral formula on the flat unit-radius-r0 ball, n = 3,
/// with tensor Gauss-Legendre quadrature in spherical coordinates.
IntforResult intfor_check(const ManifoldModel& model, const ScalarFunction& f, const FormField& omega,
                          const BallQuadrature& quad = {});

/// Chart box [lo, hi] carrying the support of a test form.
struct ChartBox {
    Vec lo;
    Vec hi;
};

struct DxRow {
    double distance = 0.0;       ///< min distance from the centre to the quadrature nodes
    double lhs = 0.0;            ///< |d omega|_2 + |d* omega|_2
    double rhs = 0.0;            ///< int c(d_x) |omega|^2 / |omega|_2
    double interior = 0.0;       ///< identity interior integral with f = -d_x, over |omega|_2
    double constant = 0.0;       ///< c(distance) = 1/2 ((n-p-1) sqrt(k) coth(sqrt(k) d) - p coth d)
    double limit_constant = 0.0; ///< 1/2 ((n-p-1) sqrt(k) - p)
    bool holds = false;          ///< lhs >= rhs
};

/// The finite-distance form of the Donnelly-Xavier estimate in hyperbolic
/// space (upper half-space chart) for a p-form supported in `support`.
std::vector<DxRow> dx_inequality_eval(const ManifoldModel& model, int p, double kappa, const FormField& omega,
                                      const ChartBox& support, const std::vector<Vec>& centres, int nodes_per_dim = 12,
                                      double fd_step = 1e-4);

/// Hyperbolic distance in the upper half-space chart.
double hyperbolic_distance(const Vec& x, const Vec& y);

struct HeatDecayResult {
    std::vector<double> times;
    std::vector<double> mean;
    double fitted_rate = 0.0;  ///< -slope of log mean vs t
    double predicted = 0.0;    ///< (n-1)^2 kappa / 8
    bool meets_fraction = false;  ///< fitted_rate >= 0.5 predicted
};

/// q = 0 Neumann heat evolution of a bump by Monte Carlo, with an exponential fit.
HeatDecayResult heat_decay_diagnostic(const ManifoldModel& model, const ScalarField& bump, const Vec& x0,
                                      const std::vector<double>& times, double kappa, const McOptions& opts);

}  // namespace formkac
