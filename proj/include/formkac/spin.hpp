#pragma once

// Clifford modules, local boundary projections for the Dirac operator, and the
// spinor Feynman-Kac bound on the flat half-space.

#include <optional>
#include <vector>

#include "formkac/estimators.hpp"

namespace formkac {

struct CliffordModule {
    int n = 0;
    int spinor_dim = 0;           ///< 2^floor(n/2)
    std::vector<SpinMat> gamma;   ///< anti-Hermitian, gamma_i gamma_j + gamma_j gamma_i = -2 delta_ij
    std::optional<SpinMat> chirality;  ///< Q = i^(n/2) gamma_1 ... gamma_n, even n only
};

CliffordModule build_clifford(int n);

/// gamma(v) = sum_j v_j gamma_j.
SpinMat clifford_action(const CliffordModule& cl, const Vec& v);

enum class SpinorBoundaryKind { chirality, mit };

struct SpinorBoundaryOps {
    SpinMat plus;     ///< Pi_+ = (I - Qhat) / 2; Pi_+ psi = 0 on the boundary
    SpinMat minus;    ///< Pi_- = (I + Qhat) / 2
    SpinMat qhat;
    SpinorBoundaryKind kind = SpinorBoundaryKind::mit;
    double mean_curvature = 0.0;
    double lichnerowicz = 0.0;
};

/// Qhat = gamma(nu) Q (chirality) or i gamma(nu) (MIT bag).
SpinorBoundaryOps boundary_projection(const CliffordModule& cl, const Vec& nu, SpinorBoundaryKind kind);
/// Same with nu = e_{nu_index}.
SpinorBoundaryOps boundary_projection(const CliffordModule& cl, int nu_index, SpinorBoundaryKind kind);

/// Lichnerowicz term R/4 for the spin case (no auxiliary curvature).
double lichnerowicz_term(const ManifoldModel& model, const Vec& x);

struct IntertwineResult {
    double projection_residual = 0.0;   ///< max |Pi_+- sigma - sigma Pi_-+|
    double anticommute_residual = 0.0;  ///< max |sigma gamma(nu) + gamma(nu) sigma|
};

/// Residuals of the intertwining relations for the tangential symbol
/// sigma(xi) = sum_j xi_j gamma_j gamma(nu), over tangential samples xi.
IntertwineResult intertwine_certificate(const CliffordModule& cl, const Vec& nu, const SpinorBoundaryOps& ops,
                                        const std::vector<Vec>& xis);

struct SpinorBoundCheck {
    double lhs = 0.0;          ///< |psi_t(x0)| from the 1-D PDE oracle
    double rhs = 0.0;          ///< E|psi_0(x^t)| by Monte Carlo
    double rhs_stderr = 0.0;
    double margin = 0.0;       ///< rhs - lhs
    bool pass = false;         ///< lhs <= rhs + 2 stderr
    double mc_norm = 0.0;      ///< |E[M^t psi_0(x^t)]| with the projected spinor functional
    double mc_norm_stderr = 0.0;
    double dominating = 0.0;   ///< 2^(floor(n/2)+1) E|psi_0(x^t)|
};

/// psi_0(x) = g(x_n) s0 on the flat half-space of dimension cl.n, boundary
/// condition Pi_+ psi = 0 (Dirichlet on the Pi_+ part, Neumann on Pi_-).
SpinorBoundCheck spinor_fk_bound_check(const CliffordModule& cl, SpinorBoundaryKind kind,
                                       const std::function<double(double)>& g, const SpinVec& s0, double x0n,
                                       double t, const McOptions& opts);

}  // namespace formkac
