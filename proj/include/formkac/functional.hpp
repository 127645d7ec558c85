#pragma once

// The multiplicative functional M^t on degree-q forms along a reflecting path,
// and the scalar functional that bounds its operator norm.

#include <vector>

#include "formkac/development.hpp"
#include "formkac/exterior.hpp"

namespace formkac {

enum class FunctionalMode { eps, projected };

struct FunctionalMatrix {
    int q = 0;
    FMat m;
    FunctionalMode mode = FunctionalMode::projected;
    double eps = 0.0;
};

/// Boundary quantities pulled back to the frame u = E(x) g of a path state.
struct LiftedBoundary {
    FMat shape;       ///< A_q^dagger
    FMat tangential;  ///< Pi_tan^dagger
    FMat normal;      ///< Pi_nor^dagger
    double rho = 0.0; ///< rho_(q) at the boundary point
    bool totally_geodesic = false;
};

/// rho_(q) with the conventions rho_(0) = 0 and rho_(n) = +inf.
double rho_q_extended(const ManifoldModel& model, const Vec& boundary_point, int q);

/// Frame rotation g = E(x)^{-1} u taking the canonical frame to u.
Mat frame_rotation(const ManifoldModel& model, const PathState& s);

/// Boundary data at the boundary point nearest to s.x, lifted to s.frame.
LiftedBoundary lift_boundary(const ManifoldModel& model, const PathState& s, int q);

/// R_q^dagger(u) at a path state.
FMat lifted_weitzenbock(const ManifoldModel& model, const PathState& s, int q);

/// Step-by-step evolution of M and of the bound exponent along a path.
class FunctionalEvolver {
public:
    FunctionalEvolver(const ManifoldModel& model, int q, FunctionalMode mode, double eps = 0.0);

    void reset();
    /// Apply the factors of the step from -> to.
    void advance(const PathState& from, const PathState& to);

    const FMat& matrix() const { return m_; }
    /// log of the bound functional exp(-1/2 int r_(q) ds - int rho_(q) dl).
    double log_bound() const { return log_bound_; }
    int degree() const { return q_; }

private:
    const ManifoldModel& model_;
    int q_;
    FunctionalMode mode_;
    double eps_;
    std::optional<double> curvature_;
    FMat m_;
    double log_bound_ = 0.0;
};

/// M at every state of the path; M^0 = I.
std::vector<FunctionalMatrix> evolve_functional(const ManifoldModel& model, const PathSample& path, int q,
                                                FunctionalMode mode, double eps = 0.0);

/// Bound functional at every state of the path (left-endpoint quadrature).
std::vector<double> bound_functional(const ManifoldModel& model, const PathSample& path, int q);

/// Operator-norm deviation |M_eps^T - M^T| at the final time, for each eps.
std::vector<double> eps_convergence_probe(const ManifoldModel& model, const PathSample& path, int q,
                                          const std::vector<double>& eps_sequence);

double operator_norm(const FMat& m);

}  // namespace formkac
