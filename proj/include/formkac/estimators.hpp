#pragma once

// Monte Carlo estimators built on PathWalker + FunctionalEvolver. Paths are
// indexed 0..n_paths-1 under one seed; per-path results are reduced in index
// order, so every estimate is independent of the worker count.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "formkac/functional.hpp"

namespace formkac {

using ScalarField = std::function<double(const Vec&)>;

/// A q-form field: coefficients in the model's canonical frame at a chart point.
struct FormField {
    int degree = 0;
    std::function<FVec(const Vec&)> eval;
    std::string name;
};

/// omega^dagger(u): the coefficients of omega in the frame u of the state.
FVec lift_form(const ManifoldModel& model, const FormField& omega, const PathState& s);

struct McOptions {
    std::size_t n_paths = 1000;
    double dt = 1e-3;
    std::uint64_t seed = 0;
    int threads = 0;
};

inline constexpr std::size_t kMinPaths = 100;
/// Exponents of exponential functionals are clipped here.
inline constexpr double kExponentClip = 700.0;

struct EstimateReport {
    std::vector<double> value;
    std::vector<double> std_error;  ///< sample standard deviation / sqrt(n_paths)
    std::size_t n_paths = 0;
    std::uint64_t seed = 0;
    double t = 0.0;
    std::uint64_t inputs_digest = 0;
    std::size_t clipped = 0;

    double ci_low(std::size_t i) const { return value[i] - 1.96 * std_error[i]; }
    double ci_high(std::size_t i) const { return value[i] + 1.96 * std_error[i]; }
    double norm() const;
};

/// fk estimate and pointwise bound on the same paths at one time.
struct CoupledEstimate {
    double t = 0.0;
    EstimateReport fk;          ///< E[M^t omega0^dagger(u^t)]
    EstimateReport bound;       ///< E[|omega0|(x^t) exp(-1/2 int r_(q) - int rho_(q) dl)]
    double max_norm_ratio = 0;  ///< max over paths of |M^t| / bound functional
    std::size_t norm_violations = 0;  ///< paths with |M^t| > bound (1 + 10 dt)
};

struct FkOptions {
    FunctionalMode mode = FunctionalMode::projected;
    double eps = 0.0;
};

std::vector<CoupledEstimate> coupled_fk_bound(const ManifoldModel& model, const FormField& omega0,
                                              const ScalarField& abs_omega0, const Vec& x0, const Mat& frame0,
                                              const std::vector<double>& times, const McOptions& opts,
                                              const FkOptions& fk = {});

/// Estimate of omega_t^dagger(u^0) = E[M^t omega0^dagger(u^t)].
EstimateReport fk_expectation(const ManifoldModel& model, const FormField& omega0, const Vec& x0, const Mat& frame0,
                              double t, const McOptions& opts, const FkOptions& fk = {});

EstimateReport pointwise_bound(const ManifoldModel& model, const ScalarField& abs_omega0, int q, const Vec& x0,
                               const Mat& frame0, double t, const McOptions& opts);

/// Exponential functional exp(-1/2 int alpha ds - int beta dl). beta is
/// evaluated at the boundary point nearest the path.
struct Potentials {
    ScalarField alpha;
    ScalarField beta;
};

/// alpha = r_(q), beta = rho_(q) of the model.
Potentials curvature_potentials(const ManifoldModel& model, int q);

struct SspResult {
    std::vector<double> times;
    std::vector<double> log_mean;   ///< sup over x0 of log E[exp(...)]
    std::vector<double> log_stderr; ///< delta-method stderr of log_mean
    double slope = 0.0;
    double slope_ci = 0.0;          ///< half-width, 95%
    std::size_t clipped = 0;
    bool ssp = false;               ///< slope + ci < 0
};

SspResult ssp_rate(const ManifoldModel& model, const Potentials& pot, const std::vector<Vec>& starts,
                   const std::vector<double>& times, const McOptions& opts);

struct ThetaResult {
    double value = 0.0;      ///< trapezoid integral over [0, T_max]
    double std_error = 0.0;
    double tail_rate = 0.0;  ///< fitted exponential rate of the integrand on [T_max/2, T_max]
    double tail_estimate = 0.0;  ///< extrapolated integral over [T_max, inf); inf if tail_rate >= 0
    bool finite = false;
    std::size_t clipped = 0;
};

ThetaResult theta_q(const ManifoldModel& model, const Potentials& pot, const Vec& x0, double t_max,
                    const McOptions& opts, int intervals = 128);

struct DominationRow {
    double t = 0.0;
    double lhs = 0.0;     ///< |fk_expectation(omega0)|
    double rhs = 0.0;     ///< C(n,q) exp(-t r_min / 2) E[|omega0|(x^t)]
    double margin = 0.0;  ///< rhs - lhs
    double margin_stderr = 0.0;
    bool pass = false;    ///< margin - 2 stderr >= 0
};

struct DominationResult {
    std::vector<DominationRow> rows;
    double r_min = 0.0;
    double rho_min = 0.0;
    bool pass = false;
};

/// Requires rho_(q) >= 0 on boundary points sampled around x0.
DominationResult domination_check(const ManifoldModel& model, const FormField& omega0, const ScalarField& abs_omega0,
                                  const Vec& x0, const Mat& frame0, const std::vector<double>& times,
                                  const McOptions& opts, std::size_t boundary_samples = 1000);

struct OccupationResult {
    std::vector<double> times;
    std::vector<double> mean;
    std::vector<double> std_error;
    std::vector<double> increment_ratio;  ///< (occ(T_k) - occ(T_{k-1})) / occ(T_{k-1}), k >= 1
    bool transient = false;
};

inline constexpr double kTransienceThreshold = 0.2;

OccupationResult occupation_diagnostic(const ManifoldModel& model, const Vec& x0, const Vec& center, double radius,
                                       const std::vector<double>& times, const McOptions& opts);

/// Boundary points obtained by projecting Gaussian chart samples around x0.
std::vector<Vec> sample_boundary_points(const ManifoldModel& model, const Vec& x0, double spread, std::size_t count,
                                        std::uint64_t seed);

/// Canonical frame at x0 (the default frame0).
Mat default_frame(const ManifoldModel& model, const Vec& x0);

std::uint64_t inputs_digest(const ManifoldModel& model, const std::string& what, const Vec& x0, double t, int q,
                            const McOptions& opts);

}  // namespace formkac
