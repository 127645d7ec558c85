#pragma once

// Catalog of model Riemannian manifolds with boundary. Each model lives in one
// global chart; metric, curvature and boundary data are given analytically.

#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "formkac/exterior.hpp"
#include "formkac/types.hpp"

namespace formkac {

/// Boundary geometry at a boundary point, expressed in the model's canonical
/// orthonormal frame (see ManifoldModel::frame_at).
struct BoundaryData {
    Vec normal_chart;           ///< inward unit normal, chart components
    Vec normal;                 ///< inward unit normal, frame components
    Mat shape;                  ///< A X = -nabla_X nu, with A nu = 0; symmetric
    Vec principal_curvatures;   ///< eigenvalues of A on the boundary tangent space, ascending
};

/// Result of folding a point that left the manifold back inside.
struct Reflection {
    Vec point;
    double depth = 0.0;  ///< geodesic distance the unreflected point lay outside
};

struct ParamInfo {
    std::string name;
    double default_value;
    std::string range;
};

struct ModelInfo {
    std::string id;
    std::string description;
    int min_dim;
    int max_dim;
    std::vector<ParamInfo> params;
};

class ManifoldModel {
public:
    ManifoldModel(std::string name, int dim, std::map<std::string, double> params);
    virtual ~ManifoldModel() = default;
    ManifoldModel(const ManifoldModel&) = delete;
    ManifoldModel& operator=(const ManifoldModel&) = delete;

    const std::string& name() const { return name_; }
    int dim() const { return dim_; }
    const std::map<std::string, double>& params() const { return params_; }
    double param(const std::string& key) const;

    virtual std::string chart_domain() const = 0;
    /// Closure of the modelled region inside the chart.
    virtual bool contains(const Vec& x) const = 0;
    /// Points where the chart itself (metric, Christoffels) is defined.
    virtual bool in_chart(const Vec& x) const { return contains(x); }

    Mat metric_at(const Vec& x) const;
    /// Columns form the canonical h-orthonormal frame at x.
    Mat frame_at(const Vec& x) const;
    /// R_{ijkl} in the canonical frame at x.
    CurvatureTensor curvature_at(const Vec& x) const;

    virtual bool has_boundary() const { return true; }
    /// Geodesic distance to the boundary; +inf without boundary. Negative
    /// outside the region (where the chart extends).
    virtual double signed_boundary_distance(const Vec& x) const = 0;
    virtual Vec boundary_projection(const Vec& x) const = 0;
    BoundaryData boundary_data_at(const Vec& x) const;
    double rho_q_at(const Vec& x, int q) const;
    /// Least eigenvalue of the Weitzenbock term at x.
    double r_q_at(const Vec& x, int q) const;

    /// Sectional curvature when constant (all catalog models); empty otherwise.
    virtual std::optional<double> constant_curvature() const = 0;
    /// True when the chart metric is the Euclidean one.
    virtual bool is_flat() const { return false; }

    /// Christoffel contraction Gamma(v, w)^k = Gamma^k_{ij} v^i w^j.
    virtual Vec christoffel(const Vec& x, const Vec& v, const Vec& w) const = 0;
    /// Fold a point back across the boundary along the normal geodesic.
    /// Throws StepFailure when the point is too far out to fold.
    virtual Reflection reflect(const Vec& y) const;
    /// Chart bookkeeping after a step (periodic wrap, recentering).
    virtual void normalize_chart(Vec& /*x*/, Mat& /*frame*/) const {}

    /// A length scale of the chart at x used for boundary tolerances.
    virtual double chart_scale(const Vec& x) const;
    bool on_boundary(const Vec& x) const;

protected:
    virtual Mat metric_impl(const Vec& x) const = 0;
    virtual Mat frame_impl(const Vec& x) const = 0;
    virtual CurvatureTensor curvature_impl(const Vec& x) const;
    /// Boundary data at a boundary point, without precondition checks.
    virtual BoundaryData boundary_impl(const Vec& x) const = 0;
    void require_in_domain(const Vec& x, const char* who) const;

private:
    std::string name_;
    int dim_;
    std::map<std::string, double> params_;
};

using ModelPtr = std::shared_ptr<const ManifoldModel>;

/// Build a catalog model. Unknown ids, unknown parameters and out-of-range
/// values raise ArgumentError.
ModelPtr make_model(const std::string& id, int dim, const std::map<std::string, double>& params = {});

/// Catalog in stable order.
const std::vector<ModelInfo>& model_catalog();

/// A fixed interior point of the model, away from the boundary.
Vec reference_point(const ManifoldModel& model);

/// Sorted eigenvalues of A restricted to the orthogonal complement of nu.
Vec tangential_spectrum(const Mat& a, const Vec& nu);

}  // namespace formkac
