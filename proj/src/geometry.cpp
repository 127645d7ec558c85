#include "formkac/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace formkac {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt_point(const Vec& x)
{
    std::ostringstream os;
    os << "(";
    for (int i = 0; i < x.size(); ++i) {
        os << (i ? ", " : "") << x(i);
    }
    os << ")";
    return os.str();
}

}  // namespace

ManifoldModel::ManifoldModel(std::string name, int dim, std::map<std::string, double> params)
    : name_(std::move(name)), dim_(dim), params_(std::move(params))
{
}

double ManifoldModel::param(const std::string& key) const
{
    auto it = params_.find(key);
    if (it == params_.end()) {
        throw ArgumentError(name_ + ": no parameter '" + key + "'");
    }
    return it->second;
}

void ManifoldModel::require_in_domain(const Vec& x, const char* who) const
{
    if (x.size() != dim_) {
        throw ArgumentError(std::string(who) + ": point has wrong dimension");
    }
    if (!x.allFinite() || !in_chart(x) || !contains(x)) {
        throw DomainError(std::string(who) + ": point " + fmt_point(x) + " outside " + chart_domain());
    }
}

Mat ManifoldModel::metric_at(const Vec& x) const
{
    require_in_domain(x, "metric_at");
    return metric_impl(x);
}

Mat ManifoldModel::frame_at(const Vec& x) const
{
    if (x.size() != dim_ || !in_chart(x)) {
        throw DomainError("frame_at: point " + fmt_point(x) + " outside chart");
    }
    return frame_impl(x);
}

CurvatureTensor ManifoldModel::curvature_at(const Vec& x) const
{
    require_in_domain(x, "curvature_at");
    return curvature_impl(x);
}

CurvatureTensor ManifoldModel::curvature_impl(const Vec& /*x*/) const
{
    return CurvatureTensor::constant(dim_, constant_curvature().value_or(0.0));
}

double ManifoldModel::chart_scale(const Vec& /*x*/) const { return 1.0; }

bool ManifoldModel::on_boundary(const Vec& x) const
{
    return has_boundary() && std::abs(signed_boundary_distance(x)) < 1e-9 * chart_scale(x);
}

BoundaryData ManifoldModel::boundary_data_at(const Vec& x) const
{
    if (!has_boundary()) {
        throw PreconditionError("boundary_data_at: model " + name_ + " has no boundary");
    }
    if (x.size() != dim_ || !in_chart(x)) {
        throw DomainError("boundary_data_at: point outside chart");
    }
    if (!on_boundary(x)) {
        throw PreconditionError("boundary_data_at: point " + fmt_point(x) + " is not on the boundary");
    }
    return boundary_impl(x);
}

double ManifoldModel::rho_q_at(const Vec& x, int q) const
{
    if (q < 1 || q > dim_ - 1) {
        throw ArgumentError("rho_q_at: q must be in 1..n-1");
    }
    return rho_q(boundary_data_at(x).principal_curvatures, q);
}

double ManifoldModel::r_q_at(const Vec& x, int q) const
{
    if (q < 0 || q > dim_) {
        throw ArgumentError("r_q_at: q must be in 0..n");
    }
    if (auto c = constant_curvature()) {
        return q * (dim_ - q) * (*c);
    }
    return r_q_min(weitzenbock_matrix(curvature_at(x), q));
}

Reflection ManifoldModel::reflect(const Vec& y) const
{
    if (contains(y)) {
        return {y, 0.0};
    }
    throw StepFailure("reflect: model " + name_ + " cannot fold " + fmt_point(y));
}

Vec tangential_spectrum(const Mat& a, const Vec& nu)
{
    const int n = static_cast<int>(nu.size());
    if (n == 1) {
        return Vec(0);
    }
    // Orthonormal basis of nu-perp from a Householder reflection taking e_0 to nu.
    Eigen::HouseholderQR<Mat> qr(nu);
    const Mat q = qr.householderQ() * Mat::Identity(n, n);
    const Mat basis = q.rightCols(n - 1);
    const Mat compressed = basis.transpose() * a * basis;
    Eigen::SelfAdjointEigenSolver<Mat> es(compressed, Eigen::EigenvaluesOnly);
    Vec ev = es.eigenvalues();
    std::sort(ev.data(), ev.data() + ev.size());
    return ev;
}

namespace {

BoundaryData make_boundary(const Vec& normal_chart, const Vec& normal, const Mat& shape)
{
    BoundaryData bd;
    bd.normal_chart = normal_chart;
    bd.normal = normal;
    bd.shape = 0.5 * (shape + shape.transpose());
    bd.principal_curvatures = tangential_spectrum(bd.shape, normal);
    return bd;
}

// ---------------------------------------------------------------------------
// Flat models

class FlatModel : public ManifoldModel {
public:
    using ManifoldModel::ManifoldModel;
    std::optional<double> constant_curvature() const override { return 0.0; }
    bool is_flat() const override { return true; }
    Vec christoffel(const Vec& x, const Vec&, const Vec&) const override { return Vec::Zero(x.size()); }

protected:
    Mat metric_impl(const Vec&) const override { return Mat::Identity(dim(), dim()); }
    Mat frame_impl(const Vec&) const override { return Mat::Identity(dim(), dim()); }
};

class Euclidean final : public FlatModel {
public:
    explicit Euclidean(int n) : FlatModel("euclidean", n, {}) {}
    std::string chart_domain() const override { return "R^n"; }
    bool contains(const Vec&) const override { return true; }
    bool has_boundary() const override { return false; }
    double signed_boundary_distance(const Vec&) const override { return kInf; }
    Vec boundary_projection(const Vec&) const override
    {
        throw PreconditionError("euclidean space has no boundary");
    }

protected:
    BoundaryData boundary_impl(const Vec&) const override
    {
        throw PreconditionError("euclidean space has no boundary");
    }
};

// Half-space {x_n >= 0}; with n = 1 this is the half-line.
class HalfSpace final : public FlatModel {
public:
    HalfSpace(const std::string& name, int n) : FlatModel(name, n, {}) {}
    std::string chart_domain() const override { return "{x : x_n >= 0}"; }
    bool contains(const Vec& x) const override { return x(dim() - 1) >= -1e-12; }
    bool in_chart(const Vec&) const override { return true; }
    double signed_boundary_distance(const Vec& x) const override { return x(dim() - 1); }
    Vec boundary_projection(const Vec& x) const override
    {
        Vec p = x;
        p(dim() - 1) = 0.0;
        return p;
    }
    Reflection reflect(const Vec& y) const override
    {
        Reflection r{y, 0.0};
        const double s = y(dim() - 1);
        if (s < 0.0) {
            r.point(dim() - 1) = -s;
            r.depth = -s;
        }
        return r;
    }

protected:
    BoundaryData boundary_impl(const Vec&) const override
    {
        const Vec nu = Vec::Unit(dim(), dim() - 1);
        return make_boundary(nu, nu, Mat::Zero(dim(), dim()));
    }
};

// Slab {0 <= x_n <= a}, optionally with the tangential coordinates periodic.
class Slab final : public FlatModel {
public:
    Slab(int n, double a, double period)
        : FlatModel("slab", n, {{"a", a}, {"period", period}}), a_(a), period_(period)
    {
    }
    std::string chart_domain() const override { return "{x : 0 <= x_n <= a}"; }
    bool contains(const Vec& x) const override
    {
        const double s = x(dim() - 1);
        return s >= -1e-12 && s <= a_ + 1e-12;
    }
    bool in_chart(const Vec&) const override { return true; }
    double signed_boundary_distance(const Vec& x) const override
    {
        const double s = x(dim() - 1);
        return std::min(s, a_ - s);
    }
    Vec boundary_projection(const Vec& x) const override
    {
        Vec p = x;
        p(dim() - 1) = (x(dim() - 1) < 0.5 * a_) ? 0.0 : a_;
        return p;
    }
    Reflection reflect(const Vec& y) const override
    {
        Reflection r{y, 0.0};
        double s = y(dim() - 1);
        for (int fold = 0; fold < 4 && (s < 0.0 || s > a_); ++fold) {
            if (s < 0.0) {
                r.depth += -s;
                s = -s;
            } else {
                r.depth += s - a_;
                s = 2.0 * a_ - s;
            }
        }
        if (s < 0.0 || s > a_) {
            throw StepFailure("slab: step overshoots the slab width");
        }
        r.point(dim() - 1) = s;
        return r;
    }
    void normalize_chart(Vec& x, Mat&) const override
    {
        if (period_ > 0.0) {
            for (int i = 0; i + 1 < dim(); ++i) {
                x(i) -= period_ * std::floor(x(i) / period_);
            }
        }
    }
    double chart_scale(const Vec&) const override { return a_; }

protected:
    BoundaryData boundary_impl(const Vec& x) const override
    {
        const double sign = (x(dim() - 1) < 0.5 * a_) ? 1.0 : -1.0;
        const Vec nu = sign * Vec::Unit(dim(), dim() - 1);
        return make_boundary(nu, nu, Mat::Zero(dim(), dim()));
    }

private:
    double a_;
    double period_;
};

class Ball final : public FlatModel {
public:
    Ball(int n, double r0) : FlatModel("ball", n, {{"r0", r0}}), r0_(r0) {}
    std::string chart_domain() const override { return "{x : |x| <= r0}"; }
    bool contains(const Vec& x) const override { return x.norm() <= r0_ * (1.0 + 1e-12); }
    bool in_chart(const Vec&) const override { return true; }
    double signed_boundary_distance(const Vec& x) const override { return r0_ - x.norm(); }
    Vec boundary_projection(const Vec& x) const override
    {
        const double r = x.norm();
        return (r > 0.0) ? Vec(x * (r0_ / r)) : Vec(r0_ * Vec::Unit(dim(), 0));
    }
    Reflection reflect(const Vec& y) const override
    {
        const double r = y.norm();
        if (r <= r0_) {
            return {y, 0.0};
        }
        const double rr = 2.0 * r0_ - r;
        if (rr < 0.0) {
            throw StepFailure("ball: step overshoots the diameter");
        }
        return {Vec(y * (rr / r)), r - r0_};
    }
    double chart_scale(const Vec&) const override { return r0_; }

protected:
    BoundaryData boundary_impl(const Vec& x) const override
    {
        const Vec u = x.normalized();
        const Vec nu = -u;
        const Mat a = (Mat::Identity(dim(), dim()) - u * u.transpose()) / r0_;
        return make_boundary(nu, nu, a);
    }

private:
    double r0_;
};

// ---------------------------------------------------------------------------
// Conformally flat charts h = exp(2 phi) delta.

class ConformalModel : public ManifoldModel {
public:
    using ManifoldModel::ManifoldModel;

    virtual double phi(const Vec& x) const = 0;
    virtual Vec grad_phi(const Vec& x) const = 0;

    Vec christoffel(const Vec& x, const Vec& v, const Vec& w) const override
    {
        const Vec g = grad_phi(x);
        return v * w.dot(g) + w * v.dot(g) - g * v.dot(w);
    }

protected:
    Mat metric_impl(const Vec& x) const override
    {
        return std::exp(2.0 * phi(x)) * Mat::Identity(dim(), dim());
    }
    Mat frame_impl(const Vec& x) const override
    {
        return std::exp(-phi(x)) * Mat::Identity(dim(), dim());
    }
};

// Stereographic chart of the unit sphere from the south pole: phi = log(2/(1+|x|^2)).
class StereographicModel : public ConformalModel {
public:
    using ConformalModel::ConformalModel;
    double phi(const Vec& x) const override { return std::log(2.0 / (1.0 + x.squaredNorm())); }
    Vec grad_phi(const Vec& x) const override { return -2.0 * x / (1.0 + x.squaredNorm()); }
    std::optional<double> constant_curvature() const override { return 1.0; }
    bool in_chart(const Vec& x) const override { return x.allFinite(); }
};

// Geodesic ball of radius theta0 about the north pole of the unit sphere.
class SphereCap final : public StereographicModel {
public:
    SphereCap(int n, double theta0)
        : StereographicModel("sphere_cap", n, {{"theta0", theta0}}), theta0_(theta0),
          chart_radius_(std::tan(0.5 * theta0))
    {
    }
    std::string chart_domain() const override { return "{x : |x| <= tan(theta0/2)} (stereographic)"; }
    bool contains(const Vec& x) const override { return x.norm() <= chart_radius_ * (1.0 + 1e-12); }
    double signed_boundary_distance(const Vec& x) const override
    {
        return theta0_ - 2.0 * std::atan(x.norm());
    }
    Vec boundary_projection(const Vec& x) const override
    {
        const double r = x.norm();
        const Vec u = (r > 0.0) ? Vec(x / r) : Vec(Vec::Unit(dim(), 0));
        return chart_radius_ * u;
    }
    Reflection reflect(const Vec& y) const override
    {
        const double r = y.norm();
        const double theta = 2.0 * std::atan(r);
        if (theta <= theta0_) {
            return {y, 0.0};
        }
        const double reflected = 2.0 * theta0_ - theta;
        if (reflected < 0.0) {
            throw StepFailure("sphere_cap: step overshoots the cap");
        }
        return {Vec(y * (std::tan(0.5 * reflected) / r)), theta - theta0_};
    }
    double chart_scale(const Vec&) const override { return theta0_; }

protected:
    BoundaryData boundary_impl(const Vec& x) const override
    {
        const Vec u = x.normalized();
        const Vec nu = -u;
        const Mat a = (Mat::Identity(dim(), dim()) - u * u.transpose()) / std::tan(theta0_);
        return make_boundary(nu * std::exp(-phi(x)), nu, a);
    }

private:
    double theta0_;
    double chart_radius_;
};

// The closed round sphere. The stereographic chart misses the south pole, so
// points beyond |x| = 1 are moved to the antipodal chart by the isometry
// x -> S x / |x|^2, with S flipping the first coordinate to keep orientation.
class Sphere final : public StereographicModel {
public:
    explicit Sphere(int n) : StereographicModel("sphere", n, {}) {}
    std::string chart_domain() const override { return "R^n (stereographic, recentred)"; }
    bool contains(const Vec& x) const override { return x.allFinite(); }
    bool has_boundary() const override { return false; }
    double signed_boundary_distance(const Vec&) const override { return kInf; }
    Vec boundary_projection(const Vec&) const override
    {
        throw PreconditionError("sphere has no boundary");
    }
    void normalize_chart(Vec& x, Mat& frame) const override
    {
        const double r2 = x.squaredNorm();
        if (r2 <= 1.0) {
            return;
        }
        const Vec u = x / std::sqrt(r2);
        Mat jac = (Mat::Identity(dim(), dim()) - 2.0 * u * u.transpose()) / r2;
        jac.row(0) *= -1.0;
        frame = jac * frame;
        x /= r2;
        x(0) = -x(0);
    }

protected:
    BoundaryData boundary_impl(const Vec&) const override
    {
        throw PreconditionError("sphere has no boundary");
    }
};

// Upper half-space chart of hyperbolic space: phi = -log x_n.
class HalfSpaceHyperbolic : public ConformalModel {
public:
    using ConformalModel::ConformalModel;
    double phi(const Vec& x) const override { return -std::log(x(dim() - 1)); }
    Vec grad_phi(const Vec& x) const override
    {
        return -Vec::Unit(dim(), dim() - 1) / x(dim() - 1);
    }
    std::optional<double> constant_curvature() const override { return -1.0; }
    bool in_chart(const Vec& x) const override { return x.allFinite() && x(dim() - 1) > 0.0; }
    double chart_scale(const Vec&) const override { return 1.0; }
};

class Hyperbolic final : public HalfSpaceHyperbolic {
public:
    explicit Hyperbolic(int n) : HalfSpaceHyperbolic("hyperbolic", n, {}) {}
    std::string chart_domain() const override { return "{x : x_n > 0} (upper half-space)"; }
    bool contains(const Vec& x) const override { return in_chart(x); }
    bool has_boundary() const override { return false; }
    double signed_boundary_distance(const Vec&) const override { return kInf; }
    Vec boundary_projection(const Vec&) const override
    {
        throw PreconditionError("hyperbolic space has no boundary");
    }

protected:
    BoundaryData boundary_impl(const Vec&) const override
    {
        throw PreconditionError("hyperbolic space has no boundary");
    }
};

// Tube of radius r about the geodesic {x' = 0} (the x_n axis) in the upper
// half-space chart. Distance to the axis is asinh(|x'| / x_n), so the tube is
// the cone |x'| <= x_n sinh r.
class HyperbolicTube final : public HalfSpaceHyperbolic {
public:
    HyperbolicTube(int n, double r)
        : HalfSpaceHyperbolic("hyperbolic_tube", n, {{"r", r}}), r_(r), slope_(std::sinh(r))
    {
    }
    std::string chart_domain() const override { return "{x : |x'| <= x_n sinh(r), x_n > 0} (upper half-space)"; }
    bool contains(const Vec& x) const override
    {
        return in_chart(x) && axis_distance(x) <= r_ * (1.0 + 1e-12);
    }
    double signed_boundary_distance(const Vec& x) const override { return r_ - axis_distance(x); }
    Vec boundary_projection(const Vec& x) const override
    {
        // Normal geodesics to the axis are arcs |x| = const.
        const double big_r = x.norm();
        const double alpha = std::atan(slope_);
        Vec p(dim());
        p.head(dim() - 1) = big_r * std::sin(alpha) * radial_unit(x);
        p(dim() - 1) = big_r * std::cos(alpha);
        return p;
    }
    Reflection reflect(const Vec& y) const override
    {
        if (!in_chart(y)) {
            throw StepFailure("hyperbolic_tube: step left the chart");
        }
        const double d = axis_distance(y);
        if (d <= r_) {
            return {y, 0.0};
        }
        const double reflected = 2.0 * r_ - d;
        if (reflected < 0.0) {
            throw StepFailure("hyperbolic_tube: step overshoots the tube");
        }
        const double big_r = y.norm();
        const double alpha = std::atan(std::sinh(reflected));
        Vec p(dim());
        p.head(dim() - 1) = big_r * std::sin(alpha) * radial_unit(y);
        p(dim() - 1) = big_r * std::cos(alpha);
        return {p, d - r_};
    }
    double chart_scale(const Vec&) const override { return r_; }

protected:
    BoundaryData boundary_impl(const Vec& x) const override
    {
        const int n = dim();
        const Vec u = radial_unit(x);
        const double d = axis_distance(x);
        Vec nu(n), tau(n);
        nu.head(n - 1) = -u / std::cosh(d);
        nu(n - 1) = std::tanh(d);
        tau.head(n - 1) = u * std::tanh(d);
        tau(n - 1) = 1.0 / std::cosh(d);
        const Mat id = Mat::Identity(n, n);
        const Mat a = std::tanh(r_) * tau * tau.transpose() +
                      (1.0 / std::tanh(r_)) * (id - nu * nu.transpose() - tau * tau.transpose());
        return make_boundary(nu * x(n - 1), nu, a);
    }

private:
    double axis_distance(const Vec& x) const
    {
        return std::asinh(x.head(dim() - 1).norm() / x(dim() - 1));
    }
    Vec radial_unit(const Vec& x) const
    {
        const Vec xp = x.head(dim() - 1);
        const double len = xp.norm();
        return (len > 0.0) ? Vec(xp / len) : Vec(Vec::Unit(dim() - 1, 0));
    }

    double r_;
    double slope_;
};

double get_param(const std::map<std::string, double>& params, const std::string& key, double fallback)
{
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

}  // namespace

const std::vector<ModelInfo>& model_catalog()
{
    static const std::vector<ModelInfo> catalog = {
        {"euclidean", "flat R^n, no boundary", 2, 6, {}},
        {"half_line", "flat half-line [0, inf)", 1, 1, {}},
        {"half_space", "flat half-space {x_n >= 0}", 2, 6, {}},
        {"slab", "flat slab {0 <= x_n <= a}, optionally periodic in x_1..x_{n-1}", 2, 6,
         {{"a", 1.0, "(0, inf)"}, {"period", 0.0, "[0, inf), 0 = not periodic"}}},
        {"ball", "flat ball of radius r0", 2, 6, {{"r0", 1.0, "(0, inf)"}}},
        {"sphere_cap", "geodesic cap of angular radius theta0 on the unit sphere", 2, 6,
         {{"theta0", std::numbers::pi / 3.0, "(0, pi)"}}},
        {"sphere", "closed unit sphere", 2, 6, {}},
        {"hyperbolic", "hyperbolic space of curvature -1", 2, 6, {}},
        {"hyperbolic_tube", "tube of radius r about a geodesic in hyperbolic space", 2, 6,
         {{"r", 0.8, "(0, inf)"}}},
    };
    return catalog;
}

Vec reference_point(const ManifoldModel& model)
{
    const int n = model.dim();
    Vec x = Vec::Zero(n);
    const std::string& id = model.name();
    if (id == "half_line" || id == "half_space") {
        x(n - 1) = 0.5;
    } else if (id == "slab") {
        x(n - 1) = 0.5 * model.param("a");
    } else if (id == "hyperbolic" || id == "hyperbolic_tube") {
        x(n - 1) = 1.0;
    }
    return x;
}

ModelPtr make_model(const std::string& id, int dim, const std::map<std::string, double>& params)
{
    const auto& catalog = model_catalog();
    auto it = std::find_if(catalog.begin(), catalog.end(), [&](const ModelInfo& m) { return m.id == id; });
    if (it == catalog.end()) {
        throw ArgumentError("unknown model id '" + id + "'");
    }
    if (dim < it->min_dim || dim > it->max_dim) {
        throw ArgumentError("model " + id + ": dim must be in " + std::to_string(it->min_dim) + ".." +
                            std::to_string(it->max_dim));
    }
    for (const auto& [key, value] : params) {
        const bool known = std::any_of(it->params.begin(), it->params.end(),
                                       [&](const ParamInfo& p) { return p.name == key; });
        if (!known) {
            throw ArgumentError("model " + id + ": unknown parameter '" + key + "'");
        }
        if (!std::isfinite(value)) {
            throw ArgumentError("model " + id + ": parameter '" + key + "' must be finite");
        }
    }
    auto positive = [&](const std::string& key, double fallback) {
        const double v = get_param(params, key, fallback);
        if (!(v > 0.0)) {
            throw ArgumentError("model " + id + ": parameter '" + key + "' must be positive");
        }
        return v;
    };

    if (id == "euclidean") {
        return std::make_shared<Euclidean>(dim);
    }
    if (id == "half_line" || id == "half_space") {
        return std::make_shared<HalfSpace>(id, dim);
    }
    if (id == "slab") {
        const double period = get_param(params, "period", 0.0);
        if (period < 0.0) {
            throw ArgumentError("model slab: parameter 'period' must be >= 0");
        }
        return std::make_shared<Slab>(dim, positive("a", 1.0), period);
    }
    if (id == "ball") {
        return std::make_shared<Ball>(dim, positive("r0", 1.0));
    }
    if (id == "sphere_cap") {
        const double theta0 = positive("theta0", std::numbers::pi / 3.0);
        if (theta0 >= std::numbers::pi) {
            throw ArgumentError("model sphere_cap: theta0 must be < pi");
        }
        return std::make_shared<SphereCap>(dim, theta0);
    }
    if (id == "sphere") {
        return std::make_shared<Sphere>(dim);
    }
    if (id == "hyperbolic") {
        return std::make_shared<Hyperbolic>(dim);
    }
    return std::make_shared<HyperbolicTube>(dim, positive("r", 0.8));
}

}  // namespace formkac
