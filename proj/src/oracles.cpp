#include "formkac/oracles.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "formkac/parallel.hpp"

namespace formkac {

double halfspace_kernel(KernelKind kind, double t, double xn, double yn)
{
    if (!(t > 0.0)) {
        throw ArgumentError("halfspace_kernel: t must be positive");
    }
    if (xn < 0.0 || yn < 0.0) {
        throw ArgumentError("halfspace_kernel: points must lie in the half-space");
    }
    const double c = 1.0 / std::sqrt(2.0 * std::numbers::pi * t);
    const double direct = c * std::exp(-(xn - yn) * (xn - yn) / (2.0 * t));
    const double image = c * std::exp(-(xn + yn) * (xn + yn) / (2.0 * t));
    return kind == KernelKind::neumann ? direct + image : direct - image;
}

double image_method_evolve(KernelKind kind, const std::function<double(double)>& g, double t, double xn)
{
    const double hi = xn + 14.0 * std::sqrt(t);
    const double lo = std::max(0.0, xn - 14.0 * std::sqrt(t));
    auto f = [&](double y) { return halfspace_kernel(kind, t, xn, y) * g(y); };
    // The image term is negligible beyond 14 sqrt(t) from the origin; the
    // direct term beyond 14 sqrt(t) from xn.
    double total = integrate(f, lo, hi, 64, 8);
    if (lo > 0.0) {
        const double top = std::min(lo, 14.0 * std::sqrt(t));
        total += integrate(f, 0.0, top, 32, 8);
    }
    return total;
}

const GaussRule& gauss_legendre(int order)
{
    if (order < 1 || order > 128) {
        throw ArgumentError("gauss_legendre: order must be in 1..128");
    }
    static std::mutex mutex;
    static std::map<int, GaussRule> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(order);
    if (it != cache.end()) {
        return it->second;
    }
    // Golub-Welsch: eigen-decomposition of the Jacobi matrix.
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(order, order);
    for (int k = 1; k < order; ++k) {
        const double b = k / std::sqrt(4.0 * k * k - 1.0);
        jac(k, k - 1) = jac(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
    GaussRule rule;
    for (int k = 0; k < order; ++k) {
        rule.nodes.push_back(es.eigenvalues()(k));
        const double v = es.eigenvectors()(0, k);
        rule.weights.push_back(2.0 * v * v);
    }
    return cache.emplace(order, std::move(rule)).first->second;
}

double integrate(const std::function<double(double)>& f, double a, double b, int panels, int order)
{
    const GaussRule& rule = gauss_legendre(order);
    const double h = (b - a) / panels;
    KahanSum sum;
    for (int p = 0; p < panels; ++p) {
        const double mid = a + (p + 0.5) * h;
        for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
            sum.add(0.5 * h * rule.weights[k] * f(mid + 0.5 * h * rule.nodes[k]));
        }
    }
    return sum.value();
}

std::vector<double> cell_centres(double length, int cells)
{
    std::vector<double> g(static_cast<std::size_t>(cells));
    const double dx = length / cells;
    for (int i = 0; i < cells; ++i) {
        g[static_cast<std::size_t>(i)] = (i + 0.5) * dx;
    }
    return g;
}

namespace {

// Ghost value beyond a boundary cell, for the tagged condition.
double ghost_factor(BoundaryCondition bc, double c, double dx)
{
    switch (bc) {
    case BoundaryCondition::neumann:
        return 1.0;
    case BoundaryCondition::dirichlet:
        return -1.0;
    case BoundaryCondition::robin:
        return (1.0 - 0.5 * c * dx) / (1.0 + 0.5 * c * dx);
    }
    return 1.0;
}

// Solves a tridiagonal system in place (Thomas algorithm).
void thomas(std::vector<double> a, std::vector<double> b, std::vector<double> c, std::vector<double>& d)
{
    const std::size_t n = d.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double m = a[i] / b[i - 1];
        b[i] -= m * c[i - 1];
        d[i] -= m * d[i - 1];
    }
    d[n - 1] /= b[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) {
        d[i] = (d[i] - c[i] * d[i + 1]) / b[i];
    }
}

}  // namespace

GridField pde_solve_1d(const GridField& field, double t, int steps)
{
    const std::size_t n = field.grid.size();
    if (n < 3 || field.values.size() != n) {
        throw ArgumentError("pde_solve_1d: grid and values must have the same length >= 3");
    }
    if (!(t >= 0.0) || steps < 1) {
        throw ArgumentError("pde_solve_1d: need t >= 0 and steps >= 1");
    }
    const double dx = field.grid[1] - field.grid[0];
    for (std::size_t i = 1; i < n; ++i) {
        if (std::abs(field.grid[i] - field.grid[i - 1] - dx) > 1e-9 * dx) {
            throw ArgumentError("pde_solve_1d: grid must be uniform");
        }
    }
    if (std::abs(field.grid[0] - 0.5 * dx) > 1e-9 * dx) {
        throw ArgumentError("pde_solve_1d: grid must be cell-centred from 0");
    }
    for (double v : field.values) {
        if (!std::isfinite(v)) {
            throw ArgumentError("pde_solve_1d: values must be finite");
        }
    }
    const double dt = t / steps;
    if (dt > dx * dx * (1.0 + 1e-12)) {
        throw ArgumentError("pde_solve_1d: time step violates dt <= dx^2");
    }

    // Operator L u = (1/2) laplacian, as a tridiagonal (lower, diag, upper).
    std::vector<double> lo(n, 0.0), di(n, 0.0), up(n, 0.0);
    const double gf = ghost_factor(field.bc, field.robin_c, dx);
    if (field.geometry == GridGeometry::half_line) {
        const double k = 0.5 / (dx * dx);
        for (std::size_t i = 0; i < n; ++i) {
            lo[i] = (i > 0) ? k : 0.0;
            up[i] = (i + 1 < n) ? k : 0.0;
            di[i] = -2.0 * k;
        }
        di[0] += k * gf;            // ghost at -dx/2 carries the boundary condition
        di[n - 1] += k;             // no flux at the far end
    } else {
        const int d = field.radial_dim;
        if (d < 1) {
            throw ArgumentError("pde_solve_1d: radial_dim must be positive");
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double rm = i * dx;
            const double rp = (i + 1) * dx;
            const double vol = (std::pow(rp, d) - std::pow(rm, d)) / d;
            const double am = std::pow(rm, d - 1);
            const double ap = std::pow(rp, d - 1);
            const double k = 0.5 / (dx * vol);
            lo[i] = (i > 0) ? k * am : 0.0;
            up[i] = (i + 1 < n) ? k * ap : 0.0;
            di[i] = -k * ((i > 0 ? am : 0.0) + ap);
            if (i + 1 == n) {
                di[i] += k * ap * gf;
            }
        }
    }

    std::vector<double> u = field.values;
    std::vector<double> a(n), b(n), c(n), rhs(n);
    for (std::size_t i = 0; i < n; ++i) {
        a[i] = -0.5 * dt * lo[i];
        b[i] = 1.0 - 0.5 * dt * di[i];
        c[i] = -0.5 * dt * up[i];
    }
    for (int s = 0; s < steps; ++s) {
        for (std::size_t i = 0; i < n; ++i) {
            double lu = di[i] * u[i];
            if (i > 0) {
                lu += lo[i] * u[i - 1];
            }
            if (i + 1 < n) {
                lu += up[i] * u[i + 1];
            }
            rhs[i] = u[i] + 0.5 * dt * lu;
        }
        thomas(a, b, c, rhs);
        u.swap(rhs);
    }
    GridField out = field;
    out.values = std::move(u);
    return out;
}

double sample_grid(const GridField& field, double x)
{
    const auto& g = field.grid;
    if (x <= g.front()) {
        return field.values.front();
    }
    if (x >= g.back()) {
        return field.values.back();
    }
    const double dx = g[1] - g[0];
    const auto i = static_cast<std::size_t>((x - g.front()) / dx);
    const double w = (x - g[i]) / dx;
    return (1.0 - w) * field.values[i] + w * field.values[i + 1];
}

namespace {

// Chart (coordinate) components of a frame-expressed form at x.
FVec chart_components(const ManifoldModel& model, const FormField& omega, const Vec& x)
{
    const FVec w = omega.eval(x);
    if (model.is_flat()) {
        return w;
    }
    const Mat e = model.frame_at(x);
    return compound_matrix(Mat(e.inverse()), omega.degree).transpose() * w;
}

}  // namespace

FVec exterior_derivative_fd(const ManifoldModel& model, const FormField& omega, const Vec& x, double h)
{
    const int n = model.dim();
    const int q = omega.degree;
    if (q < 0 || q >= n) {
        throw ArgumentError("exterior_derivative_fd: degree must be in 0..n-1");
    }
    const auto& src = ExteriorBasis::get(n, q);
    const auto& dst = ExteriorBasis::get(n, q + 1);
    // Central differences of chart components along each coordinate.
    std::vector<FVec> deriv(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        Vec xp = x, xm = x;
        xp(i) += h;
        xm(i) -= h;
        if (!model.in_chart(xp) || !model.in_chart(xm)) {
            throw DomainError("exterior_derivative_fd: stencil leaves the chart");
        }
        deriv[static_cast<std::size_t>(i)] =
            (chart_components(model, omega, xp) - chart_components(model, omega, xm)) / (2.0 * h);
    }
    FVec dw = FVec::Zero(dst.size());
    for (int k = 0; k < dst.size(); ++k) {
        const std::uint32_t mask = dst.mask(k);
        int pos = 0;
        for (int i = 0; i < n; ++i) {
            if (!(mask & (1u << i))) {
                continue;
            }
            const int j = src.index(mask & ~(1u << i));
            const double sign = (pos % 2 == 0) ? 1.0 : -1.0;
            dw(k) += sign * deriv[static_cast<std::size_t>(i)](j);
            ++pos;
        }
    }
    if (model.is_flat()) {
        return dw;
    }
    return compound_matrix(model.frame_at(x), q + 1).transpose() * dw;
}

FVec codifferential_fd(const ManifoldModel& model, const FormField& omega, const Vec& x, double h)
{
    const int n = model.dim();
    const int q = omega.degree;
    if (q < 1 || q > n) {
        throw ArgumentError("codifferential_fd: degree must be in 1..n");
    }
    const FormField star{n - q, [&](const Vec& y) { return hodge_star(omega.eval(y), n, q); }, "*" + omega.name};
    const FVec d_star = exterior_derivative_fd(model, star, x, h);
    const double sign = ((n * (q + 1) + 1) % 2 == 0) ? 1.0 : -1.0;
    return sign * hodge_star(d_star, n, n - q + 1);
}

IntforResult intfor_check(const ManifoldModel& model, const ScalarFunction& f, const FormField& omega,
                          const BallQuadrature& quad)
{
    if (model.name() != "ball" || model.dim() != 3) {
        throw ArgumentError("intfor_check: implemented for the flat ball in dimension 3");
    }
    const int q = omega.degree;
    if (q < 1 || q > 3) {
        throw ArgumentError("intfor_check: degree must be in 1..3");
    }
    const double r0 = model.param("r0");
    const GaussRule& gr = gauss_legendre(quad.radial);
    const GaussRule& gp = gauss_legendre(quad.polar);
    const double pi = std::numbers::pi;
    const double dphi = 2.0 * pi / quad.azimuthal;

    auto point = [](double r, double th, double ph) {
        Vec x(3);
        x << r * std::sin(th) * std::cos(ph), r * std::sin(th) * std::sin(ph), r * std::cos(th);
        return x;
    };

    KahanSum lhs, inner, bc, bf;
    for (std::size_t ip = 0; ip < gp.nodes.size(); ++ip) {
        const double th = 0.5 * pi * (gp.nodes[ip] + 1.0);
        const double wth = 0.5 * pi * gp.weights[ip] * std::sin(th);
        for (int ia = 0; ia < quad.azimuthal; ++ia) {
            const double ph = (ia + 0.5) * dphi;
            for (std::size_t ir = 0; ir < gr.nodes.size(); ++ir) {
                const double r = 0.5 * r0 * (gr.nodes[ir] + 1.0);
                const double w = 0.5 * r0 * gr.weights[ir] * r * r * wth * dphi;
                const Vec x = point(r, th, ph);
                const FVec om = omega.eval(x);
                const Vec g = f.gradient(x);
                const Mat hess = f.hessian(x);
                const FVec dw = (q < 3) ? exterior_derivative_fd(model, omega, x, quad.fd_step) : FVec();
                const FVec ds = codifferential_fd(model, omega, x, quad.fd_step);
                double l = ds.dot(interior_matrix(g, q) * om);
                if (q < 3) {
                    l += dw.dot(wedge_matrix(g, q) * om);
                }
                lhs.add(w * l);
                const double lap0 = -hess.trace();
                inner.add(w * (om.dot(derivation_matrix(hess, q) * om) + 0.5 * om.squaredNorm() * lap0));
            }
            // Boundary sphere r = r0 with inward normal -x / r0.
            const Vec x = point(r0, th, ph);
            const Vec nu = -x / r0;
            const double w = r0 * r0 * wth * dphi;
            const FVec om = omega.eval(x);
            const Vec g = f.gradient(x);
            bc.add(w * (interior_matrix(g, q) * om).dot(interior_matrix(nu, q) * om));
            bf.add(w * 0.5 * om.squaredNorm() * g.dot(nu));
        }
    }
    IntforResult res;
    res.lhs = lhs.value();
    res.interior = inner.value();
    res.boundary_contraction = bc.value();
    res.boundary_flux = bf.value();
    res.rhs = res.interior + res.boundary_contraction - res.boundary_flux;
    res.residual = std::abs(res.lhs - res.rhs);
    res.residual_as_printed = std::abs(res.lhs - (res.interior - res.boundary_contraction - res.boundary_flux));
    return res;
}

double hyperbolic_distance(const Vec& x, const Vec& y)
{
    const int n = static_cast<int>(x.size());
    const double arg = 1.0 + (x - y).squaredNorm() / (2.0 * x(n - 1) * y(n - 1));
    return std::acosh(std::max(arg, 1.0));
}

std::vector<DxRow> dx_inequality_eval(const ManifoldModel& model, int p, double kappa, const FormField& omega,
                                      const ChartBox& support, const std::vector<Vec>& centres, int nodes_per_dim,
                                      double fd_step)
{
    const int n = model.dim();
    const auto curv = model.constant_curvature();
    if (model.has_boundary() || !curv || model.is_flat() || model.name() != "hyperbolic") {
        throw ArgumentError("dx_inequality_eval: needs the hyperbolic model");
    }
    // Sectional curvature K = c must satisfy -1 <= K <= -kappa.
    if (!(kappa > 0.0) || *curv < -1.0 || *curv > -kappa) {
        throw PreconditionError("dx_inequality_eval: model is not kappa-pinched");
    }
    if (p < 1 || p >= n || omega.degree != p) {
        throw ArgumentError("dx_inequality_eval: form degree must equal p in 1..n-1");
    }
    if (support.lo.size() != n || support.hi.size() != n || support.lo(n - 1) <= 0.0) {
        throw ArgumentError("dx_inequality_eval: bad support box");
    }

    struct Node {
        Vec x;
        double w;
        FVec om;
    };
    const GaussRule& rule = gauss_legendre(nodes_per_dim);
    std::vector<Node> nodes;
    double d_norm2 = 0.0, s_norm2 = 0.0, norm2 = 0.0;
    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    const auto total = static_cast<std::size_t>(std::pow(nodes_per_dim, n));
    for (std::size_t flat = 0; flat < total; ++flat) {
        std::size_t rem = flat;
        Vec x(n);
        double w = 1.0;
        for (int i = 0; i < n; ++i) {
            const auto k = rem % static_cast<std::size_t>(nodes_per_dim);
            rem /= static_cast<std::size_t>(nodes_per_dim);
            const double half = 0.5 * (support.hi(i) - support.lo(i));
            x(i) = support.lo(i) + half * (rule.nodes[k] + 1.0);
            w *= half * rule.weights[k];
        }
        w *= std::pow(x(n - 1), -n);  // Riemannian volume y^-n
        const FVec om = omega.eval(x);
        const FVec dw = exterior_derivative_fd(model, omega, x, fd_step);
        const FVec ds = codifferential_fd(model, omega, x, fd_step);
        d_norm2 += w * dw.squaredNorm();
        s_norm2 += w * ds.squaredNorm();
        norm2 += w * om.squaredNorm();
        if (om.squaredNorm() > 0.0) {
            nodes.push_back({x, w, om});
        }
    }
    const double norm = std::sqrt(norm2);
    const double sk = std::sqrt(kappa);
    auto c_of = [&](double d) { return 0.5 * ((n - p - 1) * sk / std::tanh(sk * d) - p / std::tanh(d)); };

    std::vector<DxRow> rows;
    for (const Vec& xc : centres) {
        if (xc.size() != n || !model.in_chart(xc)) {
            throw DomainError("dx_inequality_eval: centre outside the chart");
        }
        if ((xc.array() >= support.lo.array()).all() && (xc.array() <= support.hi.array()).all()) {
            throw PreconditionError("dx_inequality_eval: centre lies in the support box");
        }
        DxRow row;
        row.distance = std::numeric_limits<double>::infinity();
        double rhs = 0.0, interior = 0.0;
        for (const Node& nd : nodes) {
            const double d = hyperbolic_distance(xc, nd.x);
            row.distance = std::min(row.distance, d);
            rhs += nd.w * c_of(d) * nd.om.squaredNorm();
            // f = -d_x: Hess f = -coth(d) (I - g g^T) in the frame, g = grad d_x.
            const double y = nd.x(n - 1);
            const double yc = xc(n - 1);
            Vec dcosh = (nd.x - xc) / (yc * y);
            dcosh(n - 1) -= (nd.x - xc).squaredNorm() / (2.0 * yc * y * y);
            const Vec g = (y * dcosh / std::sinh(d)).normalized();
            const double ct = 1.0 / std::tanh(d);
            const Mat hess = -ct * (Mat::Identity(n, n) - g * g.transpose());
            interior += nd.w * (nd.om.dot(derivation_matrix(hess, p) * nd.om) -
                                0.5 * nd.om.squaredNorm() * hess.trace());
        }
        row.lhs = std::sqrt(d_norm2) + std::sqrt(s_norm2);
        row.rhs = norm > 0.0 ? rhs / norm : 0.0;
        row.interior = norm > 0.0 ? interior / norm : 0.0;
        row.constant = c_of(row.distance);
        row.limit_constant = 0.5 * ((n - p - 1) * sk - p);
        row.holds = row.lhs >= row.rhs;
        rows.push_back(row);
    }
    return rows;
}

HeatDecayResult heat_decay_diagnostic(const ManifoldModel& model, const ScalarField& bump, const Vec& x0,
                                      const std::vector<double>& times, double kappa, const McOptions& opts)
{
    const FormField field{0, [&](const Vec& x) { FVec v(1); v(0) = bump(x); return v; }, "bump"};
    const ScalarField one = [](const Vec&) { return 1.0; };
    const auto est = coupled_fk_bound(model, field, one, x0, default_frame(model, x0), times, opts);
    HeatDecayResult res;
    res.times = times;
    std::vector<double> ts, ys;
    for (const auto& e : est) {
        res.mean.push_back(e.fk.value[0]);
        if (e.fk.value[0] > 0.0) {
            ts.push_back(e.t);
            ys.push_back(std::log(e.fk.value[0]));
        }
    }
    if (ts.size() >= 2) {
        double tb = 0.0, yb = 0.0;
        for (std::size_t i = 0; i < ts.size(); ++i) {
            tb += ts[i];
            yb += ys[i];
        }
        tb /= static_cast<double>(ts.size());
        yb /= static_cast<double>(ts.size());
        double sxy = 0.0, sxx = 0.0;
        for (std::size_t i = 0; i < ts.size(); ++i) {
            sxy += (ts[i] - tb) * (ys[i] - yb);
            sxx += (ts[i] - tb) * (ts[i] - tb);
        }
        res.fitted_rate = -sxy / sxx;
    }
    const int n = model.dim();
    res.predicted = (n - 1) * (n - 1) * kappa / 8.0;
    res.meets_fraction = res.fitted_rate >= 0.5 * res.predicted;
    return res;
}

}  // namespace formkac
