#include "formkac/spin.hpp"

#include <cmath>

#include "formkac/oracles.hpp"
#include "formkac/parallel.hpp"

namespace formkac {

namespace {

const Complex kI(0.0, 1.0);

SpinMat pauli(int k)
{
    SpinMat s = SpinMat::Zero(2, 2);
    switch (k) {
    case 1:
        s(0, 1) = s(1, 0) = 1.0;
        break;
    case 2:
        s(0, 1) = -kI;
        s(1, 0) = kI;
        break;
    default:
        s(0, 0) = 1.0;
        s(1, 1) = -1.0;
    }
    return s;
}

SpinMat kron(const SpinMat& a, const SpinMat& b)
{
    SpinMat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (int i = 0; i < a.rows(); ++i) {
        for (int j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

std::vector<SpinMat> even_gammas(int n)
{
    std::vector<SpinMat> g = {kI * pauli(1), kI * pauli(2)};
    for (int m = 2; m < n; m += 2) {
        const int d = static_cast<int>(g.front().rows());
        std::vector<SpinMat> next;
        for (const auto& gj : g) {
            next.push_back(kron(gj, pauli(3)));
        }
        const SpinMat id = SpinMat::Identity(d, d);
        next.push_back(kron(id, kI * pauli(1)));
        next.push_back(kron(id, kI * pauli(2)));
        g = std::move(next);
    }
    return g;
}

SpinMat ordered_product(const std::vector<SpinMat>& g)
{
    SpinMat p = SpinMat::Identity(g.front().rows(), g.front().cols());
    for (const auto& m : g) {
        p = p * m;
    }
    return p;
}

}  // namespace

CliffordModule build_clifford(int n)
{
    if (n < 2 || n > kMaxDim) {
        throw ArgumentError("build_clifford: n must be in 2..6");
    }
    CliffordModule cl;
    cl.n = n;
    const int even = n - (n % 2);
    cl.gamma = even_gammas(even);
    const int d = static_cast<int>(cl.gamma.front().rows());
    if (n % 2 == 1) {
        // The volume element of the even part anticommutes with every gamma;
        // scale it to square to -I.
        SpinMat w = ordered_product(cl.gamma);
        const SpinMat w2 = w * w;
        if ((w2 - SpinMat::Identity(d, d)).norm() < 1e-12) {
            w *= kI;
        }
        cl.gamma.push_back(w);
    } else {
        Complex phase = 1.0;
        for (int k = 0; k < n / 2; ++k) {
            phase *= kI;
        }
        cl.chirality = phase * ordered_product(cl.gamma);
    }
    cl.spinor_dim = d;
    return cl;
}

SpinMat clifford_action(const CliffordModule& cl, const Vec& v)
{
    if (v.size() != cl.n) {
        throw ArgumentError("clifford_action: vector has wrong dimension");
    }
    SpinMat out = SpinMat::Zero(cl.spinor_dim, cl.spinor_dim);
    for (int j = 0; j < cl.n; ++j) {
        out += v(j) * cl.gamma[static_cast<std::size_t>(j)];
    }
    return out;
}

SpinorBoundaryOps boundary_projection(const CliffordModule& cl, const Vec& nu, SpinorBoundaryKind kind)
{
    if (std::abs(nu.norm() - 1.0) > 1e-12) {
        throw ArgumentError("boundary_projection: nu must be a unit vector");
    }
    SpinorBoundaryOps ops;
    ops.kind = kind;
    const SpinMat gnu = clifford_action(cl, nu);
    if (kind == SpinorBoundaryKind::chirality) {
        if (!cl.chirality) {
            throw ArgumentError("boundary_projection: chirality needs an even dimension");
        }
        ops.qhat = gnu * (*cl.chirality);
    } else {
        ops.qhat = kI * gnu;
    }
    const SpinMat id = SpinMat::Identity(cl.spinor_dim, cl.spinor_dim);
    ops.plus = 0.5 * (id - ops.qhat);
    ops.minus = 0.5 * (id + ops.qhat);
    return ops;
}

SpinorBoundaryOps boundary_projection(const CliffordModule& cl, int nu_index, SpinorBoundaryKind kind)
{
    if (nu_index < 0 || nu_index >= cl.n) {
        throw ArgumentError("boundary_projection: normal index out of range");
    }
    return boundary_projection(cl, Vec(Vec::Unit(cl.n, nu_index)), kind);
}

double lichnerowicz_term(const ManifoldModel& model, const Vec& x)
{
    return 0.25 * model.curvature_at(x).scalar();
}

IntertwineResult intertwine_certificate(const CliffordModule& cl, const Vec& nu, const SpinorBoundaryOps& ops,
                                        const std::vector<Vec>& xis)
{
    const SpinMat gnu = clifford_action(cl, nu);
    IntertwineResult res;
    for (const Vec& xi : xis) {
        if (std::abs(xi.dot(nu)) > 1e-12 * std::max(1.0, xi.norm())) {
            throw ArgumentError("intertwine_certificate: xi must be tangential");
        }
        const SpinMat sigma = clifford_action(cl, xi) * gnu;
        res.projection_residual = std::max(
            {res.projection_residual, (ops.plus * sigma - sigma * ops.minus).cwiseAbs().maxCoeff(),
             (ops.minus * sigma - sigma * ops.plus).cwiseAbs().maxCoeff()});
        res.anticommute_residual =
            std::max(res.anticommute_residual, (sigma * gnu + gnu * sigma).cwiseAbs().maxCoeff());
    }
    return res;
}

SpinorBoundCheck spinor_fk_bound_check(const CliffordModule& cl, SpinorBoundaryKind kind,
                                       const std::function<double(double)>& g, const SpinVec& s0, double x0n,
                                       double t, const McOptions& opts)
{
    const int n = cl.n;
    if (s0.size() != cl.spinor_dim) {
        throw ArgumentError("spinor_fk_bound_check: spinor has the wrong dimension");
    }
    if (x0n <= 0.0 || !(t > 0.0)) {
        throw ArgumentError("spinor_fk_bound_check: need x0n > 0 and t > 0");
    }
    if (opts.n_paths < kMinPaths) {
        throw ArgumentError("spinor_fk_bound_check: n_paths must be at least 100");
    }
    const auto model = make_model("half_space", n);
    const SpinorBoundaryOps ops = boundary_projection(cl, n - 1, kind);

    // PDE oracle: Dirichlet evolution of the Pi_+ part, Neumann of the Pi_- part.
    const double length = x0n + 14.0 * std::sqrt(t) + 2.0;
    const int cells = static_cast<int>(std::ceil(length / 1e-2));
    GridField field;
    field.grid = cell_centres(length, cells);
    for (double x : field.grid) {
        field.values.push_back(g(x));
    }
    const double dx = length / cells;
    const int steps = std::max(1, static_cast<int>(std::ceil(t / (dx * dx))));
    field.bc = BoundaryCondition::dirichlet;
    const double pd = sample_grid(pde_solve_1d(field, t, steps), x0n);
    field.bc = BoundaryCondition::neumann;
    const double pn = sample_grid(pde_solve_1d(field, t, steps), x0n);
    const SpinVec psi_t = pd * (ops.plus * s0) + pn * (ops.minus * s0);

    // Monte Carlo: E|psi_0(x^t)| and E[M^t psi_0(x^t)], M <- M Pi_- at the boundary.
    const std::size_t np = opts.n_paths;
    const int d = cl.spinor_dim;
    std::vector<double> abs_vals(np);
    std::vector<Complex> spin_vals(np * static_cast<std::size_t>(d));
    Vec x0 = Vec::Zero(n);
    x0(n - 1) = x0n;
    const Mat frame0 = Mat::Identity(n, n);
    const double s0_norm = s0.norm();
    parallel_for(np, opts.threads, [&](std::size_t p) {
        PathWalker walker(*model, x0, frame0, opts.dt, opts.seed, p);
        SpinMat m = SpinMat::Identity(d, d);
        while (walker.state().t < t - 0.5 * opts.dt) {
            const double l0 = walker.state().ltime;
            const PathState& s = walker.step();
            if (s.ltime > l0) {
                m = m * ops.minus;
            }
        }
        const double gx = g(walker.state().x(n - 1));
        abs_vals[p] = std::abs(gx) * s0_norm;
        const SpinVec v = m * (gx * s0);
        for (int c = 0; c < d; ++c) {
            spin_vals[p * static_cast<std::size_t>(d) + static_cast<std::size_t>(c)] = v(c);
        }
    });

    SpinorBoundCheck res;
    KahanSum s_abs;
    for (double v : abs_vals) {
        s_abs.add(v);
    }
    const double mean_abs = s_abs.value() / static_cast<double>(np);
    KahanSum s_var;
    for (double v : abs_vals) {
        s_var.add((v - mean_abs) * (v - mean_abs));
    }
    res.lhs = psi_t.norm();
    res.rhs = mean_abs;
    res.rhs_stderr = std::sqrt(s_var.value() / static_cast<double>(np - 1) / static_cast<double>(np));
    res.margin = res.rhs - res.lhs;
    res.pass = res.lhs <= res.rhs + 2.0 * res.rhs_stderr;

    SpinVec mean = SpinVec::Zero(d);
    for (int c = 0; c < d; ++c) {
        KahanSum re, im;
        for (std::size_t p = 0; p < np; ++p) {
            const Complex v = spin_vals[p * static_cast<std::size_t>(d) + static_cast<std::size_t>(c)];
            re.add(v.real());
            im.add(v.imag());
        }
        mean(c) = Complex(re.value(), im.value()) / static_cast<double>(np);
    }
    res.mc_norm = mean.norm();
    // Stderr of the norm along the direction of the mean.
    if (res.mc_norm > 0.0) {
        const SpinVec dir = mean / res.mc_norm;
        KahanSum sv;
        for (std::size_t p = 0; p < np; ++p) {
            Complex proj = 0.0;
            for (int c = 0; c < d; ++c) {
                proj += std::conj(dir(c)) * spin_vals[p * static_cast<std::size_t>(d) + static_cast<std::size_t>(c)];
            }
            sv.add((proj.real() - res.mc_norm) * (proj.real() - res.mc_norm));
        }
        res.mc_norm_stderr = std::sqrt(sv.value() / static_cast<double>(np - 1) / static_cast<double>(np));
    }
    res.dominating = std::ldexp(1.0, n / 2 + 1) * mean_abs;
    return res;
}

}  // namespace formkac
