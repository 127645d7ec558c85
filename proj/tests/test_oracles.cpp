#include <doctest.h>

#include <cmath>
#include <numbers>

#include "formkac/oracles.hpp"
#include "formkac/suite.hpp"
#include "support.hpp"

using namespace formkac;

namespace {

double phi(double z, double t) { return std::exp(-z * z / (2.0 * t)) / std::sqrt(2.0 * std::numbers::pi * t); }

GridField half_line_field(double length, int cells, const std::function<double(double)>& g, BoundaryCondition bc)
{
    GridField f;
    f.grid = cell_centres(length, cells);
    for (double x : f.grid) {
        f.values.push_back(g(x));
    }
    f.bc = bc;
    return f;
}

FormField form3(int q, std::function<FVec(const Vec&)> f) { return {q, std::move(f), "test"}; }

}  // namespace

TEST_CASE("half-space kernels")
{
    CHECK(halfspace_kernel(KernelKind::neumann, 0.5, 0.3, 0.7) ==
          doctest::Approx(phi(0.4, 0.5) + phi(1.0, 0.5)).epsilon(1e-14));
    CHECK(halfspace_kernel(KernelKind::dirichlet, 0.5, 0.3, 0.7) ==
          doctest::Approx(phi(0.4, 0.5) - phi(1.0, 0.5)).epsilon(1e-14));
    CHECK(halfspace_kernel(KernelKind::dirichlet, 0.5, 0.0, 0.7) == doctest::Approx(0.0));
    CHECK_THROWS_AS(halfspace_kernel(KernelKind::neumann, 0.0, 0.3, 0.7), ArgumentError);
    CHECK_THROWS_AS(halfspace_kernel(KernelKind::neumann, 1.0, -0.3, 0.7), ArgumentError);
    // Neumann kernel has unit mass, Dirichlet mass is P(no hit) = erf(x / sqrt(2t)).
    const double t = 0.7, x = 0.4;
    CHECK(integrate([&](double y) { return halfspace_kernel(KernelKind::neumann, t, x, y); }, 0.0, 20.0, 64) ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(integrate([&](double y) { return halfspace_kernel(KernelKind::dirichlet, t, x, y); }, 0.0, 20.0, 64) ==
          doctest::Approx(std::erf(x / std::sqrt(2.0 * t))).epsilon(1e-12));
}

TEST_CASE("kernels satisfy the semigroup property")
{
    for (KernelKind k : {KernelKind::neumann, KernelKind::dirichlet}) {
        const double s = 0.3, t = 0.5, x = 0.2, y = 1.1;
        const double composed = integrate(
            [&](double z) { return halfspace_kernel(k, s, x, z) * halfspace_kernel(k, t, z, y); }, 0.0, 15.0, 64);
        CHECK(composed == doctest::Approx(halfspace_kernel(k, s + t, x, y)).epsilon(1e-11));
    }
}

TEST_CASE("Gauss-Legendre quadrature")
{
    for (int order : {2, 5, 8, 16}) {
        const GaussRule& r = gauss_legendre(order);
        for (int deg = 0; deg < 2 * order; ++deg) {
            double s = 0.0;
            for (std::size_t i = 0; i < r.nodes.size(); ++i) {
                s += r.weights[i] * std::pow(r.nodes[i], deg);
            }
            const double exact = (deg % 2) ? 0.0 : 2.0 / (deg + 1);
            CHECK(std::abs(s - exact) < 1e-13);
        }
    }
    CHECK_THROWS_AS(gauss_legendre(0), ArgumentError);
    CHECK(integrate([](double x) { return std::sin(x); }, 0.0, std::numbers::pi) == doctest::Approx(2.0).epsilon(1e-13));
}

TEST_CASE("image method against Simpson quadrature")
{
    auto g = [](double s) { return s * std::exp(-s * s); };
    for (double t : {0.25, 1.0}) {
        for (double x : {0.0, 0.5, 2.0}) {
            CHECK(image_method_evolve(KernelKind::neumann, g, t, x) ==
                  doctest::Approx(fktest::image_evolve(1, g, t, x)).epsilon(1e-10));
            CHECK(std::abs(image_method_evolve(KernelKind::dirichlet, g, t, x) - fktest::image_evolve(-1, g, t, x)) <
                  1e-10);
        }
    }
}

TEST_CASE("Crank-Nicolson on the half-line")
{
    auto g = [](double s) { return std::exp(-(s - 1.0) * (s - 1.0) / 0.5); };
    const double length = 12.0, t = 1.0;
    const int cells = 240;
    for (BoundaryCondition bc : {BoundaryCondition::neumann, BoundaryCondition::dirichlet}) {
        const GridField u0 = half_line_field(length, cells, g, bc);
        const GridField u = pde_solve_1d(u0, t, 400);
        const KernelKind k = bc == BoundaryCondition::neumann ? KernelKind::neumann : KernelKind::dirichlet;
        for (double x : {0.05, 0.5, 1.0, 2.5}) {
            CHECK(std::abs(sample_grid(u, x) - image_method_evolve(k, g, t, x)) < 1e-3);
        }
    }
    // Neumann at 0 and no flux at L conserve the mass.
    const GridField m0 = half_line_field(length, cells, g, BoundaryCondition::neumann);
    const GridField m1 = pde_solve_1d(m0, 2.0, 800);
    double before = 0.0, after = 0.0;
    for (std::size_t i = 0; i < m0.values.size(); ++i) {
        before += m0.values[i];
        after += m1.values[i];
    }
    CHECK(after == doctest::Approx(before).epsilon(1e-12));

    CHECK_THROWS_AS(pde_solve_1d(m0, 1.0, 10), ArgumentError);
    GridField bad = m0;
    bad.values[3] = std::nan("");
    CHECK_THROWS_AS(pde_solve_1d(bad, 1e-3, 1), ArgumentError);
}

TEST_CASE("radial Crank-Nicolson: Dirichlet eigenmode of the 3-ball")
{
    // sin(pi r) / r is the first Dirichlet eigenfunction of the unit 3-ball,
    // so u/2 decays like exp(-pi^2 t / 2).
    GridField f;
    f.grid = cell_centres(1.0, 100);
    for (double r : f.grid) {
        f.values.push_back(std::sin(std::numbers::pi * r) / r);
    }
    f.bc = BoundaryCondition::dirichlet;
    f.geometry = GridGeometry::radial;
    f.radial_dim = 3;
    const double t = 0.1;
    const GridField u = pde_solve_1d(f, t, 1000);
    const double decay = std::exp(-std::numbers::pi * std::numbers::pi * t / 2.0);
    for (std::size_t i = 0; i < f.grid.size(); i += 10) {
        CHECK(u.values[i] == doctest::Approx(decay * f.values[i]).epsilon(1e-3));
    }
}

TEST_CASE("finite-difference exterior calculus")
{
    const auto m = make_model("euclidean", 3);
    Vec x(3);
    x << 0.3, -0.2, 0.5;
    // d(x0 dx1) = dx0 ^ dx1, index 0 in {01, 02, 12}.
    const FVec dw = exterior_derivative_fd(*m, form3(1, [](const Vec& y) {
                                               FVec v = FVec::Zero(3);
                                               v(1) = y(0);
                                               return v;
                                           }),
                                           x);
    CHECK(dw(0) == doctest::Approx(1.0));
    CHECK(std::abs(dw(1)) < 1e-10);
    CHECK(std::abs(dw(2)) < 1e-10);
    // d* (x0 dx0 + x1 dx1 + x2 dx2) = -div = -3.
    const FVec dsw = codifferential_fd(*m, form3(1, [](const Vec& y) { return FVec(y); }), x);
    CHECK(dsw(0) == doctest::Approx(-3.0));
    // d* of a 2-form against the coordinate formula (d* w)_j = -sum_i d_i w_ij.
    auto w2 = [](const Vec& y) {
        FVec v(3);
        v << y(0) * y(1), std::sin(y(2)), y(0) * y(0);
        return v;
    };
    const FVec d2 = codifferential_fd(*m, form3(2, w2), x);
    // w_01 = x0 x1, w_02 = sin x2, w_12 = x0^2.
    CHECK(d2(0) == doctest::Approx(-(-x(0) - std::cos(x(2)))).epsilon(1e-8));  // j = 0: -(d1 w10 + d2 w20)
    CHECK(d2(1) == doctest::Approx(-(x(1) - 0.0)).epsilon(1e-8));               // j = 1: -(d0 w01 + d2 w21)
    CHECK(d2(2) == doctest::Approx(-(0.0 + 0.0)).epsilon(1e-8));                // j = 2: -(d0 w02 + d1 w12)

    // d d = 0 and d* d* = 0 on curved models.
    for (const char* id : {"hyperbolic", "sphere_cap"}) {
        const auto c = make_model(id, 3);
        const Vec p = reference_point(*c);
        const FormField w{1,
                          [](const Vec& y) {
                              FVec v(3);
                              v << std::sin(y(0)) * y(1), y(2) * y(2), std::cos(y(0) + y(1));
                              return v;
                          },
                          "w"};
        const FormField dw1{2, [&](const Vec& y) { return exterior_derivative_fd(*c, w, y, 1e-3); }, "dw"};
        CHECK(exterior_derivative_fd(*c, dw1, p, 1e-3).cwiseAbs().maxCoeff() < 1e-5);
        const FormField w2f{2, [&](const Vec& y) { return exterior_derivative_fd(*c, w, y, 1e-3); }, "w2"};
        const FormField dsw2{1, [&](const Vec& y) { return codifferential_fd(*c, w2f, y, 1e-3); }, "dsw2"};
        CHECK(std::abs(codifferential_fd(*c, dsw2, p, 1e-3)(0)) < 1e-4);
    }
}

TEST_CASE("integral identity on the 3-ball")
{
    const auto ball = make_model("ball", 3);
    for (int q = 1; q <= 2; ++q) {
        for (std::uint64_t seed = 1; seed <= 3; ++seed) {
            const IntforPair pair = random_intfor_pair(q, seed);
            BallQuadrature quad;
            quad.fd_step = 5e-4;
            const IntforResult r = intfor_check(*ball, pair.f, pair.omega, quad);
            INFO("q=" << q << " lhs=" << r.lhs << " rhs=" << r.rhs);
            CHECK(r.residual < 1e-5);
            CHECK(r.residual == doctest::Approx(std::abs(r.lhs - r.rhs)));
            // The contraction term does not vanish for these forms.
            CHECK(std::abs(r.boundary_contraction) > 1e-3);
            CHECK(r.residual_as_printed > 100.0 * r.residual);
        }
    }
    // Constant 1-form and f = |x|^2 / 2: closed form. d w = 0 and d* w = 0, so
    // lhs = 0; Hess f = I gives interior = sum of the eigenvalue sums.
    ScalarFunction f{[](const Vec& x) { return 0.5 * x.squaredNorm(); }, [](const Vec& x) { return x; },
                     [](const Vec&) { return Mat(Mat::Identity(3, 3)); }};
    const FormField c{1, [](const Vec&) { FVec v(3); v << 1.0, 0.0, 0.0; return v; }, "dx0"};
    const IntforResult r = intfor_check(*ball, f, c, {});
    CHECK(std::abs(r.lhs) < 1e-12);
    CHECK(r.residual < 1e-10);
    CHECK_THROWS_AS(intfor_check(*make_model("ball", 4), f, c, {}), ArgumentError);
}

TEST_CASE("hyperbolic distance")
{
    Vec a(3), b(3);
    a << 0.0, 0.0, 1.0;
    b << 0.0, 0.0, std::exp(2.0);
    CHECK(hyperbolic_distance(a, b) == doctest::Approx(2.0));
    b << 1.0, 0.0, 1.0;
    CHECK(hyperbolic_distance(a, b) == doctest::Approx(std::acosh(1.5)));
}

TEST_CASE("finite-distance estimate in hyperbolic space")
{
    const int n = 4, p = 1;
    const auto h = make_model("hyperbolic", n);
    ChartBox box{Vec::Constant(n, -0.5), Vec::Constant(n, 0.5)};
    box.lo(n - 1) = 1.0;
    box.hi(n - 1) = 2.0;
    const FormField w = random_bump_form(n, p, box, 5);
    std::vector<Vec> centres;
    for (double d : {3.0, 5.0}) {
        Vec c = Vec::Zero(n);
        c(n - 1) = 2.0 * std::exp(d);
        centres.push_back(c);
    }
    const auto rows = dx_inequality_eval(*h, p, 1.0, w, box, centres, 8);
    REQUIRE(rows.size() == 2);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const DxRow& r = rows[i];
        CHECK(r.holds);
        // The nearest support point to a centre on the axis is the top of the
        // box; the nearest quadrature node sits just below it.
        const double d = i == 0 ? 3.0 : 5.0;
        CHECK(r.distance > d);
        CHECK(r.distance < d + 0.05);
        CHECK(r.limit_constant == doctest::Approx(0.5 * ((n - p - 1) - p)));
        const double ratio = r.constant / r.limit_constant;
        CHECK(ratio >= 1.0);
        CHECK(ratio <= 1.0 / std::tanh(r.distance) + 1e-12);
    }
    CHECK_THROWS_AS(dx_inequality_eval(*make_model("sphere", n), p, 1.0, w, box, centres), ArgumentError);
    Vec inside = Vec::Zero(n);
    inside(n - 1) = 1.5;
    CHECK_THROWS_AS(dx_inequality_eval(*h, p, 1.0, w, box, {inside}), PreconditionError);
}

TEST_CASE("scalar heat decay: bottom of the spectrum")
{
    McOptions o;
    o.n_paths = 2000;
    o.dt = 1e-2;
    o.seed = 3;
    const std::vector<double> times = {1.0, 2.0, 3.0, 4.0};
    // Hyperbolic 3-space: heat kernel ~ t^(-3/2) exp(-t/2), so the fitted rate
    // exceeds (n-1)^2 / 8 = 1/2.
    const auto h = make_model("hyperbolic", 3);
    const Vec x0 = reference_point(*h);
    const ScalarField bump = [x0](const Vec& x) { return std::exp(-hyperbolic_distance(x, x0) * hyperbolic_distance(x, x0)); };
    const HeatDecayResult rh = heat_decay_diagnostic(*h, bump, x0, times, 1.0, o);
    CHECK(rh.predicted == doctest::Approx(0.5));
    CHECK(rh.meets_fraction);

    // The tube around a geodesic has bottom of spectrum 0 for the Neumann
    // problem, so the predicted rate is not reached.
    const auto tube = make_model("hyperbolic_tube", 3);
    const Vec xt = reference_point(*tube);
    const ScalarField bt = [xt](const Vec& x) { return std::exp(-hyperbolic_distance(x, xt) * hyperbolic_distance(x, xt)); };
    const HeatDecayResult rt = heat_decay_diagnostic(*tube, bt, xt, times, 1.0, o);
    CHECK_FALSE(rt.meets_fraction);
}
