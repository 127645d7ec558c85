#include <doctest.h>

#include <cmath>
#include <random>

#include "formkac/oracles.hpp"
#include "formkac/spin.hpp"

using namespace formkac;

namespace {

std::mt19937_64 rng(77);

double max_abs(const SpinMat& m) { return m.cwiseAbs().maxCoeff(); }

SpinMat identity(int d) { return SpinMat::Identity(d, d); }

}  // namespace

TEST_CASE("Clifford module in dimension 2")
{
    const CliffordModule cl = build_clifford(2);
    CHECK(cl.spinor_dim == 2);
    REQUIRE(cl.gamma.size() == 2);
    for (const SpinMat& g : cl.gamma) {
        CHECK(max_abs(g * g + identity(2)) < 1e-15);
        CHECK(max_abs(g + g.adjoint()) < 1e-15);
        CHECK(std::abs(g.trace()) < 1e-15);
    }
    CHECK(max_abs(cl.gamma[0] * cl.gamma[1] + cl.gamma[1] * cl.gamma[0]) < 1e-15);
    REQUIRE(cl.chirality.has_value());
    // Q = i gamma_1 gamma_2 is a Hermitian involution with trace 0.
    const SpinMat q = Complex(0.0, 1.0) * cl.gamma[0] * cl.gamma[1];
    CHECK(max_abs(*cl.chirality - q) < 1e-15);
    CHECK(std::abs(q.trace()) < 1e-15);
}

TEST_CASE("Clifford relations and chirality in every dimension")
{
    for (int n = 2; n <= kMaxDim; ++n) {
        const CliffordModule cl = build_clifford(n);
        const int d = 1 << (n / 2);
        CHECK(cl.spinor_dim == d);
        CHECK(static_cast<int>(cl.gamma.size()) == n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                const SpinMat ac = cl.gamma[static_cast<std::size_t>(i)] * cl.gamma[static_cast<std::size_t>(j)] +
                                   cl.gamma[static_cast<std::size_t>(j)] * cl.gamma[static_cast<std::size_t>(i)];
                CHECK(max_abs(ac + (i == j ? 2.0 : 0.0) * identity(d)) < 1e-14);
            }
        }
        CHECK(cl.chirality.has_value() == (n % 2 == 0));
        if (cl.chirality) {
            const SpinMat& q = *cl.chirality;
            CHECK(max_abs(q * q - identity(d)) < 1e-14);
            CHECK(max_abs(q - q.adjoint()) < 1e-14);
            for (const SpinMat& g : cl.gamma) {
                CHECK(max_abs(q * g + g * q) < 1e-14);
            }
        }
        // gamma(v)^2 = -|v|^2.
        std::normal_distribution<double> nd;
        Vec v(n);
        for (int i = 0; i < n; ++i) {
            v(i) = nd(rng);
        }
        const SpinMat gv = clifford_action(cl, v);
        CHECK(max_abs(gv * gv + v.squaredNorm() * identity(d)) < 1e-12);
    }
    CHECK_THROWS_AS(build_clifford(1), ArgumentError);
    CHECK_THROWS_AS(build_clifford(7), ArgumentError);
}

TEST_CASE("boundary projections and intertwining")
{
    std::normal_distribution<double> nd;
    for (int n = 2; n <= kMaxDim; ++n) {
        const CliffordModule cl = build_clifford(n);
        const int d = cl.spinor_dim;
        Vec nu(n);
        for (int i = 0; i < n; ++i) {
            nu(i) = nd(rng);
        }
        nu.normalize();
        std::vector<SpinorBoundaryKind> kinds = {SpinorBoundaryKind::mit};
        if (n % 2 == 0) {
            kinds.push_back(SpinorBoundaryKind::chirality);
        } else {
            CHECK_THROWS_AS(boundary_projection(cl, nu, SpinorBoundaryKind::chirality), ArgumentError);
        }
        for (SpinorBoundaryKind k : kinds) {
            const SpinorBoundaryOps ops = boundary_projection(cl, nu, k);
            const SpinMat expect = k == SpinorBoundaryKind::mit ? SpinMat(Complex(0.0, 1.0) * clifford_action(cl, nu))
                                                                : SpinMat(clifford_action(cl, nu) * *cl.chirality);
            CHECK(max_abs(ops.qhat - expect) < 1e-14);
            CHECK(max_abs(ops.qhat * ops.qhat - identity(d)) < 1e-13);
            CHECK(max_abs(ops.qhat - ops.qhat.adjoint()) < 1e-13);
            CHECK(max_abs(ops.plus * ops.plus - ops.plus) < 1e-13);
            CHECK(max_abs(ops.plus + ops.minus - identity(d)) < 1e-14);
            CHECK(max_abs(ops.plus * ops.minus) < 1e-13);
            CHECK(std::abs(ops.plus.trace() - Complex(d / 2.0, 0.0)) < 1e-13);

            std::vector<Vec> xis;
            for (int s = 0; s < 1000; ++s) {
                Vec xi(n);
                for (int i = 0; i < n; ++i) {
                    xi(i) = nd(rng);
                }
                xi -= xi.dot(nu) * nu;
                xis.push_back(xi);
            }
            const IntertwineResult r = intertwine_certificate(cl, nu, ops, xis);
            CHECK(r.projection_residual < 1e-13);
            CHECK(r.anticommute_residual < 1e-13);
            const IntertwineResult z = intertwine_certificate(cl, nu, ops, {Vec::Zero(n)});
            CHECK(z.projection_residual == 0.0);
            CHECK(z.anticommute_residual == 0.0);
            CHECK_THROWS_AS(intertwine_certificate(cl, nu, ops, {nu}), ArgumentError);
        }
        CHECK_THROWS_AS(boundary_projection(cl, Vec(2.0 * nu), SpinorBoundaryKind::mit), ArgumentError);
    }
}

TEST_CASE("Lichnerowicz term")
{
    const auto h = make_model("hyperbolic", 4);
    CHECK(lichnerowicz_term(*h, reference_point(*h)) == doctest::Approx(-3.0));
    const auto s = make_model("sphere", 4);
    CHECK(lichnerowicz_term(*s, reference_point(*s)) == doctest::Approx(3.0));
    const auto f = make_model("half_space", 3);
    CHECK(lichnerowicz_term(*f, reference_point(*f)) == 0.0);
}

TEST_CASE("spinor bound on the flat half-space")
{
    struct Profile {
        const char* name;
        std::function<double(double)> g;
    };
    const std::vector<Profile> profiles = {
        {"gaussian", [](double s) { return std::exp(-s * s); }},
        {"shifted", [](double s) { return std::exp(-(s - 1.0) * (s - 1.0) / 0.5); }},
        {"exp_decay", [](double s) { return (1.0 + s) * std::exp(-s); }},
    };
    McOptions o;
    o.n_paths = 1500;
    o.dt = 1e-3;
    o.seed = 12;
    for (int n : {3, 4}) {
        const CliffordModule cl = build_clifford(n);
        SpinVec s0 = SpinVec::Zero(cl.spinor_dim);
        s0(0) = Complex(0.6, 0.0);
        s0(1) = Complex(0.0, 0.8);
        for (SpinorBoundaryKind k : {SpinorBoundaryKind::mit, SpinorBoundaryKind::chirality}) {
            if (k == SpinorBoundaryKind::chirality && n % 2) {
                continue;
            }
            const SpinorBoundaryOps ops = boundary_projection(cl, n - 1, k);
            const double plus = (ops.plus * s0).norm();
            const double minus = (ops.minus * s0).norm();
            for (const Profile& p : profiles) {
                const double x0n = 0.5, t = 0.5;
                const SpinorBoundCheck r = spinor_fk_bound_check(cl, k, p.g, s0, x0n, t, o);
                // Orthogonal split: Dirichlet on the plus part, Neumann on the minus part.
                const double pd = image_method_evolve(KernelKind::dirichlet, p.g, t, x0n);
                const double pn = image_method_evolve(KernelKind::neumann, p.g, t, x0n);
                const double exact = std::hypot(plus * pd, minus * pn);
                INFO(p.name << " n=" << n << " lhs=" << r.lhs << " exact=" << exact << " rhs=" << r.rhs);
                CHECK(r.lhs == doctest::Approx(exact).epsilon(1e-3));
                CHECK(r.pass);
                CHECK(r.lhs <= r.rhs + 2.0 * r.rhs_stderr);
                CHECK(std::abs(r.mc_norm - exact) < 4.0 * r.mc_norm_stderr + 0.01 * exact);
                CHECK(r.dominating == doctest::Approx((1 << (n / 2 + 1)) * r.rhs));
            }
        }
    }
    const CliffordModule cl = build_clifford(3);
    CHECK_THROWS_AS(spinor_fk_bound_check(cl, SpinorBoundaryKind::mit, [](double) { return 1.0; },
                                          SpinVec::Zero(4), 0.5, 0.5, o),
                    ArgumentError);
}
