#include <doctest.h>

#include <cmath>
#include <limits>

#include "formkac/estimators.hpp"
#include "support.hpp"

using namespace formkac;

namespace {

McOptions opts(std::size_t paths, double dt, std::uint64_t seed, int threads = 0)
{
    McOptions o;
    o.n_paths = paths;
    o.dt = dt;
    o.seed = seed;
    o.threads = threads;
    return o;
}

// g(x_n) times one basis component of a q-form on the half-space.
FormField profile_form(int n, int q, int component, std::function<double(double)> g)
{
    const int size = binomial(n, q);
    return {q,
            [=](const Vec& x) {
                FVec v = FVec::Zero(size);
                v(component) = g(x(n - 1));
                return v;
            },
            "profile"};
}

ScalarField constant(double c)
{
    return [c](const Vec&) { return c; };
}

}  // namespace

TEST_CASE("a constant function is preserved")
{
    const auto m = make_model("half_space", 3);
    const Vec x0 = reference_point(*m);
    const FormField one{0, [](const Vec&) { return FVec::Constant(1, 2.5); }, "two and a half"};
    const EstimateReport r = fk_expectation(*m, one, x0, Mat::Identity(3, 3), 0.5, opts(200, 1e-2, 1));
    CHECK(r.value[0] == doctest::Approx(2.5).epsilon(1e-14));
    CHECK(r.std_error[0] == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(r.n_paths == 200);
}

TEST_CASE("half-space evolution against the image method")
{
    const int n = 3;
    const auto m = make_model("half_space", n);
    Vec x0 = Vec::Zero(n);
    x0(n - 1) = 0.5;
    auto g = [](double s) { return s * std::exp(-s * s); };
    struct Case {
        int q;
        int component;
        int sign;  // +1 Neumann, -1 Dirichlet
    };
    // Basis of 1-forms in lexicographic order: e0, e1, e2 = dx_n.
    for (const Case c : {Case{0, 0, 1}, Case{1, 0, 1}, Case{1, 2, -1}}) {
        const FormField w = profile_form(n, c.q, c.component, g);
        for (double t : {0.25, 1.0}) {
            const EstimateReport r = fk_expectation(*m, w, x0, Mat::Identity(n, n), t, opts(8000, 1e-3, 7));
            const double oracle = fktest::image_evolve(c.sign, g, t, x0(n - 1));
            INFO("q=" << c.q << " comp=" << c.component << " t=" << t << " mc=" << r.value[c.component] << " +- "
                      << r.std_error[c.component] << " oracle=" << oracle);
            CHECK(std::abs(r.value[static_cast<std::size_t>(c.component)] - oracle) <
                  4.0 * r.std_error[static_cast<std::size_t>(c.component)] + 0.01 * std::abs(oracle));
            for (std::size_t i = 0; i < r.value.size(); ++i) {
                if (static_cast<int>(i) != c.component) {
                    CHECK(r.value[i] == 0.0);
                }
            }
        }
    }
}

TEST_CASE("pointwise bound dominates the estimate")
{
    for (const char* id : {"ball", "sphere_cap", "hyperbolic_tube", "half_space"}) {
        const auto m = make_model(id, 3);
        const Vec x0 = reference_point(*m);
        const Vec c = x0;
        const FormField w{1,
                          [c](const Vec& x) {
                              FVec v(3);
                              v << 1.0, -0.5, 0.25;
                              return FVec(std::exp(-(x - c).squaredNorm()) * v);
                          },
                          "bump"};
        const double cn = std::sqrt(1.0 + 0.25 + 0.0625);
        const ScalarField a = [c, cn](const Vec& x) { return cn * std::exp(-(x - c).squaredNorm()); };
        const auto rows = coupled_fk_bound(*m, w, a, x0, default_frame(*m, x0), {0.25, 1.0}, opts(500, 1e-3, 3));
        for (const CoupledEstimate& e : rows) {
            INFO(id << " t=" << e.t);
            CHECK(e.fk.norm() <= e.bound.value[0]);
            CHECK(e.norm_violations == 0);
            CHECK(e.max_norm_ratio <= 1.0 + 10.0 * 1e-3);
        }
    }
}

TEST_CASE("sphere cap bound decays at least like exp(-(n-1)t/2)")
{
    const int n = 3;
    const auto m = make_model("sphere_cap", n);
    const Vec x0 = reference_point(*m);
    for (double t : {0.5, 1.0}) {
        const EstimateReport b = pointwise_bound(*m, constant(1.0), 1, x0, default_frame(*m, x0), t, opts(300, 1e-3, 2));
        CHECK(b.value[0] <= std::exp(-(n - 1) * t / 2.0) * (1.0 + 1e-12));
    }
}

TEST_CASE("strong stochastic positivity: exact cases")
{
    const auto m = make_model("half_space", 3);
    const std::vector<Vec> starts = {reference_point(*m)};
    const std::vector<double> times = {0.5, 1.0, 1.5, 2.0};
    const SspResult zero = ssp_rate(*m, {constant(0.0), constant(0.0)}, starts, times, opts(100, 1e-2, 1));
    CHECK(zero.slope == 0.0);
    CHECK_FALSE(zero.ssp);
    const SspResult c = ssp_rate(*m, {constant(3.0), constant(0.0)}, starts, times, opts(100, 1e-2, 1));
    CHECK(c.slope == doctest::Approx(-1.5).epsilon(1e-10));
    CHECK(c.slope_ci == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(c.ssp);
    // Positive beta with local time only lowers the log-mean.
    const SspResult b = ssp_rate(*m, {constant(3.0), constant(1.0)}, starts, times, opts(100, 1e-2, 1));
    for (std::size_t i = 0; i < times.size(); ++i) {
        CHECK(b.log_mean[i] <= c.log_mean[i]);
    }
    CHECK_THROWS_AS(ssp_rate(*m, {constant(0.0), constant(0.0)}, starts, {1.0, 2.0}, opts(100, 1e-2, 1)),
                    ArgumentError);
}

TEST_CASE("theta integral")
{
    const auto hs = make_model("half_space", 3);
    const Vec x0 = reference_point(*hs);
    const double c = 2.0;
    const ThetaResult r = theta_q(*hs, {constant(c), constant(0.0)}, x0, 8.0, opts(100, 1e-2, 1), 200);
    // int_0^inf exp(-c t / 2) dt = 2 / c; trapezoid error at h = 0.04 is ~1e-4.
    CHECK(r.finite);
    CHECK(r.tail_rate == doctest::Approx(-c / 2.0).epsilon(1e-9));
    CHECK(r.value + r.tail_estimate == doctest::Approx(2.0 / c).epsilon(1e-3));

    const auto cap = make_model("sphere_cap", 3);
    const Potentials pc = curvature_potentials(*cap, 1);
    CHECK(theta_q(*cap, pc, reference_point(*cap), 4.0, opts(200, 1e-2, 2), 64).finite);

    const auto tube = make_model("hyperbolic_tube", 3);
    const Potentials pt{curvature_potentials(*tube, 1).alpha, constant(0.0)};
    const ThetaResult rt = theta_q(*tube, pt, reference_point(*tube), 4.0, opts(100, 1e-2, 2), 64);
    CHECK_FALSE(rt.finite);
    CHECK(std::isinf(rt.tail_estimate));
}

TEST_CASE("semigroup domination")
{
    const int n = 3;
    const auto hs = make_model("half_space", n);
    Vec x0 = Vec::Zero(n);
    x0(n - 1) = 0.4;
    auto g = [](double s) { return std::exp(-(s - 0.5) * (s - 0.5)); };
    const FormField w = profile_form(n, 1, 0, g);
    const ScalarField a = [g, n](const Vec& x) { return g(x(n - 1)); };
    const DominationResult d = domination_check(*hs, w, a, x0, Mat::Identity(n, n), {0.1, 0.5, 1.0}, opts(2000, 1e-3, 5));
    CHECK(d.pass);
    CHECK(d.r_min == 0.0);
    for (const DominationRow& row : d.rows) {
        // Tangential component on the flat half-space: lhs is the Neumann evolution.
        const double oracle = fktest::image_evolve(1, g, row.t, x0(n - 1));
        CHECK(std::abs(row.lhs - oracle) < 0.03 * oracle);
        CHECK(row.margin >= 0.0);
    }

    const auto cap = make_model("sphere_cap", n);
    const Vec c0 = reference_point(*cap);
    const FormField zero{1, [](const Vec&) { return FVec::Zero(3); }, "zero"};
    const DominationResult dz = domination_check(*cap, zero, constant(0.0), c0, default_frame(*cap, c0), {0.5},
                                                 opts(100, 1e-3, 5));
    CHECK(dz.pass);
    CHECK(dz.rows[0].lhs == 0.0);
    CHECK(dz.rows[0].rhs == 0.0);

    const auto concave = make_model("sphere_cap", n, {{"theta0", 2.0}});
    CHECK_THROWS_AS(domination_check(*concave, zero, constant(0.0), reference_point(*concave),
                                     default_frame(*concave, reference_point(*concave)), {0.5}, opts(100, 1e-3, 5)),
                    PreconditionError);
}

TEST_CASE("occupation diagnostic separates recurrent and transient cases")
{
    const std::vector<double> times = {8.0, 16.0, 32.0, 64.0};
    const auto line = make_model("half_line", 1);
    Vec x1(1);
    x1 << 0.5;
    CHECK_FALSE(occupation_diagnostic(*line, x1, x1, 1.0, times, opts(200, 1e-2, 3)).transient);

    const auto hs = make_model("half_space", 4);
    const Vec x4 = reference_point(*hs);
    const OccupationResult r4 = occupation_diagnostic(*hs, x4, x4, 1.0, times, opts(200, 1e-2, 3));
    CHECK(r4.transient);
    for (std::size_t i = 1; i < r4.mean.size(); ++i) {
        CHECK(r4.mean[i] >= r4.mean[i - 1]);
    }

    const auto tube = make_model("hyperbolic_tube", 3);
    const Vec xt = reference_point(*tube);
    CHECK_FALSE(occupation_diagnostic(*tube, xt, xt, 0.5, times, opts(200, 1e-2, 3)).transient);
}

TEST_CASE("estimates do not depend on the thread count")
{
    const auto m = make_model("sphere_cap", 3);
    const Vec x0 = reference_point(*m);
    const FormField w{1, [](const Vec& x) { return FVec(x + FVec::Constant(3, 0.3)); }, "affine"};
    const EstimateReport a = fk_expectation(*m, w, x0, default_frame(*m, x0), 0.3, opts(300, 1e-3, 9, 1));
    const EstimateReport b = fk_expectation(*m, w, x0, default_frame(*m, x0), 0.3, opts(300, 1e-3, 9, 4));
    CHECK(a.value == b.value);
    CHECK(a.std_error == b.std_error);
    CHECK(a.inputs_digest == b.inputs_digest);
    const EstimateReport c = fk_expectation(*m, w, x0, default_frame(*m, x0), 0.3, opts(300, 1e-3, 10, 4));
    CHECK(a.value != c.value);
}

TEST_CASE("small times, linearity and bad inputs")
{
    const auto m = make_model("ball", 3);
    const Vec x0 = reference_point(*m);
    const FormField w{1, [](const Vec& x) { return FVec(x + FVec::Constant(3, 1.0)); }, "affine"};
    const EstimateReport r = fk_expectation(*m, w, x0, Mat::Identity(3, 3), 1e-4, opts(100, 1e-4, 1));
    for (int i = 0; i < 3; ++i) {
        CHECK(r.value[static_cast<std::size_t>(i)] == doctest::Approx(1.0).epsilon(0.05));
    }
    const FormField w2{1, [w](const Vec& x) { return FVec(2.0 * w.eval(x)); }, "twice"};
    const EstimateReport a = fk_expectation(*m, w, x0, Mat::Identity(3, 3), 0.2, opts(100, 1e-3, 1));
    const EstimateReport b = fk_expectation(*m, w2, x0, Mat::Identity(3, 3), 0.2, opts(100, 1e-3, 1));
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(b.value[i] == doctest::Approx(2.0 * a.value[i]).epsilon(1e-13));
    }

    const FormField bad{1, [](const Vec&) { return FVec::Constant(3, std::numeric_limits<double>::quiet_NaN()); }, "nan"};
    CHECK_THROWS_AS(fk_expectation(*m, bad, x0, Mat::Identity(3, 3), 0.1, opts(100, 1e-3, 1)), InputError);
    CHECK_THROWS_AS(fk_expectation(*m, w, x0, Mat::Identity(3, 3), 0.1, opts(10, 1e-3, 1)), ArgumentError);
    const FormField wrong{1, [](const Vec&) { return FVec::Zero(2); }, "short"};
    CHECK_THROWS_AS(fk_expectation(*m, wrong, x0, Mat::Identity(3, 3), 0.1, opts(100, 1e-3, 1)), ArgumentError);
}
