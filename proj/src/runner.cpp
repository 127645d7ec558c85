#include "formkac/runner.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "formkac/estimators.hpp"
#include "formkac/oracles.hpp"
#include "formkac/rng.hpp"
#include "formkac/spin.hpp"
#include "formkac/suite.hpp"

namespace formkac {

namespace {

using nlohmann::ordered_json;

std::string fmt(double v) { return format_number(v); }
std::string fmt(std::size_t v) { return std::to_string(v); }
std::string fmt(int v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "true" : "false"; }

std::string form_label(int n, int q, int i)
{
    if (q == 0) {
        return "1";
    }
    std::string s;
    for (int j : ExteriorBasis::get(n, q).indices(i)) {
        s += (s.empty() ? "" : "^") + std::string("e") + std::to_string(j);
    }
    return s;
}

struct Context {
    const Config& config;
    const ConfigTable& exp;
    std::string kind;
    std::uint64_t seed = 0;  ///< module seed
    int threads = 0;
    ModelPtr model;
};

McOptions mc_options(const Context& ctx)
{
    McOptions o;
    const std::int64_t np = ctx.exp.integer("n_paths", 1000);
    if (np < static_cast<std::int64_t>(kMinPaths)) {
        ctx.exp.fail("n_paths", "must be at least " + std::to_string(kMinPaths));
    }
    o.n_paths = static_cast<std::size_t>(np);
    o.dt = ctx.exp.number("dt", 1e-3);
    if (!(o.dt > 0.0) || !std::isfinite(o.dt)) {
        ctx.exp.fail("dt", "must be positive");
    }
    o.seed = ctx.seed;
    o.threads = ctx.threads;
    return o;
}

std::vector<double> time_grid(const ConfigTable& t, const std::string& key)
{
    const auto times = t.numbers(key);
    if (times.empty()) {
        t.fail(key, "must not be empty");
    }
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!(times[i] > 0.0) || !std::isfinite(times[i]) || (i > 0 && times[i] <= times[i - 1])) {
            t.fail(key, "must be positive and strictly increasing");
        }
    }
    return times;
}

int degree(const Context& ctx, const std::string& key = "q")
{
    const std::int64_t q = ctx.exp.integer(key);
    if (q < 0 || q > ctx.model->dim()) {
        ctx.exp.fail(key, "must be in 0.." + std::to_string(ctx.model->dim()));
    }
    return static_cast<int>(q);
}

Vec point(const Context& ctx, const std::string& key)
{
    if (!ctx.exp.has(key)) {
        return reference_point(*ctx.model);
    }
    const auto v = ctx.exp.numbers(key);
    if (static_cast<int>(v.size()) != ctx.model->dim()) {
        ctx.exp.fail(key, "needs " + std::to_string(ctx.model->dim()) + " coordinates");
    }
    Vec x = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    if (!ctx.model->contains(x)) {
        ctx.exp.fail(key, "point lies outside " + ctx.model->chart_domain());
    }
    return x;
}

ModelPtr load_model(const Config& config)
{
    const ConfigTable& t = config.table("model");
    const std::string id = t.string("id");
    const std::int64_t dim = t.integer("dim");
    std::map<std::string, double> params;
    for (const auto& [key, value] : t.values()) {
        if (key != "id" && key != "dim") {
            params[key] = t.number(key);
        }
    }
    try {
        return make_model(id, static_cast<int>(dim), params);
    } catch (const ArgumentError& e) {
        t.fail("id", e.what());
    }
}

// Form fields described by the optional [field] table.
struct FieldSpec {
    FormField field;
    ScalarField abs;
    std::string type;
    std::function<double(double)> profile;  ///< g(s) for type "profile"
    std::vector<int> components;
    std::vector<double> amplitudes;
};

FieldSpec load_field(const Context& ctx, int q)
{
    static const ConfigTable empty("<defaults>", "field", 0);
    const ConfigTable& t = ctx.config.has_table("field") ? ctx.config.table("field") : empty;
    const int n = ctx.model->dim();
    const int size = binomial(n, q);
    FieldSpec spec;
    spec.type = t.string("type", "gaussian");
    if (spec.type != "profile" && spec.type != "gaussian" && spec.type != "constant") {
        t.fail("type", "expected \"profile\", \"gaussian\" or \"constant\"");
    }
    t.check_keys({"type", "center", "width", "components", "amplitudes"});

    std::vector<double> comps;
    if (t.has("components")) {
        comps = t.numbers("components");
    } else if (spec.type == "profile") {
        comps = {0.0};
    } else {
        for (int i = 0; i < size; ++i) {
            comps.push_back(i);
        }
    }
    for (double c : comps) {
        if (c != std::floor(c) || c < 0 || c >= size) {
            t.fail("components", "basis index out of range 0.." + std::to_string(size - 1));
        }
        spec.components.push_back(static_cast<int>(c));
    }
    spec.amplitudes = t.numbers("amplitudes", std::vector<double>(comps.size(), 1.0 / std::sqrt(comps.size())));
    if (spec.amplitudes.size() != comps.size()) {
        t.fail("amplitudes", "needs one entry per component");
    }
    FVec coeffs = FVec::Zero(size);
    for (std::size_t k = 0; k < comps.size(); ++k) {
        coeffs(spec.components[k]) += spec.amplitudes[k];
    }

    const double width = t.number("width", spec.type == "profile" ? 0.5 : 1.0);
    if (!(width > 0.0)) {
        t.fail("width", "must be positive");
    }
    std::function<double(const Vec&)> env;
    if (spec.type == "profile") {
        if (!ctx.model->has_boundary()) {
            t.fail("type", "profile fields need a model with boundary");
        }
        const double c = t.number("center", 1.0);
        spec.profile = [c, width](double s) { return std::exp(-(s - c) * (s - c) / (2.0 * width * width)); };
        const ManifoldModel* m = ctx.model.get();
        auto g = spec.profile;
        env = [m, g](const Vec& x) { return g(m->signed_boundary_distance(x)); };
    } else if (spec.type == "gaussian") {
        Vec c = reference_point(*ctx.model);
        if (t.has("center")) {
            const auto v = t.numbers("center");
            if (static_cast<int>(v.size()) != n) {
                t.fail("center", "needs " + std::to_string(n) + " coordinates");
            }
            c = Eigen::Map<const Eigen::VectorXd>(v.data(), n);
        }
        env = [c, width](const Vec& x) { return std::exp(-(x - c).squaredNorm() / (2.0 * width * width)); };
    } else {
        env = [](const Vec&) { return 1.0; };
    }
    spec.field = {q, [env, coeffs](const Vec& x) { return FVec(env(x) * coeffs); }, spec.type};
    const double cn = coeffs.norm();
    spec.abs = [env, cn](const Vec& x) { return std::abs(env(x)) * cn; };
    return spec;
}

ScalarField potential(const Context& ctx, const std::string& key, bool alpha, int q)
{
    const std::string def = alpha ? "r_q" : "rho_q";
    const auto it = ctx.exp.values().find(key);
    if (it != ctx.exp.values().end() && std::holds_alternative<double>(it->second.data)) {
        const double c = std::get<double>(it->second.data);
        return [c](const Vec&) { return c; };
    }
    const std::string name = ctx.exp.string(key, def);
    const Potentials pot = curvature_potentials(*ctx.model, q);
    if (name == "r_q") {
        return pot.alpha;
    }
    if (name == "rho_q") {
        return pot.beta;
    }
    ctx.exp.fail(key, "expected \"r_q\", \"rho_q\" or a number");
}

// ---------------------------------------------------------------- kinds

void run_fk(Context& ctx, RunReport& rep)
{
    ctx.exp.check_keys({"kind", "seed", "name", "n_paths", "dt", "q", "x0", "times", "mode", "eps", "oracle",
                        "tolerance"});
    const int q = degree(ctx);
    const Vec x0 = point(ctx, "x0");
    const auto times = time_grid(ctx.exp, "times");
    const McOptions mc = mc_options(ctx);
    FkOptions fko;
    const std::string mode = ctx.exp.string("mode", "projected");
    if (mode == "eps") {
        fko.mode = FunctionalMode::eps;
        fko.eps = ctx.exp.number("eps");
        if (!(fko.eps > 0.0)) {
            ctx.exp.fail("eps", "must be positive");
        }
    } else if (mode != "projected") {
        ctx.exp.fail("mode", "expected \"projected\" or \"eps\"");
    }
    const bool oracle = ctx.exp.boolean("oracle", false);
    const double tol = ctx.exp.number("tolerance", 0.03);
    const FieldSpec fs = load_field(ctx, q);
    const int n = ctx.model->dim();
    if (oracle && (ctx.model->name() != "half_space" && ctx.model->name() != "half_line")) {
        ctx.exp.fail("oracle", "the image-method oracle needs the half_space or half_line model");
    }
    if (oracle && fs.type != "profile") {
        ctx.exp.fail("oracle", "the image-method oracle needs a profile field");
    }

    const auto est = coupled_fk_bound(*ctx.model, fs.field, fs.abs, x0, default_frame(*ctx.model, x0), times, mc, fko);
    rep.table.header = {"t", "component", "estimate", "std_error", "ci_low", "ci_high", "oracle", "rel_err"};
    const int size = binomial(n, q);
    for (const auto& e : est) {
        FVec ref = FVec::Zero(size);
        if (oracle) {
            const auto& basis = ExteriorBasis::get(n, q);
            for (std::size_t k = 0; k < fs.components.size(); ++k) {
                const int c = fs.components[k];
                const bool normal = (basis.mask(c) >> (n - 1)) & 1u;
                ref(c) += fs.amplitudes[k] * image_method_evolve(normal ? KernelKind::dirichlet : KernelKind::neumann,
                                                                 fs.profile, e.t, x0(n - 1));
            }
        }
        FVec v(size);
        for (int c = 0; c < size; ++c) {
            v(c) = e.fk.value[static_cast<std::size_t>(c)];
        }
        const double rel = oracle ? (v - ref).norm() / ref.norm() : std::nan("");
        for (int c = 0; c < size; ++c) {
            const auto ci = static_cast<std::size_t>(c);
            rep.table.add({fmt(e.t), form_label(n, q, c), fmt(e.fk.value[ci]), fmt(e.fk.std_error[ci]),
                           fmt(e.fk.ci_low(ci)), fmt(e.fk.ci_high(ci)), oracle ? fmt(ref(c)) : "",
                           oracle ? fmt(rel) : ""});
        }
        if (oracle) {
            rep.verdicts.push_back({"rel_err_t=" + fmt(e.t), rel < tol, "rel_err " + fmt(rel) + " < " + fmt(tol)});
        }
    }
}

void run_bound(Context& ctx, RunReport& rep)
{
    ctx.exp.check_keys({"kind", "seed", "name", "n_paths", "dt", "q", "x0", "times"});
    const int q = degree(ctx);
    const Vec x0 = point(ctx, "x0");
    const auto times = time_grid(ctx.exp, "times");
    const McOptions mc = mc_options(ctx);
    const FieldSpec fs = load_field(ctx, q);
    const auto est = coupled_fk_bound(*ctx.model, fs.field, fs.abs, x0, default_frame(*ctx.model, x0), times, mc);
    rep.table.header = {"t", "fk_norm", "fk_std_error", "bound", "bound_std_error", "max_norm_ratio",
                        "norm_violations"};
    for (const auto& e : est) {
        double se = 0.0;
        for (double s : e.fk.std_error) {
            se = std::max(se, s);
        }
        const double fk = e.fk.norm();
        const double b = e.bound.value[0];
        rep.table.add({fmt(e.t), fmt(fk), fmt(se), fmt(b), fmt(e.bound.std_error[0]), fmt(e.max_norm_ratio),
                       fmt(e.norm_violations)});
        const double cap = b * (1.0 + 10.0 * mc.dt);
        rep.verdicts.push_back({"bound_dominates_t=" + fmt(e.t), fk <= cap, fmt(fk) + " <= " + fmt(cap)});
        rep.verdicts.push_back({"pathwise_norm_t=" + fmt(e.t), e.norm_violations == 0,
                                fmt(e.norm_violations) + " paths with |M| above the bound functional"});
    }
}

void run_ssp(Context& ctx, RunReport& rep)
{
    ctx.exp.check_keys({"kind", "seed", "name", "n_paths", "dt", "q", "alpha", "beta", "starts", "times",
                        "rate_max", "rate_min", "expect"});
    const int q = degree(ctx);
    const int n = ctx.model->dim();
    const Potentials pot{potential(ctx, "alpha", true, q), potential(ctx, "beta", false, q)};
    std::vector<Vec> starts;
    if (ctx.exp.has("starts")) {
        const auto v = ctx.exp.numbers("starts");
        if (v.empty() || v.size() % static_cast<std::size_t>(n) != 0) {
            ctx.exp.fail("starts", "needs a multiple of " + std::to_string(n) + " coordinates");
        }
        for (std::size_t i = 0; i < v.size(); i += static_cast<std::size_t>(n)) {
            Vec x = Eigen::Map<const Eigen::VectorXd>(v.data() + i, n);
            if (!ctx.model->contains(x)) {
                ctx.exp.fail("starts", "start point outside " + ctx.model->chart_domain());
            }
            starts.push_back(x);
        }
    } else {
        starts.push_back(reference_point(*ctx.model));
    }
    const auto times = time_grid(ctx.exp, "times");
    if (times.size() < 4) {
        ctx.exp.fail("times", "needs at least 4 times");
    }
    const McOptions mc = mc_options(ctx);
    const SspResult r = ssp_rate(*ctx.model, pot, starts, times, mc);
    rep.table.header = {"quantity", "t", "value", "std_error"};
    for (std::size_t i = 0; i < times.size(); ++i) {
        rep.table.add({"log_mean", fmt(times[i]), fmt(r.log_mean[i]), fmt(r.log_stderr[i])});
    }
    rep.table.add({"slope", "", fmt(r.slope), fmt(r.slope_ci / 1.96)});
    rep.table.add({"slope_ci_halfwidth", "", fmt(r.slope_ci), ""});
    rep.table.add({"clipped", "", fmt(r.clipped), ""});
    const std::string ci = "slope " + fmt(r.slope) + " +- " + fmt(r.slope_ci);
    if (ctx.exp.has("rate_max")) {
        const double m = ctx.exp.number("rate_max");
        rep.verdicts.push_back({"rate_max", r.slope <= m, ci + ", bound " + fmt(m)});
    }
    if (ctx.exp.has("rate_min")) {
        const double m = ctx.exp.number("rate_min");
        rep.verdicts.push_back({"rate_min", r.slope >= m, ci + ", bound " + fmt(m)});
    }
    const std::string expect = ctx.exp.string("expect", "none");
    if (expect == "ssp" || expect == "non_ssp") {
        const bool excl = std::abs(r.slope) > r.slope_ci;
        rep.verdicts.push_back({"ci_excludes_zero", excl, ci});
        const bool ok = expect == "ssp" ? r.slope + r.slope_ci < 0.0 : r.slope - r.slope_ci > 0.0;
        rep.verdicts.push_back({"expect_" + expect, ok, ci});
    } else if (expect != "none") {
        ctx.exp.fail("expect", "expected \"ssp\", \"non_ssp\" or \"none\"");
    }
}

void run_theta(Context& ctx, RunReport& rep)
{
    ctx.exp.check_keys({"kind", "seed", "name", "n_paths", "dt", "q", "alpha", "beta", "x0", "t_max", "intervals",
                        "expect_finite"});
    const int q = degree(ctx);
    const Potentials pot{potential(ctx, "alpha", true, q), potential(ctx, "beta", false, q)};
    const Vec x0 = point(ctx, "x0");
    const double t_max = ctx.exp.number("t_max");
    if (!(t_max > 0.0)) {
        ctx.exp.fail("t_max", "must be positive");
    }
    const std::int64_t intervals = ctx.exp.integer("intervals", 128);
    if (intervals < 4) {
        ctx.exp.fail("intervals", "must be at least 4");
    }
    const McOptions mc = mc_options(ctx);
    const ThetaResult r = theta_q(*ctx.model, pot, x0, t_max, mc, static_cast<int>(intervals));
    rep.table.header = {"quantity", "value"};
    rep.table.add({"theta_partial", fmt(r.value)});
    rep.table.add({"std_error", fmt(r.std_error)});
    rep.table.add({"tail_rate", fmt(r.tail_rate)});
    rep.table.add({"tail_estimate", fmt(r.tail_estimate)});
    rep.table.add({"finite", fmt(r.finite)});
    rep.table.add({"clipped", fmt(r.clipped)});
    if (ctx.exp.has("expect_finite")) {
        const bool want = ctx.exp.boolean("expect_finite", true);
        rep.verdicts.push_back({"expect_finite", r.finite == want, "tail rate " + fmt(r.tail_rate)});
    }
}

void run_domination(Context& ctx, RunReport& rep)
{
    ctx.exp.check_keys({"kind", "seed", "name", "n_paths", "dt", "q", "x0", "times", "boundary_samples"});
    const int q = degree(ctx);
    const Vec x0 = point(ctx, "x0");
    const auto times = time_grid(ctx.exp, "times");
    const McOptions mc = mc_options(ctx);
    const std::int64_t bs = ctx.exp.integer("boundary_samples", 1000);
    if (bs < 1) {
        ctx.exp.fail("boundary_samples", "must be positive");
    }
    const FieldSpec fs = load_field(ctx, q);
    const DominationResult r = domination_check(*ctx.model, fs.field, fs.abs, x0, default_frame(*ctx.model, x0),
                                                times, mc, static_cast<std::size_t>(bs));
    rep.table.header = {"t", "lhs", "rhs", "margin", "margin_std_error", "pass"};
    for (const auto& row : r.rows) {
        rep.table.add({fmt(row.t), fmt(row.lhs), fmt(row.rhs), fmt(row.margin), fmt(row.margin_stderr),
                       fmt(row.pass)});
        rep.verdicts.push_back({"domination_t=" + fmt(row.t), row.pass,
                                "margin " + fmt(row.margin) + " - 2 * " + fmt(row.margin_stderr) + " >= 0"});
    }
}

void run_occupation(Context& ctx, RunReport& rep)
{
    ctx.exp.check_keys({"kind", "seed", "name", "n_paths", "dt", "x0", "center", "radius", "times", "expect"});
    const Vec x0 = point(ctx, "x0");
    const Vec center = ctx.exp.has("center") ? point(ctx, "center") : x0;
    const double radius = ctx.exp.number("radius", 1.0);
    if (!(radius > 0.0)) {
        ctx.exp.fail("radius", "must be positive");
    }
    const auto times = time_grid(ctx.exp, "times");
    if (times.size() < 3) {
        ctx.exp.fail("times", "needs at least 3 times");
    }
    const McOptions mc = mc_options(ctx);
    const OccupationResult r = occupation_diagnostic(*ctx.model, x0, center, radius, times, mc);
    rep.table.header = {"t", "occupation", "std_error", "increment_ratio"};
    for (std::size_t i = 0; i < times.size(); ++i) {
        rep.table.add({fmt(times[i]), fmt(r.mean[i]), fmt(r.std_error[i]),
                       i == 0 ? "" : fmt(r.increment_ratio[i - 1])});
    }
    const std::string expect = ctx.exp.string("expect", "none");
    if (expect == "transient" || expect == "recurrent") {
        const bool ok = r.transient == (expect == "transient");
        rep.verdicts.push_back({"expect_" + expect, ok, r.transient ? "transient" : "recurrent"});
    } else if (expect != "none") {
        ctx.exp.fail("expect", "expected \"transient\", \"recurrent\" or \"none\"");
    }
}

void run_intfor(Context& ctx, RunReport& rep)
{
    ctx.exp.check_keys({"kind", "seed", "name", "degrees", "pairs", "fd_steps", "tolerance", "min_order",
                        "radial", "polar", "azimuthal"});
    if (ctx.model->name() != "ball" || ctx.model->dim() != 3) {
        ctx.exp.fail("kind", "intfor runs on the ball model with dim = 3");
    }
    const auto degrees = ctx.exp.numbers("degrees", {1.0, 2.0});
    for (double q : degrees) {
        if (q != 1.0 && q != 2.0 && q != 3.0) {
            ctx.exp.fail("degrees", "degrees must be 1, 2 or 3");
        }
    }
    const std::int64_t pairs = ctx.exp.integer("pairs", 10);
    if (pairs < 1) {
        ctx.exp.fail("pairs", "must be positive");
    }
    const auto steps = ctx.exp.numbers("fd_steps", {2e-3, 1e-3, 5e-4});
    if (steps.size() < 2) {
        ctx.exp.fail("fd_steps", "needs at least two steps");
    }
    for (std::size_t i = 0; i < steps.size(); ++i) {
        if (!(steps[i] > 0.0) || (i > 0 && steps[i] >= steps[i - 1])) {
            ctx.exp.fail("fd_steps", "must be positive and decreasing");
        }
    }
    const double tol = ctx.exp.number("tolerance", 1e-5);
    const double min_order = ctx.exp.number("min_order", 1.8);
    BallQuadrature quad;
    quad.radial = static_cast<int>(ctx.exp.integer("radial", quad.radial));
    quad.polar = static_cast<int>(ctx.exp.integer("polar", quad.polar));
    quad.azimuthal = static_cast<int>(ctx.exp.integer("azimuthal", quad.azimuthal));
    if (quad.radial < 2 || quad.polar < 2 || quad.azimuthal < 2) {
        ctx.exp.fail("radial", "quadrature orders must be at least 2");
    }

    rep.table.header = {"pair", "q", "fd_step", "lhs", "rhs", "residual", "residual_as_printed", "order"};
    double worst = 0.0, worst_order = std::numeric_limits<double>::infinity();
    std::size_t id = 0;
    for (double qd : degrees) {
        const int q = static_cast<int>(qd);
        for (std::int64_t k = 0; k < pairs; ++k, ++id) {
            IntforPair pair = random_intfor_pair(q == 3 ? 2 : q, splitmix64(ctx.seed + id));
            if (q == 3) {
                const FormField inner = pair.omega;
                pair.omega = {3, [inner](const Vec& x) { FVec v(1); v(0) = inner.eval(x).sum(); return v; },
                              "intfor_top"};
            }
            double prev = 0.0;
            for (std::size_t i = 0; i < steps.size(); ++i) {
                quad.fd_step = steps[i];
                const IntforResult r = intfor_check(*ctx.model, pair.f, pair.omega, quad);
                std::string order;
                if (i > 0) {
                    const double o = std::log(prev / r.residual) / std::log(steps[i - 1] / steps[i]);
                    worst_order = std::min(worst_order, o);
                    order = fmt(o);
                }
                if (i + 1 == steps.size()) {
                    worst = std::max(worst, r.residual);
                }
                prev = r.residual;
                rep.table.add({fmt(id), fmt(q), fmt(steps[i]), fmt(r.lhs), fmt(r.rhs), fmt(r.residual),
                               fmt(r.residual_as_printed), order});
            }
        }
    }
    rep.verdicts.push_back({"residual", worst < tol, "max residual " + fmt(worst) + " < " + fmt(tol)});
    rep.verdicts.push_back(
        {"convergence_order", worst_order >= min_order, "min order " + fmt(worst_order) + " >= " + fmt(min_order)});
}

void run_dx(Context& ctx, RunReport& rep)
{
    ctx.exp.check_keys({"kind", "seed", "name", "p", "kappa", "forms", "distances", "box_lo", "box_hi",
                        "nodes_per_dim"});
    if (ctx.model->name() != "hyperbolic") {
        ctx.exp.fail("kind", "dx runs on the hyperbolic model");
    }
    const int n = ctx.model->dim();
    const int p = degree(ctx, "p");
    if (p < 1 || p >= n) {
        ctx.exp.fail("p", "must be in 1.." + std::to_string(n - 1));
    }
    const double kappa = ctx.exp.number("kappa", 1.0);
    const std::int64_t forms = ctx.exp.integer("forms", 20);
    if (forms < 1) {
        ctx.exp.fail("forms", "must be positive");
    }
    const auto distances = ctx.exp.numbers("distances", {3.0, 5.0});
    for (double d : distances) {
        if (!(d > 0.0)) {
            ctx.exp.fail("distances", "must be positive");
        }
    }
    ChartBox box{Vec::Constant(n, -0.5), Vec::Constant(n, 0.5)};
    box.lo(n - 1) = 1.0;
    box.hi(n - 1) = 2.0;
    for (const auto& [key, target] : {std::pair{"box_lo", &box.lo}, std::pair{"box_hi", &box.hi}}) {
        if (ctx.exp.has(key)) {
            const auto v = ctx.exp.numbers(key);
            if (static_cast<int>(v.size()) != n) {
                ctx.exp.fail(key, "needs " + std::to_string(n) + " coordinates");
            }
            *target = Eigen::Map<const Eigen::VectorXd>(v.data(), n);
        }
    }
    if (!(box.lo(n - 1) > 0.0) || ((box.hi - box.lo).array() <= 0.0).any()) {
        ctx.exp.fail("box_lo", "support box must be nonempty and lie in y > 0");
    }
    const int nodes = static_cast<int>(ctx.exp.integer("nodes_per_dim", 12));
    if (nodes < 2) {
        ctx.exp.fail("nodes_per_dim", "must be at least 2");
    }
    // Centres straight above the box, at hyperbolic distance d from its top face.
    std::vector<Vec> centres;
    for (double d : distances) {
        Vec c = 0.5 * (box.lo + box.hi);
        c(n - 1) = box.hi(n - 1) * std::exp(d);
        centres.push_back(c);
    }
    rep.table.header = {"form",     "target_distance", "distance", "lhs",  "rhs", "interior", "constant",
                        "limit_constant", "coth_distance", "holds"};
    bool holds = true, within = true;
    for (std::int64_t k = 0; k < forms; ++k) {
        const FormField w = random_bump_form(n, p, box, splitmix64(ctx.seed + static_cast<std::uint64_t>(k)));
        const auto rows = dx_inequality_eval(*ctx.model, p, kappa, w, box, centres, nodes);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const DxRow& r = rows[i];
            const double ct = 1.0 / std::tanh(r.distance);
            holds = holds && r.holds;
            if (r.limit_constant != 0.0) {
                const double ratio = r.constant / r.limit_constant;
                within = within && ratio >= 1.0 - 1e-12 && ratio <= ct + 1e-12;
            }
            rep.table.add({fmt(static_cast<std::size_t>(k)), fmt(distances[i]), fmt(r.distance), fmt(r.lhs),
                           fmt(r.rhs), fmt(r.interior), fmt(r.constant), fmt(r.limit_constant), fmt(ct),
                           fmt(r.holds)});
        }
    }
    rep.verdicts.push_back({"inequality_holds", holds, "|d w| + |d* w| >= int c(d_x) |w|^2 / |w| on every row"});
    rep.verdicts.push_back({"constant_within_coth", within, "1 <= c(d) / c_limit <= coth(d) on every row"});
}

void run_spinor(Context& ctx, RunReport& rep)
{
    ctx.exp.check_keys({"kind", "seed", "name", "n_paths", "dt", "boundary", "profiles", "x0n", "t"});
    if (ctx.model->name() != "half_space") {
        ctx.exp.fail("kind", "spinor runs on the half_space model");
    }
    const int n = ctx.model->dim();
    const std::string bname = ctx.exp.string("boundary", "mit");
    SpinorBoundaryKind kind = SpinorBoundaryKind::mit;
    if (bname == "chirality") {
        if (n % 2 != 0) {
            ctx.exp.fail("boundary", "chirality needs an even dimension");
        }
        kind = SpinorBoundaryKind::chirality;
    } else if (bname != "mit") {
        ctx.exp.fail("boundary", "expected \"mit\" or \"chirality\"");
    }
    static const std::map<std::string, std::function<double(double)>> catalog = {
        {"gaussian", [](double s) { return std::exp(-s * s); }},
        {"shifted", [](double s) { return std::exp(-(s - 1.0) * (s - 1.0) / 0.5); }},
        {"exp_decay", [](double s) { return (1.0 + s) * std::exp(-s); }},
    };
    std::vector<std::string> profiles = {"gaussian", "shifted", "exp_decay"};
    if (ctx.exp.has("profiles")) {
        profiles = ctx.exp.strings("profiles");
    }
    for (const auto& p : profiles) {
        if (!catalog.count(p)) {
            ctx.exp.fail("profiles", "unknown profile '" + p + "' (gaussian, shifted, exp_decay)");
        }
    }
    const double x0n = ctx.exp.number("x0n", 0.5);
    if (!(x0n >= 0.0)) {
        ctx.exp.fail("x0n", "must be non-negative");
    }
    const double t = ctx.exp.number("t", 0.5);
    if (!(t > 0.0)) {
        ctx.exp.fail("t", "must be positive");
    }
    const McOptions mc = mc_options(ctx);
    const CliffordModule cl = build_clifford(n);
    // Unit spinor drawn from the module seed.
    const PathRng rng(derive_seed(ctx.seed, "spinor_state"), 0);
    SpinVec s0(cl.spinor_dim);
    for (int i = 0; i < cl.spinor_dim; ++i) {
        s0(i) = Complex(rng.normal(PathRng::kNormals, 2 * static_cast<std::uint64_t>(i)),
                        rng.normal(PathRng::kNormals, 2 * static_cast<std::uint64_t>(i) + 1));
    }
    s0.normalize();

    rep.table.header = {"profile", "lhs", "rhs", "rhs_std_error", "margin", "mc_norm", "mc_norm_std_error",
                        "dominating", "pass"};
    for (const auto& p : profiles) {
        const SpinorBoundCheck r = spinor_fk_bound_check(cl, kind, catalog.at(p), s0, x0n, t, mc);
        rep.table.add({p, fmt(r.lhs), fmt(r.rhs), fmt(r.rhs_stderr), fmt(r.margin), fmt(r.mc_norm),
                       fmt(r.mc_norm_stderr), fmt(r.dominating), fmt(r.pass)});
        rep.verdicts.push_back({"bound_" + p, r.pass, fmt(r.lhs) + " <= " + fmt(r.rhs) + " + 2 * " + fmt(r.rhs_stderr)});
        rep.verdicts.push_back({"dominated_" + p, r.mc_norm <= r.dominating, fmt(r.mc_norm) + " <= " + fmt(r.dominating)});
    }
}

void run_algebra_suite(Context& ctx, RunReport& rep)
{
    ctx.exp.check_keys({"kind", "seed", "name", "n_max", "tolerance"});
    const std::int64_t n_max = ctx.exp.integer("n_max", kMaxDim);
    if (n_max < 2 || n_max > kMaxDim) {
        ctx.exp.fail("n_max", "must be in 2.." + std::to_string(kMaxDim));
    }
    const double tol = ctx.exp.number("tolerance", 1e-12);
    rep.table.header = {"suite", "check", "subject", "n", "q", "error", "tolerance", "pass"};
    std::size_t failed = 0, total = 0;
    auto add = [&](const std::string& suite, const std::vector<IdentityCheck>& checks) {
        for (const auto& c : checks) {
            if (c.n > n_max) {
                continue;
            }
            ++total;
            failed += c.pass() ? 0 : 1;
            rep.table.add({suite, c.name, c.subject, fmt(c.n), c.q < 0 ? "" : fmt(c.q), fmt(c.error),
                           fmt(c.tolerance), fmt(c.pass())});
        }
    };
    add("form_algebra", form_algebra_checks(static_cast<int>(n_max), derive_seed(ctx.seed, "form_algebra"), tol));
    add("curvature", curvature_pinning_checks(derive_seed(ctx.seed, "curvature"), tol));
    add("spin", spinor_algebra_checks(derive_seed(ctx.seed, "spin"), tol));
    rep.verdicts.push_back({"identities", failed == 0, fmt(failed) + " of " + fmt(total) + " checks failed"});
}

ordered_json cell_json(const std::string& s)
{
    if (s.empty()) {
        return nullptr;
    }
    if (s == "true" || s == "false") {
        return s == "true";
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(v)) {
        return v;
    }
    return s;
}

}  // namespace

std::string format_number(double v)
{
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string encode_csv(const ResultTable& table)
{
    std::string out;
    auto line = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const std::string& c = cells[i];
            if (i) {
                out += ',';
            }
            if (c.find_first_of(",\"\r\n") != std::string::npos) {
                out += '"';
                for (char ch : c) {
                    out += ch;
                    if (ch == '"') {
                        out += '"';
                    }
                }
                out += '"';
            } else {
                out += c;
            }
        }
        out += '\n';
    };
    line(table.header);
    for (const auto& r : table.rows) {
        line(r);
    }
    return out;
}

bool RunReport::pass() const { return failures() == 0; }

std::size_t RunReport::failures() const
{
    return static_cast<std::size_t>(std::count_if(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return !v.pass; }));
}

RunReport run_experiment(const Config& config, const RunOptions& opts)
{
    const auto start = std::chrono::steady_clock::now();
    const ConfigTable& exp = config.table("experiment");
    const std::string kind = exp.string("kind");
    if (std::find(experiment_kinds().begin(), experiment_kinds().end(), kind) == experiment_kinds().end()) {
        exp.fail("kind", "unknown experiment kind '" + kind + "'");
    }
    const std::uint64_t seed = opts.seed_override ? *opts.seed_override : exp.seed("seed");
    if (opts.threads < 0) {
        throw ArgumentError("threads must be non-negative");
    }

    Context ctx{config, exp, kind, derive_seed(seed, kind), opts.threads, nullptr};
    RunReport rep;
    rep.kind = kind;
    rep.seed = seed;
    if (kind != "algebra-suite") {
        ctx.model = load_model(config);
        rep.model = ctx.model->name();
        rep.dim = ctx.model->dim();
    }

    if (kind == "fk") {
        run_fk(ctx, rep);
    } else if (kind == "bound") {
        run_bound(ctx, rep);
    } else if (kind == "ssp") {
        run_ssp(ctx, rep);
    } else if (kind == "theta") {
        run_theta(ctx, rep);
    } else if (kind == "domination") {
        run_domination(ctx, rep);
    } else if (kind == "occupation") {
        run_occupation(ctx, rep);
    } else if (kind == "intfor") {
        run_intfor(ctx, rep);
    } else if (kind == "dx") {
        run_dx(ctx, rep);
    } else if (kind == "spinor") {
        run_spinor(ctx, rep);
    } else {
        run_algebra_suite(ctx, rep);
    }
    rep.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
}

std::string summary_json(const RunReport& report)
{
    ordered_json j;
    j["schema_version"] = kSummarySchemaVersion;
    j["kind"] = report.kind;
    j["seed"] = report.seed;
    if (report.model.empty()) {
        j["model"] = nullptr;
    } else {
        j["model"] = {{"id", report.model}, {"dim", report.dim}};
    }
    j["wall_time_s"] = report.wall_time_s;
    j["status"] = report.pass() ? "pass" : "fail";
    j["failures"] = report.failures();
    j["verdicts"] = ordered_json::array();
    for (const auto& v : report.verdicts) {
        j["verdicts"].push_back({{"name", v.name}, {"pass", v.pass}, {"detail", v.detail}});
    }
    j["columns"] = report.table.header;
    j["results"] = ordered_json::array();
    for (const auto& row : report.table.rows) {
        ordered_json r = ordered_json::object();
        for (std::size_t i = 0; i < row.size() && i < report.table.header.size(); ++i) {
            r[report.table.header[i]] = cell_json(row[i]);
        }
        j["results"].push_back(std::move(r));
    }
    j["results_csv"] = "results.csv";
    return j.dump(2) + "\n";
}

void write_report(const RunReport& report, const std::filesystem::path& out_dir)
{
    std::filesystem::create_directories(out_dir);
    auto write = [](const std::filesystem::path& path, const std::string& text) {
        std::ofstream f(path, std::ios::binary);
        f << text;
        if (!f) {
            throw std::runtime_error("cannot write " + path.string());
        }
    };
    write(out_dir / "results.csv", encode_csv(report.table));
    write(out_dir / "summary.json", summary_json(report));
}

int run_command(const std::string& config_path, const std::filesystem::path& out_dir, const RunOptions& opts,
                std::ostream& out, std::ostream& err)
{
    try {
        const Config config = Config::load(config_path);
        const RunReport rep = run_experiment(config, opts);
        write_report(rep, out_dir);
        for (const auto& v : rep.verdicts) {
            out << (v.pass ? "PASS " : "FAIL ") << v.name << ": " << v.detail << "\n";
        }
        out << rep.kind << ": " << rep.verdicts.size() - rep.failures() << "/" << rep.verdicts.size()
            << " verdicts passed, " << format_number(rep.wall_time_s) << " s, results in " << out_dir.string() << "\n";
        return rep.pass() ? 0 : 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

std::string list_models_text()
{
    std::ostringstream os;
    for (const auto& m : model_catalog()) {
        os << m.id << "  dim " << m.min_dim << ".." << m.max_dim << "  " << m.description << "\n";
        for (const auto& p : m.params) {
            os << "    " << p.name << " = " << format_number(p.default_value) << "  range " << p.range << "\n";
        }
    }
    return os.str();
}

std::string list_models_json()
{
    ordered_json arr = ordered_json::array();
    for (const auto& m : model_catalog()) {
        ordered_json params = ordered_json::array();
        for (const auto& p : m.params) {
            params.push_back({{"name", p.name}, {"default", p.default_value}, {"range", p.range}});
        }
        arr.push_back({{"id", m.id},
                       {"description", m.description},
                       {"min_dim", m.min_dim},
                       {"max_dim", m.max_dim},
                       {"params", params}});
    }
    return arr.dump(2) + "\n";
}

}  // namespace formkac
