#include "formkac/estimators.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "formkac/parallel.hpp"

namespace formkac {

namespace {

struct Moments {
    double mean = 0.0;
    double std_error = 0.0;
};

// Mean and standard error of samples[i * stride + offset], i in index order.
Moments moments(const std::vector<double>& samples, std::size_t count, std::size_t stride, std::size_t offset)
{
    KahanSum sum;
    for (std::size_t i = 0; i < count; ++i) {
        sum.add(samples[i * stride + offset]);
    }
    const double mean = sum.value() / static_cast<double>(count);
    KahanSum sq;
    for (std::size_t i = 0; i < count; ++i) {
        const double d = samples[i * stride + offset] - mean;
        sq.add(d * d);
    }
    const double var = count > 1 ? sq.value() / static_cast<double>(count - 1) : 0.0;
    return {mean, std::sqrt(var / static_cast<double>(count))};
}

void check_options(const McOptions& opts, const char* who)
{
    if (opts.n_paths < kMinPaths) {
        throw ArgumentError(std::string(who) + ": n_paths must be at least " + std::to_string(kMinPaths));
    }
    if (!(opts.dt > 0.0)) {
        throw ArgumentError(std::string(who) + ": dt must be positive");
    }
}

void check_times(const std::vector<double>& times, const char* who)
{
    if (times.empty()) {
        throw ArgumentError(std::string(who) + ": empty time grid");
    }
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!(times[i] > 0.0) || (i > 0 && !(times[i] > times[i - 1]))) {
            throw ArgumentError(std::string(who) + ": times must be positive and increasing");
        }
    }
}

void check_start(const ManifoldModel& model, const Vec& x0, const char* who)
{
    if (x0.size() != model.dim() || !model.in_chart(x0) || !model.contains(x0)) {
        throw DomainError(std::string(who) + ": start point outside the model");
    }
}

// Advances the walker to time t, feeding each step to on_step(prev, cur).
template <typename OnStep>
void walk_to(PathWalker& walker, double t, double dt, OnStep&& on_step)
{
    while (walker.state().t < t - 0.5 * dt) {
        const PathState prev = walker.state();
        const PathState& cur = walker.step();
        on_step(prev, cur);
    }
}

// Exponent 1/2 int alpha ds + int beta dl of one step.
double step_exponent(const ManifoldModel& model, const Potentials& pot, const PathState& prev, const PathState& cur)
{
    double e = 0.5 * pot.alpha(prev.x) * (cur.t - prev.t);
    const double dl = cur.ltime - prev.ltime;
    if (dl > 0.0) {
        e += pot.beta(model.boundary_projection(cur.x)) * dl;
    }
    return e;
}

// exp(-e) with the exponent clipped at kExponentClip.
double clipped_exp(double e, std::size_t& clipped)
{
    if (-e > kExponentClip) {
        ++clipped;
        return std::exp(kExponentClip);
    }
    return std::exp(-e);
}

}  // namespace

double EstimateReport::norm() const
{
    double s = 0.0;
    for (double v : value) {
        s += v * v;
    }
    return std::sqrt(s);
}

Mat default_frame(const ManifoldModel& model, const Vec& x0) { return model.frame_at(x0); }

FVec lift_form(const ManifoldModel& model, const FormField& omega, const PathState& s)
{
    const int n = model.dim();
    const FVec w = omega.eval(s.x);
    if (w.size() != binomial(n, omega.degree)) {
        throw ArgumentError("lift_form: field '" + omega.name + "' returned the wrong number of coefficients");
    }
    if (!w.allFinite()) {
        throw InputError("form field '" + omega.name + "' is not finite at a sampled point");
    }
    const Mat g = frame_rotation(model, s);
    if ((g - Mat::Identity(n, n)).cwiseAbs().maxCoeff() == 0.0) {
        return w;
    }
    return compound_matrix(g, omega.degree).transpose() * w;
}

std::uint64_t inputs_digest(const ManifoldModel& model, const std::string& what, const Vec& x0, double t, int q,
                            const McOptions& opts)
{
    std::ostringstream os;
    os << std::setprecision(17) << what << '|' << model.name() << '|' << model.dim();
    for (const auto& [k, v] : model.params()) {
        os << '|' << k << '=' << v;
    }
    for (int i = 0; i < x0.size(); ++i) {
        os << '|' << x0(i);
    }
    os << '|' << t << '|' << q << '|' << opts.n_paths << '|' << opts.dt << '|' << opts.seed;
    return fnv1a(os.str());
}

std::vector<CoupledEstimate> coupled_fk_bound(const ManifoldModel& model, const FormField& omega0,
                                              const ScalarField& abs_omega0, const Vec& x0, const Mat& frame0,
                                              const std::vector<double>& times, const McOptions& opts,
                                              const FkOptions& fk)
{
    check_options(opts, "fk_expectation");
    check_times(times, "fk_expectation");
    check_start(model, x0, "fk_expectation");
    const int q = omega0.degree;
    if (q < 0 || q > model.dim()) {
        throw ArgumentError("fk_expectation: form degree does not match the model dimension");
    }
    const std::size_t size = static_cast<std::size_t>(binomial(model.dim(), q));
    const std::size_t nt = times.size();
    const std::size_t np = opts.n_paths;
    std::vector<double> fk_vals(np * nt * size);
    std::vector<double> bound_vals(np * nt);
    std::vector<double> ratios(np * nt);

    parallel_for(np, opts.threads, [&](std::size_t p) {
        PathWalker walker(model, x0, frame0, opts.dt, opts.seed, p);
        FunctionalEvolver ev(model, q, fk.mode, fk.eps);
        for (std::size_t j = 0; j < nt; ++j) {
            walk_to(walker, times[j], opts.dt, [&](const PathState& a, const PathState& b) { ev.advance(a, b); });
            const PathState& s = walker.state();
            const FVec v = ev.matrix() * lift_form(model, omega0, s);
            for (std::size_t c = 0; c < size; ++c) {
                fk_vals[(p * nt + j) * size + c] = v(static_cast<int>(c));
            }
            const double amp = abs_omega0(s.x);
            if (!std::isfinite(amp)) {
                throw InputError("field |" + omega0.name + "| is not finite at a sampled point");
            }
            const double b = std::exp(ev.log_bound());
            bound_vals[p * nt + j] = amp * b;
            const double mn = operator_norm(ev.matrix());
            ratios[p * nt + j] = (b > 0.0) ? mn / b : (mn > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
        }
    });

    std::vector<CoupledEstimate> out(nt);
    for (std::size_t j = 0; j < nt; ++j) {
        CoupledEstimate& ce = out[j];
        ce.t = times[j];
        ce.fk.n_paths = ce.bound.n_paths = np;
        ce.fk.seed = ce.bound.seed = opts.seed;
        ce.fk.t = ce.bound.t = times[j];
        ce.fk.inputs_digest = inputs_digest(model, "fk:" + omega0.name, x0, times[j], q, opts);
        ce.bound.inputs_digest = inputs_digest(model, "bound:" + omega0.name, x0, times[j], q, opts);
        for (std::size_t c = 0; c < size; ++c) {
            const Moments m = moments(fk_vals, np, nt * size, j * size + c);
            ce.fk.value.push_back(m.mean);
            ce.fk.std_error.push_back(m.std_error);
        }
        const Moments mb = moments(bound_vals, np, nt, j);
        ce.bound.value = {mb.mean};
        ce.bound.std_error = {mb.std_error};
        for (std::size_t p = 0; p < np; ++p) {
            const double r = ratios[p * nt + j];
            ce.max_norm_ratio = std::max(ce.max_norm_ratio, r);
            if (r > 1.0 + 10.0 * opts.dt) {
                ++ce.norm_violations;
            }
        }
    }
    return out;
}

EstimateReport fk_expectation(const ManifoldModel& model, const FormField& omega0, const Vec& x0, const Mat& frame0,
                              double t, const McOptions& opts, const FkOptions& fk)
{
    const ScalarField one = [](const Vec&) { return 1.0; };
    return coupled_fk_bound(model, omega0, one, x0, frame0, {t}, opts, fk).front().fk;
}

EstimateReport pointwise_bound(const ManifoldModel& model, const ScalarField& abs_omega0, int q, const Vec& x0,
                               const Mat& frame0, double t, const McOptions& opts)
{
    const int size = binomial(model.dim(), q);
    const FormField zero{q, [size](const Vec&) { return FVec(FVec::Zero(size)); }, "zero"};
    auto rep = coupled_fk_bound(model, zero, abs_omega0, x0, frame0, {t}, opts).front().bound;
    rep.inputs_digest = inputs_digest(model, "bound", x0, t, q, opts);
    return rep;
}

Potentials curvature_potentials(const ManifoldModel& model, int q)
{
    const ManifoldModel* m = &model;
    return {[m, q](const Vec& x) { return m->r_q_at(x, q); },
            [m, q](const Vec& p) { return rho_q_extended(*m, p, q); }};
}

SspResult ssp_rate(const ManifoldModel& model, const Potentials& pot, const std::vector<Vec>& starts,
                   const std::vector<double>& times, const McOptions& opts)
{
    check_options(opts, "ssp_rate");
    check_times(times, "ssp_rate");
    if (times.size() < 4) {
        throw ArgumentError("ssp_rate: need at least 4 times");
    }
    if (starts.empty()) {
        throw ArgumentError("ssp_rate: empty start set");
    }
    const std::size_t nt = times.size();
    const std::size_t np = opts.n_paths;
    SspResult res;
    res.times = times;
    res.log_mean.assign(nt, -std::numeric_limits<double>::infinity());
    res.log_stderr.assign(nt, 0.0);

    for (std::size_t si = 0; si < starts.size(); ++si) {
        const Vec& x0 = starts[si];
        check_start(model, x0, "ssp_rate");
        const Mat frame0 = default_frame(model, x0);
        std::vector<double> vals(np * nt);
        std::vector<std::size_t> clips(np, 0);
        parallel_for(np, opts.threads, [&](std::size_t p) {
            PathWalker walker(model, x0, frame0, opts.dt, opts.seed + si * 0x9E3779B97F4A7C15ull, p);
            double e = 0.0;
            for (std::size_t j = 0; j < nt; ++j) {
                walk_to(walker, times[j], opts.dt,
                        [&](const PathState& a, const PathState& b) { e += step_exponent(model, pot, a, b); });
                vals[p * nt + j] = clipped_exp(e, clips[p]);
            }
        });
        for (std::size_t c : clips) {
            res.clipped += c;
        }
        for (std::size_t j = 0; j < nt; ++j) {
            const Moments m = moments(vals, np, nt, j);
            const double lm = std::log(m.mean);
            if (lm > res.log_mean[j]) {
                res.log_mean[j] = lm;
                res.log_stderr[j] = m.std_error / m.mean;
            }
        }
    }

    double tbar = 0.0;
    for (double t : times) {
        tbar += t;
    }
    tbar /= static_cast<double>(nt);
    double sxx = 0.0;
    for (double t : times) {
        sxx += (t - tbar) * (t - tbar);
    }
    // The log-means share paths, so their errors are combined without
    // assuming independence: |sum w_i e_i| <= sum |w_i| se_i.
    for (std::size_t j = 0; j < nt; ++j) {
        const double w = (times[j] - tbar) / sxx;
        res.slope += w * res.log_mean[j];
        res.slope_ci += 1.96 * std::abs(w) * res.log_stderr[j];
    }
    res.ssp = res.slope + res.slope_ci < 0.0;
    return res;
}

ThetaResult theta_q(const ManifoldModel& model, const Potentials& pot, const Vec& x0, double t_max,
                    const McOptions& opts, int intervals)
{
    check_options(opts, "theta_q");
    check_start(model, x0, "theta_q");
    if (!(t_max > 0.0) || intervals < 4) {
        throw ArgumentError("theta_q: need T_max > 0 and at least 4 intervals");
    }
    const double h = t_max / intervals;
    if (h < opts.dt * (1.0 - 1e-9)) {
        throw ArgumentError("theta_q: grid spacing below dt");
    }
    const std::size_t ng = static_cast<std::size_t>(intervals) + 1;
    const std::size_t np = opts.n_paths;
    const Mat frame0 = default_frame(model, x0);
    std::vector<double> vals(np * ng);
    std::vector<double> integrals(np);
    std::vector<std::size_t> clips(np, 0);
    parallel_for(np, opts.threads, [&](std::size_t p) {
        PathWalker walker(model, x0, frame0, opts.dt, opts.seed, p);
        double e = 0.0;
        vals[p * ng] = 1.0;
        for (std::size_t j = 1; j < ng; ++j) {
            walk_to(walker, static_cast<double>(j) * h, opts.dt,
                    [&](const PathState& a, const PathState& b) { e += step_exponent(model, pot, a, b); });
            vals[p * ng + j] = clipped_exp(e, clips[p]);
        }
        KahanSum s;
        for (std::size_t j = 0; j < ng; ++j) {
            const double w = (j == 0 || j + 1 == ng) ? 0.5 : 1.0;
            s.add(w * h * vals[p * ng + j]);
        }
        integrals[p] = s.value();
    });

    ThetaResult res;
    for (std::size_t c : clips) {
        res.clipped += c;
    }
    const Moments mi = moments(integrals, np, 1, 0);
    res.value = mi.mean;
    res.std_error = mi.std_error;

    // Least-squares rate of log E[...] on the second half of the grid.
    std::vector<double> ts, ys;
    for (std::size_t j = ng / 2; j < ng; ++j) {
        const double m = moments(vals, np, ng, j).mean;
        if (m > 0.0) {
            ts.push_back(static_cast<double>(j) * h);
            ys.push_back(std::log(m));
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
        res.tail_rate = sxy / sxx;
    } else {
        res.tail_rate = -std::numeric_limits<double>::infinity();
    }
    res.finite = res.tail_rate < 0.0;
    if (res.finite) {
        const double last = moments(vals, np, ng, ng - 1).mean;
        res.tail_estimate = std::isinf(res.tail_rate) ? 0.0 : last / (-res.tail_rate);
    } else {
        res.tail_estimate = std::numeric_limits<double>::infinity();
    }
    return res;
}

std::vector<Vec> sample_boundary_points(const ManifoldModel& model, const Vec& x0, double spread, std::size_t count,
                                        std::uint64_t seed)
{
    if (!model.has_boundary()) {
        return {};
    }
    const int n = model.dim();
    const PathRng rng(seed, 0);
    std::vector<Vec> out;
    std::uint64_t idx = 0;
    for (std::size_t attempt = 0; out.size() < count && attempt < 20 * count; ++attempt) {
        Vec y(n);
        for (int j = 0; j < n; ++j) {
            y(j) = x0(j) + spread * rng.normal(PathRng::kNormals, idx++);
        }
        if (!model.in_chart(y)) {
            continue;
        }
        const Vec p = model.boundary_projection(y);
        if (model.in_chart(p) && model.on_boundary(p)) {
            out.push_back(p);
        }
    }
    return out;
}

DominationResult domination_check(const ManifoldModel& model, const FormField& omega0, const ScalarField& abs_omega0,
                                  const Vec& x0, const Mat& frame0, const std::vector<double>& times,
                                  const McOptions& opts, std::size_t boundary_samples)
{
    const int q = omega0.degree;
    const int n = model.dim();
    DominationResult res;
    res.rho_min = std::numeric_limits<double>::infinity();
    const auto pts = sample_boundary_points(model, x0, 1.0, boundary_samples, derive_seed(opts.seed, "domination"));
    for (const Vec& p : pts) {
        const double rho = rho_q_extended(model, p, q);
        res.rho_min = std::min(res.rho_min, rho);
        if (rho < -1e-12) {
            std::ostringstream os;
            os << "domination_check: rho_(" << q << ") = " << rho << " < 0 at boundary point (";
            for (int i = 0; i < p.size(); ++i) {
                os << (i ? ", " : "") << p(i);
            }
            os << ")";
            throw PreconditionError(os.str());
        }
    }
    // Interior sample for the infimum of r_(q).
    res.r_min = model.r_q_at(x0, q);
    {
        const PathRng rng(derive_seed(opts.seed, "domination-interior"), 0);
        std::uint64_t idx = 0;
        for (std::size_t i = 0; i < boundary_samples; ++i) {
            Vec y(n);
            for (int j = 0; j < n; ++j) {
                y(j) = x0(j) + rng.normal(PathRng::kNormals, idx++);
            }
            if (model.in_chart(y) && model.contains(y)) {
                res.r_min = std::min(res.r_min, model.r_q_at(y, q));
            }
        }
    }

    check_options(opts, "domination_check");
    check_times(times, "domination_check");
    check_start(model, x0, "domination_check");
    const std::size_t size = static_cast<std::size_t>(binomial(n, q));
    const std::size_t nt = times.size();
    const std::size_t np = opts.n_paths;
    std::vector<double> fk_vals(np * nt * size);
    std::vector<double> scalar_vals(np * nt);
    parallel_for(np, opts.threads, [&](std::size_t p) {
        PathWalker walker(model, x0, frame0, opts.dt, opts.seed, p);
        FunctionalEvolver ev(model, q, FunctionalMode::projected);
        for (std::size_t j = 0; j < nt; ++j) {
            walk_to(walker, times[j], opts.dt, [&](const PathState& a, const PathState& b) { ev.advance(a, b); });
            const PathState& s = walker.state();
            const FVec v = ev.matrix() * lift_form(model, omega0, s);
            for (std::size_t c = 0; c < size; ++c) {
                fk_vals[(p * nt + j) * size + c] = v(static_cast<int>(c));
            }
            scalar_vals[p * nt + j] = abs_omega0(s.x);
        }
    });

    res.pass = true;
    for (std::size_t j = 0; j < nt; ++j) {
        const double t = times[j];
        FVec mean = FVec::Zero(static_cast<int>(size));
        for (std::size_t c = 0; c < size; ++c) {
            mean(static_cast<int>(c)) = moments(fk_vals, np, nt * size, j * size + c).mean;
        }
        const double lhs = mean.norm();
        const FVec dir = lhs > 0.0 ? FVec(mean / lhs) : FVec(FVec::Zero(static_cast<int>(size)));
        const double factor = binomial(n, q) * std::exp(-0.5 * t * res.r_min);
        // Per-path margin whose mean is rhs - lhs, for a coupled stderr.
        std::vector<double> d(np);
        for (std::size_t p = 0; p < np; ++p) {
            double proj = 0.0;
            for (std::size_t c = 0; c < size; ++c) {
                proj += dir(static_cast<int>(c)) * fk_vals[(p * nt + j) * size + c];
            }
            d[p] = factor * scalar_vals[p * nt + j] - proj;
        }
        const Moments md = moments(d, np, 1, 0);
        DominationRow row;
        row.t = t;
        row.lhs = lhs;
        row.rhs = factor * moments(scalar_vals, np, nt, j).mean;
        row.margin = md.mean;
        row.margin_stderr = md.std_error;
        row.pass = row.margin - 2.0 * row.margin_stderr >= 0.0;
        res.pass = res.pass && row.pass;
        res.rows.push_back(row);
    }
    return res;
}

OccupationResult occupation_diagnostic(const ManifoldModel& model, const Vec& x0, const Vec& center, double radius,
                                       const std::vector<double>& times, const McOptions& opts)
{
    check_options(opts, "occupation_diagnostic");
    check_times(times, "occupation_diagnostic");
    check_start(model, x0, "occupation_diagnostic");
    if (!(radius > 0.0) || center.size() != model.dim()) {
        throw ArgumentError("occupation_diagnostic: the set must be a chart ball");
    }
    const std::size_t nt = times.size();
    const std::size_t np = opts.n_paths;
    const Mat frame0 = default_frame(model, x0);
    std::vector<double> vals(np * nt);
    parallel_for(np, opts.threads, [&](std::size_t p) {
        PathWalker walker(model, x0, frame0, opts.dt, opts.seed, p);
        double occ = 0.0;
        for (std::size_t j = 0; j < nt; ++j) {
            walk_to(walker, times[j], opts.dt, [&](const PathState& a, const PathState& b) {
                if ((a.x - center).norm() < radius) {
                    occ += b.t - a.t;
                }
            });
            vals[p * nt + j] = occ;
        }
    });
    OccupationResult res;
    res.times = times;
    for (std::size_t j = 0; j < nt; ++j) {
        const Moments m = moments(vals, np, nt, j);
        res.mean.push_back(m.mean);
        res.std_error.push_back(m.std_error);
        if (j > 0) {
            const double prev = res.mean[j - 1];
            res.increment_ratio.push_back(prev > 0.0 ? (m.mean - prev) / prev
                                                     : std::numeric_limits<double>::infinity());
        }
    }
    const std::size_t r = res.increment_ratio.size();
    res.transient = r >= 2 && res.increment_ratio[r - 1] < kTransienceThreshold &&
                    res.increment_ratio[r - 2] < kTransienceThreshold;
    return res;
}

}  // namespace formkac
