#include "formkac/development.hpp"

#include <bit>
#include <cmath>
#include <istream>
#include <ostream>

namespace formkac {

namespace {

// Right-hand side of the geodesic + parallel transport system in the chart.
struct GeodesicState {
    Vec x;
    Vec v;
    Mat e;
};

GeodesicState geodesic_rhs(const ManifoldModel& model, const GeodesicState& s)
{
    if (!s.x.allFinite() || !model.in_chart(s.x)) {
        throw StepFailure("geodesic step left the chart");
    }
    GeodesicState d{s.v, -model.christoffel(s.x, s.v, s.v), Mat(s.e.rows(), s.e.cols())};
    for (int a = 0; a < s.e.cols(); ++a) {
        d.e.col(a) = -model.christoffel(s.x, s.v, s.e.col(a));
    }
    return d;
}

GeodesicState axpy(const GeodesicState& s, double h, const GeodesicState& d)
{
    return {s.x + h * d.x, s.v + h * d.v, s.e + h * d.e};
}

// One classical RK4 step over unit parameter time.
GeodesicState geodesic_rk4(const ManifoldModel& model, const GeodesicState& s)
{
    const GeodesicState k1 = geodesic_rhs(model, s);
    const GeodesicState k2 = geodesic_rhs(model, axpy(s, 0.5, k1));
    const GeodesicState k3 = geodesic_rhs(model, axpy(s, 0.5, k2));
    const GeodesicState k4 = geodesic_rhs(model, axpy(s, 1.0, k3));
    return {s.x + (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x) / 6.0,
            s.v + (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v) / 6.0,
            s.e + (k1.e + 2.0 * k2.e + 2.0 * k3.e + k4.e) / 6.0};
}

// Parallel transport of e along the chart segment from y to z.
Mat transport_along_chord(const ManifoldModel& model, const Vec& y, const Vec& z, const Mat& e)
{
    const Vec v = z - y;
    auto rhs = [&](double s, const Mat& m) {
        const Vec p = y + s * v;
        Mat d(m.rows(), m.cols());
        for (int a = 0; a < m.cols(); ++a) {
            d.col(a) = -model.christoffel(p, v, m.col(a));
        }
        return d;
    };
    const Mat k1 = rhs(0.0, e);
    const Mat k2 = rhs(0.5, e + 0.5 * k1);
    const Mat k3 = rhs(0.5, e + 0.5 * k2);
    const Mat k4 = rhs(1.0, e + k3);
    return e + (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
}

}  // namespace

double bridge_local_time(double a, double b, double dt, double u)
{
    a = std::max(a, 0.0);
    b = std::max(b, 0.0);
    const double g = 2.0 * a * b / dt;
    if (g > 50.0) {
        return 0.0;
    }
    const double p_hit = 2.0 / (1.0 + std::exp(g));
    if (u >= p_hit) {
        return 0.0;
    }
    const double s = a + b;
    return std::sqrt(s * s - 2.0 * dt * std::log(u / p_hit)) - s;
}

void orthonormalize_frame(Mat& frame, const Mat& h)
{
    const int n = static_cast<int>(frame.cols());
    const Mat id = Mat::Identity(n, n);
    for (int it = 0; it < 8; ++it) {
        const Mat s = frame.transpose() * h * frame;
        if ((s - id).cwiseAbs().maxCoeff() < 1e-15) {
            break;
        }
        frame = frame * (3.0 * id - s) * 0.5;
    }
}

PathState develop_step(const ManifoldModel& model, const PathState& state, double dt, const Vec& noise,
                       double uniform)
{
    if (!(dt > 0.0)) {
        throw ArgumentError("develop_step: dt must be positive");
    }
    const int n = model.dim();
    if (noise.size() != n || state.x.size() != n) {
        throw ArgumentError("develop_step: dimension mismatch");
    }
    PathState next;
    next.t = state.t + dt;
    const Vec w = std::sqrt(dt) * noise;
    Vec y;
    Mat e;
    if (model.is_flat()) {
        y = state.x + state.frame * w;
        e = state.frame;
    } else {
        GeodesicState g{state.x, state.frame * w, state.frame};
        g = geodesic_rk4(model, g);
        if (!g.x.allFinite() || !model.in_chart(g.x)) {
            throw StepFailure("develop_step: step left the chart");
        }
        y = g.x;
        e = g.e;
    }

    Reflection r{y, 0.0};
    if (model.has_boundary()) {
        r = model.reflect(y);
        if (r.depth > 0.0 && !model.is_flat()) {
            e = transport_along_chord(model, y, r.point, e);
        }
    }
    next.x = r.point;
    model.normalize_chart(next.x, e);
    if (!model.is_flat()) {
        if (!model.in_chart(next.x)) {
            throw StepFailure("develop_step: reflected point left the chart");
        }
        orthonormalize_frame(e, model.metric_at(next.x));
    }
    next.frame = e;

    next.ltime = state.ltime;
    if (model.has_boundary()) {
        const double a = model.signed_boundary_distance(state.x);
        const double b = model.signed_boundary_distance(next.x);
        next.ltime += bridge_local_time(a, b, dt, uniform);
    }
    return next;
}

PathWalker::PathWalker(const ManifoldModel& model, const Vec& x0, const Mat& frame0, double dt, std::uint64_t seed,
                       std::uint64_t path)
    : model_(model), rng_(seed, path), normals_(rng_, PathRng::kNormals), dt_(dt)
{
    if (!(dt > 0.0)) {
        throw ArgumentError("PathWalker: dt must be positive");
    }
    if (x0.size() != model.dim() || frame0.rows() != model.dim() || frame0.cols() != model.dim()) {
        throw ArgumentError("PathWalker: dimension mismatch");
    }
    if (!model.in_chart(x0) || !model.contains(x0)) {
        throw DomainError("PathWalker: start point outside the model");
    }
    const Mat h = model.metric_at(x0);
    const Mat s = frame0.transpose() * h * frame0;
    if ((s - Mat::Identity(model.dim(), model.dim())).cwiseAbs().maxCoeff() > 1e-8) {
        throw ArgumentError("PathWalker: frame0 is not h-orthonormal");
    }
    state_.x = x0;
    state_.frame = frame0;
}

PathState PathWalker::refine(const PathState& s, double dt, const Vec& w, int depth, std::uint64_t& counter) const
{
    const double u = rng_.uniform(PathRng::kRefineUniforms, counter++);
    try {
        return develop_step(model_, s, dt, w / std::sqrt(dt), u);
    } catch (const StepFailure&) {
        if (depth >= kMaxRefine) {
            throw;
        }
    }
    return split(s, dt, w, depth, counter);
}

// Brownian bridge split of the increment w over two halves of dt.
PathState PathWalker::split(const PathState& s, double dt, const Vec& w, int depth, std::uint64_t& counter) const
{
    const int n = model_.dim();
    Vec xi(n);
    for (int j = 0; j < n; ++j) {
        xi(j) = rng_.normal(PathRng::kRefineNormals, counter * 8 + static_cast<std::uint64_t>(j));
    }
    ++counter;
    const Vec w1 = 0.5 * w + std::sqrt(0.25 * dt) * xi;
    const PathState mid = refine(s, 0.5 * dt, w1, depth + 1, counter);
    return refine(mid, 0.5 * dt, w - w1, depth + 1, counter);
}

const PathState& PathWalker::step()
{
    const int n = model_.dim();
    Vec z(n);
    const std::uint64_t base = k_ * static_cast<std::uint64_t>(n);
    for (int j = 0; j < n; ++j) {
        z(j) = normals_(base + static_cast<std::uint64_t>(j));
    }
    const double u = rng_.uniform(PathRng::kUniforms, k_);
    PathState next;
    try {
        next = develop_step(model_, state_, dt_, z, u);
    } catch (const StepFailure&) {
        std::uint64_t counter = k_ * 4096;
        next = split(state_, dt_, std::sqrt(dt_) * z, 0, counter);
    }
    ++k_;
    next.t = static_cast<double>(k_) * dt_;
    state_ = std::move(next);
    return state_;
}

const PathState& PathWalker::advance_to(double t_end)
{
    while (state_.t < t_end - 0.5 * dt_) {
        step();
    }
    return state_;
}

PathSample sample_path(const ManifoldModel& model, const Vec& x0, const Mat& frame0, double T, double dt,
                       std::uint64_t seed, std::uint64_t path)
{
    if (!(T > 0.0)) {
        throw ArgumentError("sample_path: T must be positive");
    }
    PathWalker walker(model, x0, frame0, dt, seed, path);
    const auto steps = static_cast<std::uint64_t>(std::ceil(T / dt - 1e-9));
    PathSample out;
    out.dt = dt;
    out.seed = seed;
    out.path_index = path;
    out.model = model.name();
    out.states.reserve(steps + 1);
    out.states.push_back(walker.state());
    for (std::uint64_t k = 0; k < steps; ++k) {
        out.states.push_back(walker.step());
    }
    return out;
}

std::vector<double> half_line_local_times(double x0, const std::vector<double>& checkpoints, double dt,
                                          std::uint64_t seed, std::uint64_t path)
{
    if (x0 < 0.0 || !(dt > 0.0)) {
        throw ArgumentError("half_line_local_times: need x0 >= 0 and dt > 0");
    }
    const PathRng rng(seed, path);
    NormalReader normals(rng, PathRng::kNormals);
    const double sdt = std::sqrt(dt);
    std::vector<double> out;
    out.reserve(checkpoints.size());
    double x = x0;
    double l = 0.0;
    std::uint64_t k = 0;
    for (double tc : checkpoints) {
        const auto until = static_cast<std::uint64_t>(std::llround(tc / dt));
        for (; k < until; ++k) {
            const double y = std::abs(x + sdt * normals(k));
            if (2.0 * x * y <= 50.0 * dt) {
                l += bridge_local_time(x, y, dt, rng.uniform(PathRng::kUniforms, k));
            }
            x = y;
        }
        out.push_back(l);
    }
    return out;
}

namespace {

static_assert(std::endian::native == std::endian::little, "path dumps assume a little-endian host");

constexpr char kMagic[6] = {'F', 'K', 'P', 'A', 'T', 'H'};
constexpr std::uint32_t kPathVersion = 1;

template <typename T>
void put(std::ostream& os, T v)
{
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is)
{
    T v{};
    if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) {
        throw InputError("read_path: truncated path dump");
    }
    return v;
}

}  // namespace

void write_path(std::ostream& os, const PathSample& path)
{
    const int n = path.states.empty() ? 0 : static_cast<int>(path.states.front().x.size());
    os.write(kMagic, sizeof(kMagic));
    put<std::uint32_t>(os, kPathVersion);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(n));
    put<std::uint64_t>(os, path.states.size());
    put<double>(os, path.dt);
    put<std::uint64_t>(os, path.seed);
    put<std::uint64_t>(os, path.path_index);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(path.model.size()));
    os.write(path.model.data(), static_cast<std::streamsize>(path.model.size()));
    for (const auto& s : path.states) {
        put<double>(os, s.t);
        put<double>(os, s.ltime);
        for (int i = 0; i < n; ++i) {
            put<double>(os, s.x(i));
        }
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < n; ++i) {
                put<double>(os, s.frame(i, j));
            }
        }
    }
}

PathSample read_path(std::istream& is)
{
    char magic[6];
    if (!is.read(magic, sizeof(magic)) || !std::equal(magic, magic + 6, kMagic)) {
        throw InputError("read_path: not a path dump");
    }
    const auto version = get<std::uint32_t>(is);
    if (version != kPathVersion) {
        throw InputError("read_path: unsupported version " + std::to_string(version));
    }
    const auto n = static_cast<int>(get<std::uint32_t>(is));
    if (n < 1 || n > kMaxDim) {
        throw InputError("read_path: bad dimension");
    }
    const auto count = get<std::uint64_t>(is);
    PathSample p;
    p.dt = get<double>(is);
    p.seed = get<std::uint64_t>(is);
    p.path_index = get<std::uint64_t>(is);
    p.model.resize(get<std::uint32_t>(is));
    if (!is.read(p.model.data(), static_cast<std::streamsize>(p.model.size()))) {
        throw InputError("read_path: truncated model name");
    }
    p.states.resize(count);
    for (auto& s : p.states) {
        s.t = get<double>(is);
        s.ltime = get<double>(is);
        s.x.resize(n);
        s.frame.resize(n, n);
        for (int i = 0; i < n; ++i) {
            s.x(i) = get<double>(is);
        }
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < n; ++i) {
                s.frame(i, j) = get<double>(is);
            }
        }
    }
    return p;
}

}  // namespace formkac
