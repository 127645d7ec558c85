#pragma once

// Horizontal reflecting Brownian motion: a geodesic random walk on the frame
// bundle, folded back at the boundary, with boundary local time.
//
// Local time normalization: l^t is the nondecreasing process with
// d(dist to boundary) = dB + dl, so on the half-line |W_t| = B_t + l_t and
// E l_t = sqrt(2t/pi).

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "formkac/geometry.hpp"
#include "formkac/rng.hpp"

namespace formkac {

struct PathState {
    Vec x;
    Mat frame;          ///< columns: h-orthonormal frame u at x
    double ltime = 0.0;
    double t = 0.0;
};

struct PathSample {
    std::vector<PathState> states;
    double dt = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t path_index = 0;
    std::string model;
};

/// Largest number of dt-halvings a failed step may be split into.
inline constexpr int kMaxRefine = 6;

/// One step of the walk. `noise` holds n standard normals, `uniform` is the
/// U(0,1) draw that decides the local-time increment. Throws StepFailure when
/// the step cannot be completed at this dt.
PathState develop_step(const ManifoldModel& model, const PathState& state, double dt, const Vec& noise,
                       double uniform);

/// Local time accrued by reflected Brownian motion over a step of length dt
/// whose endpoints lie at boundary distances a and b, given the U(0,1) draw u.
/// Samples the exact conditional law; zero unless the bridge touches.
double bridge_local_time(double a, double b, double dt, double u);

/// Polar re-orthonormalization of a frame with respect to the metric h.
void orthonormalize_frame(Mat& frame, const Mat& h);

/// Streams the steps of path number `path` of a seeded ensemble.
class PathWalker {
public:
    PathWalker(const ManifoldModel& model, const Vec& x0, const Mat& frame0, double dt, std::uint64_t seed,
               std::uint64_t path);

    const PathState& state() const { return state_; }
    std::uint64_t steps_taken() const { return k_; }
    /// Advance one step of length dt (split internally if a step fails).
    const PathState& step();
    /// Advance until t >= t_end (to within dt / 2).
    const PathState& advance_to(double t_end);

private:
    PathState refine(const PathState& s, double dt, const Vec& w, int depth, std::uint64_t& counter) const;
    PathState split(const PathState& s, double dt, const Vec& w, int depth, std::uint64_t& counter) const;

    const ManifoldModel& model_;
    PathRng rng_;
    NormalReader normals_;
    PathState state_;
    double dt_;
    std::uint64_t k_ = 0;
};

/// Full path with ceil(T/dt) steps, deterministic in (seed, path).
PathSample sample_path(const ManifoldModel& model, const Vec& x0, const Mat& frame0, double T, double dt,
                       std::uint64_t seed, std::uint64_t path = 0);

/// Local time of reflected Brownian motion on [0, inf) started at x0,
/// recorded at each checkpoint time. Same scheme and random streams as
/// PathWalker on the half_line model, without the generic model dispatch.
std::vector<double> half_line_local_times(double x0, const std::vector<double>& checkpoints, double dt,
                                          std::uint64_t seed, std::uint64_t path);

/// Binary path dump: "FKPATH" magic, u32 version, u32 dim, u64 state count,
/// f64 dt, u64 seed, u64 path index, u32 model-name length and bytes, then per
/// state t, ltime, x, frame (column-major), all little-endian.
void write_path(std::ostream& os, const PathSample& path);
PathSample read_path(std::istream& is);

}  // namespace formkac
