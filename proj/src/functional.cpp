#include "formkac/functional.hpp"

#include <cmath>
#include <limits>

namespace formkac {

double operator_norm(const FMat& m)
{
    if (m.size() == 0) {
        return 0.0;
    }
    Eigen::JacobiSVD<FMat> svd(m);
    return svd.singularValues()(0);
}

double rho_q_extended(const ManifoldModel& model, const Vec& boundary_point, int q)
{
    if (q == 0) {
        return 0.0;
    }
    if (q == model.dim()) {
        return std::numeric_limits<double>::infinity();
    }
    return model.rho_q_at(boundary_point, q);
}

Mat frame_rotation(const ManifoldModel& model, const PathState& s)
{
    if (model.is_flat()) {
        return s.frame;
    }
    return model.frame_at(s.x).partialPivLu().solve(s.frame);
}

LiftedBoundary lift_boundary(const ManifoldModel& model, const PathState& s, int q)
{
    const Vec p = model.boundary_projection(s.x);
    const BoundaryData bd = model.boundary_data_at(p);
    const Mat g = frame_rotation(model, s);
    const Vec nu = g.transpose() * bd.normal;
    const Mat a = g.transpose() * bd.shape * g;
    LiftedBoundary out;
    Projections pr = projections(nu / nu.norm(), q);
    out.tangential = std::move(pr.tangential);
    out.normal = std::move(pr.normal);
    out.totally_geodesic = bd.shape.cwiseAbs().maxCoeff() == 0.0;
    out.shape = out.totally_geodesic ? FMat::Zero(out.normal.rows(), out.normal.cols())
                                     : shape_matrix(0.5 * (a + a.transpose()), nu / nu.norm(), q);
    out.rho = rho_q_extended(model, p, q);
    return out;
}

FMat lifted_weitzenbock(const ManifoldModel& model, const PathState& s, int q)
{
    const int size = binomial(model.dim(), q);
    if (auto c = model.constant_curvature()) {
        return (q * (model.dim() - q) * (*c)) * FMat::Identity(size, size);
    }
    const FMat rq = weitzenbock_matrix(model.curvature_at(s.x), q);
    const FMat lam = compound_matrix(frame_rotation(model, s), q);
    return lam.transpose() * rq * lam;
}

FunctionalEvolver::FunctionalEvolver(const ManifoldModel& model, int q, FunctionalMode mode, double eps)
    : model_(model), q_(q), mode_(mode), eps_(eps), curvature_(model.constant_curvature())
{
    if (q < 0 || q > model.dim()) {
        throw ArgumentError("FunctionalEvolver: degree does not match the path dimension");
    }
    if (mode == FunctionalMode::eps && !(eps > 0.0)) {
        throw ArgumentError("FunctionalEvolver: eps mode needs eps > 0");
    }
    reset();
}

void FunctionalEvolver::reset()
{
    const int size = binomial(model_.dim(), q_);
    m_ = FMat::Identity(size, size);
    log_bound_ = 0.0;
}

void FunctionalEvolver::advance(const PathState& from, const PathState& to)
{
    const double dt = to.t - from.t;
    const int n = model_.dim();
    if (curvature_) {
        const double r = q_ * (n - q_) * (*curvature_);
        if (r != 0.0) {
            m_ *= std::exp(-0.5 * r * dt);
        }
        log_bound_ -= 0.5 * r * dt;
    } else {
        const FMat rq = lifted_weitzenbock(model_, from, q_);
        m_ = m_ * expm(-0.5 * dt * rq);
        log_bound_ -= 0.5 * model_.r_q_at(from.x, q_) * dt;
    }

    const double dl = to.ltime - from.ltime;
    if (dl <= 0.0) {
        return;
    }
    const LiftedBoundary lb = lift_boundary(model_, to, q_);
    if (mode_ == FunctionalMode::eps) {
        m_ = m_ * expm(-(lb.shape + lb.normal / eps_) * dl);
    } else if (lb.totally_geodesic) {
        m_ = m_ * lb.tangential;
    } else {
        m_ = m_ * expm(-lb.shape * dl) * lb.tangential;
    }
    log_bound_ -= lb.rho * dl;
}

std::vector<FunctionalMatrix> evolve_functional(const ManifoldModel& model, const PathSample& path, int q,
                                                FunctionalMode mode, double eps)
{
    if (path.states.empty() || path.states.front().x.size() != model.dim()) {
        throw ArgumentError("evolve_functional: path does not match the model dimension");
    }
    FunctionalEvolver ev(model, q, mode, eps);
    std::vector<FunctionalMatrix> out;
    out.reserve(path.states.size());
    out.push_back({q, ev.matrix(), mode, eps});
    for (std::size_t k = 1; k < path.states.size(); ++k) {
        ev.advance(path.states[k - 1], path.states[k]);
        out.push_back({q, ev.matrix(), mode, eps});
    }
    return out;
}

std::vector<double> bound_functional(const ManifoldModel& model, const PathSample& path, int q)
{
    FunctionalEvolver ev(model, q, FunctionalMode::projected);
    std::vector<double> out;
    out.reserve(path.states.size());
    out.push_back(1.0);
    for (std::size_t k = 1; k < path.states.size(); ++k) {
        ev.advance(path.states[k - 1], path.states[k]);
        out.push_back(std::exp(ev.log_bound()));
    }
    return out;
}

std::vector<double> eps_convergence_probe(const ManifoldModel& model, const PathSample& path, int q,
                                          const std::vector<double>& eps_sequence)
{
    for (std::size_t i = 1; i < eps_sequence.size(); ++i) {
        if (!(eps_sequence[i] < eps_sequence[i - 1])) {
            throw ArgumentError("eps_convergence_probe: eps sequence must decrease");
        }
    }
    const FMat m_proj = evolve_functional(model, path, q, FunctionalMode::projected).back().m;
    std::vector<double> out;
    for (double eps : eps_sequence) {
        const FMat m_eps = evolve_functional(model, path, q, FunctionalMode::eps, eps).back().m;
        out.push_back(operator_norm(m_eps - m_proj));
    }
    return out;
}

}  // namespace formkac
