#pragma once

// Independent reference computations used by the tests. Nothing here calls
// the library's own curvature, Christoffel, shape or kernel code.

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "formkac/geometry.hpp"

namespace fktest {

using formkac::Mat;
using formkac::Vec;

// Fourth-order central difference of a vector-valued map along axis i.
template <typename F>
auto diff4(F&& f, const Vec& x, int i, double h)
{
    Vec e = Vec::Zero(x.size());
    e(i) = h;
    return ((f(x - 2 * e) - 8 * f(x - e) + 8 * f(x + e) - f(x + 2 * e)) / (12.0 * h)).eval();
}

// Christoffel symbols Gamma[k](i, j) from finite differences of the chart metric.
inline std::vector<Mat> christoffel_fd(const formkac::ManifoldModel& m, const Vec& x, double h = 1e-4)
{
    const int n = m.dim();
    std::vector<Mat> dg(static_cast<std::size_t>(n));  // dg[l] = d_l g
    for (int l = 0; l < n; ++l) {
        dg[static_cast<std::size_t>(l)] = diff4([&](const Vec& y) { return m.metric_at(y); }, x, l, h);
    }
    const Mat ginv = m.metric_at(x).inverse();
    std::vector<Mat> gam(static_cast<std::size_t>(n), Mat::Zero(n, n));
    for (int k = 0; k < n; ++k) {
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                double s = 0.0;
                for (int l = 0; l < n; ++l) {
                    const auto ul = static_cast<std::size_t>(l);
                    s += ginv(k, l) * (dg[static_cast<std::size_t>(i)](j, l) + dg[static_cast<std::size_t>(j)](i, l) - dg[ul](i, j));
                }
                gam[static_cast<std::size_t>(k)](i, j) = 0.5 * s;
            }
        }
    }
    return gam;
}

// <R(e_i, e_j) e_l, e_k> in the model's canonical frame, with
// R(X, Y) = [nabla_X, nabla_Y] - nabla_[X, Y], by differentiating the
// finite-difference Christoffel symbols once more.
inline std::vector<double> curvature_fd(const formkac::ManifoldModel& m, const Vec& x, double h = 1e-2)
{
    const int n = m.dim();
    // Vec is capped at 6 entries, so flatten into a dynamic vector.
    using DV = Eigen::VectorXd;
    auto flat = [&](const Vec& y) {
        const auto g = christoffel_fd(m, y);
        DV v(n * n * n);
        for (int k = 0; k < n; ++k) {
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    v((k * n + i) * n + j) = g[static_cast<std::size_t>(k)](i, j);
                }
            }
        }
        return v;
    };
    std::vector<DV> dgam(static_cast<std::size_t>(n));
    for (int a = 0; a < n; ++a) {
        Vec e = Vec::Zero(n);
        e(a) = h;
        auto f = [&](const Vec& y) { return flat(y); };
        dgam[static_cast<std::size_t>(a)] = (f(x - 2 * e) - 8 * f(x - e) + 8 * f(x + e) - f(x + 2 * e)) / (12.0 * h);
    }
    const auto gam = christoffel_fd(m, x);
    auto G = [&](int k, int i, int j) { return gam[static_cast<std::size_t>(k)](i, j); };
    auto dG = [&](int a, int k, int i, int j) { return dgam[static_cast<std::size_t>(a)]((k * n + i) * n + j); };
    // R^l_{k a b}: R(d_a, d_b) d_k = R^l_{kab} d_l.
    auto rc = [&](int l, int k, int a, int b) {
        double s = dG(a, l, b, k) - dG(b, l, a, k);
        for (int p = 0; p < n; ++p) {
            s += G(l, a, p) * G(p, b, k) - G(l, b, p) * G(p, a, k);
        }
        return s;
    };
    const Mat g = m.metric_at(x);
    const Mat e = m.frame_at(x);
    std::vector<double> chart(static_cast<std::size_t>(n * n * n * n));
    // Lowered: R_{abkc} = <R(d_a, d_b) d_k, d_c>.
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            for (int k = 0; k < n; ++k) {
                for (int c = 0; c < n; ++c) {
                    double s = 0.0;
                    for (int l = 0; l < n; ++l) {
                        s += rc(l, k, a, b) * g(l, c);
                    }
                    chart[static_cast<std::size_t>(((a * n + b) * n + k) * n + c)] = s;
                }
            }
        }
    }
    std::vector<double> out(chart.size(), 0.0);
    // out[i j k l] = <R(e_i, e_j) e_l, e_k>.
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            for (int k = 0; k < n; ++k) {
                for (int l = 0; l < n; ++l) {
                    double s = 0.0;
                    for (int a = 0; a < n; ++a) {
                        for (int b = 0; b < n; ++b) {
                            for (int c = 0; c < n; ++c) {
                                for (int d = 0; d < n; ++d) {
                                    s += e(a, i) * e(b, j) * e(c, l) * e(d, k) *
                                         chart[static_cast<std::size_t>(((a * n + b) * n + c) * n + d)];
                                }
                            }
                        }
                    }
                    out[static_cast<std::size_t>(((i * n + j) * n + k) * n + l)] = s;
                }
            }
        }
    }
    return out;
}

// Principal curvatures at boundary point p by differentiating the inward unit
// normal along the boundary: A X = -(d_X nu + Gamma(X, nu)), with the normal at
// nearby boundary points obtained from the boundary projection and the metric
// gradient of the signed distance.
inline std::vector<double> principal_curvatures_fd(const formkac::ManifoldModel& m, const Vec& p, double h = 1e-4)
{
    const int n = m.dim();
    auto normal = [&](const Vec& y) {
        const Vec b = m.boundary_projection(y);
        Vec grad(n);
        for (int i = 0; i < n; ++i) {
            Vec e = Vec::Zero(n);
            e(i) = 1e-5;
            // One-sided into the manifold would need the normal; a centred
            // difference straddles the boundary, where the signed distance is
            // still smooth for every catalog model.
            grad(i) = (m.signed_boundary_distance(b + e) - m.signed_boundary_distance(b - e)) / 2e-5;
        }
        const Mat gi = m.metric_at(b).inverse();
        Vec nu = gi * grad;
        return Vec(nu / std::sqrt(nu.dot(m.metric_at(b) * nu)));
    };
    const Vec nu = normal(p);
    const Mat g = m.metric_at(p);
    // g-orthonormal basis of the tangent space of the boundary.
    Mat basis(n, n - 1);
    int cols = 0;
    for (int i = 0; i < n && cols < n - 1; ++i) {
        Vec v = Vec::Zero(n);
        v(i) = 1.0;
        v -= v.dot(g * nu) * nu;
        for (int c = 0; c < cols; ++c) {
            v -= v.dot(g * basis.col(c)) * basis.col(c);
        }
        const double len = std::sqrt(v.dot(g * v));
        if (len > 1e-3) {
            basis.col(cols++) = v / len;
        }
    }
    // The stencil must not leave the manifold, so extrapolate the Christoffel
    // symbols quadratically from three points along the inward normal.
    std::vector<Mat> gam(static_cast<std::size_t>(n));
    {
        const double s = 1e-3;
        const auto g1 = christoffel_fd(m, Vec(p + s * nu));
        const auto g2 = christoffel_fd(m, Vec(p + 2 * s * nu));
        const auto g3 = christoffel_fd(m, Vec(p + 3 * s * nu));
        for (std::size_t k = 0; k < gam.size(); ++k) {
            gam[k] = 3.0 * g1[k] - 3.0 * g2[k] + g3[k];
        }
    }
    Mat ax(n, n - 1);
    for (int c = 0; c < n - 1; ++c) {
        const Vec x = basis.col(c);
        const Vec dnu = (normal(p + h * x) - normal(p - h * x)) / (2.0 * h);
        Vec cov = dnu;
        for (int k = 0; k < n; ++k) {
            cov(k) += x.dot(gam[static_cast<std::size_t>(k)] * nu);
        }
        ax.col(c) = -cov;
    }
    const Mat s = basis.transpose() * g * ax;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (s + s.transpose()));
    std::vector<double> out;
    for (int i = 0; i < n - 1; ++i) {
        out.push_back(es.eigenvalues()(i));
    }
    return out;
}

// Image-method evolution on [0, inf) by composite Simpson quadrature:
// int_0^inf (phi_t(x - y) + sign phi_t(x + y)) g(y) dy.
inline double image_evolve(int sign, const std::function<double(double)>& g, double t, double x,
                           double upper = 30.0, int cells = 60000)
{
    auto phi = [t](double z) { return std::exp(-z * z / (2.0 * t)) / std::sqrt(2.0 * std::numbers::pi * t); };
    auto f = [&](double y) { return (phi(x - y) + sign * phi(x + y)) * g(y); };
    const double h = upper / cells;
    double s = f(0.0) + f(upper);
    for (int i = 1; i < cells; ++i) {
        s += (i % 2 ? 4.0 : 2.0) * f(i * h);
    }
    return s * h / 3.0;
}

}  // namespace fktest
