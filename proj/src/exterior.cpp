#include "formkac/exterior.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <mutex>

#include <unsupported/Eigen/MatrixFunctions>

namespace formkac {

int binomial(int n, int k)
{
    if (k < 0 || k > n) {
        return 0;
    }
    int r = 1;
    for (int i = 1; i <= k; ++i) {
        r = r * (n - k + i) / i;
    }
    return r;
}

ExteriorBasis::ExteriorBasis(int n, int q) : n_(n), q_(q)
{
    if (n < 1 || n > kMaxDim || q < 0 || q > n) {
        throw ArgumentError("ExteriorBasis: need 1 <= n <= 6 and 0 <= q <= n");
    }
    lookup_.fill(-1);
    // Lexicographic order on increasing tuples: generate tuples recursively.
    std::vector<int> tuple(static_cast<std::size_t>(q));
    auto rec = [&](auto&& self, int pos, int start) -> void {
        if (pos == q) {
            std::uint32_t m = 0;
            for (int i : tuple) {
                m |= 1u << i;
            }
            lookup_[m] = static_cast<int>(masks_.size());
            masks_.push_back(m);
            return;
        }
        for (int i = start; i < n; ++i) {
            tuple[static_cast<std::size_t>(pos)] = i;
            self(self, pos + 1, i + 1);
        }
    };
    rec(rec, 0, 0);
}

std::vector<int> ExteriorBasis::indices(int i) const
{
    std::vector<int> out;
    const std::uint32_t m = mask(i);
    for (int c = 0; c < n_; ++c) {
        if (m & (1u << c)) {
            out.push_back(c);
        }
    }
    return out;
}

const ExteriorBasis& ExteriorBasis::get(int n, int q)
{
    static const auto table = [] {
        std::vector<std::vector<ExteriorBasis>> t;
        for (int dim = 1; dim <= kMaxDim; ++dim) {
            std::vector<ExteriorBasis> row;
            for (int deg = 0; deg <= dim; ++deg) {
                row.emplace_back(dim, deg);
            }
            t.push_back(std::move(row));
        }
        return t;
    }();
    if (n < 1 || n > kMaxDim || q < 0 || q > n) {
        throw ArgumentError("ExteriorBasis: need 1 <= n <= 6 and 0 <= q <= n");
    }
    return table[static_cast<std::size_t>(n - 1)][static_cast<std::size_t>(q)];
}

int wedge_sign(std::uint32_t a, std::uint32_t b)
{
    if (a & b) {
        return 0;
    }
    // Count pairs (i in a, j in b) with i > j.
    int inversions = 0;
    for (std::uint32_t rest = a; rest != 0; rest &= rest - 1) {
        const int i = std::countr_zero(rest);
        inversions += std::popcount(b & ((1u << i) - 1u));
    }
    return (inversions % 2 == 0) ? 1 : -1;
}

namespace {

void require_unit(const Vec& nu, const char* who)
{
    if (std::abs(nu.norm() - 1.0) > 1e-9) {
        throw ArgumentError(std::string(who) + ": normal vector must have unit length");
    }
}

}  // namespace

Projections projections(const Vec& nu, int q)
{
    require_unit(nu, "projections");
    const int n = static_cast<int>(nu.size());
    if (q < 0 || q > n) {
        throw ArgumentError("projections: degree out of range");
    }
    const int size = binomial(n, q);
    Projections p;
    // nu ^ nu _| ; on degree 0 the interior product vanishes.
    if (q == 0) {
        p.normal = FMat::Zero(1, 1);
    } else {
        p.normal = wedge_matrix<double>(nu, q - 1) * interior_matrix<double>(nu, q);
    }
    if (q == n) {
        p.tangential = FMat::Zero(size, size);
    } else {
        p.tangential = interior_matrix<double>(nu, q + 1) * wedge_matrix<double>(nu, q);
    }
    return p;
}

namespace {

void check_shape_operator(const Mat& a, const Vec& nu, const char* who)
{
    require_unit(nu, who);
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
        throw ArgumentError(std::string(who) + ": shape operator must be symmetric");
    }
    if ((a * nu).norm() > 1e-8 * scale) {
        throw ArgumentError(std::string(who) + ": shape operator must annihilate the normal");
    }
}

}  // namespace

FMat shape_matrix(const Mat& a, const Vec& nu, int q)
{
    check_shape_operator(a, nu, "shape_matrix");
    const Projections p = projections(nu, q);
    return p.tangential * derivation_matrix<double>(a, q) * p.tangential;
}

FMat normal_shape_matrix(const Mat& a, const Vec& nu, int q)
{
    check_shape_operator(a, nu, "normal_shape_matrix");
    const Projections p = projections(nu, q);
    const int size = static_cast<int>(p.normal.rows());
    const FMat s = a.trace() * FMat::Identity(size, size) - derivation_matrix<double>(a, q);
    return p.normal * s * p.normal;
}

CurvatureTensor CurvatureTensor::constant(int n, double c)
{
    CurvatureTensor r(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            for (int k = 0; k < n; ++k) {
                for (int l = 0; l < n; ++l) {
                    r(i, j, k, l) = c * (double(i == k) * double(j == l) - double(i == l) * double(j == k));
                }
            }
        }
    }
    return r;
}

double CurvatureTensor::symmetry_defect() const
{
    double worst = 0.0;
    for (int i = 0; i < n_; ++i) {
        for (int j = 0; j < n_; ++j) {
            for (int k = 0; k < n_; ++k) {
                for (int l = 0; l < n_; ++l) {
                    const double v = (*this)(i, j, k, l);
                    worst = std::max(worst, std::abs(v + (*this)(j, i, k, l)));
                    worst = std::max(worst, std::abs(v + (*this)(i, j, l, k)));
                    worst = std::max(worst, std::abs(v - (*this)(k, l, i, j)));
                    worst = std::max(worst, std::abs(v + (*this)(j, k, i, l) + (*this)(k, i, j, l)));
                }
            }
        }
    }
    return worst;
}

CurvatureTensor CurvatureTensor::rotated(const Mat& g) const
{
    // Four successive single-index contractions, each O(n^5).
    CurvatureTensor a(n_), b(n_);
    auto contract = [&](const CurvatureTensor& src, CurvatureTensor& dst, int slot) {
        for (int i = 0; i < n_; ++i) {
            for (int j = 0; j < n_; ++j) {
                for (int k = 0; k < n_; ++k) {
                    for (int l = 0; l < n_; ++l) {
                        double s = 0.0;
                        for (int m = 0; m < n_; ++m) {
                            int idx[4] = {i, j, k, l};
                            const int out = idx[slot];
                            idx[slot] = m;
                            s += g(m, out) * src(idx[0], idx[1], idx[2], idx[3]);
                        }
                        dst(i, j, k, l) = s;
                    }
                }
            }
        }
    };
    contract(*this, a, 0);
    contract(a, b, 1);
    contract(b, a, 2);
    contract(a, b, 3);
    return b;
}

Mat CurvatureTensor::ricci() const
{
    Mat ric = Mat::Zero(n_, n_);
    for (int a = 0; a < n_; ++a) {
        for (int c = 0; c < n_; ++c) {
            for (int b = 0; b < n_; ++b) {
                ric(a, c) += (*this)(a, b, c, b);
            }
        }
    }
    return ric;
}

FMat weitzenbock_matrix(const CurvatureTensor& riem, int q, double symmetry_tol)
{
    const int n = riem.dim();
    if (q < 0 || q > n) {
        throw ArgumentError("weitzenbock_matrix: degree out of range");
    }
    double scale = 1.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            scale = std::max(scale, std::abs(riem(i, j, i, j)));
        }
    }
    if (riem.symmetry_defect() > symmetry_tol * scale) {
        throw ArgumentError("weitzenbock_matrix: curvature tensor violates its symmetries");
    }
    const int size = binomial(n, q);
    FMat rq = FMat::Zero(size, size);
    if (q == 0 || q == n) {
        return rq;
    }
    std::vector<FMat> wedges, interiors;
    for (int a = 0; a < n; ++a) {
        const Vec e = Vec::Unit(n, a);
        wedges.push_back(wedge_matrix<double>(e, q - 1));
        interiors.push_back(interior_matrix<double>(e, q));
    }
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            if (a == b) {
                continue;
            }
            // Curvature endomorphism R(e_a, e_b) on 1-forms: (B)_{dc} = R_{abcd}.
            Mat curv(n, n);
            for (int d = 0; d < n; ++d) {
                for (int c = 0; c < n; ++c) {
                    curv(d, c) = riem(a, b, c, d);
                }
            }
            if (curv.cwiseAbs().maxCoeff() == 0.0) {
                continue;
            }
            rq.noalias() += wedges[static_cast<std::size_t>(a)] * interiors[static_cast<std::size_t>(b)] *
                            derivation_matrix<double>(curv, q);
        }
    }
    // Symmetrize away rounding; the exact operator is symmetric.
    return 0.5 * (rq + rq.transpose());
}

double r_q_min(const FMat& rq)
{
    Eigen::SelfAdjointEigenSolver<FMat> es(rq, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

double rho_q(const Vec& principal_curvatures, int q)
{
    const int m = static_cast<int>(principal_curvatures.size());
    if (q < 1 || q > m) {
        throw ArgumentError("rho_q: q must be in 1..n-1");
    }
    std::vector<double> v(principal_curvatures.data(), principal_curvatures.data() + m);
    std::sort(v.begin(), v.end());
    double s = 0.0;
    for (int i = 0; i < q; ++i) {
        s += v[static_cast<std::size_t>(i)];
    }
    return s;
}

FMat expm(const FMat& m)
{
    FMat out = m.exp();
    return out;
}

}  // namespace formkac
