#pragma once

// Exterior algebra of an oriented n-dimensional inner-product space, n <= 6.
//
// A q-form is stored as its coefficient vector in the basis e^I, where I runs
// over increasing multi-indices {i_1 < ... < i_q} of {0..n-1} in lexicographic
// order. Every matrix in this header acts on such coefficient vectors.

#include <array>
#include <cstdint>
#include <vector>

#include "formkac/types.hpp"

namespace formkac {

int binomial(int n, int k);

/// Increasing multi-indices of length q in {0..n-1}, lexicographically ordered.
class ExteriorBasis {
public:
    ExteriorBasis(int n, int q);

    int dim() const { return n_; }
    int degree() const { return q_; }
    int size() const { return static_cast<int>(masks_.size()); }

    /// Bitmask of the i-th multi-index.
    std::uint32_t mask(int i) const { return masks_[static_cast<std::size_t>(i)]; }
    /// Position of a bitmask in the ordering, or -1 if its popcount is not q.
    int index(std::uint32_t mask) const { return lookup_[mask]; }
    std::vector<int> indices(int i) const;

    /// Shared instance, built once per (n, q).
    static const ExteriorBasis& get(int n, int q);

private:
    int n_;
    int q_;
    std::vector<std::uint32_t> masks_;
    std::array<int, 1u << kMaxDim> lookup_{};
};

/// Sign of e^A ^ e^B relative to e^(A u B); 0 when A and B overlap.
int wedge_sign(std::uint32_t a, std::uint32_t b);

/// Matrix of w -> v ^ w from degree q to q+1.
template <typename Scalar>
FormMat<Scalar> wedge_matrix(const VecN<Scalar>& v, int q)
{
    const int n = static_cast<int>(v.size());
    if (q < 0 || q >= n) {
        throw ArgumentError("wedge_matrix: degree overflow");
    }
    const auto& src = ExteriorBasis::get(n, q);
    const auto& dst = ExteriorBasis::get(n, q + 1);
    FormMat<Scalar> m = FormMat<Scalar>::Zero(dst.size(), src.size());
    for (int j = 0; j < src.size(); ++j) {
        for (int c = 0; c < n; ++c) {
            const std::uint32_t bit = 1u << c;
            const int s = wedge_sign(bit, src.mask(j));
            if (s != 0) {
                m(dst.index(bit | src.mask(j)), j) += Scalar(s) * v(c);
            }
        }
    }
    return m;
}

/// Matrix of w -> v _| w from degree q to q-1; the adjoint of wedge_matrix(v, q-1).
template <typename Scalar>
FormMat<Scalar> interior_matrix(const VecN<Scalar>& v, int q)
{
    const int n = static_cast<int>(v.size());
    if (q < 1 || q > n) {
        throw ArgumentError("interior_matrix: degree must be in 1..n");
    }
    return wedge_matrix<Scalar>(v, q - 1).transpose();
}

/// alpha ^ beta for alpha of degree p and beta of degree q in dimension n.
template <typename Scalar>
FormVec<Scalar> wedge(const FormVec<Scalar>& alpha, int p, const FormVec<Scalar>& beta, int q, int n)
{
    if (p < 0 || q < 0 || p + q > n) {
        throw ArgumentError("wedge: degree overflow");
    }
    const auto& ba = ExteriorBasis::get(n, p);
    const auto& bb = ExteriorBasis::get(n, q);
    const auto& bc = ExteriorBasis::get(n, p + q);
    if (alpha.size() != ba.size() || beta.size() != bb.size()) {
        throw ArgumentError("wedge: coefficient length does not match degree");
    }
    FormVec<Scalar> out = FormVec<Scalar>::Zero(bc.size());
    for (int i = 0; i < ba.size(); ++i) {
        for (int j = 0; j < bb.size(); ++j) {
            const int s = wedge_sign(ba.mask(i), bb.mask(j));
            if (s != 0) {
                out(bc.index(ba.mask(i) | bb.mask(j))) += Scalar(s) * alpha(i) * beta(j);
            }
        }
    }
    return out;
}

/// v _| omega for omega of degree q.
template <typename Scalar>
FormVec<Scalar> interior(const VecN<Scalar>& v, const FormVec<Scalar>& omega, int q)
{
    return interior_matrix<Scalar>(v, q) * omega;
}

/// Hodge star from degree q to n-q, orientation e^{0..n-1}.
template <typename Scalar>
FormMat<Scalar> hodge_star_matrix(int n, int q)
{
    const auto& src = ExteriorBasis::get(n, q);
    const auto& dst = ExteriorBasis::get(n, n - q);
    const std::uint32_t full = (1u << n) - 1u;
    FormMat<Scalar> m = FormMat<Scalar>::Zero(dst.size(), src.size());
    for (int j = 0; j < src.size(); ++j) {
        const std::uint32_t comp = full & ~src.mask(j);
        m(dst.index(comp), j) = Scalar(wedge_sign(src.mask(j), comp));
    }
    return m;
}

template <typename Scalar>
FormVec<Scalar> hodge_star(const FormVec<Scalar>& omega, int n, int q)
{
    return hodge_star_matrix<Scalar>(n, q) * omega;
}

/// Extension of an n x n matrix B on 1-forms to degree q as a derivation:
/// e^I -> sum_k e^{i_1} ^ ... ^ B e^{i_k} ^ ... ^ e^{i_q}.
template <typename Scalar>
FormMat<Scalar> derivation_matrix(const MatN<Scalar>& b, int q)
{
    const int n = static_cast<int>(b.rows());
    const auto& basis = ExteriorBasis::get(n, q);
    FormMat<Scalar> m = FormMat<Scalar>::Zero(basis.size(), basis.size());
    for (int j = 0; j < basis.size(); ++j) {
        const std::uint32_t mj = basis.mask(j);
        for (int c = 0; c < n; ++c) {
            if (!(mj & (1u << c))) {
                continue;
            }
            const std::uint32_t rest = mj & ~(1u << c);
            const int sc = wedge_sign(1u << c, rest);
            for (int d = 0; d < n; ++d) {
                if (b(d, c) == Scalar(0)) {
                    continue;
                }
                const int sd = wedge_sign(1u << d, rest);
                if (sd != 0) {
                    // e^I = sc e^c ^ e^rest, and e^d ^ e^rest = sd e^(rest+d).
                    m(basis.index(rest | (1u << d)), j) += Scalar(sc * sd) * b(d, c);
                }
            }
        }
    }
    return m;
}

/// q-th compound matrix: entries det(g[I, J]). Maps coefficient vectors of
/// e_J to those of (g e_{j_1}) ^ ... ^ (g e_{j_q}).
template <typename Scalar>
FormMat<Scalar> compound_matrix(const MatN<Scalar>& g, int q)
{
    const int n = static_cast<int>(g.rows());
    const auto& basis = ExteriorBasis::get(n, q);
    FormMat<Scalar> m(basis.size(), basis.size());
    if (q == 0) {
        m(0, 0) = Scalar(1);
        return m;
    }
    for (int i = 0; i < basis.size(); ++i) {
        const auto rows = basis.indices(i);
        for (int j = 0; j < basis.size(); ++j) {
            const auto cols = basis.indices(j);
            MatN<Scalar> sub(q, q);
            for (int a = 0; a < q; ++a) {
                for (int b = 0; b < q; ++b) {
                    sub(a, b) = g(rows[static_cast<std::size_t>(a)], cols[static_cast<std::size_t>(b)]);
                }
            }
            m(i, j) = sub.determinant();
        }
    }
    return m;
}

/// Tangential and normal projections at a boundary point with unit normal nu.
struct Projections {
    FMat tangential;  ///< nu _| nu ^
    FMat normal;      ///< nu ^ nu _|
};

Projections projections(const Vec& nu, int q);

/// The boundary shape matrix A_q on degree-q forms: the derivation extension of
/// the shape operator A compressed to tangential forms, so that A_q vanishes on
/// and maps into nothing but tangential forms.
FMat shape_matrix(const Mat& a, const Vec& nu, int q);

/// Shape operator acting on normal forms nu ^ beta by beta -> sum_j rho_j
/// e_j _| e_j ^ beta, i.e. Pi_nor (tr A - A_q^der) Pi_nor.
FMat normal_shape_matrix(const Mat& a, const Vec& nu, int q);

/// Riemann tensor components R_{ijkl} in an orthonormal frame. The convention
/// is R_{ijij} = sectional curvature of span{e_i, e_j}.
class CurvatureTensor {
public:
    explicit CurvatureTensor(int n = 0) : n_(n) { data_.fill(0.0); }

    static CurvatureTensor constant(int n, double c);

    int dim() const { return n_; }
    double& operator()(int i, int j, int k, int l) { return data_[offset(i, j, k, l)]; }
    double operator()(int i, int j, int k, int l) const { return data_[offset(i, j, k, l)]; }

    /// Largest violation of skew symmetry, pair symmetry and first Bianchi.
    double symmetry_defect() const;
    /// Components in the frame whose vectors are the columns of the orthogonal g.
    CurvatureTensor rotated(const Mat& g) const;
    Mat ricci() const;
    double scalar() const { return ricci().trace(); }

private:
    std::size_t offset(int i, int j, int k, int l) const
    {
        return static_cast<std::size_t>(((i * kMaxDim + j) * kMaxDim + k) * kMaxDim + l);
    }
    int n_;
    std::array<double, kMaxDim * kMaxDim * kMaxDim * kMaxDim> data_;
};

/// Weitzenbock curvature term R_q = sum_{a,b} (e^a ^ e_b _|) D(R(e_a, e_b)),
/// with the curvature acting on forms as a derivation.
FMat weitzenbock_matrix(const CurvatureTensor& riem, int q, double symmetry_tol = 1e-9);

/// Least eigenvalue of a symmetric matrix.
double r_q_min(const FMat& rq);

/// Sum of the q smallest principal curvatures.
double rho_q(const Vec& principal_curvatures, int q);

/// Matrix exponential (Pade scaling-and-squaring).
FMat expm(const FMat& m);

}  // namespace formkac
