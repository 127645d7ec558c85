#include "formkac/suite.hpp"

#include <algorithm>
#include <cmath>

#include "formkac/rng.hpp"
#include "formkac/spin.hpp"

namespace formkac {

namespace {

class Gauss {
public:
    explicit Gauss(std::uint64_t seed) : rng_(seed, 0) {}
    double operator()() { return rng_.normal(PathRng::kNormals, idx_++); }
    Vec vec(int n)
    {
        Vec v(n);
        for (int i = 0; i < n; ++i) {
            v(i) = (*this)();
        }
        return v;
    }
    FVec form(int size)
    {
        FVec v(size);
        for (int i = 0; i < size; ++i) {
            v(i) = (*this)();
        }
        return v;
    }
    Mat symmetric(int n)
    {
        Mat m(n, n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                m(i, j) = (*this)();
            }
        }
        return 0.5 * (m + m.transpose());
    }

private:
    PathRng rng_;
    std::uint64_t idx_ = 0;
};

double max_abs(const FMat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

// Hodge star of the volume form coefficient: alpha ^ *beta as a top form.
double top_coefficient(const FVec& alpha, int p, const FVec& beta_star, int n)
{
    return wedge<double>(alpha, p, beta_star, n - p, n)(0);
}

}  // namespace

CurvatureTensor random_curvature(int n, std::uint64_t seed)
{
    Gauss g(seed);
    CurvatureTensor r(n);
    for (int term = 0; term < 3; ++term) {
        const Mat h = g.symmetric(n);
        const Mat k = g.symmetric(n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                for (int a = 0; a < n; ++a) {
                    for (int b = 0; b < n; ++b) {
                        r(i, j, a, b) += h(i, a) * k(j, b) + h(j, b) * k(i, a) - h(i, b) * k(j, a) - h(j, a) * k(i, b);
                    }
                }
            }
        }
    }
    return r;
}

Mat random_rotation(int n, std::uint64_t seed)
{
    Gauss g(seed);
    Mat m(n, n);
    for (int i = 0; i < n; ++i) {
        m.col(i) = g.vec(n);
    }
    Eigen::HouseholderQR<Mat> qr(m);
    Mat q = qr.householderQ() * Mat::Identity(n, n);
    if (q.determinant() < 0.0) {
        q.col(0) *= -1.0;
    }
    return q;
}

std::vector<IdentityCheck> form_algebra_checks(int n_max, std::uint64_t seed, double tol)
{
    std::vector<IdentityCheck> out;
    Gauss g(seed);
    for (int n = 2; n <= n_max; ++n) {
        for (int q = 0; q <= n; ++q) {
            const int sz = binomial(n, q);
            auto add = [&](const std::string& name, double err) { out.push_back({name, "random", n, q, err, tol}); };

            double adj = 0.0;
            if (q < n) {
                for (int trial = 0; trial < 50; ++trial) {
                    const Vec v = g.vec(n);
                    const FVec a = g.form(sz);
                    const FVec b = g.form(binomial(n, q + 1));
                    adj = std::max(adj, std::abs((wedge_matrix<double>(v, q) * a).dot(b) - a.dot(interior_matrix<double>(v, q + 1) * b)));
                }
                add("wedge_interior_adjoint", adj);
            }

            const FMat s = hodge_star_matrix<double>(n, q);
            const FMat s2 = hodge_star_matrix<double>(n, n - q) * s;
            const double sign = ((q * (n - q)) % 2 == 0) ? 1.0 : -1.0;
            add("hodge_involution", max_abs(s2 - sign * FMat::Identity(sz, sz)));

            double inner = 0.0;
            for (int trial = 0; trial < 20; ++trial) {
                const FVec a = g.form(sz);
                const FVec b = g.form(sz);
                inner = std::max(inner, std::abs(top_coefficient(a, q, s * b, n) - a.dot(b)));
            }
            add("hodge_inner_product", inner);

            const Vec nu = g.vec(n).normalized();
            const Projections pr = projections(nu, q);
            const FMat id = FMat::Identity(sz, sz);
            add("fermionic_relation", max_abs(pr.tangential + pr.normal - id));
            add("projection_idempotent",
                std::max(max_abs(pr.tangential * pr.tangential - pr.tangential), max_abs(pr.normal * pr.normal - pr.normal)));
            add("projection_symmetric", std::max(max_abs(pr.tangential - pr.tangential.transpose()),
                                                 max_abs(pr.normal - pr.normal.transpose())));
            add("projection_orthogonal", max_abs(pr.tangential * pr.normal));
            add("normal_rank", std::abs(pr.normal.trace() - binomial(n - 1, q - 1)));

            // Shape operator with known principal curvatures in a random frame.
            const Mat rot = random_rotation(n, seed + 1000 * static_cast<std::uint64_t>(n) + static_cast<std::uint64_t>(q));
            Vec rho(n - 1);
            for (int i = 0; i < n - 1; ++i) {
                rho(i) = g();
            }
            Mat diag = Mat::Zero(n, n);
            for (int i = 0; i < n - 1; ++i) {
                diag(i, i) = rho(i);
            }
            const Mat a = rot * diag * rot.transpose();
            const Vec nrm = rot.col(n - 1);
            const FMat aq = shape_matrix(a, nrm, q);
            const Projections pq = projections(nrm, q);
            add("shape_normal_annihilates", std::max(max_abs(pq.normal * aq), max_abs(aq * pq.normal)));
            // Expected spectrum: q-fold sums over tangential multi-indices, zeros on normal forms.
            std::vector<double> expected;
            const auto& basis = ExteriorBasis::get(n, q);
            for (int i = 0; i < basis.size(); ++i) {
                const auto idx = basis.indices(i);
                bool normal = false;
                double sum = 0.0;
                for (int j : idx) {
                    if (j == n - 1) {
                        normal = true;
                    } else {
                        sum += rho(j);
                    }
                }
                expected.push_back(normal ? 0.0 : sum);
            }
            std::sort(expected.begin(), expected.end());
            Eigen::SelfAdjointEigenSolver<FMat> es(aq, Eigen::EigenvaluesOnly);
            double spec = 0.0;
            for (int i = 0; i < sz; ++i) {
                spec = std::max(spec, std::abs(es.eigenvalues()(i) - expected[static_cast<std::size_t>(i)]));
            }
            out.push_back({"shape_spectrum", "random", n, q, spec, 1e-10});

            // Relative-condition identity: *^-1 A_{n-q} * on normal forms.
            if (q >= 1) {
                const FMat conj = s.transpose() * shape_matrix(a, nrm, n - q) * s;
                const FMat nsm = normal_shape_matrix(a, nrm, q);
                add("relative_condition_identity", max_abs((conj - nsm) * pq.normal));
            }
        }

        // Weitzenbock pinning on a random algebraic curvature tensor.
        const CurvatureTensor riem = random_curvature(n, seed + static_cast<std::uint64_t>(n));
        const double scale = std::max(1.0, riem.ricci().cwiseAbs().maxCoeff());
        const FMat r1 = weitzenbock_matrix(riem, 1);
        out.push_back({"weitzenbock_R1_is_ricci", "random", n, 1, max_abs(r1 - riem.ricci()) / scale, tol});
        for (int q = 0; q <= n; ++q) {
            const FMat rq = weitzenbock_matrix(riem, q);
            const FMat rd = weitzenbock_matrix(riem, n - q);
            const FMat s = hodge_star_matrix<double>(n, q);
            out.push_back({"weitzenbock_duality", "random", n, q, max_abs(s * rq - rd * s) / scale, tol});
            out.push_back({"weitzenbock_symmetric", "random", n, q, max_abs(rq - rq.transpose()) / scale, tol});
        }
    }
    return out;
}

std::vector<IdentityCheck> curvature_pinning_checks(std::uint64_t seed, double tol)
{
    std::vector<IdentityCheck> out;
    for (const auto& info : model_catalog()) {
        for (int n = std::max(info.min_dim, 2); n <= info.max_dim; ++n) {
            const auto model = make_model(info.id, n);
            const Vec x = reference_point(*model);
            const Mat rot = random_rotation(n, seed + static_cast<std::uint64_t>(n));
            const CurvatureTensor riem = model->curvature_at(x).rotated(rot);
            const double c = model->constant_curvature().value_or(0.0);
            out.push_back({"curvature_symmetries", info.id, n, -1, riem.symmetry_defect(), tol});
            out.push_back({"weitzenbock_R1_is_ricci", info.id, n, 1,
                           max_abs(weitzenbock_matrix(riem, 1) - riem.ricci()), tol});
            for (int q = 0; q <= n; ++q) {
                const FMat rq = weitzenbock_matrix(riem, q);
                const FMat s = hodge_star_matrix<double>(n, q);
                const int sz = binomial(n, q);
                out.push_back({"weitzenbock_duality", info.id, n, q,
                               max_abs(s * rq - weitzenbock_matrix(riem, n - q) * s), tol});
                out.push_back({"weitzenbock_constant_curvature", info.id, n, q,
                               max_abs(rq - q * (n - q) * c * FMat::Identity(sz, sz)), tol});
            }
        }
    }
    return out;
}

std::vector<IdentityCheck> spinor_algebra_checks(std::uint64_t seed, double tol)
{
    std::vector<IdentityCheck> out;
    Gauss g(seed);
    for (int n = 2; n <= kMaxDim; ++n) {
        const CliffordModule cl = build_clifford(n);
        const int d = cl.spinor_dim;
        const SpinMat id = SpinMat::Identity(d, d);
        auto add = [&](const std::string& name, double err) { out.push_back({name, "clifford", n, -1, err, tol}); };

        double rel = 0.0, skew = 0.0;
        for (int i = 0; i < n; ++i) {
            const SpinMat& gi = cl.gamma[static_cast<std::size_t>(i)];
            skew = std::max(skew, (gi + gi.adjoint()).cwiseAbs().maxCoeff());
            for (int j = 0; j < n; ++j) {
                const SpinMat& gj = cl.gamma[static_cast<std::size_t>(j)];
                const SpinMat target = (i == j ? -2.0 : 0.0) * id;
                rel = std::max(rel, (gi * gj + gj * gi - target).cwiseAbs().maxCoeff());
            }
        }
        add("clifford_relations", rel);
        add("gamma_anti_hermitian", skew);
        add("spinor_dimension", std::abs(d - (1 << (n / 2))));

        if (cl.chirality) {
            const SpinMat& q = *cl.chirality;
            double anti = 0.0;
            for (const auto& gi : cl.gamma) {
                anti = std::max(anti, (q * gi + gi * q).cwiseAbs().maxCoeff());
            }
            add("chirality_involution", (q * q - id).cwiseAbs().maxCoeff());
            add("chirality_hermitian", (q - q.adjoint()).cwiseAbs().maxCoeff());
            add("chirality_anticommutes", anti);
        }

        for (auto kind : {SpinorBoundaryKind::mit, SpinorBoundaryKind::chirality}) {
            if (kind == SpinorBoundaryKind::chirality && !cl.chirality) {
                continue;
            }
            const std::string tag = kind == SpinorBoundaryKind::mit ? "mit_" : "chirality_";
            const Vec nu = g.vec(n).normalized();
            const SpinorBoundaryOps ops = boundary_projection(cl, nu, kind);
            add(tag + "qhat_involution", (ops.qhat * ops.qhat - id).cwiseAbs().maxCoeff());
            add(tag + "projection_sum", (ops.plus + ops.minus - id).cwiseAbs().maxCoeff());
            add(tag + "projection_idempotent", std::max((ops.plus * ops.plus - ops.plus).cwiseAbs().maxCoeff(),
                                                        (ops.minus * ops.minus - ops.minus).cwiseAbs().maxCoeff()));
            add(tag + "projection_hermitian", std::max((ops.plus - ops.plus.adjoint()).cwiseAbs().maxCoeff(),
                                                       (ops.minus - ops.minus.adjoint()).cwiseAbs().maxCoeff()));
            add(tag + "projection_equal_rank",
                std::max(std::abs(ops.plus.trace().real() - 0.5 * d), std::abs(ops.minus.trace().real() - 0.5 * d)));
            std::vector<Vec> xis;
            for (int k = 0; k < 100; ++k) {
                Vec xi = g.vec(n);
                xi -= xi.dot(nu) * nu;
                xis.push_back(xi);
            }
            xis.push_back(Vec::Zero(n));
            const IntertwineResult ir = intertwine_certificate(cl, nu, ops, xis);
            add(tag + "intertwining", ir.projection_residual);
            add(tag + "symbol_anticommutes_with_normal", ir.anticommute_residual);
        }
    }
    return out;
}

IntforPair random_intfor_pair(int q, std::uint64_t seed)
{
    constexpr int n = 3;
    Gauss g(seed);
    const Mat s = g.symmetric(n);
    const Vec b = g.vec(n);
    const double a = g();
    const int sz = binomial(n, q);
    const FVec c = g.form(sz);
    FMat l(sz, n);
    for (int i = 0; i < sz; ++i) {
        for (int j = 0; j < n; ++j) {
            l(i, j) = g();
        }
    }
    IntforPair pair;
    pair.f.value = [=](const Vec& x) { return 0.5 * x.dot(s * x) + b.dot(x) + a * x(0) * x(1) * x(2); };
    pair.f.gradient = [=](const Vec& x) {
        Vec grad = s * x + b;
        grad(0) += a * x(1) * x(2);
        grad(1) += a * x(0) * x(2);
        grad(2) += a * x(0) * x(1);
        return grad;
    };
    pair.f.hessian = [=](const Vec& x) {
        Mat h = s;
        h(0, 1) += a * x(2);
        h(1, 0) += a * x(2);
        h(0, 2) += a * x(1);
        h(2, 0) += a * x(1);
        h(1, 2) += a * x(0);
        h(2, 1) += a * x(0);
        return h;
    };
    pair.omega = {q,
                  [=](const Vec& x) {
                      const Vec xv = x;
                      return FVec(std::exp(-xv.squaredNorm() / 1.28) * (c + l * xv));
                  },
                  "intfor_pair"};
    return pair;
}

FormField random_bump_form(int n, int p, const ChartBox& box, std::uint64_t seed)
{
    Gauss g(seed);
    const int sz = binomial(n, p);
    const FVec c = g.form(sz);
    FMat l(sz, n);
    for (int i = 0; i < sz; ++i) {
        for (int j = 0; j < n; ++j) {
            l(i, j) = g();
        }
    }
    const Vec mid = 0.5 * (box.lo + box.hi);
    const Vec half = 0.5 * (box.hi - box.lo);
    return {p,
            [=](const Vec& x) {
                Vec tau(n);
                double env = 1.0;
                for (int i = 0; i < n; ++i) {
                    tau(i) = (x(i) - mid(i)) / half(i);
                    const double r = 1.0 - tau(i) * tau(i);
                    if (r <= 0.0) {
                        return FVec(FVec::Zero(sz));
                    }
                    env *= std::exp(-1.0 / r);
                }
                return FVec(env * (c + l * tau));
            },
            "bump_form"};
}

}  // namespace formkac
