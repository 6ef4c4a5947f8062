#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "farlab/hilbert.hpp"

using namespace farlab;

namespace {

Eigen::MatrixXd to_eigen(const LinearOp& t) {
    Eigen::MatrixXd m(t.dim(), t.dim());
    for (std::size_t i = 0; i < t.dim(); ++i)
        for (std::size_t j = 0; j < t.dim(); ++j) m(i, j) = t(i, j);
    return m;
}

LinearOp from_eigen(const Eigen::MatrixXd& m) {
    LinearOp t(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) t(i, j) = m(i, j);
    return t.recertify();
}

CoeffVector random_vector(std::size_t d, std::mt19937_64& g) {
    std::normal_distribution<double> n;
    CoeffVector v(d);
    for (std::size_t i = 0; i < d; ++i) v[i] = n(g);
    return v;
}

LinearOp random_op(std::size_t d, std::mt19937_64& g) {
    std::normal_distribution<double> n;
    LinearOp t(d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) t(i, j) = n(g);
    return t.recertify();
}

// Q·diag(λ)·Qᵀ with Q Haar-ish and log-uniform λ spanning the given condition number.
LinearOp random_psd(std::size_t d, double cond, std::mt19937_64& g) {
    Eigen::MatrixXd a = to_eigen(random_op(d, g));
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    Eigen::MatrixXd q = qr.householderQ();
    Eigen::VectorXd lam(d);
    for (std::size_t i = 0; i < d; ++i)
        lam[i] = std::pow(cond, -static_cast<double>(i) / static_cast<double>(d - 1));
    Eigen::MatrixXd m = q * lam.asDiagonal() * q.transpose();
    m = 0.5 * (m + m.transpose());
    return from_eigen(m);
}

} // namespace

TEST(CoeffVector, RejectsNonFinite) {
    EXPECT_THROW(CoeffVector({1.0, std::nan("")}), invalid_argument);
    EXPECT_THROW(CoeffVector({INFINITY}), invalid_argument);
}

TEST(InnerProduct, Examples) {
    EXPECT_EQ(inner_product(CoeffVector::basis(3, 0), CoeffVector::basis(3, 0)), 1.0);
    EXPECT_EQ(inner_product(CoeffVector::basis(3, 0), CoeffVector::basis(3, 1)), 0.0);
    EXPECT_EQ(inner_product(CoeffVector({1, 2}), CoeffVector({3, 4})), 11.0);
    EXPECT_THROW(inner_product(CoeffVector(2), CoeffVector(3)), dimension_mismatch);
}

TEST(TensorProduct, DefinitionAndNorms) {
    const auto e1 = CoeffVector::basis(3, 0), e2 = CoeffVector::basis(3, 1), e3 = CoeffVector::basis(3, 2);
    const LinearOp t = tensor_product(e1, e2);
    EXPECT_EQ(apply(t, e1), e2);
    EXPECT_EQ(apply(t, e3), CoeffVector(3));
    EXPECT_EQ(adjoint(t).entries()[0], tensor_product(e2, e1).entries()[0]);
    EXPECT_LT(hs_distance(adjoint(t), tensor_product(e2, e1)), 1e-15);

    std::mt19937_64 g(11);
    for (int trial = 0; trial < 100; ++trial) {
        const auto u = random_vector(7, g), v = random_vector(7, g), h = random_vector(7, g);
        const CoeffVector lhs = apply(tensor_product(u, v), h);
        const CoeffVector rhs = inner_product(u, h) * v;
        EXPECT_LE((lhs - rhs).norm(), 1e-12 * u.norm() * v.norm() * h.norm());
        EXPECT_NEAR(op_norms(tensor_product(u, v)).trace, u.norm() * v.norm(), 1e-10 * u.norm() * v.norm());
    }
}

TEST(OperatorAlgebra, IdentitiesAndAdjoint) {
    std::mt19937_64 g(5);
    const auto s = random_op(6, g), t = random_op(6, g), r = random_op(6, g);
    const auto x = random_vector(6, g);
    EXPECT_EQ(apply(LinearOp::identity(6), x), x);
    EXPECT_LT(hs_distance(compose(t, LinearOp::identity(6)), t), 1e-15);
    EXPECT_LT(hs_distance(adjoint(adjoint(t)), t), 1e-15);
    EXPECT_LT(hs_distance(adjoint(compose(s, t)), compose(adjoint(t), adjoint(s))), 1e-12);
    EXPECT_LT(hs_distance(compose(compose(r, s), t), compose(r, compose(s, t))), 1e-12);
    // compose(S, T) is S∘T.
    EXPECT_LT((apply(compose(s, t), x) - apply(s, apply(t, x))).norm(), 1e-12);
    EXPECT_THROW(compose(LinearOp(2), LinearOp(3)), dimension_mismatch);
}

TEST(OpNorms, Examples) {
    const double d31[] = {3.0, 1.0};
    const auto n = op_norms(LinearOp::diagonal(d31));
    EXPECT_NEAR(n.sup, 3.0, 1e-14);
    EXPECT_NEAR(n.hs, std::sqrt(10.0), 1e-14);
    EXPECT_NEAR(n.trace, 4.0, 1e-14);
    const auto id = op_norms(LinearOp::identity(5));
    EXPECT_NEAR(id.sup, 1.0, 1e-14);
    EXPECT_NEAR(id.hs, std::sqrt(5.0), 1e-14);
    EXPECT_NEAR(id.trace, 5.0, 1e-14);
    const auto z = op_norms(LinearOp(4));
    EXPECT_EQ(z.sup, 0.0);
    EXPECT_EQ(z.hs, 0.0);
    EXPECT_EQ(z.trace, 0.0);
}

TEST(OpNorms, OrderingAndSvdOracle) {
    std::mt19937_64 g(3);
    for (int trial = 0; trial < 100; ++trial) {
        LinearOp t = random_op(8, g).symmetrized();
        const auto n = op_norms(t);
        EXPECT_LE(n.sup, n.hs + 1e-10);
        EXPECT_LE(n.hs, n.trace + 1e-10);
    }
    for (int trial = 0; trial < 20; ++trial) {
        const LinearOp t = random_op(9, g);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(to_eigen(t));
        const auto sv = singular_values(t);
        for (std::size_t i = 0; i < sv.size(); ++i) EXPECT_NEAR(sv[i], svd.singularValues()[i], 1e-10);
    }
}

TEST(SymEigen, DiagonalAndZero) {
    const double d[] = {0.5, 0.25};
    const auto dec = sym_eigen(LinearOp::diagonal(d));
    EXPECT_DOUBLE_EQ(dec.eigenvalue(0), 0.5);
    EXPECT_DOUBLE_EQ(dec.eigenvalue(1), 0.25);
    EXPECT_EQ(dec.eigenvector(0), CoeffVector::basis(2, 0));
    EXPECT_EQ(dec.eigenvector(1), CoeffVector::basis(2, 1));
    const auto z = sym_eigen(LinearOp(3));
    for (double l : z.eigenvalues()) EXPECT_EQ(l, 0.0);
}

TEST(SymEigen, RotatedDiagonal) {
    const double c = std::cos(std::numbers::pi / 4), s = std::sin(std::numbers::pi / 4);
    const LinearOp q(2, {c, -s, s, c});
    const double d[] = {2.0, 1.0};
    const LinearOp t = compose(q, compose(LinearOp::diagonal(d), adjoint(q))).symmetrized();
    const auto dec = sym_eigen(t);
    EXPECT_NEAR(dec.eigenvalue(0), 2.0, 1e-14);
    EXPECT_NEAR(dec.eigenvalue(1), 1.0, 1e-14);
    EXPECT_NEAR(std::abs(dec.eigenvector(0)[0]), std::sqrt(0.5), 1e-14);
    EXPECT_NEAR(std::abs(dec.eigenvector(0)[1]), std::sqrt(0.5), 1e-14);
    // Sign rule: largest-magnitude coordinate positive, ties to the lowest index.
    EXPECT_GT(dec.eigenvector(0)[0], 0.0);
    EXPECT_GT(dec.eigenvector(1)[0], 0.0);
}

TEST(SymEigen, RejectsNonSymmetricAndNegative) {
    EXPECT_THROW(sym_eigen(LinearOp(2, {1, 2, 0, 1})), not_symmetric);
    const double d[] = {1.0, -1e-3};
    EXPECT_THROW(sym_eigen(LinearOp::diagonal(d), true), not_psd);
    const double tiny[] = {1.0, -1e-12};
    const auto dec = sym_eigen(LinearOp::diagonal(tiny), true);
    EXPECT_EQ(dec.eigenvalue(1), 0.0);
}

TEST(SymEigen, ReconstructionAgainstEigenOracle) {
    std::mt19937_64 g(17);
    for (double cond : {1.0e2, 1.0e5, 1.0e8}) {
        for (int trial = 0; trial < 10; ++trial) {
            const LinearOp t = random_psd(12, cond, g);
            const auto dec = sym_eigen(t, true);
            EXPECT_LE(hs_distance(dec.reconstruct(), t), 1e-10);
            for (std::size_t l = 1; l < dec.dim(); ++l) EXPECT_GE(dec.eigenvalue(l - 1), dec.eigenvalue(l));
            double gram = 0.0;
            for (std::size_t i = 0; i < dec.dim(); ++i)
                for (std::size_t j = 0; j < dec.dim(); ++j) {
                    const double v = inner_product(dec.eigenvector(i), dec.eigenvector(j)) - (i == j);
                    gram += v * v;
                }
            EXPECT_LE(std::sqrt(gram), 1e-10);

            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(t));
            for (std::size_t l = 0; l < dec.dim(); ++l) {
                const double want = es.eigenvalues()[static_cast<Eigen::Index>(dec.dim() - 1 - l)];
                EXPECT_NEAR(dec.eigenvalue(l), want, 1e-12);
            }
        }
    }
}

TEST(SymEigen, GapsAndDegenerateClusters) {
    const double d[] = {4.0, 2.0, 1.5, 1.0};
    const auto dec = sym_eigen(LinearOp::diagonal(d));
    ASSERT_EQ(dec.gaps().size(), 4u);
    EXPECT_DOUBLE_EQ(dec.gaps()[0], 2.0);
    EXPECT_DOUBLE_EQ(dec.gaps()[1], 0.5);
    EXPECT_DOUBLE_EQ(dec.gaps()[2], 0.5);
    EXPECT_DOUBLE_EQ(dec.gaps()[3], 0.5);
    EXPECT_FALSE(dec.has_degenerate_cluster());
    const double rep[] = {1.0, 0.5, 0.5, 0.1};
    EXPECT_TRUE(sym_eigen(LinearOp::diagonal(rep)).has_degenerate_cluster());
}

TEST(PsdRoots, Examples) {
    const double d49[] = {4.0, 9.0};
    const double d23[] = {2.0, 3.0};
    EXPECT_LT(hs_distance(psd_sqrt(LinearOp::diagonal(d49)), LinearOp::diagonal(d23)), 1e-14);

    const double d491[] = {4.0, 9.0, 1.0};
    const auto dec = sym_eigen(LinearOp::diagonal(d491));
    const double want[] = {0.5, 1.0 / 3.0, 0.0};
    EXPECT_LT(hs_distance(psd_pinv_sqrt(dec, 2), LinearOp::diagonal(want)), 1e-14);
    EXPECT_THROW(psd_pinv_sqrt(dec, 0), invalid_argument);
    EXPECT_THROW(psd_pinv_sqrt(dec, 4), invalid_argument);

    std::mt19937_64 g(23);
    const LinearOp t = random_psd(8, 1e4, g);
    const LinearOp r = psd_sqrt(t);
    EXPECT_LE(hs_distance(compose(r, r), t), 1e-9);
    const auto td = sym_eigen(t, true);
    const LinearOp p = compose(psd_pinv_sqrt(td, 3), r);
    EXPECT_LE(hs_distance(p, td.projector(3)), 1e-9);
}

TEST(PsdRoots, PivotThreshold) {
    const double d[] = {1.0, 1e-13};
    const auto dec = sym_eigen(LinearOp::diagonal(d));
    try {
        psd_pinv_sqrt(dec, 2);
        FAIL() << "expected degenerate_spectrum";
    } catch (const degenerate_spectrum& e) {
        EXPECT_EQ(e.index(), 2u);
    }
}
