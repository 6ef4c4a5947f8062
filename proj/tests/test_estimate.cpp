#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "farlab/estimate.hpp"
#include "farlab/stats.hpp"
#include "farlab/suites.hpp"

using namespace farlab;

namespace {

std::vector<CoeffVector> two_basis_path() { return {CoeffVector::basis(3, 0), CoeffVector::basis(3, 1)}; }

} // namespace

TEST(EmpiricalCovariance, Examples) {
    const CoeffVector x({1.0, -2.0, 0.5});
    const std::vector<CoeffVector> one{x};
    EXPECT_LT(hs_distance(empirical_covariance(one), tensor_product(x, x)), 1e-15);
    const double half[] = {0.5, 0.5, 0.0};
    EXPECT_LT(hs_distance(empirical_covariance(two_basis_path()), LinearOp::diagonal(half)), 1e-15);
    EXPECT_THROW(empirical_covariance(std::vector<CoeffVector>{}), invalid_argument);

    const FarModel m = FarModel::from_spec(reference_model_spec(8));
    for (std::uint64_t r = 0; r < 100; ++r) {
        const auto dec = sym_eigen(empirical_covariance(simulate_far(m, 5, 0, 3, r).observations));
        EXPECT_GE(dec.eigenvalues().back(), -1e-12);
    }
}

TEST(CrossCovariance, Examples) {
    // Δₙ = X₁⊗X₂ for n = 2: the operator h ↦ ⟨e₁,h⟩e₂.
    EXPECT_LT(hs_distance(cross_covariance(two_basis_path()),
                          tensor_product(CoeffVector::basis(3, 0), CoeffVector::basis(3, 1))),
              1e-15);
    const CoeffVector x({0.3, 0.1, -1.0});
    const std::vector<CoeffVector> constant(7, x);
    EXPECT_LT(hs_distance(cross_covariance(constant), tensor_product(x, x)), 1e-15);
    EXPECT_THROW(cross_covariance(std::vector<CoeffVector>{x}), invalid_argument);
}

TEST(KnRule, Examples) {
    EXPECT_EQ(kn_rule_raw(100, 1.0), 0);
    EXPECT_EQ(kn_rule(100, 1.0, 40), 1u);
    EXPECT_EQ(kn_rule(10000, 1.0, 40), 1u);
    EXPECT_EQ(kn_rule(10000, 5.0, 40), 5u);
    EXPECT_EQ(kn_rule(10000, 50.0, 40), 40u);
    EXPECT_THROW(kn_rule(1, 1.0, 40), invalid_argument);
    EXPECT_THROW(kn_rule(100, 0.0, 40), invalid_argument);
    std::size_t prev = 0;
    for (std::size_t n = 100; n < 1000000; n *= 2) {
        const std::size_t k = kn_rule(n, 20.0, 1000);
        EXPECT_GE(k, prev);
        prev = k;
    }
}

TEST(GammaDag, Examples) {
    const double d[] = {4.0, 2.0, 1.0};
    const auto dec = sym_eigen(LinearOp::diagonal(d));
    const double want[] = {0.25, 0.5, 0.0};
    const LinearOp g = gamma_dag(dec, 2);
    EXPECT_LT(hs_distance(g, LinearOp::diagonal(want)), 1e-15);
    EXPECT_LT(hs_distance(compose(g, LinearOp::diagonal(d)), dec.projector(2)), 1e-15);
    EXPECT_NEAR(op_norms(g).sup, 0.5, 1e-15);
}

TEST(Fit, DegenerateSpectrumNamesTheIndex) {
    // A path confined to span(e₁) has λ̂₂ = 0.
    std::vector<CoeffVector> path;
    for (int t = 0; t < 20; ++t) path.push_back(CoeffVector({std::sin(t + 1.0), 0.0, 0.0}));
    try {
        fit(path, FitOptions{2});
        FAIL() << "expected degenerate_spectrum";
    } catch (const degenerate_spectrum& e) {
        EXPECT_EQ(e.index(), 2u);
    }
    EXPECT_NO_THROW(fit(path, FitOptions{1}));
    EXPECT_THROW(fit(path, FitOptions{4}), invalid_argument);
}

TEST(Fit, InvariantsOnSimulatedPaths) {
    ModelSpec spec = reference_model_spec(15, 0.6);
    spec.rho_mode = RhoMode::composed;
    spec.basis = {BasisKind::rotated, 21};
    const FarModel m = FarModel::from_spec(spec);
    for (std::size_t k = 1; k <= 6; ++k) {
        const Path p = simulate_far(m, 400, 0, 10, k);
        const Fit f = fit(p, FitOptions{k});
        const auto g = diagnose(f);
        EXPECT_LE(g.projector_residual, 1e-9);
        EXPECT_LE(g.idempotence_residual, 1e-9);
        EXPECT_LE(g.symmetry_residual, 1e-9);
        EXPECT_NEAR(g.projector_trace, static_cast<double>(k), 1e-9);
        EXPECT_NEAR(g.dag_trace, static_cast<double>(k), 1e-9);
        EXPECT_NEAR(g.dag_norm_product, 1.0, 1e-9);
        EXPECT_LE(g.eigen_trace_error, 1e-10);
        EXPECT_LE(g.moment_residual, 1e-9);
        EXPECT_TRUE(f.gamma_n.is_symmetric());
        for (std::size_t l = 1; l < f.dim(); ++l) EXPECT_GE(f.fpca.eigenvalue(l - 1), f.fpca.eigenvalue(l));
        // Deterministic given the path.
        const Fit again = fit(p, FitOptions{k});
        EXPECT_EQ(hs_distance(f.rho_hat, again.rho_hat), 0.0);
    }
}

TEST(Fit, RuleIsUsedWithoutOverride) {
    const FarModel m = FarModel::from_spec(reference_model_spec(10));
    const Path p = simulate_far(m, 10000, 0, 1);
    EXPECT_EQ(fit(p).k_n, 1u);
    EXPECT_EQ(fit(p, FitOptions{std::nullopt, 5.0}).k_n, 5u);
}

TEST(Fit, IndependentModelGivesSmallOperator) {
    const FarModel m = FarModel::from_spec(reference_model_spec(10, 0.0));
    std::vector<double> norms, pred_ratio;
    for (std::uint64_t r = 0; r < 20; ++r) {
        const Path p = simulate_far(m, 4001, 0, 30, r);
        const std::span<const CoeffVector> all(p.observations);
        const Fit f = fit(all.first(4000));
        norms.push_back(op_norms(f.rho_hat).sup);
        pred_ratio.push_back(predict(f, p.observations.back()).norm() / p.observations.back().norm());
    }
    EXPECT_LT(stats::median(norms), 0.2);
    EXPECT_LT(stats::median(pred_ratio), 0.2);
}

TEST(Fit, ResidualCovarianceTracksInnovations) {
    const FarModel m = FarModel::from_spec(reference_model_spec(10, 0.5));
    const Fit f = fit(simulate_far(m, 4000, 0, 2), FitOptions{4});
    EXPECT_LT(hs_distance(f.gamma_eps_hat, m.gamma_eps()), 0.1 * op_norms(m.gamma_eps()).hs);
    EXPECT_GE(sym_eigen(f.gamma_eps_hat).eigenvalues().back(), -1e-12);
}

TEST(Predict, LinearAndZero) {
    const FarModel m = FarModel::from_spec(reference_model_spec(8));
    const Fit f = fit(simulate_far(m, 300, 0, 4), FitOptions{3});
    EXPECT_EQ(predict(f, CoeffVector(8)), CoeffVector(8));
    const CoeffVector x({1, 2, 3, 4, 5, 6, 7, 8}), y({-1, 0.5, 0, 2, 0, 0, 1, -3});
    EXPECT_LE((predict(f, x + y) - predict(f, x) - predict(f, y)).norm(), 1e-12);
}

TEST(ConfidenceInterval, FormulaAndErrors) {
    const FarModel m = FarModel::from_spec(reference_model_spec(8));
    const Fit f = fit(simulate_far(m, 500, 0, 6), FitOptions{2});
    const CoeffVector x = CoeffVector::basis(8, 0) + CoeffVector::basis(8, 1);
    const CoeffVector u = CoeffVector::basis(8, 0);
    const double q = inner_product(apply(f.gamma_eps_hat, u), u);

    const Interval point = confidence_interval(f, x, u, 0.0);
    EXPECT_EQ(point.lo, point.hi);
    EXPECT_EQ(point.center, inner_product(predict(f, x), u));

    const Interval ci = confidence_interval(f, x, u, 0.95);
    EXPECT_NEAR(ci.hi - ci.lo, 2.0 * 1.959963984540054 * std::sqrt(2.0 / 500.0) * std::sqrt(q), 1e-12);
    EXPECT_NEAR(0.5 * (ci.lo + ci.hi), ci.center, 1e-15);

    const Fit f1 = fit(simulate_far(m, 500, 0, 6), FitOptions{1});
    const Fit f1_big = fit(simulate_far(m, 2000, 0, 6), FitOptions{1});
    const double w = confidence_interval(f1, x, u, 0.95).half_width /
                     std::sqrt(inner_product(apply(f1.gamma_eps_hat, u), u));
    const double w_big = confidence_interval(f1_big, x, u, 0.95).half_width /
                         std::sqrt(inner_product(apply(f1_big.gamma_eps_hat, u), u));
    EXPECT_NEAR(w / w_big, 2.0, 1e-12);

    EXPECT_THROW(confidence_interval(f, x, u, 1.0), invalid_argument);
    EXPECT_THROW(confidence_interval(f, x, u, -0.1), invalid_argument);
    EXPECT_THROW(confidence_interval(f, x, CoeffVector(8), 0.9), invalid_argument);
}

TEST(NormalQuantile, Values) {
    EXPECT_EQ(normal_quantile(0.5), 0.0);
    EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-14);
    EXPECT_NEAR(normal_quantile(0.025), -1.959963984540054, 1e-14);
}
