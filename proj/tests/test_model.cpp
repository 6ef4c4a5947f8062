#include <cmath>

#include <gtest/gtest.h>

#include "farlab/model.hpp"
#include "farlab/suites.hpp"

using namespace farlab;

namespace {

EigenProfile profile(ProfileKind kind, double alpha, std::size_t d, double beta = 1.0) {
    EigenProfile p;
    p.kind = kind;
    p.alpha = alpha;
    p.beta = beta;
    p.dim = d;
    return p;
}

SpectralDecomp canonical(std::vector<double> lambda) {
    std::vector<CoeffVector> e;
    for (std::size_t i = 0; i < lambda.size(); ++i) e.push_back(CoeffVector::basis(lambda.size(), i));
    return SpectralDecomp(std::move(lambda), std::move(e));
}

} // namespace

TEST(EigenProfile, Values) {
    EXPECT_DOUBLE_EQ(eigen_profile(profile(ProfileKind::arithmetic, 1.0, 4))[1], 0.25);
    EXPECT_NEAR(eigen_profile(profile(ProfileKind::exponential, 0.5, 4))[1], std::exp(-1.0), 1e-15);
    const auto l = eigen_profile(profile(ProfileKind::laurent, 1.0, 5, 1.0));
    EXPECT_NEAR(l[0], 1.0 / (2.0 * std::log(2.0) * std::log(2.0)), 1e-15);
}

TEST(EigenProfile, ConvexityOfParametricFamilies) {
    for (auto k : {ProfileKind::arithmetic, ProfileKind::exponential, ProfileKind::laurent}) {
        const auto l = eigen_profile(profile(k, 1.0, 60));
        for (std::size_t j = 1; j + 1 < l.size(); ++j) EXPECT_LE(l[j] - l[j + 1], l[j - 1] - l[j] + 1e-15);
    }
}

TEST(EigenProfile, HazardMonotoneForParametricFamilies) {
    // jλ_j ≥ kλ_k for j < k holds exactly for these three families.
    for (auto k : {ProfileKind::arithmetic, ProfileKind::laurent}) {
        const auto l = eigen_profile(profile(k, 0.7, 80));
        for (std::size_t j = 1; j <= l.size(); ++j)
            for (std::size_t m = j + 1; m <= l.size(); ++m)
                EXPECT_GE(static_cast<double>(j) * l[j - 1], static_cast<double>(m) * l[m - 1]);
    }
    const auto e = eigen_profile(profile(ProfileKind::exponential, 1.0, 80));
    for (std::size_t j = 1; j <= e.size(); ++j)
        for (std::size_t m = j + 1; m <= e.size(); ++m)
            EXPECT_GE(static_cast<double>(j) * e[j - 1], static_cast<double>(m) * e[m - 1]);
}

TEST(EigenProfile, Errors) {
    EXPECT_THROW(eigen_profile(profile(ProfileKind::arithmetic, 0.0, 5)), schema_error);
    try {
        eigen_profile(profile(ProfileKind::arithmetic, -1.0, 5));
    } catch (const schema_error& e) {
        EXPECT_EQ(e.field(), "params.alpha");
    }
    EigenProfile ex;
    ex.kind = ProfileKind::explicit_values;
    ex.dim = 4;
    ex.values = {1.0, 0.5, 0.4, 0.39}; // steps 0.5, 0.1, 0.01
    EXPECT_NO_THROW(eigen_profile(ex));
    ex.values = {1.0, 0.9, 0.5, 0.1}; // steps 0.1, 0.4, 0.4 → not convex
    EXPECT_THROW(eigen_profile(ex), invalid_argument);
    ex.values = {1.0, 0.5, 0.0, -0.1};
    EXPECT_THROW(eigen_profile(ex), invalid_argument);
}

TEST(BuildRho, DiagonalExamples) {
    const auto dec = canonical({1.0, 0.25});
    const LinearOp rho = build_rho(RhoMode::diagonal, 0.5, dec);
    EXPECT_DOUBLE_EQ(rho(0, 0), 0.5);
    EXPECT_DOUBLE_EQ(rho(1, 1), 0.25);
    EXPECT_EQ(rho(0, 1), 0.0);
    const LinearOp zero = build_rho(RhoMode::diagonal, 0.0, dec);
    EXPECT_EQ(op_norms(zero).sup, 0.0);
    EXPECT_THROW(build_rho(RhoMode::diagonal, 1.0, dec), schema_error);
    FarModel m(dec, rho, XiLaw::gaussian);
    EXPECT_NEAR(m.rho_tilde_norm(), 0.5, 1e-14);
}

TEST(BuildRho, ContractionInBothModes) {
    for (auto mode : {RhoMode::diagonal, RhoMode::composed})
        for (double s : {0.1, 0.5, 0.95}) {
            ModelSpec spec = reference_model_spec(30, s);
            spec.rho_mode = mode;
            spec.basis = {BasisKind::rotated, 4};
            const FarModel m = FarModel::from_spec(spec);
            EXPECT_LE(op_norms(m.rho()).sup, s + 1e-12);
            EXPECT_TRUE(std::isfinite(m.rho_tilde_norm()));
            EXPECT_NEAR(m.rho_tilde_norm(), s, 1e-9);
            if (mode == RhoMode::composed) {
                EXPECT_FALSE(m.rho().is_symmetric());
            }
        }
}

TEST(InnovationCovariance, Examples) {
    const auto dec = canonical({1.0, 0.5, 0.2});
    const LinearOp gamma = dec.reconstruct();
    EXPECT_LT(hs_distance(innovation_covariance(gamma, LinearOp(3)), gamma), 1e-15);
    const double mu[] = {0.9, 0.5, 0.1};
    const LinearOp ge = innovation_covariance(gamma, LinearOp::diagonal(mu));
    EXPECT_NEAR(ge(0, 0), 1.0 * (1 - 0.81), 1e-15);
    EXPECT_NEAR(ge(1, 1), 0.5 * (1 - 0.25), 1e-15);
    EXPECT_NEAR(ge(2, 2), 0.2 * (1 - 0.01), 1e-15);
    const double big[] = {1.2, 0.0, 0.0};
    EXPECT_THROW(innovation_covariance(gamma, LinearOp::diagonal(big)), infeasible_model);
    const double edge[] = {1.0 - 1e-9, 0.0, 0.0};
    EXPECT_NEAR(innovation_covariance(gamma, LinearOp::diagonal(edge))(0, 0), 0.0, 1e-8);
}

TEST(FarModel, CovarianceIdentityAndHash) {
    ModelSpec spec = reference_model_spec(20, 0.7);
    spec.rho_mode = RhoMode::composed;
    const FarModel a = FarModel::from_spec(spec);
    EXPECT_LE(verify_covariance_identity(a), 1e-10);
    EXPECT_EQ(a.hash(), FarModel::from_spec(spec).hash());
    spec.s = 0.6;
    EXPECT_NE(a.hash(), FarModel::from_spec(spec).hash());
    const FarModel zero = FarModel::from_spec(reference_model_spec(10, 0.0));
    EXPECT_EQ(verify_covariance_identity(zero), 0.0);
    // A perturbed Γ_ε shows up at its own size.
    LinearOp ge = a.gamma_eps();
    ge(0, 0) += 1e-3;
    EXPECT_NEAR(covariance_identity_residual(a.gamma(), a.rho(), ge), 1e-3, 1e-10);
}

TEST(Validate, ReferenceModelPasses) {
    const FarModel m = FarModel::from_spec(reference_model_spec(40, 0.5));
    const auto r = validate_assumptions(m);
    EXPECT_TRUE(r.all_passed());
    EXPECT_EQ(r.find("A2.fourth_moment")->measured, 3.0);
    EXPECT_EQ(validate_assumptions(m).checks.size(), r.checks.size());
}

TEST(Validate, ConcaveProfileFailsOnlyConvexity) {
    std::vector<double> lambda;
    for (int j = 1; j <= 10; ++j) lambda.push_back(2.0 - j * j / 100.0);
    const FarModel m(canonical(lambda), LinearOp(10), XiLaw::gaussian);
    const auto r = validate_assumptions(m);
    EXPECT_FALSE(r.find("A3.convexity")->passed);
    for (const auto& c : r.checks)
        if (c.name != "A3.convexity") {
            EXPECT_TRUE(c.passed) << c.name;
        }
}

TEST(Validate, LinearProfileIsConvex) {
    std::vector<double> lambda;
    for (int j = 1; j <= 10; ++j) lambda.push_back(2.0 - j / 10.0);
    const FarModel m(canonical(lambda), LinearOp(10), XiLaw::gaussian);
    EXPECT_TRUE(validate_assumptions(m).find("A3.convexity")->passed);
}

TEST(Validate, FourthMomentsAndPareto) {
    EXPECT_EQ(xi_fourth_moment(XiLaw::gaussian), 3.0);
    EXPECT_DOUBLE_EQ(xi_fourth_moment(XiLaw::uniform), 9.0 / 5.0);
    EXPECT_EQ(xi_fourth_moment(XiLaw::two_sided_exponential), 6.0);
    ModelSpec spec = reference_model_spec(10);
    spec.xi_law = XiLaw::pareto;
    EXPECT_FALSE(validate_assumptions(FarModel::from_spec(spec)).find("A2.fourth_moment")->passed);
}
