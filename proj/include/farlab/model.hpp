#ifndef FARLAB_MODEL_HPP
#define FARLAB_MODEL_HPP

/** @file
 * Ground-truth FAR(1) models X_n = ρ(X_{n−1}) + ε_n.
 *
 * A model is assembled from the eigen-structure of the stationary covariance
 * Γ and an autocorrelation operator ρ. The innovation covariance is derived
 * as Γ_ε = Γ − ρΓρ*, so the requested Γ is exactly the stationary
 * covariance of the simulated process.
 */

#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "farlab/error.hpp"
#include "farlab/hilbert.hpp"
#include "farlab/random.hpp"

namespace farlab {

// ---------------------------------------------------------------------------
// Eigenvalue profiles
// ---------------------------------------------------------------------------

enum class ProfileKind { arithmetic, exponential, laurent, explicit_values };

inline std::string_view to_string(ProfileKind k) noexcept {
    switch (k) {
    case ProfileKind::arithmetic: return "arithmetic";
    case ProfileKind::exponential: return "exponential";
    case ProfileKind::laurent: return "laurent";
    case ProfileKind::explicit_values: return "explicit";
    }
    return "?";
}

/**
 * Decay law of the covariance eigenvalues.
 *
 *   arithmetic   λ_j = C / j^{1+α}
 *   exponential  λ_j = C·exp(−αj)
 *   laurent      λ_j = C / (i^α·log^{1+β} i),  i = j + 1
 *   explicit     λ_j = values[j−1]
 */
struct EigenProfile {
    ProfileKind kind = ProfileKind::arithmetic;
    double C = 1.0;
    double alpha = 1.0;
    double beta = 1.0;
    std::size_t dim = 10;
    std::vector<double> values; ///< explicit profiles only
};

/// min over 2 ≤ j ≤ D−1 of (λ_{j−1}−λ_j) − (λ_j−λ_{j+1}); +∞ when D < 3.
inline double convexity_margin(std::span<const double> lambda) {
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t j = 1; j + 1 < lambda.size(); ++j)
        margin = std::min(margin, (lambda[j - 1] - lambda[j]) - (lambda[j] - lambda[j + 1]));
    return margin;
}

/// Convexity slack allowed for rounding, relative to λ₁.
inline double convexity_tolerance(std::span<const double> lambda) {
    return lambda.empty() ? 0.0 : 1e-12 * std::abs(lambda.front());
}

inline double profile_value(const EigenProfile& p, std::size_t j) {
    const double x = static_cast<double>(j);
    switch (p.kind) {
    case ProfileKind::arithmetic: return p.C / std::pow(x, 1.0 + p.alpha);
    case ProfileKind::exponential: return p.C * std::exp(-p.alpha * x);
    case ProfileKind::laurent: {
        const double i = x + 1.0;
        return p.C / (std::pow(i, p.alpha) * std::pow(std::log(i), 1.0 + p.beta));
    }
    case ProfileKind::explicit_values: return p.values.at(j - 1);
    }
    return 0.0;
}

/// Checks parameter ranges; throws schema_error naming the offending field.
inline void validate_profile_params(const EigenProfile& p) {
    if (p.kind == ProfileKind::explicit_values) {
        if (p.values.size() != p.dim)
            throw schema_error("values", "explicit profile needs exactly D values");
    } else {
        if (!(p.C > 0.0) || !std::isfinite(p.C)) throw schema_error("params.C", "must be > 0");
        if (!(p.alpha > 0.0) || !std::isfinite(p.alpha))
            throw schema_error("params.alpha", "must be > 0");
        if (p.kind == ProfileKind::laurent && (!(p.beta > 0.0) || !std::isfinite(p.beta)))
            throw schema_error("params.beta", "must be > 0");
    }
    if (p.dim < 2) throw schema_error("D", "must be >= 2");
}

/// The D eigenvalues of a profile; strictly positive, strictly decreasing and
/// discretely convex, or an error is raised.
inline std::vector<double> eigen_profile(const EigenProfile& p) {
    validate_profile_params(p);
    std::vector<double> lambda(p.dim);
    for (std::size_t j = 1; j <= p.dim; ++j) lambda[j - 1] = profile_value(p, j);
    for (std::size_t j = 0; j < p.dim; ++j) {
        if (!(lambda[j] > 0.0) || !std::isfinite(lambda[j]))
            throw invalid_argument("eigen_profile: eigenvalue #" + std::to_string(j + 1) +
                                   " is not strictly positive");
        if (j > 0 && !(lambda[j] < lambda[j - 1]))
            throw invalid_argument("eigen_profile: eigenvalues must be strictly decreasing (at #" +
                                   std::to_string(j + 1) + ")");
    }
    if (convexity_margin(lambda) < -convexity_tolerance(lambda))
        throw invalid_argument("eigen_profile: profile is not convex");
    return lambda;
}

/// Upper bound on Σ_{j>D} λ_j for the parametric profiles; NaN when no closed
/// form is available (laurent, explicit).
inline double tail_remainder_bound(const EigenProfile& p, std::size_t d) {
    const double x = static_cast<double>(d);
    switch (p.kind) {
    case ProfileKind::arithmetic:
        // Σ_{j>D} C j^{−1−α} ≤ ∫_D^∞ C t^{−1−α} dt
        return p.C * std::pow(x, -p.alpha) / p.alpha;
    case ProfileKind::exponential:
        return p.C * std::exp(-p.alpha * (x + 1.0)) / (1.0 - std::exp(-p.alpha));
    default:
        return std::numeric_limits<double>::quiet_NaN();
    }
}

// ---------------------------------------------------------------------------
// Bases and the autocorrelation operator
// ---------------------------------------------------------------------------

enum class BasisKind { canonical, rotated };

/// Orientation of the Γ-eigenbasis inside the reference basis.
struct BasisSpec {
    BasisKind kind = BasisKind::canonical;
    std::uint64_t seed = 0; ///< rotated only
};

/// Orthonormal basis: the reference basis, or a seeded Haar-like rotation of it.
inline std::vector<CoeffVector> make_basis(std::size_t d, const BasisSpec& spec) {
    std::vector<CoeffVector> e;
    e.reserve(d);
    if (spec.kind == BasisKind::canonical) {
        for (std::size_t i = 0; i < d; ++i) e.push_back(CoeffVector::basis(d, i));
        return e;
    }
    auto g = make_stream(spec.seed, 0, StreamRole::auxiliary, 0);
    std::normal_distribution<double> normal;
    for (std::size_t i = 0; i < d; ++i) {
        CoeffVector v(d);
        for (std::size_t k = 0; k < d; ++k) v[k] = normal(g);
        // Modified Gram–Schmidt, applied twice.
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& q : e) v -= inner_product(v, q) * q;
        v *= 1.0 / v.norm();
        e.push_back(std::move(v));
    }
    return e;
}

enum class RhoMode {
    diagonal, ///< ρ = Σ μ_i e_i⊗e_i with μ_i = s·√(λ_i/λ₁)
    composed, ///< ρ = (s/√λ₁)·Γ^{1/2}K with K an orthogonal, non-diagonal contraction
};

inline std::string_view to_string(RhoMode m) noexcept {
    return m == RhoMode::diagonal ? "diagonal" : "composed";
}

/**
 * An autocorrelation operator satisfying ‖ρ‖_∞ ≤ s < 1 and
 * ‖Γ^{−1/2}ρ‖_∞ = s/√λ₁ by construction.
 *
 * In the composed mode K is the chain of Givens rotations by π/6 acting on
 * consecutive Γ-eigendirections, which makes ρ non-symmetric.
 */
inline LinearOp build_rho(RhoMode mode, double s, const SpectralDecomp& gamma) {
    if (!(s >= 0.0) || !(s < 1.0)) throw schema_error("s", "strength must lie in [0, 1)");
    const std::size_t d = gamma.dim();
    const double lambda1 = gamma.eigenvalue(0);
    if (!(lambda1 > 0.0)) throw invalid_argument("build_rho: Γ must have a positive top eigenvalue");

    // Matrix of ρ in Γ-eigencoordinates.
    std::vector<double> r(d * d, 0.0);
    if (mode == RhoMode::diagonal) {
        for (std::size_t i = 0; i < d; ++i)
            r[i * d + i] = s * std::sqrt(gamma.eigenvalue(i) / lambda1);
    } else {
        std::vector<double> k(d * d, 0.0);
        for (std::size_t i = 0; i < d; ++i) k[i * d + i] = 1.0;
        const double c = std::cos(std::numbers::pi / 6.0);
        const double sn = std::sin(std::numbers::pi / 6.0);
        for (std::size_t p = 0; p + 1 < d; ++p) {
            // K ← K·G(p, p+1)
            for (std::size_t i = 0; i < d; ++i) {
                const double a = k[i * d + p];
                const double b = k[i * d + p + 1];
                k[i * d + p] = c * a - sn * b;
                k[i * d + p + 1] = sn * a + c * b;
            }
        }
        for (std::size_t i = 0; i < d; ++i) {
            const double w = s * std::sqrt(gamma.eigenvalue(i) / lambda1);
            for (std::size_t j = 0; j < d; ++j) r[i * d + j] = w * k[i * d + j];
        }
    }

    // ρ = E·R·Eᵀ with the eigenvectors as columns of E.
    LinearOp rho(d);
    const auto& e = gamma.eigenvectors();
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b) {
            const double rab = r[a * d + b];
            if (rab == 0.0) continue;
            for (std::size_t i = 0; i < d; ++i) {
                const double w = rab * e[a][i];
                for (std::size_t j = 0; j < d; ++j) rho(i, j) += w * e[b][j];
            }
        }
    return rho.recertify();
}

/// Γ_ε = Γ − ρΓρ*; raises infeasible_model when the result is not PSD.
inline LinearOp innovation_covariance(const LinearOp& gamma, const LinearOp& rho) {
    if (!gamma.is_symmetric()) throw not_symmetric("innovation_covariance: Γ must be symmetric");
    LinearOp eps = (gamma - compose(rho, compose(gamma, adjoint(rho)))).symmetrized();
    const auto spec = sym_eigen(eps, false);
    const double smallest = spec.eigenvalues().empty() ? 0.0 : spec.eigenvalues().back();
    if (smallest < -psd_tolerance)
        throw infeasible_model("innovation covariance Γ − ρΓρ* has eigenvalue " +
                               std::to_string(smallest));
    return eps;
}

// ---------------------------------------------------------------------------
// The model
// ---------------------------------------------------------------------------

/// Seed-independent description of a model; what the JSON schema serializes.
struct ModelSpec {
    EigenProfile profile;
    RhoMode rho_mode = RhoMode::diagonal;
    double s = 0.5;
    XiLaw xi_law = XiLaw::gaussian;
    BasisSpec basis;
};

class FarModel {
public:
    /// Builds from an ordered Γ-decomposition and any ρ. Γ_ε is derived;
    /// infeasible pairs raise infeasible_model. Assumptions are not enforced
    /// here: use validate_assumptions.
    FarModel(SpectralDecomp gamma_decomp, LinearOp rho, XiLaw law)
        : gamma_decomp_(std::move(gamma_decomp)), rho_(std::move(rho)), law_(law) {
        if (rho_.dim() != gamma_decomp_.dim())
            throw dimension_mismatch(gamma_decomp_.dim(), rho_.dim());
        gamma_ = gamma_decomp_.reconstruct();
        gamma_eps_ = innovation_covariance(gamma_, rho_);
        gamma_eps_decomp_ = sym_eigen(gamma_eps_, true);
        rho_tilde_norm_ = std::numeric_limits<double>::infinity();
        try {
            const auto inv_sqrt = psd_pinv_sqrt(gamma_decomp_, gamma_decomp_.dim());
            rho_tilde_norm_ = op_norms(compose(inv_sqrt, rho_)).sup;
        } catch (const degenerate_spectrum&) {
        }
        hash_ = compute_hash();
    }

    static FarModel from_spec(const ModelSpec& spec) {
        const auto lambda = eigen_profile(spec.profile);
        auto basis = make_basis(spec.profile.dim, spec.basis);
        SpectralDecomp dec(lambda, std::move(basis));
        auto rho = build_rho(spec.rho_mode, spec.s, dec);
        FarModel m(std::move(dec), std::move(rho), spec.xi_law);
        m.spec_ = spec;
        m.has_spec_ = true;
        return m;
    }

    std::size_t dim() const noexcept { return gamma_.dim(); }
    const LinearOp& gamma() const noexcept { return gamma_; }
    const SpectralDecomp& gamma_decomp() const noexcept { return gamma_decomp_; }
    const LinearOp& rho() const noexcept { return rho_; }
    const LinearOp& gamma_eps() const noexcept { return gamma_eps_; }
    const SpectralDecomp& gamma_eps_decomp() const noexcept { return gamma_eps_decomp_; }
    XiLaw xi_law() const noexcept { return law_; }
    /// ‖Γ^{−1/2}ρ‖_∞; +∞ if Γ is numerically singular.
    double rho_tilde_norm() const noexcept { return rho_tilde_norm_; }
    /// FNV-1a digest of (Γ, ρ, ξ law) bit patterns.
    std::uint64_t hash() const noexcept { return hash_; }
    const ModelSpec* spec() const noexcept { return has_spec_ ? &spec_ : nullptr; }

    const std::vector<double>& eigenvalues() const noexcept { return gamma_decomp_.eigenvalues(); }
    const CoeffVector& eigenvector(std::size_t l) const { return gamma_decomp_.eigenvector(l); }

private:
    std::uint64_t compute_hash() const {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        auto mix = [&h](double x) {
            std::uint64_t bits;
            std::memcpy(&bits, &x, sizeof bits);
            for (int b = 0; b < 8; ++b) {
                h ^= (bits >> (8 * b)) & 0xffU;
                h *= 0x100000001b3ULL;
            }
        };
        for (double x : gamma_.entries()) mix(x);
        for (double x : rho_.entries()) mix(x);
        mix(static_cast<double>(static_cast<int>(law_)));
        return h;
    }

    SpectralDecomp gamma_decomp_;
    LinearOp rho_;
    XiLaw law_;
    LinearOp gamma_;
    LinearOp gamma_eps_;
    SpectralDecomp gamma_eps_decomp_;
    double rho_tilde_norm_ = 0.0;
    std::uint64_t hash_ = 0;
    ModelSpec spec_;
    bool has_spec_ = false;
};

/// ‖Γ − ρΓρ* − Γ_ε‖₂ for explicit operators.
inline double covariance_identity_residual(const LinearOp& gamma, const LinearOp& rho,
                                           const LinearOp& gamma_eps) {
    return hs_distance(gamma - compose(rho, compose(gamma, adjoint(rho))), gamma_eps);
}

// ---------------------------------------------------------------------------
// Assumption checks
// ---------------------------------------------------------------------------

struct AssumptionCheck {
    std::string name;
    bool passed = false;
    double measured = 0.0;
    std::string detail;
};

struct ValidationReport {
    std::vector<AssumptionCheck> checks;

    bool all_passed() const {
        for (const auto& c : checks)
            if (!c.passed) return false;
        return true;
    }

    const AssumptionCheck* find(std::string_view name) const {
        for (const auto& c : checks)
            if (c.name == name) return &c;
        return nullptr;
    }
};

/// Reports (does not throw) on the A₀–A₃ assumptions and identifiability.
inline ValidationReport validate_assumptions(const FarModel& m) {
    ValidationReport r;
    const auto& lambda = m.eigenvalues();
    const double min_lambda = lambda.empty() ? 0.0 : lambda.back();

    r.checks.push_back({"A0.ker_gamma_trivial", min_lambda > 0.0, min_lambda,
                        "smallest eigenvalue of Γ must be > 0"});
    const double tr_eps = m.gamma_eps().trace();
    r.checks.push_back({"A0.innovation_second_moment", std::isfinite(tr_eps), tr_eps,
                        "E‖ε‖² = tr Γ_ε must be finite"});
    const double rho_sup = op_norms(m.rho()).sup;
    r.checks.push_back({"A0.rho_contraction", rho_sup < 1.0, rho_sup, "‖ρ‖_∞ must be < 1"});
    r.checks.push_back({"A1.smoothness", std::isfinite(m.rho_tilde_norm()), m.rho_tilde_norm(),
                        "‖Γ^{-1/2}ρ‖_∞ must be finite"});
    const double m4 = xi_fourth_moment(m.xi_law());
    r.checks.push_back({"A2.fourth_moment", std::isfinite(m4), m4,
                        std::string("E ξ⁴ for ") + std::string(to_string(m.xi_law()))});
    const double margin = convexity_margin(lambda);
    r.checks.push_back({"A3.convexity", margin >= -convexity_tolerance(lambda), margin,
                        "min_j (λ_{j-1}-λ_j) - (λ_j-λ_{j+1}) must be >= 0"});
    r.checks.push_back({"identifiability", min_lambda > 0.0, min_lambda,
                        "moment equation identifies ρ iff ker Γ = {0}"});
    const double resid = covariance_identity_residual(m.gamma(), m.rho(), m.gamma_eps());
    r.checks.push_back({"covariance_identity", resid <= 1e-10, resid,
                        "‖Γ - ρΓρ* - Γ_ε‖₂ <= 1e-10"});
    return r;
}

} // namespace farlab

#endif // FARLAB_MODEL_HPP
