#ifndef FARLAB_ESTIMATE_HPP
#define FARLAB_ESTIMATE_HPP

/** @file
 * Estimation of ρ by spectral cutoff, prediction, and asymptotic intervals.
 *
 *   Γₙ  = (1/n) Σ_{k≤n} X_k⊗X_k
 *   Δₙ  = (1/(n−1)) Σ_{k<n} X_k⊗X_{k+1}
 *   Γₙ† = Σ_{l≤kₙ} λ̂_l^{−1} ê_l⊗ê_l
 *   ρ̂ₙ  = Δₙ∘Γₙ†
 *
 * Intervals use the Gaussian limit of √(n/kₙ)·(ρ̂ₙ(x) − ρΠ̂(x)) with
 * covariance Γ_ε, estimated from residuals X_k − ρ̂ₙ(X_{k−1}).
 */

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "farlab/error.hpp"
#include "farlab/hilbert.hpp"
#include "farlab/simulate.hpp"

namespace farlab {

inline LinearOp empirical_covariance(std::span<const CoeffVector> obs) {
    if (obs.empty()) throw invalid_argument("empirical_covariance: empty path");
    const std::size_t d = obs.front().dim();
    std::vector<double> acc(d * d, 0.0);
    for (const auto& x : obs) {
        if (x.dim() != d) throw dimension_mismatch(d, x.dim());
        for (std::size_t i = 0; i < d; ++i) {
            const double xi = x[i];
            double* row = acc.data() + i * d;
            for (std::size_t j = i; j < d; ++j) row[j] += xi * x[j];
        }
    }
    const double inv = 1.0 / static_cast<double>(obs.size());
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) {
            acc[i * d + j] *= inv;
            acc[j * d + i] = acc[i * d + j];
        }
    return LinearOp(d, std::move(acc));
}

/// Δₙ; the matrix is (1/(n−1)) Σ X_{k+1}X_kᵀ under (u⊗v) = v·uᵀ.
inline LinearOp cross_covariance(std::span<const CoeffVector> obs) {
    if (obs.size() < 2) throw invalid_argument("cross_covariance: need at least 2 observations");
    const std::size_t d = obs.front().dim();
    std::vector<double> acc(d * d, 0.0);
    for (std::size_t k = 0; k + 1 < obs.size(); ++k) {
        const auto& prev = obs[k];
        const auto& next = obs[k + 1];
        if (prev.dim() != d) throw dimension_mismatch(d, prev.dim());
        if (next.dim() != d) throw dimension_mismatch(d, next.dim());
        for (std::size_t i = 0; i < d; ++i) {
            const double ni = next[i];
            double* row = acc.data() + i * d;
            for (std::size_t j = 0; j < d; ++j) row[j] += ni * prev[j];
        }
    }
    const double inv = 1.0 / static_cast<double>(obs.size() - 1);
    for (double& a : acc) a *= inv;
    return LinearOp(d, std::move(acc));
}

/// floor(c·n^{1/4}/ln n) before clamping.
inline long kn_rule_raw(std::size_t n, double c) {
    if (n < 2) throw invalid_argument("kn_rule: n must be >= 2");
    if (!(c > 0.0)) throw invalid_argument("kn_rule: c must be > 0");
    const double x = static_cast<double>(n);
    return static_cast<long>(std::floor(c * std::pow(x, 0.25) / std::log(x)));
}

/// kₙ = clamp(floor(c·n^{1/4}/ln n), 1, D).
inline std::size_t kn_rule(std::size_t n, double c, std::size_t dim) {
    const long raw = kn_rule_raw(n, c);
    if (raw < 1) return 1;
    return std::min(static_cast<std::size_t>(raw), dim);
}

/// Σ_{l≤k} λ_l^{−1} e_l⊗e_l. Raises degenerate_spectrum naming the first
/// eigenvalue under the pivot threshold.
inline LinearOp gamma_dag(const SpectralDecomp& dec, std::size_t k) {
    detail::check_cutoff(dec, k);
    return dec.spectral_sum(k, [](double x) { return 1.0 / x; });
}

struct FitOptions {
    std::optional<std::size_t> k; ///< overrides the kₙ rule
    double c = 1.0;               ///< constant of the kₙ rule
};

struct Fit {
    LinearOp gamma_n;
    LinearOp delta_n;
    SpectralDecomp fpca;
    std::size_t k_n = 0;
    LinearOp gamma_n_dag;
    LinearOp rho_hat;
    LinearOp pi_hat;
    LinearOp gamma_eps_hat;
    std::size_t n = 0;

    std::size_t dim() const noexcept { return gamma_n.dim(); }
};

inline Fit fit(std::span<const CoeffVector> obs, const FitOptions& opt = {}) {
    if (obs.size() < 2) throw invalid_argument("fit: need at least 2 observations");
    Fit f;
    f.n = obs.size();
    f.gamma_n = empirical_covariance(obs);
    f.delta_n = cross_covariance(obs);
    f.fpca = sym_eigen(f.gamma_n, true);
    const std::size_t d = f.dim();
    if (opt.k) {
        if (*opt.k < 1 || *opt.k > d)
            throw invalid_argument("fit: k override " + std::to_string(*opt.k) +
                                   " outside [1, " + std::to_string(d) + "]");
        f.k_n = *opt.k;
    } else {
        f.k_n = kn_rule(f.n, opt.c, d);
    }
    f.gamma_n_dag = gamma_dag(f.fpca, f.k_n);
    f.pi_hat = f.fpca.projector(f.k_n);
    f.rho_hat = compose(f.delta_n, f.gamma_n_dag);

    std::vector<double> acc(d * d, 0.0);
    for (std::size_t k = 1; k < obs.size(); ++k) {
        const CoeffVector r = obs[k] - apply(f.rho_hat, obs[k - 1]);
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = i; j < d; ++j) acc[i * d + j] += r[i] * r[j];
    }
    const double inv = 1.0 / static_cast<double>(obs.size() - 1);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) {
            acc[i * d + j] *= inv;
            acc[j * d + i] = acc[i * d + j];
        }
    f.gamma_eps_hat = LinearOp(d, std::move(acc));
    return f;
}

inline Fit fit(const Path& path, const FitOptions& opt = {}) {
    return fit(std::span<const CoeffVector>(path.observations), opt);
}

/// Numerical residuals of the identities every fit must satisfy.
struct FitDiagnostics {
    double projector_residual;   ///< ‖ΓₙΓₙ† − Π̂‖₂
    double idempotence_residual; ///< ‖Π̂² − Π̂‖₂
    double symmetry_residual;    ///< ‖Π̂ − Π̂*‖₂
    double projector_trace;      ///< tr Π̂
    double dag_trace;            ///< tr(Γₙ†Γₙ)
    double dag_norm_product;     ///< ‖Γₙ†‖_∞·λ̂_{kₙ}
    double eigen_trace_error;    ///< |Σ λ̂_l − tr Γₙ|
    double moment_residual;      ///< ‖ρ̂ₙΓₙ − ΔₙΠ̂‖₂
};

inline FitDiagnostics diagnose(const Fit& f) {
    FitDiagnostics g{};
    g.projector_residual = hs_distance(compose(f.gamma_n, f.gamma_n_dag), f.pi_hat);
    g.idempotence_residual = hs_distance(compose(f.pi_hat, f.pi_hat), f.pi_hat);
    g.symmetry_residual = hs_distance(f.pi_hat, adjoint(f.pi_hat));
    g.projector_trace = f.pi_hat.trace();
    g.dag_trace = compose(f.gamma_n_dag, f.gamma_n).trace();
    g.dag_norm_product = op_norms(f.gamma_n_dag).sup * f.fpca.eigenvalue(f.k_n - 1);
    double sum = 0.0;
    for (double l : f.fpca.eigenvalues()) sum += l;
    g.eigen_trace_error = std::abs(sum - f.gamma_n.trace());
    g.moment_residual = hs_distance(compose(f.rho_hat, f.gamma_n), compose(f.delta_n, f.pi_hat));
    return g;
}

/// ρ̂ₙ(x_new); in the tiled scheme x_new is the observation after the fitted window.
inline CoeffVector predict(const Fit& f, const CoeffVector& x_new) {
    return apply(f.rho_hat, x_new);
}

inline double normal_quantile(double p) {
    if (p <= 0.5 && p >= 0.5) return 0.0;
    return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

struct Interval {
    double lo;
    double hi;
    double center;
    double half_width;
};

/// ⟨ρ̂ₙ(x), u⟩ ± z_{(1+level)/2}·√(kₙ/n)·√⟨Γ̂_ε u, u⟩.
inline Interval confidence_interval(const Fit& f, const CoeffVector& x_new, const CoeffVector& u,
                                    double level) {
    if (!(level >= 0.0) || !(level < 1.0))
        throw invalid_argument("confidence_interval: level must lie in [0, 1)");
    if (!(u.norm() > 0.0)) throw invalid_argument("confidence_interval: direction must be nonzero");
    const double q = inner_product(apply(f.gamma_eps_hat, u), u);
    if (q < 0.0)
        throw not_psd("confidence_interval: estimated innovation variance is negative");
    const double center = inner_product(predict(f, x_new), u);
    const double z = normal_quantile(0.5 * (1.0 + level));
    const double half = z * std::sqrt(static_cast<double>(f.k_n) / static_cast<double>(f.n)) *
                        std::sqrt(q);
    return {center - half, center + half, center, half};
}

} // namespace farlab

#endif // FARLAB_ESTIMATE_HPP
