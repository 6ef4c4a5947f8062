#ifndef FARLAB_LAB_HPP
#define FARLAB_LAB_HPP

/** @file
 * Monte Carlo and deterministic checks of the asymptotic theory of the
 * spectral-cutoff estimator.
 *
 * Every Monte Carlo routine draws replication r from the substreams keyed by
 * (master_seed, r), computes one record per replication, and reduces the
 * records in index order. Results are therefore identical whatever the
 * number of worker threads.
 */

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "farlab/error.hpp"
#include "farlab/estimate.hpp"
#include "farlab/hilbert.hpp"
#include "farlab/model.hpp"
#include "farlab/simulate.hpp"
#include "farlab/stats.hpp"

namespace farlab {

/// Runs fn(r) for r in [0, reps) on up to `threads` workers (0 = all cores)
/// and returns the results in replication order.
template <class F>
auto run_replications(std::size_t reps, unsigned threads, F&& fn)
    -> std::vector<decltype(fn(std::size_t{}))> {
    using R = decltype(fn(std::size_t{}));
    std::vector<std::optional<R>> slots(reps);
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(reps, 1)));

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t r = next++; r < reps; r = next++) {
            try {
                slots[r].emplace(fn(r));
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);
    std::vector<R> out;
    out.reserve(reps);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

// ---------------------------------------------------------------------------
// Prediction error at the √(n/kₙ) rate
// ---------------------------------------------------------------------------

enum class Normalization {
    sqrt_n_over_k, ///< √(n/kₙ), the correct rate
    sqrt_n,        ///< √n, a deliberately wrong rate for negative controls
};

struct McOptions {
    std::size_t n = 2000;
    std::size_t reps = 1000;
    std::vector<CoeffVector> directions; ///< empty: the first three eigenvectors of Γ
    std::uint64_t seed = 0;
    std::optional<std::size_t> k;
    double c = 1.0;
    Normalization normalization = Normalization::sqrt_n_over_k;
    /// Fit on X₁..Xₙ and predict from X_{n+1}; otherwise fit on X₁..X_{n+1}.
    bool tiled = true;
    double level = 0.95;
    unsigned threads = 0;
};

struct DirectionStats {
    CoeffVector direction;
    double target_variance = 0.0; ///< ⟨Γ_ε u, u⟩
    double mean = 0.0;
    double empirical_variance = 0.0;
    double variance_ratio = 0.0;
    double kurtosis = 0.0;
    double ks_statistic = 0.0;
    double ks_p_value = 0.0;
    double coverage = 0.0; ///< fraction of intervals covering ⟨ρΠ̂(x), u⟩
    std::vector<double> samples;
};

struct McReport {
    std::size_t n = 0;
    std::size_t k_n = 0;
    std::size_t replications = 0;
    std::size_t failures = 0;
    std::uint64_t model_hash = 0;
    std::uint64_t seed = 0;
    Normalization normalization = Normalization::sqrt_n_over_k;
    bool tiled = true;
    double level = 0.95;
    std::vector<DirectionStats> directions;
    std::vector<std::string> failure_messages;
};

/**
 * Distribution of T = scale·(ρ̂ₙ(X_{n+1}) − ρΠ̂(X_{n+1})) over replications,
 * projected on each direction. Replications whose fit throws are skipped and
 * counted.
 */
inline McReport mc_prediction_error(const FarModel& model, const McOptions& opt) {
    if (opt.reps < 100) throw invalid_argument("mc_prediction_error: reps must be >= 100");
    if (opt.n < 2) throw invalid_argument("mc_prediction_error: n must be >= 2");
    std::vector<CoeffVector> dirs = opt.directions;
    if (dirs.empty())
        for (std::size_t l = 0; l < std::min<std::size_t>(3, model.dim()); ++l)
            dirs.push_back(model.eigenvector(l));
    for (const auto& u : dirs) {
        if (u.dim() != model.dim()) throw dimension_mismatch(model.dim(), u.dim());
        if (std::abs(u.norm() - 1.0) > 1e-9)
            throw invalid_argument("mc_prediction_error: directions must be unit vectors");
    }

    struct Record {
        bool ok = false;
        std::string error;
        std::size_t k_n = 0;
        std::vector<double> proj;
        std::vector<char> covered;
    };

    auto one = [&](std::size_t r) {
        Record rec;
        const auto tr = simulate_trajectory(model, opt.n, 0, opt.seed, r);
        // tr.states holds n + 1 stationary observations.
        const std::span<const CoeffVector> all(tr.states);
        const auto window = opt.tiled ? all.first(opt.n) : all;
        const CoeffVector& x_new = tr.states.back();
        try {
            const Fit f = fit(window, FitOptions{opt.k, opt.c});
            const double scale =
                opt.normalization == Normalization::sqrt_n_over_k
                    ? std::sqrt(static_cast<double>(f.n) / static_cast<double>(f.k_n))
                    : std::sqrt(static_cast<double>(f.n));
            const CoeffVector target = apply(model.rho(), apply(f.pi_hat, x_new));
            const CoeffVector t = scale * (predict(f, x_new) - target);
            rec.k_n = f.k_n;
            for (const auto& u : dirs) {
                rec.proj.push_back(inner_product(t, u));
                const Interval ci = confidence_interval(f, x_new, u, opt.level);
                const double tv = inner_product(target, u);
                rec.covered.push_back(ci.lo <= tv && tv <= ci.hi);
            }
            rec.ok = true;
        } catch (const error& e) {
            rec.error = e.what();
        }
        return rec;
    };

    const auto records = run_replications(opt.reps, opt.threads, one);

    McReport rep;
    rep.n = opt.n;
    rep.model_hash = model.hash();
    rep.seed = opt.seed;
    rep.normalization = opt.normalization;
    rep.tiled = opt.tiled;
    rep.level = opt.level;
    rep.directions.resize(dirs.size());
    std::vector<std::size_t> covered(dirs.size(), 0);
    for (const auto& rec : records) {
        if (!rec.ok) {
            ++rep.failures;
            if (rep.failure_messages.size() < 10) rep.failure_messages.push_back(rec.error);
            continue;
        }
        ++rep.replications;
        rep.k_n = rec.k_n;
        for (std::size_t d = 0; d < dirs.size(); ++d) {
            rep.directions[d].samples.push_back(rec.proj[d]);
            covered[d] += rec.covered[d] ? 1 : 0;
        }
    }
    for (std::size_t d = 0; d < dirs.size(); ++d) {
        auto& s = rep.directions[d];
        s.direction = dirs[d];
        s.target_variance = inner_product(apply(model.gamma_eps(), dirs[d]), dirs[d]);
        if (rep.replications < 2) continue;
        s.mean = stats::mean(s.samples);
        s.empirical_variance = stats::variance(s.samples);
        s.variance_ratio = s.empirical_variance / s.target_variance;
        s.kurtosis = stats::kurtosis(s.samples);
        const auto ks = stats::ks_normal(s.samples, s.mean, std::sqrt(s.empirical_variance));
        s.ks_statistic = ks.statistic;
        s.ks_p_value = ks.p_value;
        s.coverage = static_cast<double>(covered[d]) / static_cast<double>(rep.replications);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Covariance identity
// ---------------------------------------------------------------------------

/// ‖Γ − ρΓρ* − Γ_ε‖₂ of a model.
inline double verify_covariance_identity(const FarModel& model) {
    return covariance_identity_residual(model.gamma(), model.rho(), model.gamma_eps());
}

// ---------------------------------------------------------------------------
// Eigenvalue lemmas
// ---------------------------------------------------------------------------

struct LemmaViolation {
    std::string claim;
    std::size_t j = 0;
    std::size_t k = 0;
    double lhs = 0.0;
    double rhs = 0.0;
};

/**
 * Exhaustive check, for j_min ≤ j < k ≤ j_max, of
 *   hazard:  j·λ_j ≥ k·λ_k
 *   gap:     λ_j − λ_k ≥ (1 − j/k)·λ_j
 *   tail:    Σ_{i≥k} λ_i ≤ (k+1)·λ_k     (for j_min ≤ k ≤ j_max)
 * and the monitored ratio Σ_{l≠j} λ_l/|λ_l − λ_j| / (j·log j).
 *
 * The tail sum runs to D and adds the profile's remainder bound for
 * Σ_{i>D} λ_i when one is known, so a pass is conservative.
 */
struct EigenLemmaReport {
    std::size_t j_min = 2;
    std::size_t j_max = 0;
    std::size_t dim = 0;
    double tail_remainder = 0.0;
    bool remainder_known = false;
    std::size_t pairs_checked = 0;
    std::map<std::string, std::size_t> violation_counts;
    std::vector<LemmaViolation> first_violations; ///< up to 20 per claim
    /// Smallest j₀ ≥ j_min such that each claim holds for every index ≥ j₀
    /// in the window; j_max + 1 if none.
    std::map<std::string, std::size_t> onset;
    std::vector<std::size_t> spacing_sum_j;
    std::vector<double> spacing_sum_ratio;
    double spacing_sum_sup = 0.0;

    bool inequalities_hold() const {
        for (const auto& [claim, count] : violation_counts)
            if (count > 0) return false;
        return true;
    }
};

inline EigenLemmaReport verify_eigen_lemmas(std::span<const double> lambda, std::size_t j_max,
                                            double tail_remainder, std::size_t j_min = 2) {
    const std::size_t d = lambda.size();
    if (j_max > d) throw invalid_argument("verify_eigen_lemmas: j_max exceeds the profile dimension");
    if (j_min < 1 || j_min >= j_max) throw invalid_argument("verify_eigen_lemmas: need 1 <= j_min < j_max");
    if (convexity_margin(lambda) < -convexity_tolerance(lambda))
        throw invalid_argument("verify_eigen_lemmas: profile is not convex");

    EigenLemmaReport r;
    r.j_min = j_min;
    r.j_max = j_max;
    r.dim = d;
    r.remainder_known = std::isfinite(tail_remainder);
    r.tail_remainder = r.remainder_known ? tail_remainder : 0.0;
    auto lam = [&](std::size_t j) { return lambda[j - 1]; }; // 1-based
    const double tol = 1e-12;

    std::map<std::string, std::size_t> last_bad;
    auto record = [&](const char* claim, std::size_t j, std::size_t k, double lhs, double rhs) {
        auto& count = r.violation_counts[claim];
        if (count++ < 20) r.first_violations.push_back({claim, j, k, lhs, rhs});
        last_bad[claim] = std::max(last_bad[claim], j);
    };
    r.violation_counts["hazard"] = 0;
    r.violation_counts["gap"] = 0;
    r.violation_counts["tail"] = 0;

    for (std::size_t j = j_min; j <= j_max; ++j) {
        for (std::size_t k = j + 1; k <= j_max; ++k) {
            ++r.pairs_checked;
            const double jl = static_cast<double>(j) * lam(j);
            const double kl = static_cast<double>(k) * lam(k);
            if (jl < kl * (1.0 - tol)) record("hazard", j, k, jl, kl);
            const double gap = lam(j) - lam(k);
            const double bound = (1.0 - static_cast<double>(j) / static_cast<double>(k)) * lam(j);
            if (gap < bound - tol * lam(j)) record("gap", j, k, gap, bound);
        }
    }
    // Suffix sums Σ_{i=k}^{D} λ_i.
    std::vector<double> suffix(d + 2, 0.0);
    for (std::size_t i = d; i >= 1; --i) suffix[i] = suffix[i + 1] + lam(i);
    for (std::size_t k = j_min; k <= j_max; ++k) {
        const double tail = suffix[k] + r.tail_remainder;
        const double bound = static_cast<double>(k + 1) * lam(k);
        if (tail > bound * (1.0 + tol)) record("tail", k, k, tail, bound);
    }
    for (const auto& [claim, count] : r.violation_counts)
        r.onset[claim] = count == 0 ? j_min : last_bad[claim] + 1;

    for (std::size_t j = 2; j <= j_max; ++j) {
        double s = 0.0;
        for (std::size_t l = 1; l <= d; ++l)
            if (l != j) s += lam(l) / std::abs(lam(l) - lam(j));
        const double ratio = s / (static_cast<double>(j) * std::log(static_cast<double>(j)));
        r.spacing_sum_j.push_back(j);
        r.spacing_sum_ratio.push_back(ratio);
        r.spacing_sum_sup = std::max(r.spacing_sum_sup, ratio);
    }
    return r;
}

inline EigenLemmaReport verify_eigen_lemmas(const EigenProfile& profile, std::size_t j_max,
                                            std::size_t j_min = 2) {
    const auto lambda = eigen_profile(profile);
    return verify_eigen_lemmas(lambda, j_max, tail_remainder_bound(profile, profile.dim), j_min);
}

// ---------------------------------------------------------------------------
// Moment bounds on Γₙ − Γ and Sₙ
// ---------------------------------------------------------------------------

struct RaCell {
    std::size_t p = 0; ///< 1-based
    std::size_t m = 0; ///< 1-based
    double gamma_ratio = 0.0; ///< n·E⟨(Γₙ−Γ)e_p, e_m⟩² / (λ_pλ_m)
    double gamma_se = 0.0;
    double s_ratio = 0.0;     ///< n·E⟨Sₙe_p, e_m⟩² / (λ_pλ_m)
    double s_se = 0.0;
    double s_exact = 0.0;     ///< ⟨Γ_ε e_m, e_m⟩ / λ_m
};

struct RaLevel {
    std::size_t n = 0;
    std::vector<RaCell> cells; ///< row-major over (p, m)
};

/**
 * Monte Carlo estimates of the two normalized second moments, with
 * Sₙ = (1/n) Σ_{k≤n} X_{k−1}⊗ε_k and Γₙ built from X₁..Xₙ.
 */
struct RaReport {
    std::size_t p_max = 0;
    std::size_t reps = 0;
    std::uint64_t seed = 0;
    std::vector<RaLevel> levels;

    /// Every Sₙ ratio ≤ 1 + 3 standard errors.
    bool s_bounded() const {
        for (const auto& l : levels)
            for (const auto& c : l.cells)
                if (c.s_ratio > 1.0 + 3.0 * c.s_se) return false;
        return true;
    }

    /// max |Sₙ ratio − exact value| / SE over all cells.
    double s_max_z() const {
        double z = 0.0;
        for (const auto& l : levels)
            for (const auto& c : l.cells) z = std::max(z, std::abs(c.s_ratio - c.s_exact) / c.s_se);
        return z;
    }

    /// Per cell, max_n ratio ≤ 2·min_n ratio once both sides are moved by 3 SE
    /// in the favourable direction. `which` selects Γₙ (true) or Sₙ (false).
    bool stable_across_n(bool which_gamma) const {
        if (levels.empty()) return true;
        for (std::size_t c = 0; c < levels.front().cells.size(); ++c) {
            double hi = -std::numeric_limits<double>::infinity();
            double lo = std::numeric_limits<double>::infinity();
            for (const auto& l : levels) {
                const auto& cell = l.cells[c];
                const double v = which_gamma ? cell.gamma_ratio : cell.s_ratio;
                const double se = which_gamma ? cell.gamma_se : cell.s_se;
                hi = std::max(hi, v - 3.0 * se);
                lo = std::min(lo, v + 3.0 * se);
            }
            if (hi > 2.0 * lo) return false;
        }
        return true;
    }

    /// Largest max_n/min_n spread of the raw estimates over cells.
    double max_spread(bool which_gamma) const {
        double worst = 1.0;
        if (levels.empty()) return worst;
        for (std::size_t c = 0; c < levels.front().cells.size(); ++c) {
            double hi = 0.0, lo = std::numeric_limits<double>::infinity();
            for (const auto& l : levels) {
                const double v = which_gamma ? l.cells[c].gamma_ratio : l.cells[c].s_ratio;
                hi = std::max(hi, v);
                lo = std::min(lo, v);
            }
            worst = std::max(worst, hi / lo);
        }
        return worst;
    }
};

inline RaReport verify_ra_bounds(const FarModel& model, const std::vector<std::size_t>& n_list,
                                 std::size_t p_max, std::size_t reps, std::uint64_t seed,
                                 unsigned threads = 0) {
    if (p_max < 1 || p_max > model.dim()) throw invalid_argument("verify_ra_bounds: p_max out of range");
    if (reps < 2) throw invalid_argument("verify_ra_bounds: reps must be >= 2");
    for (std::size_t i = 1; i < n_list.size(); ++i)
        if (n_list[i] <= n_list[i - 1]) throw invalid_argument("verify_ra_bounds: n_list must increase");

    RaReport rep;
    rep.p_max = p_max;
    rep.reps = reps;
    rep.seed = seed;
    const auto& dec = model.gamma_decomp();
    const std::size_t cells = p_max * p_max;

    for (std::size_t level = 0; level < n_list.size(); ++level) {
        const std::size_t n = n_list[level];
        auto one = [&](std::size_t r) {
            const auto tr = simulate_trajectory(model, n, 0, seed, level * reps + r);
            std::vector<double> g(cells, 0.0), s(cells, 0.0);
            std::vector<double> cx(p_max), cprev(p_max), ce(p_max);
            for (std::size_t p = 0; p < p_max; ++p) cprev[p] = inner_product(tr.states[0], dec.eigenvector(p));
            for (std::size_t k = 1; k <= n; ++k) {
                for (std::size_t p = 0; p < p_max; ++p) {
                    cx[p] = inner_product(tr.states[k], dec.eigenvector(p));
                    ce[p] = inner_product(tr.innovations[k - 1], dec.eigenvector(p));
                }
                for (std::size_t p = 0; p < p_max; ++p)
                    for (std::size_t m = 0; m < p_max; ++m) {
                        g[p * p_max + m] += cx[p] * cx[m];
                        s[p * p_max + m] += cprev[p] * ce[m];
                    }
                std::swap(cx, cprev);
            }
            const double nn = static_cast<double>(n);
            std::vector<double> out(2 * cells);
            for (std::size_t p = 0; p < p_max; ++p)
                for (std::size_t m = 0; m < p_max; ++m) {
                    const std::size_t c = p * p_max + m;
                    const double denom = dec.eigenvalue(p) * dec.eigenvalue(m);
                    const double gd = g[c] / nn - (p == m ? dec.eigenvalue(p) : 0.0);
                    const double sd = s[c] / nn;
                    out[c] = nn * gd * gd / denom;
                    out[cells + c] = nn * sd * sd / denom;
                }
            return out;
        };
        const auto records = run_replications(reps, threads, one);

        RaLevel lv;
        lv.n = n;
        std::vector<double> col(reps);
        for (std::size_t p = 0; p < p_max; ++p)
            for (std::size_t m = 0; m < p_max; ++m) {
                const std::size_t c = p * p_max + m;
                RaCell cell;
                cell.p = p + 1;
                cell.m = m + 1;
                for (std::size_t r = 0; r < reps; ++r) col[r] = records[r][c];
                cell.gamma_ratio = stats::mean(col);
                cell.gamma_se = stats::standard_error(col);
                for (std::size_t r = 0; r < reps; ++r) col[r] = records[r][cells + c];
                cell.s_ratio = stats::mean(col);
                cell.s_se = stats::standard_error(col);
                const auto& em = dec.eigenvector(m);
                cell.s_exact = inner_product(apply(model.gamma_eps(), em), em) / dec.eigenvalue(m);
                lv.cells.push_back(cell);
            }
        rep.levels.push_back(std::move(lv));
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Divergent variance of a linear functional of Sₙ Γ†
// ---------------------------------------------------------------------------

struct Th1Point {
    std::size_t k = 0;
    double divergent_variance = 0.0;  ///< σ²·‖(Γ†)^{1/2}v‖² with ⟨v,e_i⟩ = √λ_i
    double convergent_variance = 0.0; ///< same with v = e₁
};

struct Th1Report {
    double sigma2 = 0.0; ///< ⟨Γ_ε u, u⟩
    std::vector<Th1Point> points;
};

/// σ²_{ε,u}·‖(Γ†)^{1/2}v‖² for each cutoff k, u = e₁ unless given.
inline Th1Report demonstrate_th1(const FarModel& model, const std::vector<std::size_t>& k_list,
                                 std::optional<CoeffVector> u = std::nullopt) {
    const auto& dec = model.gamma_decomp();
    const CoeffVector dir = u ? *u : dec.eigenvector(0);
    Th1Report rep;
    rep.sigma2 = inner_product(apply(model.gamma_eps(), dir), dir);

    std::vector<double> xi(dec.dim(), 1.0);
    const CoeffVector v_div = kl_sample(dec, xi); // coordinates √λ_i
    const CoeffVector& v_conv = dec.eigenvector(0);
    for (std::size_t k : k_list) {
        const LinearOp root = psd_pinv_sqrt(dec, k);
        const double a = apply(root, v_div).norm();
        const double b = apply(root, v_conv).norm();
        rep.points.push_back({k, rep.sigma2 * a * a, rep.sigma2 * b * b});
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Martingale-difference array Z⁺_{k,n}
// ---------------------------------------------------------------------------

struct MdaOptions {
    std::size_t n = 20;
    std::size_t reps = 2000;
    std::optional<std::size_t> k; ///< cutoff kₙ; default from the rule with `c`
    double c = 1.0;
    std::vector<std::size_t> indices; ///< time indices k; default {1, n/2, n}
    std::size_t cross_k = 1;
    std::size_t cross_i = 2;
    std::uint64_t seed = 0;
    unsigned threads = 0;
};

struct MdaTerm {
    std::size_t k = 0;
    LinearOp mc_mean;     ///< MC average of Z⁺_{k,n}⊗Z⁺_{k,n}
    LinearOp mc_se;       ///< entrywise standard errors
    LinearOp closed_form; ///< Γ_ε·(kₙ − tr(Γ†ρ^{n−k+1}Γ(ρ*)^{n−k+1}))
    double trace_term = 0.0;
    double max_z = 0.0;   ///< over the upper triangle
};

struct MdaReport {
    std::size_t n = 0;
    std::size_t k_n = 0;
    std::size_t reps = 0;
    std::vector<MdaTerm> terms;
    std::size_t cross_k = 0;
    std::size_t cross_i = 0;
    LinearOp cross_mean; ///< MC average of Z⁺_{k,n}⊗Z⁺_{i,n}
    LinearOp cross_se;
    double cross_max_z = 0.0;
    double quadratic_sum_mc = 0.0;    ///< Σ_k E⟨Γ†X_{k−1}, X♯_{k,n}⟩² / (n·kₙ), Monte Carlo
    double quadratic_sum_se = 0.0;
    double quadratic_sum_exact = 0.0; ///< same from the closed form

    bool within(double z_limit) const {
        for (const auto& t : terms)
            if (t.max_z > z_limit) return false;
        return cross_max_z <= z_limit;
    }
};

/// tr(Γ†ρ^pΓ(ρ*)^p) with Γ† the cutoff inverse of the true Γ.
inline double mda_trace_term(const FarModel& model, const LinearOp& gdag, std::size_t p) {
    const LinearOp rp = power(model.rho(), p);
    return compose(gdag, compose(rp, compose(model.gamma(), adjoint(rp)))).trace();
}

/**
 * Z⁺_{k,n} = ⟨Γ†X_{k−1}, X♯_{k,n}⟩ε_k with
 * X♯_{k,n} = ε_{n+1} + ρ(ε_n) + … + ρ^{n−k}(ε_{k+1}) and Γ† the cutoff
 * inverse of the true Γ at kₙ.
 */
inline MdaReport verify_mda_covariance(const FarModel& model, const MdaOptions& opt) {
    const std::size_t n = opt.n;
    const std::size_t d = model.dim();
    if (n < 2) throw invalid_argument("verify_mda_covariance: n must be >= 2");
    if (opt.reps < 2) throw invalid_argument("verify_mda_covariance: reps must be >= 2");
    std::vector<std::size_t> idx = opt.indices;
    if (idx.empty()) idx = {1, std::max<std::size_t>(1, n / 2), n};
    for (std::size_t k : idx)
        if (k < 1 || k > n) throw invalid_argument("verify_mda_covariance: index outside [1, n]");
    if (!(opt.cross_k < opt.cross_i) || opt.cross_i > n || opt.cross_k < 1)
        throw invalid_argument("verify_mda_covariance: need 1 <= cross_k < cross_i <= n");

    MdaReport rep;
    rep.n = n;
    rep.reps = opt.reps;
    rep.k_n = opt.k ? *opt.k : kn_rule(n, opt.c, d);
    rep.cross_k = opt.cross_k;
    rep.cross_i = opt.cross_i;
    const LinearOp gdag = gamma_dag(model.gamma_decomp(), rep.k_n);

    std::vector<LinearOp> powers{LinearOp::identity(d)};
    for (std::size_t j = 1; j <= n; ++j) {
        powers.push_back(compose(model.rho(), powers.back()));
        for (double x : powers.back().entries())
            if (!std::isfinite(x)) throw error("verify_mda_covariance: ρ power overflow");
    }

    struct Record {
        std::vector<double> zz; ///< |idx| blocks of D² entries
        std::vector<double> cross;
        double quadratic_sum = 0.0;
    };

    auto one = [&](std::size_t r) {
        const auto tr = simulate_trajectory(model, n + 1, 0, opt.seed, r);
        // states[t] = X_t (t = 0..n+1), innovations[t−1] = ε_t (t = 1..n+1)
        auto eps = [&](std::size_t t) -> const CoeffVector& { return tr.innovations[t - 1]; };
        std::vector<double> a(n + 1, 0.0); // a[k] = ⟨Γ†X_{k−1}, X♯_{k,n}⟩
        CoeffVector sharp = eps(n + 1);
        for (std::size_t k = n; k >= 1; --k) {
            if (k < n) sharp += apply(powers[n - k], eps(k + 1));
            a[k] = inner_product(apply(gdag, tr.states[k - 1]), sharp);
        }
        Record rec;
        rec.zz.reserve(idx.size() * d * d);
        for (std::size_t k : idx) {
            const auto& e = eps(k);
            for (std::size_t i = 0; i < d; ++i)
                for (std::size_t j = 0; j < d; ++j) rec.zz.push_back(a[k] * a[k] * e[i] * e[j]);
        }
        // (Z_k ⊗ Z_i) as a matrix is Z_i·Z_kᵀ.
        const CoeffVector zk = a[opt.cross_k] * eps(opt.cross_k);
        const CoeffVector zi = a[opt.cross_i] * eps(opt.cross_i);
        rec.cross.reserve(d * d);
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) rec.cross.push_back(zi[i] * zk[j]);
        for (std::size_t k = 1; k <= n; ++k) rec.quadratic_sum += a[k] * a[k];
        return rec;
    };
    const auto records = run_replications(opt.reps, opt.threads, one);

    auto reduce = [&](auto&& get, std::size_t offset, LinearOp& mean_out, LinearOp& se_out) {
        std::vector<double> col(records.size());
        mean_out = LinearOp(d);
        se_out = LinearOp(d);
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) {
                for (std::size_t r = 0; r < records.size(); ++r) col[r] = get(records[r])[offset + i * d + j];
                mean_out(i, j) = stats::mean(col);
                se_out(i, j) = stats::standard_error(col);
            }
        mean_out.recertify();
        se_out.recertify();
    };
    auto zscore = [](double diff, double se) {
        if (se > 0.0) return std::abs(diff) / se;
        return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    };

    for (std::size_t t = 0; t < idx.size(); ++t) {
        MdaTerm term;
        term.k = idx[t];
        reduce([](const Record& r) -> const std::vector<double>& { return r.zz; }, t * d * d,
               term.mc_mean, term.mc_se);
        term.trace_term = mda_trace_term(model, gdag, n - term.k + 1);
        term.closed_form = (static_cast<double>(rep.k_n) - term.trace_term) * model.gamma_eps();
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = i; j < d; ++j)
                term.max_z = std::max(term.max_z, zscore(term.mc_mean(i, j) - term.closed_form(i, j),
                                                         term.mc_se(i, j)));
        rep.terms.push_back(std::move(term));
    }
    reduce([](const Record& r) -> const std::vector<double>& { return r.cross; }, 0, rep.cross_mean,
           rep.cross_se);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            rep.cross_max_z = std::max(rep.cross_max_z, zscore(rep.cross_mean(i, j), rep.cross_se(i, j)));

    std::vector<double> nic(records.size());
    const double norm = static_cast<double>(n) * static_cast<double>(rep.k_n);
    for (std::size_t r = 0; r < records.size(); ++r) nic[r] = records[r].quadratic_sum / norm;
    rep.quadratic_sum_mc = stats::mean(nic);
    rep.quadratic_sum_se = stats::standard_error(nic);
    double exact = 0.0;
    for (std::size_t k = 1; k <= n; ++k)
        exact += static_cast<double>(rep.k_n) - mda_trace_term(model, gdag, n - k + 1);
    rep.quadratic_sum_exact = exact / norm;
    return rep;
}

// ---------------------------------------------------------------------------
// Consistency of ρ̂ₙ on the estimated principal subspace
// ---------------------------------------------------------------------------

struct ConsistencyPoint {
    std::size_t n = 0;
    std::size_t k_n = 0;
    double median_error = 0.0;  ///< median over seeds of ‖ρ̂ₙΠ̂ − ρΠ̂‖_∞
    std::vector<double> errors;
};

inline std::vector<ConsistencyPoint> consistency_trend(const FarModel& model,
                                                       const std::vector<std::size_t>& n_list,
                                                       std::size_t seeds, std::uint64_t master_seed,
                                                       const FitOptions& fopt = {},
                                                       unsigned threads = 0) {
    std::vector<ConsistencyPoint> out;
    for (std::size_t level = 0; level < n_list.size(); ++level) {
        const std::size_t n = n_list[level];
        auto one = [&](std::size_t r) {
            const Path p = simulate_far(model, n, 0, master_seed, level * seeds + r);
            const Fit f = fit(p, fopt);
            const LinearOp diff = compose(f.rho_hat, f.pi_hat) - compose(model.rho(), f.pi_hat);
            return std::pair{f.k_n, op_norms(diff).sup};
        };
        const auto rec = run_replications(seeds, threads, one);
        ConsistencyPoint pt;
        pt.n = n;
        for (const auto& [k, e] : rec) {
            pt.k_n = k;
            pt.errors.push_back(e);
        }
        pt.median_error = stats::median(pt.errors);
        out.push_back(std::move(pt));
    }
    return out;
}

} // namespace farlab

#endif // FARLAB_LAB_HPP
