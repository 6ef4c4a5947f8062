#ifndef FARLAB_SIMULATE_HPP
#define FARLAB_SIMULATE_HPP

/** @file
 * Karhunen–Loève sampling and stationary FAR(1) path generation.
 */

#include <cmath>
#include <cstdint>
#include <iterator>
#include <span>
#include <vector>

#include "farlab/error.hpp"
#include "farlab/hilbert.hpp"
#include "farlab/model.hpp"
#include "farlab/random.hpp"

namespace farlab {

/// Σ_k √λ_k ξ_k e_k for given scores ξ.
inline CoeffVector kl_sample(const SpectralDecomp& dec, std::span<const double> xi) {
    if (xi.size() != dec.dim()) throw dimension_mismatch(dec.dim(), xi.size());
    const std::size_t d = dec.dim();
    CoeffVector x(d);
    for (std::size_t k = 0; k < d; ++k) {
        const double lam = dec.eigenvalue(k);
        if (lam <= 0.0 || xi[k] == 0.0) continue;
        const double w = std::sqrt(lam) * xi[k];
        const auto& e = dec.eigenvector(k);
        for (std::size_t i = 0; i < d; ++i) x[i] += w * e[i];
    }
    return x;
}

/// Σ_k √λ_k ξ_k e_k with ξ_k drawn i.i.d. from `sampler`.
inline CoeffVector kl_sample(const SpectralDecomp& dec, XiSampler& sampler, Engine& g) {
    std::vector<double> xi(dec.dim());
    for (double& z : xi) z = sampler(g);
    return kl_sample(dec, xi);
}

inline CoeffVector kl_sample(const SpectralDecomp& dec, XiLaw law, Engine& g) {
    XiSampler sampler(law);
    return kl_sample(dec, sampler, g);
}

/// Runs X_t = ρ(X_{t−1}) + ε_t from x0 with given innovations; returns X_1..X_T.
inline std::vector<CoeffVector> propagate(const LinearOp& rho, CoeffVector x0,
                                          std::span<const CoeffVector> innovations) {
    std::vector<CoeffVector> out;
    out.reserve(innovations.size());
    CoeffVector x = std::move(x0);
    for (const auto& eps : innovations) {
        x = apply(rho, x) + eps;
        out.push_back(x);
    }
    return out;
}

/// Observations X₁..X_n of one simulated path.
struct Path {
    std::vector<CoeffVector> observations;
    std::uint64_t model_hash = 0;
    std::uint64_t seed = 0;
    std::uint64_t replication = 0;
    std::size_t burn_in = 0;

    std::size_t size() const noexcept { return observations.size(); }
    std::size_t dim() const noexcept { return observations.empty() ? 0 : observations.front().dim(); }
};

/// A path together with everything that generated it: X₀..X_n and ε₁..ε_n
/// (innovations[t−1] = ε_t). Used by the verification lab.
struct Trajectory {
    std::vector<CoeffVector> states;
    std::vector<CoeffVector> innovations;
};

/**
 * Simulates n steps after `burn_in` discarded ones.
 *
 * The start is drawn from the stationary law KL(Γ) on the
 * (master, replication, initial_state) stream; ε_t for the t-th recursion
 * step (burn-in steps included, t ≥ 1) comes from its own
 * (master, replication, innovation, t) stream, never touched by anything
 * that produced X_{t−1}.
 */
inline Trajectory simulate_trajectory(const FarModel& model, std::size_t n, std::size_t burn_in,
                                      std::uint64_t master_seed, std::uint64_t replication = 0) {
    Trajectory tr;
    tr.states.reserve(n + 1);
    tr.innovations.reserve(n);

    auto g0 = make_stream(master_seed, replication, StreamRole::initial_state, 0);
    CoeffVector x = kl_sample(model.gamma_decomp(), model.xi_law(), g0);
    XiSampler sampler(model.xi_law());

    auto innovation = [&](std::size_t t) {
        auto g = make_stream(master_seed, replication, StreamRole::innovation, t);
        sampler = XiSampler(model.xi_law());
        return kl_sample(model.gamma_eps_decomp(), sampler, g);
    };

    for (std::size_t t = 1; t <= burn_in; ++t) x = apply(model.rho(), x) + innovation(t);
    tr.states.push_back(x);
    for (std::size_t t = 1; t <= n; ++t) {
        CoeffVector eps = innovation(burn_in + t);
        x = apply(model.rho(), x) + eps;
        tr.states.push_back(x);
        tr.innovations.push_back(std::move(eps));
    }
    return tr;
}

/// Stationary path X₁..X_n; deterministic given (model, n, burn_in, seed, replication).
inline Path simulate_far(const FarModel& model, std::size_t n, std::size_t burn_in,
                         std::uint64_t master_seed, std::uint64_t replication = 0) {
    if (n < 2) throw invalid_argument("simulate_far: n must be >= 2");
    auto tr = simulate_trajectory(model, n, burn_in, master_seed, replication);
    Path p;
    p.observations.assign(std::make_move_iterator(tr.states.begin() + 1),
                          std::make_move_iterator(tr.states.end()));
    p.model_hash = model.hash();
    p.seed = master_seed;
    p.replication = replication;
    p.burn_in = burn_in;
    return p;
}

} // namespace farlab

#endif // FARLAB_SIMULATE_HPP
