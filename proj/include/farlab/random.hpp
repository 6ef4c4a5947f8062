#ifndef FARLAB_RANDOM_HPP
#define FARLAB_RANDOM_HPP

/** @file
 * Seeded random streams and the standardized score laws of the
 * Karhunen–Loève expansion.
 *
 * Every draw in the library comes from a stream keyed by
 * (master seed, replication, role, index). The key is folded through
 * splitmix64 into a 64-bit seed for std::mt19937_64, so two streams with
 * different keys never share state and results do not depend on the order
 * in which replications run.
 */

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <string_view>

#include "farlab/error.hpp"

namespace farlab {

enum class StreamRole : std::uint64_t {
    initial_state = 1, ///< X₀ drawn from the stationary law
    innovation = 2,    ///< ε_t, one stream per time index t
    auxiliary = 3,     ///< anything else a caller needs
};

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed of the substream (master, replication, role, index).
inline constexpr std::uint64_t substream_seed(std::uint64_t master, std::uint64_t replication,
                                              StreamRole role, std::uint64_t index) noexcept {
    std::uint64_t h = splitmix64(master);
    h = splitmix64(h ^ replication);
    h = splitmix64(h ^ static_cast<std::uint64_t>(role));
    return splitmix64(h ^ index);
}

using Engine = std::mt19937_64;

inline Engine make_stream(std::uint64_t master, std::uint64_t replication, StreamRole role,
                          std::uint64_t index = 0) {
    return Engine(substream_seed(master, replication, role, index));
}

/// Law of the standardized KL scores ξ_k (mean 0, variance 1).
enum class XiLaw {
    gaussian,              ///< N(0, 1)
    uniform,               ///< U[−√3, √3]
    two_sided_exponential, ///< Laplace with scale 1/√2
    pareto,                ///< symmetric Pareto, shape 3; infinite fourth moment
};

inline double xi_fourth_moment(XiLaw law) noexcept {
    switch (law) {
    case XiLaw::gaussian: return 3.0;
    case XiLaw::uniform: return 9.0 / 5.0;
    case XiLaw::two_sided_exponential: return 6.0;
    case XiLaw::pareto: return std::numeric_limits<double>::infinity();
    }
    return std::numeric_limits<double>::quiet_NaN();
}

inline std::string_view to_string(XiLaw law) noexcept {
    switch (law) {
    case XiLaw::gaussian: return "gaussian";
    case XiLaw::uniform: return "uniform";
    case XiLaw::two_sided_exponential: return "two_sided_exponential";
    case XiLaw::pareto: return "pareto";
    }
    return "?";
}

inline XiLaw xi_law_from_string(std::string_view s) {
    if (s == "gaussian") return XiLaw::gaussian;
    if (s == "uniform") return XiLaw::uniform;
    if (s == "two_sided_exponential") return XiLaw::two_sided_exponential;
    if (s == "pareto") return XiLaw::pareto;
    throw schema_error("xi_law", "unknown law '" + std::string(s) +
                                     "' (expected gaussian, uniform, two_sided_exponential, pareto)");
}

/// Draws standardized scores from one law. Holds the distribution state, so
/// keep one sampler per stream.
class XiSampler {
public:
    explicit XiSampler(XiLaw law) : law_(law) {}

    double operator()(Engine& g) {
        switch (law_) {
        case XiLaw::gaussian:
            return normal_(g);
        case XiLaw::uniform:
            return uniform_(g);
        case XiLaw::two_sided_exponential: {
            // Laplace(b) has variance 2b²; b = 1/√2.
            const double mag = expo_(g) / std::sqrt(2.0);
            return sign_(g) ? mag : -mag;
        }
        case XiLaw::pareto: {
            // x_m·U^{−1/3} has E X² = 3x_m²; x_m = 1/√3 standardizes it.
            const double u = 1.0 - unit_(g); // (0, 1]
            const double mag = std::pow(u, -1.0 / 3.0) / std::sqrt(3.0);
            return sign_(g) ? mag : -mag;
        }
        }
        return 0.0;
    }

    XiLaw law() const noexcept { return law_; }

private:
    XiLaw law_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{-std::sqrt(3.0), std::sqrt(3.0)};
    std::exponential_distribution<double> expo_{1.0};
    std::uniform_real_distribution<double> unit_{0.0, 1.0};
    std::bernoulli_distribution sign_{0.5};
};

} // namespace farlab

#endif // FARLAB_RANDOM_HPP
