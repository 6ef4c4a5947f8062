#ifndef FARLAB_HILBERT_HPP
#define FARLAB_HILBERT_HPP

/** @file
 * Finite-dimensional truncation of a separable Hilbert space.
 *
 * Vectors are coefficient lists in a fixed orthonormal reference basis, so
 * every inner product is Euclidean. Operators are dense D×D matrices in the
 * same basis. The tensor product follows the convention
 * (u⊗v)(h) = ⟨u,h⟩v, i.e. the matrix of u⊗v is v·uᵀ.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "farlab/error.hpp"

namespace farlab {

/// Tolerance used to certify symmetry of an operator.
inline constexpr double symmetry_tolerance = 1e-12;
/// Eigenvalues above −psd_tolerance are accepted (and clamped) as nonnegative.
inline constexpr double psd_tolerance = 1e-10;
/// Spectral cutoffs refuse λ_l < pivot_ratio · λ₁.
inline constexpr double pivot_ratio = 1e-12;
/// Relative width below which neighbouring eigenvalues form a degenerate cluster.
inline constexpr double degeneracy_ratio = 1e-10;

class CoeffVector {
public:
    CoeffVector() = default;

    explicit CoeffVector(std::size_t dim) : c_(dim, 0.0) {}

    explicit CoeffVector(std::vector<double> coeffs) : c_(std::move(coeffs)) {
        for (double x : c_)
            if (!std::isfinite(x))
                throw invalid_argument("CoeffVector: non-finite coefficient");
    }

    CoeffVector(std::initializer_list<double> coeffs)
        : CoeffVector(std::vector<double>(coeffs)) {}

    /// The i-th reference basis vector (0-based).
    static CoeffVector basis(std::size_t dim, std::size_t i) {
        if (i >= dim)
            throw invalid_argument("CoeffVector::basis: index out of range");
        CoeffVector e(dim);
        e.c_[i] = 1.0;
        return e;
    }

    std::size_t dim() const noexcept { return c_.size(); }
    double operator[](std::size_t i) const { return c_[i]; }
    double& operator[](std::size_t i) { return c_[i]; }
    std::span<const double> coeffs() const noexcept { return c_; }
    std::span<double> coeffs() noexcept { return c_; }
    const std::vector<double>& values() const noexcept { return c_; }

    double norm() const {
        double s = 0.0;
        for (double x : c_) s += x * x;
        return std::sqrt(s);
    }

    CoeffVector& operator+=(const CoeffVector& o) {
        check(o);
        for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
        return *this;
    }
    CoeffVector& operator-=(const CoeffVector& o) {
        check(o);
        for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
        return *this;
    }
    CoeffVector& operator*=(double a) {
        for (double& x : c_) x *= a;
        return *this;
    }

    friend CoeffVector operator+(CoeffVector a, const CoeffVector& b) { return a += b; }
    friend CoeffVector operator-(CoeffVector a, const CoeffVector& b) { return a -= b; }
    friend CoeffVector operator*(double s, CoeffVector a) { return a *= s; }
    friend CoeffVector operator*(CoeffVector a, double s) { return a *= s; }

    friend bool operator==(const CoeffVector&, const CoeffVector&) = default;

private:
    void check(const CoeffVector& o) const {
        if (o.dim() != dim()) throw dimension_mismatch(dim(), o.dim());
    }

    std::vector<double> c_;
};

/// Bounded operator on the truncated space, stored row-major.
class LinearOp {
public:
    LinearOp() = default;

    /// Zero operator of dimension `dim`.
    explicit LinearOp(std::size_t dim) : d_(dim), a_(dim * dim, 0.0), sym_(true) {}

    /// Takes a row-major D×D block. The symmetry flag is certified, not trusted.
    LinearOp(std::size_t dim, std::vector<double> row_major)
        : d_(dim), a_(std::move(row_major)) {
        if (a_.size() != d_ * d_) throw dimension_mismatch(d_ * d_, a_.size());
        for (double x : a_)
            if (!std::isfinite(x))
                throw invalid_argument("LinearOp: non-finite entry");
        sym_ = check_symmetric();
    }

    static LinearOp identity(std::size_t dim) {
        LinearOp t(dim);
        for (std::size_t i = 0; i < dim; ++i) t(i, i) = 1.0;
        return t;
    }

    static LinearOp diagonal(std::span<const double> diag) {
        LinearOp t(diag.size());
        for (std::size_t i = 0; i < diag.size(); ++i) t(i, i) = diag[i];
        return t;
    }

    std::size_t dim() const noexcept { return d_; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * d_ + j]; }
    double& operator()(std::size_t i, std::size_t j) { return a_[i * d_ + j]; }
    std::span<const double> entries() const noexcept { return a_; }

    /// Symmetry flag as certified at construction or by symmetrized().
    bool is_symmetric() const noexcept { return sym_; }

    /// Re-certifies the flag after in-place edits through operator().
    LinearOp& recertify() {
        sym_ = check_symmetric();
        return *this;
    }

    /// (T + Tᵀ)/2, flagged symmetric.
    LinearOp symmetrized() const {
        LinearOp s(d_);
        for (std::size_t i = 0; i < d_; ++i)
            for (std::size_t j = 0; j < d_; ++j)
                s(i, j) = 0.5 * ((*this)(i, j) + (*this)(j, i));
        s.sym_ = true;
        return s;
    }

    double trace() const {
        double t = 0.0;
        for (std::size_t i = 0; i < d_; ++i) t += (*this)(i, i);
        return t;
    }

    LinearOp& operator+=(const LinearOp& o) {
        check(o);
        for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
        sym_ = check_symmetric();
        return *this;
    }
    LinearOp& operator-=(const LinearOp& o) {
        check(o);
        for (std::size_t i = 0; i < a_.size(); ++i) a_[i] -= o.a_[i];
        sym_ = check_symmetric();
        return *this;
    }
    LinearOp& operator*=(double s) {
        for (double& x : a_) x *= s;
        return *this;
    }

    friend LinearOp operator+(LinearOp a, const LinearOp& b) { return a += b; }
    friend LinearOp operator-(LinearOp a, const LinearOp& b) { return a -= b; }
    friend LinearOp operator*(double s, LinearOp a) { return a *= s; }

private:
    void check(const LinearOp& o) const {
        if (o.d_ != d_) throw dimension_mismatch(d_, o.d_);
    }

    bool check_symmetric() const {
        for (std::size_t i = 0; i < d_; ++i)
            for (std::size_t j = i + 1; j < d_; ++j)
                if (std::abs((*this)(i, j) - (*this)(j, i)) > symmetry_tolerance)
                    return false;
        return true;
    }

    std::size_t d_ = 0;
    std::vector<double> a_;
    bool sym_ = true;
};

// ---------------------------------------------------------------------------
// Vector and operator algebra
// ---------------------------------------------------------------------------

inline double inner_product(const CoeffVector& u, const CoeffVector& v) {
    if (u.dim() != v.dim()) throw dimension_mismatch(u.dim(), v.dim());
    double s = 0.0;
    for (std::size_t i = 0; i < u.dim(); ++i) s += u[i] * v[i];
    return s;
}

/// u⊗v : h ↦ ⟨u,h⟩v.
inline LinearOp tensor_product(const CoeffVector& u, const CoeffVector& v) {
    if (u.dim() != v.dim()) throw dimension_mismatch(u.dim(), v.dim());
    const std::size_t d = u.dim();
    std::vector<double> m(d * d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) m[i * d + j] = v[i] * u[j];
    return LinearOp(d, std::move(m));
}

inline CoeffVector apply(const LinearOp& t, const CoeffVector& x) {
    if (t.dim() != x.dim()) throw dimension_mismatch(t.dim(), x.dim());
    const std::size_t d = t.dim();
    CoeffVector y(d);
    auto a = t.entries();
    for (std::size_t i = 0; i < d; ++i) {
        double s = 0.0;
        const double* row = a.data() + i * d;
        for (std::size_t j = 0; j < d; ++j) s += row[j] * x[j];
        y[i] = s;
    }
    return y;
}

/// S∘T, i.e. T is applied first.
inline LinearOp compose(const LinearOp& s, const LinearOp& t) {
    if (s.dim() != t.dim()) throw dimension_mismatch(s.dim(), t.dim());
    const std::size_t d = s.dim();
    std::vector<double> m(d * d, 0.0);
    auto a = s.entries();
    auto b = t.entries();
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t k = 0; k < d; ++k) {
            const double aik = a[i * d + k];
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < d; ++j) m[i * d + j] += aik * b[k * d + j];
        }
    return LinearOp(d, std::move(m));
}

inline LinearOp adjoint(const LinearOp& t) {
    const std::size_t d = t.dim();
    std::vector<double> m(d * d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) m[i * d + j] = t(j, i);
    return LinearOp(d, std::move(m));
}

/// Frobenius (Hilbert–Schmidt) norm of S − T.
inline double hs_distance(const LinearOp& s, const LinearOp& t) {
    if (s.dim() != t.dim()) throw dimension_mismatch(s.dim(), t.dim());
    auto a = s.entries();
    auto b = t.entries();
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(acc);
}

// ---------------------------------------------------------------------------
// Singular values and operator norms
// ---------------------------------------------------------------------------

/// Singular values, non-increasing, by one-sided (Hestenes) Jacobi.
inline std::vector<double> singular_values(const LinearOp& t) {
    const std::size_t d = t.dim();
    // Work on columns: col[j][i] = T(i, j).
    std::vector<double> w(d * d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) w[j * d + i] = t(i, j);

    const double eps = std::numeric_limits<double>::epsilon();
    for (int sweep = 0; sweep < 100; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < d; ++p) {
            for (std::size_t q = p + 1; q < d; ++q) {
                double* cp = w.data() + p * d;
                double* cq = w.data() + q * d;
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                for (std::size_t i = 0; i < d; ++i) {
                    alpha += cp[i] * cp[i];
                    beta += cq[i] * cq[i];
                    gamma += cp[i] * cq[i];
                }
                if (gamma == 0.0 || std::abs(gamma) <= eps * std::sqrt(alpha * beta))
                    continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double tt = std::copysign(1.0, zeta) /
                                  (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + tt * tt);
                const double s = c * tt;
                for (std::size_t i = 0; i < d; ++i) {
                    const double x = cp[i];
                    cp[i] = c * x - s * cq[i];
                    cq[i] = s * x + c * cq[i];
                }
            }
        }
        if (!rotated) break;
    }
    std::vector<double> sv(d);
    for (std::size_t j = 0; j < d; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < d; ++i) s += w[j * d + i] * w[j * d + i];
        sv[j] = std::sqrt(s);
    }
    std::sort(sv.begin(), sv.end(), std::greater<>());
    return sv;
}

struct OpNorms {
    double sup;   ///< largest singular value, ‖T‖_∞
    double hs;    ///< Hilbert–Schmidt, ‖T‖₂ = (Σ_p ‖T e_p‖²)^{1/2}
    double trace; ///< nuclear norm, ‖T‖₁ = Σ singular values
};

inline OpNorms op_norms(const LinearOp& t) {
    if (t.dim() == 0) return {0.0, 0.0, 0.0};
    const auto sv = singular_values(t);
    double hs2 = 0.0;
    for (double x : t.entries()) hs2 += x * x;
    return {sv.front(), std::sqrt(hs2), std::accumulate(sv.begin(), sv.end(), 0.0)};
}

// ---------------------------------------------------------------------------
// Symmetric eigendecomposition
// ---------------------------------------------------------------------------

/**
 * Ordered spectral decomposition Σ_l λ_l e_l⊗e_l of a symmetric operator.
 *
 * Eigenvalues are non-increasing. Each eigenvector is signed so that its
 * largest-magnitude coordinate is positive (lowest index wins ties).
 * gaps()[j] is the isolation radius min(λ_{j−1}−λ_j, λ_j−λ_{j+1}), one-sided
 * at both ends and +∞ in dimension one. cluster()[j] labels numerically
 * degenerate groups: equal labels mean the gap between neighbours fell below
 * degeneracy_ratio·|λ₁|.
 */
class SpectralDecomp {
public:
    SpectralDecomp() = default;

    /// Assembles a decomposition from known parts; checks ordering and
    /// orthonormality (Gram error ≤ 1e-10 Frobenius). Signs are normalized.
    SpectralDecomp(std::vector<double> eigenvalues, std::vector<CoeffVector> eigenvectors)
        : values_(std::move(eigenvalues)), vectors_(std::move(eigenvectors)) {
        const std::size_t d = values_.size();
        if (vectors_.size() != d) throw dimension_mismatch(d, vectors_.size());
        for (const auto& v : vectors_)
            if (v.dim() != d) throw dimension_mismatch(d, v.dim());
        for (std::size_t j = 0; j + 1 < d; ++j)
            if (values_[j] < values_[j + 1])
                throw invalid_argument("SpectralDecomp: eigenvalues must be non-increasing");
        double gram_err = 0.0;
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) {
                const double g = inner_product(vectors_[i], vectors_[j]) - (i == j ? 1.0 : 0.0);
                gram_err += g * g;
            }
        if (std::sqrt(gram_err) > 1e-10)
            throw invalid_argument("SpectralDecomp: eigenvectors are not orthonormal");
        for (auto& v : vectors_) normalize_sign(v);
        finish();
    }

    std::size_t dim() const noexcept { return values_.size(); }
    const std::vector<double>& eigenvalues() const noexcept { return values_; }
    const std::vector<CoeffVector>& eigenvectors() const noexcept { return vectors_; }
    const std::vector<double>& gaps() const noexcept { return gaps_; }
    const std::vector<std::size_t>& cluster() const noexcept { return cluster_; }
    bool has_degenerate_cluster() const noexcept { return degenerate_; }

    double eigenvalue(std::size_t l) const { return values_.at(l); }
    const CoeffVector& eigenvector(std::size_t l) const { return vectors_.at(l); }

    /// Σ_l f(λ_l) e_l⊗e_l over the first k eigenpairs.
    template <class F>
    LinearOp spectral_sum(std::size_t k, F&& f) const {
        const std::size_t d = dim();
        LinearOp t(d);
        for (std::size_t l = 0; l < k; ++l) {
            const double w = f(values_[l]);
            const auto& e = vectors_[l];
            for (std::size_t i = 0; i < d; ++i) {
                const double wi = w * e[i];
                for (std::size_t j = 0; j < d; ++j) t(i, j) += wi * e[j];
            }
        }
        return t.symmetrized();
    }

    LinearOp reconstruct() const {
        return spectral_sum(dim(), [](double x) { return x; });
    }

    /// Orthogonal projector on span(e_1..e_k).
    LinearOp projector(std::size_t k) const {
        if (k > dim()) throw invalid_argument("projector: rank exceeds dimension");
        return spectral_sum(k, [](double) { return 1.0; });
    }

    /// Coordinates ⟨x, e_l⟩ for every l.
    std::vector<double> coordinates(const CoeffVector& x) const {
        std::vector<double> c(dim());
        for (std::size_t l = 0; l < dim(); ++l) c[l] = inner_product(x, vectors_[l]);
        return c;
    }

    /// Flips e_l (l < reference.size()) so that ⟨e_l, reference_l⟩ ≥ 0.
    /// Meant for Monte Carlo diagnostics comparing against a known basis.
    void align_signs(std::span<const CoeffVector> reference) {
        for (std::size_t l = 0; l < std::min(reference.size(), dim()); ++l)
            if (inner_product(vectors_[l], reference[l]) < 0.0) vectors_[l] *= -1.0;
    }

    static void normalize_sign(CoeffVector& v) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < v.dim(); ++i)
            if (std::abs(v[i]) > std::abs(v[best])) best = i;
        if (v.dim() > 0 && v[best] < 0.0) v *= -1.0;
    }

private:
    friend SpectralDecomp sym_eigen(const LinearOp&, bool);

    struct unchecked_tag {};
    SpectralDecomp(unchecked_tag, std::vector<double> values, std::vector<CoeffVector> vectors)
        : values_(std::move(values)), vectors_(std::move(vectors)) {
        finish();
    }

    void finish() {
        const std::size_t d = values_.size();
        gaps_.assign(d, std::numeric_limits<double>::infinity());
        for (std::size_t j = 0; j < d; ++j) {
            if (j > 0) gaps_[j] = std::min(gaps_[j], values_[j - 1] - values_[j]);
            if (j + 1 < d) gaps_[j] = std::min(gaps_[j], values_[j] - values_[j + 1]);
        }
        cluster_.assign(d, 0);
        degenerate_ = false;
        const double width = d > 0 ? degeneracy_ratio * std::abs(values_[0]) : 0.0;
        for (std::size_t j = 1; j < d; ++j) {
            const bool tied = values_[j - 1] - values_[j] < width;
            cluster_[j] = tied ? cluster_[j - 1] : cluster_[j - 1] + 1;
            degenerate_ = degenerate_ || tied;
        }
    }

    std::vector<double> values_;
    std::vector<CoeffVector> vectors_;
    std::vector<double> gaps_;
    std::vector<std::size_t> cluster_;
    bool degenerate_ = false;
};

/**
 * Eigendecomposition of a symmetric operator by the cyclic Jacobi method.
 *
 * With `psd` set, eigenvalues in [−psd_tolerance, 0) are clamped to zero and
 * anything below raises not_psd.
 */
inline SpectralDecomp sym_eigen(const LinearOp& t, bool psd = false) {
    if (!t.is_symmetric()) throw not_symmetric("sym_eigen: operator is not symmetric");
    const std::size_t d = t.dim();
    std::vector<double> a(t.entries().begin(), t.entries().end());
    // Exact symmetry simplifies the in-place rotation below.
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j)
            a[i * d + j] = a[j * d + i] = 0.5 * (a[i * d + j] + a[j * d + i]);
    std::vector<double> v(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) v[i * d + i] = 1.0;

    auto at = [&](std::size_t i, std::size_t j) -> double& { return a[i * d + j]; };
    double scale = 0.0;
    for (double x : a) scale += x * x;
    scale = std::sqrt(scale);
    const double negligible = std::numeric_limits<double>::epsilon() * 1e-3 * scale;

    for (int sweep = 0; sweep < 100 && scale > 0.0; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = i + 1; j < d; ++j) off += at(i, j) * at(i, j);
        if (std::sqrt(off) <= negligible) break;

        for (std::size_t p = 0; p + 1 < d; ++p) {
            for (std::size_t q = p + 1; q < d; ++q) {
                const double apq = at(p, q);
                if (std::abs(apq) <= negligible) {
                    at(p, q) = at(q, p) = 0.0;
                    continue;
                }
                const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
                const double tt = std::copysign(1.0, theta) /
                                  (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(tt * tt + 1.0);
                const double s = tt * c;
                for (std::size_t k = 0; k < d; ++k) {
                    if (k == p || k == q) continue;
                    const double akp = at(k, p);
                    const double akq = at(k, q);
                    at(k, p) = at(p, k) = c * akp - s * akq;
                    at(k, q) = at(q, k) = s * akp + c * akq;
                }
                at(p, p) -= tt * apq;
                at(q, q) += tt * apq;
                at(p, q) = at(q, p) = 0.0;
                for (std::size_t k = 0; k < d; ++k) {
                    const double vkp = v[k * d + p];
                    const double vkq = v[k * d + q];
                    v[k * d + p] = c * vkp - s * vkq;
                    v[k * d + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return at(i, i) > at(j, j); });

    std::vector<double> values(d);
    std::vector<CoeffVector> vectors;
    vectors.reserve(d);
    for (std::size_t l = 0; l < d; ++l) {
        const std::size_t c = order[l];
        double lam = at(c, c);
        if (psd && lam < 0.0) {
            if (lam < -psd_tolerance)
                throw not_psd("sym_eigen: eigenvalue " + std::to_string(lam) +
                              " below -1e-10 on a PSD request");
            lam = 0.0;
        }
        values[l] = lam;
        CoeffVector e(d);
        for (std::size_t i = 0; i < d; ++i) e[i] = v[i * d + c];
        SpectralDecomp::normalize_sign(e);
        vectors.push_back(std::move(e));
    }
    return SpectralDecomp(SpectralDecomp::unchecked_tag{}, std::move(values), std::move(vectors));
}

namespace detail {

inline void check_cutoff(const SpectralDecomp& dec, std::size_t k) {
    if (k < 1 || k > dec.dim())
        throw invalid_argument("spectral cutoff k=" + std::to_string(k) +
                               " outside [1, " + std::to_string(dec.dim()) + "]");
    const double threshold = pivot_ratio * dec.eigenvalue(0);
    for (std::size_t l = 0; l < k; ++l)
        if (!(dec.eigenvalue(l) > 0.0) || dec.eigenvalue(l) < threshold)
            throw degenerate_spectrum(l + 1, dec.eigenvalue(l), threshold);
}

} // namespace detail

/// Σ_l √λ_l e_l⊗e_l for a PSD operator.
inline LinearOp psd_sqrt(const LinearOp& t) {
    const auto dec = sym_eigen(t, true);
    return dec.spectral_sum(dec.dim(), [](double x) { return std::sqrt(x); });
}

/// Σ_{l≤k} λ_l^{−1/2} e_l⊗e_l, the square root of the spectral-cutoff inverse.
inline LinearOp psd_pinv_sqrt(const SpectralDecomp& dec, std::size_t k) {
    detail::check_cutoff(dec, k);
    return dec.spectral_sum(k, [](double x) { return 1.0 / std::sqrt(x); });
}

/// Dense power T^p by repeated composition.
inline LinearOp power(const LinearOp& t, std::size_t p) {
    LinearOp r = LinearOp::identity(t.dim());
    for (std::size_t i = 0; i < p; ++i) r = compose(t, r);
    return r;
}

} // namespace farlab

#endif // FARLAB_HILBERT_HPP
