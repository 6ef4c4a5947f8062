#ifndef FARLAB_SUITES_HPP
#define FARLAB_SUITES_HPP

/** @file
 * Named verification suites with fixed reference designs. Each suite returns
 * pass/fail checks with the measured value, machine-readable data, and
 * optional plot-ready CSV tables.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "farlab/error.hpp"
#include "farlab/estimate.hpp"
#include "farlab/io.hpp"
#include "farlab/lab.hpp"
#include "farlab/model.hpp"
#include "farlab/random.hpp"
#include "farlab/simulate.hpp"
#include "farlab/stats.hpp"

namespace farlab {

struct Check {
    std::string name;
    bool passed = false;
    double measured = 0.0;
    std::string threshold;
    std::string detail;
};

struct SuiteResult {
    explicit SuiteResult(std::string name = {}) : suite(std::move(name)) {}

    std::string suite;
    std::vector<Check> checks;
    json data = json::object();
    std::map<std::string, std::string> csv; ///< file name → plot-ready table

    bool passed() const {
        return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
    }
};

struct SuiteParams {
    std::uint64_t seed = 0;
    std::optional<ModelSpec> model;
    std::optional<std::size_t> n;    ///< prediction-error suites only
    std::optional<std::size_t> reps; ///< every Monte Carlo suite
    std::optional<std::size_t> k;
    double c = 1.0;
    double level = 0.95;
    unsigned threads = 0;
    std::vector<std::size_t> directions{1, 2, 3};

    static SuiteParams from_config(const ExperimentConfig& cfg, std::uint64_t seed) {
        SuiteParams p;
        p.seed = seed;
        p.model = cfg.model;
        p.n = cfg.n;
        p.reps = cfg.reps;
        p.k = cfg.k;
        p.c = cfg.c;
        p.level = cfg.level;
        p.threads = cfg.threads;
        p.directions = cfg.directions;
        return p;
    }
};

/// Arithmetic profile α = 1, D = 40, diagonal ρ with s = 0.5, gaussian scores.
inline ModelSpec reference_model_spec(std::size_t dim = 40, double s = 0.5) {
    ModelSpec m;
    m.profile.kind = ProfileKind::arithmetic;
    m.profile.C = 1.0;
    m.profile.alpha = 1.0;
    m.profile.dim = dim;
    m.rho_mode = RhoMode::diagonal;
    m.s = s;
    m.xi_law = XiLaw::gaussian;
    return m;
}

inline const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names{
        "cov_identity", "algebra", "th2", "th2_rate", "coverage", "th1",
        "eigen_lemmas", "ra_bounds", "mda_cov", "consistency",
    };
    return names;
}

inline bool is_suite(const std::string& name) {
    const auto& n = suite_names();
    return name == "all" || std::find(n.begin(), n.end(), name) != n.end();
}

namespace detail {

inline std::string fmt(double x, int prec = 6) {
    std::ostringstream ss;
    ss.precision(prec);
    ss << x;
    return ss.str();
}

inline Check make_check(std::string name, bool passed, double measured, std::string threshold,
                        std::string detail = {}) {
    return {std::move(name), passed, measured, std::move(threshold), std::move(detail)};
}

inline std::vector<CoeffVector> eigen_directions(const FarModel& m, const std::vector<std::size_t>& idx) {
    std::vector<CoeffVector> out;
    for (std::size_t i : idx) {
        if (i < 1 || i > m.dim())
            throw invalid_argument("direction index " + std::to_string(i) + " outside [1, D]");
        out.push_back(m.eigenvector(i - 1));
    }
    return out;
}

inline McReport run_mc(const SuiteParams& p, Normalization norm) {
    const FarModel model = FarModel::from_spec(p.model.value_or(reference_model_spec()));
    McOptions o;
    o.n = p.n.value_or(2000);
    o.reps = p.reps.value_or(1000);
    o.directions = eigen_directions(model, p.directions);
    o.seed = p.seed;
    o.k = p.k;
    o.c = p.c;
    o.normalization = norm;
    o.tiled = true;
    o.level = p.level;
    o.threads = p.threads;
    return mc_prediction_error(model, o);
}

inline json mc_json(const McReport& r, const std::vector<std::size_t>& idx) {
    json dirs = json::array();
    for (std::size_t d = 0; d < r.directions.size(); ++d) {
        const auto& s = r.directions[d];
        dirs.push_back({{"direction", "e" + std::to_string(idx[d])},
                        {"target_variance", s.target_variance},
                        {"mean", s.mean},
                        {"empirical_variance", s.empirical_variance},
                        {"variance_ratio", s.variance_ratio},
                        {"kurtosis", s.kurtosis},
                        {"ks_statistic", s.ks_statistic},
                        {"ks_p_value", s.ks_p_value},
                        {"coverage", s.coverage}});
    }
    return {{"n", r.n},
            {"k_n", r.k_n},
            {"replications", r.replications},
            {"failures", r.failures},
            {"model_hash", hex64(r.model_hash)},
            {"seed", r.seed},
            {"normalization", r.normalization == Normalization::sqrt_n_over_k ? "sqrt_n_over_k" : "sqrt_n"},
            {"tiled", r.tiled},
            {"level", r.level},
            {"directions", dirs}};
}

/// Raw samples, QQ pairs and 30-bin histograms of the standardized samples.
inline void mc_csv(const McReport& r, const std::vector<std::size_t>& idx, const std::string& stem,
                   std::map<std::string, std::string>& out) {
    std::ostringstream raw, qq, hist;
    raw << "replication";
    for (std::size_t i : idx) raw << ",e" << i;
    raw << '\n';
    const std::size_t m = r.directions.empty() ? 0 : r.directions.front().samples.size();
    for (std::size_t k = 0; k < m; ++k) {
        raw << k;
        for (const auto& d : r.directions) raw << ',' << format_double(d.samples[k]);
        raw << '\n';
    }
    qq << "direction,theoretical,empirical\n";
    hist << "direction,bin_lo,bin_hi,count\n";
    for (std::size_t d = 0; d < r.directions.size(); ++d) {
        const auto& s = r.directions[d];
        if (s.samples.size() < 2) continue;
        std::vector<double> z = s.samples;
        const double sd = std::sqrt(s.empirical_variance);
        for (double& v : z) v = (v - s.mean) / sd;
        std::sort(z.begin(), z.end());
        for (std::size_t k = 0; k < z.size(); ++k) {
            const double pk = (static_cast<double>(k) + 0.5) / static_cast<double>(z.size());
            qq << 'e' << idx[d] << ',' << format_double(normal_quantile(pk)) << ',' << format_double(z[k]) << '\n';
        }
        const int bins = 30;
        const double lo = -5.0, hi = 5.0, w = (hi - lo) / bins;
        std::vector<std::size_t> count(bins, 0);
        for (double v : z) {
            const int b = static_cast<int>(std::floor((v - lo) / w));
            if (b >= 0 && b < bins) ++count[b];
        }
        for (int b = 0; b < bins; ++b)
            hist << 'e' << idx[d] << ',' << format_double(lo + b * w) << ',' << format_double(lo + (b + 1) * w)
                 << ',' << count[b] << '\n';
    }
    out[stem + "_samples.csv"] = raw.str();
    out[stem + "_qq.csv"] = qq.str();
    out[stem + "_hist.csv"] = hist.str();
}

} // namespace detail

// ---------------------------------------------------------------------------

/// Covariance identity on 20 seeded random models (plus the configured one).
inline SuiteResult suite_cov_identity(const SuiteParams& p) {
    SuiteResult r{"cov_identity"};
    std::vector<ModelSpec> specs;
    for (std::size_t i = 0; i < 20; ++i) {
        auto g = make_stream(p.seed, i, StreamRole::auxiliary, 17);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        ModelSpec m;
        m.profile.dim = i % 2 ? 40 : 10;
        switch (i % 3) {
        case 0:
            m.profile.kind = ProfileKind::arithmetic;
            m.profile.alpha = 0.2 + 1.8 * u(g);
            break;
        case 1:
            m.profile.kind = ProfileKind::exponential;
            m.profile.alpha = 0.05 + 0.45 * u(g);
            break;
        default:
            m.profile.kind = ProfileKind::laurent;
            m.profile.alpha = 0.5 + 1.5 * u(g);
            m.profile.beta = 0.5 + u(g);
            break;
        }
        m.profile.C = 0.5 + 2.0 * u(g);
        m.s = 0.95 * u(g);
        m.rho_mode = (i / 2) % 2 ? RhoMode::composed : RhoMode::diagonal;
        m.basis.kind = i % 4 >= 2 ? BasisKind::rotated : BasisKind::canonical;
        m.basis.seed = g();
        specs.push_back(m);
    }
    if (p.model) specs.push_back(*p.model);

    double worst = 0.0;
    json models = json::array();
    for (const auto& s : specs) {
        const FarModel m = FarModel::from_spec(s);
        const double res = verify_covariance_identity(m);
        worst = std::max(worst, res);
        models.push_back({{"spec", to_json(s)}, {"residual", res}});
    }
    r.checks.push_back(detail::make_check("max_residual", worst <= 1e-10, worst, "<= 1e-10",
                                          std::to_string(specs.size()) + " models"));
    r.data["models"] = models;
    return r;
}

/// Regularization algebra on 50 fits over varied models, n and kₙ.
inline SuiteResult suite_algebra(const SuiteParams& p) {
    SuiteResult r{"algebra"};
    std::vector<FarModel> models;
    models.push_back(FarModel::from_spec(p.model.value_or(reference_model_spec())));
    {
        ModelSpec m = reference_model_spec(20, 0.8);
        m.rho_mode = RhoMode::composed;
        m.basis = {BasisKind::rotated, p.seed ^ 0x5bd1e995ULL};
        models.push_back(FarModel::from_spec(m));
        m = reference_model_spec(10, 0.3);
        m.profile.kind = ProfileKind::exponential;
        m.profile.alpha = 0.5;
        m.xi_law = XiLaw::uniform;
        models.push_back(FarModel::from_spec(m));
    }
    const std::size_t ns[] = {100, 250, 500, 1000, 2000};
    double proj = 0.0, trace = 0.0, dag = 0.0;
    json fits = json::array();
    for (std::size_t i = 0; i < 50; ++i) {
        const FarModel& m = models[i % models.size()];
        const std::size_t n = ns[i % 5];
        FitOptions fo;
        fo.c = p.c;
        if (i % 3) fo.k = std::min<std::size_t>(1 + i % 7, m.dim());
        const Fit f = fit(simulate_far(m, n, 0, p.seed, i), fo);
        const auto g = diagnose(f);
        proj = std::max(proj, g.projector_residual);
        trace = std::max(trace, std::abs(g.projector_trace - static_cast<double>(f.k_n)));
        dag = std::max(dag, std::abs(g.dag_norm_product - 1.0));
        fits.push_back({{"n", n}, {"D", m.dim()}, {"k_n", f.k_n}, {"diagnostics", to_json(g)}});
    }
    r.checks.push_back(detail::make_check("projector_residual", proj <= 1e-9, proj, "<= 1e-9", "50 fits"));
    r.checks.push_back(detail::make_check("projector_trace_error", trace <= 1e-9, trace, "<= 1e-9"));
    r.checks.push_back(detail::make_check("dag_norm_product_error", dag <= 1e-9, dag, "<= 1e-9"));
    r.data["fits"] = fits;
    return r;
}

/// Variance ratios and KS normality of the √(n/kₙ)-scaled prediction error.
inline SuiteResult suite_th2(const SuiteParams& p, const McReport& mc) {
    SuiteResult r{"th2"};
    for (std::size_t d = 0; d < mc.directions.size(); ++d) {
        const auto& s = mc.directions[d];
        const std::string e = "e" + std::to_string(p.directions[d]);
        r.checks.push_back(detail::make_check("variance_ratio_" + e,
                                              s.variance_ratio >= 0.8 && s.variance_ratio <= 1.25,
                                              s.variance_ratio, "in [0.8, 1.25]",
                                              "k_n=" + std::to_string(mc.k_n)));
        r.checks.push_back(detail::make_check("ks_p_" + e, s.ks_p_value > 0.01, s.ks_p_value, "> 0.01",
                                              "D=" + detail::fmt(s.ks_statistic) +
                                                  " kurtosis=" + detail::fmt(s.kurtosis, 4)));
    }
    r.checks.push_back(detail::make_check("fit_failures", mc.failures == 0, static_cast<double>(mc.failures),
                                          "== 0"));
    r.data = detail::mc_json(mc, p.directions);
    detail::mc_csv(mc, p.directions, "th2", r.csv);
    return r;
}

inline SuiteResult suite_th2(const SuiteParams& p) {
    return suite_th2(p, detail::run_mc(p, Normalization::sqrt_n_over_k));
}

/// Negative control: the √n scaling must move some ratio out of the band.
inline SuiteResult suite_th2_rate(const SuiteParams& p) {
    SuiteResult r{"th2_rate"};
    const McReport mc = detail::run_mc(p, Normalization::sqrt_n);
    bool outside = false;
    double farthest = 1.0;
    for (const auto& s : mc.directions) {
        outside = outside || s.variance_ratio < 0.8 || s.variance_ratio > 1.25;
        if (std::abs(std::log(s.variance_ratio)) > std::abs(std::log(farthest))) farthest = s.variance_ratio;
    }
    r.checks.push_back(detail::make_check("some_ratio_outside_band", outside, farthest,
                                          "some ratio outside [0.8, 1.25]",
                                          "k_n=" + std::to_string(mc.k_n) +
                                              "; the scalings differ by the factor k_n"));
    r.data = detail::mc_json(mc, p.directions);
    return r;
}

/// Empirical coverage of the intervals for ⟨ρΠ̂(X_{n+1}), u⟩, u the first direction.
inline SuiteResult suite_coverage(const SuiteParams& p, const McReport& mc) {
    SuiteResult r{"coverage"};
    const double lo = p.level - 0.03, hi = p.level + 0.03;
    const auto& s = mc.directions.front();
    r.checks.push_back(detail::make_check("coverage_e" + std::to_string(p.directions.front()),
                                          s.coverage >= lo && s.coverage <= hi, s.coverage,
                                          "in [" + detail::fmt(lo) + ", " + detail::fmt(hi) + "]",
                                          "level=" + detail::fmt(p.level)));
    json cov = json::object();
    for (std::size_t d = 0; d < mc.directions.size(); ++d)
        cov["e" + std::to_string(p.directions[d])] = mc.directions[d].coverage;
    r.data = {{"level", p.level}, {"k_n", mc.k_n}, {"replications", mc.replications}, {"coverage", cov}};
    return r;
}

inline SuiteResult suite_coverage(const SuiteParams& p) {
    return suite_coverage(p, detail::run_mc(p, Normalization::sqrt_n_over_k));
}

/// Divergent and convergent variance sequences for k = 1..20.
inline SuiteResult suite_th1(const SuiteParams& p) {
    SuiteResult r{"th1"};
    const FarModel m = FarModel::from_spec(p.model.value_or(reference_model_spec()));
    std::vector<std::size_t> ks;
    for (std::size_t k = 1; k <= std::min<std::size_t>(20, m.dim()); ++k) ks.push_back(k);
    const Th1Report t = demonstrate_th1(m, ks);
    double div_err = 0.0, conv_err = 0.0;
    bool monotone = true;
    std::ostringstream csv;
    csv << "k,divergent_variance,convergent_variance\n";
    json pts = json::array();
    for (std::size_t i = 0; i < t.points.size(); ++i) {
        const auto& q = t.points[i];
        const double want = t.sigma2 * static_cast<double>(q.k);
        div_err = std::max(div_err, std::abs(q.divergent_variance - want) / want);
        conv_err = std::max(conv_err, std::abs(q.convergent_variance - t.points.front().convergent_variance) /
                                          t.points.front().convergent_variance);
        if (i && !(q.divergent_variance > t.points[i - 1].divergent_variance)) monotone = false;
        pts.push_back({{"k", q.k}, {"divergent", q.divergent_variance}, {"convergent", q.convergent_variance}});
        csv << q.k << ',' << format_double(q.divergent_variance) << ',' << format_double(q.convergent_variance)
            << '\n';
    }
    r.checks.push_back(detail::make_check("divergent_equals_sigma2_k", div_err <= 1e-12, div_err,
                                          "relative error <= 1e-12"));
    r.checks.push_back(detail::make_check("divergent_increasing", monotone, monotone ? 1.0 : 0.0, "strict"));
    r.checks.push_back(detail::make_check("convergent_constant", conv_err <= 1e-12, conv_err,
                                          "relative spread <= 1e-12"));
    r.data = {{"sigma2", t.sigma2}, {"points", pts}};
    r.csv["th1_variance.csv"] = csv.str();
    return r;
}

/// Eigenvalue inequalities on the five reference profiles up to j = 50.
inline SuiteResult suite_eigen_lemmas(const SuiteParams& p) {
    SuiteResult r{"eigen_lemmas"};
    std::vector<EigenProfile> profiles;
    for (double a : {0.5, 1.0, 2.0}) profiles.push_back({ProfileKind::arithmetic, 1.0, a, 1.0, 200, {}});
    for (double a : {0.1, 0.5}) profiles.push_back({ProfileKind::exponential, 1.0, a, 1.0, 200, {}});
    if (p.model && p.model->profile.dim > 50) profiles.push_back(p.model->profile);

    json out = json::array();
    std::ostringstream csv;
    csv << "profile,j,ratio\n";
    for (const auto& prof : profiles) {
        const std::string tag = std::string(to_string(prof.kind)) + "(alpha=" + detail::fmt(prof.alpha) + ")";
        const EigenLemmaReport e = verify_eigen_lemmas(prof, 50);
        std::size_t total = 0;
        std::ostringstream where;
        for (const auto& [claim, count] : e.violation_counts) {
            total += count;
            where << claim << ':' << count << " (holds from j=" << e.onset.at(claim) << ") ";
        }
        std::string first;
        for (std::size_t i = 0; i < std::min<std::size_t>(3, e.first_violations.size()); ++i) {
            const auto& v = e.first_violations[i];
            first += " " + v.claim + "(j=" + std::to_string(v.j) + ",k=" + std::to_string(v.k) + ")";
        }
        r.checks.push_back(detail::make_check("inequalities_" + tag, total == 0, static_cast<double>(total),
                                              "0 violations", where.str() + (first.empty() ? "" : "first:" + first)));

        std::vector<double> window;
        bool finite = true;
        for (std::size_t i = 0; i < e.spacing_sum_j.size(); ++i) {
            finite = finite && std::isfinite(e.spacing_sum_ratio[i]);
            if (e.spacing_sum_j[i] >= 10) window.push_back(e.spacing_sum_ratio[i]);
            csv << tag << ',' << e.spacing_sum_j[i] << ',' << format_double(e.spacing_sum_ratio[i]) << '\n';
        }
        const double med = stats::median(window);
        const auto [mn, mx] = std::minmax_element(window.begin(), window.end());
        const double spread = std::max(*mx / med, med / *mn);
        r.checks.push_back(detail::make_check("spacing_sum_" + tag, finite && spread <= 2.0, spread,
                                              "finite, within 2x of median on j in [10, 50]",
                                              "median=" + detail::fmt(med)));

        json viol = json::array();
        for (const auto& v : e.first_violations)
            viol.push_back({{"claim", v.claim}, {"j", v.j}, {"k", v.k}, {"lhs", v.lhs}, {"rhs", v.rhs}});
        out.push_back({{"profile", tag},
                       {"D", prof.dim},
                       {"tail_remainder", e.tail_remainder},
                       {"pairs_checked", e.pairs_checked},
                       {"violation_counts", e.violation_counts},
                       {"onset", e.onset},
                       {"first_violations", viol},
                       {"spacing_sum_sup", e.spacing_sum_sup},
                       {"spacing_sum_median", med}});
    }
    r.data["profiles"] = out;
    r.csv["eigen_spacing_sum.csv"] = csv.str();
    return r;
}

/// Normalized second moments of Γₙ − Γ and Sₙ.
inline SuiteResult suite_ra_bounds(const SuiteParams& p) {
    SuiteResult r{"ra_bounds"};
    const std::size_t reps = p.reps.value_or(500);
    ModelSpec base = p.model.value_or(reference_model_spec());
    const std::size_t p_max = std::min<std::size_t>(5, base.profile.dim);

    ModelSpec indep = base;
    indep.s = 0.0;
    const RaReport a = verify_ra_bounds(FarModel::from_spec(indep), {500}, p_max, reps, p.seed, p.threads);
    const double z = a.s_max_z();
    r.checks.push_back(detail::make_check("s_ratio_independent_equals_1", z <= 3.0, z, "max |ratio-1|/SE <= 3",
                                          "rho=0, n=500, " + std::to_string(p_max) + "x" + std::to_string(p_max)));

    ModelSpec dep = base;
    if (!p.model) dep.s = 0.5;
    const RaReport b = verify_ra_bounds(FarModel::from_spec(dep), {250, 500, 1000}, p_max, reps,
                                        p.seed ^ 0x9e3779b97f4a7c15ULL, p.threads);
    double excess = -std::numeric_limits<double>::infinity(); // max (ratio − 1)/SE
    for (const auto& l : b.levels)
        for (const auto& c : l.cells) excess = std::max(excess, (c.s_ratio - 1.0) / c.s_se);
    r.checks.push_back(detail::make_check("s_ratio_bounded", b.s_bounded(), excess, "(ratio-1)/SE <= 3"));
    r.checks.push_back(detail::make_check("gamma_ratio_stable", b.stable_across_n(true), b.max_spread(true),
                                          "max/min over n <= 2 up to 3 SE"));
    r.checks.push_back(detail::make_check("s_ratio_stable", b.stable_across_n(false), b.max_spread(false),
                                          "max/min over n <= 2 up to 3 SE"));

    auto level_json = [](const RaReport& rep) {
        json lv = json::array();
        for (const auto& l : rep.levels) {
            json cells = json::array();
            for (const auto& c : l.cells)
                cells.push_back({{"p", c.p}, {"m", c.m}, {"gamma_ratio", c.gamma_ratio}, {"gamma_se", c.gamma_se},
                                 {"s_ratio", c.s_ratio}, {"s_se", c.s_se}, {"s_exact", c.s_exact}});
            lv.push_back({{"n", l.n}, {"cells", cells}});
        }
        return lv;
    };
    r.data = {{"reps", reps}, {"independent", level_json(a)}, {"dependent", level_json(b)}};
    std::ostringstream csv;
    csv << "case,n,p,m,gamma_ratio,gamma_se,s_ratio,s_se,s_exact\n";
    for (const auto* rep : {&a, &b})
        for (const auto& l : rep->levels)
            for (const auto& c : l.cells)
                csv << (rep == &a ? "independent" : "dependent") << ',' << l.n << ',' << c.p << ',' << c.m << ','
                    << format_double(c.gamma_ratio) << ',' << format_double(c.gamma_se) << ','
                    << format_double(c.s_ratio) << ',' << format_double(c.s_se) << ','
                    << format_double(c.s_exact) << '\n';
    r.csv["ra_ratios.csv"] = csv.str();
    return r;
}

/// Second moments of the martingale-difference array against the closed form.
inline SuiteResult suite_mda_cov(const SuiteParams& p) {
    SuiteResult r{"mda_cov"};
    const FarModel m = FarModel::from_spec(p.model.value_or(reference_model_spec(10)));
    MdaOptions o;
    o.n = 20;
    o.reps = p.reps.value_or(2000);
    o.k = p.k.value_or(std::min<std::size_t>(3, m.dim()));
    o.indices = {1, 10, 20};
    o.cross_k = 1;
    o.cross_i = 2;
    o.seed = p.seed;
    o.threads = p.threads;
    const MdaReport a = verify_mda_covariance(m, o);
    for (const auto& t : a.terms)
        r.checks.push_back(detail::make_check("closed_form_k" + std::to_string(t.k), t.max_z <= 3.0, t.max_z,
                                              "max entrywise |MC-exact|/SE <= 3",
                                              "trace term=" + detail::fmt(t.trace_term)));
    r.checks.push_back(detail::make_check("cross_term_zero", a.cross_max_z <= 3.0, a.cross_max_z,
                                          "max entrywise |MC|/SE <= 3", "(k,i)=(1,2)"));

    MdaOptions o50 = o;
    o50.n = 50;
    o50.indices = {1};
    o50.seed = p.seed ^ 0x2545f4914f6cdd1dULL;
    const MdaReport b = verify_mda_covariance(m, o50);
    const double qs = b.quadratic_sum_mc;
    r.checks.push_back(detail::make_check("quadratic_sum_ratio_n50", qs >= 0.9 && qs <= 1.1, qs, "in [0.9, 1.1]",
                                          "exact=" + detail::fmt(b.quadratic_sum_exact) +
                                              " SE=" + detail::fmt(b.quadratic_sum_se)));

    json terms = json::array();
    for (const auto& t : a.terms)
        terms.push_back({{"k", t.k}, {"trace_term", t.trace_term}, {"max_z", t.max_z},
                         {"mc_diag", [&] {
                              std::vector<double> v;
                              for (std::size_t i = 0; i < m.dim(); ++i) v.push_back(t.mc_mean(i, i));
                              return v;
                          }()},
                         {"exact_diag", [&] {
                              std::vector<double> v;
                              for (std::size_t i = 0; i < m.dim(); ++i) v.push_back(t.closed_form(i, i));
                              return v;
                          }()}});
    r.data = {{"n", a.n},          {"k_n", a.k_n},          {"reps", a.reps},
              {"terms", terms},    {"cross_max_z", a.cross_max_z},
              {"quadratic_sum",
               {{"n", b.n}, {"mc", qs}, {"se", b.quadratic_sum_se}, {"exact", b.quadratic_sum_exact}}}};
    return r;
}

/// Median ‖ρ̂ₙΠ̂ − ρΠ̂‖_∞ over 20 seeds as n doubles.
inline SuiteResult suite_consistency(const SuiteParams& p) {
    SuiteResult r{"consistency"};
    const FarModel m = FarModel::from_spec(p.model.value_or(reference_model_spec()));
    FitOptions fo;
    fo.k = p.k;
    fo.c = p.c;
    const auto pts = consistency_trend(m, {500, 1000, 2000, 4000}, 20, p.seed, fo, p.threads);
    bool decreasing = true;
    double worst = 0.0; // largest ratio median(2n)/median(n)
    json arr = json::array();
    std::ostringstream csv;
    csv << "n,k_n,median_error\n";
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (i) {
            decreasing = decreasing && pts[i].median_error < pts[i - 1].median_error;
            worst = std::max(worst, pts[i].median_error / pts[i - 1].median_error);
        }
        arr.push_back({{"n", pts[i].n}, {"k_n", pts[i].k_n}, {"median_error", pts[i].median_error}});
        csv << pts[i].n << ',' << pts[i].k_n << ',' << format_double(pts[i].median_error) << '\n';
    }
    r.checks.push_back(detail::make_check("median_strictly_decreasing", decreasing, worst,
                                          "each doubling lowers the median", "measured = worst ratio"));
    r.data["trend"] = arr;
    r.csv["consistency.csv"] = csv.str();
    return r;
}

/// Runs the named suites in order; "all" expands to every suite. The
/// prediction-error Monte Carlo is shared between th2 and coverage.
inline std::vector<SuiteResult> run_suites(const std::vector<std::string>& names, const SuiteParams& p) {
    std::vector<std::string> list;
    for (const auto& n : names) {
        if (!is_suite(n)) throw invalid_argument("unknown suite '" + n + "'");
        if (n == "all") list.insert(list.end(), suite_names().begin(), suite_names().end());
        else list.push_back(n);
    }
    std::optional<McReport> mc;
    auto shared_mc = [&]() -> const McReport& {
        if (!mc) mc = detail::run_mc(p, Normalization::sqrt_n_over_k);
        return *mc;
    };
    std::vector<SuiteResult> out;
    for (const auto& n : list) {
        if (n == "cov_identity") out.push_back(suite_cov_identity(p));
        else if (n == "algebra") out.push_back(suite_algebra(p));
        else if (n == "th2") out.push_back(suite_th2(p, shared_mc()));
        else if (n == "th2_rate") out.push_back(suite_th2_rate(p));
        else if (n == "coverage") out.push_back(suite_coverage(p, shared_mc()));
        else if (n == "th1") out.push_back(suite_th1(p));
        else if (n == "eigen_lemmas") out.push_back(suite_eigen_lemmas(p));
        else if (n == "ra_bounds") out.push_back(suite_ra_bounds(p));
        else if (n == "mda_cov") out.push_back(suite_mda_cov(p));
        else if (n == "consistency") out.push_back(suite_consistency(p));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

inline json report_json(const std::vector<SuiteResult>& results, std::uint64_t config_hash, std::uint64_t seed) {
    json suites = json::array();
    bool all = true;
    for (const auto& s : results) {
        json checks = json::array();
        for (const auto& c : s.checks)
            checks.push_back({{"name", c.name},
                              {"passed", c.passed},
                              {"measured", c.measured},
                              {"threshold", c.threshold},
                              {"detail", c.detail}});
        suites.push_back({{"suite", s.suite}, {"passed", s.passed()}, {"checks", checks}, {"data", s.data}});
        all = all && s.passed();
    }
    return {{"format", report_format},
            {"config_hash", hex64(config_hash)},
            {"seed", seed},
            {"passed", all},
            {"suites", suites}};
}

inline std::string report_table(const std::vector<SuiteResult>& results) {
    std::size_t w_suite = 5, w_check = 5, w_meas = 8;
    for (const auto& s : results)
        for (const auto& c : s.checks) {
            w_suite = std::max(w_suite, s.suite.size());
            w_check = std::max(w_check, c.name.size());
            w_meas = std::max(w_meas, detail::fmt(c.measured).size());
        }
    std::ostringstream ss;
    auto pad = [](const std::string& x, std::size_t w) { return x + std::string(w > x.size() ? w - x.size() : 0, ' '); };
    ss << pad("suite", w_suite) << "  " << pad("check", w_check) << "  result  " << pad("measured", w_meas)
       << "  threshold\n";
    for (const auto& s : results)
        for (const auto& c : s.checks) {
            ss << pad(s.suite, w_suite) << "  " << pad(c.name, w_check) << "  " << (c.passed ? "PASS  " : "FAIL  ")
               << "  " << pad(detail::fmt(c.measured), w_meas) << "  " << c.threshold;
            if (!c.detail.empty()) ss << "  [" << c.detail << "]";
            ss << '\n';
        }
    return ss.str();
}

inline std::string report_csv(const std::vector<SuiteResult>& results) {
    auto quote = [](const std::string& x) {
        std::string q = "\"";
        for (char ch : x) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
        return q + "\"";
    };
    std::ostringstream ss;
    ss << "suite,check,passed,measured,threshold,detail\n";
    for (const auto& s : results)
        for (const auto& c : s.checks)
            ss << s.suite << ',' << c.name << ',' << (c.passed ? 1 : 0) << ',' << format_double(c.measured) << ','
               << quote(c.threshold) << ',' << quote(c.detail) << '\n';
    return ss.str();
}

} // namespace farlab

#endif // FARLAB_SUITES_HPP
