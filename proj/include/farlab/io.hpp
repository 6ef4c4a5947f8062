#ifndef FARLAB_IO_HPP
#define FARLAB_IO_HPP

/** @file
 * JSON model specifications and experiment configs, path CSV files, and
 * JSON export of fits.
 *
 * Model spec (version 1):
 *
 *   { "version": 1,
 *     "kind": "arithmetic" | "exponential" | "laurent" | "explicit",
 *     "params": { "C": 1.0, "alpha": 1.0, "beta": 1.0 },
 *     "values": [ ... ],                      // explicit only
 *     "D": 40,
 *     "rho_mode": "diagonal" | "composed",
 *     "s": 0.5,
 *     "xi_law": "gaussian" | "uniform" | "two_sided_exponential" | "pareto",
 *     "basis": { "kind": "canonical" | "rotated", "seed": 0 } }
 *
 * Experiment config (version 1): { "version": 1, "model": {...}, "seed": 7,
 * "n", "reps", "k", "c", "level", "burn_in", "threads", "directions" } where
 * directions are 1-based eigenvector indices. Every field but "version" is
 * optional; a bare model spec is also accepted. Unknown keys are errors.
 */

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "farlab/error.hpp"
#include "farlab/estimate.hpp"
#include "farlab/hilbert.hpp"
#include "farlab/model.hpp"
#include "farlab/random.hpp"
#include "farlab/simulate.hpp"

namespace farlab {

using json = nlohmann::json;

inline constexpr int spec_version = 1;
inline constexpr std::string_view report_format = "farlab-report/1";
inline constexpr std::string_view fit_format = "farlab-fit/1";
inline constexpr std::string_view path_magic = "# farlab-path v1";

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t x) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
    return buf;
}

/// %.17g, enough to round-trip a double.
inline std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace detail {

inline std::string join_path(const std::string& prefix, const std::string& key) {
    return prefix.empty() ? key : prefix + "." + key;
}

inline void reject_unknown(const json& j, std::initializer_list<std::string_view> known,
                           const std::string& prefix) {
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (auto k : known) ok = ok || key == k;
        if (!ok) throw schema_error(join_path(prefix, key), "unknown field");
    }
}

inline const json* find(const json& j, const char* key) {
    const auto it = j.find(key);
    return it == j.end() || it->is_null() ? nullptr : &*it;
}

inline double get_number(const json& v, const std::string& path) {
    if (!v.is_number()) throw schema_error(path, "expected a number");
    return v.get<double>();
}

inline std::uint64_t get_unsigned(const json& v, const std::string& path) {
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0))
        throw schema_error(path, "expected a non-negative integer");
    return v.get<std::uint64_t>();
}

inline std::string get_string(const json& v, const std::string& path) {
    if (!v.is_string()) throw schema_error(path, "expected a string");
    return v.get<std::string>();
}

inline json matrix_json(const LinearOp& t) {
    json rows = json::array();
    for (std::size_t i = 0; i < t.dim(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < t.dim(); ++j) row.push_back(t(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline void check_version(const json& j, const std::string& prefix) {
    const json* v = find(j, "version");
    if (!v) throw schema_error(join_path(prefix, "version"), "missing");
    if (!v->is_number_integer() || v->get<long long>() != spec_version)
        throw schema_error(join_path(prefix, "version"),
                           "unsupported version (expected " + std::to_string(spec_version) + ")");
}

} // namespace detail

inline ProfileKind profile_kind_from_string(std::string_view s, const std::string& path = "kind") {
    if (s == "arithmetic") return ProfileKind::arithmetic;
    if (s == "exponential") return ProfileKind::exponential;
    if (s == "laurent") return ProfileKind::laurent;
    if (s == "explicit") return ProfileKind::explicit_values;
    throw schema_error(path, "unknown profile '" + std::string(s) +
                                 "' (expected arithmetic, exponential, laurent, explicit)");
}

// ---------------------------------------------------------------------------
// Model spec
// ---------------------------------------------------------------------------

inline json to_json(const ModelSpec& m) {
    json j;
    j["version"] = spec_version;
    j["kind"] = std::string(to_string(m.profile.kind));
    if (m.profile.kind == ProfileKind::explicit_values) {
        j["values"] = m.profile.values;
    } else {
        j["params"] = {{"C", m.profile.C}, {"alpha", m.profile.alpha}};
        if (m.profile.kind == ProfileKind::laurent) j["params"]["beta"] = m.profile.beta;
    }
    j["D"] = m.profile.dim;
    j["rho_mode"] = std::string(to_string(m.rho_mode));
    j["s"] = m.s;
    j["xi_law"] = std::string(to_string(m.xi_law));
    j["basis"] = {{"kind", m.basis.kind == BasisKind::canonical ? "canonical" : "rotated"},
                  {"seed", m.basis.seed}};
    return j;
}

/// Parses and validates a model spec; errors name the offending field,
/// prefixed by `prefix` when the spec is nested.
inline ModelSpec model_spec_from_json(const json& j, const std::string& prefix = "") {
    using namespace detail;
    if (!j.is_object()) throw schema_error(prefix.empty() ? "model" : prefix, "expected an object");
    reject_unknown(j, {"version", "kind", "params", "values", "D", "rho_mode", "s", "xi_law", "basis"},
                   prefix);
    // Nested specs inherit the enclosing config's version.
    if (prefix.empty() || find(j, "version")) check_version(j, prefix);
    ModelSpec m;
    const json* kind = find(j, "kind");
    if (!kind) throw schema_error(join_path(prefix, "kind"), "missing");
    m.profile.kind = profile_kind_from_string(get_string(*kind, join_path(prefix, "kind")),
                                              join_path(prefix, "kind"));

    const json* d = find(j, "D");
    if (!d) throw schema_error(join_path(prefix, "D"), "missing");
    m.profile.dim = static_cast<std::size_t>(get_unsigned(*d, join_path(prefix, "D")));

    if (m.profile.kind == ProfileKind::explicit_values) {
        const json* v = find(j, "values");
        if (!v || !v->is_array()) throw schema_error(join_path(prefix, "values"), "expected an array");
        for (std::size_t i = 0; i < v->size(); ++i)
            m.profile.values.push_back(
                get_number((*v)[i], join_path(prefix, "values[" + std::to_string(i) + "]")));
    } else {
        const json* p = find(j, "params");
        if (!p || !p->is_object()) throw schema_error(join_path(prefix, "params"), "expected an object");
        const std::string pp = join_path(prefix, "params");
        reject_unknown(*p, {"C", "alpha", "beta"}, pp);
        if (const json* c = find(*p, "C")) m.profile.C = get_number(*c, join_path(pp, "C"));
        const json* a = find(*p, "alpha");
        if (!a) throw schema_error(join_path(pp, "alpha"), "missing");
        m.profile.alpha = get_number(*a, join_path(pp, "alpha"));
        if (const json* b = find(*p, "beta")) m.profile.beta = get_number(*b, join_path(pp, "beta"));
    }

    if (const json* r = find(j, "rho_mode")) {
        const auto s = get_string(*r, join_path(prefix, "rho_mode"));
        if (s == "diagonal") m.rho_mode = RhoMode::diagonal;
        else if (s == "composed") m.rho_mode = RhoMode::composed;
        else throw schema_error(join_path(prefix, "rho_mode"), "expected diagonal or composed");
    }
    if (const json* s = find(j, "s")) m.s = get_number(*s, join_path(prefix, "s"));
    if (!(m.s >= 0.0) || !(m.s < 1.0)) throw schema_error(join_path(prefix, "s"), "must lie in [0, 1)");
    if (const json* x = find(j, "xi_law")) {
        try {
            m.xi_law = xi_law_from_string(get_string(*x, join_path(prefix, "xi_law")));
        } catch (const schema_error& e) {
            throw schema_error(join_path(prefix, "xi_law"), e.reason());
        }
    }
    if (const json* b = find(j, "basis")) {
        const std::string bp = join_path(prefix, "basis");
        if (!b->is_object()) throw schema_error(bp, "expected an object");
        reject_unknown(*b, {"kind", "seed"}, bp);
        if (const json* k = find(*b, "kind")) {
            const auto s = get_string(*k, join_path(bp, "kind"));
            if (s == "canonical") m.basis.kind = BasisKind::canonical;
            else if (s == "rotated") m.basis.kind = BasisKind::rotated;
            else throw schema_error(join_path(bp, "kind"), "expected canonical or rotated");
        }
        if (const json* s = find(*b, "seed")) m.basis.seed = get_unsigned(*s, join_path(bp, "seed"));
    }

    try {
        validate_profile_params(m.profile);
    } catch (const schema_error& e) {
        throw schema_error(join_path(prefix, e.field()), e.reason());
    }
    return m;
}

// ---------------------------------------------------------------------------
// Experiment config
// ---------------------------------------------------------------------------

struct ExperimentConfig {
    std::optional<ModelSpec> model; ///< verify suites fall back to their reference designs
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> n;
    std::optional<std::size_t> reps;
    std::optional<std::size_t> k;
    double c = 1.0;
    double level = 0.95;
    std::size_t burn_in = 0;
    unsigned threads = 0;
    std::vector<std::size_t> directions{1, 2, 3}; ///< 1-based eigenvector indices
};

inline json to_json(const ExperimentConfig& c) {
    json j;
    j["version"] = spec_version;
    j["model"] = c.model ? to_json(*c.model) : json(nullptr);
    j["seed"] = c.seed ? json(*c.seed) : json(nullptr);
    j["n"] = c.n ? json(*c.n) : json(nullptr);
    j["reps"] = c.reps ? json(*c.reps) : json(nullptr);
    j["k"] = c.k ? json(*c.k) : json(nullptr);
    j["c"] = c.c;
    j["level"] = c.level;
    j["burn_in"] = c.burn_in;
    j["directions"] = c.directions;
    return j;
}

/// FNV-1a of the canonical (key-sorted, compact) JSON of the effective config.
/// Thread count is excluded: it never changes results.
inline std::uint64_t config_hash(const ExperimentConfig& c) { return fnv1a(to_json(c).dump()); }

inline ExperimentConfig experiment_config_from_json(const json& j) {
    using namespace detail;
    if (!j.is_object()) throw schema_error("config", "expected an object");
    ExperimentConfig c;
    // A bare model spec is accepted as a config with defaults.
    if (j.contains("kind")) {
        c.model = model_spec_from_json(j);
        return c;
    }
    reject_unknown(j, {"version", "model", "seed", "n", "reps", "k", "c", "level", "burn_in", "threads",
                       "directions"},
                   "");
    check_version(j, "");
    if (const json* m = find(j, "model")) c.model = model_spec_from_json(*m, "model");
    const std::size_t dim = c.model ? c.model->profile.dim : std::numeric_limits<std::size_t>::max();
    if (const json* v = find(j, "seed")) c.seed = get_unsigned(*v, "seed");
    if (const json* v = find(j, "n")) c.n = static_cast<std::size_t>(get_unsigned(*v, "n"));
    if (const json* v = find(j, "reps")) c.reps = static_cast<std::size_t>(get_unsigned(*v, "reps"));
    if (const json* v = find(j, "k")) {
        c.k = static_cast<std::size_t>(get_unsigned(*v, "k"));
        if (*c.k < 1 || *c.k > dim) throw schema_error("k", "must lie in [1, D]");
    }
    if (const json* v = find(j, "c")) c.c = get_number(*v, "c");
    if (!(c.c > 0.0)) throw schema_error("c", "must be > 0");
    if (const json* v = find(j, "level")) c.level = get_number(*v, "level");
    if (!(c.level >= 0.0) || !(c.level < 1.0)) throw schema_error("level", "must lie in [0, 1)");
    if (const json* v = find(j, "burn_in")) c.burn_in = static_cast<std::size_t>(get_unsigned(*v, "burn_in"));
    if (const json* v = find(j, "threads")) c.threads = static_cast<unsigned>(get_unsigned(*v, "threads"));
    if (const json* v = find(j, "directions")) {
        if (!v->is_array() || v->empty()) throw schema_error("directions", "expected a non-empty array");
        c.directions.clear();
        for (std::size_t i = 0; i < v->size(); ++i) {
            const std::string p = "directions[" + std::to_string(i) + "]";
            const auto idx = static_cast<std::size_t>(get_unsigned((*v)[i], p));
            if (idx < 1 || idx > dim) throw schema_error(p, "eigen index must lie in [1, D]");
            c.directions.push_back(idx);
        }
    }
    return c;
}

inline json parse_json_text(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        // byte offset → line number
        std::size_t line = 1;
        for (std::size_t i = 0; i < std::min<std::size_t>(e.byte, text.size()); ++i)
            if (text[i] == '\n') ++line;
        throw parse_error(line, what + ": invalid JSON");
    }
}

inline std::string read_file(const std::string& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw io_error("cannot open '" + file + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw io_error("error reading '" + file + "'");
    return ss.str();
}

inline void write_file(const std::string& file, std::string_view content) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open '" + file + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw io_error("error writing '" + file + "'");
}

inline ExperimentConfig load_config(const std::string& file) {
    return experiment_config_from_json(parse_json_text(read_file(file), file));
}

// ---------------------------------------------------------------------------
// Path CSV
// ---------------------------------------------------------------------------

/// One comment line with provenance, a header x1..xD, then one row per
/// observation. LF line endings, %.17g values.
inline void write_path_csv(std::ostream& out, const Path& p) {
    const std::size_t d = p.dim();
    out << path_magic << " model_hash=" << hex64(p.model_hash) << " seed=" << p.seed
        << " replication=" << p.replication << " burn_in=" << p.burn_in << " n=" << p.size()
        << " D=" << d << '\n';
    for (std::size_t i = 0; i < d; ++i) out << (i ? "," : "") << 'x' << (i + 1);
    out << '\n';
    for (const auto& x : p.observations) {
        for (std::size_t i = 0; i < d; ++i) out << (i ? "," : "") << format_double(x[i]);
        out << '\n';
    }
}

inline std::string path_csv(const Path& p) {
    std::ostringstream ss;
    write_path_csv(ss, p);
    return ss.str();
}

/// Reads a path CSV. The provenance comment is optional; a header row is
/// required. Errors carry 1-based line numbers.
inline Path read_path_csv(std::istream& in) {
    Path p;
    std::string line;
    std::size_t lineno = 0;
    std::size_t d = 0;
    bool have_header = false;
    auto strip_cr = [](std::string& s) {
        if (!s.empty() && s.back() == '\r') s.pop_back();
    };
    while (std::getline(in, line)) {
        ++lineno;
        strip_cr(line);
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line.rfind(path_magic, 0) == 0) {
                std::istringstream ss(line.substr(path_magic.size()));
                std::string tok;
                while (ss >> tok) {
                    const auto eq = tok.find('=');
                    if (eq == std::string::npos) continue;
                    const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
                    try {
                        if (key == "model_hash") p.model_hash = std::stoull(val, nullptr, 16);
                        else if (key == "seed") p.seed = std::stoull(val);
                        else if (key == "replication") p.replication = std::stoull(val);
                        else if (key == "burn_in") p.burn_in = std::stoull(val);
                    } catch (const std::exception&) {
                        throw parse_error(lineno, "bad value for '" + key + "'");
                    }
                }
            }
            continue;
        }
        if (!have_header) {
            std::istringstream ss(line);
            std::string cell;
            while (std::getline(ss, cell, ',')) {
                ++d;
                if (cell != "x" + std::to_string(d))
                    throw parse_error(lineno, "expected header column 'x" + std::to_string(d) + "', got '" +
                                                  cell + "'");
            }
            if (d == 0) throw parse_error(lineno, "empty header");
            have_header = true;
            continue;
        }
        CoeffVector x(d);
        std::size_t col = 0;
        std::size_t pos = 0;
        while (true) {
            const std::size_t comma = line.find(',', pos);
            const std::string cell = line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
            if (col >= d) throw parse_error(lineno, "more than " + std::to_string(d) + " columns");
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (cell.empty() || end != cell.c_str() + cell.size())
                throw parse_error(lineno, "column " + std::to_string(col + 1) + ": not a number: '" + cell + "'");
            if (!std::isfinite(v))
                throw parse_error(lineno, "column " + std::to_string(col + 1) + ": non-finite value");
            x[col++] = v;
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        if (col != d)
            throw parse_error(lineno, "expected " + std::to_string(d) + " columns, got " + std::to_string(col));
        p.observations.push_back(std::move(x));
    }
    if (in.bad()) throw io_error("error reading path file");
    if (!have_header) throw parse_error(lineno == 0 ? 1 : lineno, "missing header row");
    return p;
}

inline Path load_path_csv(const std::string& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw io_error("cannot open '" + file + "' for reading");
    return read_path_csv(in);
}

// ---------------------------------------------------------------------------
// Fit export
// ---------------------------------------------------------------------------

inline json to_json(const FitDiagnostics& g) {
    return {{"projector_residual", g.projector_residual},
            {"idempotence_residual", g.idempotence_residual},
            {"symmetry_residual", g.symmetry_residual},
            {"projector_trace", g.projector_trace},
            {"dag_trace", g.dag_trace},
            {"dag_norm_product", g.dag_norm_product},
            {"eigen_trace_error", g.eigen_trace_error},
            {"moment_residual", g.moment_residual}};
}

/// Eigenvalues, kₙ, all operators as row-major nested arrays, and diagnostics.
inline json to_json(const Fit& f) {
    json j;
    j["n"] = f.n;
    j["D"] = f.dim();
    j["k_n"] = f.k_n;
    j["eigenvalues"] = f.fpca.eigenvalues();
    j["gamma_n"] = detail::matrix_json(f.gamma_n);
    j["delta_n"] = detail::matrix_json(f.delta_n);
    j["gamma_n_dag"] = detail::matrix_json(f.gamma_n_dag);
    j["rho_hat"] = detail::matrix_json(f.rho_hat);
    j["pi_hat"] = detail::matrix_json(f.pi_hat);
    j["gamma_eps_hat"] = detail::matrix_json(f.gamma_eps_hat);
    j["diagnostics"] = to_json(diagnose(f));
    return j;
}

} // namespace farlab

#endif // FARLAB_IO_HPP
