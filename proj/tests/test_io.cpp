#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "farlab/io.hpp"
#include "farlab/suites.hpp"

using namespace farlab;

namespace {

std::string field_of(const json& j, bool as_config = false) {
    try {
        if (as_config) experiment_config_from_json(j);
        else model_spec_from_json(j);
    } catch (const schema_error& e) {
        return e.field();
    }
    return "<no error>";
}

std::size_t line_of(const std::string& csv) {
    std::istringstream in(csv);
    try {
        read_path_csv(in);
    } catch (const parse_error& e) {
        return e.line();
    }
    return 0;
}

} // namespace

TEST(ModelSpecJson, RoundTrip) {
    ModelSpec spec = reference_model_spec(12, 0.3);
    spec.profile.kind = ProfileKind::laurent;
    spec.profile.beta = 2.0;
    spec.rho_mode = RhoMode::composed;
    spec.xi_law = XiLaw::uniform;
    spec.basis = {BasisKind::rotated, 99};
    const json j = to_json(spec);
    const ModelSpec back = model_spec_from_json(j);
    EXPECT_EQ(to_json(back).dump(), j.dump());
    EXPECT_EQ(FarModel::from_spec(back).hash(), FarModel::from_spec(spec).hash());

    ModelSpec ex = reference_model_spec(3);
    ex.profile.kind = ProfileKind::explicit_values;
    ex.profile.values = {1.0, 0.5, 0.3};
    EXPECT_EQ(to_json(model_spec_from_json(to_json(ex))).dump(), to_json(ex).dump());
}

TEST(ModelSpecJson, ErrorsNameTheField) {
    json j = to_json(reference_model_spec(10));
    j["params"]["alpha"] = -1.0;
    EXPECT_EQ(field_of(j), "params.alpha");
    EXPECT_EQ(field_of(json{{"version", 1}, {"model", j}}, true), "model.params.alpha");

    json unknown = to_json(reference_model_spec(10));
    unknown["colour"] = "blue";
    EXPECT_EQ(field_of(unknown), "colour");

    json version = to_json(reference_model_spec(10));
    version["version"] = 2;
    EXPECT_EQ(field_of(version), "version");

    json kind = to_json(reference_model_spec(10));
    kind["kind"] = "cubic";
    EXPECT_EQ(field_of(kind), "kind");

    json law = to_json(reference_model_spec(10));
    law["xi_law"] = "cauchy";
    EXPECT_EQ(field_of(law), "xi_law");

    json s = to_json(reference_model_spec(10));
    s["s"] = 1.0;
    EXPECT_EQ(field_of(s), "s");
}

TEST(ExperimentConfigJson, DefaultsAndErrors) {
    const ExperimentConfig c = experiment_config_from_json(json{{"version", 1}, {"seed", 7}});
    EXPECT_EQ(*c.seed, 7u);
    EXPECT_FALSE(c.model);
    EXPECT_EQ(c.level, 0.95);
    EXPECT_EQ(c.c, 1.0);
    EXPECT_EQ(field_of(json{{"version", 1}, {"level", 1.0}}, true), "level");
    EXPECT_EQ(field_of(json{{"version", 1}, {"seed", -3}}, true), "seed");
    EXPECT_EQ(field_of(json{{"version", 1}, {"threadz", 2}}, true), "threadz");
    EXPECT_EQ(field_of(json{{"seed", 1}}, true), "version");
    // A bare model spec is accepted.
    EXPECT_TRUE(experiment_config_from_json(to_json(reference_model_spec(5))).model);
}

TEST(ExperimentConfigJson, HashIsStable) {
    ExperimentConfig a;
    a.model = reference_model_spec(10);
    a.seed = 4;
    ExperimentConfig b = experiment_config_from_json(to_json(a));
    EXPECT_EQ(config_hash(a), config_hash(b));
    b.threads = 8;
    EXPECT_EQ(config_hash(a), config_hash(b));
    b.seed = 5;
    EXPECT_NE(config_hash(a), config_hash(b));
    EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(hex64(255), "00000000000000ff");
}

TEST(JsonText, ParseErrorsCarryLineNumbers) {
    try {
        parse_json_text("{\n  \"seed\": 1,\n  oops\n}", "cfg");
        FAIL();
    } catch (const parse_error& e) {
        EXPECT_EQ(e.line(), 3u);
    }
    EXPECT_THROW(read_file("/nonexistent/dir/file.json"), io_error);
    EXPECT_THROW(write_file("/nonexistent/dir/file.json", "x"), io_error);
}

TEST(PathCsv, BitExactRoundTrip) {
    ModelSpec spec = reference_model_spec(7);
    spec.basis = {BasisKind::rotated, 3};
    const FarModel m = FarModel::from_spec(spec);
    const Path p = simulate_far(m, 64, 11, 2024, 3);
    const std::string text = path_csv(p);
    std::istringstream in(text);
    const Path q = read_path_csv(in);
    ASSERT_EQ(q.size(), p.size());
    for (std::size_t t = 0; t < p.size(); ++t) EXPECT_EQ(q.observations[t], p.observations[t]);
    EXPECT_EQ(q.model_hash, p.model_hash);
    EXPECT_EQ(q.seed, 2024u);
    EXPECT_EQ(q.replication, 3u);
    EXPECT_EQ(q.burn_in, 11u);
    EXPECT_EQ(path_csv(q), text);
}

TEST(PathCsv, ParseErrors) {
    EXPECT_EQ(line_of("x1,x2\n1,2\n3\n"), 3u);
    EXPECT_EQ(line_of("x1,x2\n1,2\n3,abc\n"), 3u);
    EXPECT_EQ(line_of("# note\nx1,x3\n"), 2u);
    EXPECT_EQ(line_of("x1\n1\n2\n3,4\n"), 4u);
    EXPECT_EQ(line_of("x1\n1\nnan\n"), 3u);
    EXPECT_EQ(line_of(""), 1u);
    std::istringstream crlf("x1,x2\r\n1,2\r\n");
    EXPECT_EQ(read_path_csv(crlf).size(), 1u);
    EXPECT_THROW(load_path_csv("/nonexistent.csv"), io_error);
}

TEST(FitJson, CarriesDiagnostics) {
    const FarModel m = FarModel::from_spec(reference_model_spec(6));
    const Fit f = fit(simulate_far(m, 200, 0, 1), FitOptions{2});
    const json j = to_json(f);
    EXPECT_EQ(j.at("k_n"), 2);
    EXPECT_LE(j.at("diagnostics").at("projector_residual").get<double>(), 1e-9);
}
