#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hol/experiment.hpp"

using namespace hol;

#define EXPECT_THROW_KIND(stmt, expected)                     \
    do {                                                      \
        try {                                                 \
            stmt;                                             \
            ADD_FAILURE() << "no exception from " #stmt;      \
        } catch (const Error& e) {                            \
            EXPECT_EQ(e.kind(), ErrorKind::expected) << e.what(); \
        }                                                     \
    } while (0)

namespace {

json minimal(const std::string& kind) {
    return {{"schema_version", 1}, {"experiment", kind}, {"automorphism", {{"kind", "parabolic"}, {"parameter", 1.0}}}};
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST(Config, RejectsMalformed) {
    EXPECT_THROW_KIND(config_from_json(json::array()), ConfigInvalid);
    json j = minimal("iterate");
    j["schema_version"] = 2;
    EXPECT_THROW_KIND(config_from_json(j), ConfigInvalid);
    j = minimal("no-such-thing");
    EXPECT_THROW_KIND(config_from_json(j), ConfigInvalid);
    j = minimal("iterate");
    j["extra"] = 1;
    EXPECT_THROW_KIND(config_from_json(j), ConfigInvalid);
    j = minimal("iterate");
    j["id"] = "../escape";
    EXPECT_THROW_KIND(config_from_json(j), ConfigInvalid);
    j = minimal("iterate");
    j.erase("schema_version");
    EXPECT_THROW_KIND(config_from_json(j), ConfigInvalid);
}

TEST(Config, AliasesAndRoundTrip) {
    EXPECT_EQ(config_from_json(minimal("eigen-verify")).kind, "eig-verify");
    EXPECT_EQ(config_from_json(minimal("fundamental-domain")).kind, "domain-plot");
    for (const auto& k : experiment_kinds()) {
        const auto c = default_config(k);
        const auto back = config_from_json(c.to_json());
        EXPECT_EQ(back.to_json().dump(), c.to_json().dump()) << k;
    }
}

TEST(Config, MissingParamIsConfigInvalid) {
    auto c = config_from_json(minimal("iterate"));
    EXPECT_THROW_KIND(run_experiment(c), ConfigInvalid);
    auto d = default_config("thin-select");
    d.params["candidates"] = "nowhere";
    EXPECT_THROW_KIND(run_experiment(d), ConfigInvalid);
    auto e = default_config("iterate");
    e.automorphism = {{"kind", "elliptic"}, {"parameter", 1.0}};
    EXPECT_THROW(run_experiment(e), Error);
}

TEST(Config, OverridesApply) {
    auto c = default_config("eig-outer");
    apply_overrides(c, {std::uint64_t(7), std::int64_t(30), 1e-3});
    EXPECT_EQ(c.seed, 7u);
    EXPECT_EQ(c.params["n_tile"], 30);
    EXPECT_EQ(c.tolerances["eigenrelation"], 1e-3);
}

TEST(Experiment, EveryDefaultPasses) {
    for (const auto& k : experiment_kinds()) {
        const auto r = run_experiment(default_config(k));
        EXPECT_TRUE(r.passed) << k << ": " << r.report["assertions"].dump();
        EXPECT_FALSE(r.report["assertions"].empty()) << k;
    }
}

TEST(Experiment, FailedAssertionStillReports) {
    auto c = default_config("eig-outer");
    c.tolerances["eigenrelation"] = -1.0;
    const auto r = run_experiment(c);
    EXPECT_FALSE(r.passed);
    EXPECT_TRUE(r.report["results"].contains("eigenrelation_error"));
}

TEST(Experiment, SingularRejectsAtomOffJ) {
    auto c = default_config("eig-singular");
    c.params["atoms"] = {{{"s", 1.5}, {"mass", 1.0}}};
    EXPECT_THROW(run_experiment(c), Error);
}

TEST(Experiment, ParabolicOuterRuns) {
    auto c = default_config("eig-outer");
    c.automorphism = {{"kind", "parabolic"}, {"parameter", 1.0}};
    c.params["lambda"] = 1.0;
    c.params["lambda_reference"] = 1.0;
    c.params.erase("lambda_inadmissible");
    const auto r = run_experiment(c);
    EXPECT_TRUE(r.passed) << r.report["assertions"].dump();
}

TEST(Experiment, ClassifyElliptic) {
    auto c = default_config("classify");
    c.automorphism = {{"theta", 2.0}, {"p", {0.1, 0.0}}};
    c.params["expected"] = "elliptic";
    const auto r = run_experiment(c);
    EXPECT_TRUE(r.passed);
    EXPECT_FALSE(r.report["results"].contains("normal_form"));
}

TEST(Experiment, WritesFilesByteIdentically) {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "hol_experiment_test";
    fs::remove_all(dir);
    const auto c = default_config("domain-plot");
    const auto p1 = write_experiment(run_experiment(c), (dir / "a").string());
    const auto p2 = write_experiment(run_experiment(c), (dir / "b").string());
    ASSERT_EQ(p1.size(), 2u);
    EXPECT_EQ(fs::path(p1[0]).filename(), "domain-plot.report.json");
    EXPECT_EQ(fs::path(p1[1]).filename(), "domain-plot.domain.csv");
    for (std::size_t i = 0; i < p1.size(); ++i) EXPECT_EQ(slurp(p1[i]), slurp(p2[i]));
    fs::remove_all(dir);
}

TEST(Plot, ThreeKinds) {
    const auto lim = run_experiment(default_config("orbit-limits")).report;
    const auto csv = emit_plot_data(lim, "orbit-convergence");
    EXPECT_EQ(csv[0], '#');
    std::istringstream in(csv);
    const auto t = parse_csv(in);
    EXPECT_EQ(t.header, (std::vector<std::string>{"n", "log10_residual"}));
    EXPECT_GT(t.rows.size(), 10u);

    const auto outer = run_experiment(default_config("eig-outer")).report;
    std::istringstream tin(emit_plot_data(outer, "boundary-tiling"));
    const auto tt = parse_csv(tin);
    EXPECT_EQ(tt.header[2], "tile_index");
    EXPECT_GT(tt.rows.size(), 100u);

    const auto eb = run_experiment(default_config("eig-blaschke")).report;
    std::istringstream bin(emit_plot_data(eb, "blaschke-partials"));
    const auto bt = parse_csv(bin);
    for (const auto& row : bt.rows) EXPECT_LE(row[1], row[2] * (1 + 1e-12));

    EXPECT_THROW_KIND(emit_plot_data(eb, "histogram"), UnknownReportKind);
    EXPECT_THROW(emit_plot_data(eb, "orbit-convergence"), Error);
}
