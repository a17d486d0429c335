#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "hhlab/experiment.hpp"

using namespace hhlab;

namespace {

ExperimentConfig from_text(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

const char* kTheta = R"(
name = theta_probe
model.d = 3
model.alpha = 3
model.a = -1
solver.kato = 0,6
data.sigma = 6/5
checks = theta_feasibility
check.theta_feasibility.decay = 0,6
)";

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string key_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const ConfigError& e) {
        return e.key;
    }
    return "";
}

}  // namespace

TEST(Config, ParsesSectionsAndRationals) {
    auto c = from_text(std::string(kTheta) + "time.T = 4 # trailing comment\n");
    EXPECT_EQ(c.name, "theta_probe");
    EXPECT_EQ(c.model.alpha, Num(3));
    EXPECT_EQ(c.model.a, -1);
    EXPECT_EQ(*c.data.sigma, Num::ratio(6, 5));
    EXPECT_DOUBLE_EQ(c.solver.T, 4.0);
    EXPECT_EQ(c.solver.kato_index.q, Exponent(6));
    ASSERT_EQ(c.checks.size(), 1u);
    EXPECT_EQ(c.checks[0], "theta_feasibility");
    EXPECT_NO_THROW(validate_config(c));
}

TEST(Config, ErrorsNameTheKey) {
    EXPECT_EQ(key_of([] { from_text("colour = red\n"); }), "colour");
    EXPECT_EQ(key_of([] { from_text("name = a\nname = b\n"); }), "name");
    EXPECT_EQ(key_of([] { from_text("name\n"); }), "line 1");
    EXPECT_EQ(key_of([] { validate_config(from_text("checks = everything\n")); }), "checks");
    EXPECT_EQ(key_of([] { validate_config(from_text("data.kind = noise\n")); }), "data.kind");
    EXPECT_EQ(key_of([] { validate_config(from_text("grid.nodes = 8\n")); }), "grid.nodes");
    EXPECT_EQ(key_of([] { validate_config(from_text("model.alpha = 1\n")); }), "model");
}

TEST(Config, InadmissibleAuxiliaryIndexNamesTheLabel) {
    auto c = from_text("checks = wellposed_contraction\nsolver.kato = 0,3\n");
    try {
        validate_config(c);
        FAIL() << "accepted an auxiliary index with alpha = p";
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.key, "solver.kato");
        EXPECT_NE(std::string(e.what()).find("kato_pair.alpha_lt_p"), std::string::npos) << e.what();
    }
}

TEST(Config, CheckSpecificValidation) {
    EXPECT_EQ(key_of([] { validate_config(from_text("checks = stability\ncheck.stability.space = 0,3,inf\n")); }),
              "check.stability.space");
    EXPECT_EQ(key_of([] { validate_config(from_text("checks = complex_case3\n")); }), "data.kind");
    EXPECT_EQ(key_of([] {
                  validate_config(from_text("model.d = 1\nmodel.alpha = 4\nmodel.a = 1\nchecks = nonexistence\n"
                                            "check.nonexistence.space = 0,1,1\ncheck.nonexistence.kappa = 1/2\n"));
              }),
              "check.nonexistence.kappa");
    EXPECT_EQ(key_of([] { validate_config(from_text("model.alpha = 3\nchecks = steady_state\n")); }), "model");
    EXPECT_EQ(key_of([] { validate_config(from_text("checks = theta_feasibility\ndata.sigma = 1\n")); }), "data.sigma");
}

TEST(Checksums, KnownVectors) {
    const std::string dir = ::testing::TempDir();
    std::ofstream(dir + "/abc.txt", std::ios::binary) << "abc";
    EXPECT_EQ(sha256_file(dir + "/abc.txt"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    std::ofstream(dir + "/empty.txt", std::ios::binary).flush();
    EXPECT_EQ(sha256_file(dir + "/empty.txt"), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Bundle, EmptyCheckListWritesOnlyTheManifest) {
    auto c = from_text("name = empty_bundle\nchecks =\n");
    ReportBundle b = run_experiment(c);
    EXPECT_EQ(b.exit_code, exit_ok);
    EXPECT_TRUE(b.results.empty());
    EXPECT_TRUE(b.manifest["files"].empty());
    EXPECT_TRUE(fs::exists(b.directory + "/manifest.json"));
    EXPECT_EQ(b.manifest["name"], "empty_bundle");
}

TEST(Bundle, ThetaReportAndExitCodes) {
    auto good = from_text(std::string(kTheta) + "check.theta_feasibility.expect = 1/6, 2/3\n");
    ReportBundle b = run_experiment(good);
    EXPECT_EQ(b.exit_code, exit_ok);
    auto report = json::parse(slurp(b.directory + "/reports/theta_feasibility.json"));
    EXPECT_EQ(report["linear"]["lower"], "1/6");
    EXPECT_EQ(report["linear"]["upper"], "2/3");
    auto bad = from_text("name = theta_wrong\n" + std::string(kTheta).substr(std::string(kTheta).find("model")) +
                         "check.theta_feasibility.expect = 0, 1\n");
    EXPECT_EQ(run_experiment(bad).exit_code, exit_inconsistent);
}

TEST(Bundle, DivergenceExitCode) {
    auto c = from_text(R"(
name = diverging
model.a = 1
grid.nodes = 128
data.kind = gaussian
data.amplitude = 20
checks = wellposed_contraction
)");
    ReportBundle b = run_experiment(c);
    EXPECT_EQ(b.exit_code, exit_divergence);
    EXPECT_TRUE(b.results.at(0).diverged);
}

TEST(Bundle, RerunsAreByteIdentical) {
    const std::string text = R"(
model.d = 3
model.alpha = 3
model.a = -1
grid.nodes = 128
time.T = 1
time.n_time = 16
data.kind = homogeneous
data.sigma = 1
data.amplitude = 0.05
data.space = 0,3,inf
solver.export = true
checks = wellposed_contraction, blowup
check.blowup.expect = false
)";
    ReportBundle a = run_experiment(from_text("name = rerun_a\n" + text));
    ReportBundle b = run_experiment(from_text("name = rerun_b\n" + text));
    ASSERT_EQ(a.manifest["files"].size(), b.manifest["files"].size());
    ASSERT_FALSE(a.manifest["files"].empty());
    for (std::size_t i = 0; i < a.manifest["files"].size(); ++i) {
        EXPECT_EQ(a.manifest["files"][i]["path"], b.manifest["files"][i]["path"]);
        EXPECT_EQ(a.manifest["files"][i]["sha256"], b.manifest["files"][i]["sha256"]);
    }
    EXPECT_TRUE(fs::exists(a.directory + "/trajectory/trajectory.json"));
    const std::string track = slurp(a.directory + "/tracks/blowup_weighted_norm.csv");
    EXPECT_EQ(track.rfind("t,value,predicted\n", 0), 0u);
}

TEST(Presets, CatalogueValidates) {
    auto names = list_presets();
    EXPECT_GE(names.size(), 10u);
    for (const auto& n : names) {
        ExperimentConfig c = load_config(preset_path(n));
        EXPECT_EQ(c.name, n);
        EXPECT_NO_THROW(validate_config(c)) << n;
    }
    EXPECT_THROW(preset_path("no_such_preset"), ConfigError);
}

TEST(Export, TrajectoryRoundTrip) {
    SemigroupCache cache;
    auto g = RadialGrid::logarithmic(3, 1e-3, 1e3, 64);
    SolverConfig cfg;
    cfg.n_time = 16;
    ModelParams m;
    Trajectory tr = picard_iterate(gaussian_field(g, 1.0), m, cfg, cache);
    const std::string dir = ::testing::TempDir() + "/export_roundtrip";
    auto files = export_trajectory(tr, dir);
    ASSERT_EQ(files.size(), tr.size() + 1);
    RadialField back = read_snapshot_csv(files.front(), 3);
    for (std::size_t i = 0; i < back.size(); ++i) {
        EXPECT_DOUBLE_EQ(back.radius(i), g->node(i));
        EXPECT_EQ(back[i], tr.snapshots[0][i]);
    }
}
