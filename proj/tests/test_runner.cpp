#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "hwg/io.hpp"
#include "hwg/runner.hpp"

using namespace hwg;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("hwg_test_" + tag);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST_CASE("scenario list covers the shipped set") {
    auto scenarios = list_scenarios();
    CHECK(scenarios.size() >= 10);
    auto has = [&](const std::string& name) {
        for (const auto& s : scenarios) {
            if (s.name == name) return true;
        }
        return false;
    };
    for (const char* name :
         {"star-transport", "quadratic-contraction", "projector-ema", "mirror-equivalence",
          "consensus", "spectral-pruning", "spectral-alignment", "spectral-selectivity",
          "sleep-mode-limit", "fixed-point-spectral", "ema-basic"}) {
        CHECK_MESSAGE(has(name), name);
    }
}

TEST_CASE("deterministic reruns produce identical bytes") {
    TempDir dir_a("det_a");
    TempDir dir_b("det_b");
    RunConfig cfg;
    cfg.scenario = "ema-basic";
    cfg.tau = 1.0;
    cfg.steps = 10;
    cfg.seed = 7;

    cfg.out = dir_a.path.string();
    CHECK(run_scenario(cfg) == 0);
    cfg.out = dir_b.path.string();
    CHECK(run_scenario(cfg) == 0);

    for (const char* file : {"ema-basic_observable.csv", "ema-basic_trajectory.csv",
                             "ema-basic_steps.csv", "ema-basic_verdicts.json"}) {
        CHECK(slurp(dir_a.path / file) == slurp(dir_b.path / file));
    }

    // the spectral diagnostics replay is deterministic too
    RunConfig sp;
    sp.scenario = "spectral-pruning";
    sp.steps = 120;
    sp.out = dir_a.path.string();
    CHECK(run_scenario(sp) == 0);
    sp.out = dir_b.path.string();
    CHECK(run_scenario(sp) == 0);
    CHECK(slurp(dir_a.path / "spectral-pruning.csv") == slurp(dir_b.path / "spectral-pruning.csv"));
}

TEST_CASE("HWG_THREADS does not change the bytes") {
    TempDir dir_seq("threads_seq");
    TempDir dir_par("threads_par");
    RunConfig cfg;
    cfg.scenario = "projector-ema";
    cfg.tau = 0.5;
    cfg.steps = 12;
    cfg.seed = 11;

    cfg.out = dir_seq.path.string();
    CHECK(run_scenario(cfg) == 0);

    setenv("HWG_THREADS", "3", 1);
    cfg.out = dir_par.path.string();
    CHECK(run_scenario(cfg) == 0);
    unsetenv("HWG_THREADS");

    CHECK(slurp(dir_seq.path / "projector-ema_observable.csv") ==
          slurp(dir_par.path / "projector-ema_observable.csv"));
    CHECK(slurp(dir_seq.path / "projector-ema_verdicts.json") ==
          slurp(dir_par.path / "projector-ema_verdicts.json"));
}

TEST_CASE("every scenario round-trips through run") {
    TempDir dir("roundtrip");
    for (const auto& info : list_scenarios()) {
        if (info.name.rfind("custom-", 0) == 0) continue; // need config payloads
        RunConfig cfg;
        cfg.scenario = info.name;
        cfg.out = (dir.path / info.name).string();
        cfg.steps = 8;
        cfg.tau = 0.5;
        if (info.name == "consensus") cfg.tau = 1.0 / 32.0;
        if (info.name == "consensus") cfg.steps = 64;
        INFO(info.name);
        CHECK(run_scenario(cfg) == 0);
    }
}

TEST_CASE("config file parsing") {
    TempDir dir("config");
    fs::path good = dir.path / "good.json";
    {
        std::ofstream out(good);
        out << R"({"scenario": "ema-basic", "tau": 0.5, "steps": 4, "seed": 9,)"
            << "\n"
            << R"( "out": ")" << (dir.path / "out").string() << R"("})" << "\n";
    }
    RunConfig cfg = parse_config_file(good.string());
    CHECK(cfg.scenario == "ema-basic");
    CHECK(cfg.tau == 0.5);
    CHECK(cfg.steps == 4);
    CHECK(cfg.seed == 9);
    CHECK(run_scenario(cfg) == 0);

    fs::path bad = dir.path / "bad.json";
    {
        std::ofstream out(bad);
        out << "{\n  \"scenario\": \"ema-basic\",\n  broken\n}\n";
    }
    bool threw = false;
    try {
        (void)parse_config_file(bad.string());
    } catch (const config_error& e) {
        threw = true;
        CHECK(e.line == 3);
        CHECK(e.column >= 1);
    }
    CHECK(threw);
    // no partial outputs were created for the malformed config
    CHECK_FALSE(fs::exists(dir.path / "out" / "bad"));
}

TEST_CASE("custom scenario from a config payload") {
    TempDir dir("custom");
    nlohmann::json config{
        {"scenario", "custom-quadratic"},
        {"tau", 0.5},
        {"steps", 5},
        {"alpha", 1.0},
        {"out", (dir.path / "out").string()},
        {"graph", {{"edges", {{0, 1, 1.0}, {0, 2, 1.0}, {0, 3, 1.0}}}}},
        {"field",
         {{{"fiber", "x0"},
           {"weight", 1.0},
           {"measure",
            {{{"vertex", 1}, {"mass", 0.5}}, {{"vertex", 2}, {"mass", 0.5}}}}}}},
        {"targets", {{"x0", {{{"vertex", 3}, {"mass", 1.0}}}}}},
    };
    fs::path path = dir.path / "custom.json";
    {
        std::ofstream out(path);
        out << config.dump(2) << "\n";
    }
    RunConfig cfg = parse_config_file(path.string());
    CHECK(run_scenario(cfg) == 0);
    CHECK(fs::exists(dir.path / "out" / "custom-quadratic_trajectory.csv"));
    CHECK(fs::exists(dir.path / "out" / "custom-quadratic_steps.csv"));
}

TEST_CASE("custom spectral scenario from a network spec") {
    TempDir dir("spectral_cfg");
    nlohmann::json config{
        {"scenario", "custom-spectral"},
        {"steps", 50},
        {"out", (dir.path / "out").string()},
        {"network",
         {{"inputs", 2},
          {"outputs", 1},
          {"p", {{0.6, 0.4}}},
          {"r", {{1.0, 1.0}}},
          {"theta", {{0.0, 3.14159265358979312}}},
          {"a", {1.0}},
          {"b", {0.0}}}},
        {"psi", {1.0, 1.0}},
        {"phi", {2.0}},
    };
    fs::path path = dir.path / "net.json";
    {
        std::ofstream out(path);
        out << config.dump(2) << "\n";
    }
    RunConfig cfg = parse_config_file(path.string());
    CHECK(run_scenario(cfg) == 0);
    // per-synapse diagnostics header present
    std::string csv = slurp(dir.path / "out" / "custom-spectral.csv");
    CHECK(csv.find("p_0_0") != std::string::npos);
    CHECK(csv.find("theta_1_0") != std::string::npos);
    CHECK(csv.find("pressure_residual_0") != std::string::npos);
}

TEST_CASE("verify suites pass on shipped scenarios") {
    TempDir dir("verify");
    RunConfig cfg;
    cfg.seed = 7;
    cfg.out = dir.path.string();
    CHECK(run_verify("edi", cfg) == 0);
    CHECK(run_verify("spectral", cfg) == 0);
    CHECK_THROWS_AS(run_verify("nonsense", cfg), invalid_argument);
}

TEST_CASE("json round trips for graphs, measures, fields") {
    MetricGraph g = star_tree({1.0, 2.0});
    nlohmann::json gj = graph_to_json(g);
    MetricGraph g2 = graph_from_json(gj);
    CHECK(g2.vertex_count() == g.vertex_count());
    CHECK(g2.edge_count() == g.edge_count());
    CHECK(g2.edge(1).length == 2.0);

    DiscreteMeasure m = DiscreteMeasure::make(
        {{vertex_point(1), 0.25}, {edge_point(g, 1, 0.75), 0.75}});
    DiscreteMeasure m2 = measure_from_json(measure_to_json(m), g);
    CHECK(m2.linf_gap(m) == 0.0);

    MemoryField f({{"a", 0.5, m}, {"b", 0.5, DiscreteMeasure::dirac(vertex_point(0))}});
    MemoryField f2 = field_from_json(field_to_json(f), g);
    CHECK(f2.fiber("a").measure == m);
    CHECK(f2.fiber("b").weight == 0.5);
}

TEST_CASE("unknown scenario errors out") {
    RunConfig cfg;
    cfg.scenario = "does-not-exist";
    CHECK_THROWS_AS(run_scenario(cfg), invalid_argument);
}
