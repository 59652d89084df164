#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace hwg {

// Config file problem with position info; maps to exit status 2.
class config_error : public std::runtime_error {
public:
    config_error(const std::string& what, int line_, int column_)
        : std::runtime_error(what), line(line_), column(column_) {}
    int line = 0;
    int column = 0;
};

struct RunConfig {
    std::string scenario;
    double tau = 1.0;
    std::vector<double> tau_list;
    int steps = 10;
    double horizon = 0.0; // when > 0, overrides steps via horizon / tau
    std::uint64_t seed = 1;
    std::string out = "hwg_out";
    std::string format = "csv"; // csv | json
    double alpha = 1.0;
    double eta = 0.1;
    double t_tau = 0.5;
    std::string loss = "linear"; // linear | quadratic
    nlohmann::json extra;        // scenario-specific payload (graph, field, ...)
};

// Reads a JSON config; parse problems raise config_error with line/column.
RunConfig parse_config_file(const std::string& path);
void apply_config_json(RunConfig& config, const nlohmann::json& j);

struct ScenarioInfo {
    std::string name;
    std::string description;
};

std::vector<ScenarioInfo> list_scenarios();

// Runs one scenario; writes trajectory/verdict artifacts under config.out.
// Returns 0 when every check passed, 1 otherwise. Throws config_error /
// capacity_error / invalid_argument for the corresponding CLI statuses.
int run_scenario(const RunConfig& config);

// `verify` subcommands: edi, freezing, groenwall, stability, tau-refine,
// spectral, all. Writes machine-readable verdicts and returns 0/1.
int run_verify(const std::string& check, const RunConfig& config);

} // namespace hwg
