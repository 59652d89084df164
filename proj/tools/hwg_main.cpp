#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "hwg/errors.hpp"
#include "hwg/runner.hpp"

// exit statuses: 0 ok, 1 check failure, 2 config error, 3 capacity error
int main(int argc, char** argv) {
    CLI::App app{"hwg: fiberwise JKO dynamics on metric graphs with observable projections"};
    app.require_subcommand(1);

    hwg::RunConfig cli;
    std::string config_path;

    auto* run = app.add_subcommand("run", "run a scenario");
    run->add_option("scenario", cli.scenario, "scenario name (see `hwg list`)");
    run->add_option("--config", config_path, "JSON config file");
    auto* opt_tau = run->add_option("--tau", cli.tau, "time step");
    auto* opt_steps = run->add_option("--steps", cli.steps, "step count");
    auto* opt_horizon = run->add_option("--horizon", cli.horizon, "time horizon");
    auto* opt_seed = run->add_option("--seed", cli.seed, "64-bit master seed");
    auto* opt_out = run->add_option("--out", cli.out, "output directory");
    auto* opt_format = run->add_option("--format", cli.format, "csv | json");
    auto* opt_alpha = run->add_option("--alpha", cli.alpha, "quadratic energy parameter");
    auto* opt_eta = run->add_option("--eta", cli.eta, "mirror descent step");
    auto* opt_ttau = run->add_option("--t-tau", cli.t_tau, "mirror bridge contraction factor");
    auto* opt_loss = run->add_option("--loss", cli.loss, "mirror loss: linear | quadratic");

    std::string check;
    auto* verify = app.add_subcommand("verify", "run a verification suite");
    verify->add_option("check", check,
                       "edi | freezing | groenwall | stability | tau-refine | spectral | all")
        ->required();
    verify->add_option("--seed", cli.seed, "64-bit master seed");
    verify->add_option("--out", cli.out, "output directory");

    auto* list = app.add_subcommand("list", "list scenarios");

    CLI11_PARSE(app, argc, argv);

    try {
        if (list->parsed()) {
            for (const auto& info : hwg::list_scenarios())
                std::printf("%-24s %s\n", info.name.c_str(), info.description.c_str());
            return 0;
        }
        if (verify->parsed()) return hwg::run_verify(check, cli);
        if (run->parsed()) {
            hwg::RunConfig config = cli;
            if (!config_path.empty()) {
                config = hwg::parse_config_file(config_path);
                // explicit CLI flags win over the config file
                if (!cli.scenario.empty()) config.scenario = cli.scenario;
                if (opt_tau->count()) config.tau = cli.tau;
                if (opt_steps->count()) config.steps = cli.steps;
                if (opt_horizon->count()) config.horizon = cli.horizon;
                if (opt_seed->count()) config.seed = cli.seed;
                if (opt_out->count()) config.out = cli.out;
                if (opt_format->count()) config.format = cli.format;
                if (opt_alpha->count()) config.alpha = cli.alpha;
                if (opt_eta->count()) config.eta = cli.eta;
                if (opt_ttau->count()) config.t_tau = cli.t_tau;
                if (opt_loss->count()) config.loss = cli.loss;
            }
            if (config.scenario.empty()) {
                std::fprintf(stderr, "run: scenario name or --config required\n");
                return 2;
            }
            return hwg::run_scenario(config);
        }
    } catch (const hwg::config_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const hwg::capacity_error& e) {
        std::fprintf(stderr, "capacity error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
