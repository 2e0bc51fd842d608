#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "epiwin/commands.hpp"

namespace {

void add_common_flags(CLI::App* cmd, epiwin::RunConfig& config) {
    cmd->add_option("--input", config.input, "input CSV path")->required();
    cmd->add_option("--region", config.region, "region label to select")->required();
    cmd->add_option("--out", config.out_dir, "output directory");
    cmd->add_option("--replicates", config.replicates, "independent executions")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--seed", config.seed, "base RNG seed");
    cmd->add_option("--s-initial", config.wconfig.s_initial, "first window size [days]");
    cmd->add_option("--s-min", config.wconfig.s_min, "minimum window size [days]");
    cmd->add_option("--s-max", config.wconfig.s_max, "maximum window size [days]");
    cmd->add_option("--shift", config.wconfig.shift, "window end offset d [days]");
    cmd->add_option("--horizon", config.wconfig.horizon, "forecast length [days]");
    cmd->add_option("--particles", config.aconfig.n_particles, "accepted samples per posterior");
    cmd->add_option("--generations", config.aconfig.n_generations, "SMC generations");
    cmd->add_option("--tolerance-quantile", config.aconfig.quantile_for_next_tolerance,
                    "quantile for the next tolerance");
    cmd->add_option("--max-simulations", config.aconfig.max_simulations_per_generation,
                    "candidate budget per generation");
    cmd->add_option("--gen0-batch-factor", config.aconfig.gen0_batch_factor,
                    "generation-0 batch size as a multiple of --particles");
    cmd->add_option("--steps-per-day", config.aconfig.steps_per_day, "RK4 steps per day");
    cmd->add_option("--workers", config.aconfig.n_workers, "worker threads (0 = hardware)");
    cmd->add_option("--pop-cap", config.pop_cap,
                    "upper bound for the population parameter (0 = 100x last cases)");
    cmd->add_option("--pop-floor", config.n_pop_floor,
                    "lower bound for the population parameter (default: last cases)");
    cmd->add_option("--prior-inflation", config.options.prior_inflation,
                    "posterior-to-prior bandwidth inflation");
    cmd->add_flag("--eps-fit-best-particle", config.options.eps_fit_uses_best_particle,
                  "score fits with the best particle instead of the weighted median");
    cmd->add_option("--date-column", config.columns.date, "input date column name");
    cmd->add_option("--region-column", config.columns.region, "input region column name");
    cmd->add_option("--cases-column", config.columns.cases, "input cases column name");
    cmd->add_option("--deaths-column", config.columns.deaths, "input deaths column name");
    cmd->add_flag("--quiet", config.quiet, "suppress per-window progress lines");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Time-window SEIRD fitting with ABC-SMC"};
    app.require_subcommand(1);
    app.set_config("--config", "", "read options from an INI/TOML file");

    epiwin::RunConfig fit_config, cmp_config;
    CLI::App* fit = app.add_subcommand("fit", "fit a series window by window");
    add_common_flags(fit, fit_config);
    std::string mode_name = "past";
    fit->add_option("--mode", mode_name, "prior mode: flat or past")
        ->check(CLI::IsMember({"flat", "past"}));

    CLI::App* cmp = app.add_subcommand("compare", "paired flat-vs-past comparison");
    add_common_flags(cmp, cmp_config);

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic series");
    std::string scenario_path, synth_out = "synthetic.csv";
    synth->add_option("--scenario", scenario_path, "scenario JSON file")
        ->required()
        ->check(CLI::ExistingFile);
    synth->add_option("--out", synth_out, "output CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;  // usage errors exit 1, --help exits 0
    }

    try {
        if (fit->parsed()) {
            fit_config.mode =
                mode_name == "flat" ? epiwin::PriorMode::flat : epiwin::PriorMode::past;
            const epiwin::FitResult result = epiwin::run_fit(fit_config);
            std::cout << "wrote " << result.manifest.size() << " files under "
                      << fit_config.out_dir << "\n";
        } else if (cmp->parsed()) {
            const epiwin::CompareResult result = epiwin::run_compare(cmp_config);
            std::cout << "fit ratio fraction above 1 (all windows): "
                      << result.fraction_above_one_fit << "\n"
                      << "fit ratio fraction above 1 (windows >= 3): "
                      << result.fraction_above_one_fit_n3 << "\n";
        } else if (synth->parsed()) {
            std::ifstream in(scenario_path);
            nlohmann::json j;
            in >> j;
            const epiwin::SynthScenario sc = epiwin::scenario_from_json(j);
            const epiwin::EpidemicSeries series = epiwin::run_synth(sc, synth_out);
            std::cout << "wrote " << series.size() << " days to " << synth_out << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
