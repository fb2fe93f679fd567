// Monte Carlo driver for the byzdet library: runs experiment configs or
// built-in presets, writes sweep CSVs, and prints network diagnostics.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "byzdet/simulation.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitDetector = 2;
constexpr int kExitIo = 3;

struct RunArgs {
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    bool seed_set = false;
    int trials = 0;
    int workers = 0;
};

void apply_overrides(byzdet::ExperimentConfig& cfg, const RunArgs& args) {
    if (args.seed_set) cfg.seed = args.seed;
    if (args.trials > 0) cfg.trials = args.trials;
    if (args.workers > 0) cfg.workers = args.workers;
}

int run_experiment(const byzdet::ExperimentConfig& cfg, const std::string& out_dir,
                   const std::string& stem) {
    const fs::path dir(out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);

    const byzdet::SweepResult result = byzdet::run_sweep(cfg);
    const fs::path csv = dir / (stem + ".csv");
    byzdet::emit_csv(result.records, csv.string());
    std::cout << "wrote " << result.records.size() << " records to " << csv.string() << "\n";
    if (!result.errors.empty()) {
        for (const auto& e : result.errors) std::cerr << "detector error: " << e << "\n";
        return kExitDetector;
    }
    return kExitOk;
}

int run_estimator(const byzdet::ExperimentConfig& cfg, const std::string& out_dir) {
    const fs::path dir(out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);

    const auto records = byzdet::run_estimator_study(cfg);
    const fs::path csv = dir / "estimator_study.csv";
    std::ofstream out(csv);
    if (!out) throw std::runtime_error("cannot open " + csv.string());
    byzdet::emit_estimator_csv(records, out);
    std::cout << "wrote " << records.size() << " records to " << csv.string() << "\n";
    return kExitOk;
}

void print_checks(const byzdet::ExperimentConfig& cfg) {
    for (const auto& diag : byzdet::run_checks(cfg)) {
        std::printf("network N=%d N_ref=%d q=%d\n", diag.coord.n_sensors,
                    diag.coord.n_reference, diag.coord.q_bits);
        std::printf("  reference sensors: anchor mass %.9f -> assumption %s\n",
                    diag.assumption.mass, diag.assumption.holds ? "holds" : "VIOLATED");
        std::printf("  blinding attack product (glrt weights):  %.6f\n", diag.blinding_glrt);
        std::printf("  blinding attack product (score weights): %.6f\n", diag.blinding_lmpt);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"byzdet-sim: distributed quantized detection under Byzantine attacks"};
    app.require_subcommand(1);

    RunArgs args;

    auto* run = app.add_subcommand("run", "run an experiment config file");
    std::string config_path;
    run->add_option("config", config_path, "config file (key = value lines)")->required();
    run->add_option("--out", args.out_dir, "output directory");
    run->add_option("--seed", args.seed, "override master seed")
        ->each([&args](const std::string&) { args.seed_set = true; });
    run->add_option("--trials", args.trials, "override trial count");
    run->add_option("--workers", args.workers, "override worker count");

    auto* pre = app.add_subcommand("preset", "run a built-in experiment preset");
    std::string preset_name;
    pre->add_option("name", preset_name, "preset name (see list-presets)")->required();
    pre->add_option("--out", args.out_dir, "output directory");
    pre->add_option("--seed", args.seed, "override master seed")
        ->each([&args](const std::string&) { args.seed_set = true; });
    pre->add_option("--trials", args.trials, "override trial count");
    pre->add_option("--workers", args.workers, "override worker count");

    auto* list = app.add_subcommand("list-presets", "list built-in presets");

    auto* check = app.add_subcommand(
        "check", "print reference-sensor and blinding diagnostics for a config or preset");
    std::string check_target;
    check->add_option("config", check_target, "config file path or preset name")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (list->parsed()) {
            for (const auto& name : byzdet::preset_names()) std::cout << name << "\n";
            return kExitOk;
        }
        if (run->parsed()) {
            byzdet::ExperimentConfig cfg = byzdet::parse_config_file(config_path);
            apply_overrides(cfg, args);
            return run_experiment(cfg, args.out_dir,
                                  fs::path(config_path).stem().string());
        }
        if (pre->parsed()) {
            byzdet::ExperimentConfig cfg = byzdet::preset(preset_name);
            apply_overrides(cfg, args);
            if (preset_name == "estimator") return run_estimator(cfg, args.out_dir);
            return run_experiment(cfg, args.out_dir, preset_name);
        }
        if (check->parsed()) {
            byzdet::ExperimentConfig cfg;
            if (fs::exists(check_target))
                cfg = byzdet::parse_config_file(check_target);
            else
                cfg = byzdet::preset(check_target);
            print_checks(cfg);
            return kExitOk;
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::ios_base::failure& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::runtime_error& e) {
        const std::string what = e.what();
        if (what.find("cannot open") != std::string::npos ||
            what.find("write failed") != std::string::npos) {
            std::cerr << "io error: " << what << "\n";
            return kExitIo;
        }
        std::cerr << "runtime error: " << what << "\n";
        return kExitDetector;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDetector;
    }
    return kExitOk;
}
