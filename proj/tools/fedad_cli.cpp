#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fedad/errors.hpp"
#include "fedad/experiment.hpp"

namespace {

struct CliOverrides {
    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    bool seed_set = false;
    int pool = 0;
    std::string p_csv;
};

fedad::ExperimentConfig make_config(const CliOverrides& o) {
    fedad::ExperimentConfig cfg;
    if (!o.config_path.empty()) cfg = fedad::load_config_file(o.config_path);
    cfg.out_dir = o.out_dir;
    if (o.seed_set) cfg.seed = o.seed;
    if (o.pool != 0) cfg.pool = o.pool;
    if (!o.p_csv.empty()) {
        cfg.p_list.clear();
        std::string item;
        std::stringstream ss(o.p_csv);
        while (std::getline(ss, item, ',')) {
            if (!item.empty()) cfg.p_list.push_back(std::stoi(item));
        }
    }
    return cfg;
}

void add_common_flags(CLI::App* cmd, CliOverrides& o) {
    cmd->add_option("--config", o.config_path, "experiment config file (key = value lines)");
    cmd->add_option("--out", o.out_dir, "output directory")->capture_default_str();
    cmd->add_option("--seed", o.seed, "master seed override")->each([&](const std::string&) {
        o.seed_set = true;
    });
    cmd->add_option("--pool", o.pool, "average-pooling factor override (1, 2 or 4)");
    cmd->add_option("--p", o.p_csv, "comma list of p values, overrides partition.p");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Unsupervised federated anomaly detection simulator"};
    app.require_subcommand(1);

    CliOverrides overrides;
    std::string stage_name;

    CLI::App* full = app.add_subcommand("full", "run the whole pipeline");
    add_common_flags(full, overrides);

    CLI::App* stage = app.add_subcommand("stage", "run one stage from saved artifacts");
    stage->add_option("name", stage_name, "partition | phase1 | communities | train | evaluate")
        ->required();
    add_common_flags(stage, overrides);

    CLI::App* print = app.add_subcommand("print-config", "print the effective configuration");
    add_common_flags(print, overrides);

    CLI11_PARSE(app, argc, argv);

    try {
        const fedad::ExperimentConfig cfg = make_config(overrides);
        if (print->parsed()) {
            cfg.validate();
            std::cout << fedad::print_config(cfg);
        } else if (full->parsed()) {
            fedad::run_full(cfg);
            std::cout << "outputs written to " << cfg.out_dir << "\n";
        } else if (stage->parsed()) {
            bool known = false;
            for (const auto& s : fedad::kStageNames) known = known || s == stage_name;
            if (!known) {
                std::cerr << "error: unknown stage: " << stage_name << "\n";
                return 2;
            }
            fedad::run_stage(cfg, stage_name);
            std::cout << "stage " << stage_name << " done, outputs in " << cfg.out_dir << "\n";
        }
    } catch (const fedad::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const fedad::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
