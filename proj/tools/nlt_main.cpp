// Command-line front end: run experiments, sweep config directories, compare
// finished runs, and export datasets.
#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "nlt/harness.hpp"

namespace {

nlt::RunConfig resolve_config(const std::string& config_path, const std::string& preset_name) {
    if (!config_path.empty() && !preset_name.empty())
        throw nlt::ConfigError("give either a config file or --preset, not both");
    if (!config_path.empty()) return nlt::parse_config_file(config_path);
    if (!preset_name.empty()) return nlt::preset(preset_name);
    throw nlt::ConfigError("a config file or --preset is required");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Desk-scale noisy-label training engine"};
    app.require_subcommand(1);

    std::string config_path, preset_name, out_dir, resume_path;
    std::string from_file, csv_out, bin_out;
    std::string dir_a, dir_b, sweep_dir;
    long long seed_override = -1;
    int save_every = -1;

    CLI::App* cmd_run = app.add_subcommand("run", "run one experiment");
    cmd_run->add_option("config", config_path, "config file (key = value lines)");
    cmd_run->add_option("--preset", preset_name, "built-in preset name");
    cmd_run->add_option("--out", out_dir, "exact output directory");
    cmd_run->add_option("--seed", seed_override, "override train.seed");
    cmd_run->add_option("--resume", resume_path, "resume from a checkpoint file");
    cmd_run->add_option("--save-every", save_every, "write a checkpoint every k epochs");

    CLI::App* cmd_sweep = app.add_subcommand("sweep", "run every .cfg in a directory");
    cmd_sweep->add_option("dir", sweep_dir, "config directory")->required();

    CLI::App* cmd_compare = app.add_subcommand("compare", "diff two finished runs");
    cmd_compare->add_option("run_a", dir_a, "first run directory")->required();
    cmd_compare->add_option("run_b", dir_b, "second run directory")->required();

    CLI::App* cmd_export = app.add_subcommand("export-dataset", "write a dataset to csv/binary");
    cmd_export->add_option("config", config_path, "config file describing the dataset");
    cmd_export->add_option("--preset", preset_name, "built-in preset name");
    cmd_export->add_option("--from", from_file, "load an existing dataset file instead");
    cmd_export->add_option("--csv", csv_out, "csv output path");
    cmd_export->add_option("--bin", bin_out, "binary output path");
    cmd_export->add_option("--seed", seed_override, "override train.seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_run->parsed()) {
            nlt::RunConfig cfg = resolve_config(config_path, preset_name);
            if (!out_dir.empty()) cfg.out_dir = out_dir;
            if (seed_override >= 0) cfg.train.seed = static_cast<std::uint64_t>(seed_override);
            if (!resume_path.empty()) cfg.train.resume_path = resume_path;
            if (save_every >= 0) cfg.train.save_every = save_every;
            const nlt::RunOutcome out = nlt::run(cfg);
            std::printf("run %s: epochs=%zu test_acc=%.4f precision=%.4f recall=%.4f (%.1fs)\n",
                        cfg.name.c_str(), out.epochs.size(), out.final_test_accuracy,
                        out.final_selection.precision, out.final_selection.recall, out.wall_seconds);
            std::printf("artifacts: %s\n", out.paths.dir.c_str());
        } else if (cmd_sweep->parsed()) {
            if (nlt::sweep(sweep_dir) != 0) return 2;
        } else if (cmd_compare->parsed()) {
            std::cout << nlt::compare_runs(dir_a, dir_b) << "\n";
        } else if (cmd_export->parsed()) {
            if (csv_out.empty() && bin_out.empty())
                throw nlt::ConfigError("export-dataset needs --csv and/or --bin");
            nlt::Dataset ds;
            if (!from_file.empty()) {
                ds = from_file.size() > 4 && from_file.substr(from_file.size() - 4) == ".csv"
                         ? nlt::load_csv(from_file)
                         : nlt::load_binary(from_file);
            } else {
                nlt::RunConfig cfg = resolve_config(config_path, preset_name);
                if (seed_override >= 0) cfg.train.seed = static_cast<std::uint64_t>(seed_override);
                ds = nlt::build_train_dataset(cfg);
            }
            if (!csv_out.empty()) nlt::save_csv(ds, csv_out);
            if (!bin_out.empty()) nlt::save_binary(ds, bin_out);
            std::printf("dataset: %zu rows, %zu dims, %d classes\n", ds.size(), ds.dim(),
                        ds.class_count);
        }
    } catch (const nlt::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
