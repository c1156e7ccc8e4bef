#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "countspec/runner.hpp"

namespace {

std::string default_out_dir(const std::string& config_path) {
  std::filesystem::path p(config_path);
  return p.stem().string() + "_run";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"count-data model estimation and specification search"};
  app.require_subcommand(1);

  std::string config_path;
  std::string grid_path;
  std::string out_dir;
  std::string sweep_csv = "sweep.csv";
  int n_seeds = 5;

  CLI::App* cmd_run = app.add_subcommand("run", "search for specifications");
  cmd_run->add_option("config", config_path, "configuration file")->required();
  cmd_run->add_option("--out", out_dir, "run folder (default: <config stem>_run)");

  CLI::App* cmd_fit = app.add_subcommand("fit", "estimate the Manual_Fit model");
  cmd_fit->add_option("config", config_path, "configuration file")->required();
  cmd_fit->add_option("--out", out_dir, "run folder (default: <config stem>_run)");

  CLI::App* cmd_sweep = app.add_subcommand("sweep", "hyperparameter grid sweep");
  cmd_sweep->add_option("config", config_path, "configuration file")->required();
  cmd_sweep->add_option("grid", grid_path, "grid file (JSON)")->required();
  cmd_sweep->add_option("--seeds", n_seeds, "seeded runs per grid point");
  cmd_sweep->add_option("--csv", sweep_csv, "output CSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    countspec::RunConfig cfg = countspec::load_config(config_path);
    if (!cfg.out_dir) cfg.out_dir = out_dir.empty() ? default_out_dir(config_path) : out_dir;

    if (cmd_run->parsed()) return countspec::run(cfg, std::cout).exit_code;
    if (cmd_fit->parsed()) return countspec::fit_single(cfg, std::cout).exit_code;
    if (cmd_sweep->parsed()) {
      std::ifstream in(grid_path);
      if (!in) {
        std::cout << "error: cannot open grid file '" << grid_path << "'\n";
        return countspec::kConfigError;
      }
      nlohmann::json grid;
      try {
        grid = nlohmann::json::parse(in);
      } catch (const nlohmann::json::parse_error& e) {
        std::cout << "error: grid is not valid JSON: " << e.what() << '\n';
        return countspec::kConfigError;
      }
      return countspec::sweep(cfg, grid, n_seeds, sweep_csv, std::cout);
    }
  } catch (const countspec::config_error& e) {
    std::cout << "error: " << e.what() << '\n';
    return countspec::kConfigError;
  } catch (const countspec::data_error& e) {
    std::cout << "error: " << e.what() << '\n';
    return countspec::kDataError;
  }
  return countspec::kConfigError;
}
