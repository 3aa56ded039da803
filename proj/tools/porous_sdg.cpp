// porous-sdg: run, validate and list the built-in poroelasticity experiments.

#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "sdg/experiments.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config = 1;
constexpr int exit_solver = 2;

void print_report(const sdg::ValidationReport& rep) {
  for (const auto& e : rep.errors) std::cerr << "error: " << e << '\n';
  for (const auto& w : rep.warnings) std::cerr << "warning: " << w << '\n';
}

int cmd_validate(const std::string& path) {
  if (std::filesystem::path(path).extension() == ".csv") {
    std::ifstream in(path);
    if (!in) {
      std::cerr << "error: cannot open " << path << '\n';
      return exit_config;
    }
    const auto problems = sdg::validate_csv(in);
    for (const auto& p : problems) std::cerr << "error: " << path << ": " << p << '\n';
    if (problems.empty()) std::cout << path << ": ok\n";
    return problems.empty() ? exit_ok : exit_config;
  }
  const auto rep = sdg::validate_config_file(path);
  print_report(rep);
  if (rep.ok()) std::cout << path << ": ok\n";
  return rep.ok() ? exit_ok : exit_config;
}

int cmd_run(const std::string& path, const std::string& output) {
  sdg::ExperimentConfig cfg;
  try {
    cfg = sdg::load_config(path);
  } catch (const sdg::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_config;
  }
  if (!output.empty()) cfg.output = output;
  const auto rep = sdg::validate_config(cfg);
  print_report(rep);
  if (!rep.ok()) return exit_config;
  try {
    const auto sum = sdg::run_experiment(cfg);
    std::cout << sum.text;
  } catch (const sdg::SolverError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    for (const auto& [block, r] : e.block_residuals()) std::cerr << "  " << block << ": " << r << '\n';
    return exit_solver;
  } catch (const sdg::FixedStressError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return exit_solver;
  } catch (const sdg::MaterialError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_config;
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return exit_solver;
  }
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Staggered DG solver for Biot poroelasticity on polygonal meshes"};
  app.require_subcommand(1);

  std::string run_path, output, validate_path;
  auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
  run->add_option("config", run_path, "Experiment config (INI)")->required();
  run->add_option("-o,--output", output, "Override the output directory");

  auto* validate = app.add_subcommand("validate", "Check a config file or an emitted CSV without solving");
  validate->add_option("file", validate_path, "Config (INI) or CSV file")->required();

  auto* list = app.add_subcommand("list", "List the built-in experiments and their defaults");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_config;
  }

  if (*run) return cmd_run(run_path, output);
  if (*validate) return cmd_validate(validate_path);
  if (*list) std::cout << sdg::experiment_catalog();
  return exit_ok;
}
