#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "mivabo/errors.hpp"
#include "mivabo/experiment.hpp"

namespace {

int cmd_run(const std::string& config_path) {
  mivabo::ExperimentConfig cfg;
  try {
    cfg = mivabo::ExperimentConfig::load_file(config_path);
  } catch (const mivabo::Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }
  if (const char* dir = std::getenv("MIVABO_OUTPUT_DIR"); dir && *dir) cfg.output_dir = dir;
  try {
    const auto out = mivabo::run_experiment(cfg);
    std::cout << "wrote " << out.traces.size() << " traces to " << cfg.output_dir << '\n';
  } catch (const mivabo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

int cmd_replay(const std::string& trace_path) {
  std::ifstream in(trace_path);
  if (!in) {
    std::cerr << "cannot open " << trace_path << '\n';
    return 1;
  }
  try {
    const auto rep = mivabo::replay_trace(in);
    if (rep.ok()) {
      std::cout << "ok: " << rep.rows << " rows\n";
      return 0;
    }
    std::cout << "incumbent mismatch at t =";
    for (int t : rep.mismatched_rows) std::cout << ' ' << t;
    std::cout << '\n';
  } catch (const std::exception& e) {
    std::cerr << "replay failed: " << e.what() << '\n';
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mixed-variable Bayesian optimization experiments"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("config", config_path, "JSON config")->required();

  std::string trace_path;
  auto* replay = app.add_subcommand("replay", "check the incumbent column of a trace");
  replay->add_option("trace", trace_path, "trace CSV")->required();

  auto* list = app.add_subcommand("list-tasks", "print builtin task names");

  CLI11_PARSE(app, argc, argv);

  if (*run) return cmd_run(config_path);
  if (*replay) return cmd_replay(trace_path);
  if (*list) {
    for (const auto& name : mivabo::builtin_task_names()) std::cout << name << '\n';
    std::cout << "table (csv + domain)\n";
    return 0;
  }
  return 2;
}
