#include "sparsekey/experiments.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

using sparsekey::ExperimentConfig;
using sparsekey::RunnerResult;
using sparsekey::RunStatus;

struct CommonOptions {
  std::string config_path;
  std::string out_path;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

void attach_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path, "configuration file (key = value lines)");
  cmd->add_option("--out", opts.out_path, "output path (stdout when omitted)");
  cmd->add_option("--seed", opts.seed, "seed override")->each([&opts](const std::string&) {
    opts.seed_given = true;
  });
}

ExperimentConfig load_config(const CommonOptions& opts) {
  ExperimentConfig config = opts.config_path.empty()
                                ? ExperimentConfig{}
                                : ExperimentConfig::from_file(opts.config_path);
  config.apply_env();
  if (opts.seed_given) config.seed = opts.seed;
  if (!opts.out_path.empty()) config.out = opts.out_path;
  return config;
}

void emit(const std::string& payload, const std::string& path) {
  if (path.empty()) {
    std::cout << payload;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw sparsekey::ConfigError("cannot open output path '" + path + "'");
  out << payload;
}

int finish_runner(const RunnerResult& result, const ExperimentConfig& config) {
  emit(result.trace.to_csv(), config.out);
  if (result.status == RunStatus::Infeasible) {
    std::cerr << "infeasible: " << result.detail << "\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparsekey: chance-constrained sparse secret-key generation experiments"};
  app.require_subcommand(1);

  CommonOptions opts;
  CLI::App* solve = app.add_subcommand("solve", "run the greedy solver, write the trace CSV");
  CLI::App* keyrate = app.add_subcommand("keyrate", "evaluate the configured key rate");
  CLI::App* graphon = app.add_subcommand("graphon", "densities of the configured graph triple");
  CLI::App* verify = app.add_subcommand("verify", "run every checker module, write a JSON report");
  CLI::App* fig3 = app.add_subcommand("fig3", "objective ratio trace (constrained over sentinel)");
  CLI::App* fig4 = app.add_subcommand("fig4", "key-rate ratio trace under the rate-tail problem");
  CLI::App* fig7 = app.add_subcommand("fig7", "key-rate trace with and without the sparsity cap");
  CLI::App* fig8 = app.add_subcommand("fig8", "outage sweep at two perturbation magnitudes");
  for (CLI::App* cmd : {solve, keyrate, graphon, verify, fig3, fig4, fig7, fig8})
    attach_common(cmd, opts);

  CLI11_PARSE(app, argc, argv);

  try {
    const ExperimentConfig config = load_config(opts);
    if (solve->parsed()) {
      const sparsekey::SolveRunResult result = sparsekey::run_solve(config);
      emit(result.trace.to_csv(), config.out);
      if (result.status == RunStatus::Infeasible) {
        std::cerr << "infeasible: " << result.detail << "\n";
        return 2;
      }
      return 0;
    }
    if (keyrate->parsed()) {
      const double rate = sparsekey::run_keyrate(config);
      emit("keyrate\n" + sparsekey::format_g12(rate) + "\n", config.out);
      return 0;
    }
    if (graphon->parsed()) {
      emit(sparsekey::run_graphon(config).to_csv(), config.out);
      return 0;
    }
    if (verify->parsed()) {
      const sparsekey::VerifierReport report = sparsekey::run_verifiers(config);
      emit(report.json, config.out);
      if (!report.all_pass) {
        std::cerr << "verifier failure\n";
        return 3;
      }
      return 0;
    }
    if (fig3->parsed()) return finish_runner(sparsekey::run_fig3(config), config);
    if (fig4->parsed()) return finish_runner(sparsekey::run_fig4(config), config);
    if (fig7->parsed()) return finish_runner(sparsekey::run_fig7(config), config);
    if (fig8->parsed()) return finish_runner(sparsekey::run_fig8(config), config);
  } catch (const sparsekey::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
