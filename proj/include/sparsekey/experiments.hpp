#pragma once

#include "sparsekey/core.hpp"
#include "sparsekey/graphon.hpp"
#include "sparsekey/optimizer.hpp"

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

namespace sparsekey {

/// Configuration problem (bad file, unknown key, invalid value). The CLI maps
/// this to exit code 1.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Every tunable of the experiment runners, loadable from a flat key = value
/// file with '#' comments. Environment variables prefixed SPARSEKEY_ override
/// file values; CLI flags override both.
struct ExperimentConfig {
  ExperimentConfig() {
    // The type-level sentinel is "unconstrained"; experiments default to caps
    // that actually bind early so the constrained arm is distinguishable.
    thresholds.lambda2 = 0.2;
    thresholds.lambda3 = 0.02;
  }

  std::string variant = "P2";  // P2 | P3 | P3prime | P3doubleprime

  // dimensions
  int n = 8;
  int m = 12;
  int nsamples = 64;
  int sigma = 4;
  int universe = 64;

  Thresholds thresholds;

  // perturbation / dynamics
  double sigma_theta = 0.05;
  double dt = 0.1;
  double noise_scale = 0.05;
  double xi = 1e-4;
  double delta_xi = 1e-4;

  // channel models
  double psi = 0.3;
  double psi_jitter = 0.1;
  double kappa_e = 0.25;
  double omega_mean = 4.0;
  double omega_jitter = 1.0;
  double omega_drift = 0.0;
  int omega_steps = 8;

  // sampling / solver
  int mc_samples = 256;
  int rate_samples = 10000;
  int sweep_points = 33;
  int iters = 80;
  double penalty_weight = 10.0;
  double langevin_weight = 1.0;
  double fig8_pct_high = 0.15;
  double fig8_pct_low = 0.05;

  std::uint64_t seed = 1;
  std::string out;

  std::string data_kind = "bernoulli";  // bernoulli | planted
  int block = 2;

  std::string graph_g = "0-1,1-2,2-0";
  std::string graph_g1 = "0-1";
  std::string graph_g2 = "0-1";

  bool parallel_arms = false;

  static ExperimentConfig from_file(const std::string& path);
  void apply(const std::map<std::string, std::string>& overrides);
  void apply_env();

  /// Every violated invariant, empty when the config is runnable.
  std::vector<std::string> validate() const;

  /// Throws ConfigError when validate() is non-empty.
  void require_valid() const;
};

/// Rectangular numeric trace with a named header; serializes with 12
/// significant digits, LF line endings, C locale.
struct CsvTrace {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::string to_csv() const;
};

std::string format_g12(double v);

enum class RunStatus { Ok = 0, BadConfig = 1, Infeasible = 2, VerifierFailure = 3 };

struct RunnerResult {
  CsvTrace trace;
  RunStatus status = RunStatus::Ok;
  std::string detail;
};

/// Deterministic synthetic data for the runners (Bernoulli entries by
/// default, or an exactly sparse planted model).
DataBatch make_data(const ExperimentConfig& config, RandomSource rng);

/// Default side information: the code of a blockwise low-passed copy of the
/// data under the seed dictionary.
SideInfo make_side_info(const ExperimentConfig& config, const DataBatch& data, RandomSource rng);

/// Assembles the solver problem from a config. With `sentinel_23` the
/// side-info and perturbation caps are lifted to the unconstrained sentinel.
ConstraintSet make_problem(const ExperimentConfig& config, ProblemVariant variant,
                           bool sentinel_23, const DataBatch& data, const SideInfo& side);

ProblemVariant parse_variant(const std::string& name);

/// Figure runners. Same config and seed give byte-identical CSV.
RunnerResult run_fig3(const ExperimentConfig& config);
RunnerResult run_fig4(const ExperimentConfig& config);
RunnerResult run_fig7(const ExperimentConfig& config);
RunnerResult run_fig8(const ExperimentConfig& config);

/// Full solver run from a config; trace schema documented in the README.
struct SolveRunResult {
  CsvTrace trace;
  RunStatus status = RunStatus::Ok;
  std::string detail;
};
SolveRunResult run_solve(const ExperimentConfig& config);

/// Key rate of the configured channel under the configured seed.
double run_keyrate(const ExperimentConfig& config);

/// Density report for the configured graph triple.
CsvTrace run_graphon(const ExperimentConfig& config);

/// Machine-readable verification report over the checker modules.
struct VerifierReport {
  std::string json;  // stable key order
  bool all_pass = false;
};
VerifierReport run_verifiers(const ExperimentConfig& config);

}  // namespace sparsekey
