#include "sparsekey/experiments.hpp"

#include "sparsekey/langevin.hpp"
#include "sparsekey/positivity.hpp"
#include "sparsekey/secrecy.hpp"
#include "sparsekey/sparse_coder.hpp"
#include "sparsekey/spd.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <future>
#include <sstream>

namespace sparsekey {

namespace {

using OrderedJson = nlohmann::ordered_json;

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

double parse_real(const std::string& key, const std::string& value) {
  if (value == "inf" || value == "infinity") return kInf;
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' expects a real, got '" + value + "'");
  }
}

long long parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' expects an integer, got '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "on") return true;
  if (value == "0" || value == "false" || value == "off") return false;
  throw ConfigError("config: key '" + key + "' expects a boolean, got '" + value + "'");
}

}  // namespace

std::string format_g12(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string CsvTrace::to_csv() const {
  std::string out;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c) out += ',';
    out += header[c];
  }
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += format_g12(row[c]);
    }
    out += '\n';
  }
  return out;
}

void ExperimentConfig::apply(const std::map<std::string, std::string>& overrides) {
  for (const auto& [key, raw] : overrides) {
    const std::string value = trim(raw);
    if (key == "variant") variant = value;
    else if (key == "n") n = static_cast<int>(parse_int(key, value));
    else if (key == "m") m = static_cast<int>(parse_int(key, value));
    else if (key == "nsamples") nsamples = static_cast<int>(parse_int(key, value));
    else if (key == "sigma") sigma = static_cast<int>(parse_int(key, value));
    else if (key == "universe") universe = static_cast<int>(parse_int(key, value));
    else if (key == "lambda0") thresholds.lambda0 = static_cast<int>(parse_int(key, value));
    else if (key == "lambda1") thresholds.lambda1 = static_cast<int>(parse_int(key, value));
    else if (key == "lambda2") thresholds.lambda2 = parse_real(key, value);
    else if (key == "lambda3") thresholds.lambda3 = parse_real(key, value);
    else if (key == "lambda4") thresholds.lambda4 = parse_real(key, value);
    else if (key == "lambda5") thresholds.lambda5 = parse_real(key, value);
    else if (key == "lambda6") thresholds.lambda6 = parse_real(key, value);
    else if (key == "lambda7") thresholds.lambda7 = parse_real(key, value);
    else if (key == "lambda8") thresholds.lambda8 = parse_real(key, value);
    else if (key == "lambda9") thresholds.lambda9 = parse_real(key, value);
    else if (key == "nu1") thresholds.nu1 = parse_real(key, value);
    else if (key == "nu2") thresholds.nu2 = parse_real(key, value);
    else if (key == "gamma0") thresholds.gamma0 = parse_real(key, value);
    else if (key == "alpha") thresholds.alpha = parse_real(key, value);
    else if (key == "sigma_theta") sigma_theta = parse_real(key, value);
    else if (key == "dt") dt = parse_real(key, value);
    else if (key == "noise_scale") noise_scale = parse_real(key, value);
    else if (key == "xi") xi = parse_real(key, value);
    else if (key == "delta_xi") delta_xi = parse_real(key, value);
    else if (key == "psi") psi = parse_real(key, value);
    else if (key == "psi_jitter") psi_jitter = parse_real(key, value);
    else if (key == "kappa_e") kappa_e = parse_real(key, value);
    else if (key == "omega_mean") omega_mean = parse_real(key, value);
    else if (key == "omega_jitter") omega_jitter = parse_real(key, value);
    else if (key == "omega_drift") omega_drift = parse_real(key, value);
    else if (key == "omega_steps") omega_steps = static_cast<int>(parse_int(key, value));
    else if (key == "mc_samples") mc_samples = static_cast<int>(parse_int(key, value));
    else if (key == "rate_samples") rate_samples = static_cast<int>(parse_int(key, value));
    else if (key == "sweep_points") sweep_points = static_cast<int>(parse_int(key, value));
    else if (key == "iters") iters = static_cast<int>(parse_int(key, value));
    else if (key == "penalty_weight") penalty_weight = parse_real(key, value);
    else if (key == "langevin_weight") langevin_weight = parse_real(key, value);
    else if (key == "fig8_pct_high") fig8_pct_high = parse_real(key, value);
    else if (key == "fig8_pct_low") fig8_pct_low = parse_real(key, value);
    else if (key == "seed") seed = static_cast<std::uint64_t>(parse_int(key, value));
    else if (key == "out") out = value;
    else if (key == "data_kind") data_kind = value;
    else if (key == "block") block = static_cast<int>(parse_int(key, value));
    else if (key == "graph_g") graph_g = value;
    else if (key == "graph_g1") graph_g1 = value;
    else if (key == "graph_g2") graph_g2 = value;
    else if (key == "parallel_arms") parallel_arms = parse_bool(key, value);
    else throw ConfigError("config: unknown key '" + key + "'");
  }
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::map<std::string, std::string> kv;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(line_no) + " is not 'key = value'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) throw ConfigError("config: empty key at line " + std::to_string(line_no));
    kv[key] = value;
  }
  ExperimentConfig config;
  config.apply(kv);
  return config;
}

void ExperimentConfig::apply_env() {
  static const char* keys[] = {
      "variant", "n", "m", "nsamples", "sigma", "universe", "lambda0", "lambda1", "lambda2",
      "lambda3", "lambda4", "lambda5", "lambda6", "lambda7", "lambda8", "lambda9", "nu1", "nu2",
      "gamma0", "alpha", "sigma_theta", "dt", "noise_scale", "xi", "delta_xi", "psi",
      "psi_jitter", "kappa_e", "omega_mean", "omega_jitter", "omega_drift", "omega_steps",
      "mc_samples", "rate_samples", "sweep_points", "iters", "penalty_weight", "langevin_weight",
      "fig8_pct_high", "fig8_pct_low", "seed", "out", "data_kind", "block", "graph_g", "graph_g1",
      "graph_g2", "parallel_arms"};
  std::map<std::string, std::string> kv;
  for (const char* key : keys) {
    std::string env_name = "SPARSEKEY_";
    for (const char* p = key; *p; ++p)
      env_name += static_cast<char>(std::toupper(static_cast<unsigned char>(*p)));
    if (const char* value = std::getenv(env_name.c_str())) kv[key] = value;
  }
  apply(kv);
}

std::vector<std::string> ExperimentConfig::validate() const {
  std::vector<std::string> problems = validate_config(thresholds);
  auto require = [&](bool ok, const char* message) {
    if (!ok) problems.emplace_back(message);
  };
  require(variant == "P2" || variant == "P3" || variant == "P3prime" || variant == "P3doubleprime",
          "variant must be one of P2, P3, P3prime, P3doubleprime");
  require(n >= 1 && m >= 1 && nsamples >= 1, "dimensions n, m, nsamples must be >= 1");
  require(m <= thresholds.lambda0, "m must not exceed lambda0");
  require(thresholds.lambda1 <= m, "lambda1 must not exceed m");
  require(sigma >= 1 && universe >= 2 && universe - sigma >= sigma,
          "need 1 <= sigma and universe - sigma >= sigma");
  require(sigma_theta >= 0.0, "sigma_theta must be nonnegative");
  require(dt > 0.0 && thresholds.gamma0 * dt < 1.0, "need dt > 0 and gamma0 * dt < 1");
  require(noise_scale >= 0.0, "noise_scale must be nonnegative");
  require(xi > 0.0 && delta_xi > 0.0, "xi and delta_xi must be positive");
  require(psi >= 0.0 && psi <= 1.0, "psi must lie in [0,1]");
  require(psi_jitter >= 0.0, "psi_jitter must be nonnegative");
  require(kappa_e >= 0.0 && kappa_e <= 1.0, "kappa_e must lie in [0,1]");
  require(omega_mean > 0.0, "omega_mean must be positive");
  require(omega_jitter >= 0.0, "omega_jitter must be nonnegative");
  require(omega_steps >= 1, "omega_steps must be >= 1");
  require(mc_samples >= 100, "mc_samples must be >= 100");
  require(rate_samples >= 100, "rate_samples must be >= 100");
  require(sweep_points >= 2, "sweep_points must be >= 2");
  require(iters >= 1, "iters must be >= 1");
  require(penalty_weight > 0.0, "penalty_weight must be positive");
  require(langevin_weight >= 0.0, "langevin_weight must be nonnegative");
  require(fig8_pct_high > 0.0 && fig8_pct_low > 0.0, "fig8 percentages must be positive");
  require(data_kind == "bernoulli" || data_kind == "planted",
          "data_kind must be bernoulli or planted");
  require(block >= 1, "block must be >= 1");
  for (const std::string* g : {&graph_g, &graph_g1, &graph_g2}) {
    try {
      (void)SmallGraph::parse(*g);
    } catch (const std::exception& e) {
      problems.emplace_back(std::string("graph: ") + e.what());
    }
  }
  return problems;
}

void ExperimentConfig::require_valid() const {
  const auto problems = validate();
  if (!problems.empty()) throw ConfigError("config: " + problems.front());
}

DataBatch make_data(const ExperimentConfig& config, RandomSource rng) {
  Matrix values(config.n, config.nsamples);
  if (config.data_kind == "planted") {
    RandomSource dict_rng = rng.derive(1);
    Matrix atoms(config.n, config.m);
    for (int j = 0; j < config.m; ++j) {
      Vector col(config.n);
      for (int i = 0; i < config.n; ++i) col(i) = dict_rng.normal();
      atoms.col(j) = col / col.norm();
    }
    RandomSource code_rng = rng.derive(2);
    values.setZero();
    for (int s = 0; s < config.nsamples; ++s) {
      // lambda1 distinct atoms, coefficients bounded away from zero
      std::vector<int> picked;
      while (static_cast<int>(picked.size()) < config.thresholds.lambda1) {
        const int atom = code_rng.uniform_int(config.m);
        if (std::find(picked.begin(), picked.end(), atom) == picked.end()) picked.push_back(atom);
      }
      for (int atom : picked) {
        const double sign = code_rng.uniform01() < 0.5 ? -1.0 : 1.0;
        const double magnitude = 0.5 + code_rng.uniform01();
        values.col(s) += sign * magnitude * atoms.col(atom);
      }
    }
  } else {
    for (int s = 0; s < config.nsamples; ++s)
      for (int i = 0; i < config.n; ++i) values(i, s) = rng.uniform01() < 0.5 ? 0.0 : 1.0;
    // a degenerate all-zero batch cannot seed a dictionary
    if (values.norm() == 0.0) values(0, 0) = 1.0;
  }
  return DataBatch(std::move(values));
}

SideInfo make_side_info(const ExperimentConfig& config, const DataBatch& data, RandomSource rng) {
  const DataBatch smooth(blockwise_mean_filter(data.values, config.block));
  RandomSource seed_rng = rng.derive(7);
  const Dictionary dict = seed_dictionary(data, config.m, config.thresholds.lambda0, seed_rng);
  Matrix filtered = smooth.values;
  // all-zero smoothed columns are legal; the encoder returns zero columns
  const SparseCode code = sparse_encode(dict, DataBatch(std::move(filtered)), config.thresholds.lambda1);
  return SideInfo(code.coefficients);
}

ProblemVariant parse_variant(const std::string& name) {
  if (name == "P2") return ProblemVariant::P2;
  if (name == "P3") return ProblemVariant::P3;
  if (name == "P3prime") return ProblemVariant::P3prime;
  if (name == "P3doubleprime") return ProblemVariant::P3doubleprime;
  throw ConfigError("config: unknown variant '" + name + "'");
}

ConstraintSet make_problem(const ExperimentConfig& config, ProblemVariant variant,
                           bool sentinel_23, const DataBatch& data, const SideInfo& side) {
  Thresholds thresholds = config.thresholds;
  if (sentinel_23) {
    thresholds.lambda2 = kInf;
    thresholds.lambda3 = kInf;
  }
  ProblemInputs inputs{DataBatch(data.values),
                       SideInfo(side.values),
                       PerturbationModel{config.sigma_theta},
                       ScalarModel{config.psi, config.psi_jitter},
                       ScalarModel{config.omega_mean, config.omega_jitter},
                       config.omega_drift,
                       config.kappa_e,
                       config.universe,
                       config.omega_steps,
                       config.mc_samples,
                       std::nullopt,
                       PerturbationWindow{config.xi, config.delta_xi}};
  if (config.langevin_weight > 0.0)
    inputs.langevin = LangevinParams{config.thresholds.gamma0, config.noise_scale, config.dt};
  ConstraintSet problem =
      build_problem(variant, thresholds, std::move(inputs), config.langevin_weight);
  problem.penalty_weight = config.penalty_weight;
  return problem;
}

namespace {

struct Arm {
  GreedySolveResult result;
};

// One solver arm under a fixed stream; arms with equal settings and streams
// are bit-identical.
Arm run_arm(const ExperimentConfig& config, ProblemVariant variant, bool sentinel_23,
            int lambda1_override, const DataBatch& data, const SideInfo& side) {
  ExperimentConfig arm_config = config;
  if (lambda1_override > 0) arm_config.thresholds.lambda1 = lambda1_override;
  ConstraintSet problem = make_problem(arm_config, variant, sentinel_23, data, side);
  RandomSource init_rng(config.seed, 0x11);
  const Dictionary dict0 =
      seed_dictionary(data, config.m, config.thresholds.lambda0, init_rng);
  const SparseCode code0 = sparse_encode(dict0, data, arm_config.thresholds.lambda1);
  RandomSource solver_rng(config.seed, 0x22);
  return Arm{greedy_solve(problem, dict0, code0, config.iters, solver_rng)};
}

std::pair<Arm, Arm> run_two_arms(const ExperimentConfig& config, ProblemVariant variant,
                                 bool first_sentinel, bool second_sentinel, int lambda1_first,
                                 int lambda1_second, const DataBatch& data, const SideInfo& side) {
  if (config.parallel_arms) {
    auto first = std::async(std::launch::async, [&] {
      return run_arm(config, variant, first_sentinel, lambda1_first, data, side);
    });
    Arm second = run_arm(config, variant, second_sentinel, lambda1_second, data, side);
    return {first.get(), std::move(second)};
  }
  Arm first = run_arm(config, variant, first_sentinel, lambda1_first, data, side);
  Arm second = run_arm(config, variant, second_sentinel, lambda1_second, data, side);
  return {std::move(first), std::move(second)};
}

std::vector<double> padded(const std::vector<double>& v, std::size_t len) {
  std::vector<double> out = v;
  while (out.size() < len) out.push_back(out.back());
  return out;
}

// Per-iteration key rate on the iterate's pattern/channel draw; the stream is
// derived from the row index so both arms see paired draws. The iterate's
// reconstruction error attenuates the effective SNR, the same coupling the
// outage sweep applies to the perturbation distortion.
double iterate_key_rate(const ExperimentConfig& config, double mean_support,
                        double reconstruction, int row, std::uint64_t stream) {
  RandomSource rng = RandomSource(config.seed, stream).derive(static_cast<std::uint64_t>(row));
  const int cap = std::max(1, config.universe / 2);
  const int sigma =
      std::min(cap, std::max(1, static_cast<int>(std::lround(mean_support))));
  RandomSource pattern_rng = rng.derive(1);
  const auto [ab, ae] = sample_patterns(sigma, config.psi, config.universe, pattern_rng);
  int overlap = 0;
  for (int j : ab.indices)
    if (ae.contains(j)) ++overlap;
  const double psi_hat = static_cast<double>(overlap) / static_cast<double>(sigma);
  RandomSource omega_rng = rng.derive(2);
  std::vector<double> path(static_cast<std::size_t>(config.omega_steps));
  for (double& w : path) {
    w = std::max(1e-9, config.omega_mean + config.omega_jitter * (2.0 * omega_rng.uniform01() - 1.0));
    w /= 1.0 + reconstruction;
  }
  return key_rate(psi_hat, sigma, path, config.kappa_e);
}

RunnerResult two_arm_objective_trace(const ExperimentConfig& config, ProblemVariant variant) {
  RunnerResult out;
  RandomSource root(config.seed, 0x01);
  const DataBatch data = make_data(config, root.derive(1));
  const SideInfo side = make_side_info(config, data, root.derive(2));

  const auto [constrained, unconstrained] =
      run_two_arms(config, variant, false, true, 0, 0, data, side);

  const auto obj_c = constrained.result.trace.objectives();
  const auto obj_u = unconstrained.result.trace.objectives();
  const RatioTrace ratio = normalized_ratio_trace(obj_c, obj_u);
  const std::size_t len = ratio.values.size();
  const auto pc = padded(obj_c, len);
  const auto pu = padded(obj_u, len);

  const bool infeasible = constrained.result.status == SolveStatus::Infeasible ||
                          unconstrained.result.status == SolveStatus::Infeasible;
  out.trace.header = {"iteration", "objective_constrained", "objective_unconstrained", "ratio"};
  if (infeasible) out.trace.header.push_back("status");
  for (std::size_t k = 0; k < len; ++k) {
    std::vector<double> row = {static_cast<double>(k), pc[k], pu[k], ratio.values[k]};
    if (infeasible) row.push_back(2.0);
    out.trace.rows.push_back(std::move(row));
  }
  if (infeasible) {
    out.status = RunStatus::Infeasible;
    out.detail = constrained.result.status == SolveStatus::Infeasible
                     ? constrained.result.violated_constraint
                     : unconstrained.result.violated_constraint;
  }
  return out;
}

RunnerResult two_arm_keyrate_trace(const ExperimentConfig& config, ProblemVariant variant,
                                   bool second_is_sentinel, int lambda1_first,
                                   int lambda1_second, const std::vector<std::string>& header) {
  RunnerResult out;
  RandomSource root(config.seed, 0x01);
  const DataBatch data = make_data(config, root.derive(1));
  const SideInfo side = make_side_info(config, data, root.derive(2));

  const auto [first, second] = run_two_arms(config, variant, false, second_is_sentinel,
                                            lambda1_first, lambda1_second, data, side);

  const auto& rec_a = first.result.trace.records;
  const auto& rec_b = second.result.trace.records;
  const std::size_t len = std::max(rec_a.size(), rec_b.size());
  std::vector<double> rate_a(len), rate_b(len);
  for (std::size_t k = 0; k < len; ++k) {
    const IterationRecord& a = rec_a[std::min(k, rec_a.size() - 1)];
    const IterationRecord& b = rec_b[std::min(k, rec_b.size() - 1)];
    rate_a[k] = iterate_key_rate(config, a.mean_support, a.reconstruction, static_cast<int>(k), 0x30);
    rate_b[k] = iterate_key_rate(config, b.mean_support, b.reconstruction, static_cast<int>(k), 0x30);
  }
  const RatioTrace ratio = normalized_ratio_trace(rate_a, rate_b);

  const bool infeasible = first.result.status == SolveStatus::Infeasible ||
                          second.result.status == SolveStatus::Infeasible;
  out.trace.header = header;
  if (infeasible) out.trace.header.push_back("status");
  for (std::size_t k = 0; k < len; ++k) {
    std::vector<double> row = {static_cast<double>(k), rate_a[k], rate_b[k], ratio.values[k]};
    if (infeasible) row.push_back(2.0);
    out.trace.rows.push_back(std::move(row));
  }
  if (infeasible) {
    out.status = RunStatus::Infeasible;
    out.detail = first.result.status == SolveStatus::Infeasible ? first.result.violated_constraint
                                                                : second.result.violated_constraint;
  }
  return out;
}

}  // namespace

RunnerResult run_fig3(const ExperimentConfig& config) {
  config.require_valid();
  return two_arm_objective_trace(config, ProblemVariant::P2);
}

RunnerResult run_fig4(const ExperimentConfig& config) {
  config.require_valid();
  return two_arm_keyrate_trace(config, ProblemVariant::P3doubleprime, true, 0, 0,
                               {"iteration", "keyrate_constrained", "keyrate_unconstrained",
                                "ratio"});
}

RunnerResult run_fig7(const ExperimentConfig& config) {
  config.require_valid();
  // Both arms lift the side-info and perturbation caps so the sparsity budget
  // is the only contrast.
  ExperimentConfig isolated = config;
  isolated.thresholds.lambda2 = kInf;
  isolated.thresholds.lambda3 = kInf;
  return two_arm_keyrate_trace(isolated, parse_variant(config.variant), false,
                               config.thresholds.lambda1, config.m,
                               {"iteration", "keyrate_with_6a", "keyrate_without_6a", "ratio"});
}

RunnerResult run_fig8(const ExperimentConfig& config) {
  config.require_valid();
  RunnerResult out;
  RandomSource root(config.seed, 0x01);
  const DataBatch data = make_data(config, root.derive(1));
  const SideInfo side = make_side_info(config, data, root.derive(2));

  const Arm solved = run_arm(config, parse_variant(config.variant), false, 0, data, side);
  out.trace.header = {"lambda8_normalized", "outage_15pct", "outage_5pct", "ratio"};
  if (solved.result.status == SolveStatus::Infeasible) {
    out.status = RunStatus::Infeasible;
    out.detail = solved.result.violated_constraint;
    out.trace.header.push_back("status");
    return out;
  }

  const SparseCode& code = solved.result.code;
  const double fro = std::max(1e-9, code.coefficients.norm());
  const PerturbationWindow window_high{config.xi, config.fig8_pct_high * fro};
  const PerturbationWindow window_low{config.xi, config.fig8_pct_low * fro};
  const int sigma = support_sigma(code, config.universe);

  std::vector<double> rates_high(static_cast<std::size_t>(config.rate_samples));
  std::vector<double> rates_low(static_cast<std::size_t>(config.rate_samples));
  for (int s = 0; s < config.rate_samples; ++s) {
    RandomSource sample_rng = RandomSource(config.seed, 0x88).derive(static_cast<std::uint64_t>(s));
    RandomSource sle_high = sample_rng.derive(1);
    RandomSource sle_low = sample_rng.derive(1);  // identical draws, paired arms
    const SlePerturbation pert_high = sle_perturb(code, window_high, sle_high);
    const SlePerturbation pert_low = sle_perturb(code, window_low, sle_low);
    const double d_high = distortion(pert_high.code_xi_dxi.coefficients, code.coefficients);
    const double d_low = distortion(pert_low.code_xi_dxi.coefficients, code.coefficients);

    RandomSource pattern_rng = sample_rng.derive(2);
    const auto [ab, ae] = sample_patterns(sigma, config.psi, config.universe, pattern_rng);
    int overlap = 0;
    for (int j : ab.indices)
      if (ae.contains(j)) ++overlap;
    const double psi_hat = static_cast<double>(overlap) / static_cast<double>(sigma);

    RandomSource omega_rng = sample_rng.derive(3);
    std::vector<double> path(static_cast<std::size_t>(config.omega_steps));
    for (double& w : path)
      w = std::max(1e-9,
                   config.omega_mean + config.omega_jitter * (2.0 * omega_rng.uniform01() - 1.0));

    // Perturbation distortion degrades the effective SNR.
    std::vector<double> path_high = path, path_low = path;
    for (double& w : path_high) w /= 1.0 + d_high;
    for (double& w : path_low) w /= 1.0 + d_low;
    rates_high[static_cast<std::size_t>(s)] = key_rate(psi_hat, sigma, path_high, config.kappa_e);
    rates_low[static_cast<std::size_t>(s)] = key_rate(psi_hat, sigma, path_low, config.kappa_e);
  }

  double lo = rates_high[0], hi = rates_high[0];
  for (double r : rates_high) {
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  for (double r : rates_low) {
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  if (hi <= lo) hi = lo + 1.0;

  for (int k = 0; k < config.sweep_points; ++k) {
    const double frac = static_cast<double>(k) / static_cast<double>(config.sweep_points - 1);
    const double lambda8 = lo + (hi - lo) * frac;
    const double outage_high = outage(rates_high, lambda8);
    const double outage_low = outage(rates_low, lambda8);
    double ratio;
    if (outage_high == outage_low) ratio = 1.0;
    else if (outage_low > 0.0) ratio = outage_high / outage_low;
    else ratio = std::numeric_limits<double>::quiet_NaN();
    out.trace.rows.push_back({frac, outage_high, outage_low, ratio});
  }
  return out;
}

SolveRunResult run_solve(const ExperimentConfig& config) {
  config.require_valid();
  SolveRunResult out;
  RandomSource root(config.seed, 0x01);
  const DataBatch data = make_data(config, root.derive(1));
  const SideInfo side = make_side_info(config, data, root.derive(2));
  const Arm arm = run_arm(config, parse_variant(config.variant), false, 0, data, side);

  out.trace.header = {"iteration",    "objective",     "reconstruction", "mean_support",
                      "accepted",     "step_size",     "hard_6c_ok",     "hard_6e_ok",
                      "langevin_res", "psi_tail_prob", "snr_tail_prob",  "rate_tail_prob",
                      "chance_ok"};
  for (const IterationRecord& r : arm.result.trace.records)
    out.trace.rows.push_back({static_cast<double>(r.iteration), r.objective, r.reconstruction,
                              r.mean_support, r.accepted ? 1.0 : 0.0, r.step_size,
                              r.hard_6c_ok ? 1.0 : 0.0, r.hard_6e_ok ? 1.0 : 0.0,
                              r.langevin_residual, r.psi_tail_prob, r.snr_tail_prob,
                              r.rate_tail_prob, r.chance_ok ? 1.0 : 0.0});
  if (arm.result.status == SolveStatus::Infeasible) {
    out.status = RunStatus::Infeasible;
    out.detail = arm.result.violated_constraint;
  }
  return out;
}

double run_keyrate(const ExperimentConfig& config) {
  config.require_valid();
  RandomSource rng(config.seed, 0x4B);
  std::vector<double> path(static_cast<std::size_t>(config.omega_steps));
  for (double& w : path) {
    const ChannelState state(
        std::max(1e-9, config.omega_mean + config.omega_jitter * (2.0 * rng.uniform01() - 1.0)),
        config.kappa_e);
    w = state.snr;
  }
  return key_rate(config.psi, config.sigma, path, config.kappa_e);
}

CsvTrace run_graphon(const ExperimentConfig& config) {
  config.require_valid();
  const SmallGraph g = SmallGraph::parse(config.graph_g);
  const SmallGraph g1 = SmallGraph::parse(config.graph_g1);
  const SmallGraph g2 = SmallGraph::parse(config.graph_g2);
  const double t1 = hom_density(g1, g);
  const double t2 = hom_density(g2, g);
  const double gap = density_distortion(g1, g2, g);
  CsvTrace trace;
  trace.header = {"density_g1", "density_g2", "gap", "within_nu1"};
  trace.rows.push_back({t1, t2, gap, gap <= config.thresholds.nu1 ? 1.0 : 0.0});
  return trace;
}

namespace {

struct CheckAccumulator {
  OrderedJson section = OrderedJson::object();
  bool all_pass = true;

  void add(const std::string& name, bool pass, double value, double bound) {
    OrderedJson entry = OrderedJson::object();
    entry["pass"] = pass;
    entry["value"] = value;
    entry["bound"] = bound;
    section[name] = entry;
    all_pass = all_pass && pass;
  }
};

Matrix random_spd(int size, RandomSource& rng) {
  Matrix q(size, size);
  for (int j = 0; j < size; ++j)
    for (int i = 0; i < size; ++i) q(i, j) = rng.normal();
  const Eigen::HouseholderQR<Matrix> qr(q);
  const Matrix orth = qr.householderQ();
  Vector eigs(size);
  for (int i = 0; i < size; ++i) eigs(i) = std::exp(1.5 * (2.0 * rng.uniform01() - 1.0));
  return orth * eigs.asDiagonal() * orth.transpose();
}

}  // namespace

VerifierReport run_verifiers(const ExperimentConfig& config) {
  config.require_valid();
  OrderedJson report = OrderedJson::object();
  bool all_pass = true;

  // graphon
  {
    CheckAccumulator acc;
    const SmallGraph edge = SmallGraph::parse("0-1");
    const SmallGraph triangle = SmallGraph::complete(3);
    acc.add("edge_triangle_density", std::abs(hom_density(edge, triangle) - 2.0 / 3.0) <= 1e-12,
            hom_density(edge, triangle), 2.0 / 3.0);
    double worst_kk = 0.0;
    for (int k = 2; k <= 6; ++k)
      worst_kk = std::max(worst_kk, std::abs(hom_density(edge, SmallGraph::complete(k)) -
                                             (k - 1.0) / k));
    acc.add("edge_complete_closed_form", worst_kk <= 1e-12, worst_kk, 1e-12);

    RandomSource rng(config.seed, 0x6A);
    double worst_invariance = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
      const int nf = 2 + rng.uniform_int(3);
      const int ng = 2 + rng.uniform_int(4);
      std::vector<std::pair<int, int>> ef, eg;
      for (int u = 0; u < nf; ++u)
        for (int v = u + 1; v < nf; ++v)
          if (rng.uniform01() < 0.5) ef.emplace_back(u, v);
      for (int u = 0; u < ng; ++u)
        for (int v = u + 1; v < ng; ++v)
          if (rng.uniform01() < 0.5) eg.emplace_back(u, v);
      const SmallGraph f(nf, ef), g(ng, eg);
      std::vector<int> perm(static_cast<std::size_t>(ng));
      for (int i = 0; i < ng; ++i) perm[static_cast<std::size_t>(i)] = i;
      for (int i = ng - 1; i > 0; --i)
        std::swap(perm[static_cast<std::size_t>(i)],
                  perm[static_cast<std::size_t>(rng.uniform_int(i + 1))]);
      worst_invariance =
          std::max(worst_invariance, std::abs(hom_density(f, g) - hom_density(f, g.relabel(perm))));
    }
    acc.add("isomorphism_invariance", worst_invariance <= 1e-15, worst_invariance, 1e-15);

    const SmallGraph g = SmallGraph::parse(config.graph_g);
    const double gap = density_distortion(SmallGraph::parse(config.graph_g1),
                                          SmallGraph::parse(config.graph_g2), g);
    acc.add("configured_pair_gap", gap <= config.thresholds.nu1, gap, config.thresholds.nu1);

    double worst_row = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
      const int na = 1 + rng.uniform_int(3);
      const int nb = 1 + rng.uniform_int(3);
      Matrix kernel(na, nb);
      for (int i = 0; i < na; ++i) {
        double sum = 0.0;
        for (int j = 0; j < nb; ++j) {
          kernel(i, j) = 0.05 + rng.uniform01();
          sum += kernel(i, j);
        }
        for (int j = 0; j < nb; ++j) kernel(i, j) /= sum;
      }
      const StochasticKernel extended = binomial_extension(StochasticKernel(kernel), 3);
      for (Eigen::Index i = 0; i < extended.input_size(); ++i)
        worst_row = std::max(worst_row, std::abs(extended.matrix.row(i).sum() - 1.0));
    }
    acc.add("extension_rows_sum_to_one", worst_row <= 1e-12, worst_row, 1e-12);

    double worst_defect = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> table(static_cast<std::size_t>(8));
      double sum = 0.0;
      for (double& v : table) {
        v = 0.01 + rng.uniform01();
        sum += v;
      }
      for (double& v : table) v /= sum;
      worst_defect =
          std::max(worst_defect, mi_difference_identity_check(Joint3PMF(2, 2, 2, table)).defect);
    }
    acc.add("mi_chain_identity", worst_defect <= 1e-12, worst_defect, 1e-12);

    report["graphon"] = acc.section;
    all_pass = all_pass && acc.all_pass;
  }

  // spd-riemannian
  {
    CheckAccumulator acc;
    RandomSource rng(config.seed, 0x6B);
    double worst_zero = 0.0;
    double worst_roundtrip = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
      const int size = 2 + rng.uniform_int(4);
      const SPDMatrix base(random_spd(size, rng));
      const SPDMatrix point(random_spd(size, rng));
      worst_zero = std::max(worst_zero, riemannian_log(base, base).cwiseAbs().maxCoeff());
      const Matrix tangent = riemannian_log(base, point);
      const SPDMatrix back = riemannian_exp(base, tangent);
      worst_roundtrip = std::max(
          worst_roundtrip, (back.values - point.values).norm() / std::max(1.0, point.values.norm()));
    }
    acc.add("log_at_base_is_zero", worst_zero <= 1e-12, worst_zero, 1e-12);
    acc.add("exp_log_roundtrip", worst_roundtrip <= 1e-8, worst_roundtrip, 1e-8);

    // Laplacian + 0.1 I of the configured graphs as the SPD pair.
    auto graph_spd = [](const SmallGraph& g) {
      Matrix lap = Matrix::Zero(g.vertex_count(), g.vertex_count());
      for (int u = 0; u < g.vertex_count(); ++u)
        for (int v = 0; v < g.vertex_count(); ++v)
          if (u != v && g.adjacent(u, v)) {
            lap(u, u) += 1.0;
            lap(u, v) -= 1.0;
          }
      return SPDMatrix(lap + 0.1 * Matrix::Identity(g.vertex_count(), g.vertex_count()));
    };
    const SmallGraph g1 = SmallGraph::parse(config.graph_g1);
    const SmallGraph g2 = SmallGraph::parse(config.graph_g2);
    if (g1.vertex_count() == g2.vertex_count()) {
      const SPDMatrix sigma1 = graph_spd(g1);
      const SPDMatrix sigma2 = graph_spd(g2);
      const double err =
          (riemannian_exp(sigma1, riemannian_log(sigma1, sigma2)).values - sigma2.values).norm();
      acc.add("graph_pair_roundtrip", err <= 1e-8, err, 1e-8);
    }

    std::vector<std::pair<Vector, Vector>> pairs_t, pairs_r;
    for (int trial = 0; trial < 4; ++trial) {
      Vector a(3), b(3);
      for (int i = 0; i < 3; ++i) {
        a(i) = rng.normal();
        b(i) = rng.normal();
      }
      (trial % 2 == 0 ? pairs_t : pairs_r).emplace_back(a, b);
    }
    const auto scaled = relaxability_check(pairs_t, pairs_r,
                                           [](const Vector& v) { return Vector(3.0 * v); }, 1e-9);
    acc.add("relaxability_scaling", scaled.has_value() && std::abs(scaled->first - 9.0) <= 1e-9,
            scaled ? scaled->first : -1.0, 9.0);
    const auto square = relaxability_check(
        pairs_t, pairs_r,
        [](const Vector& v) { return Vector(v.array().square().matrix()); }, 1e-3);
    acc.add("relaxability_square_rejected", !square.has_value(), square.has_value() ? 1.0 : 0.0,
            0.0);

    report["spd_riemannian"] = acc.section;
    all_pass = all_pass && acc.all_pass;
  }

  // positivity
  {
    CheckAccumulator acc;
    RandomSource rng(config.seed, 0x6C);
    const double rho_max = 0.7;
    const double bound = poisson_residual_bound(64, 128, rho_max);
    double worst_residual = 0.0;
    bool all_positive = true;
    for (int trial = 0; trial < 10; ++trial) {
      const int n_atoms = 1 + rng.uniform_int(6);
      std::vector<CircleMeasure::Atom> atoms(static_cast<std::size_t>(n_atoms));
      double sum = 0.0;
      for (auto& atom : atoms) {
        atom.angle = rng.uniform01() * 6.283185307179586;
        atom.weight = 0.05 + rng.uniform01();
        sum += atom.weight;
      }
      for (auto& atom : atoms) atom.weight /= sum;
      const CircleMeasure mu(atoms);
      const DiskField field = DiskField::sample(
          64, 128, rho_max, [&](double rho, double theta) { return poisson_integral(mu, rho, theta); });
      worst_residual = std::max(worst_residual, harmonic_residual(field));
      all_positive = all_positive && positivity_check(field);
    }
    acc.add("poisson_harmonic_residual", worst_residual <= bound, worst_residual, bound);
    acc.add("poisson_positive", all_positive, all_positive ? 1.0 : 0.0, 1.0);

    double worst_re = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
      const double rho = 0.95 * rng.uniform01();
      const double theta = rng.uniform01() * 6.283185307179586;
      const double theta_p = rng.uniform01() * 6.283185307179586;
      const double re = herglotz_kernel(std::polar(rho, theta), theta_p).real();
      const double direct =
          (1.0 - rho * rho) / (1.0 - 2.0 * rho * std::cos(theta - theta_p) + rho * rho);
      worst_re = std::max(worst_re, std::abs(re - direct));
    }
    acc.add("herglotz_real_part_is_poisson", worst_re <= 1e-12, worst_re, 1e-12);

    double worst_mean = 0.0;
    for (double rho : {0.0, 0.5, 0.9, 0.95}) {
      double quad = 0.0;
      const int n_quad = 4096;
      for (int k = 0; k < n_quad; ++k) {
        const double tp = 6.283185307179586 * k / n_quad;
        quad += (1.0 - rho * rho) / (1.0 - 2.0 * rho * std::cos(0.3 - tp) + rho * rho);
      }
      worst_mean = std::max(worst_mean, std::abs(quad / n_quad - 1.0));
    }
    acc.add("poisson_kernel_unit_mean", worst_mean <= 1e-6, worst_mean, 1e-6);

    std::vector<double> probes(10);
    for (double& p : probes) p = 3.0 * rng.normal();
    const BochnerResult gaussian =
        bochner_check([](double d) { return std::exp(-0.5 * d * d); }, probes, 1e-10);
    acc.add("bochner_gaussian_psd", gaussian.positive_semidefinite, gaussian.min_eigenvalue,
            -1e-10);
    const BochnerResult bad = bochner_check(
        [](double d) { return d == 0.0 ? 1.0 : -1.0; }, {0.0, 1.0, 2.0}, 1e-10);
    acc.add("bochner_counterexample_rejected", !bad.positive_semidefinite, bad.min_eigenvalue,
            -1e-10);

    report["positivity"] = acc.section;
    all_pass = all_pass && acc.all_pass;
  }

  // secrecy
  {
    CheckAccumulator acc;
    RandomSource rng(config.seed, 0x6D);
    double worst_identity = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
      const double psi = rng.uniform01();
      const int sigma = 1 + rng.uniform_int(8);
      const double kappa = rng.uniform01();
      std::vector<double> path(static_cast<std::size_t>(1 + rng.uniform_int(20)));
      double avg1 = 0.0, avg2 = 0.0;
      for (double& w : path) {
        w = 0.1 + 10.0 * rng.uniform01();
        avg1 += mi_bob(w / sigma);
        avg2 += mi_eve(w / sigma, kappa);
      }
      avg1 /= static_cast<double>(path.size());
      avg2 /= static_cast<double>(path.size());
      const double expanded = sigma * avg1 - psi * sigma * avg2;
      worst_identity = std::max(worst_identity,
                                std::abs(key_rate(psi, sigma, path, kappa) - expanded));
    }
    acc.add("keyrate_expanded_identity", worst_identity <= 1e-12, worst_identity, 1e-12);

    bool monotone = true;
    const std::vector<double> base_path = {4.0, 6.0, 9.0};
    for (int k = 0; k + 1 < 10; ++k) {
      const double lowered = key_rate(0.1 * k, 4, base_path, 0.5);
      const double raised = key_rate(0.1 * (k + 1), 4, base_path, 0.5);
      monotone = monotone && raised <= lowered + 1e-15;
    }
    acc.add("keyrate_monotone_in_psi", monotone, monotone ? 1.0 : 0.0, 1.0);

    RandomSource pattern_rng = rng.derive(3);
    long long in_both = 0, in_ab = 0;
    for (int draw = 0; draw < 20000; ++draw) {
      const auto [ab, ae] = sample_patterns(8, 0.3, 64, pattern_rng);
      for (int j : ab.indices) {
        ++in_ab;
        if (ae.contains(j)) ++in_both;
      }
    }
    const double overlap = static_cast<double>(in_both) / static_cast<double>(in_ab);
    acc.add("pattern_overlap_calibrated", std::abs(overlap - 0.3) <= 0.02, overlap, 0.3);

    RandomSource key_rng = rng.derive(4);
    KeySession session;
    session.key_a.resize(5000);
    session.key_b.resize(5000);
    session.transcript.resize(5000);
    for (int t = 0; t < 5000; ++t) {
      session.key_a[static_cast<std::size_t>(t)] = key_rng.uniform_int(4);
      session.key_b[static_cast<std::size_t>(t)] = session.key_a[static_cast<std::size_t>(t)];
      session.transcript[static_cast<std::size_t>(t)] = key_rng.uniform_int(4);
    }
    const AlphaKeyReport alpha_report = alpha_key_check(session, 0.1, 4);
    acc.add("alpha_key_all_conditions",
            alpha_report.agree && alpha_report.leakage_ok && alpha_report.uniform,
            alpha_report.entropy_bits, 2.0 - 0.1);

    std::vector<double> rates(500);
    RandomSource rate_rng = rng.derive(5);
    for (double& r : rates) r = 5.0 * rate_rng.uniform01();
    bool outage_monotone = true;
    double prev = -1.0;
    for (int k = 0; k < 20; ++k) {
      const double level = outage(rates, 0.25 * k);
      outage_monotone = outage_monotone && level >= prev;
      prev = level;
    }
    acc.add("outage_monotone", outage_monotone, outage_monotone ? 1.0 : 0.0, 1.0);

    report["secrecy"] = acc.section;
    all_pass = all_pass && acc.all_pass;
  }

  report["all_pass"] = all_pass;
  VerifierReport out;
  out.json = report.dump(2) + "\n";
  out.all_pass = all_pass;
  return out;
}

}  // namespace sparsekey
