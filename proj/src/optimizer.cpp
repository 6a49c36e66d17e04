#include "sparsekey/optimizer.hpp"

#include "sparsekey/secrecy.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sparsekey {

namespace {

bool finite_cap(double cap) { return std::isfinite(cap); }

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

// Scenario draws fixed for a whole solve; the penalized objective is a
// deterministic function of the iterate given these.
struct Scenario {
  Matrix sle_noise1;  // sqrt(xi)-stage Gaussian field
  Matrix sle_noise2;  // reciprocal-stage Gaussian field
};

Scenario draw_scenario(Eigen::Index rows, Eigen::Index cols, RandomSource rng) {
  Scenario s;
  s.sle_noise1.resize(rows, cols);
  s.sle_noise2.resize(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) s.sle_noise1(i, j) = rng.normal();
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) s.sle_noise2(i, j) = rng.normal();
  return s;
}

// Fixed-draw version of the perturbation channel, so the 6.e penalty is a
// smooth function of the iterate. Mirrors sle_perturb with scenario noise.
double sle_distortion_fixed(const Matrix& code, const PerturbationWindow& window,
                            const Scenario& scenario) {
  const double sqrt_xi = std::sqrt(window.xi);
  double sum = 0.0;
  for (Eigen::Index j = 0; j < code.cols(); ++j) {
    for (Eigen::Index i = 0; i < code.rows(); ++i) {
      if (code(i, j) == 0.0) continue;
      const double staged = code(i, j) + sqrt_xi * scenario.sle_noise1(i, j);
      double denom = staged + scenario.sle_noise2(i, j);
      if (std::abs(denom) < 1e-6) denom = denom < 0.0 ? -1e-6 : 1e-6;
      const double kick = window.delta_xi / denom;
      sum += kick * kick;
    }
  }
  return sum / static_cast<double>(code.size());
}

Matrix sle_distortion_gradient(const Matrix& code, const PerturbationWindow& window,
                               const Scenario& scenario) {
  const double sqrt_xi = std::sqrt(window.xi);
  Matrix grad = Matrix::Zero(code.rows(), code.cols());
  const double scale = 1.0 / static_cast<double>(code.size());
  for (Eigen::Index j = 0; j < code.cols(); ++j) {
    for (Eigen::Index i = 0; i < code.rows(); ++i) {
      if (code(i, j) == 0.0) continue;
      const double staged = code(i, j) + sqrt_xi * scenario.sle_noise1(i, j);
      const double denom = staged + scenario.sle_noise2(i, j);
      if (std::abs(denom) < 1e-6) continue;  // clamped region, flat
      grad(i, j) = scale * window.delta_xi * window.delta_xi * (-2.0) / (denom * denom * denom);
    }
  }
  return grad;
}

struct PenaltyWeights {
  double w6c;
  double w6e;
};

struct Objective {
  double penalized = 0.0;
  double reconstruction = 0.0;
  double side_info_excess = 0.0;
  double sle_excess = 0.0;
  double langevin_defect = 0.0;
};

class ProblemEvaluator {
 public:
  ProblemEvaluator(const ConstraintSet& problem, RandomSource scenario_rng)
      : problem_(problem),
        scenario_(draw_scenario(problem.inputs.side_info.values.rows(),
                                problem.inputs.side_info.values.cols(), scenario_rng)) {}

  Objective evaluate(const Matrix& atoms, const Matrix& code_values,
                     const Matrix* langevin_target, const PenaltyWeights& weights) const {
    const auto& in = problem_.inputs;
    Objective out;
    const double entries =
        static_cast<double>(in.data.values.rows()) * static_cast<double>(in.data.values.cols());
    double nnz = 0.0;
    for (Eigen::Index j = 0; j < code_values.cols(); ++j)
      for (Eigen::Index i = 0; i < code_values.rows(); ++i)
        if (code_values(i, j) != 0.0) nnz += 1.0;
    out.reconstruction = ((in.data.values - atoms * code_values).squaredNorm() +
                          in.perturbation.sigma_theta * in.perturbation.sigma_theta * nnz) /
                         entries;
    out.penalized = out.reconstruction;

    if (finite_cap(problem_.thresholds.lambda2)) {
      const double d = distortion(code_values, in.side_info.values);
      out.side_info_excess = std::max(0.0, d - problem_.thresholds.lambda2);
      out.penalized += weights.w6c * out.side_info_excess * out.side_info_excess;
    }
    if (finite_cap(problem_.thresholds.lambda3) && in.window) {
      const double d = sle_distortion_fixed(code_values, *in.window, scenario_);
      out.sle_excess = std::max(0.0, d - problem_.thresholds.lambda3);
      out.penalized += weights.w6e * out.sle_excess * out.sle_excess;
    }
    if (problem_.langevin_weight > 0.0 && problem_.inputs.langevin && langevin_target) {
      const auto& lp = *problem_.inputs.langevin;
      const double denom =
          lp.noise_scale > 0.0 ? lp.noise_scale * lp.noise_scale * lp.dt : 1.0;
      out.langevin_defect = distortion(code_values, *langevin_target) / denom;
      out.penalized += problem_.langevin_weight * out.langevin_defect;
    }
    return out;
  }

  // Gradients of the penalized objective in (atoms, supported code entries).
  std::pair<Matrix, Matrix> gradients(const Matrix& atoms, const Matrix& code_values,
                                      const Matrix* langevin_target,
                                      const PenaltyWeights& weights) const {
    const auto& in = problem_.inputs;
    const double entries =
        static_cast<double>(in.data.values.rows()) * static_cast<double>(in.data.values.cols());
    const Matrix residual = in.data.values - atoms * code_values;
    Matrix grad_atoms = -2.0 / entries * residual * code_values.transpose();
    Matrix grad_code = -2.0 / entries * atoms.transpose() * residual;

    if (finite_cap(problem_.thresholds.lambda2)) {
      const double d = distortion(code_values, in.side_info.values);
      const double excess = std::max(0.0, d - problem_.thresholds.lambda2);
      if (excess > 0.0) {
        const double code_entries = static_cast<double>(code_values.size());
        grad_code +=
            weights.w6c * 4.0 * excess / code_entries * (code_values - in.side_info.values);
      }
    }
    if (finite_cap(problem_.thresholds.lambda3) && in.window) {
      const double d = sle_distortion_fixed(code_values, *in.window, scenario_);
      const double excess = std::max(0.0, d - problem_.thresholds.lambda3);
      if (excess > 0.0)
        grad_code += weights.w6e * 2.0 * excess *
                     sle_distortion_gradient(code_values, *in.window, scenario_);
    }
    if (problem_.langevin_weight > 0.0 && in.langevin && langevin_target) {
      const auto& lp = *in.langevin;
      const double denom = lp.noise_scale > 0.0 ? lp.noise_scale * lp.noise_scale * lp.dt : 1.0;
      const double code_entries = static_cast<double>(code_values.size());
      grad_code += problem_.langevin_weight * 2.0 / (code_entries * denom) *
                   (code_values - *langevin_target);
    }

    // 6.a stays hard: code motion is confined to the current support.
    for (Eigen::Index j = 0; j < code_values.cols(); ++j)
      for (Eigen::Index i = 0; i < code_values.rows(); ++i)
        if (code_values(i, j) == 0.0) grad_code(i, j) = 0.0;
    return {std::move(grad_atoms), std::move(grad_code)};
  }

  double sle_distortion(const Matrix& code_values) const {
    if (!problem_.inputs.window) return 0.0;
    return sle_distortion_fixed(code_values, *problem_.inputs.window, scenario_);
  }

 private:
  const ConstraintSet& problem_;
  Scenario scenario_;
};

// One coordinate-descent sweep of rank-1 atom/row refits against the
// residual that excludes each atom, adopted per atom only when the penalized
// objective does not rise.
void refit_atoms_in_place(Matrix& atoms, Matrix& values, const Matrix& data,
                          const ProblemEvaluator& evaluator, const Matrix* target,
                          const PenaltyWeights& weights, Objective& current) {
  for (Eigen::Index atom = 0; atom < atoms.cols(); ++atom) {
    std::vector<Eigen::Index> users;
    for (Eigen::Index j = 0; j < values.cols(); ++j)
      if (values(atom, j) != 0.0) users.push_back(j);
    if (users.empty()) continue;

    Matrix block(atoms.rows(), static_cast<Eigen::Index>(users.size()));
    for (std::size_t k = 0; k < users.size(); ++k)
      block.col(static_cast<Eigen::Index>(k)) = data.col(users[k]) - atoms * values.col(users[k]) +
                                                atoms.col(atom) * values(atom, users[k]);

    Eigen::JacobiSVD<Matrix> svd(block, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Vector new_atom = svd.matrixU().col(0);
    Vector new_row = svd.singularValues()(0) * svd.matrixV().col(0);
    Eigen::Index lead = 0;
    for (Eigen::Index r = 1; r < new_atom.size(); ++r)
      if (std::abs(new_atom(r)) > std::abs(new_atom(lead))) lead = r;
    if (new_atom(lead) < 0.0) {
      new_atom = -new_atom;
      new_row = -new_row;
    }

    Matrix probe_atoms = atoms;
    Matrix probe_values = values;
    probe_atoms.col(atom) = new_atom;
    for (std::size_t k = 0; k < users.size(); ++k)
      probe_values(atom, users[k]) = new_row(static_cast<Eigen::Index>(k));
    const Objective probed = evaluator.evaluate(probe_atoms, probe_values, target, weights);
    if (probed.penalized <= current.penalized) {
      atoms = std::move(probe_atoms);
      values = std::move(probe_values);
      current = probed;
    }
  }
}

double draw_psi(const ScalarModel& model, RandomSource& rng) {
  return clamp01(model.mean + model.jitter * (2.0 * rng.uniform01() - 1.0));
}

double draw_omega(const ScalarModel& model, double drift, double time, RandomSource& rng) {
  const double mean = model.mean * (1.0 + drift * time);
  return std::max(1e-9, mean + model.jitter * (2.0 * rng.uniform01() - 1.0));
}

// Evaluation time for the iteration's stochastic draws, confined to the 6.d
// window around the nominal instant.
double windowed_time(double nominal, const ProblemInputs& in, RandomSource& rng) {
  if (!in.window) return nominal;
  const double radius = in.window->xi + in.window->delta_xi;
  return nominal + radius * (2.0 * rng.uniform01() - 1.0);
}

struct ChanceOutcome {
  double psi_prob = -1.0;
  double snr_prob = -1.0;
  double rate_prob = -1.0;
  bool psi_ok = true;
  bool snr_ok = true;
  bool rate_ok = true;

  bool all_ok() const { return psi_ok && snr_ok && rate_ok; }
  std::string first_violation() const {
    if (!psi_ok) return "7.f";
    if (!snr_ok) return "8.h";
    if (!rate_ok) return "9.f";
    return "";
  }
};

ChanceOutcome evaluate_chance(const ConstraintSet& problem, int sigma, double nominal_time,
                              RandomSource& rng) {
  const auto& t = problem.thresholds;
  const auto& in = problem.inputs;
  ChanceOutcome out;
  for (ProbTag tag : problem.probabilistic) {
    std::vector<double> samples;
    samples.reserve(static_cast<std::size_t>(in.mc_samples));
    switch (tag) {
      case ProbTag::PsiTail7f: {
        for (int s = 0; s < in.mc_samples; ++s) samples.push_back(draw_psi(in.psi, rng));
        const ChanceVerdict v =
            chance_constraint(samples, t.lambda4, t.lambda5, TailDirection::AtMost);
        out.psi_prob = v.empirical_prob;
        out.psi_ok = v.satisfied;
        break;
      }
      case ProbTag::SnrTail8h: {
        for (int s = 0; s < in.mc_samples; ++s) {
          const double tau = windowed_time(nominal_time, in, rng);
          samples.push_back(draw_omega(in.snr, in.snr_drift, tau, rng));
        }
        const ChanceVerdict v =
            chance_constraint(samples, t.lambda6, t.lambda7, TailDirection::AtLeast);
        out.snr_prob = v.empirical_prob;
        out.snr_ok = v.satisfied;
        break;
      }
      case ProbTag::RateTail9f: {
        for (int s = 0; s < in.mc_samples; ++s) {
          const double psi = draw_psi(in.psi, rng);
          std::vector<double> path(static_cast<std::size_t>(in.omega_path_length));
          for (double& w : path) {
            const double tau = windowed_time(nominal_time, in, rng);
            w = draw_omega(in.snr, in.snr_drift, tau, rng);
          }
          samples.push_back(key_rate(psi, sigma, path, in.kappa_e));
        }
        const ChanceVerdict v =
            chance_constraint(samples, t.lambda8, t.lambda9, TailDirection::AtLeast);
        out.rate_prob = v.empirical_prob;
        out.rate_ok = v.satisfied;
        break;
      }
    }
  }
  return out;
}

// Re-seed atoms unused by the code from the worst-reconstructed data columns.
// Their code rows are zero, so no objective term moves.
Matrix reseed_unused_atoms(const Matrix& atoms, const Matrix& code_values, const Matrix& data) {
  std::vector<bool> used(static_cast<std::size_t>(atoms.cols()), false);
  for (Eigen::Index j = 0; j < code_values.cols(); ++j)
    for (Eigen::Index i = 0; i < code_values.rows(); ++i)
      if (code_values(i, j) != 0.0) used[static_cast<std::size_t>(i)] = true;
  bool all_used = true;
  for (bool u : used) all_used = all_used && u;
  if (all_used) return atoms;

  const Matrix residuals = data - atoms * code_values;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(residuals.cols()));
  for (std::size_t j = 0; j < order.size(); ++j) order[j] = static_cast<Eigen::Index>(j);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return residuals.col(a).squaredNorm() > residuals.col(b).squaredNorm();
  });

  Matrix patched = atoms;
  std::size_t next = 0;
  for (Eigen::Index i = 0; i < atoms.cols(); ++i) {
    if (used[static_cast<std::size_t>(i)]) continue;
    if (next >= order.size()) break;
    const Vector seed = data.col(order[next++]);
    const double norm = seed.norm();
    if (norm > 1e-12) patched.col(i) = seed / norm;
  }
  return patched;
}

}  // namespace

std::vector<double> SolveTrace::objectives() const {
  std::vector<double> out;
  out.reserve(records.size());
  for (const IterationRecord& r : records) out.push_back(r.objective);
  return out;
}

ConstraintSet build_problem(ProblemVariant variant, const Thresholds& thresholds,
                            ProblemInputs inputs, double langevin_weight) {
  const auto violations = validate_config(thresholds);
  if (!violations.empty()) throw std::invalid_argument("build_problem: " + violations.front());
  if (!(inputs.kappa_e >= 0.0 && inputs.kappa_e <= 1.0))
    throw std::invalid_argument("build_problem: kappa_e must lie in [0,1]");
  if (inputs.mc_samples < 1) throw std::invalid_argument("build_problem: mc_samples must be >= 1");
  if (inputs.universe < 2) throw std::invalid_argument("build_problem: universe must be >= 2");
  if (inputs.omega_path_length < 1)
    throw std::invalid_argument("build_problem: omega_path_length must be >= 1");

  ConstraintSet problem{variant, thresholds, std::move(inputs), {}, 0.0, 10.0, 1e-6};
  problem.langevin_weight = problem.inputs.langevin ? langevin_weight : 0.0;
  switch (variant) {
    case ProblemVariant::P2:
      break;
    case ProblemVariant::P3:
      problem.probabilistic = {ProbTag::PsiTail7f};
      break;
    case ProblemVariant::P3prime:
      problem.probabilistic = {ProbTag::PsiTail7f, ProbTag::SnrTail8h};
      break;
    case ProblemVariant::P3doubleprime:
      problem.probabilistic = {ProbTag::RateTail9f};
      break;
  }
  return problem;
}

GreedySolveResult greedy_solve(const ConstraintSet& problem, const Dictionary& init_dict,
                               const SparseCode& init_code, int iters, RandomSource& rng) {
  if (iters < 1) throw std::invalid_argument("greedy_solve: iters must be >= 1");
  if (init_code.sparsity_budget > problem.thresholds.lambda1)
    throw std::invalid_argument("greedy_solve: initial code exceeds the 6.a budget");
  const auto& in = problem.inputs;
  if (in.side_info.values.rows() != init_code.atom_count() ||
      in.side_info.values.cols() != init_code.sample_count())
    throw std::invalid_argument("greedy_solve: side info shape mismatch");

  const ProblemEvaluator evaluator(problem, rng.derive(0x5CE17A));

  Dictionary dict = init_dict;
  SparseCode code = init_code;
  const int budget = problem.thresholds.lambda1;
  PenaltyWeights weights{problem.penalty_weight, problem.penalty_weight};
  int violated_6c_streak = 0;
  int violated_6e_streak = 0;

  GreedySolveResult result{dict, code, SolveTrace{}, SolveStatus::IterationLimit, ""};

  double recorded = std::numeric_limits<double>::infinity();
  double step = 1.0;
  const double dt = in.langevin ? in.langevin->dt : 1.0;
  bool converged = false;

  for (int it = 0; it < iters; ++it) {
    RandomSource iter_rng = rng.derive(0x1000 + static_cast<std::uint64_t>(it));

    // Langevin target: OU prediction from the previous accepted iterate under
    // this iteration's fixed noise draw.
    Matrix langevin_target;
    const Matrix* target_ptr = nullptr;
    if (problem.langevin_weight > 0.0 && in.langevin) {
      RandomSource noise_rng = iter_rng.derive(1);
      langevin_target = code.coefficients * (1.0 - in.langevin->gamma0 * in.langevin->dt);
      if (in.langevin->noise_scale > 0.0) {
        const double scale = in.langevin->noise_scale * std::sqrt(in.langevin->dt);
        for (Eigen::Index j = 0; j < langevin_target.cols(); ++j)
          for (Eigen::Index i = 0; i < langevin_target.rows(); ++i)
            if (code.coefficients(i, j) != 0.0) langevin_target(i, j) += scale * noise_rng.normal();
      }
      target_ptr = &langevin_target;
    }

    // (1) Guarded encode projection; adopted only if the penalized objective
    // does not rise above the recorded value.
    Matrix cand_atoms = dict.atoms;
    Matrix cand_values = code.coefficients;
    {
      SparseCode encoded = encode_guarded(dict, in.data, budget, code, in.perturbation.sigma_theta);
      const Objective enc = evaluator.evaluate(dict.atoms, encoded.coefficients, target_ptr, weights);
      if (enc.penalized <= recorded) cand_values = encoded.coefficients;
    }

    // (2) Backtracking descent in (atoms, supported code entries).
    Objective current = evaluator.evaluate(cand_atoms, cand_values, target_ptr, weights);
    double used_step = 0.0;
    {
      const auto [grad_atoms, grad_code] =
          evaluator.gradients(cand_atoms, cand_values, target_ptr, weights);
      if (grad_atoms.norm() + grad_code.norm() > 0.0) {
        double s = step;
        for (int attempt = 0; attempt < 60 && s > 1e-14; ++attempt, s *= 0.5) {
          Matrix atoms = cand_atoms - s * grad_atoms;
          bool valid = true;
          for (Eigen::Index jcol = 0; jcol < atoms.cols(); ++jcol) {
            const double norm = atoms.col(jcol).norm();
            if (norm < 1e-12) {
              valid = false;
              break;
            }
            atoms.col(jcol) /= norm;
          }
          if (!valid) continue;
          const Matrix values = cand_values - s * grad_code;
          const Objective trial = evaluator.evaluate(atoms, values, target_ptr, weights);
          if (trial.penalized <= current.penalized) {
            cand_atoms = std::move(atoms);
            cand_values = values;
            current = trial;
            used_step = s;
            // Gradients carry a 1/entries scale, so the right step can be
            // large; let it grow geometrically and rely on backtracking.
            step = std::min(s * 2.0, 1e9);
            break;
          }
        }
      }
    }

    // (2b) Per-atom rank-1 refits: for each atom, the best joint replacement
    // of the atom and its coefficient row under the same descent guarantee.
    refit_atoms_in_place(cand_atoms, cand_values, in.data.values, evaluator, target_ptr, weights,
                         current);

    // (2c) Escape proposals: replace one of the lightest atoms with the
    // worst-reconstructed data column, re-encode and refit. A bundle is
    // adopted only when it strictly beats the incumbent, so the recorded
    // objective still never rises.
    {
      std::vector<Eigen::Index> by_mass(static_cast<std::size_t>(cand_values.rows()));
      for (std::size_t i = 0; i < by_mass.size(); ++i) by_mass[i] = static_cast<Eigen::Index>(i);
      std::vector<double> mass(by_mass.size(), 0.0);
      for (Eigen::Index i = 0; i < cand_values.rows(); ++i)
        for (Eigen::Index j = 0; j < cand_values.cols(); ++j)
          mass[static_cast<std::size_t>(i)] += std::abs(cand_values(i, j));
      std::stable_sort(by_mass.begin(), by_mass.end(), [&](Eigen::Index a, Eigen::Index b) {
        return mass[static_cast<std::size_t>(a)] < mass[static_cast<std::size_t>(b)];
      });

      const Matrix residuals = in.data.values - cand_atoms * cand_values;
      Eigen::Index worst_col = 0;
      double worst_norm = -1.0;
      for (Eigen::Index j = 0; j < residuals.cols(); ++j) {
        const double norm = residuals.col(j).squaredNorm();
        if (norm > worst_norm) {
          worst_norm = norm;
          worst_col = j;
        }
      }
      // Two seed directions: the worst column itself and its residual (the
      // latter points at whatever atom is still missing).
      std::vector<Vector> seeds;
      if (in.data.values.col(worst_col).norm() > 1e-12 && worst_norm > 1e-20) {
        seeds.push_back(in.data.values.col(worst_col).normalized());
        if (residuals.col(worst_col).norm() > 1e-10)
          seeds.push_back(residuals.col(worst_col).normalized());
      }
      const std::size_t proposals = std::min<std::size_t>(2, by_mass.size());
      for (const Vector& seed : seeds) {
        for (std::size_t p = 0; p < proposals; ++p) {
          Matrix trial_atoms = cand_atoms;
          trial_atoms.col(by_mass[p]) = seed;
          const Dictionary trial_dict(trial_atoms, dict.atom_budget);
          Matrix trial_values =
              encode_guarded(trial_dict, in.data, budget, SparseCode(cand_values, budget),
                             in.perturbation.sigma_theta)
                  .coefficients;
          Objective trial = evaluator.evaluate(trial_atoms, trial_values, target_ptr, weights);
          refit_atoms_in_place(trial_atoms, trial_values, in.data.values, evaluator, target_ptr,
                               weights, trial);
          if (trial.penalized < current.penalized) {
            cand_atoms = std::move(trial_atoms);
            cand_values = std::move(trial_values);
            current = trial;
          }
        }
      }
    }

    // Objective-neutral maintenance: revive atoms the code no longer uses.
    cand_atoms = reseed_unused_atoms(cand_atoms, cand_values, in.data.values);

    const bool accept = current.penalized <= recorded;

    IterationRecord record;
    record.iteration = it;
    record.step_size = used_step;
    const double previous_recorded = recorded;
    if (accept) {
      dict = Dictionary(cand_atoms, dict.atom_budget);
      code = SparseCode(cand_values, code.sparsity_budget);
      recorded = current.penalized;
      record.accepted = true;
    } else {
      current = evaluator.evaluate(dict.atoms, code.coefficients, target_ptr, weights);
      record.accepted = false;
    }

    record.objective = accept ? current.penalized : previous_recorded;
    record.reconstruction = current.reconstruction;
    record.mean_support =
        static_cast<double>(code.nonzero_count()) / static_cast<double>(code.sample_count());
    record.hard_6c_ok =
        !finite_cap(problem.thresholds.lambda2) ||
        distortion(code.coefficients, in.side_info.values) <= problem.thresholds.lambda2 + 1e-12;
    record.hard_6e_ok =
        !finite_cap(problem.thresholds.lambda3) || !in.window ||
        evaluator.sle_distortion(code.coefficients) <= problem.thresholds.lambda3 + 1e-12;
    record.langevin_residual = current.langevin_defect;

    // (3) Tail constraints under this iteration's derived stream.
    {
      RandomSource chance_rng = iter_rng.derive(2);
      const ChanceOutcome chance = evaluate_chance(problem, support_sigma(code, in.universe),
                                                   static_cast<double>(it) * dt, chance_rng);
      record.psi_tail_prob = chance.psi_prob;
      record.snr_tail_prob = chance.snr_prob;
      record.rate_tail_prob = chance.rate_prob;
      record.chance_ok = chance.all_ok();
    }

    violated_6c_streak = record.hard_6c_ok ? 0 : violated_6c_streak + 1;
    violated_6e_streak = record.hard_6e_ok ? 0 : violated_6e_streak + 1;
    if (violated_6c_streak >= 10) {
      weights.w6c *= 2.0;
      violated_6c_streak = 0;
    }
    if (violated_6e_streak >= 10) {
      weights.w6e *= 2.0;
      violated_6e_streak = 0;
    }

    result.trace.records.push_back(record);

    if (it > 0 && problem.stall_tolerance > 0.0) {
      const double change = std::abs(previous_recorded - recorded);
      if (change <= problem.stall_tolerance * std::max(1.0, std::abs(previous_recorded))) {
        converged = true;
        break;
      }
    }
  }

  result.dictionary = dict;
  result.code = code;
  result.status = converged ? SolveStatus::Converged : SolveStatus::IterationLimit;

  // Final certification; infeasibility is a status, never an exception.
  RandomSource certify_rng = rng.derive(0xF1);
  const FeasibilityReport report = certify(problem, dict, code, certify_rng);
  if (!report.feasible) {
    result.status = SolveStatus::Infeasible;
    result.violated_constraint = report.first_violation;
  }
  return result;
}

FeasibilityReport certify(const ConstraintSet& problem, const Dictionary& dict,
                          const SparseCode& code, RandomSource& rng) {
  (void)dict;
  const auto& in = problem.inputs;
  FeasibilityReport report;

  for (Eigen::Index j = 0; j < code.sample_count() && report.hard_6a; ++j) {
    int nnz = 0;
    for (Eigen::Index i = 0; i < code.atom_count(); ++i)
      if (code.coefficients(i, j) != 0.0) ++nnz;
    if (nnz > problem.thresholds.lambda1) report.hard_6a = false;
  }
  if (finite_cap(problem.thresholds.lambda2))
    report.hard_6c =
        distortion(code.coefficients, in.side_info.values) <= problem.thresholds.lambda2 + 1e-12;
  if (finite_cap(problem.thresholds.lambda3) && in.window) {
    RandomSource sle_rng = rng.derive(1);
    const SlePerturbation perturbed = sle_perturb(code, *in.window, sle_rng);
    report.hard_6e = constraint_6e(perturbed.code_xi, perturbed.code_xi_dxi,
                                   problem.thresholds.lambda3 + 1e-12);
  }
  RandomSource chance_rng = rng.derive(2);
  const ChanceOutcome chance =
      evaluate_chance(problem, support_sigma(code, in.universe), 0.0, chance_rng);
  report.prob_7f = chance.psi_ok;
  report.prob_8h = chance.snr_ok;
  report.prob_9f = chance.rate_ok;

  const std::pair<bool, const char*> checks[] = {
      {report.hard_6a, "6.a"}, {report.hard_6c, "6.c"}, {report.hard_6e, "6.e"},
      {report.prob_7f, "7.f"}, {report.prob_8h, "8.h"}, {report.prob_9f, "9.f"},
  };
  for (const auto& [ok, name] : checks) {
    if (!ok) {
      report.feasible = false;
      report.first_violation = name;
      break;
    }
  }
  return report;
}

RatioTrace normalized_ratio_trace(const std::vector<double>& constrained,
                                  const std::vector<double>& unconstrained) {
  if (constrained.empty() || unconstrained.empty())
    throw std::invalid_argument("normalized_ratio_trace: empty history");
  RatioTrace out;
  const std::size_t len = std::max(constrained.size(), unconstrained.size());
  out.values.reserve(len);
  for (std::size_t k = 0; k < len; ++k) {
    const double numer = k < constrained.size() ? constrained[k] : constrained.back();
    const double denom = k < unconstrained.size() ? unconstrained[k] : unconstrained.back();
    if (denom == 0.0) {
      out.had_zero_denominator = true;
      out.values.push_back(std::numeric_limits<double>::quiet_NaN());
    } else {
      out.values.push_back(numer / denom);
    }
  }
  return out;
}

int support_sigma(const SparseCode& code, int universe) {
  const double mean =
      static_cast<double>(code.nonzero_count()) / static_cast<double>(code.sample_count());
  const int cap = std::max(1, universe / 2);
  return std::min(cap, std::max(1, static_cast<int>(std::lround(mean))));
}

}  // namespace sparsekey
