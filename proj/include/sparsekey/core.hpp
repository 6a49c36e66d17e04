#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace sparsekey {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Counter-based deterministic random source.
///
/// Every draw is a hash of (key, counter) where the key is derived from
/// (seed, stream_id). Equal (seed, stream_id) pairs replay an identical
/// sequence on every platform, and derived streams are decorrelated without
/// sharing any mutable state, so per-worker streams do not depend on worker
/// count or draw interleaving.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed, std::uint64_t stream_id = 0);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  std::uint64_t next_u64();

  /// Uniform double in [0, 1), 53-bit resolution.
  double uniform01();

  /// Uniform double in (0, 1] (never zero; safe under log()).
  double uniform01_open();

  /// Standard Gaussian draw (Box-Muller; second value cached).
  double normal();

  /// Uniform integer in [0, bound). Requires bound >= 1.
  int uniform_int(int bound);

  /// New independent stream with the same seed. Never shares state.
  RandomSource derive(std::uint64_t sub_stream) const;

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t stream_id_ = 0;
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  bool has_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

/// Observed data: one sample per column, ambient dimension down the rows.
struct DataBatch {
  Matrix values;

  explicit DataBatch(Matrix v);

  Eigen::Index ambient_dim() const { return values.rows(); }
  Eigen::Index sample_count() const { return values.cols(); }
};

/// Unit-norm atoms in the columns, at most atom_budget of them.
struct Dictionary {
  Matrix atoms;
  int atom_budget;

  Dictionary(Matrix a, int budget);

  Eigen::Index ambient_dim() const { return atoms.rows(); }
  Eigen::Index atom_count() const { return atoms.cols(); }
};

/// Coefficient matrix with at most sparsity_budget nonzeros per column.
struct SparseCode {
  Matrix coefficients;
  int sparsity_budget;

  SparseCode(Matrix c, int budget);

  Eigen::Index atom_count() const { return coefficients.rows(); }
  Eigen::Index sample_count() const { return coefficients.cols(); }

  /// Total number of structurally nonzero entries.
  Eigen::Index nonzero_count() const;
};

/// Auxiliary signal correlated with a sparse code; same shape as the code.
struct SideInfo {
  Matrix values;

  explicit SideInfo(Matrix v) : values(std::move(v)) {}
};

/// All scalar thresholds of the problem family in one bag.
/// lambda2, lambda3 and lambda8 accept +infinity as the "unconstrained"
/// sentinel.
struct Thresholds {
  int lambda0 = 12;       // atom budget
  int lambda1 = 2;        // per-column sparsity budget
  double lambda2 = std::numeric_limits<double>::infinity();  // side-info distortion cap
  double lambda3 = std::numeric_limits<double>::infinity();  // perturbation distortion cap
  double lambda4 = 0.5;   // overlap tail threshold
  double lambda5 = 0.5;   // overlap tail level
  double lambda6 = 1.0;   // SNR tail threshold
  double lambda7 = 0.5;   // SNR tail level
  double lambda8 = 0.0;   // key-rate tail threshold
  double lambda9 = 0.5;   // key-rate tail level
  double nu1 = 1e-3;      // density-gap target
  double nu2 = 1e-3;      // MI-gap target
  double gamma0 = 1.0;    // mean-reversion rate
  double alpha = 0.1;     // secrecy slack
};

/// Mean squared (Frobenius) distortion: (1/entries) * sum (a-b)^2.
/// Symmetric, nonnegative, zero iff a == b. Throws std::invalid_argument on
/// shape mismatch.
double distortion(const Matrix& a, const Matrix& b);

/// Checks every Thresholds invariant. Violations are reported as data, one
/// string per offending field; an empty list means the config is valid.
std::vector<std::string> validate_config(const Thresholds& t);

/// Low-pass helper for the default side-information generator: every block of
/// `block_rows` consecutive entries in each column is replaced by its mean
/// (the trailing partial block uses its own mean).
Matrix blockwise_mean_filter(const Matrix& x, int block_rows);

}  // namespace sparsekey
