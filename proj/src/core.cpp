#include "sparsekey/core.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace sparsekey {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// splitmix64 finalizer; full-period bijective mix.
std::uint64_t mix64(std::uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr double kTwoPi = 6.283185307179586476925286766559;

}  // namespace

RandomSource::RandomSource(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  key_ = mix64(mix64(seed) ^ mix64(stream_id * 0xda942042e4dd58b5ULL + 1));
}

std::uint64_t RandomSource::next_u64() {
  return mix64(key_ + (++counter_) * kGolden);
}

double RandomSource::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandomSource::uniform01_open() {
  return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
}

double RandomSource::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  const double u1 = uniform01_open();
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  cached_normal_ = r * std::sin(kTwoPi * u2);
  has_cached_normal_ = true;
  return r * std::cos(kTwoPi * u2);
}

int RandomSource::uniform_int(int bound) {
  if (bound < 1) throw std::invalid_argument("uniform_int: bound must be >= 1");
  // Rejection-free modulo is fine here: bound is tiny against 2^64 and the
  // bias (< bound / 2^64) is far below anything the tests can resolve.
  return static_cast<int>(next_u64() % static_cast<std::uint64_t>(bound));
}

RandomSource RandomSource::derive(std::uint64_t sub_stream) const {
  return RandomSource(seed_, mix64(stream_id_) ^ sub_stream);
}

DataBatch::DataBatch(Matrix v) : values(std::move(v)) {
  if (values.rows() < 1 || values.cols() < 1)
    throw std::invalid_argument("DataBatch: need at least one row and one column");
  if (!values.allFinite())
    throw std::invalid_argument("DataBatch: all entries must be finite");
}

Dictionary::Dictionary(Matrix a, int budget) : atoms(std::move(a)), atom_budget(budget) {
  if (atom_budget < 1) throw std::invalid_argument("Dictionary: atom_budget must be positive");
  if (atoms.cols() > atom_budget)
    throw std::invalid_argument("Dictionary: atom count exceeds atom_budget");
  for (Eigen::Index j = 0; j < atoms.cols(); ++j) {
    const double n = atoms.col(j).norm();
    if (std::abs(n - 1.0) > 1e-9) {
      std::ostringstream msg;
      msg << "Dictionary: column " << j << " has norm " << n << ", expected 1";
      throw std::invalid_argument(msg.str());
    }
  }
}

SparseCode::SparseCode(Matrix c, int budget) : coefficients(std::move(c)), sparsity_budget(budget) {
  if (sparsity_budget < 1)
    throw std::invalid_argument("SparseCode: sparsity_budget must be positive");
  for (Eigen::Index j = 0; j < coefficients.cols(); ++j) {
    Eigen::Index nnz = 0;
    for (Eigen::Index i = 0; i < coefficients.rows(); ++i)
      if (coefficients(i, j) != 0.0) ++nnz;
    if (nnz > sparsity_budget) {
      std::ostringstream msg;
      msg << "SparseCode: column " << j << " has " << nnz << " nonzeros, budget is "
          << sparsity_budget;
      throw std::invalid_argument(msg.str());
    }
  }
}

Eigen::Index SparseCode::nonzero_count() const {
  Eigen::Index nnz = 0;
  for (Eigen::Index j = 0; j < coefficients.cols(); ++j)
    for (Eigen::Index i = 0; i < coefficients.rows(); ++i)
      if (coefficients(i, j) != 0.0) ++nnz;
  return nnz;
}

double distortion(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("distortion: shape mismatch");
  const double count = static_cast<double>(a.rows()) * static_cast<double>(a.cols());
  return (a - b).squaredNorm() / count;
}

std::vector<std::string> validate_config(const Thresholds& t) {
  std::vector<std::string> violations;
  auto check_prob = [&](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) violations.push_back(std::string(name) + " not in [0,1]");
  };
  auto check_nonneg = [&](double v, const char* name) {
    if (!(v >= 0.0)) violations.push_back(std::string(name) + " must be nonnegative");
  };
  if (t.lambda0 < 1) violations.push_back("lambda0 must be a positive integer");
  if (t.lambda1 < 1) violations.push_back("lambda1 must be a positive integer");
  check_nonneg(t.lambda2, "lambda2");
  check_nonneg(t.lambda3, "lambda3");
  check_prob(t.lambda4, "lambda4");
  check_prob(t.lambda5, "lambda5");
  check_prob(t.lambda6, "lambda6");
  check_prob(t.lambda7, "lambda7");
  check_nonneg(t.lambda8, "lambda8");
  check_prob(t.lambda9, "lambda9");
  if (!(t.nu1 > 0.0)) violations.push_back("nu1 must be positive");
  if (!(t.nu2 > 0.0)) violations.push_back("nu2 must be positive");
  if (!(t.gamma0 > 0.0)) violations.push_back("gamma0 must be positive");
  if (!(t.alpha > 0.0 && t.alpha < 1.0)) violations.push_back("alpha must lie in (0,1)");
  return violations;
}

Matrix blockwise_mean_filter(const Matrix& x, int block_rows) {
  if (block_rows < 1) throw std::invalid_argument("blockwise_mean_filter: block_rows must be >= 1");
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i0 = 0; i0 < x.rows(); i0 += block_rows) {
      const Eigen::Index len = std::min<Eigen::Index>(block_rows, x.rows() - i0);
      const double mean = x.col(j).segment(i0, len).mean();
      out.col(j).segment(i0, len).setConstant(mean);
    }
  }
  return out;
}

}  // namespace sparsekey
