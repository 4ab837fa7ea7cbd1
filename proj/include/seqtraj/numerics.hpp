#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace seqtraj {

// Raised for malformed inputs (bad shapes, out-of-range indices, NaN).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when a computation produces a non-finite value.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dense row-major matrix of doubles. Used for sequences (one row per time
// step), weight matrices and DP tables alike.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix from_rows(const std::vector<std::vector<double>>& rows);
  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool all_finite() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// ‖a − b‖₂² for equal-length spans.
double squared_distance(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);

// Max-shifted softmax, written into `out` (same length as `logits`).
void softmax(std::span<const double> logits, std::span<double> out);

// SoftMin_γ(v) = −γ log Σ exp(−vᵢ/γ), evaluated with a shift by min(v).
// γ = 0 returns the exact minimum.
double softmin(std::span<const double> values, double gamma);

// Gradient of softmin with respect to its inputs (a probability vector).
std::vector<double> softmin_weights(std::span<const double> values, double gamma);

// Largest singular value by power iteration on MᵀM from a fixed seeded start.
double spectral_norm(const Matrix& m, std::size_t iterations = 1000,
                     double tol = 1e-10);

// Euclidean projection of `v` onto the probability simplex, in place.
void project_to_simplex(std::span<double> v);

// xoshiro256** seeded through splitmix64. The stream depends only on the
// seed, never on the platform or standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  // Unbiased integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);
  // Standard normal via Box-Muller (no cached second variate).
  double normal();

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t s_[4];
};

std::uint64_t splitmix64(std::uint64_t x);
// Seed for an independent sub-stream keyed by a string (FNV-1a, then mixed).
std::uint64_t derive_seed(std::uint64_t master, std::string_view key);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t key);

// printf-style %.*g rendering; 17 digits round-trips every double.
std::string format_double(double v, int significant = 17);

}  // namespace seqtraj
