#include "seqtraj/softdtw.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "seqtraj/parallel.hpp"

namespace seqtraj {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_pair(const PredictionSequence& a, const PredictionSequence& b, const char* who) {
  if (a.rows() == 0 || b.rows() == 0) {
    throw ArgumentError(std::string(who) + ": sequences must have at least one row");
  }
  if (a.cols() != b.cols()) {
    throw ArgumentError(std::string(who) + ": class-count mismatch (" +
                        std::to_string(a.cols()) + " vs " + std::to_string(b.cols()) + ")");
  }
}

void check_gamma(double gamma, bool strictly_positive, const char* who) {
  if (std::isnan(gamma) || gamma < 0.0 || (strictly_positive && gamma == 0.0)) {
    throw ArgumentError(std::string(who) + (strictly_positive ? ": gamma must be > 0"
                                                              : ": gamma must be >= 0"));
  }
}

// softmin over three DP predecessors; +inf entries are unreachable cells.
double softmin3(double x, double y, double z, double gamma) {
  const double m = std::min(x, std::min(y, z));
  if (gamma == 0.0 || std::isinf(m)) return m;
  const double total =
      std::exp(-(x - m) / gamma) + std::exp(-(y - m) / gamma) + std::exp(-(z - m) / gamma);
  return m - gamma * std::log(total);
}

// (τ+1)×(τ'+1) accumulated-cost table with +inf borders and r(0,0) = 0.
Matrix forward_table(const Matrix& costs, double gamma) {
  const std::size_t n = costs.rows();
  const std::size_t m = costs.cols();
  Matrix r(n + 1, m + 1, kInf);
  r(0, 0) = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      r(i, j) = costs(i - 1, j - 1) + softmin3(r(i - 1, j), r(i, j - 1), r(i - 1, j - 1), gamma);
    }
  }
  return r;
}

void path_search(const Matrix& costs, std::size_t i, std::size_t j, double acc,
                 std::vector<double>& out) {
  acc += costs(i, j);
  const std::size_t last_i = costs.rows() - 1;
  const std::size_t last_j = costs.cols() - 1;
  if (i == last_i && j == last_j) {
    out.push_back(acc);
    return;
  }
  if (i < last_i) path_search(costs, i + 1, j, acc, out);
  if (j < last_j) path_search(costs, i, j + 1, acc, out);
  if (i < last_i && j < last_j) path_search(costs, i + 1, j + 1, acc, out);
}

}  // namespace

void check_row_stochastic(const PredictionSequence& seq, double tol) {
  for (std::size_t t = 0; t < seq.rows(); ++t) {
    double total = 0.0;
    for (double v : seq.row(t)) {
      if (!(v >= 0.0)) {
        throw ArgumentError("row " + std::to_string(t) + " has a negative or NaN entry");
      }
      total += v;
    }
    if (std::abs(total - 1.0) > tol) {
      throw ArgumentError("row " + std::to_string(t) + " sums to " + format_double(total) +
                          ", expected 1");
    }
  }
}

Matrix distance_matrix(const PredictionSequence& a, const PredictionSequence& b) {
  check_pair(a, b, "distance_matrix");
  Matrix d(a.rows(), b.rows());
  parallel_for(a.rows(), [&](std::size_t i) {
    for (std::size_t j = 0; j < b.rows(); ++j) d(i, j) = squared_distance(a.row(i), b.row(j));
  });
  return d;
}

double soft_dtw_from_costs(const Matrix& costs, double gamma) {
  check_gamma(gamma, false, "soft_dtw");
  if (costs.empty()) throw ArgumentError("soft_dtw: empty cost matrix");
  const Matrix r = forward_table(costs, gamma);
  return r(costs.rows(), costs.cols());
}

double soft_dtw(const PredictionSequence& a, const PredictionSequence& b, double gamma) {
  check_pair(a, b, "soft_dtw");
  check_gamma(gamma, false, "soft_dtw");
  Matrix costs(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) costs(i, j) = squared_distance(a.row(i), b.row(j));
  }
  return forward_table(costs, gamma)(a.rows(), b.rows());
}

SoftDtwGradient soft_dtw_grad(const PredictionSequence& a, const PredictionSequence& b,
                              double gamma) {
  check_pair(a, b, "soft_dtw_grad");
  check_gamma(gamma, true, "soft_dtw_grad");
  const std::size_t n = a.rows();
  const std::size_t m = b.rows();
  const std::size_t classes = a.cols();

  Matrix costs(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) costs(i, j) = squared_distance(a.row(i), b.row(j));
  }
  const Matrix r = forward_table(costs, gamma);

  // Cell (i, j) feeds its successors (i+1, j), (i, j+1), (i+1, j+1). Its share
  // of a successor s is the softmin weight exp(−(r(i,j) − softmin_s)/γ), where
  // softmin_s = r(s) − D(s) is the value the successor's softmin produced.
  Matrix e(n + 2, m + 2, 0.0);
  e(n, m) = 1.0;
  auto share = [&](std::size_t i, std::size_t j, std::size_t si, std::size_t sj) {
    if (si > n || sj > m) return 0.0;
    const double incoming = r(si, sj) - costs(si - 1, sj - 1);
    return e(si, sj) * std::exp(-(r(i, j) - incoming) / gamma);
  };
  for (std::size_t i = n; i >= 1; --i) {
    for (std::size_t j = m; j >= 1; --j) {
      if (i == n && j == m) continue;
      e(i, j) = share(i, j, i + 1, j) + share(i, j, i, j + 1) + share(i, j, i + 1, j + 1);
    }
  }

  SoftDtwGradient out;
  out.value = r(n, m);
  out.grad_a = Matrix(n, classes);
  out.grad_b = Matrix(m, classes);
  out.occupancy = Matrix(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double w = e(i + 1, j + 1);
      out.occupancy(i, j) = w;
      if (w == 0.0) continue;
      for (std::size_t k = 0; k < classes; ++k) {
        const double diff = 2.0 * w * (a(i, k) - b(j, k));
        out.grad_a(i, k) += diff;
        out.grad_b(j, k) -= diff;
      }
    }
  }
  if (!std::isfinite(out.value) || !out.grad_a.all_finite() || !out.grad_b.all_finite()) {
    throw NumericalError("soft_dtw_grad: non-finite result (gamma=" + format_double(gamma) + ")");
  }
  return out;
}

std::vector<double> enumerate_path_costs(const Matrix& costs) {
  if (costs.empty()) throw ArgumentError("enumerate_path_costs: empty cost matrix");
  if (costs.rows() > kBruteForceMaxLength || costs.cols() > kBruteForceMaxLength) {
    throw ArgumentError("enumerate_path_costs: sequences longer than " +
                        std::to_string(kBruteForceMaxLength));
  }
  std::vector<double> out;
  path_search(costs, 0, 0, 0.0, out);
  return out;
}

double dtw_bruteforce(const PredictionSequence& a, const PredictionSequence& b) {
  check_pair(a, b, "dtw_bruteforce");
  if (a.rows() > kBruteForceMaxLength || b.rows() > kBruteForceMaxLength) {
    throw ArgumentError("dtw_bruteforce: sequences longer than " +
                        std::to_string(kBruteForceMaxLength) + " cannot be enumerated");
  }
  Matrix costs(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) costs(i, j) = squared_distance(a.row(i), b.row(j));
  }
  double best = kInf;
  for (double c : enumerate_path_costs(costs)) best = std::min(best, c);
  return best;
}

double count_alignment_paths(std::size_t tau_a, std::size_t tau_b) {
  if (tau_a == 0 || tau_b == 0) return 0.0;
  Matrix count(tau_a, tau_b, 0.0);
  for (std::size_t i = 0; i < tau_a; ++i) {
    for (std::size_t j = 0; j < tau_b; ++j) {
      if (i == 0 || j == 0) {
        count(i, j) = 1.0;
      } else {
        count(i, j) = count(i - 1, j) + count(i, j - 1) + count(i - 1, j - 1);
      }
    }
  }
  return count(tau_a - 1, tau_b - 1);
}

Matrix pairwise_soft_dtw(const std::vector<PredictionSequence>& queries,
                         const std::vector<PredictionSequence>& references, double gamma) {
  check_gamma(gamma, false, "pairwise_soft_dtw");
  Matrix out(queries.size(), references.size());
  const std::size_t total = queries.size() * references.size();
  parallel_for(total, [&](std::size_t k) {
    const std::size_t i = k / references.size();
    const std::size_t j = k % references.size();
    out(i, j) = soft_dtw(queries[i], references[j], gamma);
  });
  return out;
}

}  // namespace seqtraj
