#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "seqtraj/numerics.hpp"

namespace seqtraj {

// A τ×C trajectory of class scores, one row per time step. Rows coming out
// of the classifier are row-stochastic; the alignment code itself accepts
// any real-valued rows (exemplars in unconstrained mode are not stochastic).
using PredictionSequence = Matrix;

// Throws ArgumentError unless every row is nonnegative and sums to 1.
void check_row_stochastic(const PredictionSequence& seq, double tol = 1e-9);

// D[m][n] = ‖a_m − b_n‖₂². Rows are filled in parallel.
Matrix distance_matrix(const PredictionSequence& a, const PredictionSequence& b);

// Soft-DTW value by the three-predecessor DP. gamma = 0 is classical DTW.
double soft_dtw(const PredictionSequence& a, const PredictionSequence& b, double gamma);
double soft_dtw_from_costs(const Matrix& costs, double gamma);

struct SoftDtwGradient {
  double value = 0.0;
  Matrix grad_a;     // τ×C
  Matrix grad_b;     // τ'×C
  Matrix occupancy;  // τ×τ' expected alignment E; E(τ−1, τ'−1) = 1
};

// Value plus gradients with respect to both sequences. gamma must be > 0.
SoftDtwGradient soft_dtw_grad(const PredictionSequence& a, const PredictionSequence& b,
                              double gamma);

// Minimum ⟨Π, D⟩ over every monotone unit-step path, by exhaustive search.
// Both lengths are capped at kBruteForceMaxLength.
inline constexpr std::size_t kBruteForceMaxLength = 10;
double dtw_bruteforce(const PredictionSequence& a, const PredictionSequence& b);

// All paths with their costs, for oracle checks on tiny inputs.
std::vector<double> enumerate_path_costs(const Matrix& costs);

// |P_{τ,τ'}|, the Delannoy number D(τ−1, τ'−1).
double count_alignment_paths(std::size_t tau_a, std::size_t tau_b);

// Soft-DTW of every (queries[i], references[j]) pair; result is
// queries.size() × references.size(). Pairs run in parallel.
Matrix pairwise_soft_dtw(const std::vector<PredictionSequence>& queries,
                         const std::vector<PredictionSequence>& references, double gamma);

}  // namespace seqtraj
