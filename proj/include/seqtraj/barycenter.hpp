#pragma once

#include <vector>

#include "seqtraj/softdtw.hpp"

namespace seqtraj {

// Same-class prediction sequences with simplex weights (Σ w = 1).
struct SupportSet {
  std::vector<PredictionSequence> sequences;
  std::vector<double> weights;

  // Equal weights 1/N.
  static SupportSet uniform(std::vector<PredictionSequence> sequences);
};

// Throws unless the set is nonempty, shapes agree and weights lie on the simplex.
void validate_support(const SupportSet& support);

struct BarycenterOptions {
  double gamma = 0.1;
  std::size_t steps = 200;
  double step_size = 0.1;
  // Project every row back onto the probability simplex after each step.
  // Off gives a free exemplar in R^{τ̄×C}.
  bool project_rows = true;
};

struct Exemplar {
  PredictionSequence rows;  // τ̄×C
  double initial_objective = 0.0;
  double objective = 0.0;  // objective of `rows` (the best iterate)
  // Objective of iterate k, k = 0 (initialization) .. steps.
  std::vector<double> trace;
};

// Linear interpolation at `new_length` evenly spaced positions spanning the
// sequence; each output row is rescaled to sum to 1 when `renormalize`.
PredictionSequence resample_linear(const PredictionSequence& seq, std::size_t new_length,
                                   bool renormalize = true);

// round(mean τ_n), at least 1.
std::size_t barycenter_length(const SupportSet& support);

// Σ_n (w_n/τ_n)·soft_dtw(Φ_n, M, γ).
double barycenter_objective(const SupportSet& support, const PredictionSequence& m, double gamma);

// Gradient descent on the weighted soft-DTW Fréchet objective, started from
// the weighted mean of the resampled supports. Returns the best iterate.
// Accumulation runs in a canonical support order, so permuting the support
// set (with its weights) gives a bit-identical result.
Exemplar barycenter(const SupportSet& support, const BarycenterOptions& options = {});

}  // namespace seqtraj
