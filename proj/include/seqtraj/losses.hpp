#pragma once

#include <ostream>
#include <vector>

#include "seqtraj/softdtw.hpp"

namespace seqtraj {

struct LossWeights {
  double alpha = 1.0;  // cross-entropy weight
  double beta = 0.1;   // smoothness weight
  double gamma = 0.1;  // soft-DTW softness
};

struct LossReport {
  double align = 0.0;
  double ce = 0.0;
  double smooth = 0.0;
  double total = 0.0;
};

enum class CeMode { Frame, Sequence };

// A scalar loss and dL/dΦ for every query, in query order.
struct LossTerm {
  double value = 0.0;
  std::vector<Matrix> grads;
};

// Mean soft-DTW between each query and its exemplar. Exemplars are constants.
// With `length_normalized`, each pair is divided by the query length.
LossTerm loss_align(const std::vector<PredictionSequence>& queries,
                    const std::vector<PredictionSequence>& exemplars, double gamma,
                    bool length_normalized = false);

// Per-frame cross-entropy, each query normalized by its own τ.
LossTerm loss_ce_frame(const std::vector<PredictionSequence>& queries,
                       const std::vector<std::vector<int>>& frame_labels);

// Cross-entropy of the time-averaged prediction.
LossTerm loss_ce_sequence(const std::vector<PredictionSequence>& queries,
                          const std::vector<int>& labels);

// Mean squared consecutive step, each query normalized by its own τ − 1.
LossTerm loss_smooth(const std::vector<PredictionSequence>& queries);

// Exact SoftMin lower bound of soft-DTW: −γ log |P_{τ,τ'}|.
double soft_dtw_lower_bound(std::size_t tau_a, std::size_t tau_b, double gamma);

struct LossInputs {
  std::vector<PredictionSequence> queries;
  std::vector<PredictionSequence> exemplars;    // one per query; unused when align is off
  std::vector<int> labels;                      // sequence mode
  std::vector<std::vector<int>> frame_labels;   // frame mode

  // Extra trajectories that take part in CE and smoothness only (the
  // supports behind each exemplar, when that option is on). Gradients for
  // these come back after the query gradients.
  std::vector<PredictionSequence> auxiliary;
  std::vector<int> auxiliary_labels;
  std::vector<std::vector<int>> auxiliary_frame_labels;
};

struct LossOptions {
  CeMode ce_mode = CeMode::Sequence;
  bool use_align = true;
  bool align_length_normalized = false;
};

struct TotalLoss {
  LossReport report;
  // dL/dΦ for queries, then for auxiliary sequences.
  std::vector<Matrix> grads;
};

// L = L_align + α·L_CE + β·L_smooth.
TotalLoss loss_total(const LossInputs& inputs, const LossWeights& weights,
                     const LossOptions& options = {});

}  // namespace seqtraj
