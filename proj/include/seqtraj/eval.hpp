#pragma once

#include <string>
#include <vector>

#include "seqtraj/barycenter.hpp"
#include "seqtraj/model.hpp"

namespace seqtraj {

// Frame scores with binary labels.
struct ScoredFrames {
  std::vector<double> scores;
  std::vector<int> labels;  // 0 or 1
};

// P(random positive outscores random negative), ties count ½.
double roc_auc(const ScoredFrames& sf);

// Σ (R_n − R_{n−1})·P_n over descending score thresholds, tied scores
// grouped into a single threshold.
double average_precision(const ScoredFrames& sf);

// Class = argmax of the time-averaged prediction; ties go to the lowest index.
int predict_label(const PredictionSequence& phi);

// Fraction of sequences whose predict_label matches the label.
double classify(const ClassifierParams& params, const std::vector<FeatureSequence>& dataset);

struct ExemplarBank {
  std::vector<int> labels;
  std::vector<PredictionSequence> exemplars;
};

// One exemplar per class, the barycenter of the predictions of the first
// `per_class` reference sequences of that class.
ExemplarBank build_exemplar_bank(const ClassifierParams& params,
                                 const std::vector<FeatureSequence>& reference,
                                 std::size_t per_class, const BarycenterOptions& options);

// Label of the exemplar with the smallest soft-DTW distance to `phi`
// (lowest label on ties).
int nearest_exemplar_label(const ExemplarBank& bank, const PredictionSequence& phi, double gamma);

// Accuracy of nearest-exemplar classification. Distances run in parallel.
double classify_nearest_exemplar(const ClassifierParams& params, const ExemplarBank& bank,
                                 const std::vector<FeatureSequence>& dataset, double gamma);

// score_t = φ_t[anomaly_class].
std::vector<double> anomaly_scores(const ClassifierParams& params, const FeatureSequence& seq,
                                   std::size_t anomaly_class);

// Frame scores and labels pooled over a dataset with frame labels; a frame
// is positive when its label equals `anomaly_class`.
ScoredFrames score_frames(const ClassifierParams& params, const std::vector<FeatureSequence>& data,
                          std::size_t anomaly_class);

enum class Activation { Softmax, Sigmoid };

// Executable form of the smoothness bound ‖φ_{t+1} − φ_t‖₂ ≤ L·ε with
// L = ‖W‖₂ (softmax, L_softmax ≤ 1) or ¼‖W‖₂ (sigmoid).
struct SmoothnessAudit {
  double epsilon = 0.0;        // max_t ‖z_{t+1} − z_t‖₂
  double spectral = 0.0;       // ‖W‖₂
  double lipschitz_used = 0.0;
  double max_pred_step = 0.0;  // max_t ‖φ_{t+1} − φ_t‖₂
  double bound = 0.0;          // lipschitz_used · epsilon
  bool holds = false;          // max_pred_step ≤ bound + 1e-9
};

SmoothnessAudit smoothness_audit(const ClassifierParams& params, const FeatureSequence& seq,
                                 Activation activation = Activation::Softmax);

// Per-sequence seed statistics helper.
struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};
MeanStd mean_std(const std::vector<double>& values);

// Weight matrix as CSV, one row per class, for external heatmaps.
std::string weights_csv(const ClassifierParams& params);

}  // namespace seqtraj
