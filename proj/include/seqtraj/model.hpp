#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "seqtraj/numerics.hpp"
#include "seqtraj/softdtw.hpp"

namespace seqtraj {

// A τ×d feature trajectory from the frozen encoder, plus its supervision.
struct FeatureSequence {
  std::string id;
  int label = -1;                 // sequence class, -1 when unlabeled
  std::vector<int> frame_labels;  // empty, or one label per frame
  Matrix frames;                  // τ×d

  std::size_t tau() const { return frames.rows(); }
  std::size_t dim() const { return frames.cols(); }
  bool has_frame_labels() const { return !frame_labels.empty(); }
};

// Throws ArgumentError on non-finite frames or a frame-label length mismatch.
void validate_sequence(const FeatureSequence& seq);

// φ_t = softmax(W z_t + b), W is C×d.
struct ClassifierParams {
  Matrix weight;
  std::vector<double> bias;

  std::size_t num_classes() const { return weight.rows(); }
  std::size_t dim() const { return weight.cols(); }

  friend bool operator==(const ClassifierParams&, const ClassifierParams&) = default;
};

struct ParamGrads {
  Matrix weight;
  std::vector<double> bias;

  static ParamGrads zeros_like(const ClassifierParams& p);
  void add(const ParamGrads& other);
};

ClassifierParams init_params(std::size_t num_classes, std::size_t dim, double scale, Rng& rng);

PredictionSequence forward(const ClassifierParams& params, const Matrix& frames);
PredictionSequence forward(const ClassifierParams& params, const FeatureSequence& seq);

// Element-wise sigmoid head on the same affine map. Not used for training.
Matrix forward_sigmoid(const ClassifierParams& params, const Matrix& frames);

// Predictions for many sequences, one sequence per parallel task.
std::vector<PredictionSequence> forward_batch(const ClassifierParams& params,
                                              const std::vector<FeatureSequence>& batch);

// Backprop of dL/dΦ through softmax and the affine map.
ParamGrads backward(const ClassifierParams& params, const Matrix& frames,
                    const Matrix& grad_phi);
ParamGrads backward(const ClassifierParams& params, const Matrix& frames,
                    const PredictionSequence& phi, const Matrix& grad_phi);

// Text format:
//   seqtraj-params v1 C d
//   C lines of d weights
//   1 line of C biases
// Values use 17 significant digits so a read-write cycle is exact.
void write_params(std::ostream& out, const ClassifierParams& params);
ClassifierParams read_params(std::istream& in);
void save_params(const std::string& path, const ClassifierParams& params);
ClassifierParams load_params(const std::string& path);

}  // namespace seqtraj
