#pragma once

// Single-threaded reference versions of the parallel kernels. They share no
// code with the OpenMP paths and exist for equivalence tests and benchmarks.

#include <vector>

#include "seqtraj/episodes.hpp"
#include "seqtraj/model.hpp"
#include "seqtraj/softdtw.hpp"

namespace seqtraj::reference {

Matrix distance_matrix(const PredictionSequence& a, const PredictionSequence& b);

// Textbook soft-DTW recursion over a (τ+1)×(τ'+1) table.
double soft_dtw(const PredictionSequence& a, const PredictionSequence& b, double gamma);

Matrix pairwise_soft_dtw(const std::vector<PredictionSequence>& queries,
                         const std::vector<PredictionSequence>& references, double gamma);

std::vector<PredictionSequence> forward_batch(const ClassifierParams& params,
                                              const std::vector<FeatureSequence>& batch);

std::vector<double> encode(const FrozenEncoder& encoder, const RasterImage& img);

}  // namespace seqtraj::reference
