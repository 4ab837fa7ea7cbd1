#include "seqtraj/reference.hpp"

#include <cmath>
#include <limits>

namespace seqtraj::reference {

Matrix distance_matrix(const PredictionSequence& a, const PredictionSequence& b) {
  if (a.cols() != b.cols()) throw ArgumentError("distance_matrix: class-count mismatch");
  Matrix d(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) {
        const double diff = a(i, k) - b(j, k);
        acc += diff * diff;
      }
      d(i, j) = acc;
    }
  }
  return d;
}

double soft_dtw(const PredictionSequence& a, const PredictionSequence& b, double gamma) {
  const Matrix d = reference::distance_matrix(a, b);
  const double inf = std::numeric_limits<double>::infinity();
  Matrix r(a.rows() + 1, b.rows() + 1, inf);
  r(0, 0) = 0.0;
  for (std::size_t i = 1; i <= a.rows(); ++i) {
    for (std::size_t j = 1; j <= b.rows(); ++j) {
      const double x = r(i - 1, j);
      const double y = r(i, j - 1);
      const double z = r(i - 1, j - 1);
      const double m = std::min(x, std::min(y, z));
      double soft = m;
      if (gamma > 0.0) {
        soft = m - gamma * std::log(std::exp(-(x - m) / gamma) + std::exp(-(y - m) / gamma) +
                                    std::exp(-(z - m) / gamma));
      }
      r(i, j) = d(i - 1, j - 1) + soft;
    }
  }
  return r(a.rows(), b.rows());
}

Matrix pairwise_soft_dtw(const std::vector<PredictionSequence>& queries,
                         const std::vector<PredictionSequence>& references, double gamma) {
  Matrix out(queries.size(), references.size());
  for (std::size_t i = 0; i < queries.size(); ++i) {
    for (std::size_t j = 0; j < references.size(); ++j) {
      out(i, j) = reference::soft_dtw(queries[i], references[j], gamma);
    }
  }
  return out;
}

std::vector<PredictionSequence> forward_batch(const ClassifierParams& params,
                                              const std::vector<FeatureSequence>& batch) {
  std::vector<PredictionSequence> out;
  out.reserve(batch.size());
  for (const auto& seq : batch) {
    PredictionSequence phi(seq.tau(), params.num_classes());
    for (std::size_t t = 0; t < seq.tau(); ++t) {
      double top = -std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < params.num_classes(); ++c) {
        double u = params.bias[c];
        for (std::size_t k = 0; k < seq.dim(); ++k) u += params.weight(c, k) * seq.frames(t, k);
        phi(t, c) = u;
        top = std::max(top, u);
      }
      double total = 0.0;
      for (std::size_t c = 0; c < params.num_classes(); ++c) {
        phi(t, c) = std::exp(phi(t, c) - top);
        total += phi(t, c);
      }
      for (std::size_t c = 0; c < params.num_classes(); ++c) phi(t, c) /= total;
    }
    out.push_back(std::move(phi));
  }
  return out;
}

std::vector<double> encode(const FrozenEncoder& encoder, const RasterImage& img) {
  const Matrix& p = encoder.projection();
  std::vector<double> z(p.rows());
  for (std::size_t r = 0; r < p.rows(); ++r) {
    double acc = 0.0;
    for (std::size_t k = 0; k < p.cols(); ++k) acc += p(r, k) * img.pixels[k];
    z[r] = std::tanh(acc);
  }
  return z;
}

}  // namespace seqtraj::reference
