#include "seqtraj/barycenter.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "seqtraj/parallel.hpp"

namespace seqtraj {
namespace {

// Lexicographic order on (weight, length, values) so accumulation does not
// depend on how the caller ordered the support set.
std::vector<std::size_t> canonical_order(const SupportSet& support) {
  std::vector<std::size_t> order(support.sequences.size());
  std::iota(order.begin(), order.end(), 0);
  auto less = [&](std::size_t x, std::size_t y) {
    if (support.weights[x] != support.weights[y]) return support.weights[x] < support.weights[y];
    const auto& a = support.sequences[x];
    const auto& b = support.sequences[y];
    if (a.rows() != b.rows()) return a.rows() < b.rows();
    return std::lexicographical_compare(a.data().begin(), a.data().end(), b.data().begin(),
                                        b.data().end());
  };
  std::stable_sort(order.begin(), order.end(), less);
  return order;
}

struct ObjectiveAndGradient {
  double value = 0.0;
  Matrix grad;
};

ObjectiveAndGradient objective_and_gradient(const SupportSet& support,
                                            const std::vector<std::size_t>& order,
                                            const PredictionSequence& m, double gamma) {
  std::vector<SoftDtwGradient> parts(order.size());
  parallel_for(order.size(), [&](std::size_t k) {
    parts[k] = soft_dtw_grad(support.sequences[order[k]], m, gamma);
  });
  ObjectiveAndGradient out{0.0, Matrix(m.rows(), m.cols())};
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::size_t n = order[k];
    const double scale = support.weights[n] / static_cast<double>(support.sequences[n].rows());
    out.value += scale * parts[k].value;
    auto g = out.grad.data();
    auto part = parts[k].grad_b.data();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += scale * part[i];
  }
  return out;
}

}  // namespace

SupportSet SupportSet::uniform(std::vector<PredictionSequence> sequences) {
  SupportSet s;
  const double w = sequences.empty() ? 0.0 : 1.0 / static_cast<double>(sequences.size());
  s.weights.assign(sequences.size(), w);
  s.sequences = std::move(sequences);
  return s;
}

void validate_support(const SupportSet& support) {
  if (support.sequences.empty()) throw ArgumentError("barycenter: empty support set");
  if (support.weights.size() != support.sequences.size()) {
    throw ArgumentError("barycenter: weights and sequences differ in count");
  }
  const std::size_t classes = support.sequences.front().cols();
  double total = 0.0;
  for (std::size_t n = 0; n < support.sequences.size(); ++n) {
    const auto& s = support.sequences[n];
    if (s.rows() == 0) throw ArgumentError("barycenter: support sequence " + std::to_string(n) + " is empty");
    if (s.cols() != classes) throw ArgumentError("barycenter: class-count mismatch in support");
    if (!(support.weights[n] >= 0.0)) throw ArgumentError("barycenter: negative weight");
    total += support.weights[n];
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw ArgumentError("barycenter: weights sum to " + format_double(total) + ", expected 1");
  }
}

PredictionSequence resample_linear(const PredictionSequence& seq, std::size_t new_length,
                                   bool renormalize) {
  if (new_length == 0) throw ArgumentError("resample_linear: new_length must be >= 1");
  if (seq.rows() == 0) throw ArgumentError("resample_linear: empty sequence");
  const std::size_t tau = seq.rows();
  const std::size_t classes = seq.cols();
  PredictionSequence out(new_length, classes);
  for (std::size_t k = 0; k < new_length; ++k) {
    double pos = 0.0;
    if (new_length > 1) {
      pos = static_cast<double>(k) * static_cast<double>(tau - 1) /
            static_cast<double>(new_length - 1);
    } else {
      pos = 0.5 * static_cast<double>(tau - 1);
    }
    const auto lo = std::min(static_cast<std::size_t>(std::floor(pos)), tau - 1);
    const std::size_t hi = std::min(lo + 1, tau - 1);
    const double frac = pos - static_cast<double>(lo);
    auto row = out.row(k);
    for (std::size_t c = 0; c < classes; ++c) {
      row[c] = frac == 0.0 ? seq(lo, c) : (1.0 - frac) * seq(lo, c) + frac * seq(hi, c);
    }
    if (renormalize && frac != 0.0) {
      double total = 0.0;
      for (double v : row) total += v;
      if (total > 0.0) {
        for (double& v : row) v /= total;
      }
    }
  }
  return out;
}

std::size_t barycenter_length(const SupportSet& support) {
  std::size_t total = 0;
  for (const auto& s : support.sequences) total += s.rows();
  const double mean = static_cast<double>(total) / static_cast<double>(support.sequences.size());
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(mean)));
}

double barycenter_objective(const SupportSet& support, const PredictionSequence& m, double gamma) {
  validate_support(support);
  if (m.cols() != support.sequences.front().cols()) {
    throw ArgumentError("barycenter_objective: exemplar has " + std::to_string(m.cols()) +
                        " classes, support has " +
                        std::to_string(support.sequences.front().cols()));
  }
  const auto order = canonical_order(support);
  double total = 0.0;
  for (std::size_t n : order) {
    total += support.weights[n] / static_cast<double>(support.sequences[n].rows()) *
             soft_dtw(support.sequences[n], m, gamma);
  }
  return total;
}

Exemplar barycenter(const SupportSet& support, const BarycenterOptions& options) {
  validate_support(support);
  if (!(options.gamma > 0.0)) throw ArgumentError("barycenter: gamma must be > 0");
  if (options.steps == 0) throw ArgumentError("barycenter: steps must be >= 1");
  if (!(options.step_size > 0.0)) throw ArgumentError("barycenter: step_size must be > 0");

  const auto order = canonical_order(support);
  const std::size_t length = barycenter_length(support);
  const std::size_t classes = support.sequences.front().cols();

  PredictionSequence current(length, classes);
  for (std::size_t n : order) {
    const auto resampled = resample_linear(support.sequences[n], length, options.project_rows);
    auto dst = current.data();
    auto src = resampled.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += support.weights[n] * src[i];
  }
  if (options.project_rows) {
    for (std::size_t t = 0; t < length; ++t) project_to_simplex(current.row(t));
  }

  Exemplar best;
  best.trace.reserve(options.steps + 1);
  for (std::size_t step = 0;; ++step) {
    ObjectiveAndGradient eval;
    try {
      eval = objective_and_gradient(support, order, current, options.gamma);
    } catch (const NumericalError& e) {
      throw NumericalError("barycenter: step " + std::to_string(step) + ": " + e.what());
    }
    if (!std::isfinite(eval.value) || !eval.grad.all_finite()) {
      throw NumericalError("barycenter: non-finite objective or gradient at step " +
                           std::to_string(step));
    }
    best.trace.push_back(eval.value);
    if (step == 0) {
      best.initial_objective = eval.value;
      best.objective = eval.value;
      best.rows = current;
    } else if (eval.value < best.objective) {
      best.objective = eval.value;
      best.rows = current;
    }
    if (step == options.steps) break;

    auto x = current.data();
    auto g = eval.grad.data();
    for (std::size_t i = 0; i < x.size(); ++i) x[i] -= options.step_size * g[i];
    if (options.project_rows) {
      for (std::size_t t = 0; t < length; ++t) project_to_simplex(current.row(t));
    }
  }
  return best;
}

}  // namespace seqtraj
