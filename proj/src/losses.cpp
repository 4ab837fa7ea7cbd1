#include "seqtraj/losses.hpp"

#include <cmath>
#include <string>

#include "seqtraj/parallel.hpp"

namespace seqtraj {
namespace {

void check_label(int label, std::size_t classes, const char* who) {
  if (label < 0 || static_cast<std::size_t>(label) >= classes) {
    throw ArgumentError(std::string(who) + ": label " + std::to_string(label) +
                        " out of range for " + std::to_string(classes) + " classes");
  }
}

void add_scaled(std::vector<Matrix>& dst, std::size_t offset, const LossTerm& term,
                double scale) {
  for (std::size_t i = 0; i < term.grads.size(); ++i) {
    auto d = dst[offset + i].data();
    auto s = term.grads[i].data();
    for (std::size_t k = 0; k < d.size(); ++k) d[k] += scale * s[k];
  }
}

}  // namespace

LossTerm loss_align(const std::vector<PredictionSequence>& queries,
                    const std::vector<PredictionSequence>& exemplars, double gamma,
                    bool length_normalized) {
  if (queries.empty()) throw ArgumentError("loss_align: empty query set");
  if (queries.size() != exemplars.size()) {
    throw ArgumentError("loss_align: " + std::to_string(queries.size()) + " queries but " +
                        std::to_string(exemplars.size()) + " exemplars");
  }
  const double count = static_cast<double>(queries.size());
  std::vector<SoftDtwGradient> parts(queries.size());
  parallel_for(queries.size(),
               [&](std::size_t i) { parts[i] = soft_dtw_grad(queries[i], exemplars[i], gamma); });
  LossTerm out;
  out.grads.reserve(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const double scale =
        length_normalized ? 1.0 / (count * static_cast<double>(queries[i].rows())) : 1.0 / count;
    out.value += scale * parts[i].value;
    Matrix g = std::move(parts[i].grad_a);
    for (double& v : g.data()) v *= scale;
    out.grads.push_back(std::move(g));
  }
  return out;
}

LossTerm loss_ce_frame(const std::vector<PredictionSequence>& queries,
                       const std::vector<std::vector<int>>& frame_labels) {
  if (queries.empty()) throw ArgumentError("loss_ce_frame: empty query set");
  if (frame_labels.size() != queries.size()) {
    throw ArgumentError("loss_ce_frame: label list count differs from query count");
  }
  const double count = static_cast<double>(queries.size());
  LossTerm out;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const auto& phi = queries[i];
    const auto& labels = frame_labels[i];
    if (labels.size() != phi.rows()) {
      throw ArgumentError("loss_ce_frame: query " + std::to_string(i) + " has " +
                          std::to_string(labels.size()) + " labels for " +
                          std::to_string(phi.rows()) + " frames");
    }
    const double scale = 1.0 / (static_cast<double>(phi.rows()) * count);
    Matrix g(phi.rows(), phi.cols());
    for (std::size_t t = 0; t < phi.rows(); ++t) {
      check_label(labels[t], phi.cols(), "loss_ce_frame");
      const double p = phi(t, labels[t]);
      out.value -= scale * std::log(p);
      g(t, labels[t]) = -scale / p;
    }
    out.grads.push_back(std::move(g));
  }
  return out;
}

LossTerm loss_ce_sequence(const std::vector<PredictionSequence>& queries,
                          const std::vector<int>& labels) {
  if (queries.empty()) throw ArgumentError("loss_ce_sequence: empty query set");
  if (labels.size() != queries.size()) {
    throw ArgumentError("loss_ce_sequence: label count differs from query count");
  }
  const double count = static_cast<double>(queries.size());
  LossTerm out;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const auto& phi = queries[i];
    check_label(labels[i], phi.cols(), "loss_ce_sequence");
    const auto y = static_cast<std::size_t>(labels[i]);
    const double tau = static_cast<double>(phi.rows());
    double mean = 0.0;
    for (std::size_t t = 0; t < phi.rows(); ++t) mean += phi(t, y);
    mean /= tau;
    out.value -= std::log(mean) / count;
    Matrix g(phi.rows(), phi.cols());
    const double per_frame = -1.0 / (count * tau * mean);
    for (std::size_t t = 0; t < phi.rows(); ++t) g(t, y) = per_frame;
    out.grads.push_back(std::move(g));
  }
  return out;
}

LossTerm loss_smooth(const std::vector<PredictionSequence>& queries) {
  if (queries.empty()) throw ArgumentError("loss_smooth: empty query set");
  const double count = static_cast<double>(queries.size());
  LossTerm out;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const auto& phi = queries[i];
    if (phi.rows() < 2) {
      throw ArgumentError("loss_smooth: query " + std::to_string(i) + " has fewer than 2 frames");
    }
    const double scale = 1.0 / (static_cast<double>(phi.rows() - 1) * count);
    Matrix g(phi.rows(), phi.cols());
    for (std::size_t t = 1; t < phi.rows(); ++t) {
      for (std::size_t c = 0; c < phi.cols(); ++c) {
        const double step = phi(t, c) - phi(t - 1, c);
        out.value += scale * step * step;
        g(t, c) += 2.0 * scale * step;
        g(t - 1, c) -= 2.0 * scale * step;
      }
    }
    out.grads.push_back(std::move(g));
  }
  return out;
}

double soft_dtw_lower_bound(std::size_t tau_a, std::size_t tau_b, double gamma) {
  return -gamma * std::log(count_alignment_paths(tau_a, tau_b));
}

TotalLoss loss_total(const LossInputs& inputs, const LossWeights& weights,
                     const LossOptions& options) {
  const auto& queries = inputs.queries;
  if (queries.empty()) throw ArgumentError("loss_total: empty query set");
  const std::size_t nq = queries.size();
  const std::size_t na = inputs.auxiliary.size();

  TotalLoss out;
  out.grads.reserve(nq + na);
  for (const auto& q : queries) out.grads.emplace_back(q.rows(), q.cols());
  for (const auto& a : inputs.auxiliary) out.grads.emplace_back(a.rows(), a.cols());

  if (options.use_align) {
    const auto align =
        loss_align(queries, inputs.exemplars, weights.gamma, options.align_length_normalized);
    out.report.align = align.value;
    add_scaled(out.grads, 0, align, 1.0);
  }

  std::vector<PredictionSequence> scored = queries;
  scored.insert(scored.end(), inputs.auxiliary.begin(), inputs.auxiliary.end());

  // Terms with a zero weight are still reported when their inputs allow it.
  std::vector<std::vector<int>> frame_labels = inputs.frame_labels;
  frame_labels.insert(frame_labels.end(), inputs.auxiliary_frame_labels.begin(),
                      inputs.auxiliary_frame_labels.end());
  std::vector<int> labels = inputs.labels;
  labels.insert(labels.end(), inputs.auxiliary_labels.begin(), inputs.auxiliary_labels.end());
  const bool have_labels = options.ce_mode == CeMode::Frame ? frame_labels.size() == scored.size()
                                                            : labels.size() == scored.size();
  if (weights.alpha != 0.0 || have_labels) {
    const LossTerm ce = options.ce_mode == CeMode::Frame ? loss_ce_frame(scored, frame_labels)
                                                         : loss_ce_sequence(scored, labels);
    out.report.ce = ce.value;
    if (weights.alpha != 0.0) add_scaled(out.grads, 0, ce, weights.alpha);
  }

  bool all_long_enough = true;
  for (const auto& s : scored) all_long_enough = all_long_enough && s.rows() >= 2;
  if (weights.beta != 0.0 || all_long_enough) {
    const auto smooth = loss_smooth(scored);
    out.report.smooth = smooth.value;
    if (weights.beta != 0.0) add_scaled(out.grads, 0, smooth, weights.beta);
  }

  out.report.total =
      out.report.align + weights.alpha * out.report.ce + weights.beta * out.report.smooth;
  return out;
}

}  // namespace seqtraj
