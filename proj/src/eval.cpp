#include "seqtraj/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "seqtraj/parallel.hpp"

namespace seqtraj {
namespace {

void check_scored(const ScoredFrames& sf, const char* who) {
  if (sf.scores.empty()) throw ArgumentError(std::string(who) + ": no frames");
  if (sf.scores.size() != sf.labels.size()) {
    throw ArgumentError(std::string(who) + ": scores and labels differ in length");
  }
  for (std::size_t i = 0; i < sf.scores.size(); ++i) {
    if (std::isnan(sf.scores[i])) throw ArgumentError(std::string(who) + ": NaN score");
    if (sf.labels[i] != 0 && sf.labels[i] != 1) {
      throw ArgumentError(std::string(who) + ": labels must be 0 or 1");
    }
  }
}

std::vector<std::size_t> order_by_score_desc(const std::vector<double>& scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

}  // namespace

double roc_auc(const ScoredFrames& sf) {
  check_scored(sf, "roc_auc");
  const auto positives = static_cast<double>(std::count(sf.labels.begin(), sf.labels.end(), 1));
  const double negatives = static_cast<double>(sf.labels.size()) - positives;
  if (positives == 0.0 || negatives == 0.0) {
    throw ArgumentError("roc_auc: labels must contain both classes");
  }
  // Walk tie groups from the highest score down. Each positive beats every
  // negative in lower groups and ties half of the negatives in its own group.
  const auto order = order_by_score_desc(sf.scores);
  double wins = 0.0;
  double negatives_above = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    double group_pos = 0.0;
    double group_neg = 0.0;
    while (j < order.size() && sf.scores[order[j]] == sf.scores[order[i]]) {
      (sf.labels[order[j]] == 1 ? group_pos : group_neg) += 1.0;
      ++j;
    }
    const double negatives_below = negatives - negatives_above - group_neg;
    wins += group_pos * (negatives_below + 0.5 * group_neg);
    negatives_above += group_neg;
    i = j;
  }
  return wins / (positives * negatives);
}

double average_precision(const ScoredFrames& sf) {
  check_scored(sf, "average_precision");
  const auto positives = static_cast<double>(std::count(sf.labels.begin(), sf.labels.end(), 1));
  if (positives == 0.0) throw ArgumentError("average_precision: no positive labels");
  const auto order = order_by_score_desc(sf.scores);
  double tp = 0.0;
  double fp = 0.0;
  double ap = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    double new_tp = 0.0;
    while (j < order.size() && sf.scores[order[j]] == sf.scores[order[i]]) {
      if (sf.labels[order[j]] == 1) {
        new_tp += 1.0;
      } else {
        fp += 1.0;
      }
      ++j;
    }
    tp += new_tp;
    if (new_tp > 0.0) ap += (new_tp / positives) * (tp / (tp + fp));
    i = j;
  }
  return ap;
}

int predict_label(const PredictionSequence& phi) {
  if (phi.rows() == 0) throw ArgumentError("predict_label: empty prediction sequence");
  std::vector<double> mean(phi.cols(), 0.0);
  for (std::size_t t = 0; t < phi.rows(); ++t) {
    for (std::size_t c = 0; c < phi.cols(); ++c) mean[c] += phi(t, c);
  }
  return static_cast<int>(std::max_element(mean.begin(), mean.end()) - mean.begin());
}

double classify(const ClassifierParams& params, const std::vector<FeatureSequence>& dataset) {
  if (dataset.empty()) throw ArgumentError("classify: empty dataset");
  const auto preds = forward_batch(params, dataset);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (predict_label(preds[i]) == dataset[i].label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

ExemplarBank build_exemplar_bank(const ClassifierParams& params,
                                 const std::vector<FeatureSequence>& reference,
                                 std::size_t per_class, const BarycenterOptions& options) {
  if (per_class < 1) throw ArgumentError("build_exemplar_bank: per_class must be >= 1");
  std::map<int, std::vector<FeatureSequence>> by_class;
  for (const auto& s : reference) {
    auto& members = by_class[s.label];
    if (members.size() < per_class) members.push_back(s);
  }
  if (by_class.empty()) throw ArgumentError("build_exemplar_bank: empty reference set");
  ExemplarBank bank;
  for (const auto& [label, members] : by_class) {
    bank.labels.push_back(label);
    bank.exemplars.emplace_back();
  }
  std::vector<const std::vector<FeatureSequence>*> groups;
  for (const auto& [label, members] : by_class) groups.push_back(&members);
  parallel_for(groups.size(), [&](std::size_t k) {
    bank.exemplars[k] =
        barycenter(SupportSet::uniform(forward_batch(params, *groups[k])), options).rows;
  });
  return bank;
}

int nearest_exemplar_label(const ExemplarBank& bank, const PredictionSequence& phi, double gamma) {
  if (bank.exemplars.empty()) throw ArgumentError("nearest_exemplar_label: empty exemplar bank");
  int best_label = bank.labels.front();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < bank.exemplars.size(); ++k) {
    const double d = soft_dtw(phi, bank.exemplars[k], gamma);
    if (d < best || (d == best && bank.labels[k] < best_label)) {
      best = d;
      best_label = bank.labels[k];
    }
  }
  return best_label;
}

double classify_nearest_exemplar(const ClassifierParams& params, const ExemplarBank& bank,
                                 const std::vector<FeatureSequence>& dataset, double gamma) {
  if (dataset.empty()) throw ArgumentError("classify_nearest_exemplar: empty dataset");
  const auto preds = forward_batch(params, dataset);
  const Matrix dist = pairwise_soft_dtw(preds, bank.exemplars, gamma);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < bank.exemplars.size(); ++k) {
      if (dist(i, k) < dist(i, best)) best = k;
    }
    if (bank.labels[best] == dataset[i].label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

std::vector<double> anomaly_scores(const ClassifierParams& params, const FeatureSequence& seq,
                                   std::size_t anomaly_class) {
  if (anomaly_class >= params.num_classes()) {
    throw ArgumentError("anomaly_scores: class " + std::to_string(anomaly_class) +
                        " out of range for " + std::to_string(params.num_classes()) + " classes");
  }
  const auto phi = forward(params, seq);
  std::vector<double> scores(phi.rows());
  for (std::size_t t = 0; t < phi.rows(); ++t) scores[t] = phi(t, anomaly_class);
  return scores;
}

ScoredFrames score_frames(const ClassifierParams& params, const std::vector<FeatureSequence>& data,
                          std::size_t anomaly_class) {
  ScoredFrames sf;
  for (const auto& s : data) {
    if (!s.has_frame_labels()) {
      throw ArgumentError("score_frames: sequence '" + s.id + "' has no frame labels");
    }
    const auto scores = anomaly_scores(params, s, anomaly_class);
    sf.scores.insert(sf.scores.end(), scores.begin(), scores.end());
    for (int y : s.frame_labels) sf.labels.push_back(y == static_cast<int>(anomaly_class) ? 1 : 0);
  }
  return sf;
}

SmoothnessAudit smoothness_audit(const ClassifierParams& params, const FeatureSequence& seq,
                                 Activation activation) {
  if (seq.tau() < 2) throw ArgumentError("smoothness_audit: need at least 2 frames");
  const Matrix phi = activation == Activation::Softmax ? forward(params, seq.frames)
                                                       : forward_sigmoid(params, seq.frames);
  SmoothnessAudit audit;
  for (std::size_t t = 1; t < seq.tau(); ++t) {
    audit.epsilon = std::max(audit.epsilon,
                             std::sqrt(squared_distance(seq.frames.row(t), seq.frames.row(t - 1))));
    audit.max_pred_step =
        std::max(audit.max_pred_step, std::sqrt(squared_distance(phi.row(t), phi.row(t - 1))));
  }
  audit.spectral = spectral_norm(params.weight);
  audit.lipschitz_used = activation == Activation::Softmax ? audit.spectral : 0.25 * audit.spectral;
  audit.bound = audit.lipschitz_used * audit.epsilon;
  audit.holds = audit.max_pred_step <= audit.bound + 1e-9;
  return audit;
}

MeanStd mean_std(const std::vector<double>& values) {
  MeanStd out;
  if (values.empty()) return out;
  for (double v : values) out.mean += v;
  out.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double acc = 0.0;
    for (double v : values) acc += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(acc / static_cast<double>(values.size() - 1));
  }
  return out;
}

std::string weights_csv(const ClassifierParams& params) {
  std::ostringstream out;
  out << "class";
  for (std::size_t k = 0; k < params.dim(); ++k) out << ",w" << k;
  out << ",bias\n";
  for (std::size_t c = 0; c < params.num_classes(); ++c) {
    out << c;
    for (double w : params.weight.row(c)) out << ',' << format_double(w);
    out << ',' << format_double(params.bias[c]) << '\n';
  }
  return out.str();
}

}  // namespace seqtraj
