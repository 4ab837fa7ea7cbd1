#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "seqtraj/eval.hpp"
#include "seqtraj/trainer.hpp"

using namespace seqtraj;
using testutil::pick;

namespace {

// Pairwise count over every (positive, negative) pair.
double auc_oracle(const ScoredFrames& sf) {
  double wins = 0, pairs = 0;
  for (std::size_t i = 0; i < sf.scores.size(); ++i) {
    if (sf.labels[i] != 1) continue;
    for (std::size_t j = 0; j < sf.scores.size(); ++j) {
      if (sf.labels[j] != 0) continue;
      pairs += 1;
      if (sf.scores[i] > sf.scores[j]) wins += 1;
      if (sf.scores[i] == sf.scores[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

// Recount precision and recall at every distinct threshold.
double ap_oracle(const ScoredFrames& sf) {
  std::vector<double> thresholds = sf.scores;
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  double positives = 0;
  for (int l : sf.labels) positives += l == 1;
  double ap = 0, prev_recall = 0;
  for (double th : thresholds) {
    double tp = 0, fp = 0;
    for (std::size_t i = 0; i < sf.scores.size(); ++i) {
      if (sf.scores[i] >= th) (sf.labels[i] == 1 ? tp : fp) += 1;
    }
    const double recall = tp / positives;
    ap += (recall - prev_recall) * tp / (tp + fp);
    prev_recall = recall;
  }
  return ap;
}

ScoredFrames random_scored(Rng& rng, bool ties) {
  ScoredFrames sf;
  const std::size_t n = pick(rng, 2, 30);
  for (std::size_t i = 0; i < n; ++i) {
    sf.scores.push_back(ties ? static_cast<double>(rng.below(4)) : rng.uniform());
    sf.labels.push_back(static_cast<int>(rng.below(2)));
  }
  sf.labels[0] = 1;
  sf.labels[1] = 0;
  return sf;
}

std::vector<FeatureSequence> separable(std::uint64_t seed, std::size_t per_class) {
  TrajectorySpec spec;
  spec.num_classes = 3;
  spec.per_class = per_class;
  spec.tau = 8;
  spec.dim = 6;
  Rng rng(seed);
  return make_synthetic_trajectory_dataset(spec, rng);
}

}  // namespace

TEST_CASE("roc_auc examples") {
  CHECK(roc_auc({{0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1}}) == 0.75);
  CHECK(roc_auc({{0.1, 0.2, 0.9, 0.95}, {0, 0, 1, 1}}) == 1.0);
  CHECK(roc_auc({{0.5, 0.5, 0.5}, {0, 1, 1}}) == 0.5);
  CHECK_THROWS_AS(roc_auc({{0.1, 0.2}, {1, 1}}), ArgumentError);
  CHECK_THROWS_AS(roc_auc({{0.1, 0.2}, {0, 0}}), ArgumentError);
}

TEST_CASE("average_precision examples") {
  CHECK(average_precision({{0.8, 0.4, 0.35, 0.1}, {1, 0, 1, 0}}) == doctest::Approx(5.0 / 6.0));
  CHECK(average_precision({{0.9, 0.8, 0.1}, {1, 1, 0}}) == 1.0);
  CHECK(average_precision({{0.3, 0.1}, {1, 1}}) == 1.0);
  CHECK_THROWS_AS(average_precision({{0.3, 0.1}, {0, 0}}), ArgumentError);
}

TEST_CASE("metrics against recount oracles") {
  Rng rng(111);
  for (int k = 0; k < 300; ++k) {
    const ScoredFrames sf = random_scored(rng, k % 2 == 0);
    CHECK(roc_auc(sf) == doctest::Approx(auc_oracle(sf)).epsilon(1e-12));
    CHECK(average_precision(sf) == doctest::Approx(ap_oracle(sf)).epsilon(1e-12));
  }
}

TEST_CASE("metric invariances") {
  Rng rng(112);
  for (int k = 0; k < 100; ++k) {
    const ScoredFrames sf = random_scored(rng, false);
    ScoredFrames monotone = sf;
    for (double& s : monotone.scores) s = std::exp(3 * s) - 7;
    CHECK(roc_auc(monotone) == roc_auc(sf));

    ScoredFrames shuffled = sf;
    for (std::size_t i = shuffled.scores.size(); i > 1; --i) {
      const std::size_t j = rng.below(i);
      std::swap(shuffled.scores[i - 1], shuffled.scores[j]);
      std::swap(shuffled.labels[i - 1], shuffled.labels[j]);
    }
    CHECK(roc_auc(shuffled) == doctest::Approx(roc_auc(sf)).epsilon(1e-12));
    CHECK(average_precision(shuffled) == doctest::Approx(average_precision(sf)).epsilon(1e-12));

    ScoredFrames flipped = sf;
    for (int& l : flipped.labels) l = 1 - l;
    CHECK(roc_auc(sf) + roc_auc(flipped) == doctest::Approx(1.0));
  }
}

TEST_CASE("predict_label and classify") {
  CHECK(predict_label(Matrix::from_rows({{0.2, 0.8}, {0.6, 0.4}})) == 1);
  CHECK(predict_label(Matrix::from_rows({{0.5, 0.5}})) == 0);
  CHECK(predict_label(Matrix::from_rows({{0.2, 0.4, 0.4}})) == 1);

  auto data = separable(113, 4);
  // Uniform model: every prediction ties, so the tie rule picks class 0.
  Rng rng(114);
  const ClassifierParams uniform = init_params(3, 6, 0.0, rng);
  CHECK(classify(uniform, data) == doctest::Approx(1.0 / 3.0));
  CHECK_THROWS_AS(classify(uniform, {}), ArgumentError);

  // A model that reads the label off a one-hot feature gets everything right.
  std::vector<FeatureSequence> onehot = data;
  for (auto& s : onehot) {
    s.frames = Matrix(s.frames.rows(), 3, 0.0);
    for (std::size_t t = 0; t < s.frames.rows(); ++t) s.frames(t, s.label) = 1.0;
  }
  ClassifierParams reader{Matrix::identity(3), {0, 0, 0}};
  for (double& w : reader.weight.data()) w *= 20.0;
  CHECK(classify(reader, onehot) == 1.0);
}

TEST_CASE("anomaly scores") {
  Rng rng(115);
  const ClassifierParams uniform = init_params(4, 3, 0.0, rng);
  FeatureSequence seq;
  seq.frames = testutil::random_normal(rng, 5, 3);
  for (double s : anomaly_scores(uniform, seq, 2)) CHECK(s == doctest::Approx(0.25));
  CHECK_THROWS_AS(anomaly_scores(uniform, seq, 4), ArgumentError);
  const ClassifierParams p = init_params(4, 3, 5.0, rng);
  for (double s : anomaly_scores(p, seq, 1)) {
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
  }
  CHECK_THROWS_AS(score_frames(p, {seq}, 1), ArgumentError);
}

TEST_CASE("trained anomaly scores rise inside anomaly windows") {
  AnomalySpec spec;
  spec.num_normals = 20;
  spec.num_abnormal = 20;
  spec.anomaly_shift = 2.0;
  Rng rng(116);
  const auto data = make_anomaly_dataset(spec, rng);
  TrainConfig c;
  c.epochs = 10;
  c.learning_rate = 1e-2;
  c.barycenter_steps = 10;
  c.loss.ce_mode = CeMode::Frame;
  const TrainState s = train(data, c);
  const ScoredFrames sf = score_frames(s.params, data, 1);
  double inside = 0, outside = 0, n_in = 0, n_out = 0;
  for (std::size_t i = 0; i < sf.scores.size(); ++i) {
    (sf.labels[i] == 1 ? inside : outside) += sf.scores[i];
    (sf.labels[i] == 1 ? n_in : n_out) += 1;
  }
  CHECK(inside / n_in > outside / n_out);
}

TEST_CASE("separable data") {
  const auto data = separable(117, 12);
  const auto [train_set, test_set] = split_per_class(data, 6);
  TrainConfig c;
  c.epochs = 20;
  c.learning_rate = 1e-2;
  c.init_scale = 1.0;
  c.barycenter_steps = 10;
  c.loss.ce_mode = CeMode::Frame;
  const TrainState s = train(train_set, c);
  CHECK(classify(s.params, train_set) >= 0.99);

  BarycenterOptions bo;
  bo.steps = 20;
  const ExemplarBank bank = build_exemplar_bank(s.params, train_set, 3, bo);
  CHECK(bank.labels == std::vector<int>{0, 1, 2});
  // Nearest-exemplar decisions agree with argmax decisions.
  std::size_t agree = 0;
  for (const auto& seq : test_set) {
    const Matrix phi = forward(s.params, seq.frames);
    agree += nearest_exemplar_label(bank, phi, 0.1) == predict_label(phi);
  }
  CHECK(static_cast<double>(agree) / test_set.size() >= 0.95);
  CHECK(classify_nearest_exemplar(s.params, bank, test_set, 0.1) >= 0.95);
}

TEST_CASE("nearest exemplar ties go to the lowest label") {
  ExemplarBank bank;
  const Matrix e = Matrix::from_rows({{0.5, 0.5}});
  bank.labels = {1, 0};
  bank.exemplars = {e, e};
  CHECK(nearest_exemplar_label(bank, e, 0.1) == 0);
}

TEST_CASE("smoothness audit") {
  Rng rng(118);
  SUBCASE("examples") {
    FeatureSequence seq;
    seq.frames = testutil::random_normal(rng, 4, 3);
    const SmoothnessAudit zero = smoothness_audit(init_params(2, 3, 0.0, rng), seq);
    CHECK(zero.max_pred_step == 0.0);
    CHECK(zero.bound == 0.0);
    CHECK(zero.holds);

    FeatureSequence constant;
    constant.frames = Matrix(5, 3, 0.7);
    const SmoothnessAudit flat = smoothness_audit(init_params(2, 3, 1.0, rng), constant);
    CHECK(flat.epsilon == 0.0);
    CHECK(flat.max_pred_step == 0.0);

    FeatureSequence one;
    one.frames = Matrix(1, 3, 0.0);
    CHECK_THROWS_AS(smoothness_audit(init_params(2, 3, 1.0, rng), one), ArgumentError);
  }
  SUBCASE("sigmoid uses a quarter of the spectral norm") {
    FeatureSequence seq;
    seq.frames = testutil::random_normal(rng, 6, 4);
    const ClassifierParams p = init_params(3, 4, 2.0, rng);
    const SmoothnessAudit a = smoothness_audit(p, seq, Activation::Sigmoid);
    CHECK(a.lipschitz_used == doctest::Approx(0.25 * a.spectral));
    CHECK(a.holds);
  }
}

TEST_CASE("mean_std and weights csv") {
  const MeanStd ms = mean_std({1.0, 2.0, 3.0});
  CHECK(ms.mean == doctest::Approx(2.0));
  CHECK(ms.std > 0.0);
  CHECK(mean_std({4.0}).std == 0.0);
  const ClassifierParams p{Matrix::from_rows({{1, 2}, {3, 4}}), {0, 0}};
  const std::string csv = weights_csv(p);
  CHECK(std::count(csv.begin(), csv.end(), '\n') >= 2);
  CHECK(csv.find('4') != std::string::npos);
}
