#include "seqtraj/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "seqtraj/parallel.hpp"

namespace seqtraj {
namespace {

std::vector<double> to_vector(const Matrix& m) {
  return std::vector<double>(m.data().begin(), m.data().end());
}

Matrix from_vector(std::size_t rows, std::size_t cols, std::vector<double> v) {
  return Matrix(rows, cols, std::move(v));
}

}  // namespace

void validate_config(const TrainConfig& config) {
  if (config.episodes_per_epoch < 1) throw ArgumentError("train: episodes_per_epoch must be >= 1");
  if (config.batch < 1) throw ArgumentError("train: batch must be >= 1");
  if (config.n_support < 1) throw ArgumentError("train: n_support must be >= 1");
  if (!(config.weights.alpha >= 0.0)) throw ArgumentError("train: alpha must be >= 0");
  if (!(config.weights.beta >= 0.0)) throw ArgumentError("train: beta must be >= 0");
  if (!(config.weights.gamma > 0.0)) throw ArgumentError("train: gamma must be > 0");
  if (!(config.learning_rate >= 0.0)) throw ArgumentError("train: learning_rate must be >= 0");
  if (config.barycenter_steps < 1) throw ArgumentError("train: barycenter steps must be >= 1");
  if (!(config.barycenter_step_size > 0.0)) throw ArgumentError("train: barycenter step_size must be > 0");
  if (!(config.init_scale >= 0.0)) throw ArgumentError("train: init_scale must be >= 0");
}

TrainState initial_state(std::size_t num_classes, std::size_t dim, const TrainConfig& config) {
  Rng rng(derive_seed(config.seed, "init"));
  TrainState state;
  state.params = init_params(num_classes, dim, config.init_scale, rng);
  state.first_moment = ParamGrads::zeros_like(state.params);
  state.second_moment = ParamGrads::zeros_like(state.params);
  return state;
}

void optimizer_step(TrainState& state, const ParamGrads& grads, const TrainConfig& config) {
  auto& p = state.params;
  if (grads.weight.rows() != p.weight.rows() || grads.weight.cols() != p.weight.cols() ||
      grads.bias.size() != p.bias.size()) {
    throw ArgumentError("optimizer_step: gradient shape does not match params");
  }
  ++state.step;
  const auto& a = config.adam;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(a.beta1, t);
  const double correction2 = 1.0 - std::pow(a.beta2, t);
  auto update = [&](std::span<double> x, std::span<const double> g, std::span<double> m,
                    std::span<double> v) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      m[i] = a.beta1 * m[i] + (1.0 - a.beta1) * g[i];
      v[i] = a.beta2 * v[i] + (1.0 - a.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      x[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + a.epsilon);
    }
  };
  update(p.weight.data(), grads.weight.data(), state.first_moment.weight.data(),
         state.second_moment.weight.data());
  update(p.bias, grads.bias, state.first_moment.bias, state.second_moment.bias);
}

EpisodeResult episode_gradients(const ClassifierParams& params, const Episode& episode,
                                const TrainConfig& config) {
  validate_episode(episode);
  const std::size_t nq = episode.queries.size();
  const bool frame_mode = config.loss.ce_mode == CeMode::Frame;

  // Distinct support sets, keyed by member ids.
  std::map<std::vector<std::string>, std::size_t> set_index;
  std::vector<std::size_t> query_set(nq);
  std::vector<const std::vector<FeatureSequence>*> sets;
  for (std::size_t i = 0; i < nq; ++i) {
    std::vector<std::string> key;
    for (const auto& s : episode.supports[i]) key.push_back(s.id);
    auto [it, inserted] = set_index.emplace(std::move(key), sets.size());
    if (inserted) sets.push_back(&episode.supports[i]);
    query_set[i] = it->second;
  }

  const bool need_supports = config.loss.use_align || config.exemplar_terms;
  std::vector<std::vector<PredictionSequence>> support_preds(sets.size());
  std::vector<PredictionSequence> exemplars(sets.size());
  if (need_supports) {
    parallel_for(sets.size(), [&](std::size_t k) { support_preds[k] = forward_batch(params, *sets[k]); });
  }
  if (config.loss.use_align) {
    BarycenterOptions bopt;
    bopt.gamma = config.weights.gamma;
    bopt.steps = config.barycenter_steps;
    bopt.step_size = config.barycenter_step_size;
    bopt.project_rows = config.project_exemplars;
    parallel_for(sets.size(), [&](std::size_t k) {
      exemplars[k] = barycenter(SupportSet::uniform(support_preds[k]), bopt).rows;
    });
  }

  LossInputs inputs;
  inputs.queries = forward_batch(params, episode.queries);
  for (std::size_t i = 0; i < nq; ++i) {
    const auto& q = episode.queries[i];
    if (config.loss.use_align) inputs.exemplars.push_back(exemplars[query_set[i]]);
    if (frame_mode) {
      if (!q.has_frame_labels()) {
        throw ArgumentError("frame-level CE needs frame labels; query '" + q.id + "' has none");
      }
      inputs.frame_labels.push_back(q.frame_labels);
    } else {
      inputs.labels.push_back(q.label);
    }
  }

  std::vector<const FeatureSequence*> aux_inputs;
  if (config.exemplar_terms) {
    for (std::size_t k = 0; k < sets.size(); ++k) {
      for (std::size_t n = 0; n < sets[k]->size(); ++n) {
        const auto& s = (*sets[k])[n];
        aux_inputs.push_back(&s);
        inputs.auxiliary.push_back(support_preds[k][n]);
        if (frame_mode) {
          if (!s.has_frame_labels()) {
            throw ArgumentError("frame-level CE needs frame labels; support '" + s.id + "' has none");
          }
          inputs.auxiliary_frame_labels.push_back(s.frame_labels);
        } else {
          inputs.auxiliary_labels.push_back(s.label);
        }
      }
    }
  }

  const TotalLoss loss = loss_total(inputs, config.weights, config.loss);

  const std::size_t total = nq + aux_inputs.size();
  std::vector<ParamGrads> parts(total);
  parallel_for(total, [&](std::size_t k) {
    if (k < nq) {
      parts[k] = backward(params, episode.queries[k].frames, inputs.queries[k], loss.grads[k]);
    } else {
      const std::size_t a = k - nq;
      parts[k] = backward(params, aux_inputs[a]->frames, inputs.auxiliary[a], loss.grads[k]);
    }
  });
  EpisodeResult out{loss.report, ParamGrads::zeros_like(params)};
  for (const auto& g : parts) out.grads.add(g);
  return out;
}

LossReport run_episode(TrainState& state, const Episode& episode, const TrainConfig& config,
                       std::uint64_t seed) {
  EpisodeResult result;
  try {
    result = episode_gradients(state.params, episode, config);
  } catch (const NumericalError& e) {
    throw NumericalError("episode with seed " + std::to_string(seed) + ": " + e.what());
  }
  const auto& r = result.report;
  const bool finite_grads = result.grads.weight.all_finite() &&
                            std::all_of(result.grads.bias.begin(), result.grads.bias.end(),
                                        [](double v) { return std::isfinite(v); });
  if (!std::isfinite(r.total) || !finite_grads) {
    throw NumericalError("non-finite loss in episode with seed " + std::to_string(seed) +
                         " (align=" + format_double(r.align) + ", ce=" + format_double(r.ce) +
                         ", smooth=" + format_double(r.smooth) + ")");
  }
  optimizer_step(state, result.grads, config);
  state.history.push_back(r);
  return r;
}

std::uint64_t episode_seed(std::uint64_t run_seed, std::uint64_t episode_index) {
  return derive_seed(derive_seed(run_seed, "episodes"), episode_index);
}

void train(TrainState& state, const EpisodeSampler& sampler, const TrainConfig& config,
           const EpochCallback& on_epoch) {
  validate_config(config);
  for (std::size_t epoch = state.epoch; epoch < config.epochs; ++epoch) {
    for (std::size_t e = 0; e < config.episodes_per_epoch; ++e) {
      const std::uint64_t seed =
          episode_seed(config.seed, static_cast<std::uint64_t>(epoch * config.episodes_per_epoch + e));
      Rng rng(seed);
      run_episode(state, sampler(rng), config, seed);
    }
    state.epoch = epoch + 1;
    if (on_epoch) on_epoch(state);
  }
}

EpisodeSampler trajectory_sampler(const std::vector<FeatureSequence>& dataset,
                                  const TrainConfig& config) {
  EpisodeOptions options;
  options.batch = config.batch;
  options.n_support = config.n_support;
  options.share_class_support = config.share_class_exemplar;
  return [&dataset, options](Rng& rng) { return sample_episode(dataset, options, rng); };
}

TrainState train(const std::vector<FeatureSequence>& dataset, const TrainConfig& config,
                 const EpochCallback& on_epoch) {
  if (dataset.empty()) throw ArgumentError("train: empty dataset");
  validate_config(config);
  const std::size_t classes = std::max<std::size_t>(2, count_classes(dataset));
  TrainState state = initial_state(classes, dataset.front().dim(), config);
  train(state, trajectory_sampler(dataset, config), config, on_epoch);
  return state;
}

std::string loss_history_csv(const std::vector<LossReport>& history,
                             std::size_t episodes_per_epoch) {
  std::ostringstream out;
  out << "epoch,align,ce,smooth,total\n";
  for (std::size_t k = 0; k < history.size(); ++k) {
    const auto& r = history[k];
    out << k / std::max<std::size_t>(episodes_per_epoch, 1) << ',' << format_double(r.align) << ','
        << format_double(r.ce) << ',' << format_double(r.smooth) << ',' << format_double(r.total)
        << '\n';
  }
  return out.str();
}

nlohmann::ordered_json state_sidecar(const TrainState& state) {
  nlohmann::ordered_json j;
  j["format"] = "seqtraj-train-state v1";
  j["epoch"] = state.epoch;
  j["step"] = state.step;
  j["num_classes"] = state.params.num_classes();
  j["d"] = state.params.dim();
  j["first_moment"] = {{"weight", to_vector(state.first_moment.weight)},
                       {"bias", state.first_moment.bias}};
  j["second_moment"] = {{"weight", to_vector(state.second_moment.weight)},
                        {"bias", state.second_moment.bias}};
  nlohmann::ordered_json history = nlohmann::ordered_json::array();
  for (const auto& r : state.history) history.push_back({r.align, r.ce, r.smooth, r.total});
  j["history"] = std::move(history);
  return j;
}

void restore_sidecar(TrainState& state, const nlohmann::ordered_json& j) {
  try {
    if (j.at("format").get<std::string>() != "seqtraj-train-state v1") {
      throw ArgumentError("unsupported training-state format");
    }
    const auto classes = j.at("num_classes").get<std::size_t>();
    const auto dim = j.at("d").get<std::size_t>();
    if (classes != state.params.num_classes() || dim != state.params.dim()) {
      throw ArgumentError("training state is for " + std::to_string(classes) + "x" +
                          std::to_string(dim) + " params, checkpoint params are " +
                          std::to_string(state.params.num_classes()) + "x" +
                          std::to_string(state.params.dim()));
    }
    state.epoch = j.at("epoch").get<std::size_t>();
    state.step = j.at("step").get<std::uint64_t>();
    const auto& m = j.at("first_moment");
    const auto& v = j.at("second_moment");
    state.first_moment.weight = from_vector(classes, dim, m.at("weight").get<std::vector<double>>());
    state.first_moment.bias = m.at("bias").get<std::vector<double>>();
    state.second_moment.weight = from_vector(classes, dim, v.at("weight").get<std::vector<double>>());
    state.second_moment.bias = v.at("bias").get<std::vector<double>>();
    if (state.first_moment.bias.size() != classes || state.second_moment.bias.size() != classes) {
      throw ArgumentError("training state bias moments have the wrong length");
    }
    state.history.clear();
    for (const auto& row : j.at("history")) {
      const auto r = row.get<std::vector<double>>();
      if (r.size() != 4) throw ArgumentError("training state history rows need 4 values");
      state.history.push_back({r[0], r[1], r[2], r[3]});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("malformed training state: ") + e.what());
  }
}

}  // namespace seqtraj
