#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "seqtraj/barycenter.hpp"
#include "seqtraj/episodes.hpp"
#include "seqtraj/losses.hpp"
#include "seqtraj/model.hpp"

namespace seqtraj {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t episodes_per_epoch = 10;
  std::size_t batch = 16;
  std::size_t n_support = 3;
  LossWeights weights;  // α = 1, β = 0.1, γ = 0.1
  LossOptions loss;     // CE mode, align on/off
  double learning_rate = 1e-3;
  AdamConfig adam;
  std::uint64_t seed = 0;
  double init_scale = 0.01;
  std::size_t barycenter_steps = 200;
  double barycenter_step_size = 0.1;
  bool project_exemplars = true;
  // Queries of one class in an episode share one support set and exemplar.
  bool share_class_exemplar = true;
  // Supports behind each exemplar also take part in CE and smoothness.
  bool exemplar_terms = false;
};

void validate_config(const TrainConfig& config);

struct TrainState {
  ClassifierParams params;
  ParamGrads first_moment;
  ParamGrads second_moment;
  std::uint64_t step = 0;  // optimizer steps taken
  std::size_t epoch = 0;   // completed epochs
  std::vector<LossReport> history;
};

TrainState initial_state(std::size_t num_classes, std::size_t dim, const TrainConfig& config);

// Adam update with bias correction. A zero gradient leaves params unchanged.
void optimizer_step(TrainState& state, const ParamGrads& grads, const TrainConfig& config);

struct EpisodeResult {
  LossReport report;
  ParamGrads grads;
};

// Forward supports → exemplars (stop-gradient) → forward queries → loss →
// backward, without touching the state.
EpisodeResult episode_gradients(const ClassifierParams& params, const Episode& episode,
                                const TrainConfig& config);

// episode_gradients plus one optimizer step. Throws NumericalError naming
// `episode_seed` when the loss is not finite.
LossReport run_episode(TrainState& state, const Episode& episode, const TrainConfig& config,
                       std::uint64_t episode_seed = 0);

// Seed of episode k (0-based, counted over the whole run).
std::uint64_t episode_seed(std::uint64_t run_seed, std::uint64_t episode_index);

using EpisodeSampler = std::function<Episode(Rng&)>;
using EpochCallback = std::function<void(const TrainState&)>;

// Runs epochs [state.epoch, config.epochs). Each episode draws from its own
// seeded stream, so a resumed run reproduces an uninterrupted one.
void train(TrainState& state, const EpisodeSampler& sampler, const TrainConfig& config,
           const EpochCallback& on_epoch = {});

TrainState train(const std::vector<FeatureSequence>& dataset, const TrainConfig& config,
                 const EpochCallback& on_epoch = {});

EpisodeSampler trajectory_sampler(const std::vector<FeatureSequence>& dataset,
                                  const TrainConfig& config);

// Loss CSV with columns epoch, align, ce, smooth, total; one row per episode.
std::string loss_history_csv(const std::vector<LossReport>& history,
                             std::size_t episodes_per_epoch);

// Optimizer moments, counters and loss history; params live in their own file.
nlohmann::ordered_json state_sidecar(const TrainState& state);
void restore_sidecar(TrainState& state, const nlohmann::ordered_json& sidecar);

}  // namespace seqtraj
