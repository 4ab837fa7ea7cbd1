#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "seqtraj/episodes.hpp"
#include "seqtraj/trainer.hpp"

namespace seqtraj {

// Config problems: unknown or missing keys, wrong types, out-of-range values.
class ConfigError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

enum class Generator { Trajectory, Anomaly };

struct DataConfig {
  // Either a sequence file or a generator spec.
  std::optional<std::string> path;
  Generator generator = Generator::Trajectory;
  TrajectorySpec trajectory;
  AnomalySpec anomaly;
  // 0 keeps everything for training; otherwise the first k sequences of
  // each class train and the rest evaluate.
  std::size_t train_per_class = 0;
};

enum class EvalMode { Classify, Anomaly };
enum class Inference { Frame, Exemplar };

struct EvalConfig {
  EvalMode mode = EvalMode::Classify;
  Inference inference = Inference::Frame;
  std::size_t anomaly_class = 1;
  std::size_t exemplar_per_class = 3;
  double gamma = 0.1;
  std::size_t barycenter_steps = 200;
  // Checkpoint directory; defaults to the output directory.
  std::optional<std::string> checkpoint;
  // Sequence file to evaluate instead of the held-out split.
  std::optional<std::string> dataset;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  DataConfig data;
  TrainConfig train;
  EvalConfig eval;
  std::string output = "out";
  bool resume = false;
  bool deterministic = false;
  int threads = 1;
};

// Parses and validates a config document. Sections: data, train, eval,
// output, seed. Throws ConfigError listing every offending key.
ExperimentConfig parse_experiment_config(const nlohmann::ordered_json& doc);
nlohmann::ordered_json experiment_config_to_json(const ExperimentConfig& config);
// "section.key=value" overrides; the value is parsed as JSON, falling back to
// a plain string.
void apply_override(nlohmann::ordered_json& doc, const std::string& assignment);
nlohmann::ordered_json load_config_document(const std::string& path);

// Dataset described by the data section; file-backed or generated from
// derive_seed(seed, "data").
std::vector<FeatureSequence> load_dataset(const ExperimentConfig& config);
std::pair<std::vector<FeatureSequence>, std::vector<FeatureSequence>> train_test_split(
    const ExperimentConfig& config, const std::vector<FeatureSequence>& data);

// Artifact names inside the output directory.
inline constexpr const char* kDataFile = "data.jsonl";
inline constexpr const char* kParamsFile = "params.txt";
inline constexpr const char* kStateFile = "state.json";
inline constexpr const char* kLossFile = "loss.csv";

struct GenResult {
  std::string path;
  std::size_t count = 0;
  std::size_t dim = 0;
};
GenResult cmd_gen(const ExperimentConfig& config, std::ostream& log);

struct TrainResult {
  TrainState state;
  std::string params_path;
  std::string state_path;
  std::string loss_path;
};
// Resumes from the output directory when config.resume is set and a
// checkpoint is there.
TrainResult cmd_train(const ExperimentConfig& config, std::ostream& log);

struct EvalResult {
  EvalMode mode = EvalMode::Classify;
  std::size_t count = 0;
  double accuracy = 0.0;
  double auc = 0.0;
  double ap = 0.0;
};
EvalResult cmd_eval(const ExperimentConfig& config, std::ostream& log);

struct AlignOptions {
  std::string file_a;
  std::string file_b;
  double gamma = 0.1;
  std::size_t index_a = 0;
  std::size_t index_b = 0;
  std::optional<std::string> occupancy_csv;
};
double cmd_align(const AlignOptions& options, std::ostream& log);

struct BarycenterCommand {
  std::string input;
  std::string output;
  BarycenterOptions options;
};
Exemplar cmd_barycenter(const BarycenterCommand& command, std::ostream& log);

// Exit code for an exception escaping a command: 2 validation, 3 numerical,
// 4 I/O, 1 otherwise.
int exit_code_for(const std::exception& e);

}  // namespace seqtraj
