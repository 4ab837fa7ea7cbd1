#include "seqtraj/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "seqtraj/eval.hpp"
#include "seqtraj/io.hpp"
#include "seqtraj/parallel.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace seqtraj {
namespace {

// Reads typed keys out of one config section and remembers every problem, so
// a bad document is reported in one go.
class SectionReader {
 public:
  SectionReader(const json& section, std::string name, std::vector<std::string>& errors)
      : section_(section), name_(std::move(name)), errors_(errors) {
    if (!section_.is_object()) {
      errors_.push_back(name_ + ": expected an object");
      valid_ = false;
    }
  }

  bool has(const char* key) const { return valid_ && section_.contains(key); }

  void read(const char* key, std::size_t& out) {
    if (!take(key)) return;
    const auto& v = section_.at(key);
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
      out = v.get<std::size_t>();
    } else if (v.is_number_integer()) {
      fail(key, "must be >= 0");
    } else {
      fail(key, "must be a non-negative integer");
    }
  }

  void read(const char* key, double& out) {
    if (!take(key)) return;
    const auto& v = section_.at(key);
    if (v.is_number()) {
      out = v.get<double>();
    } else {
      fail(key, "must be a number");
    }
  }

  void read(const char* key, bool& out) {
    if (!take(key)) return;
    const auto& v = section_.at(key);
    if (v.is_boolean()) {
      out = v.get<bool>();
    } else {
      fail(key, "must be true or false");
    }
  }

  void read(const char* key, std::string& out) {
    if (!take(key)) return;
    const auto& v = section_.at(key);
    if (v.is_string()) {
      out = v.get<std::string>();
    } else {
      fail(key, "must be a string");
    }
  }

  void read(const char* key, std::optional<std::string>& out) {
    std::string s;
    if (!has(key)) return;
    read(key, s);
    out = s;
  }

  void fail(const std::string& key, const std::string& what) {
    errors_.push_back(name_ + "." + key + " " + what);
  }

  // Any key never asked for is unknown.
  void finish() {
    if (!valid_) return;
    for (const auto& [key, value] : section_.items()) {
      if (!seen_.count(key)) errors_.push_back(name_ + "." + key + " is not a known key");
    }
  }

 private:
  bool take(const char* key) {
    seen_.insert(key);
    return has(key);
  }

  const json& section_;
  std::string name_;
  std::vector<std::string>& errors_;
  std::set<std::string> seen_;
  bool valid_ = true;
};

void parse_data(const json& doc, DataConfig& data, std::vector<std::string>& errors) {
  SectionReader r(doc, "data", errors);
  r.read("path", data.path);
  std::string generator = "trajectory";
  r.read("generator", generator);
  if (generator == "trajectory") {
    data.generator = Generator::Trajectory;
  } else if (generator == "anomaly") {
    data.generator = Generator::Anomaly;
  } else {
    r.fail("generator", "must be \"trajectory\" or \"anomaly\"");
  }
  r.read("train_per_class", data.train_per_class);

  auto& t = data.trajectory;
  auto& a = data.anomaly;
  const bool trajectory = data.generator == Generator::Trajectory;
  std::size_t tau = trajectory ? t.tau : a.tau;
  std::size_t dim = trajectory ? t.dim : a.dim;
  r.read("tau", tau);
  r.read("d", dim);
  if (trajectory) {
    t.tau = tau;
    t.dim = dim;
    r.read("num_classes", t.num_classes);
    r.read("per_class", t.per_class);
    r.read("shape_noise", t.shape_noise);
    r.read("marginal_overlap", t.marginal_overlap);
    r.read("separation", t.separation);
  } else {
    a.tau = tau;
    a.dim = dim;
    r.read("num_normals", a.num_normals);
    r.read("num_abnormal", a.num_abnormal);
    r.read("anomaly_len", a.anomaly_len);
    r.read("anomaly_shift", a.anomaly_shift);
    r.read("noise", a.noise);
  }
  r.finish();

  if (data.path) return;
  if (tau < 2) r.fail("tau", "must be >= 2");
  if (dim < 1) r.fail("d", "must be >= 1");
  if (trajectory) {
    if (t.num_classes < 2) r.fail("num_classes", "must be >= 2");
    if (t.per_class < 1) r.fail("per_class", "must be >= 1");
    if (!(t.shape_noise >= 0.0)) r.fail("shape_noise", "must be >= 0");
    if (data.train_per_class >= t.per_class && data.train_per_class != 0) {
      r.fail("train_per_class", "must be below per_class");
    }
  } else {
    if (a.num_normals < 1) r.fail("num_normals", "must be >= 1");
    if (a.num_abnormal < 1) r.fail("num_abnormal", "must be >= 1");
    if (a.anomaly_len < 1 || a.anomaly_len >= a.tau) r.fail("anomaly_len", "must be in [1, tau)");
    if (!(a.noise >= 0.0)) r.fail("noise", "must be >= 0");
    const std::size_t smallest = std::min(a.num_normals, a.num_abnormal);
    if (data.train_per_class >= smallest && data.train_per_class != 0) {
      r.fail("train_per_class", "must be below num_normals and num_abnormal");
    }
  }
}

void parse_train(const json& doc, ExperimentConfig& config, std::vector<std::string>& errors) {
  auto& t = config.train;
  SectionReader r(doc, "train", errors);
  r.read("epochs", t.epochs);
  r.read("episodes_per_epoch", t.episodes_per_epoch);
  r.read("batch", t.batch);
  r.read("n_support", t.n_support);
  r.read("alpha", t.weights.alpha);
  r.read("beta", t.weights.beta);
  r.read("gamma", t.weights.gamma);
  std::string ce_mode = "sequence";
  r.read("ce_mode", ce_mode);
  if (ce_mode == "sequence") {
    t.loss.ce_mode = CeMode::Sequence;
  } else if (ce_mode == "frame") {
    t.loss.ce_mode = CeMode::Frame;
  } else {
    r.fail("ce_mode", "must be \"frame\" or \"sequence\"");
  }
  r.read("use_align", t.loss.use_align);
  r.read("align_length_normalized", t.loss.align_length_normalized);
  r.read("learning_rate", t.learning_rate);
  r.read("adam_beta1", t.adam.beta1);
  r.read("adam_beta2", t.adam.beta2);
  r.read("adam_epsilon", t.adam.epsilon);
  r.read("init_scale", t.init_scale);
  r.read("barycenter_steps", t.barycenter_steps);
  r.read("barycenter_step_size", t.barycenter_step_size);
  r.read("project_exemplars", t.project_exemplars);
  r.read("share_class_exemplar", t.share_class_exemplar);
  r.read("exemplar_terms", t.exemplar_terms);
  r.read("resume", config.resume);
  r.finish();

  if (t.episodes_per_epoch < 1) r.fail("episodes_per_epoch", "must be >= 1");
  if (t.batch < 1) r.fail("batch", "must be >= 1");
  if (t.n_support < 1) r.fail("n_support", "must be >= 1");
  if (!(t.weights.alpha >= 0.0)) r.fail("alpha", "must be >= 0");
  if (!(t.weights.beta >= 0.0)) r.fail("beta", "must be >= 0");
  if (!(t.weights.gamma > 0.0)) r.fail("gamma", "must be > 0");
  if (!(t.learning_rate >= 0.0)) r.fail("learning_rate", "must be >= 0");
  if (!(t.adam.beta1 >= 0.0 && t.adam.beta1 < 1.0)) r.fail("adam_beta1", "must be in [0, 1)");
  if (!(t.adam.beta2 >= 0.0 && t.adam.beta2 < 1.0)) r.fail("adam_beta2", "must be in [0, 1)");
  if (!(t.adam.epsilon > 0.0)) r.fail("adam_epsilon", "must be > 0");
  if (!(t.init_scale >= 0.0)) r.fail("init_scale", "must be >= 0");
  if (t.barycenter_steps < 1) r.fail("barycenter_steps", "must be >= 1");
  if (!(t.barycenter_step_size > 0.0)) r.fail("barycenter_step_size", "must be > 0");
}

void parse_eval(const json& doc, EvalConfig& e, std::vector<std::string>& errors) {
  SectionReader r(doc, "eval", errors);
  std::string mode = "classify";
  r.read("mode", mode);
  if (mode == "classify") {
    e.mode = EvalMode::Classify;
  } else if (mode == "anomaly") {
    e.mode = EvalMode::Anomaly;
  } else {
    r.fail("mode", "must be \"classify\" or \"anomaly\"");
  }
  std::string inference = "frame";
  r.read("inference", inference);
  if (inference == "frame") {
    e.inference = Inference::Frame;
  } else if (inference == "exemplar") {
    e.inference = Inference::Exemplar;
  } else {
    r.fail("inference", "must be \"frame\" or \"exemplar\"");
  }
  r.read("anomaly_class", e.anomaly_class);
  r.read("exemplar_per_class", e.exemplar_per_class);
  r.read("gamma", e.gamma);
  r.read("barycenter_steps", e.barycenter_steps);
  r.read("checkpoint", e.checkpoint);
  r.read("dataset", e.dataset);
  r.finish();
  if (e.exemplar_per_class < 1) r.fail("exemplar_per_class", "must be >= 1");
  if (!(e.gamma >= 0.0)) r.fail("gamma", "must be >= 0");
  if (e.barycenter_steps < 1) r.fail("barycenter_steps", "must be >= 1");
}

std::string join_errors(const std::vector<std::string>& errors) {
  std::string out = "invalid config:";
  for (const auto& e : errors) out += "\n  " + e;
  return out;
}

void ensure_directory(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create output directory '" + dir + "'");
  }
}

std::string in_dir(const std::string& dir, const char* name) {
  return (fs::path(dir) / name).string();
}

std::size_t dataset_classes(const ExperimentConfig& config,
                            const std::vector<FeatureSequence>& data) {
  std::size_t classes = count_classes(data);
  if (config.data.path) {
    const std::string manifest = manifest_path_for(*config.data.path);
    if (fs::exists(manifest)) classes = std::max(classes, read_manifest(manifest).num_classes);
  } else if (config.data.generator == Generator::Trajectory) {
    classes = std::max(classes, config.data.trajectory.num_classes);
  }
  return std::max<std::size_t>(classes, 2);
}

TrainConfig effective_train_config(const ExperimentConfig& config) {
  TrainConfig t = config.train;
  t.seed = config.seed;
  return t;
}

std::string shape(std::size_t classes, std::size_t dim) {
  return "C=" + std::to_string(classes) + ", d=" + std::to_string(dim);
}

std::string report_line(const LossReport& r) {
  return "align " + format_double(r.align, 10) + "  ce " + format_double(r.ce, 10) + "  smooth " +
         format_double(r.smooth, 10) + "  total " + format_double(r.total, 10);
}

}  // namespace

ExperimentConfig parse_experiment_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("invalid config: top level must be an object");
  ExperimentConfig config;
  std::vector<std::string> errors;
  static const std::set<std::string> sections = {"seed", "data", "train", "eval", "output"};
  for (const auto& [key, value] : doc.items()) {
    if (!sections.count(key)) errors.push_back(key + " is not a known section");
  }
  if (doc.contains("seed")) {
    if (doc["seed"].is_number_unsigned() ||
        (doc["seed"].is_number_integer() && doc["seed"].get<std::int64_t>() >= 0)) {
      config.seed = doc["seed"].get<std::uint64_t>();
    } else {
      errors.push_back("seed must be a non-negative integer");
    }
  }
  parse_data(doc.contains("data") ? doc["data"] : json::object(), config.data, errors);
  parse_train(doc.contains("train") ? doc["train"] : json::object(), config, errors);
  parse_eval(doc.contains("eval") ? doc["eval"] : json::object(), config.eval, errors);
  if (doc.contains("output")) {
    if (doc["output"].is_string() && !doc["output"].get<std::string>().empty()) {
      config.output = doc["output"].get<std::string>();
    } else {
      errors.push_back("output must be a non-empty directory path");
    }
  }
  if (!errors.empty()) throw ConfigError(join_errors(errors));
  return config;
}

json experiment_config_to_json(const ExperimentConfig& c) {
  json doc;
  doc["seed"] = c.seed;
  json data;
  if (c.data.path) {
    data["path"] = *c.data.path;
  } else if (c.data.generator == Generator::Trajectory) {
    const auto& t = c.data.trajectory;
    data["generator"] = "trajectory";
    data["num_classes"] = t.num_classes;
    data["per_class"] = t.per_class;
    data["tau"] = t.tau;
    data["d"] = t.dim;
    data["shape_noise"] = t.shape_noise;
    data["marginal_overlap"] = t.marginal_overlap;
    data["separation"] = t.separation;
  } else {
    const auto& a = c.data.anomaly;
    data["generator"] = "anomaly";
    data["num_normals"] = a.num_normals;
    data["num_abnormal"] = a.num_abnormal;
    data["tau"] = a.tau;
    data["d"] = a.dim;
    data["anomaly_len"] = a.anomaly_len;
    data["anomaly_shift"] = a.anomaly_shift;
    data["noise"] = a.noise;
  }
  data["train_per_class"] = c.data.train_per_class;
  doc["data"] = data;

  const auto& t = c.train;
  doc["train"] = {{"epochs", t.epochs},
                  {"episodes_per_epoch", t.episodes_per_epoch},
                  {"batch", t.batch},
                  {"n_support", t.n_support},
                  {"alpha", t.weights.alpha},
                  {"beta", t.weights.beta},
                  {"gamma", t.weights.gamma},
                  {"ce_mode", t.loss.ce_mode == CeMode::Frame ? "frame" : "sequence"},
                  {"use_align", t.loss.use_align},
                  {"align_length_normalized", t.loss.align_length_normalized},
                  {"learning_rate", t.learning_rate},
                  {"adam_beta1", t.adam.beta1},
                  {"adam_beta2", t.adam.beta2},
                  {"adam_epsilon", t.adam.epsilon},
                  {"init_scale", t.init_scale},
                  {"barycenter_steps", t.barycenter_steps},
                  {"barycenter_step_size", t.barycenter_step_size},
                  {"project_exemplars", t.project_exemplars},
                  {"share_class_exemplar", t.share_class_exemplar},
                  {"exemplar_terms", t.exemplar_terms},
                  {"resume", c.resume}};
  json ev = {{"mode", c.eval.mode == EvalMode::Classify ? "classify" : "anomaly"},
             {"inference", c.eval.inference == Inference::Frame ? "frame" : "exemplar"},
             {"anomaly_class", c.eval.anomaly_class},
             {"exemplar_per_class", c.eval.exemplar_per_class},
             {"gamma", c.eval.gamma},
             {"barycenter_steps", c.eval.barycenter_steps}};
  if (c.eval.checkpoint) ev["checkpoint"] = *c.eval.checkpoint;
  if (c.eval.dataset) ev["dataset"] = *c.eval.dataset;
  doc["eval"] = ev;
  doc["output"] = c.output;
  return doc;
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' is not of the form key=value");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  const auto dot = path.find('.');
  if (dot == std::string::npos) {
    doc[path] = value;
    return;
  }
  const std::string section = path.substr(0, dot);
  const std::string key = path.substr(dot + 1);
  if (key.empty() || key.find('.') != std::string::npos) {
    throw ConfigError("override key '" + path + "' must be section.key");
  }
  if (!doc.contains(section)) doc[section] = json::object();
  if (!doc[section].is_object()) throw ConfigError("config section '" + section + "' is not an object");
  doc[section][key] = value;
}

json load_config_document(const std::string& path) {
  const std::string text = read_text_file(path);
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw ConfigError("config '" + path + "' is not valid JSON");
  return doc;
}

std::vector<FeatureSequence> load_dataset(const ExperimentConfig& config) {
  if (config.data.path) return read_sequence_file(*config.data.path);
  Rng rng(derive_seed(config.seed, "data"));
  if (config.data.generator == Generator::Trajectory) {
    return make_synthetic_trajectory_dataset(config.data.trajectory, rng);
  }
  return make_anomaly_dataset(config.data.anomaly, rng);
}

std::pair<std::vector<FeatureSequence>, std::vector<FeatureSequence>> train_test_split(
    const ExperimentConfig& config, const std::vector<FeatureSequence>& data) {
  if (config.data.train_per_class == 0) return {data, {}};
  return split_per_class(data, config.data.train_per_class);
}

GenResult cmd_gen(const ExperimentConfig& config, std::ostream& log) {
  if (config.data.path) throw ConfigError("gen needs a generator spec, not data.path");
  const auto data = load_dataset(config);
  std::size_t classes = config.data.generator == Generator::Trajectory
                            ? config.data.trajectory.num_classes
                            : 2;
  json generator = experiment_config_to_json(config)["data"];
  generator["seed"] = config.seed;

  ensure_directory(config.output);
  GenResult result;
  result.path = in_dir(config.output, kDataFile);
  result.count = data.size();
  result.dim = data.empty() ? 0 : data.front().dim();
  write_sequence_file(result.path, data);
  write_manifest(manifest_path_for(result.path), make_manifest(data, classes, generator));
  log << "wrote " << result.count << " sequences, d=" << result.dim << " to " << result.path
      << "\n";
  return result;
}

TrainResult cmd_train(const ExperimentConfig& config, std::ostream& log) {
  const auto data = load_dataset(config);
  auto [train_set, test_set] = train_test_split(config, data);
  if (train_set.empty()) throw ArgumentError("train: dataset is empty");
  const TrainConfig train_config = effective_train_config(config);
  validate_config(train_config);
  const std::size_t classes = dataset_classes(config, data);
  const std::size_t dim = train_set.front().dim();

  TrainResult result;
  result.params_path = in_dir(config.output, kParamsFile);
  result.state_path = in_dir(config.output, kStateFile);
  result.loss_path = in_dir(config.output, kLossFile);

  TrainState state = initial_state(classes, dim, train_config);
  if (config.resume && fs::exists(result.params_path) && fs::exists(result.state_path)) {
    state.params = load_params(result.params_path);
    if (state.params.num_classes() != classes || state.params.dim() != dim) {
      throw ArgumentError("checkpoint has " + shape(state.params.num_classes(), state.params.dim()) +
                          ", dataset has " + shape(classes, dim));
    }
    const json sidecar = json::parse(read_text_file(result.state_path), nullptr, false);
    if (sidecar.is_discarded()) throw FormatError("'" + result.state_path + "' is not valid JSON");
    restore_sidecar(state, sidecar);
    if (state.epoch > train_config.epochs) {
      throw ArgumentError("checkpoint already has " + std::to_string(state.epoch) +
                          " epochs, more than train.epochs = " +
                          std::to_string(train_config.epochs));
    }
    log << "resuming from epoch " << state.epoch << "\n";
  }

  ensure_directory(config.output);
  auto save = [&](const TrainState& s) {
    save_params(result.params_path, s.params);
    write_text_file(result.state_path, state_sidecar(s).dump(2) + "\n");
    write_text_file(result.loss_path, loss_history_csv(s.history, train_config.episodes_per_epoch));
  };
  train(state, trajectory_sampler(train_set, train_config), train_config, save);
  save(state);

  if (state.history.empty()) {
    log << "no episodes run; checkpoint holds the initialization\n";
  } else {
    log << "epoch " << state.epoch << "  " << report_line(state.history.back()) << "\n";
  }
  result.state = std::move(state);
  return result;
}

EvalResult cmd_eval(const ExperimentConfig& config, std::ostream& log) {
  const auto& ev = config.eval;
  const auto data = load_dataset(config);
  auto [reference, held_out] = train_test_split(config, data);
  std::vector<FeatureSequence> target;
  if (ev.dataset) {
    target = read_sequence_file(*ev.dataset);
  } else {
    target = config.data.train_per_class == 0 ? data : held_out;
  }
  if (target.empty()) throw ArgumentError("eval: no sequences to evaluate");

  const std::string checkpoint = ev.checkpoint.value_or(config.output);
  const ClassifierParams params = load_params(in_dir(checkpoint, kParamsFile));
  const std::size_t classes = params.num_classes();
  const std::size_t dim = params.dim();
  int max_label = 0;
  for (const auto& s : target) {
    validate_sequence(s);
    max_label = std::max(max_label, s.label);
    for (int l : s.frame_labels) max_label = std::max(max_label, l);
  }
  if (target.front().dim() != dim || static_cast<std::size_t>(max_label) >= classes) {
    throw ArgumentError("checkpoint has " + shape(classes, dim) + ", dataset has " +
                        shape(static_cast<std::size_t>(max_label) + 1, target.front().dim()));
  }

  EvalResult result;
  result.mode = ev.mode;
  result.count = target.size();
  json summary;
  std::ostringstream rows;

  if (ev.mode == EvalMode::Anomaly) {
    if (ev.anomaly_class >= classes) {
      throw ArgumentError("eval: anomaly_class " + std::to_string(ev.anomaly_class) +
                          " outside [0, " + std::to_string(classes) + ")");
    }
    for (const auto& s : target) {
      if (!s.has_frame_labels()) {
        throw ArgumentError("eval: anomaly mode needs frame labels, '" + s.id + "' has none");
      }
    }
    const ScoredFrames sf = score_frames(params, target, ev.anomaly_class);
    result.auc = roc_auc(sf);
    result.ap = average_precision(sf);
    rows << "id,t,label,score\n";
    std::size_t k = 0;
    for (const auto& s : target) {
      for (std::size_t t = 0; t < s.tau(); ++t, ++k) {
        rows << s.id << ',' << t << ',' << sf.labels[k] << ',' << format_double(sf.scores[k]) << '\n';
      }
    }
    std::size_t positives = 0;
    for (int l : sf.labels) positives += l == 1;
    summary = {{"mode", "anomaly"},
               {"sequences", target.size()},
               {"frames", sf.scores.size()},
               {"positives", positives},
               {"auc", result.auc},
               {"ap", result.ap}};
  } else {
    const auto predictions = forward_batch(params, target);
    std::vector<int> predicted(target.size());
    if (ev.inference == Inference::Exemplar) {
      BarycenterOptions options;
      options.gamma = ev.gamma > 0.0 ? ev.gamma : config.train.weights.gamma;
      options.steps = ev.barycenter_steps;
      options.step_size = config.train.barycenter_step_size;
      const ExemplarBank bank =
          build_exemplar_bank(params, reference, ev.exemplar_per_class, options);
      parallel_for(target.size(), [&](std::size_t i) {
        predicted[i] = nearest_exemplar_label(bank, predictions[i], ev.gamma);
      });
    } else {
      for (std::size_t i = 0; i < target.size(); ++i) predicted[i] = predict_label(predictions[i]);
    }
    std::size_t correct = 0;
    rows << "id,label,predicted,correct\n";
    for (std::size_t i = 0; i < target.size(); ++i) {
      const bool ok = predicted[i] == target[i].label;
      correct += ok;
      rows << target[i].id << ',' << target[i].label << ',' << predicted[i] << ',' << ok << '\n';
    }
    result.accuracy = static_cast<double>(correct) / static_cast<double>(target.size());
    summary = {{"mode", "classify"},
               {"inference", ev.inference == Inference::Frame ? "frame" : "exemplar"},
               {"sequences", target.size()},
               {"correct", correct},
               {"accuracy", result.accuracy}};
  }

  ensure_directory(config.output);
  const bool anomaly = ev.mode == EvalMode::Anomaly;
  write_text_file(in_dir(config.output, anomaly ? "frames.csv" : "predictions.csv"), rows.str());
  write_text_file(in_dir(config.output, "summary.json"), summary.dump(2) + "\n");
  write_text_file(in_dir(config.output, "weights.csv"), weights_csv(params));
  if (anomaly) {
    log << "frames " << summary["frames"].get<std::size_t>() << "  auc "
        << format_double(result.auc, 6) << "  ap " << format_double(result.ap, 6) << "\n";
  } else {
    log << "sequences " << result.count << "  accuracy " << format_double(result.accuracy, 6)
        << "\n";
  }
  return result;
}

double cmd_align(const AlignOptions& options, std::ostream& log) {
  const auto a = read_sequence_file(options.file_a);
  const auto b = read_sequence_file(options.file_b);
  if (options.index_a >= a.size() || options.index_b >= b.size()) {
    throw ArgumentError("align: sequence index out of range (" + std::to_string(a.size()) +
                        " and " + std::to_string(b.size()) + " records)");
  }
  const Matrix& x = a[options.index_a].frames;
  const Matrix& y = b[options.index_b].frames;
  if (x.cols() != y.cols()) {
    throw ArgumentError("align: C differs, " + std::to_string(x.cols()) + " vs " +
                        std::to_string(y.cols()));
  }
  if (std::isnan(options.gamma) || options.gamma < 0.0) {
    throw ArgumentError("align: gamma must be >= 0");
  }
  if (options.occupancy_csv && options.gamma == 0.0) {
    throw ArgumentError("align: the occupancy matrix needs gamma > 0");
  }
  const double value = soft_dtw(x, y, options.gamma);
  if (options.occupancy_csv) {
    const SoftDtwGradient g = soft_dtw_grad(x, y, options.gamma);
    std::ostringstream out;
    for (std::size_t i = 0; i < g.occupancy.rows(); ++i) {
      for (std::size_t j = 0; j < g.occupancy.cols(); ++j) {
        if (j) out << ',';
        out << format_double(g.occupancy(i, j));
      }
      out << '\n';
    }
    write_text_file(*options.occupancy_csv, out.str());
  }
  log << format_double(value, 12) << "\n";
  return value;
}

namespace {

bool rows_on_simplex(const PredictionSequence& m) {
  for (std::size_t t = 0; t < m.rows(); ++t) {
    double sum = 0;
    for (double v : m.row(t)) {
      if (v < 0) return false;
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) return false;
  }
  return true;
}

}  // namespace

Exemplar cmd_barycenter(const BarycenterCommand& command, std::ostream& log) {
  const auto input = read_sequence_file(command.input);
  if (input.empty()) throw ArgumentError("barycenter: input has no sequences");
  const int label = input.front().label;
  std::vector<PredictionSequence> sequences;
  for (const auto& s : input) {
    if (s.label != label) {
      throw ArgumentError("barycenter: input mixes classes " + std::to_string(label) + " and " +
                          std::to_string(s.label) + " ('" + s.id + "')");
    }
    sequences.push_back(s.frames);
  }
  BarycenterOptions options = command.options;
  if (options.project_rows && !std::all_of(sequences.begin(), sequences.end(), rows_on_simplex)) {
    log << "input rows are not on the simplex; running without projection\n";
    options.project_rows = false;
  }
  const Exemplar ex = barycenter(SupportSet::uniform(std::move(sequences)), options);
  const fs::path parent = fs::path(command.output).parent_path();
  if (!parent.empty()) ensure_directory(parent.string());
  write_sequence_file(command.output, {as_sequence_record(ex.rows, "exemplar", label)});
  log << "initial objective " << format_double(ex.initial_objective, 12) << "\n";
  log << "final objective " << format_double(ex.objective, 12) << "\n";
  return ex;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const NumericalError*>(&e)) return 3;
  if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const fs::filesystem_error*>(&e)) return 4;
  if (dynamic_cast<const std::invalid_argument*>(&e) || dynamic_cast<const FormatError*>(&e) ||
      dynamic_cast<const nlohmann::json::exception*>(&e)) {
    return 2;
  }
  return 1;
}

}  // namespace seqtraj
