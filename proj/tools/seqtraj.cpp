// seqtraj command-line driver: gen, train, eval, align, barycenter.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "seqtraj/experiment.hpp"
#include "seqtraj/parallel.hpp"

using namespace seqtraj;

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  bool deterministic = false;
  int threads = 0;
  std::optional<std::string> out;
  std::vector<std::string> overrides;
};

// Config file first, then --set assignments, then dedicated flags.
ExperimentConfig resolve(const Common& common, const std::vector<std::string>& flag_overrides) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::object();
  if (!common.config_path.empty()) doc = load_config_document(common.config_path);
  for (const auto& o : common.overrides) apply_override(doc, o);
  for (const auto& o : flag_overrides) apply_override(doc, o);
  if (common.seed) doc["seed"] = *common.seed;
  if (common.out) doc["output"] = *common.out;
  ExperimentConfig config = parse_experiment_config(doc);
  config.deterministic = common.deterministic;
  config.threads = common.threads;
  return config;
}

template <class T>
void add_override(std::vector<std::string>& out, const char* key, const std::optional<T>& v) {
  if (!v) return;
  out.push_back(std::string(key) + "=" + nlohmann::ordered_json(*v).dump());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Support-exemplar-query trajectory learning"};
  app.require_subcommand(1);
  app.fallthrough();

  Common common;
  common.threads = threads_from_env(1);
  app.add_option("--config", common.config_path, "JSON experiment config");
  app.add_option("--seed", common.seed, "master seed");
  app.add_flag("--deterministic", common.deterministic, "single-threaded, reproducible run");
  app.add_option("--threads", common.threads, "worker threads (default $SEQTRAJ_THREADS or 1)")
      ->check(CLI::PositiveNumber);
  app.add_option("--out", common.out, "output directory");
  app.add_option("--set", common.overrides, "config override section.key=value");

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  std::optional<std::string> generator;
  std::optional<std::size_t> num_classes, per_class, tau, dim;
  std::optional<bool> overlap;
  gen->add_option("--generator", generator, "trajectory or anomaly");
  gen->add_option("--num-classes", num_classes);
  gen->add_option("--per-class", per_class);
  gen->add_option("--tau", tau);
  gen->add_option("--d", dim);
  gen->add_option("--marginal-overlap", overlap);

  // train
  auto* tr = app.add_subcommand("train", "episodic training");
  std::optional<std::string> data_path;
  std::optional<std::size_t> epochs, episodes, n_support;
  std::optional<double> lr, alpha, beta, gamma_train;
  bool resume = false;
  tr->add_option("--data", data_path, "sequence file (overrides the generator spec)");
  tr->add_option("--epochs", epochs);
  tr->add_option("--episodes-per-epoch", episodes);
  tr->add_option("--n-support", n_support);
  tr->add_option("--lr", lr);
  tr->add_option("--alpha", alpha);
  tr->add_option("--beta", beta);
  tr->add_option("--gamma", gamma_train);
  tr->add_flag("--resume", resume, "continue from the checkpoint in --out");

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
  std::optional<std::string> mode, inference, checkpoint, eval_dataset, eval_data;
  std::optional<std::size_t> anomaly_class;
  ev->add_option("--mode", mode, "classify or anomaly");
  ev->add_option("--inference", inference, "frame or exemplar");
  ev->add_option("--checkpoint", checkpoint, "checkpoint directory");
  ev->add_option("--dataset", eval_dataset, "sequence file to evaluate");
  ev->add_option("--data", eval_data, "reference sequence file");
  ev->add_option("--anomaly-class", anomaly_class);

  // align
  auto* al = app.add_subcommand("align", "soft-DTW between two sequences");
  AlignOptions align;
  std::optional<std::string> occupancy;
  al->add_option("file_a", align.file_a)->required();
  al->add_option("file_b", align.file_b)->required();
  al->add_option("--gamma", align.gamma)->capture_default_str();
  al->add_option("--index-a", align.index_a);
  al->add_option("--index-b", align.index_b);
  al->add_option("--occupancy", occupancy, "write the occupancy matrix as CSV");

  // barycenter
  auto* bc = app.add_subcommand("barycenter", "exemplar of one class");
  BarycenterCommand bary;
  std::optional<std::string> bary_output;
  bool bary_free = false;
  bc->add_option("file", bary.input)->required();
  bc->add_option("--gamma", bary.options.gamma)->capture_default_str();
  bc->add_option("--steps", bary.options.steps)->capture_default_str();
  bc->add_option("--step-size", bary.options.step_size)->capture_default_str();
  bc->add_flag("--free", bary_free, "skip the simplex projection");
  bc->add_option("--output", bary_output, "exemplar file (default <out>/exemplar.jsonl)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    set_num_threads(common.deterministic ? 1 : common.threads);
    std::vector<std::string> flags;
    if (gen->parsed()) {
      add_override(flags, "data.generator", generator);
      add_override(flags, "data.num_classes", num_classes);
      add_override(flags, "data.per_class", per_class);
      add_override(flags, "data.tau", tau);
      add_override(flags, "data.d", dim);
      add_override(flags, "data.marginal_overlap", overlap);
      cmd_gen(resolve(common, flags), std::cout);
    } else if (tr->parsed()) {
      add_override(flags, "data.path", data_path);
      add_override(flags, "train.epochs", epochs);
      add_override(flags, "train.episodes_per_epoch", episodes);
      add_override(flags, "train.n_support", n_support);
      add_override(flags, "train.learning_rate", lr);
      add_override(flags, "train.alpha", alpha);
      add_override(flags, "train.beta", beta);
      add_override(flags, "train.gamma", gamma_train);
      if (resume) flags.push_back("train.resume=true");
      cmd_train(resolve(common, flags), std::cout);
    } else if (ev->parsed()) {
      add_override(flags, "data.path", eval_data);
      add_override(flags, "eval.mode", mode);
      add_override(flags, "eval.inference", inference);
      add_override(flags, "eval.checkpoint", checkpoint);
      add_override(flags, "eval.dataset", eval_dataset);
      add_override(flags, "eval.anomaly_class", anomaly_class);
      cmd_eval(resolve(common, flags), std::cout);
    } else if (al->parsed()) {
      align.occupancy_csv = occupancy;
      cmd_align(align, std::cout);
    } else if (bc->parsed()) {
      const ExperimentConfig config = resolve(common, flags);
      bary.options.project_rows = !bary_free;
      bary.output = bary_output.value_or(config.output + "/exemplar.jsonl");
      cmd_barycenter(bary, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return 0;
}
