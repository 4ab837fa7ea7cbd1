#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "seqtraj/model.hpp"

namespace seqtraj {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed file contents.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_text_file(const std::string& path);
// Writes through a temporary sibling and renames it into place.
void write_text_file(const std::string& path, const std::string& contents);

// Sequence file: JSON Lines, one object per sequence with keys in the order
//   id, label, frame_labels (only when present), frames.
// Numbers are printed in shortest round-trip form, so write → read → write
// reproduces the same bytes.
std::string sequence_to_line(const FeatureSequence& seq);
FeatureSequence sequence_from_line(const std::string& line);
std::string format_sequence_file(const std::vector<FeatureSequence>& seqs);
std::vector<FeatureSequence> parse_sequence_file(const std::string& text);
void write_sequence_file(const std::string& path, const std::vector<FeatureSequence>& seqs);
std::vector<FeatureSequence> read_sequence_file(const std::string& path);

// Prediction trajectories (exemplars, model outputs) share the same format.
FeatureSequence as_sequence_record(const PredictionSequence& rows, std::string id, int label);

struct Manifest {
  std::size_t num_classes = 0;
  std::size_t dim = 0;
  std::size_t count = 0;
  std::map<int, std::size_t> class_counts;
  nlohmann::ordered_json generator;  // generation config, free-form
};

Manifest make_manifest(const std::vector<FeatureSequence>& seqs, std::size_t num_classes,
                       nlohmann::ordered_json generator);
nlohmann::ordered_json manifest_to_json(const Manifest& m);
Manifest manifest_from_json(const nlohmann::ordered_json& j);
// "<path>.manifest.json"
std::string manifest_path_for(const std::string& sequence_path);
void write_manifest(const std::string& path, const Manifest& m);
Manifest read_manifest(const std::string& path);

}  // namespace seqtraj
