#include "seqtraj/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace seqtraj {

using nlohmann::ordered_json;

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("error while reading '" + path + "'");
  return buffer.str();
}

void write_text_file(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << contents;
    out.flush();
    if (!out) throw IoError("error while writing '" + path + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move output into place at '" + path + "'");
  }
}

std::string sequence_to_line(const FeatureSequence& seq) {
  ordered_json j;
  j["id"] = seq.id;
  j["label"] = seq.label;
  if (seq.has_frame_labels()) j["frame_labels"] = seq.frame_labels;
  ordered_json frames = ordered_json::array();
  for (std::size_t t = 0; t < seq.tau(); ++t) {
    const auto row = seq.frames.row(t);
    frames.push_back(std::vector<double>(row.begin(), row.end()));
  }
  j["frames"] = std::move(frames);
  return j.dump();
}

FeatureSequence sequence_from_line(const std::string& line) {
  ordered_json j;
  try {
    j = ordered_json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("sequence record is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw FormatError("sequence record must be an object");
  for (const auto& [key, _] : j.items()) {
    if (key != "id" && key != "label" && key != "frame_labels" && key != "frames") {
      throw FormatError("sequence record has unknown key '" + key + "'");
    }
  }
  if (!j.contains("id") || !j.contains("label") || !j.contains("frames")) {
    throw FormatError("sequence record needs id, label and frames");
  }
  FeatureSequence seq;
  try {
    seq.id = j.at("id").get<std::string>();
    seq.label = j.at("label").get<int>();
    if (j.contains("frame_labels")) seq.frame_labels = j.at("frame_labels").get<std::vector<int>>();
    const auto rows = j.at("frames").get<std::vector<std::vector<double>>>();
    if (rows.empty()) throw FormatError("sequence '" + seq.id + "' has no frames");
    seq.frames = Matrix::from_rows(rows);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("sequence record has a field of the wrong type: ") + e.what());
  } catch (const ArgumentError& e) {
    throw FormatError("sequence '" + seq.id + "': " + e.what());
  }
  if (seq.has_frame_labels() && seq.frame_labels.size() != seq.tau()) {
    throw FormatError("sequence '" + seq.id + "' frame_labels length differs from frame count");
  }
  return seq;
}

std::string format_sequence_file(const std::vector<FeatureSequence>& seqs) {
  std::string out;
  for (const auto& s : seqs) {
    out += sequence_to_line(s);
    out += '\n';
  }
  return out;
}

std::vector<FeatureSequence> parse_sequence_file(const std::string& text) {
  std::vector<FeatureSequence> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(sequence_from_line(line));
    } catch (const FormatError& e) {
      throw FormatError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_sequence_file(const std::string& path, const std::vector<FeatureSequence>& seqs) {
  write_text_file(path, format_sequence_file(seqs));
}

std::vector<FeatureSequence> read_sequence_file(const std::string& path) {
  try {
    return parse_sequence_file(read_text_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

FeatureSequence as_sequence_record(const PredictionSequence& rows, std::string id, int label) {
  FeatureSequence s;
  s.id = std::move(id);
  s.label = label;
  s.frames = rows;
  return s;
}

Manifest make_manifest(const std::vector<FeatureSequence>& seqs, std::size_t num_classes,
                       ordered_json generator) {
  Manifest m;
  m.num_classes = num_classes;
  m.dim = seqs.empty() ? 0 : seqs.front().dim();
  m.count = seqs.size();
  for (const auto& s : seqs) ++m.class_counts[s.label];
  m.generator = std::move(generator);
  return m;
}

ordered_json manifest_to_json(const Manifest& m) {
  ordered_json j;
  j["num_classes"] = m.num_classes;
  j["d"] = m.dim;
  j["count"] = m.count;
  ordered_json counts = ordered_json::object();
  for (const auto& [label, n] : m.class_counts) counts[std::to_string(label)] = n;
  j["class_counts"] = std::move(counts);
  j["generator"] = m.generator;
  return j;
}

Manifest manifest_from_json(const ordered_json& j) {
  Manifest m;
  try {
    m.num_classes = j.at("num_classes").get<std::size_t>();
    m.dim = j.at("d").get<std::size_t>();
    m.count = j.at("count").get<std::size_t>();
    for (const auto& [label, n] : j.at("class_counts").items()) {
      m.class_counts[std::stoi(label)] = n.get<std::size_t>();
    }
    if (j.contains("generator")) m.generator = j.at("generator");
  } catch (const std::exception& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }
  return m;
}

std::string manifest_path_for(const std::string& sequence_path) {
  return sequence_path + ".manifest.json";
}

void write_manifest(const std::string& path, const Manifest& m) {
  write_text_file(path, manifest_to_json(m).dump(2) + "\n");
}

Manifest read_manifest(const std::string& path) {
  const std::string text = read_text_file(path);
  try {
    return manifest_from_json(ordered_json::parse(text));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path + ": " + e.what());
  }
}

}  // namespace seqtraj
