#include "seqtraj/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "seqtraj/io.hpp"
#include "seqtraj/parallel.hpp"

namespace seqtraj {
namespace {

void check_dims(const ClassifierParams& params, const Matrix& frames, const char* who) {
  if (params.bias.size() != params.weight.rows()) {
    throw ArgumentError(std::string(who) + ": bias length does not match weight rows");
  }
  if (frames.cols() != params.dim()) {
    throw ArgumentError(std::string(who) + ": feature dimension " +
                        std::to_string(frames.cols()) + " does not match model dimension " +
                        std::to_string(params.dim()));
  }
}

void logits(const ClassifierParams& params, std::span<const double> z, std::span<double> out) {
  for (std::size_t c = 0; c < params.num_classes(); ++c) {
    double acc = params.bias[c];
    const auto w = params.weight.row(c);
    for (std::size_t k = 0; k < z.size(); ++k) acc += w[k] * z[k];
    out[c] = acc;
  }
}

}  // namespace

void validate_sequence(const FeatureSequence& seq) {
  if (seq.tau() == 0) throw ArgumentError("sequence '" + seq.id + "' has no frames");
  if (!seq.frames.all_finite()) throw ArgumentError("sequence '" + seq.id + "' has non-finite frames");
  if (seq.has_frame_labels() && seq.frame_labels.size() != seq.tau()) {
    throw ArgumentError("sequence '" + seq.id + "' has " + std::to_string(seq.frame_labels.size()) +
                        " frame labels for " + std::to_string(seq.tau()) + " frames");
  }
}

ParamGrads ParamGrads::zeros_like(const ClassifierParams& p) {
  return {Matrix(p.weight.rows(), p.weight.cols()), std::vector<double>(p.bias.size(), 0.0)};
}

void ParamGrads::add(const ParamGrads& other) {
  auto dst = weight.data();
  auto src = other.weight.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  for (std::size_t c = 0; c < bias.size(); ++c) bias[c] += other.bias[c];
}

ClassifierParams init_params(std::size_t num_classes, std::size_t dim, double scale, Rng& rng) {
  if (num_classes < 2) throw ArgumentError("init_params: need at least 2 classes");
  if (dim < 1) throw ArgumentError("init_params: dimension must be >= 1");
  ClassifierParams p{Matrix(num_classes, dim), std::vector<double>(num_classes, 0.0)};
  for (double& w : p.weight.data()) w = scale * (2.0 * rng.uniform() - 1.0);
  return p;
}

PredictionSequence forward(const ClassifierParams& params, const Matrix& frames) {
  check_dims(params, frames, "forward");
  PredictionSequence phi(frames.rows(), params.num_classes());
  std::vector<double> u(params.num_classes());
  for (std::size_t t = 0; t < frames.rows(); ++t) {
    logits(params, frames.row(t), u);
    softmax(u, phi.row(t));
  }
  return phi;
}

PredictionSequence forward(const ClassifierParams& params, const FeatureSequence& seq) {
  return forward(params, seq.frames);
}

Matrix forward_sigmoid(const ClassifierParams& params, const Matrix& frames) {
  check_dims(params, frames, "forward_sigmoid");
  Matrix out(frames.rows(), params.num_classes());
  std::vector<double> u(params.num_classes());
  for (std::size_t t = 0; t < frames.rows(); ++t) {
    logits(params, frames.row(t), u);
    for (std::size_t c = 0; c < u.size(); ++c) out(t, c) = 1.0 / (1.0 + std::exp(-u[c]));
  }
  return out;
}

std::vector<PredictionSequence> forward_batch(const ClassifierParams& params,
                                              const std::vector<FeatureSequence>& batch) {
  std::vector<PredictionSequence> out(batch.size());
  parallel_for(batch.size(), [&](std::size_t i) { out[i] = forward(params, batch[i].frames); });
  return out;
}

ParamGrads backward(const ClassifierParams& params, const Matrix& frames,
                    const Matrix& grad_phi) {
  return backward(params, frames, forward(params, frames), grad_phi);
}

ParamGrads backward(const ClassifierParams& params, const Matrix& frames,
                    const PredictionSequence& phi, const Matrix& grad_phi) {
  check_dims(params, frames, "backward");
  if (grad_phi.rows() != frames.rows() || grad_phi.cols() != params.num_classes() ||
      phi.rows() != frames.rows() || phi.cols() != params.num_classes()) {
    throw ArgumentError("backward: gradient shape does not match tau x C");
  }
  ParamGrads g = ParamGrads::zeros_like(params);
  const std::size_t classes = params.num_classes();
  std::vector<double> grad_u(classes);
  for (std::size_t t = 0; t < frames.rows(); ++t) {
    // J = diag(φ) − φφᵀ is symmetric: grad_u = φ ⊙ (g − ⟨φ, g⟩).
    double inner = 0.0;
    for (std::size_t c = 0; c < classes; ++c) inner += phi(t, c) * grad_phi(t, c);
    for (std::size_t c = 0; c < classes; ++c) grad_u[c] = phi(t, c) * (grad_phi(t, c) - inner);
    const auto z = frames.row(t);
    for (std::size_t c = 0; c < classes; ++c) {
      auto w = g.weight.row(c);
      for (std::size_t k = 0; k < z.size(); ++k) w[k] += grad_u[c] * z[k];
      g.bias[c] += grad_u[c];
    }
  }
  return g;
}

void write_params(std::ostream& out, const ClassifierParams& params) {
  out << "seqtraj-params v1 " << params.num_classes() << ' ' << params.dim() << '\n';
  for (std::size_t c = 0; c < params.num_classes(); ++c) {
    const auto row = params.weight.row(c);
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k) out << ' ';
      out << format_double(row[k]);
    }
    out << '\n';
  }
  for (std::size_t c = 0; c < params.bias.size(); ++c) {
    if (c) out << ' ';
    out << format_double(params.bias[c]);
  }
  out << '\n';
}

ClassifierParams read_params(std::istream& in) {
  std::string magic, version;
  std::size_t classes = 0, dim = 0;
  if (!(in >> magic >> version >> classes >> dim) || magic != "seqtraj-params") {
    throw FormatError("params: missing 'seqtraj-params' header");
  }
  if (version != "v1") throw FormatError("params: unsupported version '" + version + "'");
  if (classes < 2 || dim < 1) throw FormatError("params: invalid shape in header");
  ClassifierParams p{Matrix(classes, dim), std::vector<double>(classes)};
  auto read_value = [&](double& v) {
    std::string token;
    if (!(in >> token)) throw FormatError("params: truncated file");
    try {
      std::size_t used = 0;
      v = std::stod(token, &used);
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
      throw FormatError("params: bad number '" + token + "'");
    }
    if (!std::isfinite(v)) throw FormatError("params: non-finite value");
  };
  for (double& w : p.weight.data()) read_value(w);
  for (double& b : p.bias) read_value(b);
  std::string extra;
  if (in >> extra) throw FormatError("params: trailing data after biases");
  return p;
}

void save_params(const std::string& path, const ClassifierParams& params) {
  std::ostringstream buffer;
  write_params(buffer, params);
  write_text_file(path, buffer.str());
}

ClassifierParams load_params(const std::string& path) {
  std::istringstream in(read_text_file(path));
  return read_params(in);
}

}  // namespace seqtraj
