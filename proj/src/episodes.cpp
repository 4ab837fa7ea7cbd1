#include "seqtraj/episodes.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "seqtraj/parallel.hpp"

namespace seqtraj {
namespace {

constexpr double kPi = 3.14159265358979323846;

struct KindInfo {
  AugmentKind kind;
  std::string_view name;
};

constexpr KindInfo kKinds[] = {
    {AugmentKind::RotationDeg, "rotation_deg"}, {AugmentKind::TranslateXPx, "translate_x_px"},
    {AugmentKind::TranslateYPx, "translate_y_px"}, {AugmentKind::ZoomFactor, "zoom_factor"},
    {AugmentKind::ShearDeg, "shear_deg"},       {AugmentKind::Brightness, "brightness"},
    {AugmentKind::BlurSigma, "blur_sigma"},     {AugmentKind::CutoutX, "cutout_x"},
    {AugmentKind::CutoutY, "cutout_y"},
};

double bilinear(const RasterImage& img, double x, double y) {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const double ax = x - fx;
  const double ay = y - fy;
  const long x0 = static_cast<long>(fx);
  const long y0 = static_cast<long>(fy);
  auto pixel = [&](long yy, long xx) {
    if (xx < 0 || yy < 0 || xx >= static_cast<long>(img.width) ||
        yy >= static_cast<long>(img.height)) {
      return 0.0;
    }
    return img.at(static_cast<std::size_t>(yy), static_cast<std::size_t>(xx));
  };
  // Exact integer coordinates return the pixel itself.
  if (ax == 0.0 && ay == 0.0) return pixel(y0, x0);
  return (1.0 - ay) * ((1.0 - ax) * pixel(y0, x0) + ax * pixel(y0, x0 + 1)) +
         ay * ((1.0 - ax) * pixel(y0 + 1, x0) + ax * pixel(y0 + 1, x0 + 1));
}

// Orthonormal directions via Gram-Schmidt on Gaussian draws. When count > dim
// the trailing directions are plain normalized draws.
std::vector<std::vector<double>> random_directions(std::size_t count, std::size_t dim, Rng& rng) {
  std::vector<std::vector<double>> out;
  for (std::size_t k = 0; k < count; ++k) {
    std::vector<double> v(dim);
    for (double& x : v) x = rng.normal();
    if (k < dim) {
      for (const auto& q : out) {
        double dot = 0.0;
        for (std::size_t i = 0; i < dim; ++i) dot += v[i] * q[i];
        for (std::size_t i = 0; i < dim; ++i) v[i] -= dot * q[i];
      }
    }
    const double norm = l2_norm(v);
    for (double& x : v) x /= norm;
    out.push_back(std::move(v));
  }
  return out;
}

// τ×d smooth field, per-coordinate standard deviation ≈ 1: low-order
// Fourier terms with Gaussian coefficients over s ∈ [0, 1].
Matrix smooth_field(std::size_t tau, std::size_t dim, Rng& rng) {
  constexpr std::size_t kTerms = 5;  // constant, cos/sin at frequencies 1 and 2
  std::vector<std::vector<double>> coeff(kTerms, std::vector<double>(dim));
  const double scale = 1.0 / std::sqrt(static_cast<double>(kTerms));
  for (auto& c : coeff) {
    for (double& x : c) x = scale * rng.normal();
  }
  Matrix field(tau, dim);
  for (std::size_t t = 0; t < tau; ++t) {
    const double s = tau > 1 ? static_cast<double>(t) / static_cast<double>(tau - 1) : 0.0;
    const double basis[kTerms] = {1.0, std::cos(2 * kPi * s), std::sin(2 * kPi * s),
                                  std::cos(4 * kPi * s), std::sin(4 * kPi * s)};
    for (std::size_t i = 0; i < dim; ++i) {
      double v = 0.0;
      for (std::size_t k = 0; k < kTerms; ++k) v += basis[k] * coeff[k][i];
      field(t, i) = v;
    }
  }
  return field;
}

// Closed curve a₁(cos θ q₁ + sin θ q₂) + a₂(cos 2θ q₃ + sin 2θ q₄).
void curve_point(const std::vector<std::vector<double>>& basis, double theta,
                 std::span<double> out) {
  const double a1 = 1.0;
  const double a2 = 0.5;
  const double w[4] = {a1 * std::cos(theta), a1 * std::sin(theta), a2 * std::cos(2 * theta),
                       a2 * std::sin(2 * theta)};
  for (std::size_t i = 0; i < out.size(); ++i) {
    double v = 0.0;
    for (std::size_t k = 0; k < 4; ++k) v += w[k] * basis[k][i];
    out[i] = v;
  }
}

struct TrajectoryLayout {
  std::vector<std::vector<double>> basis;    // 4 curve directions
  std::vector<std::vector<double>> offsets;  // per class, empty under overlap
  std::vector<double> phase;                 // per class
  std::vector<double> direction;             // per class, ±1
};

TrajectoryLayout make_layout(const TrajectorySpec& spec, std::uint64_t master) {
  Rng rng(derive_seed(master, "prototypes"));
  TrajectoryLayout layout;
  auto dirs = random_directions(4 + spec.num_classes, spec.dim, rng);
  layout.basis.assign(dirs.begin(), dirs.begin() + 4);
  const double step = 2 * kPi / static_cast<double>(spec.tau);
  if (spec.marginal_overlap) {
    // Classes pair up as forward/reverse traversals; pairs start at phases
    // spread around the cycle, snapped to the τ-point grid so every class
    // visits exactly the same points.
    const std::size_t groups = (spec.num_classes + 1) / 2;
    for (std::size_t c = 0; c < spec.num_classes; ++c) {
      const double raw = 2 * kPi * static_cast<double>(c / 2) / static_cast<double>(groups);
      layout.phase.push_back(std::round(raw / step) * step);
      layout.direction.push_back(c % 2 == 0 ? 1.0 : -1.0);
    }
  } else {
    for (std::size_t c = 0; c < spec.num_classes; ++c) {
      layout.phase.push_back(rng.uniform(0.0, 2 * kPi));
      layout.direction.push_back(1.0);
      std::vector<double> offset = dirs[4 + c];
      for (double& x : offset) x *= spec.separation / std::sqrt(2.0);
      layout.offsets.push_back(std::move(offset));
    }
  }
  return layout;
}

Matrix prototype_for(const TrajectorySpec& spec, const TrajectoryLayout& layout, std::size_t c) {
  Matrix proto(spec.tau, spec.dim);
  const double step = 2 * kPi / static_cast<double>(spec.tau);
  for (std::size_t t = 0; t < spec.tau; ++t) {
    const double theta = layout.phase[c] + layout.direction[c] * step * static_cast<double>(t);
    curve_point(layout.basis, theta, proto.row(t));
    if (!layout.offsets.empty()) {
      for (std::size_t i = 0; i < spec.dim; ++i) proto(t, i) += layout.offsets[c][i];
    }
  }
  return proto;
}

void validate_trajectory_spec(const TrajectorySpec& spec) {
  if (spec.num_classes < 2) throw ArgumentError("trajectory dataset: num_classes must be >= 2");
  if (spec.per_class < 1) throw ArgumentError("trajectory dataset: per_class must be >= 1");
  if (spec.tau < 2) throw ArgumentError("trajectory dataset: tau must be >= 2");
  if (spec.dim < 1) throw ArgumentError("trajectory dataset: d must be >= 1");
  if (!(spec.shape_noise >= 0.0)) throw ArgumentError("trajectory dataset: shape_noise must be >= 0");
}

}  // namespace

// ---------------------------------------------------------------------------
// Schedules
// ---------------------------------------------------------------------------

std::string_view kind_name(AugmentKind kind) {
  for (const auto& k : kKinds) {
    if (k.kind == kind) return k.name;
  }
  return "unknown";
}

AugmentKind parse_kind(std::string_view name) {
  for (const auto& k : kKinds) {
    if (k.name == name) return k.kind;
  }
  throw ArgumentError("unknown augmentation kind '" + std::string(name) + "'");
}

std::vector<AugmentKind> all_kinds() {
  std::vector<AugmentKind> out;
  for (const auto& k : kKinds) out.push_back(k.kind);
  return out;
}

KindRange kind_range(AugmentKind kind, std::size_t image_side) {
  const double quarter = 0.25 * static_cast<double>(image_side);
  switch (kind) {
    case AugmentKind::RotationDeg: return {-45.0, 45.0};
    case AugmentKind::TranslateXPx:
    case AugmentKind::TranslateYPx: return {-quarter, quarter};
    case AugmentKind::ZoomFactor: return {0.7, 1.3};
    case AugmentKind::ShearDeg: return {-15.0, 15.0};
    case AugmentKind::Brightness: return {0.6, 1.4};
    case AugmentKind::BlurSigma: return {0.0, 2.0};
    case AugmentKind::CutoutX:
    case AugmentKind::CutoutY: return {0.0, 1.0};
  }
  throw ArgumentError("unknown augmentation kind");
}

double neutral_value(AugmentKind kind) {
  switch (kind) {
    case AugmentKind::ZoomFactor:
    case AugmentKind::Brightness: return 1.0;
    case AugmentKind::CutoutX:
    case AugmentKind::CutoutY: return 0.5;
    default: return 0.0;
  }
}

std::optional<double> AugmentationSchedule::value(AugmentKind kind, std::size_t t) const {
  if (t < 1 || t > tau) {
    throw ArgumentError("schedule: time index " + std::to_string(t) + " outside [1, " +
                        std::to_string(tau) + "]");
  }
  for (const auto& track : tracks) {
    if (track.kind != kind) continue;
    if (tau == 1) return track.start;
    const double frac = static_cast<double>(t - 1) / static_cast<double>(tau - 1);
    return track.start + frac * (track.end - track.start);
  }
  return std::nullopt;
}

double AugmentationSchedule::value_or_neutral(AugmentKind kind, std::size_t t) const {
  return value(kind, t).value_or(neutral_value(kind));
}

AugmentationSchedule schedule_sample(std::size_t tau, const std::vector<AugmentKind>& kinds,
                                     Rng& rng, std::size_t image_side) {
  if (tau < 2) throw ArgumentError("schedule_sample: tau must be >= 2");
  AugmentationSchedule s;
  s.tau = tau;
  std::set<AugmentKind> seen;
  for (AugmentKind kind : kinds) {
    if (!seen.insert(kind).second) {
      throw ArgumentError("schedule_sample: duplicate kind '" + std::string(kind_name(kind)) + "'");
    }
    const auto range = kind_range(kind, image_side);
    const double start = rng.uniform(range.lo, range.hi);
    const double end = rng.uniform(range.lo, range.hi);
    s.tracks.push_back({kind, start, end});
  }
  return s;
}

AugmentationSchedule identity_schedule(std::size_t tau, const std::vector<AugmentKind>& kinds) {
  AugmentationSchedule s;
  s.tau = tau;
  for (AugmentKind kind : kinds) {
    s.tracks.push_back({kind, neutral_value(kind), neutral_value(kind)});
  }
  return s;
}

nlohmann::ordered_json schedule_to_json(const AugmentationSchedule& s) {
  nlohmann::ordered_json j;
  j["tau"] = s.tau;
  nlohmann::ordered_json tracks = nlohmann::ordered_json::array();
  for (const auto& t : s.tracks) {
    tracks.push_back({{"kind", kind_name(t.kind)}, {"start", t.start}, {"end", t.end}});
  }
  j["tracks"] = std::move(tracks);
  return j;
}

// ---------------------------------------------------------------------------
// Augmentation
// ---------------------------------------------------------------------------

RasterImage affine_warp(const RasterImage& img, double rotation_deg, double shear_deg,
                        double zoom, double translate_x, double translate_y) {
  if (!(zoom > 0.0)) throw ArgumentError("affine_warp: zoom must be > 0");
  const double theta = rotation_deg * kPi / 180.0;
  const double shear = std::tan(shear_deg * kPi / 180.0);
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  // A = R(θ) · [[1, shear], [0, 1]] · zoom, about the image centre.
  const double a00 = zoom * c;
  const double a01 = zoom * (c * shear - s);
  const double a10 = zoom * s;
  const double a11 = zoom * (s * shear + c);
  const double det = a00 * a11 - a01 * a10;
  const double i00 = a11 / det;
  const double i01 = -a01 / det;
  const double i10 = -a10 / det;
  const double i11 = a00 / det;
  const double cx = 0.5 * static_cast<double>(img.width - 1);
  const double cy = 0.5 * static_cast<double>(img.height - 1);

  RasterImage out(img.height, img.width);
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) {
      const double dx = static_cast<double>(x) - cx - translate_x;
      const double dy = static_cast<double>(y) - cy - translate_y;
      const double sx = cx + i00 * dx + i01 * dy;
      const double sy = cy + i10 * dx + i11 * dy;
      out.at(y, x) = bilinear(img, sx, sy);
    }
  }
  return out;
}

RasterImage gaussian_blur(const RasterImage& img, double sigma) {
  if (!(sigma > 0.0)) return img;
  const long radius = static_cast<long>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  for (long k = -radius; k <= radius; ++k) {
    kernel[static_cast<std::size_t>(k + radius)] =
        std::exp(-0.5 * static_cast<double>(k * k) / (sigma * sigma));
  }
  const long h = static_cast<long>(img.height);
  const long w = static_cast<long>(img.width);
  // Taps falling outside the image are dropped and the rest renormalized.
  auto pass = [&](const RasterImage& src, bool horizontal) {
    RasterImage dst(img.height, img.width);
    for (long y = 0; y < h; ++y) {
      for (long x = 0; x < w; ++x) {
        double acc = 0.0;
        double norm = 0.0;
        for (long k = -radius; k <= radius; ++k) {
          const long xx = horizontal ? x + k : x;
          const long yy = horizontal ? y : y + k;
          if (xx < 0 || yy < 0 || xx >= w || yy >= h) continue;
          const double wk = kernel[static_cast<std::size_t>(k + radius)];
          acc += wk * src.at(static_cast<std::size_t>(yy), static_cast<std::size_t>(xx));
          norm += wk;
        }
        dst.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = acc / norm;
      }
    }
    return dst;
  };
  return pass(pass(img, true), false);
}

void apply_cutout(RasterImage& img, double centre_x, double centre_y) {
  const std::size_t min_side = std::min(img.height, img.width);
  const long side = std::max<long>(1, std::lround(0.2 * static_cast<double>(min_side)));
  const long cx = std::lround(centre_x * static_cast<double>(img.width - 1));
  const long cy = std::lround(centre_y * static_cast<double>(img.height - 1));
  const long x0 = cx - side / 2;
  const long y0 = cy - side / 2;
  for (long y = std::max(0L, y0); y < std::min<long>(y0 + side, static_cast<long>(img.height)); ++y) {
    for (long x = std::max(0L, x0); x < std::min<long>(x0 + side, static_cast<long>(img.width)); ++x) {
      img.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = 0.0;
    }
  }
}

RasterImage apply_augmentation(const RasterImage& img, const AugmentationSchedule& schedule,
                               std::size_t t) {
  if (t < 1 || t > schedule.tau) {
    throw ArgumentError("apply_augmentation: time index " + std::to_string(t) +
                        " outside [1, " + std::to_string(schedule.tau) + "]");
  }
  auto v = [&](AugmentKind k) { return schedule.value_or_neutral(k, t); };
  const double rotation = v(AugmentKind::RotationDeg);
  const double shear = v(AugmentKind::ShearDeg);
  const double zoom = v(AugmentKind::ZoomFactor);
  const double tx = v(AugmentKind::TranslateXPx);
  const double ty = v(AugmentKind::TranslateYPx);

  RasterImage out = (rotation == 0.0 && shear == 0.0 && zoom == 1.0 && tx == 0.0 && ty == 0.0)
                        ? img
                        : affine_warp(img, rotation, shear, zoom, tx, ty);

  const double brightness = v(AugmentKind::Brightness);
  if (brightness != 1.0) {
    for (double& p : out.pixels) p = std::clamp(p * brightness, 0.0, 1.0);
  }
  out = gaussian_blur(out, v(AugmentKind::BlurSigma));

  const auto cut_x = schedule.value(AugmentKind::CutoutX, t);
  const auto cut_y = schedule.value(AugmentKind::CutoutY, t);
  if (cut_x || cut_y) {
    apply_cutout(out, cut_x.value_or(0.5), cut_y.value_or(0.5));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Encoder
// ---------------------------------------------------------------------------

FrozenEncoder::FrozenEncoder(std::uint64_t seed, std::size_t dim, std::size_t height,
                             std::size_t width)
    : seed_(seed), height_(height), width_(width), projection_(dim, height * width) {
  if (dim < 1) throw ArgumentError("encoder: d must be >= 1");
  if (height * width == 0) throw ArgumentError("encoder: empty image shape");
  Rng rng(derive_seed(seed, "encoder-projection"));
  const double scale = 1.0 / std::sqrt(static_cast<double>(height * width));
  for (double& p : projection_.data()) p = scale * rng.normal();
}

std::vector<double> FrozenEncoder::encode(const RasterImage& img) const {
  if (img.height != height_ || img.width != width_) {
    throw ArgumentError("encoder: image is " + std::to_string(img.height) + "x" +
                        std::to_string(img.width) + ", encoder expects " +
                        std::to_string(height_) + "x" + std::to_string(width_));
  }
  std::vector<double> z(dim());
  parallel_for(dim(), [&](std::size_t r) {
    const auto row = projection_.row(r);
    double acc = 0.0;
    for (std::size_t k = 0; k < row.size(); ++k) acc += row[k] * img.pixels[k];
    z[r] = std::tanh(acc);
  });
  return z;
}

std::vector<double> encode(const RasterImage& img, std::uint64_t encoder_seed, std::size_t dim) {
  return FrozenEncoder(encoder_seed, dim, img.height, img.width).encode(img);
}

FeatureSequence make_image_sequence(const RasterImage& img, const AugmentationSchedule& schedule,
                                    const FrozenEncoder& encoder, int label, std::string id) {
  FeatureSequence seq;
  seq.id = std::move(id);
  seq.label = label;
  if (label >= 0) seq.frame_labels.assign(schedule.tau, label);
  seq.frames = Matrix(schedule.tau, encoder.dim());
  for (std::size_t t = 1; t <= schedule.tau; ++t) {
    const auto z = encoder.encode(apply_augmentation(img, schedule, t));
    std::copy(z.begin(), z.end(), seq.frames.row(t - 1).begin());
  }
  return seq;
}

std::vector<LabeledImage> make_class_images(std::size_t num_classes, std::size_t per_class,
                                            std::size_t side, double jitter, Rng& rng) {
  if (num_classes < 1 || per_class < 1 || side < 4) {
    throw ArgumentError("make_class_images: need classes >= 1, per_class >= 1, side >= 4");
  }
  const std::uint64_t master = rng.next_u64();
  constexpr std::size_t kBlobs = 3;
  const double extent = static_cast<double>(side - 1);

  std::vector<std::vector<std::pair<double, double>>> layouts(num_classes);
  Rng layout_rng(derive_seed(master, "layouts"));
  for (auto& layout : layouts) {
    for (std::size_t b = 0; b < kBlobs; ++b) {
      layout.emplace_back(layout_rng.uniform(0.2, 0.8) * extent, layout_rng.uniform(0.2, 0.8) * extent);
    }
  }

  std::vector<LabeledImage> out(num_classes * per_class);
  parallel_for(out.size(), [&](std::size_t idx) {
    const std::size_t c = idx / per_class;
    const std::size_t i = idx % per_class;
    LabeledImage item;
    item.id = "img-c" + std::to_string(c) + "-" + std::to_string(i);
    item.label = static_cast<int>(c);
    item.image = RasterImage(side, side);
    Rng local(derive_seed(master, item.id));
    const double radius = 0.08 * extent;
    for (const auto& [bx, by] : layouts[c]) {
      const double x0 = bx + jitter * extent * local.normal();
      const double y0 = by + jitter * extent * local.normal();
      for (std::size_t y = 0; y < side; ++y) {
        for (std::size_t x = 0; x < side; ++x) {
          const double dx = static_cast<double>(x) - x0;
          const double dy = static_cast<double>(y) - y0;
          item.image.at(y, x) += std::exp(-0.5 * (dx * dx + dy * dy) / (radius * radius));
        }
      }
    }
    for (double& p : item.image.pixels) p = std::clamp(p + 0.02 * local.normal(), 0.0, 1.0);
    out[idx] = std::move(item);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Trajectory datasets
// ---------------------------------------------------------------------------

std::vector<Matrix> trajectory_prototypes(const TrajectorySpec& spec, Rng& rng) {
  validate_trajectory_spec(spec);
  const auto layout = make_layout(spec, rng.next_u64());
  std::vector<Matrix> out;
  for (std::size_t c = 0; c < spec.num_classes; ++c) out.push_back(prototype_for(spec, layout, c));
  return out;
}

std::vector<FeatureSequence> make_synthetic_trajectory_dataset(const TrajectorySpec& spec,
                                                               Rng& rng) {
  validate_trajectory_spec(spec);
  const std::uint64_t master = rng.next_u64();
  const auto layout = make_layout(spec, master);
  std::vector<Matrix> prototypes;
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    prototypes.push_back(prototype_for(spec, layout, c));
  }

  const double per_coord = spec.shape_noise / std::sqrt(static_cast<double>(spec.dim));
  std::vector<FeatureSequence> out(spec.num_classes * spec.per_class);
  parallel_for(out.size(), [&](std::size_t idx) {
    const std::size_t c = idx / spec.per_class;
    FeatureSequence seq;
    seq.id = "c" + std::to_string(c) + "-" + std::to_string(idx % spec.per_class);
    seq.label = static_cast<int>(c);
    seq.frame_labels.assign(spec.tau, seq.label);
    seq.frames = prototypes[c];
    if (per_coord > 0.0) {
      Rng local(derive_seed(master, seq.id));
      const Matrix field = smooth_field(spec.tau, spec.dim, local);
      auto dst = seq.frames.data();
      auto src = field.data();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += per_coord * src[k];
    }
    out[idx] = std::move(seq);
  });
  return out;
}

std::vector<FeatureSequence> make_anomaly_dataset(const AnomalySpec& spec, Rng& rng) {
  if (spec.tau < 2) throw ArgumentError("anomaly dataset: tau must be >= 2");
  if (spec.anomaly_len < 1 || spec.anomaly_len >= spec.tau) {
    throw ArgumentError("anomaly dataset: anomaly_len must be in [1, tau)");
  }
  if (spec.dim < 1) throw ArgumentError("anomaly dataset: d must be >= 1");
  if (!(spec.noise >= 0.0)) throw ArgumentError("anomaly dataset: noise must be >= 0");

  const std::uint64_t master = rng.next_u64();
  Rng layout_rng(derive_seed(master, "prototypes"));
  const auto dirs = random_directions(5, spec.dim, layout_rng);
  const std::vector<std::vector<double>> basis(dirs.begin(), dirs.begin() + 4);
  const std::vector<double>& anomaly_dir = dirs[4];

  const std::size_t total = spec.num_normals + spec.num_abnormal;
  std::vector<FeatureSequence> out(total);
  parallel_for(total, [&](std::size_t idx) {
    const bool abnormal = idx >= spec.num_normals;
    FeatureSequence seq;
    seq.id = abnormal ? "abnormal-" + std::to_string(idx - spec.num_normals)
                      : "normal-" + std::to_string(idx);
    seq.label = abnormal ? 1 : 0;
    seq.frame_labels.assign(spec.tau, 0);
    seq.frames = Matrix(spec.tau, spec.dim);
    Rng local(derive_seed(master, seq.id));
    const double phase = local.uniform(0.0, 2 * kPi);
    const double step = 2 * kPi / static_cast<double>(spec.tau);
    for (std::size_t t = 0; t < spec.tau; ++t) {
      curve_point(basis, phase + step * static_cast<double>(t), seq.frames.row(t));
    }
    const Matrix field = smooth_field(spec.tau, spec.dim, local);
    for (std::size_t t = 0; t < spec.tau; ++t) {
      for (std::size_t i = 0; i < spec.dim; ++i) {
        seq.frames(t, i) += spec.noise * (0.5 * field(t, i) + 0.5 * std::sqrt(3.0) * local.normal());
      }
    }
    if (abnormal) {
      const std::size_t start = local.below(spec.tau - spec.anomaly_len + 1);
      for (std::size_t t = start; t < start + spec.anomaly_len; ++t) {
        seq.frame_labels[t] = 1;
        for (std::size_t i = 0; i < spec.dim; ++i) seq.frames(t, i) += spec.anomaly_shift * anomaly_dir[i];
      }
    }
    out[idx] = std::move(seq);
  });
  return out;
}

std::pair<std::vector<FeatureSequence>, std::vector<FeatureSequence>> split_per_class(
    const std::vector<FeatureSequence>& data, std::size_t train_per_class) {
  std::map<int, std::size_t> seen;
  std::pair<std::vector<FeatureSequence>, std::vector<FeatureSequence>> out;
  for (const auto& s : data) {
    if (seen[s.label]++ < train_per_class) {
      out.first.push_back(s);
    } else {
      out.second.push_back(s);
    }
  }
  return out;
}

std::size_t count_classes(const std::vector<FeatureSequence>& data) {
  int top = -1;
  for (const auto& s : data) top = std::max(top, s.label);
  return static_cast<std::size_t>(top + 1);
}

// ---------------------------------------------------------------------------
// Episodes
// ---------------------------------------------------------------------------

void validate_episode(const Episode& episode) {
  if (episode.queries.empty()) throw ArgumentError("episode: no queries");
  if (episode.supports.size() != episode.queries.size()) {
    throw ArgumentError("episode: support-set count differs from query count");
  }
  std::set<std::string> query_ids;
  for (const auto& q : episode.queries) query_ids.insert(q.id);
  for (std::size_t i = 0; i < episode.queries.size(); ++i) {
    const auto& q = episode.queries[i];
    if (episode.supports[i].empty()) {
      throw ArgumentError("episode: query '" + q.id + "' has an empty support set");
    }
    for (const auto& s : episode.supports[i]) {
      if (query_ids.count(s.id)) {
        throw ArgumentError("episode: '" + s.id + "' is both a query and a support");
      }
      if (s.label != q.label) {
        throw ArgumentError("episode: support '" + s.id + "' label differs from query '" + q.id + "'");
      }
    }
  }
}

Episode sample_episode(const std::vector<FeatureSequence>& dataset, const EpisodeOptions& options,
                       Rng& rng) {
  if (options.batch < 1) throw ArgumentError("sample_episode: batch must be >= 1");
  if (options.n_support < 1) throw ArgumentError("sample_episode: n_support must be >= 1");

  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < dataset.size(); ++i) members[dataset[i].label].push_back(i);
  if (members.empty()) throw ArgumentError("sample_episode: empty dataset");
  for (const auto& [label, idx] : members) {
    if (idx.size() < options.n_support + 1) {
      throw ArgumentError("sample_episode: class " + std::to_string(label) + " has " +
                          std::to_string(idx.size()) + " sequences, needs at least " +
                          std::to_string(options.n_support + 1));
    }
  }

  // Remaining non-query members per class; a class stays eligible while it
  // can give up one more query and still leave N supports.
  std::map<int, std::vector<std::size_t>> pool = members;
  std::vector<std::size_t> query_idx;
  for (std::size_t b = 0; b < options.batch; ++b) {
    std::vector<int> eligible;
    for (const auto& [label, idx] : pool) {
      if (idx.size() >= options.n_support + 1) eligible.push_back(label);
    }
    if (eligible.empty()) break;
    const int label = eligible[rng.below(eligible.size())];
    auto& idx = pool[label];
    const std::size_t pick = rng.below(idx.size());
    query_idx.push_back(idx[pick]);
    idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(pick));
  }

  auto draw_supports = [&](int label) {
    std::vector<std::size_t> candidates = pool[label];
    std::vector<std::size_t> chosen;
    for (std::size_t k = 0; k < options.n_support; ++k) {
      const std::size_t pick = rng.below(candidates.size());
      chosen.push_back(candidates[pick]);
      candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(pick));
    }
    return chosen;
  };

  Episode ep;
  std::map<int, std::vector<std::size_t>> class_support;
  for (std::size_t q : query_idx) {
    const int label = dataset[q].label;
    std::vector<std::size_t> chosen;
    if (options.share_class_support) {
      auto it = class_support.find(label);
      if (it == class_support.end()) it = class_support.emplace(label, draw_supports(label)).first;
      chosen = it->second;
    } else {
      chosen = draw_supports(label);
    }
    ep.queries.push_back(dataset[q]);
    std::vector<FeatureSequence> supports;
    for (std::size_t s : chosen) supports.push_back(dataset[s]);
    ep.supports.push_back(std::move(supports));
    ep.schedules.emplace_back();
  }
  return ep;
}

Episode sample_image_episode(const std::vector<LabeledImage>& images,
                             const ImageEpisodeOptions& options, const FrozenEncoder& encoder,
                             Rng& rng) {
  // Index-level sampling reuses the trajectory sampler on lightweight stubs.
  std::vector<FeatureSequence> stubs(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    stubs[i].id = std::to_string(i);
    stubs[i].label = images[i].label;
  }
  EpisodeOptions index_options = options.episode;
  if (options.support_source == SupportSource::SameImage) {
    // Supports come from the query image itself, so only the query draw matters.
    index_options.n_support = 1;
  }
  const Episode picks = sample_episode(stubs, index_options, rng);

  Episode ep;
  const std::size_t side = images.empty() ? 0 : images.front().image.width;
  for (std::size_t q = 0; q < picks.queries.size(); ++q) {
    const auto& query_img = images[std::stoul(picks.queries[q].id)];
    const auto schedule = schedule_sample(options.tau, options.kinds, rng, side);
    ep.queries.push_back(
        make_image_sequence(query_img.image, schedule, encoder, query_img.label, query_img.id));

    std::vector<FeatureSequence> supports;
    if (options.support_source == SupportSource::SameClass) {
      for (const auto& stub : picks.supports[q]) {
        const auto& img = images[std::stoul(stub.id)];
        supports.push_back(make_image_sequence(img.image, schedule, encoder, img.label, img.id));
      }
    } else {
      for (std::size_t k = 0; k < options.episode.n_support; ++k) {
        RasterImage noisy = query_img.image;
        for (double& p : noisy.pixels) {
          p = std::clamp(p + options.same_image_noise * rng.normal(), 0.0, 1.0);
        }
        supports.push_back(make_image_sequence(noisy, schedule, encoder, query_img.label,
                                               query_img.id + "/support-" + std::to_string(k)));
      }
    }
    ep.supports.push_back(std::move(supports));
    ep.schedules.emplace_back(schedule);
  }
  return ep;
}

}  // namespace seqtraj
