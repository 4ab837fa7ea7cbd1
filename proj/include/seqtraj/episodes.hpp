#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "seqtraj/model.hpp"
#include "seqtraj/numerics.hpp"

namespace seqtraj {

// ---------------------------------------------------------------------------
// Augmentation schedules
// ---------------------------------------------------------------------------

enum class AugmentKind {
  RotationDeg,
  TranslateXPx,
  TranslateYPx,
  ZoomFactor,
  ShearDeg,
  Brightness,
  BlurSigma,
  CutoutX,  // cutout centre as a fraction of the width, [0, 1]
  CutoutY,  // cutout centre as a fraction of the height, [0, 1]
};

std::string_view kind_name(AugmentKind kind);
AugmentKind parse_kind(std::string_view name);  // throws ArgumentError
std::vector<AugmentKind> all_kinds();

// Sampling range for a kind. Translations scale with the image side (±25%).
struct KindRange {
  double lo;
  double hi;
};
KindRange kind_range(AugmentKind kind, std::size_t image_side);
// Value that leaves the image untouched (cutout has none; its tracks are
// simply absent from an identity schedule).
double neutral_value(AugmentKind kind);

struct AugmentTrack {
  AugmentKind kind;
  double start;
  double end;
};

// Parameters interpolated linearly between sampled endpoints:
//   p_t = p_start + (t − 1)/(τ − 1) · (p_end − p_start),  t = 1..τ.
struct AugmentationSchedule {
  std::size_t tau = 2;
  std::vector<AugmentTrack> tracks;

  // Value of `kind` at 1-based time t; nullopt when the schedule lacks it.
  std::optional<double> value(AugmentKind kind, std::size_t t) const;
  double value_or_neutral(AugmentKind kind, std::size_t t) const;
};

AugmentationSchedule schedule_sample(std::size_t tau, const std::vector<AugmentKind>& kinds,
                                     Rng& rng, std::size_t image_side = 32);
// All given kinds held at their neutral values.
AugmentationSchedule identity_schedule(std::size_t tau, const std::vector<AugmentKind>& kinds);

nlohmann::ordered_json schedule_to_json(const AugmentationSchedule& s);

// ---------------------------------------------------------------------------
// Images, augmentation and the frozen stand-in encoder
// ---------------------------------------------------------------------------

// Single-channel image, pixels in [0, 1], row-major.
struct RasterImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> pixels;

  RasterImage() = default;
  RasterImage(std::size_t h, std::size_t w, double fill = 0.0)
      : height(h), width(w), pixels(h * w, fill) {}

  double& at(std::size_t y, std::size_t x) { return pixels[y * width + x]; }
  double at(std::size_t y, std::size_t x) const { return pixels[y * width + x]; }

  friend bool operator==(const RasterImage&, const RasterImage&) = default;
};

// Frame t (1-based) of the schedule applied to `img`, in the fixed order
// affine (rotation, shear, zoom, translation; bilinear, zero padding) →
// brightness (clamped to [0, 1]) → Gaussian blur → square cutout.
RasterImage apply_augmentation(const RasterImage& img, const AugmentationSchedule& schedule,
                               std::size_t t);

// Individual stages, exposed for tests.
RasterImage affine_warp(const RasterImage& img, double rotation_deg, double shear_deg,
                        double zoom, double translate_x, double translate_y);
RasterImage gaussian_blur(const RasterImage& img, double sigma);
void apply_cutout(RasterImage& img, double centre_x, double centre_y);

// z = tanh(P·vec(pixels)), P a fixed d×(H·W) matrix with i.i.d. N(0, 1/(H·W))
// entries generated from the seed.
class FrozenEncoder {
 public:
  FrozenEncoder(std::uint64_t seed, std::size_t dim, std::size_t height, std::size_t width);

  std::vector<double> encode(const RasterImage& img) const;
  std::size_t dim() const { return projection_.rows(); }
  std::uint64_t seed() const { return seed_; }
  const Matrix& projection() const { return projection_; }

 private:
  std::uint64_t seed_;
  std::size_t height_;
  std::size_t width_;
  Matrix projection_;
};

std::vector<double> encode(const RasterImage& img, std::uint64_t encoder_seed, std::size_t dim);

FeatureSequence make_image_sequence(const RasterImage& img, const AugmentationSchedule& schedule,
                                    const FrozenEncoder& encoder, int label = -1,
                                    std::string id = {});

struct LabeledImage {
  std::string id;
  int label = 0;
  RasterImage image;
};

// Class-conditional blob patterns: each class owns a fixed layout of bright
// Gaussian blobs; instances jitter blob positions and add pixel noise.
std::vector<LabeledImage> make_class_images(std::size_t num_classes, std::size_t per_class,
                                            std::size_t side, double jitter, Rng& rng);

// ---------------------------------------------------------------------------
// Synthetic trajectory datasets
// ---------------------------------------------------------------------------

struct TrajectorySpec {
  std::size_t num_classes = 4;
  std::size_t per_class = 40;
  std::size_t tau = 12;
  std::size_t dim = 16;
  // Expected L2 norm of the per-sample smooth perturbation of a frame.
  double shape_noise = 0.1;
  // Classes visit one shared point set in class-specific temporal orders.
  bool marginal_overlap = false;
  // Distance between class offsets when marginal_overlap is off.
  double separation = 2.0;
};

// Sequences ordered class-major: class 0 samples first, then class 1, ...
// Ids are "c<class>-<index>". Every frame carries the class as its label.
std::vector<FeatureSequence> make_synthetic_trajectory_dataset(const TrajectorySpec& spec,
                                                               Rng& rng);

// Noise-free class prototype trajectories (τ×d each), for oracles.
std::vector<Matrix> trajectory_prototypes(const TrajectorySpec& spec, Rng& rng);

struct AnomalySpec {
  std::size_t num_normals = 40;
  std::size_t num_abnormal = 40;
  std::size_t tau = 32;
  std::size_t dim = 16;
  std::size_t anomaly_len = 8;
  double anomaly_shift = 1.0;
  // Per-coordinate standard deviation of the frame noise.
  double noise = 0.1;
};

// Label 0 = normal, 1 = abnormal. Every sequence carries frame labels;
// abnormal sequences mark one contiguous window of anomaly_len frames,
// displaced by anomaly_shift along a fixed direction outside the normal
// trajectory's span. Each sequence starts the normal cycle at a random phase.
std::vector<FeatureSequence> make_anomaly_dataset(const AnomalySpec& spec, Rng& rng);

// First `train_per_class` sequences of every class go to the first half.
std::pair<std::vector<FeatureSequence>, std::vector<FeatureSequence>> split_per_class(
    const std::vector<FeatureSequence>& data, std::size_t train_per_class);

std::size_t count_classes(const std::vector<FeatureSequence>& data);

// ---------------------------------------------------------------------------
// Episodes
// ---------------------------------------------------------------------------

struct Episode {
  std::vector<FeatureSequence> queries;
  std::vector<std::vector<FeatureSequence>> supports;  // one support set per query
  // Per query; set when the query and its supports share one generated schedule.
  std::vector<std::optional<AugmentationSchedule>> schedules;
};

// Throws ArgumentError when roles overlap, labels disagree, a support set is
// empty or a shared schedule differs between a query and its supports.
void validate_episode(const Episode& episode);

struct EpisodeOptions {
  std::size_t batch = 16;
  std::size_t n_support = 3;
  // All queries of one class draw the same support set.
  bool share_class_support = true;
};

// Queries: a class is drawn uniformly among classes that can still supply a
// query plus N supports, then a query uniformly from that class. Supports are
// drawn without replacement from the class members that are not queries.
Episode sample_episode(const std::vector<FeatureSequence>& dataset, const EpisodeOptions& options,
                       Rng& rng);

enum class SupportSource { SameClass, SameImage };

struct ImageEpisodeOptions {
  EpisodeOptions episode;
  std::size_t tau = 8;
  std::vector<AugmentKind> kinds = all_kinds();
  SupportSource support_source = SupportSource::SameClass;
  // Pixel noise that distinguishes same-image supports from their query.
  double same_image_noise = 0.02;
};

// On-the-fly episode: every query image gets a fresh schedule, and its
// supports are rendered with exactly that schedule.
Episode sample_image_episode(const std::vector<LabeledImage>& images,
                             const ImageEpisodeOptions& options, const FrozenEncoder& encoder,
                             Rng& rng);

}  // namespace seqtraj
