#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "helpers.hpp"
#include "seqtraj/episodes.hpp"

using namespace seqtraj;
using testutil::pick;

namespace {

RasterImage random_image(Rng& rng, std::size_t h, std::size_t w) {
  RasterImage img(h, w);
  for (double& p : img.pixels) p = rng.uniform();
  return img;
}

double frame_step(const FeatureSequence& s, std::size_t t) {
  double acc = 0;
  for (std::size_t j = 0; j < s.frames.cols(); ++j) {
    const double d = s.frames(t + 1, j) - s.frames(t, j);
    acc += d * d;
  }
  return std::sqrt(acc);
}

}  // namespace

TEST_CASE("augmentation kinds") {
  for (AugmentKind k : all_kinds()) CHECK(parse_kind(kind_name(k)) == k);
  CHECK(all_kinds().size() == 9);
  CHECK_THROWS_AS(parse_kind("sparkle"), ArgumentError);
  CHECK(kind_range(AugmentKind::TranslateXPx, 32).hi == doctest::Approx(8.0));
  CHECK(kind_range(AugmentKind::TranslateXPx, 32).lo == doctest::Approx(-8.0));
}

TEST_CASE("schedules interpolate linearly") {
  Rng rng(61);
  const auto s = schedule_sample(9, all_kinds(), rng);
  CHECK(s.tracks.size() == 9);
  for (const auto& track : s.tracks) {
    const auto r = kind_range(track.kind, 32);
    CHECK(track.start >= r.lo);
    CHECK(track.start <= r.hi);
    CHECK(*s.value(track.kind, 1) == track.start);
    CHECK(*s.value(track.kind, 9) == doctest::Approx(track.end));
    for (std::size_t t = 2; t < 9; ++t) {
      const double expected = track.start + (t - 1) / 8.0 * (track.end - track.start);
      CHECK(*s.value(track.kind, t) == doctest::Approx(expected).epsilon(1e-12));
      // Equal increments.
      const double step = *s.value(track.kind, t) - *s.value(track.kind, t - 1);
      CHECK(step == doctest::Approx((track.end - track.start) / 8.0).epsilon(1e-9));
    }
  }
  CHECK_THROWS_AS(s.value(AugmentKind::RotationDeg, 0), ArgumentError);
  CHECK_THROWS_AS(s.value(AugmentKind::RotationDeg, 10), ArgumentError);
  CHECK_THROWS_AS(schedule_sample(1, all_kinds(), rng), ArgumentError);
  CHECK_THROWS_AS(schedule_sample(4, {AugmentKind::ZoomFactor, AugmentKind::ZoomFactor}, rng),
                  ArgumentError);
  const auto partial = schedule_sample(4, {AugmentKind::ZoomFactor}, rng);
  CHECK_FALSE(partial.value(AugmentKind::RotationDeg, 2).has_value());
  CHECK(partial.value_or_neutral(AugmentKind::Brightness, 2) == 1.0);

  const auto j = schedule_to_json(partial);
  CHECK(j["tau"] == 4);
  CHECK(j["tracks"][0]["kind"] == std::string(kind_name(AugmentKind::ZoomFactor)));
}

TEST_CASE("identity schedule leaves images untouched") {
  Rng rng(62);
  const RasterImage img = random_image(rng, 12, 12);
  std::vector<AugmentKind> kinds;
  for (AugmentKind k : all_kinds()) {
    if (k != AugmentKind::CutoutX && k != AugmentKind::CutoutY) kinds.push_back(k);
  }
  const auto id = identity_schedule(5, kinds);
  for (std::size_t t = 1; t <= 5; ++t) CHECK(apply_augmentation(img, id, t) == img);
  CHECK(apply_augmentation(img, AugmentationSchedule{3, {}}, 2) == img);
}

TEST_CASE("quarter-turn rotation permutes pixels") {
  Rng rng(63);
  for (std::size_t n : {5, 8}) {
    const RasterImage img = random_image(rng, n, n);
    const RasterImage rot = affine_warp(img, 90.0, 0.0, 1.0, 0.0, 0.0);
    // Output (y, x) samples the source at centre + R^{-1}(x - c, y - c).
    double ccw = 0, cw = 0;
    for (std::size_t y = 0; y < n; ++y) {
      for (std::size_t x = 0; x < n; ++x) {
        ccw = std::max(ccw, std::abs(rot.at(y, x) - img.at(n - 1 - x, y)));
        cw = std::max(cw, std::abs(rot.at(y, x) - img.at(x, n - 1 - y)));
      }
    }
    CHECK(std::min(ccw, cw) < 1e-9);
  }
}

TEST_CASE("translation by whole pixels shifts with zero padding") {
  Rng rng(64);
  const RasterImage img = random_image(rng, 6, 7);
  const RasterImage shifted = affine_warp(img, 0.0, 0.0, 1.0, 2.0, 1.0);
  for (std::size_t y = 0; y < 6; ++y) {
    for (std::size_t x = 0; x < 7; ++x) {
      const double expected = (x >= 2 && y >= 1) ? img.at(y - 1, x - 2) : 0.0;
      CHECK(shifted.at(y, x) == doctest::Approx(expected));
    }
  }
  CHECK_THROWS_AS(affine_warp(img, 0, 0, 0.0, 0, 0), ArgumentError);
}

TEST_CASE("brightness, blur and cutout") {
  Rng rng(65);
  const RasterImage img = random_image(rng, 10, 10);
  AugmentationSchedule dark{2, {{AugmentKind::Brightness, 0.0, 0.0}}};
  for (double p : apply_augmentation(img, dark, 1).pixels) CHECK(p == 0.0);
  AugmentationSchedule bright{2, {{AugmentKind::Brightness, 3.0, 3.0}}};
  for (double p : apply_augmentation(img, bright, 2).pixels) CHECK(p <= 1.0);

  const RasterImage flat(9, 9, 0.4);
  for (double p : gaussian_blur(flat, 1.5).pixels) CHECK(p == doctest::Approx(0.4));
  CHECK(gaussian_blur(img, 0.0) == img);
  const RasterImage blurred = gaussian_blur(img, 1.0);
  double mean_in = 0, mean_out = 0, var_in = 0, var_out = 0;
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    mean_in += img.pixels[i] / 100;
    mean_out += blurred.pixels[i] / 100;
  }
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    var_in += std::pow(img.pixels[i] - mean_in, 2);
    var_out += std::pow(blurred.pixels[i] - mean_out, 2);
  }
  CHECK(var_out < var_in);

  RasterImage ones(10, 10, 1.0);
  apply_cutout(ones, 0.5, 0.5);
  std::size_t zeros = 0;
  for (double p : ones.pixels) zeros += p == 0.0;
  CHECK(zeros == 4);  // 0.2 * 10 = 2 pixel square
  RasterImage corner(10, 10, 1.0);
  apply_cutout(corner, 0.0, 0.0);
  CHECK(corner.at(0, 0) == 0.0);
}

TEST_CASE("frozen encoder") {
  Rng rng(66);
  const FrozenEncoder enc(7, 16, 8, 8);
  const auto zero = enc.encode(RasterImage(8, 8, 0.0));
  for (double z : zero) CHECK(z == 0.0);
  const RasterImage a = random_image(rng, 8, 8), b = random_image(rng, 8, 8);
  const auto za = enc.encode(a), zb = enc.encode(b);
  for (double z : za) CHECK(std::abs(z) < 1.0);
  CHECK(za == encode(a, 7, 16));
  CHECK(za != encode(a, 8, 16));
  // tanh is 1-Lipschitz, so ‖z(a) − z(b)‖ ≤ ‖P‖₂·‖a − b‖.
  std::vector<double> dz(16), dx(64);
  for (std::size_t i = 0; i < 16; ++i) dz[i] = za[i] - zb[i];
  for (std::size_t i = 0; i < 64; ++i) dx[i] = a.pixels[i] - b.pixels[i];
  CHECK(l2_norm(dz) <= spectral_norm(enc.projection()) * l2_norm(dx) + 1e-12);
  CHECK_THROWS_AS(enc.encode(RasterImage(4, 4)), ArgumentError);
  CHECK_THROWS_AS(FrozenEncoder(1, 0, 8, 8), ArgumentError);
}

TEST_CASE("longer schedules give smaller frame steps") {
  Rng rng(67);
  const RasterImage img = make_class_images(1, 1, 16, 0.0, rng).front().image;
  const FrozenEncoder enc(3, 16, 16, 16);
  auto max_step = [&](std::size_t tau) {
    const AugmentationSchedule s{tau, {{AugmentKind::RotationDeg, -20.0, 20.0}}};
    const auto seq = make_image_sequence(img, s, enc, 0, "x");
    double m = 0;
    for (std::size_t t = 0; t + 1 < tau; ++t) m = std::max(m, frame_step(seq, t));
    return m;
  };
  const double coarse = max_step(5), fine = max_step(41);
  CHECK(fine < coarse);
  CHECK(fine < 0.5 * coarse);
}

TEST_CASE("image sequences") {
  Rng rng(68);
  const auto images = make_class_images(3, 2, 12, 0.5, rng);
  CHECK(images.size() == 6);
  CHECK(images[0].label == 0);
  CHECK(images[5].label == 2);
  const FrozenEncoder enc(3, 6, 12, 12);
  const auto s = schedule_sample(4, all_kinds(), rng, 12);
  const auto seq = make_image_sequence(images[1].image, s, enc, 0, "img");
  CHECK(seq.frames.rows() == 4);
  CHECK(seq.frames.cols() == 6);
  CHECK(seq.frame_labels == std::vector<int>(4, 0));
  CHECK(make_image_sequence(images[1].image, s, enc).frame_labels.empty());
}

TEST_CASE("synthetic trajectory dataset") {
  TrajectorySpec spec;
  spec.num_classes = 3;
  spec.per_class = 5;
  spec.tau = 7;
  spec.dim = 4;
  Rng a(69), b(69);
  const auto data = make_synthetic_trajectory_dataset(spec, a);
  CHECK(data.size() == 15);
  CHECK(data[0].id == "c0-0");
  CHECK(data[14].id == "c2-4");
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(data[i].label == static_cast<int>(i / 5));
    CHECK(data[i].frames.rows() == 7);
    CHECK(data[i].frames.cols() == 4);
    CHECK(data[i].frame_labels == std::vector<int>(7, data[i].label));
  }
  const auto again = make_synthetic_trajectory_dataset(spec, b);
  CHECK(again[3].frames == data[3].frames);
  CHECK(count_classes(data) == 3);

  spec.shape_noise = 0.0;
  Rng c(70), d(70);
  const auto clean = make_synthetic_trajectory_dataset(spec, c);
  const auto protos = trajectory_prototypes(spec, d);
  CHECK(protos.size() == 3);
  CHECK(testutil::max_abs_diff(clean[6].frames, protos[1]) < 1e-12);

  TrajectorySpec bad = spec;
  bad.num_classes = 1;
  CHECK_THROWS_AS(make_synthetic_trajectory_dataset(bad, c), ArgumentError);
  bad = spec;
  bad.tau = 1;
  CHECK_THROWS_AS(make_synthetic_trajectory_dataset(bad, c), ArgumentError);
}

TEST_CASE("marginal overlap shares one point set") {
  TrajectorySpec spec;
  spec.num_classes = 3;
  spec.tau = 6;
  spec.dim = 5;
  spec.marginal_overlap = true;
  Rng rng(71);
  const auto protos = trajectory_prototypes(spec, rng);
  // Every row of one prototype has a matching row in each other prototype.
  auto same_points = [](const Matrix& a, const Matrix& b) {
    for (std::size_t t = 0; t < a.rows(); ++t) {
      bool found = false;
      for (std::size_t u = 0; u < b.rows() && !found; ++u) {
        double d = 0;
        for (std::size_t j = 0; j < a.cols(); ++j) d = std::max(d, std::abs(a(t, j) - b(u, j)));
        found = d < 1e-9;
      }
      if (!found) return false;
    }
    return true;
  };
  CHECK(same_points(protos[0], protos[1]));
  CHECK(same_points(protos[0], protos[2]));
  CHECK(same_points(protos[2], protos[1]));
  CHECK(protos[0] != protos[1]);
}

TEST_CASE("anomaly dataset") {
  AnomalySpec spec;
  spec.num_normals = 4;
  spec.num_abnormal = 6;
  spec.tau = 20;
  spec.dim = 5;
  spec.anomaly_len = 5;
  Rng rng(72);
  const auto data = make_anomaly_dataset(spec, rng);
  CHECK(data.size() == 10);
  std::size_t abnormal = 0;
  for (const auto& s : data) {
    REQUIRE(s.frame_labels.size() == 20);
    std::size_t ones = 0, first = 20, last = 0;
    for (std::size_t t = 0; t < 20; ++t) {
      if (s.frame_labels[t] == 1) {
        ++ones;
        first = std::min(first, t);
        last = t;
      }
    }
    if (s.label == 1) {
      ++abnormal;
      CHECK(ones == 5);
      CHECK(last - first + 1 == 5);
    } else {
      CHECK(ones == 0);
    }
  }
  CHECK(abnormal == 6);
  spec.anomaly_len = 20;
  CHECK_THROWS_AS(make_anomaly_dataset(spec, rng), ArgumentError);
}

TEST_CASE("per-class split") {
  TrajectorySpec spec;
  spec.num_classes = 2;
  spec.per_class = 5;
  spec.tau = 3;
  spec.dim = 2;
  Rng rng(73);
  const auto data = make_synthetic_trajectory_dataset(spec, rng);
  const auto [train, test] = split_per_class(data, 3);
  CHECK(train.size() == 6);
  CHECK(test.size() == 4);
  CHECK(train[0].id == "c0-0");
  CHECK(test[0].id == "c0-3");
}

TEST_CASE("episode sampling") {
  TrajectorySpec spec;
  spec.num_classes = 4;
  spec.per_class = 30;
  spec.tau = 3;
  spec.dim = 2;
  Rng data_rng(74);
  const auto data = make_synthetic_trajectory_dataset(spec, data_rng);

  SUBCASE("roles and labels") {
    Rng rng(75);
    for (int k = 0; k < 50; ++k) {
      const Episode ep = sample_episode(data, {16, 3, k % 2 == 0}, rng);
      CHECK_NOTHROW(validate_episode(ep));
      CHECK(ep.queries.size() == 16);
      for (std::size_t i = 0; i < ep.queries.size(); ++i) {
        CHECK(ep.supports[i].size() == 3);
        std::set<std::string> ids;
        for (const auto& s : ep.supports[i]) ids.insert(s.id);
        CHECK(ids.size() == 3);
      }
    }
  }
  SUBCASE("shared supports within a class") {
    Rng rng(76);
    const Episode ep = sample_episode(data, {16, 3, true}, rng);
    std::map<int, std::vector<std::string>> seen;
    for (std::size_t i = 0; i < ep.queries.size(); ++i) {
      std::vector<std::string> ids;
      for (const auto& s : ep.supports[i]) ids.push_back(s.id);
      auto [it, fresh] = seen.emplace(ep.queries[i].label, ids);
      if (!fresh) CHECK(it->second == ids);
    }
  }
  SUBCASE("query classes are uniform") {
    Rng rng(77);
    std::vector<double> counts(4, 0);
    const int episodes = 500;
    for (int k = 0; k < episodes; ++k) {
      for (const auto& q : sample_episode(data, {4, 2, true}, rng).queries) ++counts[q.label];
    }
    const double expected = episodes * 4 / 4.0;
    double chi2 = 0;
    for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
    CHECK(chi2 < 16.27);  // 3 dof, p = 0.001
  }
  SUBCASE("single support with two members is forced") {
    std::vector<FeatureSequence> tiny(data.begin(), data.begin() + 2);
    Rng rng(78);
    const Episode ep = sample_episode(tiny, {1, 1, true}, rng);
    REQUIRE(ep.queries.size() == 1);
    CHECK(ep.supports[0][0].id != ep.queries[0].id);
  }
  SUBCASE("a class too small for N supports is named") {
    std::vector<FeatureSequence> small(data.begin(), data.begin() + 3);
    Rng rng(79);
    try {
      sample_episode(small, {4, 3, true}, rng);
      FAIL("expected an error");
    } catch (const ArgumentError& e) {
      CHECK(std::string(e.what()).find("class 0") != std::string::npos);
    }
    CHECK_THROWS_AS(sample_episode(data, {0, 3, true}, rng), ArgumentError);
    CHECK_THROWS_AS(sample_episode(data, {4, 0, true}, rng), ArgumentError);
  }
}

TEST_CASE("episode validation") {
  FeatureSequence a, b, c;
  a.id = "a";
  a.label = 0;
  b.id = "b";
  b.label = 0;
  c.id = "c";
  c.label = 1;
  Episode ep;
  ep.queries = {a};
  ep.supports = {{b}};
  CHECK_NOTHROW(validate_episode(ep));
  ep.supports = {{c}};
  CHECK_THROWS_AS(validate_episode(ep), ArgumentError);
  ep.supports = {{a}};
  CHECK_THROWS_AS(validate_episode(ep), ArgumentError);
  ep.supports = {{}};
  CHECK_THROWS_AS(validate_episode(ep), ArgumentError);
  ep.supports = {};
  CHECK_THROWS_AS(validate_episode(ep), ArgumentError);
}

TEST_CASE("image episodes share the query schedule") {
  Rng rng(80);
  const auto images = make_class_images(2, 6, 12, 0.5, rng);
  const FrozenEncoder enc(5, 8, 12, 12);
  ImageEpisodeOptions opt;
  opt.episode = {4, 2, true};
  opt.tau = 4;
  const Episode ep = sample_image_episode(images, opt, enc, rng);
  CHECK_NOTHROW(validate_episode(ep));
  REQUIRE(ep.schedules.size() == ep.queries.size());
  for (std::size_t i = 0; i < ep.queries.size(); ++i) {
    REQUIRE(ep.schedules[i].has_value());
    // Re-rendering a support image with the recorded schedule reproduces it.
    for (const auto& s : ep.supports[i]) {
      const auto& img = *std::find_if(images.begin(), images.end(),
                                      [&](const LabeledImage& li) { return li.id == s.id; });
      CHECK(make_image_sequence(img.image, *ep.schedules[i], enc, img.label, img.id).frames ==
            s.frames);
    }
  }

  opt.support_source = SupportSource::SameImage;
  const Episode same = sample_image_episode(images, opt, enc, rng);
  CHECK_NOTHROW(validate_episode(same));
  for (std::size_t i = 0; i < same.queries.size(); ++i) {
    CHECK(same.supports[i].size() == 2);
    for (const auto& s : same.supports[i]) {
      CHECK(s.id.rfind(same.queries[i].id + "/support-", 0) == 0);
      CHECK(testutil::max_abs_diff(s.frames, same.queries[i].frames) < 0.5);
    }
  }
}
