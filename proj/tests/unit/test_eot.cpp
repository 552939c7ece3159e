#include <doctest.h>

#include <nlohmann/json.hpp>

#include "adcp/compositor.hpp"
#include "adcp/eot.hpp"
#include "test_support.hpp"

using namespace adcp;
using adcp::testing::random_image;

namespace {

// Objectness follows the mean intensity, so every variant gets its own loss.
std::vector<Detection> brightness_detector(const Image& img) {
  double sum = 0.0;
  for (auto v : img.data()) sum += v;
  const double mean = sum / (255.0 * static_cast<double>(img.data().size()));
  return {{Box{0, 0, double(img.width()), double(img.height())}, mean, 0}};
}

}  // namespace

TEST_CASE("identity transform returns the input") {
  const Image img = random_image(21, 13, 2);
  CHECK(apply_transform(img, Transform{}) == img);
  SeededRandom rng(4);
  const Transform t = sample_transform(EotConfig::identity(), rng);
  CHECK(t.is_identity());
  CHECK(apply_transform(img, t) == img);
}

TEST_CASE("sampled transforms stay inside their intervals") {
  EotConfig cfg;
  SeededRandom rng(9);
  for (int i = 0; i < 500; ++i) {
    const Transform t = sample_transform(cfg, rng);
    CHECK(t.rotation_deg >= -10.0);
    CHECK(t.rotation_deg <= 10.0);
    CHECK(t.scale >= 0.9);
    CHECK(t.scale <= 1.1);
    CHECK(t.brightness >= 0.8);
    CHECK(t.brightness <= 1.2);
    CHECK(t.noise_sigma >= 0.0);
    CHECK(t.noise_sigma <= 8.0);
    CHECK(std::abs(t.translate_x) <= 0.05);
    CHECK(std::abs(t.translate_y) <= 0.05);
  }
}

TEST_CASE("sampling is reproducible under a seed") {
  EotConfig cfg;
  SeededRandom a(77), b(77);
  const Image img = random_image(32, 24, 5);
  for (int i = 0; i < 10; ++i) {
    CHECK(apply_transform(img, sample_transform(cfg, a)) == apply_transform(img, sample_transform(cfg, b)));
  }
}

TEST_CASE("whole-pixel translation shifts content and fills with black") {
  const Image img = random_image(10, 6, 8);
  Transform t;
  t.translate_x = 0.1;
  const Image out = apply_transform(img, t);
  for (int y = 0; y < 6; ++y) {
    for (int c = 0; c < 3; ++c) {
      CHECK(out.at(0, y, c) == 0);
      for (int x = 1; x < 10; ++x) CHECK(out.at(x, y, c) == img.at(x - 1, y, c));
    }
  }
}

TEST_CASE("brightness scales and saturates") {
  const Image img(4, 4, 200);
  Transform t;
  t.brightness = 0.5;
  CHECK(apply_transform(img, t) == Image(4, 4, 100));
  t.brightness = 2.0;
  CHECK(apply_transform(img, t) == Image(4, 4, 255));
}

TEST_CASE("half-turn rotation about the center mirrors both axes") {
  const Image img = random_image(9, 7, 12);
  Transform t;
  t.rotation_deg = 180.0;
  const Image out = apply_transform(img, t);
  for (int y = 0; y < 7; ++y) {
    for (int x = 0; x < 9; ++x) CHECK(out.at(x, y, 1) == img.at(8 - x, 6 - y, 1));
  }
}

TEST_CASE("degenerate configuration reduces to a single call on the composite") {
  const Image img = random_image(40, 30, 3);
  const auto p = PatchParams::make(0.3, 0.6, Eigen::Vector3d(250, 10, 10), 0.4, 0.7);
  FunctionDetector oracle(brightness_detector);
  SeededRandom rng(1);
  const GroundTruth truth{0, std::nullopt};
  const EotEstimate est = expected_loss(img, p, oracle, truth, EotConfig::identity(), rng);
  const auto direct = brightness_detector(composite(img, p));
  CHECK(est.queries == 1);
  CHECK(est.mean_loss == direct.front().objectness);
  CHECK_FALSE(est.success);
}

TEST_CASE("query count is samples plus the identity variant") {
  const Image img = random_image(16, 16, 1);
  std::size_t calls = 0;
  FunctionDetector oracle([&](const Image&) {
    ++calls;
    return std::vector<Detection>{};
  });
  EotConfig cfg;
  cfg.n_samples = 5;
  SeededRandom rng(2);
  const auto est = expected_loss(img, oracle, GroundTruth{}, cfg, rng);
  CHECK(est.queries == 6);
  CHECK(calls == 6);
  CHECK(est.success);
  CHECK(est.mean_loss == 0.0);
  cfg.include_identity = false;
  CHECK(expected_loss(img, oracle, GroundTruth{}, cfg, rng).queries == 5);
}

TEST_CASE("success needs every variant fooled") {
  const Image img = random_image(16, 16, 1);
  int call = 0;
  FunctionDetector oracle([&](const Image&) {
    // Only the third call sees the target.
    if (++call == 3) return std::vector<Detection>{{Box{0, 0, 16, 16}, 0.9, 0}};
    return std::vector<Detection>{};
  });
  EotConfig cfg;
  cfg.n_samples = 4;
  SeededRandom rng(3);
  const auto est = expected_loss(img, oracle, GroundTruth{}, cfg, rng);
  CHECK_FALSE(est.success);
  CHECK(est.mean_loss == doctest::Approx(0.9 / 5.0));
}

TEST_CASE("oracle failures report the calls already made") {
  const Image img = random_image(16, 16, 1);
  int call = 0;
  FunctionDetector oracle([&](const Image&) -> std::vector<Detection> {
    if (++call == 3) throw OracleError("gone");
    return {};
  });
  EotConfig cfg;
  SeededRandom rng(3);
  try {
    expected_loss(img, oracle, GroundTruth{}, cfg, rng);
    FAIL("expected OracleError");
  } catch (const OracleError& e) {
    CHECK(e.queries == 2);
  }
}

TEST_CASE("configuration validation and json") {
  EotConfig cfg;
  cfg.scale = {1.2, 0.8};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = EotConfig{};
  cfg.n_samples = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

  EotConfig custom;
  custom.rotation_deg = {-5, 5};
  custom.n_samples = 3;
  custom.include_identity = false;
  CHECK(eot_from_json(to_json(custom)) == custom);

  const auto pinned = eot_from_json(nlohmann::json{{"rotation_deg", 0}, {"scale", 1}});
  CHECK(pinned.rotation_deg == Interval{0, 0});
  CHECK(pinned.scale == Interval{1, 1});
  CHECK_THROWS_AS(eot_from_json(nlohmann::json{{"n_samples", "many"}}), std::invalid_argument);
}
