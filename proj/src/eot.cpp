#include "adcp/eot.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Geometry>
#include <nlohmann/json.hpp>

#include "adcp/compositor.hpp"

namespace adcp {
namespace {

nlohmann::json interval_json(const Interval& i) { return nlohmann::json::array({i.lo, i.hi}); }

void read_interval(const nlohmann::json& j, const char* key, Interval& out) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if (v.is_number()) {
    out = {v.get<double>(), v.get<double>()};
    return;
  }
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    throw std::invalid_argument(std::string("eot: '") + key + "' must be [lo, hi] or a number");
  }
  out = {v[0].get<double>(), v[1].get<double>()};
}

// Bilinear sample of channel c at (x, y); taps outside the frame read as 0.
double sample_bilinear(const Image& img, double x, double y, int c) {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const int x0 = static_cast<int>(fx);
  const int y0 = static_cast<int>(fy);
  const double ax = x - fx;
  const double ay = y - fy;
  auto tap = [&](int xi, int yi) -> double {
    if (xi < 0 || yi < 0 || xi >= img.width() || yi >= img.height()) return 0.0;
    return img.at(xi, yi, c);
  };
  return (1.0 - ay) * ((1.0 - ax) * tap(x0, y0) + ax * tap(x0 + 1, y0)) +
         ay * ((1.0 - ax) * tap(x0, y0 + 1) + ax * tap(x0 + 1, y0 + 1));
}

}  // namespace

EotConfig EotConfig::identity() {
  EotConfig cfg;
  cfg.rotation_deg = {0.0, 0.0};
  cfg.scale = {1.0, 1.0};
  cfg.brightness = {1.0, 1.0};
  cfg.noise_sigma = {0.0, 0.0};
  cfg.translate_frac = {0.0, 0.0};
  cfg.n_samples = 1;
  cfg.include_identity = false;
  return cfg;
}

void EotConfig::validate() const {
  auto check = [](const Interval& i, const char* name) {
    if (!std::isfinite(i.lo) || !std::isfinite(i.hi) || !i.valid()) {
      throw std::invalid_argument(std::string("eot: interval '") + name + "' is not well-ordered");
    }
  };
  check(rotation_deg, "rotation_deg");
  check(scale, "scale");
  check(brightness, "brightness");
  check(noise_sigma, "noise_sigma");
  check(translate_frac, "translate_frac");
  if (scale.lo <= 0.0) throw std::invalid_argument("eot: scale must be positive");
  if (brightness.lo < 0.0) throw std::invalid_argument("eot: brightness must be non-negative");
  if (noise_sigma.lo < 0.0) throw std::invalid_argument("eot: noise_sigma must be non-negative");
  if (n_samples < 1) throw std::invalid_argument("eot: n_samples must be at least 1");
}

nlohmann::json to_json(const EotConfig& cfg) {
  return {{"rotation_deg", interval_json(cfg.rotation_deg)},
          {"scale", interval_json(cfg.scale)},
          {"brightness", interval_json(cfg.brightness)},
          {"noise_sigma", interval_json(cfg.noise_sigma)},
          {"translate_frac", interval_json(cfg.translate_frac)},
          {"n_samples", cfg.n_samples},
          {"include_identity", cfg.include_identity}};
}

EotConfig eot_from_json(const nlohmann::json& j, const EotConfig& base) {
  if (!j.is_object()) throw std::invalid_argument("eot: expected a table");
  EotConfig cfg = base;
  read_interval(j, "rotation_deg", cfg.rotation_deg);
  read_interval(j, "scale", cfg.scale);
  read_interval(j, "brightness", cfg.brightness);
  read_interval(j, "noise_sigma", cfg.noise_sigma);
  read_interval(j, "translate_frac", cfg.translate_frac);
  if (j.contains("n_samples")) {
    if (!j.at("n_samples").is_number_integer()) throw std::invalid_argument("eot: 'n_samples' must be an integer");
    cfg.n_samples = j.at("n_samples").get<int>();
  }
  if (j.contains("include_identity")) {
    if (!j.at("include_identity").is_boolean()) throw std::invalid_argument("eot: 'include_identity' must be a boolean");
    cfg.include_identity = j.at("include_identity").get<bool>();
  }
  cfg.validate();
  return cfg;
}

Transform sample_transform(const EotConfig& cfg, SeededRandom& rng) {
  Transform t;
  t.rotation_deg = rng.uniform(cfg.rotation_deg.lo, cfg.rotation_deg.hi);
  t.scale = rng.uniform(cfg.scale.lo, cfg.scale.hi);
  t.brightness = rng.uniform(cfg.brightness.lo, cfg.brightness.hi);
  t.noise_sigma = rng.uniform(cfg.noise_sigma.lo, cfg.noise_sigma.hi);
  t.translate_x = rng.uniform(cfg.translate_frac.lo, cfg.translate_frac.hi);
  t.translate_y = rng.uniform(cfg.translate_frac.lo, cfg.translate_frac.hi);
  t.noise_seed = rng.next();
  return t;
}

Image apply_transform(const Image& image, const Transform& t) {
  if (t.is_identity()) return image;

  const int w = image.width();
  const int h = image.height();
  Eigen::ArrayX3d values = image.pixels().cast<double>();

  if (!t.is_geometric_identity()) {
    const Eigen::Vector2d center(0.5 * (w - 1), 0.5 * (h - 1));
    const Eigen::Vector2d shift(t.translate_x * w, t.translate_y * h);
    const double angle = t.rotation_deg * std::numbers::pi / 180.0;
    const Eigen::Affine2d forward = Eigen::Translation2d(center + shift) *
                                    Eigen::Rotation2Dd(angle) * Eigen::Scaling(t.scale) *
                                    Eigen::Translation2d(-center);
    const Eigen::Affine2d inverse = forward.inverse();
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const Eigen::Vector2d src = inverse * Eigen::Vector2d(x, y);
        const Eigen::Index row = static_cast<Eigen::Index>(y) * w + x;
        for (int c = 0; c < 3; ++c) values(row, c) = sample_bilinear(image, src.x(), src.y(), c);
      }
    }
  }

  if (t.brightness != 1.0) values *= t.brightness;

  if (t.noise_sigma > 0.0) {
    SeededRandom noise(t.noise_seed);
    for (Eigen::Index i = 0; i < values.size(); ++i) {
      values.data()[i] += t.noise_sigma * noise.normal();
    }
  }

  Image out = image;
  out.pixels() = values.round().cwiseMax(0.0).cwiseMin(255.0).cast<std::uint8_t>();
  return out;
}

EotEstimate expected_loss(const Image& image, const PatchParams& params, DetectorOracle& oracle,
                          const GroundTruth& truth, const EotConfig& cfg, SeededRandom& rng) {
  return expected_loss(composite(image, params), oracle, truth, cfg, rng);
}

EotEstimate expected_loss(const Image& adversarial, DetectorOracle& oracle,
                          const GroundTruth& truth, const EotConfig& cfg, SeededRandom& rng) {
  cfg.validate();
  EotEstimate est;
  est.success = true;
  double total = 0.0;
  auto evaluate = [&](const Image& variant) {
    std::vector<Detection> detections;
    try {
      detections = oracle.detect(variant);
    } catch (OracleError& e) {
      e.queries = est.queries;
      throw;
    }
    ++est.queries;
    const LossResult r = adversarial_loss(detections, truth);
    total += r.loss;
    est.success = est.success && r.fooled;
  };

  if (cfg.include_identity) evaluate(adversarial);
  for (int i = 0; i < cfg.n_samples; ++i) {
    evaluate(apply_transform(adversarial, sample_transform(cfg, rng)));
  }
  est.mean_loss = total / static_cast<double>(est.queries);
  return est;
}

}  // namespace adcp
