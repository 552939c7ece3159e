#pragma once

#include <cstddef>
#include <cstdint>

#include <nlohmann/json_fwd.hpp>

#include "adcp/image.hpp"
#include "adcp/oracle.hpp"
#include "adcp/patch_model.hpp"
#include "adcp/random.hpp"

namespace adcp {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool valid() const { return lo <= hi; }
  bool operator==(const Interval&) const = default;
};

/// Distribution of image transformations used to make the patch robust.
///
/// Every component is drawn uniformly from its interval. "Variance" in the
/// usual transformation list is realized as isotropic scale.
struct EotConfig {
  Interval rotation_deg{-10.0, 10.0};
  Interval scale{0.9, 1.1};
  Interval brightness{0.8, 1.2};
  Interval noise_sigma{0.0, 8.0};  // 8-bit channel units
  Interval translate_frac{-0.05, 0.05};
  int n_samples = 8;
  bool include_identity = true;

  /// All intervals pinned at the identity; one query per evaluation.
  static EotConfig identity();

  void validate() const;

  std::size_t queries_per_evaluation() const {
    return static_cast<std::size_t>(n_samples) + (include_identity ? 1 : 0);
  }

  bool operator==(const EotConfig&) const = default;
};

nlohmann::json to_json(const EotConfig& cfg);
EotConfig eot_from_json(const nlohmann::json& j, const EotConfig& base = {});

struct Transform {
  double rotation_deg = 0.0;
  double scale = 1.0;
  double brightness = 1.0;
  double noise_sigma = 0.0;
  std::uint64_t noise_seed = 0;
  double translate_x = 0.0;  // fraction of image width
  double translate_y = 0.0;  // fraction of image height

  bool is_geometric_identity() const {
    return rotation_deg == 0.0 && scale == 1.0 && translate_x == 0.0 && translate_y == 0.0;
  }
  bool is_identity() const {
    return is_geometric_identity() && brightness == 1.0 && noise_sigma == 0.0;
  }
};

Transform sample_transform(const EotConfig& cfg, SeededRandom& rng);

/// Translation, rotation about the image center and scale (one bilinear
/// resample, black outside the frame), then brightness, then Gaussian noise.
/// The identity transform returns the input unchanged.
Image apply_transform(const Image& image, const Transform& t);

struct EotEstimate {
  double mean_loss = 0.0;
  bool success = false;  // every evaluated variant fooled the oracle
  std::size_t queries = 0;
};

/// Monte-Carlo estimate of the adversarial loss of `params` under `cfg`.
///
/// Always issues exactly cfg.queries_per_evaluation() oracle calls unless the
/// oracle throws, in which case the OracleError is rethrown with `queries`
/// set to the calls already completed.
EotEstimate expected_loss(const Image& image, const PatchParams& params, DetectorOracle& oracle,
                          const GroundTruth& truth, const EotConfig& cfg, SeededRandom& rng);

/// Same, for an already composited image.
EotEstimate expected_loss(const Image& adversarial, DetectorOracle& oracle,
                          const GroundTruth& truth, const EotConfig& cfg, SeededRandom& rng);

}  // namespace adcp
