#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "adcp/image.hpp"
#include "adcp/patch_model.hpp"

namespace adcp {

/// Axis-aligned box in pixels.
struct Box {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double area() const { return std::max(0.0, x_max - x_min) * std::max(0.0, y_max - y_min); }
  bool valid() const { return x_min < x_max && y_min < y_max; }
  bool operator==(const Box&) const = default;
};

double iou(const Box& a, const Box& b);

/// One detector output: position, objectness and class.
struct Detection {
  Box box;
  double objectness = 0.0;
  int class_id = 0;

  bool operator==(const Detection&) const = default;
};

struct GroundTruth {
  int class_id = 0;
  std::optional<Box> box;
};

/// A black-box detector: images in, final detections out. Nothing else
/// (no logits, no gradients) crosses this boundary.
class DetectorOracle {
 public:
  virtual ~DetectorOracle() = default;

  virtual std::vector<Detection> detect(const Image& image) = 0;

  /// Number of classes, or 0 when the oracle does not report it.
  virtual int label_space() const = 0;
};

/// Failure talking to a detector. `queries` is the number of oracle calls
/// the failing operation had already completed.
class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  std::size_t queries = 0;
};

/// The peer violated the wire protocol. Carries the offending frame and, when
/// known, the name of the field at fault.
class ProtocolError : public OracleError {
 public:
  ProtocolError(const std::string& what, std::string raw_payload, std::string field = {})
      : OracleError(what), raw_payload(std::move(raw_payload)), field(std::move(field)) {}
  std::string raw_payload;
  std::string field;
};

class OracleTimeout : public OracleError {
 public:
  using OracleError::OracleError;
};

struct LossResult {
  double loss = 0.0;
  bool fooled = true;
};

/// Objectness-based adversarial loss.
///
/// Matching detections share the ground-truth class and, when a ground-truth
/// box is given, overlap it with IoU >= 0.5. The loss is the highest matching
/// objectness; with no match the target is suppressed or misclassified and the
/// result is (0, fooled).
LossResult adversarial_loss(std::span<const Detection> detections, const GroundTruth& truth);

inline constexpr double kMatchIou = 0.5;

/// Integer pixel rectangle [x0, x1) x [y0, y1).
struct PixelRect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  Box box() const { return {double(x0), double(y0), double(x1), double(y1)}; }
  bool operator==(const PixelRect&) const = default;
};

/// Tones of the striped target painted inside a scene's target rectangle:
/// even rows (relative to the top of the rectangle) get the first, odd rows
/// the second. They sit at opposite corners of the RGB cube.
inline constexpr std::array<std::uint8_t, 3> kStripeEven = {0, 255, 0};
inline constexpr std::array<std::uint8_t, 3> kStripeOdd = {255, 0, 255};

/// Synthetic scene: seeded noise background with the striped target in
/// `target`.
Image make_target_scene(int width, int height, const PixelRect& target, std::uint64_t seed);

/// Desk-scale detector of the striped target.
///
/// Blending towards any color C scales the difference between vertically
/// paired stripe pixels by (1 - a), so each pair yields an estimate of the
/// local blend weight a without knowing C. Occlusion is the mean estimate
/// over the target, objectness = max(0, 1 - occlusion), and the target is
/// reported only while objectness >= threshold. The estimate assumes the
/// input is pixel-aligned with the clean scene.
class MockCoverageDetector final : public DetectorOracle {
 public:
  MockCoverageDetector(double threshold, PixelRect target, int class_id = 0);

  std::vector<Detection> detect(const Image& image) override;
  int label_space() const override { return class_id_ + 1; }

  double occlusion(const Image& image) const;
  double objectness(const Image& image) const;

  /// Occlusion the detector would measure without 8-bit quantization: the
  /// mean of opacity * coverage over the paired target rows.
  double expected_occlusion(const PatchParams& params, int width, int height) const;

  double threshold() const { return threshold_; }
  const PixelRect& target() const { return target_; }
  int class_id() const { return class_id_; }

 private:
  double threshold_;
  PixelRect target_;
  int class_id_;
};

std::shared_ptr<MockCoverageDetector> mock_coverage_detector(double threshold,
                                                             PixelRect target,
                                                             int class_id = 0);

/// Returns the same detections for every image; an empty list fools every
/// attack on the first query.
class FixedDetector final : public DetectorOracle {
 public:
  explicit FixedDetector(std::vector<Detection> detections, int label_space = 1)
      : detections_(std::move(detections)), label_space_(label_space) {}

  std::vector<Detection> detect(const Image&) override { return detections_; }
  int label_space() const override { return label_space_; }

 private:
  std::vector<Detection> detections_;
  int label_space_;
};

/// Adapts a callable; handy for scripted oracles in tests.
class FunctionDetector final : public DetectorOracle {
 public:
  using Fn = std::function<std::vector<Detection>(const Image&)>;
  explicit FunctionDetector(Fn fn, int label_space = 1)
      : fn_(std::move(fn)), label_space_(label_space) {}

  std::vector<Detection> detect(const Image& image) override { return fn_(image); }
  int label_space() const override { return label_space_; }

 private:
  Fn fn_;
  int label_space_;
};

/// Oracles that may be used concurrently, one caller per slot.
class OraclePool {
 public:
  explicit OraclePool(std::vector<std::shared_ptr<DetectorOracle>> oracles);

  /// `size` slots sharing one oracle; only valid for stateless oracles.
  static OraclePool shared(std::shared_ptr<DetectorOracle> oracle, std::size_t size = 1);

  std::size_t size() const { return oracles_.size(); }
  DetectorOracle& operator[](std::size_t slot) const { return *oracles_.at(slot); }

 private:
  std::vector<std::shared_ptr<DetectorOracle>> oracles_;
};

}  // namespace adcp
