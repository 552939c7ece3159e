#include "adcp/oracle.hpp"

#include <algorithm>

#include "adcp/compositor.hpp"
#include "adcp/random.hpp"

namespace adcp {

double iou(const Box& a, const Box& b) {
  const Box inter{std::max(a.x_min, b.x_min), std::max(a.y_min, b.y_min),
                  std::min(a.x_max, b.x_max), std::min(a.y_max, b.y_max)};
  const double overlap = inter.valid() ? inter.area() : 0.0;
  const double joint = a.area() + b.area() - overlap;
  return joint > 0.0 ? overlap / joint : 0.0;
}

LossResult adversarial_loss(std::span<const Detection> detections, const GroundTruth& truth) {
  LossResult result;
  for (const auto& det : detections) {
    if (det.class_id != truth.class_id) continue;
    if (truth.box && iou(det.box, *truth.box) < kMatchIou) continue;
    if (result.fooled || det.objectness > result.loss) result.loss = det.objectness;
    result.fooled = false;
  }
  return result;
}

Image make_target_scene(int width, int height, const PixelRect& target, std::uint64_t seed) {
  if (target.x0 < 0 || target.y0 < 0 || target.x1 > width || target.y1 > height ||
      target.width() <= 0 || target.height() < 2) {
    throw std::invalid_argument("target scene: target rectangle must lie inside the image and span two rows");
  }
  Image img(width, height);
  SeededRandom rng(seed);
  for (auto& v : img.data()) v = static_cast<std::uint8_t>(64 + rng.next() % 128);
  for (int y = target.y0; y < target.y1; ++y) {
    const auto& tone = (y - target.y0) % 2 == 0 ? kStripeEven : kStripeOdd;
    for (int x = target.x0; x < target.x1; ++x) {
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = tone[c];
    }
  }
  return img;
}

MockCoverageDetector::MockCoverageDetector(double threshold, PixelRect target, int class_id)
    : threshold_(threshold), target_(target), class_id_(class_id) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw std::invalid_argument("mock detector: threshold must lie in (0, 1)");
  }
  if (target_.width() <= 0 || target_.height() < 2 || target_.x0 < 0 || target_.y0 < 0) {
    throw std::invalid_argument("mock detector: target must span at least one column and two rows");
  }
}

double MockCoverageDetector::occlusion(const Image& image) const {
  if (target_.x1 > image.width() || target_.y1 > image.height()) {
    throw std::invalid_argument("mock detector: image smaller than target rectangle");
  }
  const Eigen::Vector3d d(double(kStripeEven[0]) - kStripeOdd[0],
                          double(kStripeEven[1]) - kStripeOdd[1],
                          double(kStripeEven[2]) - kStripeOdd[2]);
  const double norm2 = d.squaredNorm();
  const int pairs = target_.height() / 2;
  double total = 0.0;
  for (int j = 0; j < pairs; ++j) {
    const int y = target_.y0 + 2 * j;
    for (int x = target_.x0; x < target_.x1; ++x) {
      double projected = 0.0;
      for (int c = 0; c < 3; ++c) {
        projected += d[c] * (double(image.at(x, y, c)) - image.at(x, y + 1, c));
      }
      total += std::clamp(1.0 - projected / norm2, 0.0, 1.0);
    }
  }
  return total / (static_cast<double>(pairs) * target_.width());
}

double MockCoverageDetector::objectness(const Image& image) const {
  return std::max(0.0, 1.0 - occlusion(image));
}

std::vector<Detection> MockCoverageDetector::detect(const Image& image) {
  const double score = objectness(image);
  if (score < threshold_) return {};
  return {Detection{target_.box(), score, class_id_}};
}

double MockCoverageDetector::expected_occlusion(const PatchParams& params, int width,
                                                int height) const {
  const CoverageMask mask = patch_mask(params, width, height);
  const int rows = 2 * (target_.height() / 2);
  const double coverage = mask.block(target_.y0, target_.x0, rows, target_.width()).mean();
  return std::clamp(params.opacity, 0.0, 1.0) * coverage;
}

std::shared_ptr<MockCoverageDetector> mock_coverage_detector(double threshold, PixelRect target,
                                                             int class_id) {
  return std::make_shared<MockCoverageDetector>(threshold, target, class_id);
}

OraclePool::OraclePool(std::vector<std::shared_ptr<DetectorOracle>> oracles)
    : oracles_(std::move(oracles)) {
  if (oracles_.empty()) throw std::invalid_argument("oracle pool: at least one oracle required");
  for (const auto& o : oracles_) {
    if (!o) throw std::invalid_argument("oracle pool: null oracle");
  }
}

OraclePool OraclePool::shared(std::shared_ptr<DetectorOracle> oracle, std::size_t size) {
  return OraclePool(std::vector<std::shared_ptr<DetectorOracle>>(std::max<std::size_t>(size, 1),
                                                                 std::move(oracle)));
}

}  // namespace adcp
