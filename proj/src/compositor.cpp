#include "adcp/compositor.hpp"

#include <algorithm>
#include <cmath>

namespace adcp {

double band_center(const PatchParams& params, int width, int height, int y) {
  const double t = height > 1 ? static_cast<double>(y) / (height - 1) : 0.0;
  return (params.top_x + (params.bottom_x - params.top_x) * t) * width;
}

CoverageMask patch_mask(const PatchParams& params, int width, int height) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("patch_mask: zero-area image");
  const double half = 0.5 * params.width * width;
  CoverageMask mask = CoverageMask::Zero(height, width);
  for (int y = 0; y < height; ++y) {
    const double center = band_center(params, width, height, y);
    // Only columns within half + 1 of the center can be touched.
    const int x0 = std::max(0, static_cast<int>(std::floor(center - half - 1.0)));
    const int x1 = std::min(width - 1, static_cast<int>(std::ceil(center + half + 1.0)));
    for (int x = x0; x <= x1; ++x) {
      const double distance = std::abs(x + 0.5 - center);
      mask(y, x) = std::clamp(half + 0.5 - distance, 0.0, 1.0);
    }
  }
  return mask;
}

Image composite(const Image& image, const PatchParams& params) {
  return composite(image, params, patch_mask(params, image.width(), image.height()));
}

Image composite(const Image& image, const PatchParams& params, const CoverageMask& mask) {
  if (mask.rows() != image.height() || mask.cols() != image.width()) {
    throw std::invalid_argument("composite: mask size does not match image");
  }
  const auto c = params.quantized_color();
  const Eigen::RowVector3d color(c[0], c[1], c[2]);

  // Row-major mask reshaped to one weight per pixel.
  const Eigen::Map<const Eigen::ArrayXd> coverage(mask.data(), mask.size());
  const Eigen::ArrayXd alpha = (params.opacity * coverage).cwiseMax(0.0).cwiseMin(1.0);

  const Eigen::ArrayX3d in = image.pixels().cast<double>();
  const Eigen::ArrayX3d blended =
      in.colwise() * (1.0 - alpha) + (alpha.matrix() * color).array();

  Image out = image;
  out.pixels() = blended.round().cwiseMax(0.0).cwiseMin(255.0).cast<std::uint8_t>();
  return out;
}

}  // namespace adcp
