#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "adcp/random.hpp"

namespace adcp {

template <typename Scalar, int Dim>
using Vector = Eigen::Matrix<Scalar, Dim, 1>;

/// Axis-aligned box [lower, upper] in a Dim-dimensional search space.
template <typename Scalar, int Dim = Eigen::Dynamic>
struct Bounds {
  Vector<Scalar, Dim> lower;
  Vector<Scalar, Dim> upper;

  Eigen::Index size() const { return lower.size(); }
  Vector<Scalar, Dim> span() const { return upper - lower; }

  bool valid() const {
    return lower.size() == upper.size() && (lower.array() <= upper.array()).all();
  }
};

/// Pointwise projection of `v` onto `bounds`.
template <typename Derived, typename Scalar, int Dim>
Vector<Scalar, Dim> clamp(const Eigen::MatrixBase<Derived>& v,
                          const Bounds<Scalar, Dim>& bounds) {
  if (v.size() != bounds.size()) {
    throw std::invalid_argument("clamp: vector has " + std::to_string(v.size()) +
                                " dimensions, bounds have " +
                                std::to_string(bounds.size()));
  }
  return v.cwiseMax(bounds.lower).cwiseMin(bounds.upper);
}

/// Draws each coordinate uniformly from its interval.
template <typename Scalar, int Dim>
Vector<Scalar, Dim> sample_uniform(const Bounds<Scalar, Dim>& bounds, SeededRandom& rng) {
  Vector<Scalar, Dim> out(bounds.size());
  for (Eigen::Index d = 0; d < bounds.size(); ++d) {
    out[d] = static_cast<Scalar>(rng.uniform(static_cast<double>(bounds.lower[d]),
                                             static_cast<double>(bounds.upper[d])));
  }
  return out;
}

inline constexpr int kPatchDims = 7;

/// Coordinates of the flat patch encoding.
enum PatchDim : int {
  kTopX = 0,
  kBottomX = 1,
  kRed = 2,
  kGreen = 3,
  kBlue = 4,
  kWidth = 5,
  kOpacity = 6,
};

using FlatVector = Vector<double, kPatchDims>;
using PatchBounds = Bounds<double, kPatchDims>;

/// Default search box: endpoints anywhere along the edges, any color,
/// width and opacity in [0.1, 0.9].
PatchBounds default_patch_bounds();

/// A translucent band running from the top edge to the bottom edge.
///
/// Endpoints and width are fractions of the image width, so one parameter
/// set applies to any resolution. Color is kept continuous and quantized
/// only when rendered. Opacity is the blend weight of the patch color:
/// higher means less transparent.
struct PatchParams {
  double top_x = 0.5;     // horizontal position of the top endpoint
  double bottom_x = 0.5;  // horizontal position of the bottom endpoint
  Eigen::Vector3d color = Eigen::Vector3d::Zero();
  double width = 0.1;
  double opacity = 0.1;

  /// Builds and validates against `bounds`; throws std::invalid_argument.
  static PatchParams make(double top_x, double bottom_x, const Eigen::Vector3d& color,
                          double width, double opacity,
                          const PatchBounds& bounds = default_patch_bounds());

  /// Color rounded half away from zero and clamped to [0, 255].
  std::array<std::uint8_t, 3> quantized_color() const;

  bool operator==(const PatchParams& other) const {
    return top_x == other.top_x && bottom_x == other.bottom_x && color == other.color &&
           width == other.width && opacity == other.opacity;
  }
};

/// Throws std::invalid_argument naming the first field outside `bounds`.
void validate(const PatchParams& params, const PatchBounds& bounds = default_patch_bounds());

/// Fixed order (top_x, bottom_x, r, g, b, width, opacity).
FlatVector encode(const PatchParams& params);
PatchParams decode(const FlatVector& flat);

/// {"ps1_x", "ps2_x", "color": [r,g,b], "width", "opacity"}; color is written
/// quantized.
nlohmann::json to_json(const PatchParams& params);
/// Throws std::invalid_argument on missing or mistyped fields.
PatchParams patch_from_json(const nlohmann::json& j);

nlohmann::json to_json(const PatchBounds& bounds);
PatchBounds bounds_from_json(const nlohmann::json& j,
                             const PatchBounds& base = default_patch_bounds());

}  // namespace adcp
