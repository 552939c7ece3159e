#include "adcp/patch_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <nlohmann/json.hpp>

namespace adcp {
namespace {

constexpr const char* kFieldNames[kPatchDims] = {"ps1_x", "ps2_x", "r", "g", "b", "width",
                                                 "opacity"};

double field_number(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw std::invalid_argument(std::string("theta: missing field '") + key + "'");
  const auto& v = j.at(key);
  if (!v.is_number()) throw std::invalid_argument(std::string("theta: field '") + key + "' is not a number");
  return v.get<double>();
}

}  // namespace

PatchBounds default_patch_bounds() {
  PatchBounds b;
  b.lower << 0.0, 0.0, 0.0, 0.0, 0.0, 0.1, 0.1;
  b.upper << 1.0, 1.0, 255.0, 255.0, 255.0, 0.9, 0.9;
  return b;
}

PatchParams PatchParams::make(double top_x, double bottom_x, const Eigen::Vector3d& color,
                              double width, double opacity, const PatchBounds& bounds) {
  PatchParams p{top_x, bottom_x, color, width, opacity};
  validate(p, bounds);
  return p;
}

std::array<std::uint8_t, 3> PatchParams::quantized_color() const {
  std::array<std::uint8_t, 3> out{};
  for (int c = 0; c < 3; ++c) {
    out[c] = static_cast<std::uint8_t>(std::clamp(std::round(color[c]), 0.0, 255.0));
  }
  return out;
}

void validate(const PatchParams& params, const PatchBounds& bounds) {
  if (!bounds.valid()) throw std::invalid_argument("patch bounds: lower exceeds upper");
  const FlatVector flat = encode(params);
  for (int d = 0; d < kPatchDims; ++d) {
    if (!std::isfinite(flat[d]) || flat[d] < bounds.lower[d] || flat[d] > bounds.upper[d]) {
      throw std::invalid_argument("theta: " + std::string(kFieldNames[d]) + "=" +
                                  std::to_string(flat[d]) + " outside [" +
                                  std::to_string(bounds.lower[d]) + ", " +
                                  std::to_string(bounds.upper[d]) + "]");
    }
  }
}

FlatVector encode(const PatchParams& params) {
  FlatVector v;
  v << params.top_x, params.bottom_x, params.color[0], params.color[1], params.color[2],
      params.width, params.opacity;
  return v;
}

PatchParams decode(const FlatVector& flat) {
  return PatchParams{flat[kTopX], flat[kBottomX], flat.segment<3>(kRed), flat[kWidth],
                     flat[kOpacity]};
}

nlohmann::json to_json(const PatchParams& params) {
  const auto c = params.quantized_color();
  return {{"ps1_x", params.top_x},
          {"ps2_x", params.bottom_x},
          {"color", {c[0], c[1], c[2]}},
          {"width", params.width},
          {"opacity", params.opacity}};
}

PatchParams patch_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("theta: expected a JSON object");
  PatchParams p;
  p.top_x = field_number(j, "ps1_x");
  p.bottom_x = field_number(j, "ps2_x");
  p.width = field_number(j, "width");
  p.opacity = field_number(j, "opacity");
  if (!j.contains("color")) throw std::invalid_argument("theta: missing field 'color'");
  const auto& c = j.at("color");
  if (!c.is_array() || c.size() != 3) {
    throw std::invalid_argument("theta: 'color' must be an array of 3 numbers");
  }
  for (int i = 0; i < 3; ++i) {
    if (!c[i].is_number()) throw std::invalid_argument("theta: 'color' must be an array of 3 numbers");
    p.color[i] = c[i].get<double>();
  }
  return p;
}

nlohmann::json to_json(const PatchBounds& bounds) {
  auto interval = [&](int d) { return nlohmann::json::array({bounds.lower[d], bounds.upper[d]}); };
  return {{"ps1_x", interval(kTopX)},
          {"ps2_x", interval(kBottomX)},
          {"r", interval(kRed)},
          {"g", interval(kGreen)},
          {"b", interval(kBlue)},
          {"width", interval(kWidth)},
          {"opacity", interval(kOpacity)}};
}

PatchBounds bounds_from_json(const nlohmann::json& j, const PatchBounds& base) {
  PatchBounds b = base;
  auto read = [&](const char* key, std::initializer_list<int> dims) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      throw std::invalid_argument(std::string("bounds: '") + key + "' must be [min, max]");
    }
    for (int d : dims) {
      b.lower[d] = v[0].get<double>();
      b.upper[d] = v[1].get<double>();
    }
  };
  read("ps1_x", {kTopX});
  read("ps2_x", {kBottomX});
  read("color", {kRed, kGreen, kBlue});
  read("r", {kRed});
  read("g", {kGreen});
  read("b", {kBlue});
  read("width", {kWidth});
  read("opacity", {kOpacity});
  if (!b.valid()) throw std::invalid_argument("bounds: lower exceeds upper");
  return b;
}

}  // namespace adcp
