#pragma once

#include "adcp/image.hpp"
#include "adcp/patch_model.hpp"

namespace adcp {

/// Horizontal center of the band at row `y`, in pixels.
///
/// Linear between top_x * width at row 0 and bottom_x * width at the last
/// row.
double band_center(const PatchParams& params, int width, int height, int y);

/// Renders the band footprint.
///
/// A pixel whose center lies within (width_fraction * width) / 2 of its row's
/// band center is fully covered; edge pixels get fractional coverage from a
/// one-pixel box filter, so each unclipped row carries exactly
/// width_fraction * width of coverage mass.
CoverageMask patch_mask(const PatchParams& params, int width, int height);

/// Linear fusion of the patch color into `image`:
/// out = round((1 - a) * in + a * C), a = opacity * coverage.
Image composite(const Image& image, const PatchParams& params);

/// Same blend with a precomputed mask; `mask` must match the image size.
Image composite(const Image& image, const PatchParams& params, const CoverageMask& mask);

}  // namespace adcp
