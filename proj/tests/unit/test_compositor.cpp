#include <doctest.h>

#include <cmath>

#include "adcp/compositor.hpp"
#include "test_support.hpp"

using namespace adcp;
using adcp::testing::random_image;

namespace {

PatchParams band(double top, double bottom, double width, double opacity,
                 Eigen::Vector3d color = Eigen::Vector3d(200, 200, 200)) {
  PatchParams p;
  p.top_x = top;
  p.bottom_x = bottom;
  p.width = width;
  p.opacity = opacity;
  p.color = color;
  return p;
}

}  // namespace

TEST_CASE("zero opacity leaves every byte unchanged") {
  SeededRandom rng(1);
  for (int i = 0; i < 50; ++i) {
    const Image img = random_image(17 + i, 9 + 2 * i, 100 + i);
    const auto p = band(rng.unit(), rng.unit(), rng.uniform(0.1, 0.9), 0.0,
                        Eigen::Vector3d(rng.uniform(0, 255), rng.uniform(0, 255), rng.uniform(0, 255)));
    CHECK(composite(img, p) == img);
  }
}

TEST_CASE("blend arithmetic inside a fully covered region") {
  const Image img(40, 10, 100);
  const Image out = composite(img, band(0.5, 0.5, 0.5, 0.5));
  // Column 20 sits at the band center on every row.
  for (int y = 0; y < 10; ++y) {
    for (int c = 0; c < 3; ++c) CHECK(std::abs(int(out.at(20, y, c)) - 150) <= 1);
  }
}

TEST_CASE("pixels are touched only where coverage is positive") {
  const Image img = random_image(64, 48, 7);
  const auto p = band(0.2, 0.7, 0.1, 0.9, Eigen::Vector3d(255, 0, 0));
  const CoverageMask mask = patch_mask(p, img.width(), img.height());
  const Image out = composite(img, p, mask);
  const auto color = p.quantized_color();
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < 3; ++c) {
        const double in = img.at(x, y, c);
        if (mask(y, x) == 0.0) {
          CHECK(out.at(x, y, c) == img.at(x, y, c));
        } else if (mask(y, x) == 1.0) {
          CHECK(out.at(x, y, c) == std::lround((1.0 - 0.9) * in + 0.9 * color[c]));
        }
      }
    }
  }
}

TEST_CASE("unclipped rows carry exactly width * image width of coverage") {
  for (double w : {0.1, 0.3, 0.5}) {
    const auto p = band(0.5, 0.45, w, 0.5);
    const CoverageMask mask = patch_mask(p, 80, 30);
    for (int y = 0; y < 30; ++y) CHECK(mask.row(y).sum() == doctest::Approx(w * 80).epsilon(1e-12));
  }
}

TEST_CASE("coverage fraction of a vertical band equals its width") {
  const auto p = band(0.5, 0.5, 0.3, 0.5);
  const CoverageMask mask = patch_mask(p, 100, 50);
  CHECK(mask.sum() / (100.0 * 50.0) == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("band center interpolates between the endpoints") {
  const auto p = band(0.1, 0.9, 0.2, 0.5);
  CHECK(band_center(p, 100, 11, 0) == doctest::Approx(10.0));
  CHECK(band_center(p, 100, 11, 10) == doctest::Approx(90.0));
  CHECK(band_center(p, 100, 11, 5) == doctest::Approx(50.0));
}

TEST_CASE("coverage is non-decreasing in width") {
  const CoverageMask narrow = patch_mask(band(0.3, 0.6, 0.2, 0.5), 50, 40);
  const CoverageMask wide = patch_mask(band(0.3, 0.6, 0.4, 0.5), 50, 40);
  CHECK((wide >= narrow).all());
}

TEST_CASE("compositing is deterministic and validates inputs") {
  const Image img = random_image(30, 20, 3);
  const auto p = band(0.4, 0.6, 0.3, 0.4, Eigen::Vector3d(12.4, 99.6, 250));
  CHECK(composite(img, p) == composite(img, p));
  CHECK_THROWS_AS(composite(img, p, CoverageMask::Zero(19, 30)), std::invalid_argument);
  CHECK_THROWS_AS(patch_mask(p, 0, 10), std::invalid_argument);
}

TEST_CASE("band spanning the whole frame blends every pixel") {
  const Image img(20, 20, 0);
  const Image out = composite(img, band(0.5, 0.5, 1.0, 1.0, Eigen::Vector3d(10, 20, 30)));
  for (int y = 0; y < 20; ++y) {
    for (int x = 0; x < 20; ++x) {
      CHECK(out.at(x, y, 0) == 10);
      CHECK(out.at(x, y, 2) == 30);
    }
  }
}
