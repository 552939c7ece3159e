#include <doctest.h>

#include <nlohmann/json.hpp>

#include "adcp/patch_model.hpp"
#include "adcp/random.hpp"

using namespace adcp;

TEST_CASE("encode and decode are inverse over random parameters") {
  SeededRandom rng(11);
  const auto bounds = default_patch_bounds();
  for (int i = 0; i < 200; ++i) {
    const FlatVector v = sample_uniform(bounds, rng);
    const PatchParams p = decode(v);
    CHECK(encode(p) == v);
    CHECK(decode(encode(p)) == p);
  }
}

TEST_CASE("flat layout order") {
  const auto p = PatchParams::make(0.2, 0.7, Eigen::Vector3d(10, 20, 30), 0.3, 0.4);
  const FlatVector v = encode(p);
  CHECK(v[kTopX] == 0.2);
  CHECK(v[kBottomX] == 0.7);
  CHECK(v[kRed] == 10);
  CHECK(v[kGreen] == 20);
  CHECK(v[kBlue] == 30);
  CHECK(v[kWidth] == 0.3);
  CHECK(v[kOpacity] == 0.4);
}

TEST_CASE("default bounds") {
  const auto b = default_patch_bounds();
  REQUIRE(b.valid());
  CHECK(b.lower[kTopX] == 0.0);
  CHECK(b.upper[kBottomX] == 1.0);
  CHECK(b.upper[kRed] == 255.0);
  CHECK(b.lower[kWidth] == 0.1);
  CHECK(b.upper[kWidth] == 0.9);
  CHECK(b.lower[kOpacity] == 0.1);
  CHECK(b.upper[kOpacity] == 0.9);
}

TEST_CASE("validation rejects out-of-range fields") {
  CHECK_THROWS_AS(PatchParams::make(0.5, 0.5, Eigen::Vector3d::Zero(), 0.95, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(PatchParams::make(0.5, 0.5, Eigen::Vector3d::Zero(), 0.5, 0.05), std::invalid_argument);
  CHECK_THROWS_AS(PatchParams::make(1.5, 0.5, Eigen::Vector3d::Zero(), 0.5, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(PatchParams::make(0.5, 0.5, Eigen::Vector3d(0, 300, 0), 0.5, 0.5), std::invalid_argument);
  CHECK_NOTHROW(PatchParams::make(0.0, 1.0, Eigen::Vector3d(0, 255, 0), 0.1, 0.9));
}

TEST_CASE("clamp projects onto the box and checks dimensions") {
  const auto b = default_patch_bounds();
  FlatVector v;
  v << -1, 2, 300, -5, 100, 0.0, 1.0;
  const FlatVector c = clamp(v, b);
  CHECK(c[kTopX] == 0.0);
  CHECK(c[kBottomX] == 1.0);
  CHECK(c[kRed] == 255.0);
  CHECK(c[kGreen] == 0.0);
  CHECK(c[kBlue] == 100.0);
  CHECK(c[kWidth] == 0.1);
  CHECK(c[kOpacity] == 0.9);

  const Bounds<double> dyn{Eigen::VectorXd::Zero(3), Eigen::VectorXd::Ones(3)};
  CHECK_THROWS_AS(clamp(Eigen::VectorXd::Zero(4), dyn), std::invalid_argument);
}

TEST_CASE("templated helpers work for float scalars") {
  Bounds<float, 2> b{Eigen::Vector2f(0.f, -1.f), Eigen::Vector2f(1.f, 1.f)};
  SeededRandom rng(3);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector2f v = sample_uniform(b, rng);
    CHECK((v.array() >= b.lower.array()).all());
    CHECK((v.array() <= b.upper.array()).all());
  }
  CHECK(clamp(Eigen::Vector2f(2.f, -3.f), b) == Eigen::Vector2f(1.f, -1.f));
}

TEST_CASE("color quantization rounds half away from zero and clamps") {
  PatchParams p;
  p.color = Eigen::Vector3d(0.5, 127.49, 254.5);
  const auto q = p.quantized_color();
  CHECK(q[0] == 1);
  CHECK(q[1] == 127);
  CHECK(q[2] == 255);
}

TEST_CASE("json form") {
  const auto p = PatchParams::make(0.25, 0.75, Eigen::Vector3d(1, 2, 3), 0.5, 0.6);
  const auto j = to_json(p);
  CHECK(j.at("ps1_x") == 0.25);
  CHECK(j.at("ps2_x") == 0.75);
  CHECK(j.at("color") == nlohmann::json({1, 2, 3}));
  CHECK(j.at("width") == 0.5);
  CHECK(j.at("opacity") == 0.6);
  CHECK(patch_from_json(j) == p);

  auto bad = j;
  bad.erase("opacity");
  CHECK_THROWS_AS(patch_from_json(bad), std::invalid_argument);
  bad = j;
  bad["color"] = {1, 2};
  CHECK_THROWS_AS(patch_from_json(bad), std::invalid_argument);
}

TEST_CASE("bounds json overrides selected dimensions") {
  const auto b = bounds_from_json(nlohmann::json{{"width", {0.3, 0.3}}, {"color", {0, 10}}});
  CHECK(b.lower[kWidth] == 0.3);
  CHECK(b.upper[kWidth] == 0.3);
  CHECK(b.upper[kRed] == 10);
  CHECK(b.upper[kBlue] == 10);
  CHECK(b.upper[kOpacity] == 0.9);
  CHECK_THROWS_AS(bounds_from_json(nlohmann::json{{"width", 0.3}}), std::invalid_argument);
  const auto round = bounds_from_json(to_json(b));
  CHECK(round.lower == b.lower);
  CHECK(round.upper == b.upper);
}

TEST_CASE("derived seeds are stable and distinct") {
  CHECK(derive_seed(0, 0) == derive_seed(0, 0));
  CHECK(derive_seed(0, 0) != derive_seed(0, 1));
  CHECK(derive_seed(1, 0) != derive_seed(0, 0));
  // First output of the reference SplitMix64 generator seeded with 0.
  CHECK(splitmix64(0) == 0xE220A8397B1DCDAFULL);
}

TEST_CASE("uniform draws stay in range and degenerate intervals consume nothing") {
  SeededRandom a(5), b(5);
  CHECK(a.uniform(2.0, 2.0) == 2.0);
  CHECK(a.next() == b.next());
  for (int i = 0; i < 1000; ++i) {
    const double u = a.unit();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}
