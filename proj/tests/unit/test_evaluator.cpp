#include <doctest.h>

#include <nlohmann/json.hpp>

#include "adcp/evaluator.hpp"
#include "test_support.hpp"

using namespace adcp;
using adcp::testing::TempDir;

namespace {

const PixelRect kTarget{24, 24, 40, 40};

std::vector<LabeledImage> scenes(int n, std::uint64_t seed = 0) {
  std::vector<LabeledImage> out;
  for (int i = 0; i < n; ++i) {
    out.push_back({"scene" + std::to_string(i), make_target_scene(64, 64, kTarget, derive_seed(seed, i)),
                   GroundTruth{0, kTarget.box()}});
  }
  return out;
}

SwarmConfig quick(int population, int steps) {
  SwarmConfig cfg;
  cfg.population = population;
  cfg.step_max = steps;
  return cfg;
}

}  // namespace

TEST_CASE("ASR matches brute-force counting") {
  SeededRandom rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.next() % 50;
    std::unique_ptr<bool[]> detected(new bool[n]);
    std::size_t fooled = 0;
    for (std::size_t i = 0; i < n; ++i) {
      detected[i] = (rng.next() & 1) != 0;
      if (!detected[i]) ++fooled;
    }
    CHECK(asr(std::span<const bool>(detected.get(), n)) == static_cast<double>(fooled) / static_cast<double>(n));
  }
}

TEST_CASE("ASR of an empty set is undefined") {
  CHECK_THROWS_AS(asr(std::span<const bool>()), UndefinedMetric);
}

TEST_CASE("clean pass keeps only detected images") {
  auto images = scenes(3);
  images[1].truth.class_id = 4;  // the mock only reports class 0
  const auto pool = OraclePool::shared(mock_coverage_detector(0.5, kTarget));
  CHECK(true_positives(images, pool) == std::vector<std::size_t>{0, 2});
}

TEST_CASE("oracle failures during the clean pass exclude the image") {
  const auto images = scenes(3);
  int call = 0;
  auto flaky = std::make_shared<FunctionDetector>([&](const Image&) -> std::vector<Detection> {
    if (++call == 2) throw OracleError("hiccup");
    return {Detection{kTarget.box(), 1.0, 0}};
  });
  CHECK(true_positives(images, OraclePool::shared(flaky)) == std::vector<std::size_t>{0, 2});
}

TEST_CASE("dataset attack against the always-fooled oracle") {
  const auto images = scenes(4);
  // The clean pass needs a detection, so the first call per image reports the target.
  std::size_t calls = 0;
  auto oracle = std::make_shared<FunctionDetector>([&](const Image&) {
    ++calls;
    return calls <= 4 ? std::vector<Detection>{{kTarget.box(), 1.0, 0}} : std::vector<Detection>{};
  });
  EotConfig eot;
  const auto r = run_dataset_attack(images, OraclePool::shared(oracle), eot, quick(5, 5));
  CHECK(r.n_attacked == 4);
  CHECK(r.asr == 1.0);
  CHECK(r.mean_query == static_cast<double>(eot.queries_per_evaluation()));
}

TEST_CASE("failures are charged their full budget in the mean query") {
  const auto images = scenes(2);
  auto never = std::make_shared<FixedDetector>(std::vector<Detection>{{kTarget.box(), 1.0, 0}});
  EotConfig eot = EotConfig::identity();
  const auto r = run_dataset_attack(images, OraclePool::shared(never), eot, quick(3, 4));
  CHECK(r.asr == 0.0);
  CHECK(r.mean_query == 12.0);
}

TEST_CASE("no true positives makes the dataset ASR undefined") {
  const auto images = scenes(2);
  auto blind = std::make_shared<FixedDetector>(std::vector<Detection>{});
  CHECK_THROWS_AS(run_dataset_attack(images, OraclePool::shared(blind), EotConfig{}, quick(2, 2)),
                  UndefinedMetric);
  CHECK_THROWS_AS(run_ablation_grid(images, OraclePool::shared(blind), default_width_values(),
                                    default_opacity_values(), EotConfig{}, quick(2, 2)),
                  UndefinedMetric);
}

TEST_CASE("default sweep axes") {
  CHECK(default_width_values() == std::vector<double>{0.1, 0.3, 0.5, 0.7, 0.9});
  CHECK(default_opacity_values().size() == 9);
  CHECK(default_opacity_values().front() == 0.1);
  CHECK(default_opacity_values().back() == 0.9);
  CHECK(default_channel_values() == std::vector<int>{0, 127, 255});
}

TEST_CASE("grid cells pin width and opacity") {
  const auto images = scenes(2);
  auto mock = mock_coverage_detector(0.5, kTarget);
  const std::vector<double> w{0.1, 0.9};
  const std::vector<double> ts{0.1, 0.9};
  const auto grid = run_ablation_grid(images, OraclePool::shared(mock), w, ts, EotConfig::identity(), quick(10, 20));
  REQUIRE(grid.cells.size() == 4);
  // A 10% band at 10% opacity cannot hide the target, a 90% band at 90% can.
  CHECK(grid.at(0, 0).asr == 0.0);
  CHECK(grid.at(1, 1).asr == 1.0);
  CHECK(grid.at(0, 0).n_images == 2);
  CHECK(grid.at(0, 0).mean_query == 200.0);
}

TEST_CASE("color grid has one cell per channel combination") {
  const auto images = scenes(1);
  const auto grid = run_color_ablation(images, OraclePool::shared(mock_coverage_detector(0.5, kTarget)),
                                       std::vector<int>{0, 255}, EotConfig::identity(), quick(6, 10));
  REQUIRE(grid.cells.size() == 8);
  CHECK(grid.cells.front().color == std::array<int, 3>{0, 0, 0});
  CHECK(grid.cells[1].color == std::array<int, 3>{0, 0, 255});
  CHECK(grid.cells.back().color == std::array<int, 3>{255, 255, 255});
  CHECK_THROWS_AS(run_color_ablation(images, OraclePool::shared(mock_coverage_detector(0.5, kTarget)),
                                     std::vector<int>{300}, EotConfig::identity(), quick(2, 2)),
                  std::invalid_argument);
}

TEST_CASE("manifest load and save") {
  TempDir dir("manifest");
  write_png(dir / "a.png", make_target_scene(32, 32, PixelRect{8, 8, 16, 16}, 1));
  DatasetManifest m{"demo", {{"a.png", GroundTruth{2, Box{8, 8, 16, 16}}}}};
  save_manifest(m, dir / "m.json");
  const auto loaded = load_manifest(dir / "m.json");
  CHECK(loaded.name == "demo");
  REQUIRE(loaded.entries.size() == 1);
  CHECK(loaded.entries[0].image == dir / "a.png");
  CHECK(loaded.entries[0].truth.class_id == 2);
  CHECK(*loaded.entries[0].truth.box == Box{8, 8, 16, 16});
  const auto images = load_images(loaded);
  CHECK(images[0].image.width() == 32);

  adcp::testing::spit(dir / "missing.json", R"({"name": "x", "entries": [{"image": "nope.png", "class_id": 0}]})");
  CHECK_THROWS_AS(load_manifest(dir / "missing.json"), std::invalid_argument);
  adcp::testing::spit(dir / "nobox.json", R"({"name": "x", "entries": [{"image": "a.png", "class_id": 0, "box": null}]})");
  CHECK_FALSE(load_manifest(dir / "nobox.json").entries[0].truth.box.has_value());
  adcp::testing::spit(dir / "bad.json", R"({"entries": [{"image": "a.png"}]})");
  CHECK_THROWS_AS(load_manifest(dir / "bad.json"), std::invalid_argument);
}
