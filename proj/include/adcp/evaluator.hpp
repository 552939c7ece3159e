#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "adcp/attack.hpp"
#include "adcp/eot.hpp"
#include "adcp/image.hpp"
#include "adcp/oracle.hpp"

namespace adcp {

struct DatasetEntry {
  std::filesystem::path image;
  GroundTruth truth;
};

/// {"name": s, "entries": [{"image": path, "class_id": i, "box": [x0,y0,x1,y1] | null}]}
struct DatasetManifest {
  std::string name;
  std::vector<DatasetEntry> entries;
};

/// Relative image paths resolve against the manifest's directory. Throws
/// std::invalid_argument for schema errors or missing images.
DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

struct LabeledImage {
  std::string name;
  Image image;
  GroundTruth truth;
};

std::vector<LabeledImage> load_images(const DatasetManifest& manifest);

/// ASR over an empty true-positive set.
class UndefinedMetric : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// ASR = 1 - (1/N) * sum F(label_i), with F = 1 when the label is still
/// detected under attack. `still_detected` covers exactly the N images that
/// were true positives without attack.
double asr(std::span<const bool> still_detected);

/// Indices of images whose ground truth the oracle detects on the clean
/// image (one query each). Oracle failures are reported to stderr and the
/// image is left out.
std::vector<std::size_t> true_positives(std::span<const LabeledImage> images,
                                        const OraclePool& pool);

struct ImageAttack {
  std::size_t index = 0;  // into the image list
  std::optional<AttackOutcome> outcome;
  std::string error;  // set when the oracle failed; the image is excluded
};

struct DatasetResult {
  std::vector<ImageAttack> attacks;
  double asr = 0.0;
  double mean_query = 0.0;  // over attacked images, failures at full cost
  std::size_t n_attacked = 0;
  std::size_t n_excluded = 0;
};

/// Attacks the listed true positives. Image k of the list is attacked with
/// seed derive_seed(cfg.seed, k). Throws UndefinedMetric when no image could
/// be attacked.
DatasetResult attack_images(std::span<const LabeledImage> images,
                            std::span<const std::size_t> targets, const OraclePool& pool,
                            const EotConfig& eot, const SwarmConfig& cfg);

/// Clean pass, then attack_images over the true positives.
DatasetResult run_dataset_attack(std::span<const LabeledImage> images, const OraclePool& pool,
                                 const EotConfig& eot, const SwarmConfig& cfg);

struct GridCell {
  double asr = 0.0;
  double mean_query = 0.0;
  std::size_t n_images = 0;

  bool operator==(const GridCell&) const = default;
};

/// Width x opacity sweep; cells are row-major over (width, opacity).
struct AblationGrid {
  std::vector<double> w_values;
  std::vector<double> ts_values;
  std::vector<GridCell> cells;

  const GridCell& at(std::size_t wi, std::size_t ti) const { return cells.at(wi * ts_values.size() + ti); }
  bool operator==(const AblationGrid&) const = default;
};

struct ColorCell {
  std::array<int, 3> color{};
  GridCell result;

  bool operator==(const ColorCell&) const = default;
};

/// Fixed-color sweep over channel_values^3, red-major.
struct ColorGrid {
  std::vector<int> channel_values;
  std::vector<ColorCell> cells;

  bool operator==(const ColorGrid&) const = default;
};

/// 0.1 to 0.9 in steps of 0.2.
std::vector<double> default_width_values();
/// 0.1 to 0.9 in steps of 0.1.
std::vector<double> default_opacity_values();
/// 0, 127, 255.
std::vector<int> default_channel_values();

/// Each cell pins width and opacity and searches position and color.
/// Cell c runs with seed derive_seed(cfg.seed, c). The clean pass runs once.
AblationGrid run_ablation_grid(std::span<const LabeledImage> images, const OraclePool& pool,
                               std::span<const double> w_values, std::span<const double> ts_values,
                               const EotConfig& eot, const SwarmConfig& cfg);

/// Each cell pins the color and searches position, width and opacity.
ColorGrid run_color_ablation(std::span<const LabeledImage> images, const OraclePool& pool,
                             std::span<const int> channel_values, const EotConfig& eot,
                             const SwarmConfig& cfg);

}  // namespace adcp
