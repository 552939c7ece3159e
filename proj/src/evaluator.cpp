#include "adcp/evaluator.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <memory>

#include <nlohmann/json.hpp>

namespace adcp {
namespace {

std::optional<Box> box_from_json(const nlohmann::json& j, const std::string& where) {
  if (j.is_null()) return std::nullopt;
  if (!j.is_array() || j.size() != 4 ||
      !std::all_of(j.begin(), j.end(), [](const auto& v) { return v.is_number(); })) {
    throw std::invalid_argument(where + ": 'box' must be [x0, y0, x1, y1] or null");
  }
  Box b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
  if (!b.valid()) throw std::invalid_argument(where + ": 'box' is empty or inverted");
  return b;
}

}  // namespace

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("manifest: cannot open '" + path.string() + "'");
  const nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw std::invalid_argument("manifest: '" + path.string() + "' is not a JSON object");
  }
  DatasetManifest m;
  m.name = j.value("name", path.stem().string());
  if (!j.contains("entries") || !j.at("entries").is_array()) {
    throw std::invalid_argument("manifest: missing 'entries' array");
  }
  const auto base = path.parent_path();
  const auto& entries = j.at("entries");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    const std::string where = "manifest entry " + std::to_string(i);
    if (!e.is_object() || !e.contains("image") || !e.at("image").is_string()) {
      throw std::invalid_argument(where + ": missing 'image' path");
    }
    if (!e.contains("class_id") || !e.at("class_id").is_number_integer()) {
      throw std::invalid_argument(where + ": missing integer 'class_id'");
    }
    DatasetEntry entry;
    entry.image = e.at("image").get<std::string>();
    if (entry.image.is_relative()) entry.image = base / entry.image;
    if (!std::filesystem::exists(entry.image)) {
      throw std::invalid_argument(where + ": image '" + entry.image.string() + "' does not exist");
    }
    entry.truth.class_id = e.at("class_id").get<int>();
    entry.truth.box = box_from_json(e.value("box", nlohmann::json()), where);
    m.entries.push_back(std::move(entry));
  }
  return m;
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : manifest.entries) {
    nlohmann::json box = nullptr;
    if (e.truth.box) box = {e.truth.box->x_min, e.truth.box->y_min, e.truth.box->x_max, e.truth.box->y_max};
    entries.push_back({{"image", e.image.generic_string()}, {"class_id", e.truth.class_id}, {"box", box}});
  }
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("manifest: cannot write '" + path.string() + "'");
  out << nlohmann::json{{"name", manifest.name}, {"entries", entries}}.dump(2) << '\n';
}

std::vector<LabeledImage> load_images(const DatasetManifest& manifest) {
  std::vector<LabeledImage> images;
  images.reserve(manifest.entries.size());
  for (const auto& e : manifest.entries) {
    images.push_back({e.image.filename().string(), read_image(e.image), e.truth});
  }
  return images;
}

double asr(std::span<const bool> still_detected) {
  if (still_detected.empty()) {
    throw UndefinedMetric("ASR is undefined: no true-positive images to attack");
  }
  std::size_t detected = 0;
  for (bool d : still_detected) detected += d ? 1 : 0;
  const auto n = still_detected.size();
  return static_cast<double>(n - detected) / static_cast<double>(n);
}

std::vector<std::size_t> true_positives(std::span<const LabeledImage> images,
                                        const OraclePool& pool) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < images.size(); ++i) {
    try {
      const auto detections = pool[0].detect(images[i].image);
      if (!adversarial_loss(detections, images[i].truth).fooled) out.push_back(i);
    } catch (const OracleError& e) {
      std::cerr << "warning: clean pass failed for '" << images[i].name << "': " << e.what()
                << "; image excluded\n";
    }
  }
  return out;
}

DatasetResult attack_images(std::span<const LabeledImage> images,
                            std::span<const std::size_t> targets, const OraclePool& pool,
                            const EotConfig& eot, const SwarmConfig& cfg) {
  DatasetResult result;
  std::vector<bool> still_detected;
  double total_queries = 0.0;
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const auto& item = images[targets[k]];
    SwarmConfig image_cfg = cfg;
    image_cfg.seed = derive_seed(cfg.seed, k);
    ImageAttack attack{targets[k], std::nullopt, {}};
    try {
      attack.outcome = run_attack(item.image, item.truth, pool, eot, image_cfg);
      still_detected.push_back(!attack.outcome->success);
      total_queries += static_cast<double>(attack.outcome->queries);
    } catch (const OracleError& e) {
      attack.error = e.what();
      ++result.n_excluded;
      std::cerr << "warning: attack on '" << item.name << "' aborted: " << e.what()
                << "; image excluded\n";
    }
    result.attacks.push_back(std::move(attack));
  }
  // std::vector<bool> has no contiguous storage to view.
  const std::unique_ptr<bool[]> flags(new bool[still_detected.size()]);
  std::copy(still_detected.begin(), still_detected.end(), flags.get());
  result.n_attacked = still_detected.size();
  result.asr = asr(std::span<const bool>(flags.get(), still_detected.size()));
  result.mean_query = total_queries / static_cast<double>(result.n_attacked);
  return result;
}

DatasetResult run_dataset_attack(std::span<const LabeledImage> images, const OraclePool& pool,
                                 const EotConfig& eot, const SwarmConfig& cfg) {
  if (images.empty()) throw std::invalid_argument("dataset attack: no images");
  const auto targets = true_positives(images, pool);
  return attack_images(images, targets, pool, eot, cfg);
}

std::vector<double> default_width_values() { return {0.1, 0.3, 0.5, 0.7, 0.9}; }

std::vector<double> default_opacity_values() {
  return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
}

std::vector<int> default_channel_values() { return {0, 127, 255}; }

AblationGrid run_ablation_grid(std::span<const LabeledImage> images, const OraclePool& pool,
                               std::span<const double> w_values, std::span<const double> ts_values,
                               const EotConfig& eot, const SwarmConfig& cfg) {
  if (images.empty()) throw std::invalid_argument("ablation: no images");
  if (w_values.empty() || ts_values.empty()) throw std::invalid_argument("ablation: empty axis");
  AblationGrid grid;
  grid.w_values.assign(w_values.begin(), w_values.end());
  grid.ts_values.assign(ts_values.begin(), ts_values.end());
  std::sort(grid.w_values.begin(), grid.w_values.end());
  std::sort(grid.ts_values.begin(), grid.ts_values.end());

  const auto targets = true_positives(images, pool);
  if (targets.empty()) throw UndefinedMetric("ASR is undefined: no true-positive images to attack");

  std::size_t cell = 0;
  for (double w : grid.w_values) {
    for (double ts : grid.ts_values) {
      SwarmConfig cell_cfg = cfg;
      cell_cfg.seed = derive_seed(cfg.seed, cell++);
      cell_cfg.bounds.lower[kWidth] = cell_cfg.bounds.upper[kWidth] = w;
      cell_cfg.bounds.lower[kOpacity] = cell_cfg.bounds.upper[kOpacity] = ts;
      const auto r = attack_images(images, targets, pool, eot, cell_cfg);
      grid.cells.push_back({r.asr, r.mean_query, r.n_attacked});
    }
  }
  return grid;
}

ColorGrid run_color_ablation(std::span<const LabeledImage> images, const OraclePool& pool,
                             std::span<const int> channel_values, const EotConfig& eot,
                             const SwarmConfig& cfg) {
  if (images.empty()) throw std::invalid_argument("color ablation: no images");
  if (channel_values.empty()) throw std::invalid_argument("color ablation: no channel values");
  for (int v : channel_values) {
    if (v < 0 || v > 255) throw std::invalid_argument("color ablation: channel values must lie in [0, 255]");
  }
  ColorGrid grid;
  grid.channel_values.assign(channel_values.begin(), channel_values.end());

  const auto targets = true_positives(images, pool);
  if (targets.empty()) throw UndefinedMetric("ASR is undefined: no true-positive images to attack");

  std::size_t cell = 0;
  for (int r : grid.channel_values) {
    for (int g : grid.channel_values) {
      for (int b : grid.channel_values) {
        SwarmConfig cell_cfg = cfg;
        cell_cfg.seed = derive_seed(cfg.seed, cell++);
        const std::array<int, 3> color{r, g, b};
        for (int c = 0; c < 3; ++c) {
          cell_cfg.bounds.lower[kRed + c] = cell_cfg.bounds.upper[kRed + c] = color[c];
        }
        const auto res = attack_images(images, targets, pool, eot, cell_cfg);
        grid.cells.push_back({color, {res.asr, res.mean_query, res.n_attacked}});
      }
    }
  }
  return grid;
}

}  // namespace adcp
