#include "cli.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "adcp/attack.hpp"
#include "adcp/compositor.hpp"
#include "adcp/config.hpp"
#include "adcp/evaluator.hpp"
#include "adcp/image.hpp"
#include "adcp/random.hpp"
#include "adcp/report.hpp"

namespace adcp::cli {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

/// Flags shared by the commands that run attacks.
struct RunFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> pool;
  std::optional<std::string> out_dir;
  std::optional<int> population;
  std::optional<int> steps;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--config", config, "Run configuration (.toml or .json)")->required();
    cmd.add_option("--seed", seed, "Master seed");
    cmd.add_option("--pool", pool, "Oracle connections used in parallel");
    cmd.add_option("--out-dir", out_dir, "Output directory");
    cmd.add_option("--population", population, "Swarm size");
    cmd.add_option("--steps", steps, "Iteration budget");
  }

  RunConfig load() const {
    RunConfig cfg = load_run_config(config);
    if (const char* env = std::getenv("ADCP_ORACLE"); env && *env) {
      cfg.oracle = oracle_from_override(env, cfg.oracle);
    }
    if (seed) cfg.seed = cfg.swarm.seed = *seed;
    if (pool) cfg.pool = *pool;
    if (out_dir) cfg.output_dir = *out_dir;
    if (population) cfg.swarm.population = *population;
    if (steps) cfg.swarm.step_max = *steps;
    cfg.validate();
    return cfg;
  }
};

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ReportError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ReportError("cannot create '" + dir.string() + "': " + ec.message());
}

Box parse_box(const std::string& text) {
  std::stringstream ss(text);
  std::string field;
  std::vector<double> v;
  while (std::getline(ss, field, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(field, &used));
      if (used != field.size()) throw std::invalid_argument(field);
    } catch (const std::exception&) {
      throw std::invalid_argument("--box: '" + field + "' is not a number");
    }
  }
  if (v.size() != 4) throw std::invalid_argument("--box expects x0,y0,x1,y1");
  Box b{v[0], v[1], v[2], v[3]};
  if (!b.valid()) throw std::invalid_argument("--box is empty or inverted");
  return b;
}

PatchParams load_theta(const std::string& arg) {
  json j;
  if (!arg.empty() && arg.front() == '{') {
    j = json::parse(arg, nullptr, false);
  } else {
    std::ifstream in(arg);
    if (!in) throw std::invalid_argument("--theta: cannot open '" + arg + "'");
    j = json::parse(in, nullptr, false);
  }
  if (j.is_discarded()) throw std::invalid_argument("--theta: not valid JSON");
  return patch_from_json(j);
}

int cmd_composite(const std::string& image_path, const std::string& theta_arg,
                  const std::string& out_path, std::ostream& out) {
  const Image image = read_image(image_path);
  const PatchParams theta = load_theta(theta_arg);
  const CoverageMask mask = patch_mask(theta, image.width(), image.height());
  write_png(out_path, composite(image, theta, mask));
  const double area = static_cast<double>(image.pixel_count());
  out << std::fixed << std::setprecision(4) << "coverage_fraction " << mask.sum() / area << '\n'
      << "covered_pixels " << (mask > 0.0).count() << '\n'
      << "mean_alpha " << theta.opacity * mask.sum() / area << '\n';
  return kOk;
}

int cmd_attack(const RunFlags& flags, const std::string& image_path, int class_id,
               const std::string& box_arg, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = flags.load();
  const Image image = read_image(image_path);
  GroundTruth truth{class_id, std::nullopt};
  if (!box_arg.empty()) truth.box = parse_box(box_arg);

  prepare_dir(cfg.output_dir);
  write_json(cfg.output_dir / "config_echo.json", to_json(cfg));

  const OraclePool pool = make_oracle_pool(cfg.oracle, static_cast<std::size_t>(cfg.pool));
  AttackOutcome outcome;
  std::string failure;
  try {
    outcome = run_attack(image, truth, pool, cfg.eot, cfg.swarm);
  } catch (const AttackAborted& e) {
    outcome = e.partial;
    failure = e.what();
  }

  json report = to_json(outcome);
  if (!failure.empty()) report["error"] = failure;
  write_json(cfg.output_dir / "outcome.json", report);
  write_png(cfg.output_dir / "adversarial.png", composite(image, outcome.theta));
  {
    std::ofstream trace(cfg.output_dir / "fitness_trace.csv", std::ios::binary);
    if (!trace) throw ReportError("cannot write fitness trace");
    write_fitness_trace_csv(trace, outcome.fitness_trace);
  }

  if (!failure.empty()) {
    err << "oracle failure: " << failure << '\n';
    return kOracleFailure;
  }
  out << (outcome.success ? "success" : "failed") << " queries " << outcome.queries
      << " iterations " << outcome.iterations_used << " best_fitness "
      << format_fixed4(outcome.best_fitness) << '\n'
      << "theta " << to_json(outcome.theta).dump() << '\n';
  return outcome.success ? kOk : kAttackFailed;
}

int cmd_ablate(const RunFlags& flags, const std::string& manifest_path, const std::string& grid,
               std::ostream& out) {
  const RunConfig cfg = flags.load();
  const DatasetManifest manifest = load_manifest(manifest_path);
  if (manifest.entries.empty()) throw std::invalid_argument("manifest has no entries");
  const auto images = load_images(manifest);

  prepare_dir(cfg.output_dir);
  write_json(cfg.output_dir / "config_echo.json", to_json(cfg));

  const OraclePool pool = make_oracle_pool(cfg.oracle, static_cast<std::size_t>(cfg.pool));
  ReportContext context{to_json(cfg, false), cfg.seed};
  context.config["grid"] = grid;
  context.config["manifest"] = manifest.name;

  std::vector<fs::path> written;
  if (grid == "w") {
    const auto w = default_width_values();
    const auto ts = default_opacity_values();
    const auto result = run_ablation_grid(images, pool, w, ts, cfg.eot, cfg.swarm);
    written = write_report(result, cfg.output_dir / "ablation_w", {}, context);
    out << "cells " << result.cells.size() << '\n';
  } else {
    const auto channels = default_channel_values();
    const auto result = run_color_ablation(images, pool, channels, cfg.eot, cfg.swarm);
    written = write_report(result, cfg.output_dir / "ablation_color", {}, context);
    out << "cells " << result.cells.size() << '\n';
  }
  for (const auto& p : written) out << "wrote " << p.string() << '\n';
  return kOk;
}

int cmd_oracle_check(const RunFlags& flags, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = flags.load();
  const PixelRect target{24, 24, 40, 40};
  const Image probe = make_target_scene(64, 64, target, cfg.seed);

  const auto start = std::chrono::steady_clock::now();
  std::shared_ptr<DetectorOracle> oracle = make_oracle(cfg.oracle);
  const auto connected = std::chrono::steady_clock::now();
  const auto detections = oracle->detect(probe);
  const auto done = std::chrono::steady_clock::now();

  using ms = std::chrono::duration<double, std::milli>;
  out << std::fixed << std::setprecision(3) << "oracle " << kind_name(cfg.oracle.kind) << '\n'
      << "connect_ms " << ms(connected - start).count() << '\n'
      << "latency_ms " << ms(done - connected).count() << '\n'
      << "detections " << detections.size() << '\n'
      << "label_space " << oracle->label_space() << '\n';
  for (const auto& d : detections) {
    if (oracle->label_space() > 0 && (d.class_id < 0 || d.class_id >= oracle->label_space())) {
      err << "protocol violation: class_id " << d.class_id << " outside the label space\n";
      return kOracleFailure;
    }
  }
  out << "ok\n";
  return kOk;
}

int cmd_make_fixture(const std::string& out_dir, int count, int size, const std::string& target_arg,
                     std::uint64_t seed, std::ostream& out) {
  if (count < 1) throw std::invalid_argument("--count must be at least 1");
  if (size < 8) throw std::invalid_argument("--size must be at least 8");
  const Box t = parse_box(target_arg);
  const PixelRect target{static_cast<int>(t.x_min), static_cast<int>(t.y_min),
                         static_cast<int>(t.x_max), static_cast<int>(t.y_max)};
  prepare_dir(out_dir);
  DatasetManifest manifest;
  manifest.name = "synthetic";
  for (int i = 0; i < count; ++i) {
    std::ostringstream name;
    name << "scene_" << std::setw(3) << std::setfill('0') << i << ".png";
    write_png(fs::path(out_dir) / name.str(),
              make_target_scene(size, size, target, derive_seed(seed, static_cast<std::uint64_t>(i))));
    manifest.entries.push_back({name.str(), GroundTruth{0, target.box()}});
  }
  save_manifest(manifest, fs::path(out_dir) / "manifest.json");
  out << "wrote " << count << " scenes and manifest.json to " << out_dir << '\n';
  return kOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Adversarial camera patch toolkit"};
  app.require_subcommand(1);

  std::string image, theta, out_path;
  auto* composite_cmd = app.add_subcommand("composite", "Blend a patch into an image");
  composite_cmd->add_option("--image", image, "Input PNG or JPEG")->required();
  composite_cmd->add_option("--theta", theta, "Patch parameters: JSON file or inline object")->required();
  composite_cmd->add_option("--out", out_path, "Output PNG")->required();

  RunFlags attack_flags;
  int class_id = 0;
  std::string box;
  auto* attack_cmd = app.add_subcommand("attack", "Search a patch that fools the detector on one image");
  attack_flags.add_to(*attack_cmd);
  attack_cmd->add_option("--image", image, "Input PNG or JPEG")->required();
  attack_cmd->add_option("--class-id", class_id, "Ground-truth class")->required();
  attack_cmd->add_option("--box", box, "Ground-truth box x0,y0,x1,y1");

  RunFlags ablate_flags;
  std::string manifest, grid = "w";
  auto* ablate_cmd = app.add_subcommand("ablate", "Run the width/opacity or color ablation grid");
  ablate_flags.add_to(*ablate_cmd);
  ablate_cmd->add_option("--manifest", manifest, "Dataset manifest JSON")->required();
  ablate_cmd->add_option("--grid", grid, "w or color")->check(CLI::IsMember({"w", "color"}));

  RunFlags check_flags;
  auto* check_cmd = app.add_subcommand("oracle-check", "Probe the configured detector once");
  check_flags.add_to(*check_cmd);

  std::string fixture_dir, target = "24,24,40,40";
  int count = 20, size = 64;
  std::uint64_t fixture_seed = 0;
  auto* fixture_cmd = app.add_subcommand("make-fixture", "Write synthetic striped-target scenes and a manifest");
  fixture_cmd->add_option("--out-dir", fixture_dir, "Output directory")->required();
  fixture_cmd->add_option("--count", count, "Number of scenes");
  fixture_cmd->add_option("--size", size, "Scene side length in pixels");
  fixture_cmd->add_option("--target", target, "Target rectangle x0,y0,x1,y1");
  fixture_cmd->add_option("--seed", fixture_seed, "Background seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*composite_cmd) return cmd_composite(image, theta, out_path, out);
    if (*attack_cmd) return cmd_attack(attack_flags, image, class_id, box, out, err);
    if (*ablate_cmd) return cmd_ablate(ablate_flags, manifest, grid, out);
    if (*check_cmd) return cmd_oracle_check(check_flags, out, err);
    if (*fixture_cmd) return cmd_make_fixture(fixture_dir, count, size, target, fixture_seed, out);
  } catch (const ProtocolError& e) {
    err << "protocol error: " << e.what();
    if (!e.field.empty()) err << " (field '" << e.field << "')";
    err << '\n';
    return kOracleFailure;
  } catch (const OracleError& e) {
    err << "oracle failure: " << e.what() << '\n';
    return kOracleFailure;
  } catch (const UndefinedMetric& e) {
    err << "error: " << e.what() << '\n';
    return kAttackFailed;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}

}  // namespace adcp::cli
