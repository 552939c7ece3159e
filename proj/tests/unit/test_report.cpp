#include <doctest.h>

#include <regex>
#include <sstream>

#include "adcp/report.hpp"
#include "test_support.hpp"

using namespace adcp;
using adcp::testing::TempDir;

namespace {

AblationGrid sample_grid(std::uint64_t seed) {
  SeededRandom rng(seed);
  AblationGrid g;
  g.w_values = default_width_values();
  g.ts_values = default_opacity_values();
  for (std::size_t i = 0; i < 45; ++i) {
    const std::size_t n = 1 + rng.next() % 30;
    g.cells.push_back({static_cast<double>(rng.next() % (n + 1)) / static_cast<double>(n),
                       rng.uniform(1.0, 5000.0), n});
  }
  return g;
}

ColorGrid sample_color_grid() {
  ColorGrid g;
  g.channel_values = default_channel_values();
  SeededRandom rng(3);
  for (int r : g.channel_values) {
    for (int gr : g.channel_values) {
      for (int b : g.channel_values) {
        g.cells.push_back({{r, gr, b}, {rng.unit(), rng.uniform(1, 100), 20}});
      }
    }
  }
  return g;
}

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("fixed-point formatting rounds ties to even") {
  CHECK(format_fixed4(0.5) == "0.5000");
  CHECK(format_fixed4(1.0 / 3.0) == "0.3333");
  CHECK(format_fixed4(2.0 / 3.0) == "0.6667");
  CHECK(format_fixed4(0.03125) == "0.0312");   // exact binary tie, even neighbour below
  CHECK(format_fixed4(0.09375) == "0.0938");   // exact binary tie, even neighbour above
  CHECK(format_fixed4(12345.678949) == "12345.6789");
  CHECK(format_fixed4(-0.00001) == "0.0000");
  CHECK(quantize4(0.123456) == 0.1235);
}

TEST_CASE("grid CSV has a header and one row per cell") {
  const auto g = sample_grid(1);
  std::ostringstream out;
  write_csv(out, g);
  const std::string csv = out.str();
  CHECK(csv.rfind("w,ts,asr,mean_query,n\n", 0) == 0);
  CHECK(count(csv, "\n") == 46);
}

TEST_CASE("CSV re-parse reproduces the printed values bit for bit") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto g = sample_grid(seed);
    std::ostringstream out;
    write_csv(out, g);
    std::istringstream in(out.str());
    const auto parsed = ablation_grid_from_csv(in);
    REQUIRE(parsed.cells.size() == g.cells.size());
    CHECK(parsed.w_values == g.w_values);
    CHECK(parsed.ts_values == g.ts_values);
    for (std::size_t i = 0; i < g.cells.size(); ++i) {
      CHECK(parsed.cells[i].asr == quantize4(g.cells[i].asr));
      CHECK(parsed.cells[i].mean_query == quantize4(g.cells[i].mean_query));
      CHECK(parsed.cells[i].n_images == g.cells[i].n_images);
    }
    // Writing the parsed grid again is a fixed point.
    std::ostringstream again;
    write_csv(again, parsed);
    CHECK(again.str() == out.str());
  }
}

TEST_CASE("color CSV round trip") {
  const auto g = sample_color_grid();
  std::ostringstream out;
  write_csv(out, g);
  CHECK(out.str().rfind("r,g,b,asr,mean_query,n\n", 0) == 0);
  CHECK(count(out.str(), "\n") == 28);
  std::istringstream in(out.str());
  const auto parsed = color_grid_from_csv(in);
  CHECK(parsed.channel_values == g.channel_values);
  REQUIRE(parsed.cells.size() == 27);
  for (std::size_t i = 0; i < 27; ++i) {
    CHECK(parsed.cells[i].color == g.cells[i].color);
    CHECK(parsed.cells[i].result.asr == quantize4(g.cells[i].result.asr));
  }
}

TEST_CASE("malformed CSV is rejected") {
  std::istringstream bad_header("w,ts,asr\n");
  CHECK_THROWS_AS(ablation_grid_from_csv(bad_header), ReportError);
  std::istringstream bad_row("w,ts,asr,mean_query,n\n0.1,0.1,x,1,1\n");
  CHECK_THROWS_AS(ablation_grid_from_csv(bad_row), ReportError);
}

TEST_CASE("JSON round trip is exact and carries seeds and config") {
  const auto g = sample_grid(4);
  ReportContext ctx{nlohmann::json{{"note", "x"}}, 77};
  const auto j = to_json(g, ctx);
  CHECK(ablation_grid_from_json(nlohmann::json::parse(j.dump())) == g);
  CHECK(j.at("master_seed") == 77);
  CHECK(j.at("config").at("note") == "x");
  CHECK(j.at("cells")[3].at("seed") == derive_seed(77, 3));

  const auto c = sample_color_grid();
  CHECK(color_grid_from_json(nlohmann::json::parse(to_json(c).dump())) == c);
  CHECK_THROWS_AS(color_grid_from_json(j), ReportError);
}

TEST_CASE("SVG heatmap has one rect per cell on a white-to-red scale") {
  auto g = sample_grid(5);
  g.cells[0].asr = 0.0;
  g.cells[1].asr = 1.0;
  g.cells[2].asr = 0.5;
  std::ostringstream out;
  write_svg(out, g);
  const std::string svg = out.str();
  CHECK(count(svg, "<rect") == 45);
  CHECK(svg.find("fill=\"rgb(255,255,255)\"") != std::string::npos);
  CHECK(svg.find("fill=\"rgb(255,0,0)\"") != std::string::npos);
  CHECK(svg.find("fill=\"rgb(255,128,128)\"") != std::string::npos);

  std::ostringstream color;
  write_svg(color, sample_color_grid());
  CHECK(count(color.str(), "<rect") == 27);
}

TEST_CASE("write_report emits the selected files") {
  TempDir dir("report");
  const auto g = sample_grid(6);
  const auto written = write_report(g, dir / "grid");
  REQUIRE(written.size() == 3);
  CHECK(std::filesystem::exists(dir / "grid.csv"));
  CHECK(std::filesystem::exists(dir / "grid.json"));
  CHECK(std::filesystem::exists(dir / "grid.svg"));
  const auto only_csv = write_report(g, dir / "only", ReportFormats{true, false, false});
  CHECK(only_csv.size() == 1);
  CHECK_FALSE(std::filesystem::exists(dir / "only.json"));
  CHECK_THROWS_AS(write_report(g, dir / "no" / "such" / "dir" / "grid"), ReportError);
}
