#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "adcp/evaluator.hpp"

namespace adcp {

class ReportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Four fractional digits, ties to even on the exact binary value.
std::string format_fixed4(double value);

/// Rounds to what format_fixed4 prints.
double quantize4(double value);

/// Run metadata carried into the JSON report.
struct ReportContext {
  nlohmann::json config = nlohmann::json::object();
  std::uint64_t master_seed = 0;
};

struct ReportFormats {
  bool csv = true;
  bool json = true;
  bool svg = true;
};

/// Header "w,ts,asr,mean_query,n", one row per cell in grid order.
void write_csv(std::ostream& out, const AblationGrid& grid);
/// Header "r,g,b,asr,mean_query,n".
void write_csv(std::ostream& out, const ColorGrid& grid);

/// Parses what write_csv produced; values come back quantized.
AblationGrid ablation_grid_from_csv(std::istream& in);
ColorGrid color_grid_from_csv(std::istream& in);

/// Full-precision structure with per-cell seeds, the master seed and the
/// config echo.
nlohmann::json to_json(const AblationGrid& grid, const ReportContext& context = {});
nlohmann::json to_json(const ColorGrid& grid, const ReportContext& context = {});
AblationGrid ablation_grid_from_json(const nlohmann::json& j);
ColorGrid color_grid_from_json(const nlohmann::json& j);

/// Heatmap with one <rect> per cell. Fill is rgb(255, v, v) with
/// v = round(255 * (1 - asr)): white at ASR 0, pure red at ASR 1.
void write_svg(std::ostream& out, const AblationGrid& grid);
void write_svg(std::ostream& out, const ColorGrid& grid);

/// Writes <stem>.csv, <stem>.json and <stem>.svg as selected and returns the
/// paths written. Throws ReportError when a file cannot be written.
std::vector<std::filesystem::path> write_report(const AblationGrid& grid,
                                                const std::filesystem::path& stem,
                                                const ReportFormats& formats = {},
                                                const ReportContext& context = {});
std::vector<std::filesystem::path> write_report(const ColorGrid& grid,
                                                const std::filesystem::path& stem,
                                                const ReportFormats& formats = {},
                                                const ReportContext& context = {});

}  // namespace adcp
