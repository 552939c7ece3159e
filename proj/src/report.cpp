#include "adcp/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "adcp/random.hpp"

namespace adcp {
namespace {

double parse_double(const std::string& field) {
  double v = 0.0;
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ReportError("report: bad number '" + field + "'");
  return v;
}

std::size_t parse_count(const std::string& field) {
  std::size_t v = 0;
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ReportError("report: bad count '" + field + "'");
  return v;
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) fields.push_back(f);
  return fields;
}

std::vector<std::vector<std::string>> read_rows(std::istream& in, const std::string& header) {
  std::string line;
  if (!std::getline(in, line) || line != header) {
    throw ReportError("report: expected CSV header '" + header + "'");
  }
  const std::size_t width = split_row(header).size();
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split_row(line);
    if (fields.size() != width) throw ReportError("report: malformed CSV row '" + line + "'");
    rows.push_back(std::move(fields));
  }
  return rows;
}

void append_unique(std::vector<double>& axis, double v) {
  if (std::find(axis.begin(), axis.end(), v) == axis.end()) axis.push_back(v);
}

int heat(double asr) {
  return static_cast<int>(std::lround(255.0 * (1.0 - std::clamp(asr, 0.0, 1.0))));
}

void svg_cell(std::ostream& out, int x, int y, int size, double asr, const std::string& title) {
  const int v = heat(asr);
  out << "  <rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << size << "\" height=\"" << size
      << "\" fill=\"rgb(255," << v << ',' << v << ")\" stroke=\"#444\"><title>" << title
      << "</title></rect>\n";
  out << "  <text x=\"" << x + size / 2 << "\" y=\"" << y + size / 2 + 4
      << "\" font-size=\"11\" text-anchor=\"middle\">" << format_fixed4(asr) << "</text>\n";
}

GridCell cell_from_json(const nlohmann::json& c) {
  return {c.at("asr").get<double>(), c.at("mean_query").get<double>(), c.at("n").get<std::size_t>()};
}

template <class Grid>
std::vector<std::filesystem::path> write_all(const Grid& grid, const std::filesystem::path& stem,
                                             const ReportFormats& formats,
                                             const ReportContext& context) {
  std::vector<std::filesystem::path> written;
  auto emit = [&](const std::string& ext, auto&& body) {
    auto path = stem;
    path += ext;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ReportError("report: cannot write '" + path.string() + "'");
    body(out);
    out.flush();
    if (!out) throw ReportError("report: write to '" + path.string() + "' failed");
    written.push_back(path);
  };
  if (formats.csv) emit(".csv", [&](std::ostream& o) { write_csv(o, grid); });
  if (formats.json) emit(".json", [&](std::ostream& o) { o << to_json(grid, context).dump(2) << '\n'; });
  if (formats.svg) emit(".svg", [&](std::ostream& o) { write_svg(o, grid); });
  return written;
}

}  // namespace

std::string format_fixed4(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed, 4);
  if (ec != std::errc()) throw ReportError("report: value out of range");
  std::string s(buf, ptr);
  if (s == "-0.0000") s = "0.0000";
  return s;
}

double quantize4(double value) { return parse_double(format_fixed4(value)); }

void write_csv(std::ostream& out, const AblationGrid& grid) {
  out << "w,ts,asr,mean_query,n\n";
  for (std::size_t wi = 0; wi < grid.w_values.size(); ++wi) {
    for (std::size_t ti = 0; ti < grid.ts_values.size(); ++ti) {
      const auto& c = grid.at(wi, ti);
      out << format_fixed4(grid.w_values[wi]) << ',' << format_fixed4(grid.ts_values[ti]) << ','
          << format_fixed4(c.asr) << ',' << format_fixed4(c.mean_query) << ',' << c.n_images << '\n';
    }
  }
}

void write_csv(std::ostream& out, const ColorGrid& grid) {
  out << "r,g,b,asr,mean_query,n\n";
  for (const auto& c : grid.cells) {
    out << c.color[0] << ',' << c.color[1] << ',' << c.color[2] << ',' << format_fixed4(c.result.asr)
        << ',' << format_fixed4(c.result.mean_query) << ',' << c.result.n_images << '\n';
  }
}

AblationGrid ablation_grid_from_csv(std::istream& in) {
  AblationGrid grid;
  for (const auto& row : read_rows(in, "w,ts,asr,mean_query,n")) {
    append_unique(grid.w_values, parse_double(row[0]));
    append_unique(grid.ts_values, parse_double(row[1]));
    grid.cells.push_back({parse_double(row[2]), parse_double(row[3]), parse_count(row[4])});
  }
  if (grid.cells.size() != grid.w_values.size() * grid.ts_values.size()) {
    throw ReportError("report: CSV rows do not form a full grid");
  }
  return grid;
}

ColorGrid color_grid_from_csv(std::istream& in) {
  ColorGrid grid;
  std::vector<double> channels;
  for (const auto& row : read_rows(in, "r,g,b,asr,mean_query,n")) {
    ColorCell cell;
    for (int c = 0; c < 3; ++c) {
      cell.color[c] = static_cast<int>(parse_count(row[c]));
      append_unique(channels, cell.color[c]);
    }
    cell.result = {parse_double(row[3]), parse_double(row[4]), parse_count(row[5])};
    grid.cells.push_back(cell);
  }
  std::sort(channels.begin(), channels.end());
  for (double v : channels) grid.channel_values.push_back(static_cast<int>(v));
  return grid;
}

nlohmann::json to_json(const AblationGrid& grid, const ReportContext& context) {
  nlohmann::json cells = nlohmann::json::array();
  std::size_t index = 0;
  for (std::size_t wi = 0; wi < grid.w_values.size(); ++wi) {
    for (std::size_t ti = 0; ti < grid.ts_values.size(); ++ti, ++index) {
      const auto& c = grid.at(wi, ti);
      cells.push_back({{"w", grid.w_values[wi]},
                       {"ts", grid.ts_values[ti]},
                       {"asr", c.asr},
                       {"mean_query", c.mean_query},
                       {"n", c.n_images},
                       {"seed", derive_seed(context.master_seed, index)}});
    }
  }
  return {{"grid", "w"},
          {"w_values", grid.w_values},
          {"ts_values", grid.ts_values},
          {"cells", cells},
          {"master_seed", context.master_seed},
          {"config", context.config}};
}

nlohmann::json to_json(const ColorGrid& grid, const ReportContext& context) {
  nlohmann::json cells = nlohmann::json::array();
  std::size_t index = 0;
  for (const auto& c : grid.cells) {
    cells.push_back({{"color", c.color},
                     {"asr", c.result.asr},
                     {"mean_query", c.result.mean_query},
                     {"n", c.result.n_images},
                     {"seed", derive_seed(context.master_seed, index++)}});
  }
  return {{"grid", "color"},
          {"channel_values", grid.channel_values},
          {"cells", cells},
          {"master_seed", context.master_seed},
          {"config", context.config}};
}

AblationGrid ablation_grid_from_json(const nlohmann::json& j) {
  try {
    if (j.at("grid") != "w") throw ReportError("report: not a width/opacity grid");
    AblationGrid grid;
    grid.w_values = j.at("w_values").get<std::vector<double>>();
    grid.ts_values = j.at("ts_values").get<std::vector<double>>();
    for (const auto& c : j.at("cells")) grid.cells.push_back(cell_from_json(c));
    if (grid.cells.size() != grid.w_values.size() * grid.ts_values.size()) {
      throw ReportError("report: cell count does not match the axes");
    }
    return grid;
  } catch (const nlohmann::json::exception& e) {
    throw ReportError(std::string("report: ") + e.what());
  }
}

ColorGrid color_grid_from_json(const nlohmann::json& j) {
  try {
    if (j.at("grid") != "color") throw ReportError("report: not a color grid");
    ColorGrid grid;
    grid.channel_values = j.at("channel_values").get<std::vector<int>>();
    for (const auto& c : j.at("cells")) {
      grid.cells.push_back({c.at("color").get<std::array<int, 3>>(), cell_from_json(c)});
    }
    return grid;
  } catch (const nlohmann::json::exception& e) {
    throw ReportError(std::string("report: ") + e.what());
  }
}

void write_svg(std::ostream& out, const AblationGrid& grid) {
  constexpr int kCell = 48, kLeft = 60, kTop = 40;
  const int cols = static_cast<int>(grid.ts_values.size());
  const int rows = static_cast<int>(grid.w_values.size());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kLeft + cols * kCell + 10
      << "\" height=\"" << kTop + rows * kCell + 10 << "\" font-family=\"sans-serif\">\n";
  out << "  <text x=\"" << kLeft << "\" y=\"14\" font-size=\"12\">ASR by width (rows) and opacity (columns)</text>\n";
  for (int t = 0; t < cols; ++t) {
    out << "  <text x=\"" << kLeft + t * kCell + kCell / 2 << "\" y=\"" << kTop - 6
        << "\" font-size=\"11\" text-anchor=\"middle\">" << format_fixed4(grid.ts_values[t]).substr(0, 4)
        << "</text>\n";
  }
  for (int w = 0; w < rows; ++w) {
    out << "  <text x=\"" << kLeft - 6 << "\" y=\"" << kTop + w * kCell + kCell / 2 + 4
        << "\" font-size=\"11\" text-anchor=\"end\">" << format_fixed4(grid.w_values[w]).substr(0, 4)
        << "</text>\n";
    for (int t = 0; t < cols; ++t) {
      const auto& c = grid.at(w, t);
      svg_cell(out, kLeft + t * kCell, kTop + w * kCell, kCell, c.asr,
               "w=" + format_fixed4(grid.w_values[w]) + " ts=" + format_fixed4(grid.ts_values[t]) +
                   " mean_query=" + format_fixed4(c.mean_query));
    }
  }
  out << "</svg>\n";
}

void write_svg(std::ostream& out, const ColorGrid& grid) {
  constexpr int kCell = 48, kLeft = 60, kTop = 40;
  const int n = static_cast<int>(grid.channel_values.size());
  const int cols = std::max(1, n * n);
  const int rows = grid.cells.empty() ? 0 : (static_cast<int>(grid.cells.size()) + cols - 1) / cols;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kLeft + cols * kCell + 10
      << "\" height=\"" << kTop + rows * kCell + 10 << "\" font-family=\"sans-serif\">\n";
  out << "  <text x=\"" << kLeft << "\" y=\"14\" font-size=\"12\">ASR by red (rows) and green/blue (columns)</text>\n";
  for (int i = 0; i < static_cast<int>(grid.cells.size()); ++i) {
    const auto& c = grid.cells[i];
    const int row = i / cols, col = i % cols;
    if (col == 0) {
      out << "  <text x=\"" << kLeft - 6 << "\" y=\"" << kTop + row * kCell + kCell / 2 + 4
          << "\" font-size=\"11\" text-anchor=\"end\">r=" << c.color[0] << "</text>\n";
    }
    svg_cell(out, kLeft + col * kCell, kTop + row * kCell, kCell, c.result.asr,
             "rgb(" + std::to_string(c.color[0]) + "," + std::to_string(c.color[1]) + "," +
                 std::to_string(c.color[2]) + ") mean_query=" + format_fixed4(c.result.mean_query));
  }
  out << "</svg>\n";
}

std::vector<std::filesystem::path> write_report(const AblationGrid& grid,
                                                const std::filesystem::path& stem,
                                                const ReportFormats& formats,
                                                const ReportContext& context) {
  return write_all(grid, stem, formats, context);
}

std::vector<std::filesystem::path> write_report(const ColorGrid& grid,
                                                const std::filesystem::path& stem,
                                                const ReportFormats& formats,
                                                const ReportContext& context) {
  return write_all(grid, stem, formats, context);
}

}  // namespace adcp
