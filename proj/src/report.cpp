#include "subgradfed/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "subgradfed/error.hpp"

namespace subgradfed {

namespace {

constexpr double kWidth = 800.0;
constexpr double kHeight = 500.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 220.0;
constexpr double kTop = 30.0;
constexpr double kBottom = 60.0;

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_cell(const std::string& cell) {
  if (cell.empty()) return std::numeric_limits<double>::quiet_NaN();
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (end == cell.c_str()) return std::numeric_limits<double>::quiet_NaN();
  return v;
}

std::string fmt(const char* pattern, double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

}  // namespace

std::size_t MetricsTable::column(const std::string& name) const {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ConfigError("CSV has no column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

MetricsTable read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  MetricsTable table;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path.string() + ": empty CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  table.header = split_csv_line(line);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    std::vector<double> row(table.header.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t c = 0; c < std::min(cells.size(), row.size()); ++c) row[c] = parse_cell(cells[c]);
    table.rows.push_back(std::move(row));
  }
  return table;
}

Curve curve_from_table(const MetricsTable& table, const std::string& label,
                       const std::string& source, const std::string& y_column) {
  const std::size_t xc = table.column("bits_per_worker");
  const std::size_t yc = table.column(y_column);
  Curve curve;
  curve.label = label;
  curve.source = source;
  curve.final_value = std::numeric_limits<double>::quiet_NaN();
  for (const auto& row : table.rows) {
    const double x = row[xc];
    const double y = row[yc];
    if (std::isfinite(x) && std::isfinite(y) && y > 0.0) {
      curve.x.push_back(x);
      curve.y.push_back(y);
    } else {
      ++curve.dropped;
    }
  }
  if (!table.rows.empty() && std::isfinite(table.rows.back()[yc])) {
    curve.final_value = table.rows.back()[yc];
  }
  return curve;
}

std::vector<Curve> load_curves(const std::vector<std::filesystem::path>& inputs,
                               const std::string& y_column) {
  std::vector<Curve> curves;
  for (const auto& input : inputs) {
    if (input.extension() == ".json") {
      std::ifstream in(input, std::ios::binary);
      if (!in) throw IoError("cannot open " + input.string());
      nlohmann::json manifest;
      try {
        manifest = nlohmann::json::parse(in);
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError(input.string() + ": " + e.what());
      }
      if (!manifest.contains("cells") || !manifest["cells"].is_array()) {
        throw ConfigError(input.string() + ": manifest has no cells array");
      }
      const auto base = input.parent_path();
      for (const auto& cell : manifest["cells"]) {
        if (!cell.contains("csv_path")) continue;
        const auto csv = base / cell["csv_path"].get<std::string>();
        std::ostringstream label;
        label << cell.value("label", std::string("run")) << " d=" << cell.value("d", 0)
              << " n=" << cell.value("n", 0) << " s=" << fmt("%g", cell.value("s", 0.0))
              << " seed=" << cell.value("seed", std::uint64_t{0});
        curves.push_back(curve_from_table(read_metrics_csv(csv), label.str(),
                                          cell["csv_path"].get<std::string>(), y_column));
      }
    } else {
      curves.push_back(curve_from_table(read_metrics_csv(input), input.stem().string(),
                                        input.string(), y_column));
    }
  }
  return curves;
}

std::string render_svg(const std::vector<Curve>& curves) {
  double x_max = 0.0;
  double y_lo = std::numeric_limits<double>::infinity();
  double y_hi = -std::numeric_limits<double>::infinity();
  for (const auto& c : curves) {
    for (std::size_t i = 0; i < c.x.size(); ++i) {
      x_max = std::max(x_max, c.x[i]);
      const double ly = std::log10(c.y[i]);
      y_lo = std::min(y_lo, ly);
      y_hi = std::max(y_hi, ly);
    }
  }
  if (!(x_max > 0.0)) x_max = 1.0;
  if (!std::isfinite(y_lo)) {
    y_lo = -1.0;
    y_hi = 0.0;
  }
  y_lo = std::floor(y_lo);
  y_hi = std::ceil(y_hi);
  if (y_hi <= y_lo) y_hi = y_lo + 1.0;

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + plot_w * (x / x_max); };
  auto py = [&](double ly) { return kTop + plot_h * (y_hi - ly) / (y_hi - y_lo); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << plot_w << "\" height=\""
      << plot_h << "\" fill=\"none\" stroke=\"black\"/>\n";

  for (double e = y_lo; e <= y_hi + 0.5; e += 1.0) {
    const std::string y = fmt("%.2f", py(e));
    svg << "<line x1=\"" << kLeft << "\" y1=\"" << y << "\" x2=\"" << kLeft + plot_w << "\" y2=\""
        << y << "\" stroke=\"#dddddd\"/>\n";
    svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << y
        << "\" text-anchor=\"end\" dominant-baseline=\"middle\">1e" << fmt("%.0f", e)
        << "</text>\n";
  }
  for (int i = 0; i <= 4; ++i) {
    const double xv = x_max * i / 4.0;
    const std::string x = fmt("%.2f", px(xv));
    svg << "<text x=\"" << x << "\" y=\"" << kTop + plot_h + 18
        << "\" text-anchor=\"middle\">" << fmt("%.3g", xv) << "</text>\n";
  }
  svg << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 15
      << "\" text-anchor=\"middle\">bits/n</text>\n";
  svg << "<text x=\"20\" y=\"" << kTop + plot_h / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 20 "
      << kTop + plot_h / 2 << ")\">f(x)−f(x*)</text>\n";

  for (std::size_t k = 0; k < curves.size(); ++k) {
    const auto& c = curves[k];
    const char* color = kPalette[k % std::size(kPalette)];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < c.x.size(); ++i) {
      if (i) svg << ' ';
      svg << fmt("%.2f", px(c.x[i])) << ',' << fmt("%.2f", py(std::log10(c.y[i])));
    }
    svg << "\"/>\n";
    const double ly = kTop + 10 + 16.0 * static_cast<double>(k);
    const double lx = kLeft + plot_w + 10;
    svg << "<line x1=\"" << lx << "\" y1=\"" << ly << "\" x2=\"" << lx + 20 << "\" y2=\"" << ly
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << lx + 26 << "\" y=\"" << ly << "\" dominant-baseline=\"middle\" font-size=\"10\">"
        << xml_escape(c.label) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

nlohmann::json report_summary(const std::vector<Curve>& curves) {
  auto arr = nlohmann::json::array();
  for (const auto& c : curves) {
    nlohmann::json j = {{"label", c.label},
                        {"source", c.source},
                        {"points", c.x.size()},
                        {"dropped", c.dropped}};
    j["final_subopt"] = std::isfinite(c.final_value) ? nlohmann::json(c.final_value) : nlohmann::json();
    arr.push_back(std::move(j));
  }
  return {{"curves", arr}};
}

}  // namespace subgradfed
