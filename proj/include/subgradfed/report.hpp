#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace subgradfed {

/// A metrics CSV as read back from disk; cells that are empty or do not
/// parse become NaN.
struct MetricsTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Index of a column, or throws ConfigError.
  std::size_t column(const std::string& name) const;
};

MetricsTable read_metrics_csv(const std::filesystem::path& path);

struct Curve {
  std::string label;
  std::string source;
  std::vector<double> x;  // bits per worker
  std::vector<double> y;  // suboptimality, finite and > 0
  std::size_t dropped = 0;
  double final_value = 0.0;  // last row of the column, NaN if not finite
};

/// Builds a curve from the bits_per_worker column and `y_column`.
Curve curve_from_table(const MetricsTable& table, const std::string& label,
                       const std::string& source, const std::string& y_column = "f_subopt_w");

/// Expands report inputs: a manifest.json contributes every cell that has a
/// csv_path (labelled by its cell), a CSV contributes itself.
std::vector<Curve> load_curves(const std::vector<std::filesystem::path>& inputs,
                               const std::string& y_column = "f_subopt_w");

/// Self-contained SVG, x linear in bits/n, y = log10 suboptimality.
std::string render_svg(const std::vector<Curve>& curves);

nlohmann::json report_summary(const std::vector<Curve>& curves);

}  // namespace subgradfed
