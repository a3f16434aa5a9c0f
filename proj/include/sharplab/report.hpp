#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sharplab/records.hpp"

namespace sharplab {

using MetricPair = std::pair<std::string, std::string>;

/// (sharpness | normalized_norm | raw_norm) × (test_acc | test_loss), plus depth vs sharpness.
std::vector<MetricPair> default_metric_pairs();

/// Reference correlation for this (family, x, y), when one exists.
std::optional<double> reference_correlation(std::string_view family, std::string_view x,
                                            std::string_view y);

struct CorrelationEntry {
  std::string family;
  std::string x_metric;
  std::string y_metric;
  std::size_t n = 0;
  std::optional<double> r;
  std::optional<double> reference;
  /// Set instead of `r` when the correlation cannot be computed.
  std::string error;
};

struct CorrelationTable {
  std::vector<CorrelationEntry> entries;

  const CorrelationEntry* find(std::string_view family, std::string_view x, std::string_view y) const;
  std::string to_text() const;
  nlohmann::json to_json() const;
};

/// One entry per (family, pair), families in lexicographic order, using only
/// records whose status is "ok". Failing pairs carry an error message and do
/// not stop the others.
CorrelationTable correlation_report(const std::vector<RunRecord>& records,
                                    const std::vector<MetricPair>& pairs = default_metric_pairs());

struct ScatterSpec {
  std::string x_column;
  std::string y_column;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  std::string title;
};

/// Tick positions: whole decades covering [lo, hi] for log axes, otherwise
/// 1/2/5×10ᵏ steps covering [lo, hi].
std::vector<double> axis_ticks(double lo, double hi, bool log_scale);

/// Self-contained SVG 1.1 document, one circle per record, with the Pearson r
/// of the plotted columns in the title. Output depends only on the inputs.
std::string render_scatter(const std::vector<RunRecord>& records, const ScatterSpec& spec);
/// Two panels side by side in one document.
std::string render_scatter_pair(const std::vector<RunRecord>& records, const ScatterSpec& left,
                                const ScatterSpec& right);

struct FigureDef {
  std::string name;          // e.g. "sharpness-vs-acc" or "f4"
  std::string figure_id;     // "f1", "f2", … or "auxiliary"
  std::vector<ScatterSpec> panels;
};

/// Names: norm-vs-loss, norm-vs-acc, sharpness-vs-acc, sharpness-vs-loss,
/// depth-vs-sharpness, and the figure ids f1, f2, f3, f4, f6, f8, f10.
std::optional<FigureDef> find_figure(std::string_view name);
std::vector<std::string> figure_names();

/// Renders a registry figure for `records` (already filtered by the caller).
std::string render_figure(const std::vector<RunRecord>& records, const FigureDef& figure);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace sharplab
