#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace sharplab {

/// One trained (or solved) model and its measurements: the row type of every
/// results CSV.
///
/// For network families `param_target` is the parameter budget of the grid
/// cell. For linear-sweep rows (`family == "linear"`) it holds the anchor's
/// target Frobenius norm, `units` is the feature dimension, `seed_init` the
/// anchor seed and `seed_shuffle` the feature-map seed, which is everything
/// needed to replay the row.
struct RunRecord {
  std::string family;
  std::size_t depth = 0;
  double param_target = 0.0;
  std::size_t units = 0;
  std::size_t realized_params = 0;
  std::uint64_t seed_init = 0;
  std::uint64_t seed_shuffle = 0;
  double raw_norm = 0.0;
  double normalized_norm = 0.0;
  double sharpness = 0.0;
  /// "<inputs>/<endpoint>", e.g. "train/softmax" or "train/logits".
  std::string sharpness_basis;
  double test_acc = 0.0;
  double test_loss = 0.0;
  double train_acc = 0.0;
  double train_loss = 0.0;
  /// "ok", or "diverged" for runs excluded from correlations.
  std::string status = "ok";
  double wall_time_s = 0.0;

  bool ok() const { return status == "ok"; }
  bool operator==(const RunRecord&) const = default;
};

inline constexpr std::array<std::string_view, 17> kRunColumns = {
    "family",  "depth",          "param_target",    "units",       "realized_params",
    "seed_init", "seed_shuffle", "raw_norm",        "normalized_norm", "sharpness",
    "sharpness_basis", "test_acc", "test_loss",     "train_acc",   "train_loss",
    "status",  "wall_time_s"};

/// Numeric column value by name (depth, units, norms, metrics, …).
double numeric_field(const RunRecord& r, std::string_view column);

/// Header row plus one row per record; doubles with 17 significant digits.
void write_runs(std::ostream& out, const std::vector<RunRecord>& records);
void write_runs(const std::vector<RunRecord>& records, const std::filesystem::path& path);

/// Columns are matched by header name, in any order. Throws ParseError with
/// 1-based row/column coordinates (row 1 is the header).
std::vector<RunRecord> read_runs(std::istream& in);
std::vector<RunRecord> read_runs(const std::filesystem::path& path);

}  // namespace sharplab
