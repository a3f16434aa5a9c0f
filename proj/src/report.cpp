#include "sharplab/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "sharplab/error.hpp"
#include "sharplab/numkit.hpp"

namespace sharplab {

std::vector<MetricPair> default_metric_pairs() {
  return {{"sharpness", "test_acc"},  {"normalized_norm", "test_acc"}, {"raw_norm", "test_acc"},
          {"sharpness", "test_loss"}, {"normalized_norm", "test_loss"}, {"raw_norm", "test_loss"},
          {"depth", "sharpness"}};
}

std::optional<double> reference_correlation(std::string_view family, std::string_view x, std::string_view y) {
  struct Ref {
    std::string_view family, x, y;
    double r;
  };
  static constexpr Ref refs[] = {
      {"linear", "normalized_norm", "test_loss", 0.965},
      {"linear", "sharpness", "test_acc", -0.995},
      {"tanh_softmax_xent", "sharpness", "test_acc", -0.901},
      {"tanh_softmax_xent", "normalized_norm", "test_acc", -0.390},
      {"relu_softmax_xent", "sharpness", "test_acc", -0.756},
      {"relu_linear_sq", "sharpness", "test_loss", 0.831},
  };
  for (const auto& ref : refs)
    if (ref.family == family && ref.x == x && ref.y == y) return ref.r;
  return std::nullopt;
}

const CorrelationEntry* CorrelationTable::find(std::string_view family, std::string_view x,
                                               std::string_view y) const {
  for (const auto& e : entries)
    if (e.family == family && e.x_metric == x && e.y_metric == y) return &e;
  return nullptr;
}

namespace {

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string CorrelationTable::to_text() const {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-18s %-16s %-10s %4s %9s %9s\n", "family", "x", "y", "n", "r",
                "reference");
  out << line;
  for (const auto& e : entries) {
    const std::string r = e.r ? fmt("%+.3f", *e.r) : "n/a";
    const std::string ref = e.reference ? fmt("%+.3f", *e.reference) : "-";
    std::snprintf(line, sizeof line, "%-18s %-16s %-10s %4zu %9s %9s", e.family.c_str(), e.x_metric.c_str(),
                  e.y_metric.c_str(), e.n, r.c_str(), ref.c_str());
    out << line;
    if (!e.error.empty()) out << "  (" << e.error << ")";
    out << '\n';
  }
  return out.str();
}

nlohmann::json CorrelationTable::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& e : entries) {
    rows.push_back({{"family", e.family},
                    {"x", e.x_metric},
                    {"y", e.y_metric},
                    {"n", e.n},
                    {"r", e.r ? nlohmann::json(*e.r) : nlohmann::json(nullptr)},
                    {"reference", e.reference ? nlohmann::json(*e.reference) : nlohmann::json(nullptr)},
                    {"error", e.error.empty() ? nlohmann::json(nullptr) : nlohmann::json(e.error)}});
  }
  return {{"format", "sharplab-correlations"}, {"version", 1}, {"entries", rows}};
}

CorrelationTable correlation_report(const std::vector<RunRecord>& records, const std::vector<MetricPair>& pairs) {
  std::map<std::string, std::vector<const RunRecord*>> by_family;
  for (const auto& r : records)
    if (r.ok()) by_family[r.family].push_back(&r);

  CorrelationTable table;
  for (const auto& [family, rows] : by_family) {
    for (const auto& [x, y] : pairs) {
      CorrelationEntry e{family, x, y, rows.size(), std::nullopt, reference_correlation(family, x, y), {}};
      try {
        std::vector<double> xs, ys;
        for (const RunRecord* r : rows) {
          xs.push_back(numeric_field(*r, x));
          ys.push_back(numeric_field(*r, y));
        }
        e.r = pearson(xs, ys);
      } catch (const Error& err) {
        e.error = err.what();
      }
      table.entries.push_back(std::move(e));
    }
  }
  return table;
}

std::vector<double> axis_ticks(double lo, double hi, bool log_scale) {
  if (!(hi >= lo)) throw ParameterError("axis_ticks: empty range");
  std::vector<double> ticks;
  if (log_scale) {
    if (!(lo > 0.0)) throw ParameterError("axis_ticks: log axis needs positive values");
    const int first = static_cast<int>(std::floor(std::log10(lo)));
    int last = static_cast<int>(std::ceil(std::log10(hi)));
    if (last == first) ++last;
    for (int k = first; k <= last; ++k) ticks.push_back(std::pow(10.0, k));
    return ticks;
  }
  if (hi == lo) {
    const double pad = lo == 0.0 ? 1.0 : std::abs(lo) * 0.1;
    lo -= pad;
    hi += pad;
  }
  const double raw = (hi - lo) / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = 10.0 * mag;
  for (double m : {1.0, 2.0, 5.0}) {
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  }
  const double first = std::floor(lo / step);
  const double last = std::ceil(hi / step);
  for (double k = first; k <= last + 0.5; k += 1.0) {
    double t = k * step;
    if (std::abs(t) < step * 1e-9) t = 0.0;
    ticks.push_back(t);
  }
  return ticks;
}

namespace {

constexpr double kPanelWidth = 480.0;
constexpr double kPanelHeight = 360.0;
constexpr double kLeft = 72.0;
constexpr double kRight = 20.0;
constexpr double kTop = 44.0;
constexpr double kBottom = 52.0;

std::string tick_label(double v, double step, bool log_scale) {
  if (log_scale || v == 0.0) return fmt("%g", v);
  const int decimals = std::max(0, -static_cast<int>(std::floor(std::log10(step) + 1e-9)));
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

struct Axis {
  double lo, hi;
  bool log_scale;
  std::vector<double> ticks;

  double unit(double v) const {
    if (log_scale) return (std::log10(v) - std::log10(lo)) / (std::log10(hi) - std::log10(lo));
    return (v - lo) / (hi - lo);
  }
};

Axis make_axis(const std::vector<double>& values, bool log_scale, const std::string& column) {
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  if (log_scale && !(*mn > 0.0)) {
    throw ParameterError("render_scatter: log axis for '" + column + "' needs positive values");
  }
  Axis a{0, 0, log_scale, axis_ticks(*mn, *mx, log_scale)};
  a.lo = a.ticks.front();
  a.hi = a.ticks.back();
  return a;
}

void render_panel(std::ostringstream& svg, const std::vector<RunRecord>& records, const ScatterSpec& spec,
                  double x_offset) {
  std::vector<double> xs, ys;
  for (const auto& r : records) {
    xs.push_back(numeric_field(r, spec.x_column));
    ys.push_back(numeric_field(r, spec.y_column));
  }
  std::string r_text = "r = n/a";
  try {
    r_text = "r = " + fmt("%.3f", pearson(xs, ys));
  } catch (const Error&) {
  }
  const Axis ax = make_axis(xs, spec.log_x, spec.x_column);
  const Axis ay = make_axis(ys, spec.log_y, spec.y_column);
  const double plot_w = kPanelWidth - kLeft - kRight;
  const double plot_h = kPanelHeight - kTop - kBottom;
  auto px = [&](double v) { return x_offset + kLeft + ax.unit(v) * plot_w; };
  auto py = [&](double v) { return kTop + (1.0 - ay.unit(v)) * plot_h; };

  svg << "<g>\n";
  svg << "<text x=\"" << fmt("%.1f", x_offset + kPanelWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-size=\"14\">" << xml_escape(spec.title.empty() ? spec.y_column + " vs " + spec.x_column : spec.title)
      << " (" << r_text << ", n = " << records.size() << ")</text>\n";
  svg << "<rect x=\"" << fmt("%.1f", x_offset + kLeft) << "\" y=\"" << fmt("%.1f", kTop) << "\" width=\""
      << fmt("%.1f", plot_w) << "\" height=\"" << fmt("%.1f", plot_h)
      << "\" fill=\"none\" stroke=\"black\"/>\n";

  const double xstep = ax.ticks.size() > 1 ? ax.ticks[1] - ax.ticks[0] : 1.0;
  for (double t : ax.ticks) {
    const double x = px(t);
    svg << "<line x1=\"" << fmt("%.1f", x) << "\" y1=\"" << fmt("%.1f", kTop + plot_h) << "\" x2=\""
        << fmt("%.1f", x) << "\" y2=\"" << fmt("%.1f", kTop + plot_h + 5) << "\" stroke=\"black\"/>\n";
    svg << "<text class=\"xtick\" x=\"" << fmt("%.1f", x) << "\" y=\"" << fmt("%.1f", kTop + plot_h + 18)
        << "\" text-anchor=\"middle\" font-size=\"11\">" << tick_label(t, xstep, ax.log_scale) << "</text>\n";
  }
  const double ystep = ay.ticks.size() > 1 ? ay.ticks[1] - ay.ticks[0] : 1.0;
  for (double t : ay.ticks) {
    const double y = py(t);
    svg << "<line x1=\"" << fmt("%.1f", x_offset + kLeft - 5) << "\" y1=\"" << fmt("%.1f", y) << "\" x2=\""
        << fmt("%.1f", x_offset + kLeft) << "\" y2=\"" << fmt("%.1f", y) << "\" stroke=\"black\"/>\n";
    svg << "<text class=\"ytick\" x=\"" << fmt("%.1f", x_offset + kLeft - 8) << "\" y=\"" << fmt("%.1f", y + 4)
        << "\" text-anchor=\"end\" font-size=\"11\">" << tick_label(t, ystep, ay.log_scale) << "</text>\n";
  }
  svg << "<text x=\"" << fmt("%.1f", x_offset + kLeft + plot_w / 2) << "\" y=\""
      << fmt("%.1f", kPanelHeight - 12) << "\" text-anchor=\"middle\" font-size=\"12\">"
      << xml_escape(spec.x_label.empty() ? spec.x_column : spec.x_label) << "</text>\n";
  svg << "<text transform=\"translate(" << fmt("%.1f", x_offset + 16) << ","
      << fmt("%.1f", kTop + plot_h / 2) << ") rotate(-90)\" text-anchor=\"middle\" font-size=\"12\">"
      << xml_escape(spec.y_label.empty() ? spec.y_column : spec.y_label) << "</text>\n";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    svg << "<circle cx=\"" << fmt("%.2f", px(xs[i])) << "\" cy=\"" << fmt("%.2f", py(ys[i]))
        << "\" r=\"3.5\" fill=\"#1f77b4\" fill-opacity=\"0.75\"/>\n";
  }
  svg << "</g>\n";
}

std::string render_panels(const std::vector<RunRecord>& records, const std::vector<ScatterSpec>& panels) {
  if (records.empty()) throw ParameterError("render_scatter: no records to plot");
  if (panels.empty()) throw ParameterError("render_scatter: no panels");
  const double width = kPanelWidth * static_cast<double>(panels.size());
  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << fmt("%.0f", width)
      << "\" height=\"" << fmt("%.0f", kPanelHeight) << "\" viewBox=\"0 0 " << fmt("%.0f", width) << " "
      << fmt("%.0f", kPanelHeight) << "\" font-family=\"sans-serif\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t i = 0; i < panels.size(); ++i) {
    render_panel(svg, records, panels[i], kPanelWidth * static_cast<double>(i));
  }
  svg << "</svg>\n";
  return svg.str();
}

ScatterSpec scatter(std::string x, std::string y, std::string x_label, std::string y_label, bool log_x = false) {
  ScatterSpec s{std::move(x), std::move(y), std::move(x_label), std::move(y_label), log_x, false, {}};
  return s;
}

}  // namespace

std::string render_scatter(const std::vector<RunRecord>& records, const ScatterSpec& spec) {
  return render_panels(records, {spec});
}

std::string render_scatter_pair(const std::vector<RunRecord>& records, const ScatterSpec& left,
                                const ScatterSpec& right) {
  return render_panels(records, {left, right});
}

std::optional<FigureDef> find_figure(std::string_view name) {
  const ScatterSpec norm_loss = scatter("normalized_norm", "test_loss", "normalized weight norm", "test loss");
  const ScatterSpec norm_acc = scatter("normalized_norm", "test_acc", "normalized weight norm", "test accuracy");
  const ScatterSpec sharp_acc = scatter("sharpness", "test_acc", "output sharpness", "test accuracy");
  const ScatterSpec sharp_loss = scatter("sharpness", "test_loss", "output sharpness", "test loss");
  const ScatterSpec depth_sharp = scatter("depth", "sharpness", "hidden layers", "output sharpness");

  if (name == "norm-vs-loss") return FigureDef{"norm-vs-loss", "auxiliary", {norm_loss}};
  if (name == "norm-vs-acc") return FigureDef{"norm-vs-acc", "auxiliary", {norm_acc}};
  if (name == "sharpness-vs-acc") return FigureDef{"sharpness-vs-acc", "auxiliary", {sharp_acc}};
  if (name == "sharpness-vs-loss") return FigureDef{"sharpness-vs-loss", "auxiliary", {sharp_loss}};
  if (name == "depth-vs-sharpness") return FigureDef{"depth-vs-sharpness", "auxiliary", {depth_sharp}};
  if (name == "f1") return FigureDef{"f1", "f1", {norm_loss}};
  if (name == "f2") return FigureDef{"f2", "f2", {norm_acc}};
  if (name == "f3") return FigureDef{"f3", "f3", {sharp_acc}};
  if (name == "f4" || name == "f6") return FigureDef{std::string(name), std::string(name), {norm_acc, sharp_acc}};
  if (name == "f8") return FigureDef{"f8", "f8", {norm_loss, sharp_loss}};
  if (name == "f10") return FigureDef{"f10", "f10", {depth_sharp}};
  return std::nullopt;
}

std::vector<std::string> figure_names() {
  return {"norm-vs-loss", "norm-vs-acc", "sharpness-vs-acc", "sharpness-vs-loss", "depth-vs-sharpness",
          "f1", "f2", "f3", "f4", "f6", "f8", "f10"};
}

std::string render_figure(const std::vector<RunRecord>& records, const FigureDef& figure) {
  return render_panels(records, figure.panels);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write to " + path.string() + " failed");
}

}  // namespace sharplab
