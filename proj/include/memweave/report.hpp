#pragma once

// Speedup tables, geometric means, normalized bandwidth tables and
// bandwidth-latency curve output (CSV + SVG).

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "json.hpp"
#include "memweave/analytic.hpp"
#include "memweave/calibration.hpp"
#include "memweave/csv.hpp"
#include "memweave/error.hpp"
#include "memweave/policy.hpp"

namespace memweave {

enum class MetricDirection { lower_is_better, higher_is_better };

/// One workload's results: a DRAM-only baseline and one value per weight vector.
struct SpeedupRow {
  std::string workload;
  std::string metric;
  MetricDirection direction = MetricDirection::lower_is_better;
  double baseline = 0.0;
  std::vector<std::pair<InterleaveWeights, double>> variants;

  void validate() const {
    if (!(baseline > 0.0)) {
      throw ValidationError(fmt::format("{}: baseline must be > 0", workload));
    }
    for (const auto& [w, v] : variants) {
      if (!(v > 0.0)) {
        throw ValidationError(fmt::format("{}: value for {} must be > 0", workload, w.label()));
      }
    }
  }
};

/// Half-away-from-zero rounding to four decimals, the internal speedup precision.
inline double round4(double x) { return std::round(x * 1e4) / 1e4; }

/// Two-decimal rendering used in every table.
inline std::string render2(double x) { return fmt::format("{:.2f}", x); }

struct Speedup {
  InterleaveWeights weights;
  double value;
};

/// Speedup of each variant over the baseline, DRAM-only baseline first (1.0).
inline std::vector<Speedup> speedups(const SpeedupRow& row) {
  row.validate();
  std::vector<Speedup> out;
  std::vector<std::uint32_t> base(row.variants.empty() ? 2 : row.variants.front().first.size(), 0);
  base[0] = 1;
  out.push_back({InterleaveWeights(base), 1.0});
  for (const auto& [w, v] : row.variants) {
    const double s = row.direction == MetricDirection::lower_is_better ? row.baseline / v
                                                                       : v / row.baseline;
    out.push_back({w, round4(s)});
  }
  return out;
}

/// Highest variant speedup; ties prefer the simpler weight vector.
inline Speedup best_speedup(const SpeedupRow& row) {
  auto all = speedups(row);
  if (all.size() == 1) return all.front();
  auto best = all.begin() + 1;
  for (auto it = best + 1; it != all.end(); ++it) {
    if (it->value > best->value ||
        (it->value == best->value && detail::tie_break_less(it->weights, best->weights))) {
      best = it;
    }
  }
  return *best;
}

inline double geomean(std::span<const double> values) {
  if (values.empty()) throw ValidationError("geomean of an empty list");
  double log_sum = 0.0;
  for (double v : values) {
    if (!(v > 0.0)) throw ValidationError(fmt::format("geomean: nonpositive value {}", v));
    log_sum += std::log(v);
  }
  return std::exp(log_sum / static_cast<double>(values.size()));
}

struct SummaryReport {
  std::vector<SpeedupRow> rows;
  std::vector<Speedup> best;  // per row
  double geomean_best = 1.0;
};

inline SummaryReport summarize(std::vector<SpeedupRow> rows) {
  SummaryReport s;
  std::vector<double> values;
  for (const auto& row : rows) {
    s.best.push_back(best_speedup(row));
    values.push_back(s.best.back().value);
  }
  s.geomean_best = geomean(values);
  s.rows = std::move(rows);
  return s;
}

inline std::vector<SpeedupRow> parse_workloads(const nlohmann::ordered_json& doc,
                                               std::string_view source) {
  if (!doc.is_array()) throw ParseError(fmt::format("{}: top level must be an array", source));
  std::vector<SpeedupRow> rows;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& j = doc[i];
    const std::string where = fmt::format("{}: [{}]", source, i);
    if (!j.is_object()) throw ParseError(where + ": not an object");
    SpeedupRow row;
    row.workload = std::string(detail::require_string(j, "workload", where));
    row.metric = std::string(detail::require_string(j, "metric", where));
    if (row.metric != "time_s" && row.metric != "ms_per_query" && row.metric != "gflops" &&
        row.metric != "token_ms") {
      throw ParseError(fmt::format("{}: unknown metric '{}'", where, row.metric));
    }
    const auto dir = detail::require_string(j, "direction", where);
    if (dir == "lower") {
      row.direction = MetricDirection::lower_is_better;
    } else if (dir == "higher") {
      row.direction = MetricDirection::higher_is_better;
    } else {
      throw ParseError(fmt::format("{}: direction must be 'lower' or 'higher'", where));
    }
    row.baseline = detail::require_number(j, "baseline", where);
    if (!j.contains("variants") || !j.at("variants").is_object()) {
      throw ParseError(where + ": missing 'variants' object");
    }
    for (const auto& [key, value] : j.at("variants").items()) {
      if (!value.is_number()) {
        throw ParseError(fmt::format("{}: variant '{}' must be a number", where, key));
      }
      row.variants.emplace_back(parse_weights(key), value.get<double>());
    }
    row.validate();
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::vector<SpeedupRow> load_workloads(const std::filesystem::path& path) {
  const auto text = detail::read_file(path);
  return parse_workloads(detail::parse_json(text, path.string()), path.string());
}

// --- bandwidth tables -------------------------------------------------------

struct TableRow {
  InterleaveWeights weights;
  double gbps;
  double normalized;
};

/// Normalizes each bandwidth to the tier-0-only row, which must be present.
inline std::vector<TableRow> normalize_table(
    std::span<const std::pair<InterleaveWeights, double>> rows) {
  const auto is_baseline = [](const InterleaveWeights& w) {
    for (std::size_t i = 1; i < w.size(); ++i) {
      if (w.active(i)) return false;
    }
    return true;
  };
  const auto base = std::find_if(rows.begin(), rows.end(),
                                 [&](const auto& r) { return is_baseline(r.first); });
  if (base == rows.end()) throw ValidationError("table needs a tier-0-only baseline row, e.g. 1,0");
  std::vector<TableRow> out;
  for (const auto& [w, gbps] : rows) {
    out.push_back({w, gbps, is_baseline(w) ? 1.0 : gbps / base->second});
  }
  return out;
}

/// Predicted bandwidth for each weight vector, normalized to the (1,0) row.
inline std::vector<TableRow> mlc_table(const ProfileSet& profiles, const WorkloadMix& mix,
                                       std::span<const InterleaveWeights> weights) {
  std::vector<std::pair<InterleaveWeights, double>> rows;
  for (const auto& w : weights) rows.emplace_back(w, predict_bandwidth(profiles, w, mix).aggregate_gbps);
  return normalize_table(rows);
}

/// A measured weight sweep for one mix.
struct MeasuredTable {
  std::string label;
  WorkloadMix mix;
  std::vector<std::pair<InterleaveWeights, double>> rows;
};

inline std::vector<MeasuredTable> load_measured_tables(const std::filesystem::path& path) {
  const auto text = detail::read_file(path);
  const auto doc = detail::parse_json(text, path.string());
  if (!doc.is_array()) throw ParseError(fmt::format("{}: top level must be an array", path.string()));
  std::vector<MeasuredTable> out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& j = doc[i];
    const std::string where = fmt::format("{}: [{}]", path.string(), i);
    MeasuredTable t{std::string(detail::require_string(j, "label", where)),
                    parse_mix(detail::require_string(j, "mix", where)),
                    {}};
    if (!j.contains("rows") || !j.at("rows").is_array()) throw ParseError(where + ": missing 'rows'");
    for (const auto& r : j.at("rows")) {
      t.rows.emplace_back(parse_weights(detail::require_string(r, "weights", where)),
                          detail::require_number(r, "gbps", where));
    }
    out.push_back(std::move(t));
  }
  return out;
}

// --- curves -----------------------------------------------------------------

struct CurvePoint {
  double gbps;
  double latency_ns;
  std::string label;
};

inline std::string curve_csv(std::span<const CurvePoint> points) {
  std::string out = "gbps,ns,label\n";
  for (const auto& p : points) {
    out += fmt::format("{:.4f},{:.4f},{}\n", p.gbps, p.latency_ns, csv_field(p.label));
  }
  return out;
}

namespace detail {

inline std::string xml_escape(std::string_view s) {
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

// Rounds the axis maximum up to 1, 2 or 5 times a power of ten.
inline double nice_ceiling(double x) {
  if (!(x > 0.0)) return 1.0;
  const double mag = std::pow(10.0, std::floor(std::log10(x)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (m * mag >= x) return m * mag;
  }
  return 10.0 * mag;
}

}  // namespace detail

inline std::string curve_svg(std::span<const CurvePoint> points, std::string_view title = {}) {
  constexpr double width = 720, height = 480;
  constexpr double left = 70, right = 30, top = 40, bottom = 60;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;

  double max_x = 0.0, max_y = 0.0;
  for (const auto& p : points) {
    max_x = std::max(max_x, p.gbps);
    max_y = std::max(max_y, p.latency_ns);
  }
  max_x = detail::nice_ceiling(max_x * 1.05);
  max_y = detail::nice_ceiling(max_y * 1.05);
  auto sx = [&](double x) { return left + x / max_x * plot_w; };
  auto sy = [&](double y) { return top + plot_h - y / max_y * plot_h; };

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0:.0f}\" height=\"{1:.0f}\" "
      "viewBox=\"0 0 {0:.0f} {1:.0f}\" font-family=\"sans-serif\" font-size=\"11\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
      width, height);
  if (!title.empty()) {
    svg += fmt::format("<text x=\"{:.1f}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
                       width / 2, detail::xml_escape(title));
  }
  svg += fmt::format(
      "<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{2:.1f}\" y2=\"{1:.1f}\" stroke=\"black\"/>\n"
      "<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{0:.1f}\" y2=\"{3:.1f}\" stroke=\"black\"/>\n",
      left, top + plot_h, left + plot_w, top);
  for (int i = 0; i <= 5; ++i) {
    const double xv = max_x * i / 5, yv = max_y * i / 5;
    svg += fmt::format(
        "<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{:g}</text>\n"
        "<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{:g}</text>\n",
        sx(xv), top + plot_h + 16, xv, left - 6, sy(yv) + 4, yv);
  }
  svg += fmt::format(
      "<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">Bandwidth (GB/s)</text>\n"
      "<text x=\"16\" y=\"{:.1f}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1f})\">"
      "Latency (ns)</text>\n",
      left + plot_w / 2, height - 16, top + plot_h / 2, top + plot_h / 2);

  svg += "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < points.size(); ++i) {
    svg += fmt::format("{}{:.2f},{:.2f}", i ? " " : "", sx(points[i].gbps), sy(points[i].latency_ns));
  }
  svg += "\"/>\n";
  for (const auto& p : points) {
    svg += fmt::format(
        "<circle cx=\"{0:.2f}\" cy=\"{1:.2f}\" r=\"3\" fill=\"#1f77b4\"/>\n"
        "<text x=\"{0:.2f}\" y=\"{2:.2f}\" text-anchor=\"middle\" font-size=\"10\">{3}</text>\n",
        sx(p.gbps), sy(p.latency_ns), sy(p.latency_ns) - 7, detail::xml_escape(p.label));
  }
  svg += "</svg>\n";
  return svg;
}

/// Writes `<stem>.csv` and `<stem>.svg`. Nothing is written for an empty curve.
inline void emit_curve(std::span<const CurvePoint> points, const std::filesystem::path& stem,
                       std::string_view title = {}) {
  if (points.empty()) throw ValidationError("emit_curve: no points");
  auto write = [](const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
    out << text;
    if (!out) throw Error(fmt::format("write failed for '{}'", path.string()));
  };
  auto csv_path = stem;
  csv_path += ".csv";
  auto svg_path = stem;
  svg_path += ".svg";
  write(csv_path, curve_csv(points));
  write(svg_path, curve_svg(points, title));
}

}  // namespace memweave
