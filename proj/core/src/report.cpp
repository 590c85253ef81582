/*
 * Copyright 2026 The attrib Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "attrib/report.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>

#include "attrib/binary_io.hpp"
#include "attrib/error.hpp"
#include "attrib/metrics.hpp"

namespace attrib {
namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  return buf;
}

std::string tick_label(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", value);
  return buf;
}

std::string escape_xml(const std::string& s) {
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

std::string csv_column(const std::string& display) {
  std::string out;
  for (char c : display) {
    if (c == '%') {
      out += "percent";
    } else if (std::isalnum(static_cast<unsigned char>(c))) {
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!out.empty() && out.back() != '_') {
      out += '_';
    }
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

std::string variant_title(Variant v) { return v == Variant::kOriginal ? "Original" : "Absolute"; }

void sort_rows(ReportTable& table, std::size_t key_column) {
  std::stable_sort(table.rows.begin(), table.rows.end(),
                   [key_column](const ReportTable::Row& a, const ReportTable::Row& b) {
                     return a.values[key_column] > b.values[key_column];
                   });
}

}  // namespace

std::string metric_name(Metric metric) {
  switch (metric) {
    case Metric::kFidelity: return "fidelity";
    case Metric::kRoc: return "roc";
    case Metric::kDsc: return "dsc";
  }
  return "unknown";
}

Metric parse_metric(const std::string& name) {
  if (name == "fidelity") return Metric::kFidelity;
  if (name == "roc") return Metric::kRoc;
  if (name == "dsc") return Metric::kDsc;
  throw ConfigError("unknown metric '" + name + "' (expected fidelity, roc or dsc)");
}

std::string table_csv(const ReportTable& table) {
  std::string out = "estimator";
  for (const std::string& c : table.columns) out += "," + csv_column(c);
  out += "\n";
  for (const ReportTable::Row& row : table.rows) {
    out += estimator_display_name(row.estimator);
    for (double v : row.values) out += "," + format_real(v);
    out += "\n";
  }
  return out;
}

std::string table_text(const ReportTable& table, int decimals) {
  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> header{"Estimator"};
  header.insert(header.end(), table.columns.begin(), table.columns.end());
  cells.push_back(header);
  for (const ReportTable::Row& row : table.rows) {
    std::vector<std::string> line{estimator_display_name(row.estimator)};
    for (double v : row.values) line.push_back(fixed(v, decimals));
    cells.push_back(line);
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& line : cells) {
    for (std::size_t j = 0; j < line.size(); ++j) width[j] = std::max(width[j], line[j].size());
  }
  std::string out = table.title + "\n\n";
  for (std::size_t i = 0; i < cells.size(); ++i) {
    std::string line;
    for (std::size_t j = 0; j < cells[i].size(); ++j) {
      const std::string& cell = cells[i][j];
      const std::string pad(width[j] - cell.size(), ' ');
      line += j == 0 ? cell + pad : "  " + pad + cell;
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
    if (i == 0) {
      std::size_t total = width[0];
      for (std::size_t j = 1; j < width.size(); ++j) total += 2 + width[j];
      out += std::string(total, '-') + "\n";
    }
  }
  return out;
}

std::string svg_line_plot(const PlotSpec& spec) {
  constexpr double kWidth = 640.0;
  constexpr double kHeight = 400.0;
  constexpr double kLeft = 70.0;
  constexpr double kRight = 460.0;
  constexpr double kTop = 40.0;
  constexpr double kBottom = 340.0;

  auto tx = [&](double x) { return spec.log_x ? std::log10(x) : x; };
  double x_lo = 0.0;
  double x_hi = 1.0;
  bool first = true;
  auto extend = [&](double x) {
    if (spec.log_x && !(x > 0.0)) return;
    const double v = tx(x);
    if (first) {
      x_lo = x_hi = v;
      first = false;
    } else {
      x_lo = std::min(x_lo, v);
      x_hi = std::max(x_hi, v);
    }
  };
  for (const PlotSeries& s : spec.series) {
    for (const auto& p : s.points) extend(p.first);
  }
  for (double t : spec.x_ticks) extend(t);
  if (x_hi - x_lo <= 0.0) x_hi = x_lo + 1.0;
  const double y_span = spec.y_max - spec.y_min > 0.0 ? spec.y_max - spec.y_min : 1.0;

  auto px = [&](double x) { return kLeft + (tx(x) - x_lo) / (x_hi - x_lo) * (kRight - kLeft); };
  auto py = [&](double y) {
    const double c = std::clamp(y, spec.y_min, spec.y_min + y_span);
    return kBottom - (c - spec.y_min) / y_span * (kBottom - kTop);
  };

  std::vector<double> ticks = spec.x_ticks;
  if (ticks.empty()) {
    for (int i = 0; i <= 4; ++i) {
      const double v = x_lo + (x_hi - x_lo) * i / 4.0;
      ticks.push_back(spec.log_x ? std::pow(10.0, v) : v);
    }
  }

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(kWidth, 0) +
         "\" height=\"" + fixed(kHeight, 0) + "\" viewBox=\"0 0 " + fixed(kWidth, 0) + " " +
         fixed(kHeight, 0) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + fixed((kLeft + kRight) / 2, 1) +
         "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" + escape_xml(spec.title) +
         "</text>\n";

  for (double t : ticks) {
    const std::string x = fixed(px(t), 2);
    out += "<line x1=\"" + x + "\" y1=\"" + fixed(kTop, 2) + "\" x2=\"" + x + "\" y2=\"" +
           fixed(kBottom, 2) + "\" stroke=\"#e0e0e0\"/>\n";
    out += "<text x=\"" + x + "\" y=\"" + fixed(kBottom + 16, 2) +
           "\" text-anchor=\"middle\">" + tick_label(t) + "</text>\n";
  }
  for (int i = 0; i <= 4; ++i) {
    const double v = spec.y_min + y_span * i / 4.0;
    const std::string y = fixed(py(v), 2);
    out += "<line x1=\"" + fixed(kLeft, 2) + "\" y1=\"" + y + "\" x2=\"" + fixed(kRight, 2) +
           "\" y2=\"" + y + "\" stroke=\"#e0e0e0\"/>\n";
    out += "<text x=\"" + fixed(kLeft - 6, 2) + "\" y=\"" + fixed(py(v) + 4, 2) +
           "\" text-anchor=\"end\">" + tick_label(v) + "</text>\n";
  }
  out += "<rect x=\"" + fixed(kLeft, 2) + "\" y=\"" + fixed(kTop, 2) + "\" width=\"" +
         fixed(kRight - kLeft, 2) + "\" height=\"" + fixed(kBottom - kTop, 2) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
  out += "<text x=\"" + fixed((kLeft + kRight) / 2, 1) + "\" y=\"" + fixed(kBottom + 36, 1) +
         "\" text-anchor=\"middle\">" + escape_xml(spec.x_label) +
         (spec.log_x ? " (log scale)" : "") + "</text>\n";
  out += "<text x=\"18\" y=\"" + fixed((kTop + kBottom) / 2, 1) +
         "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " + fixed((kTop + kBottom) / 2, 1) +
         ")\">" + escape_xml(spec.y_label) + "</text>\n";

  for (std::size_t s = 0; s < spec.series.size(); ++s) {
    const PlotSeries& series = spec.series[s];
    const std::string color = kPalette[s % std::size(kPalette)];
    std::string points;
    for (const auto& p : series.points) {
      if (spec.log_x && !(p.first > 0.0)) continue;
      if (!points.empty()) points += ' ';
      points += fixed(px(p.first), 2) + "," + fixed(py(p.second), 2);
    }
    out += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\"" +
           (series.dashed ? std::string(" stroke-dasharray=\"5,3\"") : std::string()) +
           " points=\"" + points + "\"/>\n";
    const double ly = kTop + 8 + 16.0 * static_cast<double>(s);
    out += "<line x1=\"" + fixed(kRight + 12, 2) + "\" y1=\"" + fixed(ly, 2) + "\" x2=\"" +
           fixed(kRight + 36, 2) + "\" y2=\"" + fixed(ly, 2) + "\" stroke=\"" + color +
           "\" stroke-width=\"1.5\"" +
           (series.dashed ? std::string(" stroke-dasharray=\"5,3\"") : std::string()) + "/>\n";
    out += "<text x=\"" + fixed(kRight + 42, 2) + "\" y=\"" + fixed(ly + 4, 2) + "\">" +
           escape_xml(series.label) + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

ReportResult emit_report(const RunLayout& layout, const std::vector<EstimatorKind>& estimators,
                         const std::vector<Variant>& variants) {
  if (estimators.empty() || variants.empty()) {
    throw ReportError("report needs at least one estimator and one variant");
  }
  std::vector<std::string> missing;
  for (Metric metric : {Metric::kFidelity, Metric::kRoc, Metric::kDsc}) {
    for (EstimatorKind kind : estimators) {
      for (Variant v : variants) {
        const auto path = layout.curve_file(metric, kind, v);
        if (!std::filesystem::exists(path)) missing.push_back(layout.relative(path));
      }
    }
  }
  if (!missing.empty()) {
    std::string list;
    for (const std::string& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw ReportError("missing curve CSVs: " + list);
  }

  const auto absolute_it = std::find(variants.begin(), variants.end(), Variant::kAbsolute);
  const std::size_t key = absolute_it == variants.end()
                              ? 0
                              : static_cast<std::size_t>(absolute_it - variants.begin());
  const std::size_t nv = variants.size();

  ReportResult result;
  result.fidelity.title = "Fidelity F (area between LiF and MiF balanced-accuracy curves)";
  result.auc.title = "ROC AUC against masks (mean TPR height; trapezoidal alongside)";
  result.dsc.title = "Maximum Dice similarity of top-p% XRAI regions";
  for (Variant v : variants) {
    result.fidelity.columns.push_back(variant_title(v));
    result.auc.columns.push_back(variant_title(v));
    result.dsc.columns.push_back(variant_title(v));
  }
  for (Variant v : variants) {
    result.auc.columns.push_back(variant_title(v) + " (trapezoidal)");
    result.dsc.columns.push_back(variant_title(v) + " argmax %");
  }

  const std::filesystem::path plots = layout.report_dir() / "plots";
  std::vector<std::pair<std::filesystem::path, std::string>> outputs;
  std::vector<PlotSpec> roc_plots(nv);
  std::vector<PlotSpec> dsc_plots(nv);
  for (std::size_t j = 0; j < nv; ++j) {
    const std::string tag = variant_title(variants[j]);
    roc_plots[j] = {"Mean ROC (" + tag + ")", "mean FPR", "mean TPR", false, {}, 0.0, 1.0, {}};
    dsc_plots[j] = {"DSC vs displayed regions (" + tag + ")",
                    "percent of pixels", "mean DSC", true, {}, 0.0, 1.0, {}};
  }

  for (EstimatorKind kind : estimators) {
    ReportTable::Row fid{kind, std::vector<double>(nv)};
    ReportTable::Row auc_row{kind, std::vector<double>(2 * nv)};
    ReportTable::Row dsc_row{kind, std::vector<double>(2 * nv)};
    for (std::size_t j = 0; j < nv; ++j) {
      const Variant v = variants[j];
      const auto [mif, lif] = read_perturbation_csv(layout.curve_file(Metric::kFidelity, kind, v));
      fid.values[j] = fidelity(mif, lif);
      PlotSpec fplot{estimator_display_name(kind) + " perturbation (" + variant_title(v) + ")",
                     "fraction of pixels masked", "balanced accuracy", false, {}, 0.0, 1.0, {}};
      PlotSeries mif_series{"MiF", {}, false};
      PlotSeries lif_series{"LiF", {}, true};
      for (std::size_t k = 0; k < mif.fractions.size(); ++k) {
        mif_series.points.emplace_back(mif.fractions[k], mif.accuracy[k]);
        lif_series.points.emplace_back(lif.fractions[k], lif.accuracy[k]);
      }
      fplot.series = {mif_series, lif_series};
      outputs.emplace_back(plots / ("fidelity_" + estimator_id(kind) + "_" + variant_name(v) + ".svg"),
                           svg_line_plot(fplot));

      const RocCurve roc = read_roc_csv(layout.curve_file(Metric::kRoc, kind, v));
      const AucResult a = auc(roc);
      auc_row.values[j] = a.mean_tpr;
      auc_row.values[nv + j] = a.trapezoidal;
      PlotSeries roc_series{estimator_display_name(kind), {{0.0, 0.0}}, false};
      for (std::size_t k = 0; k < roc.thresholds.size(); ++k) {
        roc_series.points.emplace_back(roc.mean_fpr[k], roc.mean_tpr[k]);
      }
      roc_series.points.emplace_back(1.0, 1.0);
      roc_plots[j].series.push_back(std::move(roc_series));

      const DscCurve d = read_dsc_csv(layout.curve_file(Metric::kDsc, kind, v));
      dsc_row.values[j] = d.max_dsc;
      dsc_row.values[nv + j] = d.argmax_percent;
      PlotSeries dsc_series{estimator_display_name(kind), {}, false};
      for (std::size_t k = 0; k < d.percents.size(); ++k) {
        dsc_series.points.emplace_back(d.percents[k], d.mean_dsc[k]);
      }
      dsc_plots[j].x_ticks = d.percents;
      dsc_plots[j].series.push_back(std::move(dsc_series));
    }
    result.fidelity.rows.push_back(std::move(fid));
    result.auc.rows.push_back(std::move(auc_row));
    result.dsc.rows.push_back(std::move(dsc_row));
  }
  sort_rows(result.fidelity, key);
  sort_rows(result.auc, key);
  sort_rows(result.dsc, key);

  for (std::size_t j = 0; j < nv; ++j) {
    roc_plots[j].series.push_back({"chance", {{0.0, 0.0}, {1.0, 1.0}}, true});
    outputs.emplace_back(plots / ("roc_" + variant_name(variants[j]) + ".svg"),
                         svg_line_plot(roc_plots[j]));
    outputs.emplace_back(plots / ("dsc_" + variant_name(variants[j]) + ".svg"),
                         svg_line_plot(dsc_plots[j]));
  }
  const std::filesystem::path dir = layout.report_dir();
  for (const auto& [name, table] :
       {std::pair<std::string, const ReportTable*>{"fidelity", &result.fidelity},
        {"auc", &result.auc},
        {"dsc", &result.dsc}}) {
    outputs.emplace_back(dir / (name + ".csv"), table_csv(*table));
    outputs.emplace_back(dir / (name + ".txt"), table_text(*table));
  }
  for (const auto& [path, contents] : outputs) {
    write_file(path, contents);
    result.files.push_back(path);
  }
  return result;
}

}  // namespace attrib
