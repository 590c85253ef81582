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

// Summary tables and SVG plots built from the curve CSVs of a run.

#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "attrib/estimators.hpp"
#include "attrib/run_config.hpp"
#include "attrib/run_layout.hpp"

namespace attrib {

struct ReportTable {
  struct Row {
    EstimatorKind estimator = EstimatorKind::kRandom;
    std::vector<double> values;  // one per column
  };

  std::string title;
  std::vector<std::string> columns;  // value columns; the estimator column is implicit
  std::vector<Row> rows;
};

// "estimator,<columns...>" with full-precision reals.
std::string table_csv(const ReportTable& table);
// Space-aligned text with `decimals` digits after the point.
std::string table_text(const ReportTable& table, int decimals = 3);

struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
  bool dashed = false;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  // Ticks drawn on the x axis; empty picks five even ticks over the range.
  std::vector<double> x_ticks;
  double y_min = 0.0;
  double y_max = 1.0;
  std::vector<PlotSeries> series;
};

// Self-contained SVG document. Byte-identical for identical input.
std::string svg_line_plot(const PlotSpec& spec);

struct ReportResult {
  ReportTable fidelity;
  ReportTable auc;
  ReportTable dsc;
  std::vector<std::filesystem::path> files;
};

// Reads curves/<metric>_<estimator>_<variant>.csv for every configured
// estimator and variant, then writes report/{fidelity,auc,dsc}.{csv,txt}
// and report/plots/*.svg. Rows are sorted by the absolute-variant value
// (the first variant if absolute is not configured), descending. Throws
// ReportError naming every missing input before writing anything.
ReportResult emit_report(const RunLayout& layout, const std::vector<EstimatorKind>& estimators,
                         const std::vector<Variant>& variants);

}  // namespace attrib
