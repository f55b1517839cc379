// Copyright 2026 The OctoANN Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>
#include <vector>

#include "octoann/bench.hpp"

namespace octoann {

void write_run_csv(const std::vector<RunRow>& rows, const std::string& path);

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;  // (x, y)
};

/// Minimal self-contained SVG line chart (no external references).
void write_svg_chart(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<Series>& series);

/// Cumulative-arm breakdown: per-step deltas against the previous arm; the
/// deltas telescope to the total improvement over the first arm.
struct BreakdownStep {
  std::string config;
  double qps = 0;
  double pages = 0;
  double qps_gain_pct = 0;    // vs previous arm
  double pages_drop_pct = 0;  // vs previous arm
};

std::vector<BreakdownStep> build_breakdown(const std::vector<RunRow>& rows,
                                           const std::vector<std::string>& arms,
                                           std::uint32_t L);
void write_breakdown_csv(const std::vector<BreakdownStep>& steps, const std::string& path);

/// Emit the full report bundle from aggregated rows: recall-vs-QPS,
/// recall-vs-latency and recall-vs-pages series (CSV + SVG per shape), plus
/// the cumulative breakdown when all requested arms are present.
void write_report_bundle(const std::vector<RunRow>& rows, const std::string& out_dir,
                         std::uint32_t breakdown_L);

}  // namespace octoann
