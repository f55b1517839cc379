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

#include "octoann/report.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace octoann {

void write_run_csv(const std::vector<RunRow>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), "cannot create " + path);
  out << "config,L,reps,queries,threads,recall,recall_sd,qps,qps_sd,"
         "mean_lat_us,lat_sd_us,p50_us,p95_us,p99_us,"
         "mean_pages,pages_sd,mean_hops,mean_nread,mean_neff,mean_nrbu,u_io,cache_hit_rate\n";
  for (const auto& r : rows) {
    out << r.config << "," << r.L << "," << r.reps << "," << r.queries << "," << r.threads
        << "," << r.recall << "," << r.recall_sd << "," << r.qps << "," << r.qps_sd << ","
        << r.mean_lat_us << "," << r.lat_sd_us << "," << r.p50_us << "," << r.p95_us << ","
        << r.p99_us << "," << r.mean_pages << "," << r.pages_sd << "," << r.mean_hops << ","
        << r.mean_nread << "," << r.mean_neff << "," << r.mean_nrbu << "," << r.u_io << ","
        << r.cache_hit_rate << "\n";
  }
  require(out.good(), "short write on " + path);
}

namespace {

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
                          "#aec7e8", "#ffbb78"};

std::string fmt_tick(double v) {
  std::ostringstream ss;
  if (std::abs(v) >= 1000.0)
    ss << static_cast<long long>(std::llround(v));
  else
    ss << static_cast<double>(std::round(v * 1000.0) / 1000.0);
  return ss.str();
}

}  // namespace

void write_svg_chart(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<Series>& series) {
  const double W = 720, H = 480, ML = 80, MR = 170, MT = 50, MB = 60;
  const double PW = W - ML - MR, PH = H - MT - MB;

  double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
  bool first = true;
  for (const auto& s : series)
    for (auto [x, y] : s.points) {
      if (first) {
        x_min = x_max = x;
        y_min = y_max = y;
        first = false;
      }
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
      y_min = std::min(y_min, y);
      y_max = std::max(y_max, y);
    }
  if (x_max == x_min) x_max = x_min + 1;
  if (y_max == y_min) y_max = y_min + 1;
  auto sx = [&](double x) { return ML + (x - x_min) / (x_max - x_min) * PW; };
  auto sy = [&](double y) { return MT + PH - (y - y_min) / (y_max - y_min) * PH; };

  std::ofstream out(path, std::ios::trunc);
  require(out.good(), "cannot create " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << " " << H << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\" "
         "font-family=\"sans-serif\">"
      << title << "</text>\n";

  // axes + grid
  for (int i = 0; i <= 5; ++i) {
    double fx = x_min + (x_max - x_min) * i / 5.0;
    double fy = y_min + (y_max - y_min) * i / 5.0;
    out << "<line x1=\"" << sx(fx) << "\" y1=\"" << MT << "\" x2=\"" << sx(fx) << "\" y2=\""
        << MT + PH << "\" stroke=\"#dddddd\"/>\n";
    out << "<line x1=\"" << ML << "\" y1=\"" << sy(fy) << "\" x2=\"" << ML + PW << "\" y2=\""
        << sy(fy) << "\" stroke=\"#dddddd\"/>\n";
    out << "<text x=\"" << sx(fx) << "\" y=\"" << MT + PH + 18
        << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">"
        << fmt_tick(fx) << "</text>\n";
    out << "<text x=\"" << ML - 8 << "\" y=\"" << sy(fy) + 4
        << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">" << fmt_tick(fy)
        << "</text>\n";
  }
  out << "<rect x=\"" << ML << "\" y=\"" << MT << "\" width=\"" << PW << "\" height=\"" << PH
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  out << "<text x=\"" << ML + PW / 2 << "\" y=\"" << H - 16
      << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\">" << x_label
      << "</text>\n";
  out << "<text x=\"20\" y=\"" << MT + PH / 2
      << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\" transform=\""
      << "rotate(-90 20 " << MT + PH / 2 << ")\">" << y_label << "</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))];
    auto pts = series[i].points;
    std::sort(pts.begin(), pts.end());
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (auto [x, y] : pts) out << sx(x) << "," << sy(y) << " ";
    out << "\"/>\n";
    for (auto [x, y] : pts)
      out << "<circle cx=\"" << sx(x) << "\" cy=\"" << sy(y) << "\" r=\"3\" fill=\"" << color
          << "\"/>\n";
    double ly = MT + 16 + 18.0 * static_cast<double>(i);
    out << "<line x1=\"" << ML + PW + 12 << "\" y1=\"" << ly - 4 << "\" x2=\"" << ML + PW + 34
        << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << ML + PW + 40 << "\" y=\"" << ly
        << "\" font-size=\"12\" font-family=\"sans-serif\">" << series[i].label << "</text>\n";
  }
  out << "</svg>\n";
  require(out.good(), "short write on " + path);
}

std::vector<BreakdownStep> build_breakdown(const std::vector<RunRow>& rows,
                                           const std::vector<std::string>& arms,
                                           std::uint32_t L) {
  std::vector<BreakdownStep> steps;
  for (const auto& arm : arms) {
    const RunRow* found = nullptr;
    for (const auto& r : rows)
      if (r.config == arm && r.L == L) found = &r;
    if (!found) return {};  // incomplete arm set: no breakdown
    BreakdownStep s;
    s.config = arm;
    s.qps = found->qps;
    s.pages = found->mean_pages;
    steps.push_back(s);
  }
  for (std::size_t i = 1; i < steps.size(); ++i) {
    if (steps[i - 1].qps > 0)
      steps[i].qps_gain_pct = (steps[i].qps - steps[i - 1].qps) / steps[i - 1].qps * 100.0;
    if (steps[i - 1].pages > 0)
      steps[i].pages_drop_pct =
          (steps[i - 1].pages - steps[i].pages) / steps[i - 1].pages * 100.0;
  }
  return steps;
}

void write_breakdown_csv(const std::vector<BreakdownStep>& steps, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), "cannot create " + path);
  out << "config,qps,mean_pages,qps_gain_pct_vs_prev,pages_drop_pct_vs_prev\n";
  for (const auto& s : steps)
    out << s.config << "," << s.qps << "," << s.pages << "," << s.qps_gain_pct << ","
        << s.pages_drop_pct << "\n";
  require(out.good(), "short write on " + path);
}

void write_report_bundle(const std::vector<RunRow>& rows, const std::string& out_dir,
                         std::uint32_t breakdown_L) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  write_run_csv(rows, out_dir + "/summary.csv");

  std::map<std::string, Series> qps_series, lat_series, pages_series;
  for (const auto& r : rows) {
    qps_series[r.config].label = r.config;
    qps_series[r.config].points.emplace_back(r.recall, r.qps);
    lat_series[r.config].label = r.config;
    lat_series[r.config].points.emplace_back(r.recall, r.mean_lat_us);
    pages_series[r.config].label = r.config;
    pages_series[r.config].points.emplace_back(r.recall, r.mean_pages);
  }
  auto to_vec = [](const std::map<std::string, Series>& m) {
    std::vector<Series> v;
    for (const auto& [k, s] : m) v.push_back(s);
    return v;
  };
  write_svg_chart(out_dir + "/recall_vs_qps.svg", "Recall vs QPS", "Recall@k", "QPS",
                  to_vec(qps_series));
  write_svg_chart(out_dir + "/recall_vs_latency.svg", "Recall vs latency", "Recall@k",
                  "mean latency (us)", to_vec(lat_series));
  write_svg_chart(out_dir + "/recall_vs_pages.svg", "Recall vs pages per query", "Recall@k",
                  "mean pages/query", to_vec(pages_series));

  auto steps = build_breakdown(rows, {"baseline", "memgraph", "c3", "c5"}, breakdown_L);
  if (!steps.empty()) {
    write_breakdown_csv(steps, out_dir + "/breakdown.csv");
    Series qps_s{"qps", {}}, pages_s{"pages/query", {}};
    for (std::size_t i = 0; i < steps.size(); ++i) {
      qps_s.points.emplace_back(static_cast<double>(i), steps[i].qps);
      pages_s.points.emplace_back(static_cast<double>(i), steps[i].pages);
    }
    write_svg_chart(out_dir + "/breakdown.svg",
                    "Cumulative arms: baseline, +memgraph, c3, c5 (x = step)", "step",
                    "value", {qps_s, pages_s});
  }
}

}  // namespace octoann
