// Copyright 2026 The descbench Authors.
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

#include "descbench/charts.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <vector>

namespace descbench {

namespace {

std::string xml_escape(std::string_view s) {
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
        out.push_back(c);
    }
  }
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

class Svg {
 public:
  Svg(int width, int height) : width_(width), height_(height) {}

  void rect(double x, double y, double w, double h, std::string_view fill) {
    body_ << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" width=\"" << fmt(w)
          << "\" height=\"" << fmt(h) << "\" fill=\"" << fill << "\"/>\n";
  }
  void line(double x1, double y1, double x2, double y2, std::string_view stroke) {
    body_ << "<line x1=\"" << fmt(x1) << "\" y1=\"" << fmt(y1) << "\" x2=\"" << fmt(x2)
          << "\" y2=\"" << fmt(y2) << "\" stroke=\"" << stroke << "\"/>\n";
  }
  void circle(double x, double y, double r, std::string_view fill) {
    body_ << "<circle cx=\"" << fmt(x) << "\" cy=\"" << fmt(y) << "\" r=\"" << fmt(r)
          << "\" fill=\"" << fill << "\"/>\n";
  }
  void text(double x, double y, std::string_view s, std::string_view anchor = "start",
            int size = 11) {
    body_ << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" font-size=\"" << size
          << "\" text-anchor=\"" << anchor << "\">" << xml_escape(s) << "</text>\n";
  }

  std::string str() const {
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width_ << "\" height=\""
        << height_ << "\" font-family=\"sans-serif\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << body_.str() << "</svg>\n";
    return out.str();
  }

 private:
  int width_;
  int height_;
  std::ostringstream body_;
};

// Diverging blue/red fill for a value in [-1, 1].
std::string heat(double v) {
  if (std::isnan(v)) return "#cccccc";
  const double t = std::clamp(v, -1.0, 1.0);
  const int fade = static_cast<int>(255.0 * (1.0 - std::fabs(t)));
  char buf[8];
  if (t >= 0) {
    std::snprintf(buf, sizeof(buf), "#%02x%02xff", fade, fade);
  } else {
    std::snprintf(buf, sizeof(buf), "#ff%02x%02x", fade, fade);
  }
  return buf;
}

}  // namespace

std::string correlation_chart_svg(std::span<const CorrelationCell> cells) {
  std::vector<std::string> metrics;
  for (const auto& c : cells) {
    if (std::find(metrics.begin(), metrics.end(), c.metric_id) == metrics.end()) {
      metrics.push_back(c.metric_id);
    }
  }
  const double group_w = 150, bar_w = 10, plot_h = 160, left = 60, top = 30;
  const int panels = static_cast<int>(metrics.size());
  Svg svg(static_cast<int>(left + group_w * kAllQuestions.size() + 20),
          static_cast<int>(top + panels * (plot_h + 50) + 20));
  for (int m = 0; m < panels; ++m) {
    const double y0 = top + m * (plot_h + 50);
    const double zero = y0 + plot_h / 2;
    svg.text(left, y0 - 8, metrics[m], "start", 13);
    svg.line(left, zero, left + group_w * kAllQuestions.size(), zero, "#444");
    svg.text(left - 6, y0 + 4, "1", "end");
    svg.text(left - 6, zero + 4, "0", "end");
    svg.text(left - 6, y0 + plot_h + 4, "-1", "end");
    for (std::size_t q = 0; q < kAllQuestions.size(); ++q) {
      const double gx = left + q * group_w;
      svg.text(gx + group_w / 2, y0 + plot_h + 16, to_string(kAllQuestions[q]), "middle");
      for (const auto& c : cells) {
        if (c.metric_id != metrics[m] || c.question != kAllQuestions[q]) continue;
        const double x = gx + group_w / 2 + (c.phase == Phase::kPre ? -bar_w - 2 : 2);
        const double h = std::fabs(c.r) * plot_h / 2;
        const std::string_view fill = c.phase == Phase::kPre ? "#9ecae1" : "#08519c";
        svg.rect(x, c.r >= 0 ? zero - h : zero, bar_w, h, fill);
        if (c.p < 0.001) svg.text(x + bar_w / 2, c.r >= 0 ? zero - h - 3 : zero + h + 11, "*", "middle");
      }
    }
  }
  return svg.str();
}

std::string pass_rate_chart_svg(std::span<const PassRateRow> rows) {
  const double left = 320, bar_h = 14, width = 400, top = 30;
  Svg svg(static_cast<int>(left + width + 40),
          static_cast<int>(top + rows.size() * (bar_h + 4) + 40));
  svg.text(left, top - 12, "lower / same / higher");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const double y = top + i * (bar_h + 4);
    std::string label = r.metric_id + "  " + std::string(to_string(r.kind));
    if (r.subset != "all") label += " (" + r.subset + ")";
    label += "  n=" + std::to_string(r.n_applicable);
    svg.text(left - 6, y + bar_h - 3, label, "end");
    double x = left;
    svg.rect(x, y, r.proportion_lower * width, bar_h, "#41ab5d");
    x += r.proportion_lower * width;
    svg.rect(x, y, r.proportion_same * width, bar_h, "#fcc5c0");
    x += r.proportion_same * width;
    svg.rect(x, y, r.proportion_higher * width, bar_h, "#ae017e");
  }
  return svg.str();
}

std::string cross_metric_chart_svg(const CrossMetricMatrix& matrix) {
  const double cell = 50, left = 160, top = 160;
  const std::size_t k = matrix.order.size();
  Svg svg(static_cast<int>(left + k * cell + 20), static_cast<int>(top + k * cell + 20));
  for (std::size_t a = 0; a < k; ++a) {
    svg.text(left - 6, top + a * cell + cell / 2 + 4, matrix.order[a], "end");
    svg.text(left + a * cell + cell / 2, top - 8, matrix.order[a], "middle");
    for (std::size_t b = 0; b < k; ++b) {
      const double v = matrix.r[a][b];
      svg.rect(left + b * cell, top + a * cell, cell - 1, cell - 1, heat(v));
      svg.text(left + b * cell + cell / 2, top + a * cell + cell / 2 + 4, fmt(v), "middle");
    }
  }
  return svg.str();
}

std::string avg_scores_chart_svg(std::span<const AvgScoreRow> rows) {
  std::map<std::string, std::vector<const AvgScoreRow*>> by_metric;
  for (const auto& r : rows) by_metric[r.metric_id].push_back(&r);
  const double left = 190, row_h = 16, width = 360, panel_gap = 40, top = 30;
  double height = top;
  for (const auto& [_, list] : by_metric) height += list.size() * row_h + panel_gap;
  Svg svg(static_cast<int>(left + width + 40), static_cast<int>(height + 20));
  double y = top;
  for (const auto& [metric, list] : by_metric) {
    double lo = INFINITY, hi = -INFINITY;
    for (const auto* r : list) {
      if (std::isnan(r->mean)) continue;
      lo = std::min(lo, r->ci.low);
      hi = std::max(hi, r->ci.high);
    }
    if (!(hi > lo)) {
      lo -= 1;
      hi += 1;
    }
    auto xpos = [&](double v) { return left + (v - lo) / (hi - lo) * width; };
    svg.text(left, y - 8, metric + "  [" + fmt(lo) + ", " + fmt(hi) + "]", "start", 13);
    for (const auto* r : list) {
      y += row_h;
      svg.text(left - 6, y + 4, r->kind ? to_string(*r->kind) : "original", "end");
      if (std::isnan(r->mean)) continue;
      svg.line(xpos(r->ci.low), y, xpos(r->ci.high), y, "#555");
      const bool lower = r->vs_original && *r->vs_original == Outcome::kLower;
      svg.circle(xpos(r->mean), y, 4, r->kind ? (lower ? "#41ab5d" : "#ae017e") : "#08519c");
    }
    y += panel_gap;
  }
  return svg.str();
}

}  // namespace descbench
