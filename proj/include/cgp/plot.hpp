#pragma once

// Static SVG chart: observed cumulative deaths plus forecast mean and bands.

#include <algorithm>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "cgp/forecast.hpp"

namespace cgp {

namespace detail {

inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace detail

inline std::string forecast_svg(const std::vector<double>& observed, const ForecastResult& f,
                                const ForecastResult* baseline = nullptr,
                                const std::string& title = "") {
  constexpr double kW = 720, kH = 400, kL = 64, kR = 16, kT = 32, kB = 40;
  const std::size_t end_day = std::max(observed.size(), f.first_day + f.mean.size());
  double ymax = 1.0;
  for (double v : observed) ymax = std::max(ymax, v);
  for (double v : f.q95()) ymax = std::max(ymax, v);
  if (baseline) {
    for (double v : baseline->q95()) ymax = std::max(ymax, v);
  }
  ymax *= 1.05;
  const double span = static_cast<double>(std::max<std::size_t>(end_day, 2) - 1);
  auto px = [&](double day) { return kL + (kW - kL - kR) * day / span; };
  auto py = [&](double y) { return kT + (kH - kT - kB) * (1.0 - y / ymax); };
  using detail::svg_num;

  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + svg_num(kW) +
                  "\" height=\"" + svg_num(kH) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty()) s += "<text x=\"" + svg_num(kL) + "\" y=\"20\" font-size=\"14\">" + title + "</text>\n";
  for (int i = 0; i <= 4; ++i) {
    const double y = ymax * i / 4.0;
    s += "<line x1=\"" + svg_num(kL) + "\" x2=\"" + svg_num(kW - kR) + "\" y1=\"" + svg_num(py(y)) +
         "\" y2=\"" + svg_num(py(y)) + "\" stroke=\"#ddd\"/>\n";
    s += "<text x=\"" + svg_num(kL - 6) + "\" y=\"" + svg_num(py(y) + 4) +
         "\" text-anchor=\"end\">" + std::to_string(static_cast<long long>(y)) + "</text>\n";
  }
  const int ticks = 6;
  for (int i = 0; i <= ticks; ++i) {
    const double day = span * i / ticks;
    s += "<text x=\"" + svg_num(px(day)) + "\" y=\"" + svg_num(kH - kB + 16) +
         "\" text-anchor=\"middle\">" +
         format_date(f.outbreak_date + static_cast<int>(day + 0.5)) + "</text>\n";
  }

  auto band = [&](const ForecastResult& r, const std::vector<double>& lo,
                  const std::vector<double>& hi, const std::string& fill) {
    std::string pts;
    for (std::size_t k = 0; k < hi.size(); ++k) {
      pts += svg_num(px(static_cast<double>(r.first_day + k))) + "," + svg_num(py(hi[k])) + " ";
    }
    for (std::size_t k = lo.size(); k-- > 0;) {
      pts += svg_num(px(static_cast<double>(r.first_day + k))) + "," + svg_num(py(lo[k])) + " ";
    }
    s += "<polygon points=\"" + pts + "\" fill=\"" + fill + "\" stroke=\"none\"/>\n";
  };
  auto line = [&](const ForecastResult& r, const std::string& color) {
    std::string pts;
    for (std::size_t k = 0; k < r.mean.size(); ++k) {
      pts += svg_num(px(static_cast<double>(r.first_day + k))) + "," + svg_num(py(r.mean[k])) + " ";
    }
    s += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + color +
         "\" stroke-width=\"2\"/>\n";
  };
  if (baseline) {
    band(*baseline, baseline->q5(), baseline->q95(), "rgba(120,120,120,0.15)");
    line(*baseline, "#666");
  }
  band(f, f.q5(), f.q95(), "rgba(31,119,180,0.18)");
  band(f, f.q25(), f.q75(), "rgba(31,119,180,0.32)");
  line(f, "#1f77b4");
  for (std::size_t d = 0; d < observed.size(); ++d) {
    s += "<circle cx=\"" + svg_num(px(static_cast<double>(d))) + "\" cy=\"" +
         svg_num(py(observed[d])) + "\" r=\"2\" fill=\"black\"/>\n";
  }
  s += "</svg>\n";
  return s;
}

}  // namespace cgp
