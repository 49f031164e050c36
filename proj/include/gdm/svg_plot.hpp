#pragma once

// Minimal SVG line chart for sweep results.

#include <algorithm>
#include <cstdio>
#include <string>
#include <vector>

namespace gdm {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

inline std::string svg_line_chart(const std::vector<Series>& series, const std::string& x_label,
                                  const std::string& y_label, double y_min = 0.0, double y_max = 1.0) {
  constexpr double width = 640, height = 400, left = 60, right = 20, top = 20, bottom = 50;
  constexpr const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  double x_min = 0.0, x_max = 1.0;
  bool any = false;
  for (const auto& s : series)
    for (const double v : s.x) {
      x_min = any ? std::min(x_min, v) : v;
      x_max = any ? std::max(x_max, v) : v;
      any = true;
    }
  if (x_max <= x_min) x_max = x_min + 1.0;
  const auto px = [&](double v) { return left + (v - x_min) / (x_max - x_min) * (width - left - right); };
  const auto py = [&](double v) { return height - bottom - (v - y_min) / (y_max - y_min) * (height - top - bottom); };
  const auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return std::string(buf);
  };

  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" font-family=\"sans-serif\" "
                    "font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<line x1=\"" + num(left) + "\" y1=\"" + num(py(y_min)) + "\" x2=\"" + num(width - right) + "\" y2=\"" +
         num(py(y_min)) + "\" stroke=\"black\"/>\n";
  out += "<line x1=\"" + num(left) + "\" y1=\"" + num(py(y_min)) + "\" x2=\"" + num(left) + "\" y2=\"" +
         num(py(y_max)) + "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double yv = y_min + (y_max - y_min) * i / 4.0;
    out += "<text x=\"" + num(left - 8) + "\" y=\"" + num(py(yv) + 4) + "\" text-anchor=\"end\">" + num(yv) + "</text>\n";
    const double xv = x_min + (x_max - x_min) * i / 4.0;
    out += "<text x=\"" + num(px(xv)) + "\" y=\"" + num(height - bottom + 18) + "\" text-anchor=\"middle\">" + num(xv) +
           "</text>\n";
  }
  out += "<text x=\"" + num((left + width - right) / 2) + "\" y=\"" + num(height - 10) + "\" text-anchor=\"middle\">" +
         x_label + "</text>\n";
  out += "<text x=\"15\" y=\"" + num((top + height - bottom) / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 15 " +
         num((top + height - bottom) / 2) + ")\">" + y_label + "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = palette[k % 5];
    std::string points;
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i)
      points += (i ? " " : "") + num(px(s.x[i])) + "," + num(py(s.y[i]));
    out += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"2\" points=\"" + points + "\"/>\n";
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i)
      out += "<circle cx=\"" + num(px(s.x[i])) + "\" cy=\"" + num(py(s.y[i])) + "\" r=\"3\" fill=\"" + color + "\"/>\n";
    out += "<text x=\"" + num(width - right - 150) + "\" y=\"" + num(top + 15 + 15 * static_cast<double>(k)) +
           "\" fill=\"" + color + "\">" + s.name + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace gdm
