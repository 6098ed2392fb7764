#pragma once

// Static SVG charts: grouped bars and lines with optional error bars.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "sofo/errors.hpp"

namespace sofo::plot {

struct BarGroup {
  std::string label;
  std::vector<double> values;  // one per series
};

struct Line {
  std::string label;
  std::vector<double> y;
  std::vector<double> err;  // empty or one per point
};

namespace detail {

inline constexpr int kWidth = 720, kHeight = 400, kLeft = 64, kRight = 150, kTop = 40, kBottom = 56;
inline const char* kColors[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
                                "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac"};

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

struct Frame {
  double lo, hi;
  double plot_w() const { return kWidth - kLeft - kRight; }
  double plot_h() const { return kHeight - kTop - kBottom; }
  double y(double v) const { return kTop + plot_h() * (1.0 - (v - lo) / (hi - lo)); }
};

inline Frame frame(double lo, double hi) {
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

inline void header(std::ostringstream& o, const std::string& title, const std::string& y_label, const Frame& f) {
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
    << "</text>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = f.lo + (f.hi - f.lo) * i / 4.0;
    const double y = f.y(v);
    o << "<line x1=\"" << kLeft << "\" x2=\"" << kWidth - kRight << "\" y1=\"" << num(y) << "\" y2=\"" << num(y)
      << "\" stroke=\"#ddd\"/>\n";
    o << "<text x=\"" << kLeft - 6 << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">" << num(v) << "</text>\n";
  }
  o << "<text transform=\"translate(16," << kTop + f.plot_h() / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
    << escape(y_label) << "</text>\n";
  o << "<line x1=\"" << kLeft << "\" x2=\"" << kLeft << "\" y1=\"" << kTop << "\" y2=\"" << kTop + f.plot_h()
    << "\" stroke=\"black\"/>\n";
}

inline void legend(std::ostringstream& o, const std::vector<std::string>& names) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    const int y = kTop + 18 * static_cast<int>(i);
    o << "<rect x=\"" << kWidth - kRight + 12 << "\" y=\"" << y << "\" width=\"12\" height=\"12\" fill=\""
      << kColors[i % 10] << "\"/>\n";
    o << "<text x=\"" << kWidth - kRight + 30 << "\" y=\"" << y + 10 << "\">" << escape(names[i]) << "</text>\n";
  }
}

}  // namespace detail

/// Grouped bar chart; `series` names the bars inside each group.
inline std::string bar_chart(const std::string& title, const std::string& y_label,
                             const std::vector<std::string>& series, const std::vector<BarGroup>& groups) {
  using namespace detail;
  if (groups.empty() || series.empty()) throw ContractError("bar chart needs data");
  double lo = 0.0, hi = 0.0;
  for (const auto& g : groups) {
    if (g.values.size() != series.size()) throw ShapeError("bar group '" + g.label + "' has the wrong size");
    for (double v : g.values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  const Frame f = frame(lo, hi);
  std::ostringstream o;
  header(o, title, y_label, f);
  const double slot = f.plot_w() / static_cast<double>(groups.size());
  const double bar = 0.8 * slot / static_cast<double>(series.size());
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const double x0 = kLeft + slot * static_cast<double>(gi) + 0.1 * slot;
    for (std::size_t si = 0; si < series.size(); ++si) {
      const double v = groups[gi].values[si];
      const double top = f.y(std::max(v, 0.0)), bottom = f.y(std::min(v, 0.0));
      o << "<rect x=\"" << num(x0 + bar * static_cast<double>(si)) << "\" y=\"" << num(top) << "\" width=\""
        << num(bar * 0.95) << "\" height=\"" << num(bottom - top) << "\" fill=\"" << kColors[si % 10] << "\"><title>"
        << escape(groups[gi].label + " " + series[si]) << " = " << num(v) << "</title></rect>\n";
    }
    o << "<text x=\"" << num(x0 + 0.4 * slot) << "\" y=\"" << kTop + f.plot_h() + 18
      << "\" text-anchor=\"middle\">" << escape(groups[gi].label) << "</text>\n";
  }
  legend(o, series);
  o << "</svg>\n";
  return o.str();
}

/// Line chart over shared x positions.
inline std::string line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                              const std::vector<double>& x, const std::vector<Line>& lines) {
  using namespace detail;
  if (x.empty() || lines.empty()) throw ContractError("line chart needs data");
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& l : lines) {
    if (l.y.size() != x.size() || (!l.err.empty() && l.err.size() != x.size()))
      throw ShapeError("line '" + l.label + "' does not match the x axis");
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double e = l.err.empty() ? 0.0 : l.err[i];
      lo = std::min(lo, l.y[i] - e);
      hi = std::max(hi, l.y[i] + e);
    }
  }
  const Frame f = frame(lo, hi);
  const double x_lo = *std::min_element(x.begin(), x.end()), x_hi = *std::max_element(x.begin(), x.end());
  auto px = [&](double v) { return kLeft + f.plot_w() * (x_hi > x_lo ? (v - x_lo) / (x_hi - x_lo) : 0.5); };
  std::ostringstream o;
  header(o, title, y_label, f);
  const std::size_t ticks = std::min<std::size_t>(x.size(), 8);
  for (std::size_t i = 0; i < ticks; ++i) {
    const std::size_t idx = ticks == 1 ? 0 : i * (x.size() - 1) / (ticks - 1);
    o << "<text x=\"" << num(px(x[idx])) << "\" y=\"" << kTop + f.plot_h() + 18 << "\" text-anchor=\"middle\">"
      << num(x[idx]) << "</text>\n";
  }
  o << "<text x=\"" << kLeft + f.plot_w() / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">"
    << escape(x_label) << "</text>\n";
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const auto& l = lines[li];
    o << "<polyline fill=\"none\" stroke=\"" << kColors[li % 10] << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < x.size(); ++i) o << (i ? " " : "") << num(px(x[i])) << "," << num(f.y(l.y[i]));
    o << "\"/>\n";
    if (!l.err.empty()) {
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double xi = px(x[i]);
        o << "<line x1=\"" << num(xi) << "\" x2=\"" << num(xi) << "\" y1=\"" << num(f.y(l.y[i] - l.err[i]))
          << "\" y2=\"" << num(f.y(l.y[i] + l.err[i])) << "\" stroke=\"" << kColors[li % 10] << "\"/>\n";
        o << "<circle cx=\"" << num(xi) << "\" cy=\"" << num(f.y(l.y[i])) << "\" r=\"3\" fill=\""
          << kColors[li % 10] << "\"/>\n";
      }
    }
  }
  std::vector<std::string> names;
  for (const auto& l : lines) names.push_back(l.label);
  legend(o, names);
  o << "</svg>\n";
  return o.str();
}

}  // namespace sofo::plot
