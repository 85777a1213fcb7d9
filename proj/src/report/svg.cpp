#include <algorithm>
#include <cmath>
#include <cstdio>

#include "tabml/common.hpp"
#include "tabml/report.hpp"

namespace tabml::report {

namespace {

constexpr double kWidth = 720, kHeight = 500;
constexpr double kLeft = 70, kRight = 190, kTop = 40, kBottom = 110;
constexpr double kPlotW = kWidth - kLeft - kRight, kPlotH = kHeight - kTop - kBottom;

const char* const kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

const char* color(std::size_t i) { return kPalette[i % 10]; }

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", std::abs(v) < 0.005 ? 0.0 : v);
  return buf;
}

std::string escape(std::string_view text) {
  std::string out;
  for (char ch : text) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

struct Frame {
  double y_lo = 0, y_hi = 1;
  double py(double y) const { return kTop + kPlotH * (1.0 - (y - y_lo) / (y_hi - y_lo)); }
  static double px(double x) { return kLeft + kPlotW * x; }
};

std::string open(const std::string& title) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
         "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\" font-family=\"sans-serif\" font-size=\"11\">\n" +
         "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" + "<text x=\"" + num(kWidth / 2) +
         "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" + escape(title) + "</text>\n";
}

std::string axes(const Frame& f, const std::string& x_label, const std::string& y_label, bool x_ticks) {
  std::string s;
  s += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" + num(kPlotW) + "\" height=\"" + num(kPlotH) +
       "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 5; ++t) {
    const double v = f.y_lo + (f.y_hi - f.y_lo) * t / 5.0;
    const double y = f.py(v);
    s += "<line x1=\"" + num(kLeft - 4) + "\" y1=\"" + num(y) + "\" x2=\"" + num(kLeft) + "\" y2=\"" + num(y) +
         "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(y + 4) + "\" text-anchor=\"end\">" + tick_label(v) + "</text>\n";
    if (!x_ticks) continue;
    const double x = Frame::px(t / 5.0);
    s += "<line x1=\"" + num(x) + "\" y1=\"" + num(kTop + kPlotH) + "\" x2=\"" + num(x) + "\" y2=\"" +
         num(kTop + kPlotH + 4) + "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + num(x) + "\" y=\"" + num(kTop + kPlotH + 16) + "\" text-anchor=\"middle\">" +
         tick_label(t / 5.0) + "</text>\n";
  }
  if (!x_label.empty())
    s += "<text x=\"" + num(kLeft + kPlotW / 2) + "\" y=\"" + num(kTop + kPlotH + 34) + "\" text-anchor=\"middle\">" +
         escape(x_label) + "</text>\n";
  s += "<text x=\"16\" y=\"" + num(kTop + kPlotH / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
       num(kTop + kPlotH / 2) + ")\">" + escape(y_label) + "</text>\n";
  return s;
}

std::string legend(const std::vector<std::pair<std::string, std::string>>& entries) {
  std::string s;
  double y = kTop + 10;
  for (const auto& [label, col] : entries) {
    s += "<rect x=\"" + num(kLeft + kPlotW + 12) + "\" y=\"" + num(y - 8) + "\" width=\"10\" height=\"10\" fill=\"" +
         col + "\"/>\n";
    s += "<text x=\"" + num(kLeft + kPlotW + 26) + "\" y=\"" + num(y + 1) + "\">" + escape(label) + "</text>\n";
    y += 16;
  }
  return s;
}

std::string x_labels(const std::vector<std::string>& labels, double slot) {
  std::string s;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double x = kLeft + slot * (i + 0.5);
    const double y = kTop + kPlotH + 12;
    s += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" text-anchor=\"end\" transform=\"rotate(-45 " + num(x) + " " +
         num(y) + ")\">" + escape(labels[i]) + "</text>\n";
  }
  return s;
}

Frame frame_for(double lo, double hi) {
  Frame f;
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  f.y_lo = lo - pad;
  f.y_hi = hi + pad;
  return f;
}

double quantile(const std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(i);
  if (i + 1 >= sorted.size()) return sorted.back();
  return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

/// Curve value at x: the top of a vertical step, otherwise linear.
double value_at(const Points& c, double x) {
  double best = -kInf;
  for (const auto& p : c)
    if (p.first == x) best = std::max(best, p.second);
  if (best > -kInf) return best;
  if (x < c.front().first) return c.front().second;
  for (std::size_t i = 1; i < c.size(); ++i)
    if (c[i].first > x) {
      const auto& a = c[i - 1];
      const auto& b = c[i];
      return a.second + (b.second - a.second) * (x - a.first) / (b.first - a.first);
    }
  return c.back().second;
}

}  // namespace

BoxStats box_stats(std::vector<double> values) {
  BoxStats b;
  if (values.empty()) return b;
  std::sort(values.begin(), values.end());
  b.q1 = quantile(values, 0.25);
  b.median = quantile(values, 0.5);
  b.q3 = quantile(values, 0.75);
  const double iqr = b.q3 - b.q1;
  const double lo = b.q1 - 1.5 * iqr, hi = b.q3 + 1.5 * iqr;
  b.whisker_lo = b.q1;
  b.whisker_hi = b.q3;
  for (double v : values) {
    if (v < lo || v > hi) {
      b.outliers.push_back(v);
      continue;
    }
    b.whisker_lo = std::min(b.whisker_lo, v);
    b.whisker_hi = std::max(b.whisker_hi, v);
  }
  return b;
}

Points mean_curve(const std::vector<Points>& curves) {
  if (curves.empty()) return {};
  if (curves.size() == 1) return curves.front();
  std::vector<double> xs;
  for (const auto& c : curves)
    for (const auto& p : c) xs.push_back(p.first);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  Points out;
  for (double x : xs) {
    double sum = 0;
    for (const auto& c : curves) sum += value_at(c, x);
    out.emplace_back(x, sum / static_cast<double>(curves.size()));
  }
  return out;
}

std::string line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                       const std::vector<LineSeries>& series) {
  Frame f;
  std::string s = open(title) + axes(f, x_label, y_label, true);
  std::vector<std::pair<std::string, std::string>> entries;
  std::size_t colored = 0;
  for (const auto& line : series) {
    const std::string col = line.dashed ? "#888888" : line.faint ? "#c8c8c8" : color(colored);
    std::string pts;
    for (const auto& [x, y] : line.points) pts += num(Frame::px(x)) + "," + num(f.py(y)) + " ";
    if (!pts.empty()) pts.pop_back();
    s += "<polyline fill=\"none\" stroke=\"" + col + "\" stroke-width=\"" + (line.emphasized ? "2.5" : "1") + "\"" +
         (line.dashed ? " stroke-dasharray=\"6 4\"" : "") + " points=\"" + pts + "\"/>\n";
    if (!line.label.empty()) entries.emplace_back(line.label, col);
    if (!line.dashed && !line.faint) ++colored;
  }
  return s + legend(entries) + "</svg>\n";
}

std::string box_plot(const std::string& title, const std::string& y_label, const std::vector<BoxGroup>& groups,
                     const std::vector<LineSeries>& trends) {
  double lo = kInf, hi = -kInf;
  for (const auto& g : groups)
    for (double v : g.values) lo = std::min(lo, v), hi = std::max(hi, v);
  for (const auto& t : trends)
    for (const auto& p : t.points) lo = std::min(lo, p.second), hi = std::max(hi, p.second);
  if (!(lo <= hi)) lo = 0, hi = 1;
  const Frame f = frame_for(lo, hi);
  std::string s = open(title) + axes(f, "", y_label, false);
  const double slot = groups.empty() ? kPlotW : kPlotW / static_cast<double>(groups.size());
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    labels.push_back(groups[i].label);
    if (groups[i].values.empty()) continue;
    const auto b = box_stats(groups[i].values);
    const double cx = kLeft + slot * (i + 0.5);
    const double w = std::min(40.0, slot * 0.5);
    s += "<line x1=\"" + num(cx) + "\" y1=\"" + num(f.py(b.whisker_lo)) + "\" x2=\"" + num(cx) + "\" y2=\"" +
         num(f.py(b.whisker_hi)) + "\" stroke=\"black\"/>\n";
    for (double v : {b.whisker_lo, b.whisker_hi})
      s += "<line x1=\"" + num(cx - w / 4) + "\" y1=\"" + num(f.py(v)) + "\" x2=\"" + num(cx + w / 4) + "\" y2=\"" +
           num(f.py(v)) + "\" stroke=\"black\"/>\n";
    s += "<rect x=\"" + num(cx - w / 2) + "\" y=\"" + num(f.py(b.q3)) + "\" width=\"" + num(w) + "\" height=\"" +
         num(f.py(b.q1) - f.py(b.q3)) + "\" fill=\"#cfe2f3\" stroke=\"black\"/>\n";
    s += "<line x1=\"" + num(cx - w / 2) + "\" y1=\"" + num(f.py(b.median)) + "\" x2=\"" + num(cx + w / 2) + "\" y2=\"" +
         num(f.py(b.median)) + "\" stroke=\"#d62728\" stroke-width=\"2\"/>\n";
    for (double v : b.outliers)
      s += "<circle cx=\"" + num(cx) + "\" cy=\"" + num(f.py(v)) + "\" r=\"2.5\" fill=\"none\" stroke=\"black\"/>\n";
  }
  std::vector<std::pair<std::string, std::string>> entries;
  for (std::size_t t = 0; t < trends.size(); ++t) {
    std::string pts;
    for (std::size_t i = 0; i < trends[t].points.size(); ++i)
      pts += num(kLeft + slot * (trends[t].points[i].first + 0.5)) + "," + num(f.py(trends[t].points[i].second)) + " ";
    if (!pts.empty()) pts.pop_back();
    s += "<polyline fill=\"none\" stroke=\"" + std::string(color(t)) + "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
    entries.emplace_back(trends[t].label, color(t));
  }
  return s + x_labels(labels, slot) + legend(entries) + "</svg>\n";
}

std::string bar_chart(const std::string& title, const std::string& y_label, const std::vector<std::string>& labels,
                      const std::vector<double>& values) {
  double lo = 0, hi = 0;
  for (double v : values) lo = std::min(lo, v), hi = std::max(hi, v);
  const Frame f = frame_for(lo, hi);
  std::string s = open(title) + axes(f, "", y_label, false);
  const double slot = values.empty() ? kPlotW : kPlotW / static_cast<double>(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double top = f.py(std::max(values[i], 0.0)), bottom = f.py(std::min(values[i], 0.0));
    s += "<rect x=\"" + num(kLeft + slot * i + slot * 0.15) + "\" y=\"" + num(top) + "\" width=\"" + num(slot * 0.7) +
         "\" height=\"" + num(bottom - top) + "\" fill=\"" + color(0) + "\" data-category=\"" + escape(labels[i]) +
         "\" data-value=\"" + format_double(values[i]) + "\"/>\n";
  }
  return s + x_labels(labels, slot) + "</svg>\n";
}

std::string stacked_bar_chart(const std::string& title, const std::string& y_label,
                              const std::vector<std::string>& categories, const std::vector<Stack>& stacks) {
  double hi = 0;
  for (std::size_t c = 0; c < categories.size(); ++c) {
    double total = 0;
    for (const auto& st : stacks) total += std::max(st.values[c], 0.0);
    hi = std::max(hi, total);
  }
  const Frame f = frame_for(0, hi > 0 ? hi : 1);
  std::string s = open(title) + axes(f, "", y_label, false);
  const double slot = categories.empty() ? kPlotW : kPlotW / static_cast<double>(categories.size());
  for (std::size_t c = 0; c < categories.size(); ++c) {
    double base = 0;
    for (std::size_t k = 0; k < stacks.size(); ++k) {
      const double v = std::max(stacks[k].values[c], 0.0);
      const double top = f.py(base + v), bottom = f.py(base);
      s += "<rect x=\"" + num(kLeft + slot * c + slot * 0.15) + "\" y=\"" + num(top) + "\" width=\"" + num(slot * 0.7) +
           "\" height=\"" + num(bottom - top) + "\" fill=\"" + color(k) + "\" data-series=\"" + escape(stacks[k].label) +
           "\" data-category=\"" + escape(categories[c]) + "\" data-value=\"" + format_double(stacks[k].values[c]) +
           "\"/>\n";
      base += v;
    }
  }
  std::vector<std::pair<std::string, std::string>> entries;
  for (std::size_t k = 0; k < stacks.size(); ++k) entries.emplace_back(stacks[k].label, color(k));
  return s + x_labels(categories, slot) + legend(entries) + "</svg>\n";
}

}  // namespace tabml::report
