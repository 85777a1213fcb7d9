#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "tabml/metrics.hpp"

namespace tabml::report {

using Points = std::vector<std::pair<double, double>>;

/// Quartiles by linear interpolation between order statistics; whiskers at
/// the most extreme values within 1.5 IQR of the box; the rest are outliers.
struct BoxStats {
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double whisker_lo = 0.0;
  double whisker_hi = 0.0;
  std::vector<double> outliers;
};
BoxStats box_stats(std::vector<double> values);

/// Vertical average on the sorted union of the curves' x values (a vertical
/// step contributes its upper value). A single curve is returned unchanged.
Points mean_curve(const std::vector<Points>& curves);

struct LineSeries {
  std::string label;
  Points points;
  bool emphasized = false;
  bool dashed = false;
  /// Drawn light grey, e.g. individual folds behind a mean curve.
  bool faint = false;
};
/// Unit-square axes, as for ROC and PRC curves.
std::string line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                       const std::vector<LineSeries>& series);

struct BoxGroup {
  std::string label;
  std::vector<double> values;
};
/// Optional trend lines join one value per group (e.g. an algorithm's mean
/// on each dataset).
std::string box_plot(const std::string& title, const std::string& y_label, const std::vector<BoxGroup>& groups,
                     const std::vector<LineSeries>& trends = {});

std::string bar_chart(const std::string& title, const std::string& y_label, const std::vector<std::string>& labels,
                      const std::vector<double>& values);

struct Stack {
  std::string label;
  /// One value per category.
  std::vector<double> values;
};
/// Each segment rect carries data-series, data-category and data-value
/// attributes with the plotted value.
std::string stacked_bar_chart(const std::string& title, const std::string& y_label,
                              const std::vector<std::string>& categories, const std::vector<Stack>& stacks);

/// Markdown and HTML are rendered from the same block list.
struct Block {
  enum class Kind { heading, paragraph, table, image, banner };
  Kind kind = Kind::paragraph;
  int level = 2;
  std::string text;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

struct Document {
  std::string title;
  std::vector<Block> blocks;

  void heading(int level, std::string text);
  void paragraph(std::string text);
  void banner(std::string text);
  void image(std::string path, std::string caption);
  void table(std::vector<std::string> header, std::vector<std::vector<std::string>> rows);
};

std::string to_markdown(const Document& doc);
std::string to_html(const Document& doc);

/// Text tables inside a rendered Markdown report, in order of appearance.
std::vector<std::vector<std::vector<std::string>>> markdown_tables(std::string_view markdown);

}  // namespace tabml::report
