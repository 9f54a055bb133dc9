#pragma once

#include <string>
#include <vector>

namespace drc::svg {

struct Series {
  std::string label;
  std::vector<std::size_t> x;
  std::vector<double> y;
  std::string color;
};

std::string line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                       const std::vector<Series>& series);

// Grid of cells; NaN cells are drawn hatched-grey ("skipped").
std::string heatmap(const std::string& title, const std::vector<std::string>& row_labels,
                    const std::vector<std::string>& col_labels, const std::vector<std::vector<double>>& values);

std::string escape(const std::string& s);

}  // namespace drc::svg
