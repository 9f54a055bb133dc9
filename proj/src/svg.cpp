#include "drc/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace drc::svg {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

namespace {

std::string fmt(double v, int prec = 3) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

}  // namespace

std::string line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                       const std::vector<Series>& series) {
  constexpr double W = 720, H = 420, L = 60, R = 20, T = 40, B = 50;
  double xmin = std::numeric_limits<double>::max(), xmax = std::numeric_limits<double>::lowest();
  double ymin = 0, ymax = std::numeric_limits<double>::lowest();
  for (const Series& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      xmin = std::min(xmin, static_cast<double>(s.x[i]));
      xmax = std::max(xmax, static_cast<double>(s.x[i]));
      ymax = std::max(ymax, s.y[i]);
    }
  }
  if (xmax < xmin) xmin = 0, xmax = 1;
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax <= ymin) ymax = ymin + 1;
  auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - ymin) / (ymax - ymin) * (H - T - B); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title) << "</text>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double y = ymin + (ymax - ymin) * i / 4.0;
    os << "<text x=\"" << L - 6 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\">" << fmt(y, 2) << "</text>\n";
  }
  os << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << escape(x_label) << "</text>\n";
  os << "<text x=\"16\" y=\"" << H / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << H / 2 << ")\">"
     << escape(y_label) << "</text>\n";
  double legend_y = T + 6;
  for (const Series& s : series) {
    if (!s.x.empty()) {
      os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) os << fmt(px(static_cast<double>(s.x[i])), 1) << ',' << fmt(py(s.y[i]), 1) << ' ';
      os << "\"/>\n";
    }
    os << "<rect x=\"" << W - R - 110 << "\" y=\"" << legend_y - 9 << "\" width=\"12\" height=\"3\" fill=\"" << s.color << "\"/>\n";
    os << "<text x=\"" << W - R - 92 << "\" y=\"" << legend_y - 4 << "\">" << escape(s.label) << "</text>\n";
    legend_y += 16;
  }
  os << "</svg>\n";
  return os.str();
}

std::string heatmap(const std::string& title, const std::vector<std::string>& row_labels,
                    const std::vector<std::string>& col_labels, const std::vector<std::vector<double>>& values) {
  constexpr double cell = 56, L = 80, T = 50;
  const double W = L + cell * static_cast<double>(col_labels.size()) + 20;
  const double H = T + cell * static_cast<double>(row_labels.size()) + 40;
  double lo = std::numeric_limits<double>::max(), hi = std::numeric_limits<double>::lowest();
  for (const auto& row : values)
    for (double v : row)
      if (!std::isnan(v)) lo = std::min(lo, v), hi = std::max(hi, v);
  if (hi < lo) lo = 0, hi = 1;
  const double span = hi > lo ? hi - lo : 1.0;

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title) << "</text>\n";
  for (std::size_t c = 0; c < col_labels.size(); ++c) {
    os << "<text x=\"" << L + cell * (c + 0.5) << "\" y=\"" << T - 6 << "\" text-anchor=\"middle\">" << escape(col_labels[c]) << "</text>\n";
  }
  for (std::size_t r = 0; r < row_labels.size(); ++r) {
    os << "<text x=\"" << L - 6 << "\" y=\"" << T + cell * (r + 0.5) + 4 << "\" text-anchor=\"end\">" << escape(row_labels[r]) << "</text>\n";
    for (std::size_t c = 0; c < col_labels.size(); ++c) {
      const double v = values[r][c];
      std::string fill = "#cccccc";
      if (!std::isnan(v)) {
        const int g = static_cast<int>(std::lround(255 - 200 * (v - lo) / span));
        char buf[16];
        std::snprintf(buf, sizeof buf, "#%02x%02xff", g, g);
        fill = buf;
      }
      os << "<rect x=\"" << L + cell * c << "\" y=\"" << T + cell * r << "\" width=\"" << cell << "\" height=\"" << cell
         << "\" fill=\"" << fill << "\" stroke=\"white\"/>\n";
      os << "<text x=\"" << L + cell * (c + 0.5) << "\" y=\"" << T + cell * (r + 0.5) + 4 << "\" text-anchor=\"middle\">"
         << (std::isnan(v) ? std::string("skip") : fmt(v, 3)) << "</text>\n";
    }
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace drc::svg
