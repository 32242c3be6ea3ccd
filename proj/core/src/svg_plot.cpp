#include "rbfmix/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace rbfmix {

namespace {

constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void write_step_plot_svg(const std::vector<PlotSeries>& series, const PlotOptions& opts, std::ostream& out) {
  const double left = 60, right = 150, top = 30, bottom = 45;
  const double w = opts.width - left - right;
  const double h = opts.height - top - bottom;

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  auto tx = [&](double v) { return opts.log_x ? std::log10(std::max(v, 1e-300)) : v; };
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if (opts.log_x && s.x[i] <= 0) continue;
      xmin = std::min(xmin, tx(s.x[i]));
      xmax = std::max(xmax, tx(s.x[i]));
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  }
  if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (xmax <= xmin) xmax = xmin + 1;
  if (ymax <= ymin) ymax = ymin + 1;
  auto px = [&](double v) { return left + (tx(v) - xmin) / (xmax - xmin) * w; };
  auto py = [&](double v) { return top + (1.0 - (v - ymin) / (ymax - ymin)) * h; };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opts.width << "\" height=\"" << opts.height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << left + w / 2 << "\" y=\"18\" text-anchor=\"middle\">" << escape(opts.title) << "</text>\n";
  out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << w << "\" height=\"" << h
      << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = xmin + (xmax - xmin) * k / 4.0;
    const double yv = ymin + (ymax - ymin) * k / 4.0;
    const double gx = left + w * k / 4.0;
    const double gy = top + h * (1.0 - k / 4.0);
    out << "<text x=\"" << gx << "\" y=\"" << top + h + 16 << "\" text-anchor=\"middle\">"
        << (opts.log_x ? std::pow(10.0, xv) : xv) << "</text>\n";
    out << "<text x=\"" << left - 6 << "\" y=\"" << gy + 4 << "\" text-anchor=\"end\">" << yv << "</text>\n";
  }
  out << "<text x=\"" << left + w / 2 << "\" y=\"" << opts.height - 8 << "\" text-anchor=\"middle\">"
      << escape(opts.x_label) << "</text>\n";
  out << "<text x=\"14\" y=\"" << top + h / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
      << top + h / 2 << ")\">" << escape(opts.y_label) << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& ser = series[s];
    const char* color = kColors[s % std::size(kColors)];
    std::string path;
    bool started = false;
    for (std::size_t i = 0; i < ser.x.size() && i < ser.y.size(); ++i) {
      if (!std::isfinite(ser.x[i]) || !std::isfinite(ser.y[i]) || (opts.log_x && ser.x[i] <= 0)) continue;
      const double X = px(ser.x[i]), Y = py(ser.y[i]);
      if (!started) {
        path += "M" + std::to_string(X) + "," + std::to_string(Y);
        started = true;
      } else {
        path += " H" + std::to_string(X) + " V" + std::to_string(Y);
      }
    }
    if (started) {
      path += " H" + std::to_string(left + w);
      out << "<path d=\"" << path << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\"/>\n";
    }
    const double ly = top + 14 + 18.0 * static_cast<double>(s);
    out << "<line x1=\"" << left + w + 10 << "\" y1=\"" << ly << "\" x2=\"" << left + w + 30 << "\" y2=\"" << ly
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << left + w + 35 << "\" y=\"" << ly + 4 << "\">" << escape(ser.label) << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace rbfmix
