#include "lightray/artifacts.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace lightray {

namespace {

struct Rgb {
  double r, g, b;
};

Rgb lerp(const Rgb& a, const Rgb& b, double s) {
  return {a.r + s * (b.r - a.r), a.g + s * (b.g - a.g), a.b + s * (b.b - a.b)};
}

// piecewise-linear palette through the given stops, s in [0, 1]
template <size_t N>
Rgb palette(const std::array<Rgb, N>& stops, double s) {
  s = std::clamp(s, 0.0, 1.0) * (N - 1);
  const size_t k = std::min(static_cast<size_t>(s), N - 2);
  return lerp(stops[k], stops[k + 1], s - k);
}

std::string hex(const Rgb& c) {
  char buf[8];
  auto q = [](double v) { return static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * 255)); };
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", q(c.r), q(c.g), q(c.b));
  return buf;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

const std::array<Rgb, 3> kDiverging{{{0.23, 0.30, 0.75}, {0.97, 0.97, 0.97}, {0.71, 0.02, 0.15}}};
const std::array<Rgb, 5> kSequential{
    {{0.27, 0.00, 0.33}, {0.23, 0.32, 0.55}, {0.13, 0.57, 0.55}, {0.37, 0.79, 0.38}, {0.99, 0.91, 0.14}}};

}  // namespace

std::string svg_heatmap(const Eigen::MatrixXd& z, const std::string& title, bool signed_scale,
                        const std::string& x_label, const std::string& y_label) {
  const long nx = z.rows(), ny = z.cols();
  const double W = 480, H = 480, left = 50, top = 40, bar = 20;
  const double cw = W / std::max<long>(nx, 1), ch = H / std::max<long>(ny, 1);
  double lo = z.size() ? z.minCoeff() : 0.0, hi = z.size() ? z.maxCoeff() : 0.0;
  if (signed_scale) {
    hi = std::max(std::abs(lo), std::abs(hi));
    lo = -hi;
  }
  const double span = hi > lo ? hi - lo : 1.0;
  auto colour = [&](double v) {
    const double s = (v - lo) / span;
    return hex(signed_scale ? palette(kDiverging, s) : palette(kSequential, s));
  };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << left + W + 90 << "\" height=\""
     << top + H + 50 << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<text x=\"" << left << "\" y=\"24\" font-size=\"14\">" << escape(title) << "</text>\n";
  os << "<g shape-rendering=\"crispEdges\">\n";
  for (long i = 0; i < nx; ++i)
    for (long j = 0; j < ny; ++j)
      os << "<rect x=\"" << num(left + i * cw) << "\" y=\"" << num(top + (ny - 1 - j) * ch) << "\" width=\""
         << num(cw) << "\" height=\"" << num(ch) << "\" fill=\"" << colour(z(i, j)) << "\"/>\n";
  os << "</g>\n";
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << W << "\" height=\"" << H
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  // colour bar
  const int steps = 64;
  const double bx = left + W + 15;
  for (int k = 0; k < steps; ++k) {
    const double v = lo + span * (k + 0.5) / steps;
    os << "<rect x=\"" << bx << "\" y=\"" << num(top + H - (k + 1) * H / steps) << "\" width=\"" << bar
       << "\" height=\"" << num(H / steps + 0.5) << "\" fill=\"" << colour(v) << "\"/>\n";
  }
  os << "<text x=\"" << bx + bar + 4 << "\" y=\"" << top + 10 << "\">" << num(hi) << "</text>\n";
  os << "<text x=\"" << bx + bar + 4 << "\" y=\"" << top + H << "\">" << num(lo) << "</text>\n";
  if (!x_label.empty())
    os << "<text x=\"" << left + W / 2 << "\" y=\"" << top + H + 30 << "\" text-anchor=\"middle\">"
       << escape(x_label) << "</text>\n";
  if (!y_label.empty())
    os << "<text transform=\"translate(20," << top + H / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
       << escape(y_label) << "</text>\n";
  os << "</svg>\n";
  return os.str();
}

std::string svg_histogram(std::span<const double> values, int bins, const std::string& title) {
  const double W = 480, H = 300, left = 50, top = 40;
  double lo = 0, hi = 1;
  if (!values.empty()) {
    auto [a, b] = std::minmax_element(values.begin(), values.end());
    lo = *a;
    hi = *b > *a ? *b : *a + 1.0;
  }
  std::vector<int> count(bins, 0);
  for (double v : values)
    ++count[std::min(bins - 1, static_cast<int>((v - lo) / (hi - lo) * bins))];
  const int peak = std::max(1, *std::max_element(count.begin(), count.end()));

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << left + W + 20 << "\" height=\""
     << top + H + 50 << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<text x=\"" << left << "\" y=\"24\" font-size=\"14\">" << escape(title) << "</text>\n";
  const double bw = W / bins;
  for (int k = 0; k < bins; ++k) {
    const double h = H * count[k] / peak;
    os << "<rect x=\"" << num(left + k * bw) << "\" y=\"" << num(top + H - h) << "\" width=\""
       << num(bw - 1) << "\" height=\"" << num(h) << "\" fill=\"#3b6fb6\"/>\n";
  }
  os << "<line x1=\"" << left << "\" y1=\"" << top + H << "\" x2=\"" << left + W << "\" y2=\"" << top + H
     << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << left << "\" y=\"" << top + H + 18 << "\">" << num(lo) << "</text>\n";
  os << "<text x=\"" << left + W << "\" y=\"" << top + H + 18 << "\" text-anchor=\"end\">" << num(hi)
     << "</text>\n";
  os << "<text x=\"" << left - 6 << "\" y=\"" << top + 10 << "\" text-anchor=\"end\">" << peak << "</text>\n";
  os << "</svg>\n";
  return os.str();
}

std::string image_csv(const Eigen::MatrixXd& z, const PixelGrid& grid) {
  std::ostringstream os;
  os.precision(10);
  os << "x,y,value\n";
  for (int i = 0; i < grid.n; ++i)
    for (int j = 0; j < grid.n; ++j)
      if (grid.inside(i, j)) os << grid.centre(i) << ',' << grid.centre(j) << ',' << z(i, j) << '\n';
  return os.str();
}

Eigen::MatrixXd sinogram_matrix(const Sinogram& s) {
  Eigen::MatrixXd m(s.rays(), s.T.size());
  for (size_t r = 0; r < s.rays(); ++r)
    for (size_t k = 0; k < s.T.size(); ++k) m(r, k) = s(r, k);
  return m;
}

}  // namespace lightray
