#include "lightray/manifold.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>

namespace lightray {

namespace {

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

ChartedManifold disc_common(std::string id) {
  ChartedManifold m;
  m.id = std::move(id);
  m.dim = 2;
  m.shape = ChartShape::disc;
  m.rho = [](const Vec& x) { return x.squaredNorm() - 1.0; };
  m.diameter = 2.0;
  m.boundary_period = 2 * std::numbers::pi;
  m.boundary_point = [](double th) { return vec2(std::cos(th), std::sin(th)); };
  m.inward_normal = [](double th) { return vec2(-std::cos(th), -std::sin(th)); };
  m.metric.dim = 2;
  m.metric.fd_step = m.fd_step();
  m.metric.chart_contains = [](const Vec& x) { return x.squaredNorm() < 9.0; };
  return m;
}

void flat_derivative(const Vec& x, std::array<Mat, kMaxDim>& dg) {
  for (int k = 0; k < x.size(); ++k) dg[k] = Mat::Zero(x.size(), x.size());
}

}  // namespace

Vec ChartedManifold::rho_gradient(const Vec& x) const {
  Vec g(dim);
  for (int k = 0; k < dim; ++k) g[k] = partial4(rho, x, k, fd_step(), metric.chart_contains);
  return g;
}

ChartedManifold flat_disc() {
  ChartedManifold m = disc_common("flat-disc");
  m.metric.eval = [](const Vec& x) -> Mat { return Mat::Identity(x.size(), x.size()); };
  m.metric.derivative = flat_derivative;
  return m;
}

ChartedManifold polar_disc() {
  ChartedManifold m;
  m.id = "polar-disc";
  m.dim = 2;
  m.shape = ChartShape::polar_disc;
  m.rho = [](const Vec& x) { return x[0] * x[0] - 1.0; };
  m.diameter = 2.0;
  m.boundary_period = 2 * std::numbers::pi;
  m.boundary_point = [](double th) { return vec2(1.0, th); };
  m.inward_normal = [](double) { return vec2(-1.0, 0.0); };
  m.metric.dim = 2;
  m.metric.fd_step = m.fd_step();
  m.metric.chart_contains = [](const Vec& x) { return x[0] > 0.0; };
  m.metric.constant_dirs = 0b10;
  m.metric.eval = [](const Vec& x) -> Mat {
    Mat g = Mat::Zero(2, 2);
    g(0, 0) = 1.0;
    g(1, 1) = x[0] * x[0];
    return g;
  };
  m.metric.derivative = [](const Vec& x, std::array<Mat, kMaxDim>& dg) {
    dg[0] = Mat::Zero(2, 2);
    dg[1] = Mat::Zero(2, 2);
    dg[0](1, 1) = 2.0 * x[0];
  };
  return m;
}

ChartedManifold conformal_disc(double a) {
  ChartedManifold m = disc_common("conformal-disc(" + std::to_string(a) + ")");
  m.metric.eval = [a](const Vec& x) -> Mat {
    return std::exp(a * x.squaredNorm()) * Mat::Identity(x.size(), x.size());
  };
  return m;
}

ChartedManifold flat_square() {
  ChartedManifold m;
  m.id = "flat-square";
  m.dim = 2;
  m.shape = ChartShape::square;
  m.rho = [](const Vec& x) {
    return std::max({-x[0], x[0] - 1.0, -x[1], x[1] - 1.0});
  };
  m.diameter = std::sqrt(2.0);
  // arclength along the four sides, counter-clockwise from the origin
  m.boundary_period = 4.0;
  m.boundary_point = [](double u) {
    u = u - 4.0 * std::floor(u / 4.0);
    int side = std::min(3, static_cast<int>(u));
    double f = u - side;
    switch (side) {
      case 0: return vec2(f, 0.0);
      case 1: return vec2(1.0, f);
      case 2: return vec2(1.0 - f, 1.0);
      default: return vec2(0.0, 1.0 - f);
    }
  };
  m.inward_normal = [](double u) {
    u = u - 4.0 * std::floor(u / 4.0);
    switch (std::min(3, static_cast<int>(u))) {
      case 0: return vec2(0.0, 1.0);
      case 1: return vec2(-1.0, 0.0);
      case 2: return vec2(0.0, -1.0);
      default: return vec2(1.0, 0.0);
    }
  };
  m.metric.dim = 2;
  m.metric.fd_step = m.fd_step();
  m.metric.chart_contains = [](const Vec& x) {
    return x[0] > -1.0 && x[0] < 2.0 && x[1] > -1.0 && x[1] < 2.0;
  };
  m.metric.eval = [](const Vec& x) -> Mat { return Mat::Identity(x.size(), x.size()); };
  m.metric.derivative = flat_derivative;
  return m;
}

CallExpr parse_call(std::string_view text) {
  auto trim = [](std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
  };
  text = trim(text);
  CallExpr out;
  auto open = text.find('(');
  if (open == std::string_view::npos) {
    out.name = std::string(text);
  } else {
    if (text.back() != ')') throw ConfigError("unbalanced parentheses in '" + std::string(text) + "'");
    out.name = std::string(trim(text.substr(0, open)));
    std::string_view body = text.substr(open + 1, text.size() - open - 2);
    while (!trim(body).empty()) {
      auto comma = body.find(',');
      std::string_view tok = trim(body.substr(0, comma));
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || ptr != tok.data() + tok.size())
        throw ConfigError("bad numeric argument '" + std::string(tok) + "' in '" +
                          std::string(text) + "'");
      out.args.push_back(v);
      if (comma == std::string_view::npos) break;
      body.remove_prefix(comma + 1);
    }
  }
  if (out.name.empty()) throw ConfigError("empty identifier");
  return out;
}

ChartedManifold make_manifold(std::string_view id) {
  CallExpr e = parse_call(id);
  auto want = [&](size_t n) {
    if (e.args.size() != n)
      throw ConfigError("'" + e.name + "' takes " + std::to_string(n) + " argument(s)");
  };
  if (e.name == "flat-disc") {
    want(0);
    return flat_disc();
  }
  if (e.name == "polar-disc") {
    want(0);
    return polar_disc();
  }
  if (e.name == "conformal-disc") {
    want(1);
    return conformal_disc(e.args[0]);
  }
  if (e.name == "flat-square") {
    want(0);
    return flat_square();
  }
  throw ConfigError("unknown base manifold id '" + std::string(id) + "'");
}

}  // namespace lightray
