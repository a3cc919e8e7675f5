#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "lightray/metric.hpp"

namespace lightray {

enum class ChartShape { disc, polar_disc, square };

// A compact manifold with boundary covered by one chart.
struct ChartedManifold {
  std::string id;
  int dim = 2;
  MetricField metric;
  ChartShape shape = ChartShape::disc;
  std::function<double(const Vec&)> rho;  // < 0 inside, 0 on the boundary
  double diameter = 2.0;
  double boundary_period = 0.0;
  std::function<Vec(double)> boundary_point;
  std::function<Vec(double)> inward_normal;  // unit in the chart's Euclidean sense

  bool inside(const Vec& x) const { return rho(x) < 0.0; }
  double fd_step() const { return 1e-4 * diameter; }
  Vec rho_gradient(const Vec& x) const;
};

ChartedManifold flat_disc();
ChartedManifold polar_disc();
// g = exp(a |x|^2) times the Euclidean metric on the unit disc
ChartedManifold conformal_disc(double a);
// the unit square [0, 1]^2
ChartedManifold flat_square();

// "flat-disc", "polar-disc", "conformal-disc(a)", "flat-square"
ChartedManifold make_manifold(std::string_view id);

struct CallExpr {
  std::string name;
  std::vector<double> args;
};
// "name" or "name(a, b, ...)" with numeric arguments; throws ConfigError.
CallExpr parse_call(std::string_view text);

}  // namespace lightray
