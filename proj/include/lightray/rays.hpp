#pragma once

#include <complex>
#include <span>
#include <vector>

#include "lightray/stationary.hpp"

namespace lightray {

struct InflowSample {
  Vec x;  // boundary point
  Vec v;  // inward, |v|_{g_c} = 1
  double boundary_param = 0.0;
  double dir_param = 0.0;  // angle from the inward normal
};

struct RayOptions {
  double step = 0.0;  // 0: 1e-3 x chart diameter
  long max_steps = 1'000'000;
  double exit_tol = 1e-10;
};

// Nodes: n_uniform nodes at spacing `step` from s = 0, then the midpoint of the
// last partial step and the exit point.
struct RayNodes {
  std::vector<double> s;
  int n_uniform = 0;
  double step = 0.0;

  int size() const { return static_cast<int>(s.size()); }
  double exit_s() const { return s.back(); }
  // composite Simpson on the uniform part, Simpson on the tail
  template <class T>
  T integrate(std::span<const T> f) const;
  std::vector<double> weights() const;
};

// Spatial curve b(s) with the two time-rate primitives.
struct SpatialCurve {
  RayNodes nodes;
  std::vector<Vec> b, bdot;
  std::vector<double> a_plus, a_minus;  // int (eta_c b' +- sqrt(...)) ds from 0
  int sign = +1;                        // branch of the force term used
};

// beta(s) = (a(s), b(s))
struct LiftedRay {
  RayNodes nodes;
  std::vector<double> a, adot;
  std::vector<Vec> b, bdot;
  int sign = +1;

  int n() const { return static_cast<int>(b.front().size()); }
  Vec point(int k) const;
  Vec velocity(int k) const;
  LiftedRay shifted(double T) const;  // time translate
};

// Reduced G-curve on (M, g_c) from a boundary point.
SpatialCurve integrate_g_curve(const StationaryGeometry& geo, const Vec& x, const Vec& v,
                               int sign = +1, const RayOptions& opt = {});
// Geodesic of (M, g) (no force term); a_plus carries arclength in g.
SpatialCurve integrate_geodesic(const ChartedManifold& man, const Vec& x, const Vec& v,
                                const RayOptions& opt = {});
LiftedRay lift_ray(const StationaryGeometry& geo, const SpatialCurve& curve, double a0,
                   int sign = +1);

// Direct geodesic integration of a spacetime metric, exiting when the spatial part
// leaves `space`. The start vector is used as given.
LiftedRay integrate_spacetime_geodesic(const MetricField& metric, const ChartedManifold& space,
                                       const Vec& start, const Vec& velocity,
                                       const RayOptions& opt = {});
// Null geodesic of g_bar_c through (t0, x) with spatial velocity v; the time
// component is solved on the future (sign > 0) or past null cone.
LiftedRay integrate_null_geodesic_direct(const StationaryGeometry& geo, double t0, const Vec& x,
                                         const Vec& v, int sign = +1,
                                         const RayOptions& opt = {});

// sup_k |g_bar_c(beta', beta')| / |b'|^2
double null_defect(const StationaryGeometry& geo, const LiftedRay& ray);

// n_points boundary points x n_dirs inward directions (point-major order).
std::vector<InflowSample> sample_inflow(const ChartedManifold& man, int n_points, int n_dirs);
InflowSample make_inflow(const ChartedManifold& man, double boundary_param, double dir_param);

}  // namespace lightray
