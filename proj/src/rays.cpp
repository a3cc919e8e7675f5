#include "lightray/rays.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

namespace lightray {

namespace {

using State = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 2 * kMaxDim + 2, 1>;

struct Trajectory {
  RayNodes nodes;
  std::vector<State> y;
};

template <class Rhs>
State rk4_step(Rhs& f, const State& y, double h) {
  const State k1 = f(y);
  const State k2 = f(State(y + 0.5 * h * k1));
  const State k3 = f(State(y + 0.5 * h * k2));
  const State k4 = f(State(y + h * k3));
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Fixed-step RK4 until rho(state) turns non-negative after having been inside; the
// crossing is bracketed by bisection on the fraction of the last step.
template <class Rhs, class Rho>
Trajectory run_to_exit(Rhs&& f, Rho&& rho, const State& y0, double h, double speed,
                       const RayOptions& opt) {
  Trajectory tr;
  tr.nodes.step = h;
  tr.nodes.s.push_back(0.0);
  tr.y.push_back(y0);
  bool inside = rho(y0) < 0.0;
  State y = y0;
  for (long k = 0; k < opt.max_steps; ++k) {
    State next = rk4_step(f, y, h);
    if (rho(next) < 0.0) {
      inside = true;
      y = next;
      tr.nodes.s.push_back((k + 1) * h);
      tr.y.push_back(y);
      continue;
    }
    const double s0 = k * h;
    tr.nodes.n_uniform = static_cast<int>(tr.y.size());
    if (!inside) {
      // never entered: zero-length ray
      tr.nodes.s.insert(tr.nodes.s.end(), {s0, s0});
      tr.y.insert(tr.y.end(), {y, y});
      return tr;
    }
    double lo = 0.0, hi = 1.0;
    while ((hi - lo) * h * speed > opt.exit_tol) {
      const double mid = 0.5 * (lo + hi);
      if (rho(rk4_step(f, y, mid * h)) < 0.0)
        lo = mid;
      else
        hi = mid;
    }
    const double th = hi * h;
    tr.nodes.s.insert(tr.nodes.s.end(), {s0 + 0.5 * th, s0 + th});
    tr.y.push_back(rk4_step(f, y, 0.5 * th));
    tr.y.push_back(rk4_step(f, y, th));
    return tr;
  }
  throw TrappedRayError("ray did not exit within " + std::to_string(opt.max_steps) + " steps");
}

double default_step(const RayOptions& opt, const ChartedManifold& m) {
  return opt.step > 0.0 ? opt.step : 1e-3 * m.diameter;
}

}  // namespace

template <class T>
T RayNodes::integrate(std::span<const T> f) const {
  T sum{};
  const int N = n_uniform - 1;
  const double h = step;
  if (N == 1) {
    sum += 0.5 * h * (f[0] + f[1]);
  } else if (N >= 2) {
    const int simpson_end = (N % 2 == 0) ? N : N - 3;
    T acc{};
    for (int k = 0; k + 2 <= simpson_end; k += 2) acc += f[k] + 4.0 * f[k + 1] + f[k + 2];
    sum += (h / 3.0) * acc;
    if (simpson_end != N) {
      const int k = N - 3;
      sum += (3.0 * h / 8.0) * (f[k] + 3.0 * f[k + 1] + 3.0 * f[k + 2] + f[k + 3]);
    }
  }
  const double tail = s.back() - s[N];
  sum += (tail / 6.0) * (f[N] + 4.0 * f[N + 1] + f[N + 2]);
  return sum;
}

template double RayNodes::integrate<double>(std::span<const double>) const;
template std::complex<double> RayNodes::integrate<std::complex<double>>(
    std::span<const std::complex<double>>) const;

std::vector<double> RayNodes::weights() const {
  std::vector<double> w(s.size(), 0.0);
  for (size_t k = 0; k < s.size(); ++k) {
    std::vector<double> e(s.size(), 0.0);
    e[k] = 1.0;
    w[k] = integrate(std::span<const double>(e));
  }
  return w;
}

Vec LiftedRay::point(int k) const {
  const int d = n();
  Vec p(d + 1);
  p[0] = a[k];
  p.tail(d) = b[k];
  return p;
}

Vec LiftedRay::velocity(int k) const {
  const int d = n();
  Vec p(d + 1);
  p[0] = adot[k];
  p.tail(d) = bdot[k];
  return p;
}

LiftedRay LiftedRay::shifted(double T) const {
  LiftedRay r = *this;
  for (double& x : r.a) x += T;
  return r;
}

SpatialCurve integrate_g_curve(const StationaryGeometry& geo, const Vec& x, const Vec& v, int sign,
                               const RayOptions& opt) {
  const int n = geo.n();
  auto rhs = [&geo, n, sign](const State& y) -> State {
    const Vec b = y.head(n);
    const Vec bd = y.segment(n, n);
    const LocalData d = local_data(geo, b);
    State out(2 * n + 2);
    out.head(n) = bd;
    out.segment(n, n) = -d.gamma.contract(bd, bd) + g_field(d, bd, sign);
    out[2 * n] = time_rate(d, bd, +1);
    out[2 * n + 1] = time_rate(d, bd, -1);
    return out;
  };
  auto rho = [&geo, n](const State& y) { return geo.base.rho(y.head(n)); };
  State y0(2 * n + 2);
  y0.head(n) = x;
  y0.segment(n, n) = v;
  y0[2 * n] = 0.0;
  y0[2 * n + 1] = 0.0;
  Trajectory tr = run_to_exit(rhs, rho, y0, default_step(opt, geo.base), v.norm(), opt);
  SpatialCurve c;
  c.nodes = std::move(tr.nodes);
  c.sign = sign;
  for (const State& y : tr.y) {
    c.b.push_back(y.head(n));
    c.bdot.push_back(y.segment(n, n));
    c.a_plus.push_back(y[2 * n]);
    c.a_minus.push_back(y[2 * n + 1]);
  }
  return c;
}

SpatialCurve integrate_geodesic(const ChartedManifold& man, const Vec& x, const Vec& v,
                                const RayOptions& opt) {
  const int n = man.dim;
  auto rhs = [&man, n](const State& y) -> State {
    const Vec b = y.head(n);
    const Vec bd = y.segment(n, n);
    State out(2 * n);
    out.head(n) = bd;
    out.tail(n) = -christoffel(man.metric, b).contract(bd, bd);
    return out;
  };
  auto rho = [&man, n](const State& y) { return man.rho(y.head(n)); };
  State y0(2 * n);
  y0.head(n) = x;
  y0.tail(n) = v;
  Trajectory tr = run_to_exit(rhs, rho, y0, default_step(opt, man), v.norm(), opt);
  SpatialCurve c;
  c.nodes = std::move(tr.nodes);
  for (const State& y : tr.y) {
    c.b.push_back(y.head(n));
    c.bdot.push_back(y.tail(n));
  }
  c.a_plus.assign(c.b.size(), 0.0);
  c.a_minus.assign(c.b.size(), 0.0);
  return c;
}

LiftedRay lift_ray(const StationaryGeometry& geo, const SpatialCurve& curve, double a0, int sign) {
  if (sign != curve.sign) throw Error("lift branch differs from the curve's force branch");
  LiftedRay r;
  r.nodes = curve.nodes;
  r.b = curve.b;
  r.bdot = curve.bdot;
  r.sign = sign;
  const auto& prim = sign > 0 ? curve.a_plus : curve.a_minus;
  r.a.resize(prim.size());
  r.adot.resize(prim.size());
  for (size_t k = 0; k < prim.size(); ++k) {
    r.a[k] = a0 + prim[k];
    const Vec& x = curve.b[k];
    const double c = geo.c(x);
    const Vec e = geo.eta_c(x);
    const double ev = e.dot(curve.bdot[k]);
    const double v2 = c * curve.bdot[k].dot(geo.base.metric.eval(x) * curve.bdot[k]);
    r.adot[k] = ev + sign * std::sqrt(ev * ev + v2);
  }
  return r;
}

LiftedRay integrate_spacetime_geodesic(const MetricField& metric, const ChartedManifold& space,
                                       const Vec& start, const Vec& velocity,
                                       const RayOptions& opt) {
  const int N = metric.dim;
  const int n = N - 1;
  auto rhs = [&metric, N](const State& y) -> State {
    const Vec p = y.head(N);
    const Vec pd = y.tail(N);
    State out(2 * N);
    out.head(N) = pd;
    out.tail(N) = -christoffel(metric, p).contract(pd, pd);
    return out;
  };
  auto rho = [&space, n](const State& y) { return space.rho(y.segment(1, n)); };
  State y0(2 * N);
  y0.head(N) = start;
  y0.tail(N) = velocity;
  Trajectory tr =
      run_to_exit(rhs, rho, y0, default_step(opt, space), velocity.tail(n).norm(), opt);
  LiftedRay r;
  r.nodes = std::move(tr.nodes);
  for (const State& y : tr.y) {
    r.a.push_back(y[0]);
    r.b.push_back(y.segment(1, n));
    r.adot.push_back(y[N]);
    r.bdot.push_back(y.segment(N + 1, n));
  }
  return r;
}

LiftedRay integrate_null_geodesic_direct(const StationaryGeometry& geo, double t0, const Vec& x,
                                         const Vec& v, int sign, const RayOptions& opt) {
  const int n = geo.n();
  const LorentzMetric L = assemble(geo, true);
  const Vec e = geo.eta_c(x);
  const double ev = e.dot(v);
  Vec start(n + 1), vel(n + 1);
  start[0] = t0;
  start.tail(n) = x;
  vel[0] = ev + sign * std::sqrt(ev * ev + v.dot(geo.g_c(x) * v));
  vel.tail(n) = v;
  LiftedRay r = integrate_spacetime_geodesic(L.field, geo.base, start, vel, opt);
  r.sign = sign;
  return r;
}

double null_defect(const StationaryGeometry& geo, const LiftedRay& ray) {
  const LorentzMetric L = assemble(geo, true);
  double worst = 0.0;
  for (int k = 0; k < ray.nodes.size(); ++k) {
    const Mat G = L.at(ray.b[k]);
    const Vec w = ray.velocity(k);
    const double scale = ray.bdot[k].dot(G.bottomRightCorner(ray.n(), ray.n()) * ray.bdot[k]);
    worst = std::max(worst, std::abs(w.dot(G * w)) / scale);
  }
  return worst;
}

InflowSample make_inflow(const ChartedManifold& man, double boundary_param, double dir_param) {
  InflowSample s;
  s.boundary_param = boundary_param;
  s.dir_param = dir_param;
  s.x = man.boundary_point(boundary_param);
  const Vec nin = man.inward_normal(boundary_param);
  Vec t(2);
  t << -nin[1], nin[0];
  Vec v = std::cos(dir_param) * nin + std::sin(dir_param) * t;
  s.v = v / std::sqrt(v.dot(man.metric.eval(s.x) * v));
  return s;
}

std::vector<InflowSample> sample_inflow(const ChartedManifold& man, int n_points, int n_dirs) {
  std::vector<InflowSample> out;
  out.reserve(static_cast<size_t>(n_points) * n_dirs);
  // the square's corners sit at integer arclength, so shift its points by half a cell
  const double shift = man.shape == ChartShape::square ? 0.5 : 0.0;
  for (int i = 0; i < n_points; ++i) {
    const double th = man.boundary_period * (i + shift) / n_points;
    for (int j = 0; j < n_dirs; ++j) {
      const double psi = -0.5 * std::numbers::pi + (j + 0.5) * std::numbers::pi / n_dirs;
      out.push_back(make_inflow(man, th, psi));
    }
  }
  return out;
}

}  // namespace lightray
