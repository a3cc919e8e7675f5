#include "lightray/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "lightray/parallel.hpp"

namespace lightray {

namespace {

double node_integral(const RayNodes& nodes, const std::vector<double>& f) {
  return nodes.integrate(std::span<const double>(f));
}

cplx node_integral(const RayNodes& nodes, const std::vector<cplx>& f) {
  return nodes.integrate(std::span<const cplx>(f));
}

std::vector<double> trapezoid_weights(std::span<const double> x) {
  std::vector<double> w(x.size(), 0.0);
  for (size_t i = 0; i + 1 < x.size(); ++i) {
    const double h = x[i + 1] - x[i];
    w[i] += 0.5 * h;
    w[i + 1] += 0.5 * h;
  }
  return w;
}

void check_support(const ChartedManifold& M, const SpacetimeTensorField& a, const char* what) {
  if (a.spatial) {
    const SupportBall& B = *a.spatial;
    for (int k = 0; k < 64; ++k) {
      const double th = 2 * std::numbers::pi * k / 64;
      Vec p = B.centre;
      p[0] += B.radius * std::cos(th);
      p[1] += B.radius * std::sin(th);
      if (!M.inside(p))
        throw SupportError(std::string(what) + ": spatial support reaches the boundary");
    }
    return;
  }
  const bool finite = std::isfinite(a.t_min) && std::isfinite(a.t_max);
  const double lo = finite ? a.t_min : -10.0, hi = finite ? a.t_max : 10.0;
  for (int i = 0; i < 64; ++i) {
    const Vec x = M.boundary_point(M.boundary_period * i / 64);
    for (int j = 0; j <= 16; ++j) {
      Vec tx(x.size() + 1);
      tx[0] = lo + (hi - lo) * j / 16;
      tx.tail(x.size()) = x;
      if (a(tx).max_abs() > 1e-14)
        throw SupportError(std::string(what) + ": field does not vanish on the boundary");
    }
  }
}

}  // namespace

bool SpacetimeTensorField::vanishes_near(const Vec& tx, double margin) const {
  if (tx[0] < t_min - margin || tx[0] > t_max + margin) return true;
  if (spatial) {
    const int n = static_cast<int>(tx.size()) - 1;
    if ((tx.tail(n) - spatial->centre).norm() > spatial->radius + margin) return true;
  }
  return false;
}

SpacetimeTensorField time_shifted(const SpacetimeTensorField& alpha, double T) {
  SpacetimeTensorField out = alpha;
  out.field.fn = [f = alpha.field.fn, T](const Vec& tx) {
    Vec p = tx;
    p[0] -= T;
    return f(p);
  };
  out.t_min += T;
  out.t_max += T;
  return out;
}

double light_ray_transform(const StationaryGeometry&, const SpacetimeTensorField& alpha,
                           const LiftedRay& ray) {
  std::vector<double> f(ray.nodes.size(), 0.0);
  for (int k = 0; k < ray.nodes.size(); ++k) {
    const Vec p = ray.point(k);
    if (!alpha.vanishes_near(p, 0.0)) f[k] = alpha.eval(p, ray.velocity(k));
  }
  return node_integral(ray.nodes, f);
}

double geodesic_ray_transform(const TensorField& omega, const SpatialCurve& gamma) {
  std::vector<double> f(gamma.nodes.size());
  for (int k = 0; k < gamma.nodes.size(); ++k) f[k] = omega(gamma.b[k]).contract(gamma.bdot[k]);
  return node_integral(gamma.nodes, f);
}

double geodesic_ray_transform(const ChartedManifold& man, const TensorField& omega,
                              const InflowSample& sample, const RayOptions& opt) {
  return geodesic_ray_transform(omega, integrate_geodesic(man, sample.x, sample.v, opt));
}

double generalized_ray_transform(const ScalarField& f, const SpatialCurve& curve) {
  std::vector<double> v(curve.nodes.size());
  for (int k = 0; k < curve.nodes.size(); ++k) v[k] = f(curve.b[k]);
  return node_integral(curve.nodes, v);
}

double generalized_ray_transform(const StationaryGeometry& geo, const ScalarField& f,
                                 const InflowSample& sample, const RayOptions& opt) {
  return generalized_ray_transform(f, integrate_g_curve(geo, sample.x, sample.v, +1, opt));
}

cplx moment_transform(const TensorField& omega, const SpatialCurve& gamma, int j) {
  std::vector<cplx> f(gamma.nodes.size());
  for (int k = 0; k < gamma.nodes.size(); ++k) {
    const cplx w = std::pow(cplx(0.0, gamma.nodes.s[k]), j);
    f[k] = w * omega(gamma.b[k]).contract(gamma.bdot[k]);
  }
  return node_integral(gamma.nodes, f);
}

cplx moment_transform(const ChartedManifold& man, const TensorField& omega,
                      const InflowSample& sample, int j, const RayOptions& opt) {
  return moment_transform(omega, integrate_geodesic(man, sample.x, sample.v, opt), j);
}

cplx time_fourier(const SpacetimeTensorField& f, const Vec& x, double tau, int intervals) {
  if (!std::isfinite(f.t_min) || !std::isfinite(f.t_max))
    throw SupportError("time Fourier transform needs finite temporal support");
  if (intervals % 2) ++intervals;
  const double h = (f.t_max - f.t_min) / intervals;
  Vec tx(x.size() + 1);
  tx.tail(x.size()) = x;
  cplx sum = 0.0;
  for (int i = 0; i <= intervals; ++i) {
    const double t = f.t_min + i * h;
    tx[0] = t;
    const double w = (i == 0 || i == intervals) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    sum += w * std::exp(cplx(0.0, -tau * t)) * f(tx)[0];
  }
  return sum * (h / 3.0);
}

std::vector<double> covering_T_grid(const SpacetimeTensorField& f, const LiftedRay& ray,
                                    double dT) {
  const auto [amin, amax] = std::minmax_element(ray.a.begin(), ray.a.end());
  const double lo = f.t_min - *amax, hi = f.t_max - *amin;
  const double margin = 0.1 * (hi - lo);
  const int n = static_cast<int>(std::ceil((hi - lo + 2 * margin) / dT));
  std::vector<double> T(n + 1);
  for (int i = 0; i <= n; ++i) T[i] = lo - margin + i * dT;
  return T;
}

SliceComparison fourier_slice(const StationaryGeometry& geo, const SpacetimeTensorField& f,
                              const LiftedRay& base, double tau, std::span<const double> T_grid) {
  const auto [amin, amax] = std::minmax_element(base.a.begin(), base.a.end());
  if (T_grid.empty() || T_grid.front() > f.t_min - *amax || T_grid.back() < f.t_max - *amin)
    throw SupportError("T grid does not cover the temporal support seen along the ray");
  SliceComparison out;
  const std::vector<double> w = trapezoid_weights(T_grid);
  for (size_t i = 0; i < T_grid.size(); ++i) {
    const double L = light_ray_transform(geo, f, base.shifted(T_grid[i]));
    out.lhs += w[i] * std::exp(cplx(0.0, -tau * T_grid[i])) * L;
    out.scale += w[i] * std::abs(L);
  }
  std::vector<cplx> g(base.nodes.size());
  for (int k = 0; k < base.nodes.size(); ++k)
    g[k] = std::exp(cplx(0.0, tau * base.a[k])) * time_fourier(f, base.b[k], tau);
  out.rhs = node_integral(base.nodes, g);
  return out;
}

SliceComparison fourier_slice(const StationaryGeometry& geo, const SpacetimeTensorField& f,
                              const InflowSample& sample, double tau,
                              std::span<const double> T_grid, const RayOptions& opt) {
  const LiftedRay base = lift_ray(geo, integrate_g_curve(geo, sample.x, sample.v, +1, opt), 0.0);
  return fourier_slice(geo, f, base, tau, T_grid);
}

PreparedRay prepare_ray(const StationaryGeometry& geo, const LiftedRay& ray) {
  const LorentzMetric L = assemble(geo, true);
  PreparedRay p;
  p.ray = ray;
  p.gamma.reserve(ray.nodes.size());
  p.g.reserve(ray.nodes.size());
  for (int k = 0; k < ray.nodes.size(); ++k) {
    const Vec x = ray.point(k);
    p.gamma.push_back(christoffel(L.field, x));
    p.g.push_back(L.field.eval(x));
  }
  return p;
}

GaugeKernelResult verify_gauge_kernel(const StationaryGeometry& geo, const SpacetimeTensorField& T,
                                      const SpacetimeTensorField* U,
                                      std::span<const PreparedRay> rays) {
  check_support(geo.base, T, "T");
  if (U) check_support(geo.base, *U, "U");
  const double h = geo.base.fd_step();
  const FdOptions fd{h, nullptr};
  GaugeKernelResult res;
  res.values.assign(rays.size(), 0.0);
  std::vector<double> scales(rays.size(), 0.0);
  parallel_for(rays.size(), [&](size_t r) {
    const PreparedRay& P = rays[r];
    const int K = P.ray.nodes.size();
    std::vector<double> f(K, 0.0), fa(K, 0.0);
    for (int k = 0; k < K; ++k) {
      const Vec x = P.ray.point(k);
      const bool t_zero = T.vanishes_near(x, 2 * h);
      const bool u_zero = !U || U->vanishes_near(x, 0.0);
      if (t_zero && u_zero) continue;
      const Vec w = P.ray.velocity(k);
      SymTensor alpha(T.field.dim, T.rank() + 1);
      if (!t_zero) {
        const auto dT = partials(T.field, x, fd);
        alpha = sym_cov_derivative(P.gamma[k], T(x),
                                   std::span<const SymTensor>(dT.data(), T.field.dim));
        fa[k] = std::abs(alpha.contract(w));
      }
      if (!u_zero) alpha += metric_product((*U)(x), P.g[k]);
      f[k] = alpha.contract(w);
    }
    res.values[r] = node_integral(P.ray.nodes, f);
    scales[r] = node_integral(P.ray.nodes, fa);
  });
  for (size_t r = 0; r < rays.size(); ++r) {
    res.max_abs = std::max(res.max_abs, std::abs(res.values[r]));
    res.field_scale = std::max(res.field_scale, scales[r]);
  }
  return res;
}

GaugeKernelResult verify_gauge_kernel(const StationaryGeometry& geo, const SpacetimeTensorField& T,
                                      const SpacetimeTensorField* U,
                                      std::span<const LiftedRay> rays) {
  std::vector<PreparedRay> prepared(rays.size());
  parallel_for(rays.size(), [&](size_t i) { prepared[i] = prepare_ray(geo, rays[i]); });
  return verify_gauge_kernel(geo, T, U, std::span<const PreparedRay>(prepared));
}

SpacetimeTensorField gauge_tensor(const StationaryGeometry& geo, const SpacetimeTensorField& T,
                                  const SpacetimeTensorField* U) {
  check_support(geo.base, T, "T");
  if (U) check_support(geo.base, *U, "U");
  const LorentzMetric G = assemble(geo, true);
  MetricField g = G.field;
  g.fd_step = geo.base.fd_step();
  g.chart_contains = nullptr;
  const int N = T.field.dim, m = T.rank() + 1;
  const double margin = 2 * g.fd_step;
  std::optional<SpacetimeTensorField> u;
  if (U) u = *U;
  SpacetimeTensorField out;
  out.field = {N, m, [=](const Vec& tx) {
                 SymTensor a(N, m);
                 if (!T.vanishes_near(tx, margin)) a = sym_cov_derivative(g, T.field, tx);
                 if (u && !u->vanishes_near(tx, 0.0)) a += metric_product((*u)(tx), G.at(tx.tail(N - 1)));
                 return a;
               }};
  out.t_min = U ? std::min(T.t_min, U->t_min) : T.t_min;
  out.t_max = U ? std::max(T.t_max, U->t_max) : T.t_max;
  if (T.spatial && (!U || U->spatial)) {
    SupportBall b = *T.spatial;
    b.radius += margin;
    if (U) b.radius = std::max(b.radius, (U->spatial->centre - b.centre).norm() + U->spatial->radius);
    out.spatial = b;
  }
  return out;
}

ConformalCheck conformal_reparam_check(const StationaryGeometry& geo,
                                       const SpacetimeTensorField& alpha, const ScalarField& c,
                                       bool c_static, const LiftedRay& ray) {
  const int m = alpha.rank();
  ConformalCheck out;
  std::vector<double> f(ray.nodes.size());
  for (int k = 0; k < ray.nodes.size(); ++k) {
    const Vec p = ray.point(k);
    f[k] = std::pow(c(p), 1 - m) * alpha.eval(p, ray.velocity(k));
  }
  out.rhs = node_integral(ray.nodes, f);

  MetricField gt = assemble(geo, true).field;
  gt.derivative = nullptr;
  gt.eval = [base = gt.eval, c](const Vec& x) -> Mat { return c(x) * base(x); };
  if (!c_static) gt.constant_dirs = 0;
  const Vec start = ray.point(0);
  const Vec vel = ray.velocity(0) / c(start);
  RayOptions opt;
  opt.step = ray.nodes.step;
  const LiftedRay tilde = integrate_spacetime_geodesic(gt, geo.base, start, vel, opt);
  std::vector<double> g(tilde.nodes.size());
  for (int k = 0; k < tilde.nodes.size(); ++k)
    g[k] = alpha.eval(tilde.point(k), tilde.velocity(k));
  out.lhs = node_integral(tilde.nodes, g);
  return out;
}

}  // namespace lightray
