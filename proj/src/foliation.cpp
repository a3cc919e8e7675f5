#include "lightray/foliation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <set>

namespace lightray {

FoliationReport foliation_check(const StationaryGeometry& geo, const ScalarField& rho_in,
                                int n_curves, std::uint64_t seed, const RayOptions& opt) {
  FoliationReport rep;
  rep.n_curves = n_curves;
  const ChartedManifold& M = geo.base;

  // orientation: the boundary must be the top level set
  double bmean = 0.0, imean = 0.0, gmax = 0.0;
  const int nb = 64;
  for (int i = 0; i < nb; ++i) bmean += rho_in(M.boundary_point(M.boundary_period * i / nb)) / nb;
  int ni = 0;
  for (int i = 0; i < nb; ++i) {
    const double t = M.boundary_period * (i + 0.5) / nb;
    for (double f : {0.25, 0.5, 0.75}) {
      // points pulled inward along the normal
      Vec x = M.boundary_point(t) + f * 0.25 * M.diameter * M.inward_normal(t);
      if (!M.inside(x)) continue;
      imean += rho_in(x);
      ++ni;
      Vec g(M.dim);
      for (int k = 0; k < M.dim; ++k) g[k] = partial4(rho_in, x, k, M.fd_step(), nullptr);
      gmax = std::max(gmax, g.norm());
    }
  }
  imean /= std::max(ni, 1);
  if (gmax < 1e-14) {
    rep.degenerate = true;
    return rep;
  }
  rep.flipped = bmean < imean;
  const double sgn = rep.flipped ? -1.0 : 1.0;
  auto rho = [&](const Vec& x) { return sgn * rho_in(x); };

  const ChartedManifold Mc = geo.conformal_manifold();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> Ut(0.0, M.boundary_period);
  std::uniform_real_distribution<double> Up(-0.49 * std::numbers::pi, 0.49 * std::numbers::pi);
  rep.worst_margin = std::numeric_limits<double>::infinity();

  for (int c = 0; c < n_curves; ++c) {
    const double th = Ut(rng);
    const double psi = Up(rng);
    const InflowSample s = make_inflow(Mc, th, psi);
    const SpatialCurve curve = integrate_g_curve(geo, s.x, s.v, +1, opt);
    const int N = curve.nodes.n_uniform - 1;
    if (N < 2) continue;
    const double h = curve.nodes.step;
    std::vector<double> r(N + 1), d1(N + 1);
    double gsup = 0.0, vsup = 0.0;
    for (int k = 0; k <= N; ++k) {
      const Vec& x = curve.b[k];
      r[k] = rho(x);
      Vec g(M.dim);
      for (int a = 0; a < M.dim; ++a) g[a] = partial4(rho, x, a, M.fd_step(), nullptr);
      d1[k] = g.dot(curve.bdot[k]);
      gsup = std::max(gsup, g.norm());
      vsup = std::max(vsup, curve.bdot[k].norm());
    }
    const double tiny = 1e-6 * gsup * vsup;
    std::set<int> hits;
    for (int k = 1; k < N; ++k) {
      if (std::abs(d1[k]) < tiny) hits.insert(k);
      if ((d1[k] < 0) != (d1[k + 1] < 0))
        hits.insert(std::abs(d1[k]) <= std::abs(d1[k + 1]) ? k : std::min(k + 1, N - 1));
    }
    for (int k : hits) {
      const double d2 = (r[k + 1] - 2 * r[k] + r[k - 1]) / (h * h);
      ++rep.n_tangencies;
      rep.margins.push_back(d2);
      rep.worst_margin = std::min(rep.worst_margin, d2);
      if (!(d2 > 0.0)) rep.failures.push_back({c, curve.nodes.s[k], curve.b[k], d2});
    }
  }
  if (rep.n_tangencies == 0) rep.worst_margin = 0.0;
  rep.pass = rep.failures.empty();
  return rep;
}

FoliationSweep foliation_sweep(const std::vector<double>& eps, int n_curves, std::uint64_t seed,
                               const RayOptions& opt) {
  FoliationSweep out;
  ScalarField rho = [](const Vec& x) { return 1.0 - x.squaredNorm(); };
  for (double e : eps) {
    GeometrySpec spec;
    spec.eta = "rotation(" + std::to_string(e) + ")";
    const StationaryGeometry geo = make_geometry(spec);
    const FoliationReport r = foliation_check(geo, rho, n_curves, seed, opt);
    out.eps.push_back(e);
    out.pass.push_back(r.pass);
    out.worst_margin.push_back(r.worst_margin);
    if (!r.pass && !out.threshold) out.threshold = e;
  }
  return out;
}

}  // namespace lightray
