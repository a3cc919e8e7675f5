#include "lightray/theorem2.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lightray/errors.hpp"
#include "lightray/parallel.hpp"
#include "lightray/reconstruction.hpp"

namespace lightray {

BlockSplit split_blocks(const SpacetimeTensorField& alpha, double t) {
  const int m = alpha.rank();
  if (m < 1 || m > 2) throw RankError("block split needs rank 1 or 2");
  const int n = alpha.field.dim - 1;
  auto at = [a = alpha.field, t, n](const Vec& x) {
    Vec tx(n + 1);
    tx[0] = t;
    tx.tail(n) = x;
    return a(tx);
  };
  BlockSplit s;
  if (m == 1) {
    s.f = {n, 0, [at, n](const Vec& x) { return SymTensor::scalar(at(x).at({0}), n); }};
    s.omega = {n, 1, [at, n](const Vec& x) {
                 const SymTensor a = at(x);
                 Vec w(n);
                 for (int i = 0; i < n; ++i) w[i] = a.at({i + 1});
                 return SymTensor::from_covector(w);
               }};
    s.b = [](const Vec&) { return 0.0; };
    return s;
  }
  s.f = {n, 1, [at, n](const Vec& x) {
           const SymTensor a = at(x);
           Vec w(n);
           for (int i = 0; i < n; ++i) w[i] = 2 * a.at({0, i + 1});
           return SymTensor::from_covector(w);
         }};
  // flat g: omega_ij = alpha_ij + alpha_00 delta_ij
  s.omega = {n, 2, [at, n](const Vec& x) {
               const SymTensor a = at(x);
               SymTensor w(n, 2);
               for (int i = 0; i < n; ++i)
                 for (int j = i; j < n; ++j) w.set({i, j}, a.at({i + 1, j + 1}) + (i == j ? a.at({0, 0}) : 0.0));
               return w;
             }};
  s.b = [at](const Vec& x) { return -at(x).at({0, 0}); };
  return s;
}

bool Theorem2Report::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const Theorem2Check& c) { return c.pass; });
}

namespace {

using Family = std::vector<GridField>;

// sum_k c_k u_k, or sum_k |c_k| |u_k| when absolute
GridField combine(const Family& u, const std::vector<double>& c, bool absolute = false) {
  GridField out = u.front() * 0.0;
  for (size_t k = 0; k < u.size(); ++k)
    for (size_t q = 0; q < out.comps.size(); ++q)
      for (size_t i = 0; i < out.comps[q].size(); ++i)
        out.comps[q][i] += absolute ? std::abs(c[k] * u[k].comps[q][i]) : c[k] * u[k].comps[q][i];
  return out;
}

struct Moments {
  std::vector<double> t, w;
  double delta = 0.0;

  // M_j[u] = int t^j u dt from difference quotients of hat u at tau = 0
  GridField operator()(const Family& u, int j) const {
    if (j == 0) return combine(u, w);
    auto quotient = [&](double d) {
      std::vector<double> c(t.size());
      for (size_t k = 0; k < t.size(); ++k)
        c[k] = w[k] * (j == 1 ? std::sin(d * t[k]) / d : (2 - 2 * std::cos(d * t[k])) / (d * d));
      return combine(u, c);
    };
    return (4.0 / 3.0) * quotient(delta) - (1.0 / 3.0) * quotient(2 * delta);
  }
  // max over nodes of int |t|^j |u| dt
  double scale(const Family& u, int j) const {
    std::vector<double> c(t.size());
    for (size_t k = 0; k < t.size(); ++k) c[k] = w[k] * std::pow(std::abs(t[k]), j);
    return combine(u, c, true).max_abs();
  }
};

double ratio(double v, double s) { return s > 0 ? v / s : v; }

}  // namespace

Theorem2Report theorem2_suite(const StationaryGeometry& geo, const SpacetimeTensorField& alpha,
                              const Theorem2Options& opt) {
  const int m = alpha.rank();
  if (m < 1 || m > 2) throw RankError("theorem-2 suite covers m = 1 and m = 2");
  Vec origin = Vec::Zero(geo.n());
  if (!geo.eta_zero || !geo.kappa_constant || geo.kappa(origin) != 1.0 || geo.base.id != "flat-disc")
    throw Error("theorem-2 suite is implemented for Minkowski x flat disc only");
  if (!std::isfinite(alpha.t_min) || !std::isfinite(alpha.t_max))
    throw SupportError("theorem-2 suite needs finite temporal support");
  if (opt.n_times < 5) throw ResolutionError("theorem-2 suite needs at least 5 time slices");

  Theorem2Report rep;
  rep.rank = m;

  // sinogram over translations covering the support
  {
    std::vector<double> T(opt.n_T);
    const double lo = alpha.t_min - geo.base.diameter, hi = alpha.t_max;
    for (int k = 0; k < opt.n_T; ++k) T[k] = lo + (hi - lo) * k / (opt.n_T - 1);
    RayOptions ro;
    ro.step = opt.ray_step;
    rep.max_sinogram = forward_scan(geo, alpha, opt.rays_np, opt.rays_nd, T, ro).max_abs();
  }

  const GridSpec grid{GridDomain::disc, opt.grid_n};
  Moments M;
  M.t.resize(opt.n_times);
  for (int k = 0; k < opt.n_times; ++k)
    M.t[k] = alpha.t_min + (alpha.t_max - alpha.t_min) * k / (opt.n_times - 1);
  M.w.assign(opt.n_times, (alpha.t_max - alpha.t_min) / (opt.n_times - 1));
  M.w.front() *= 0.5;
  M.w.back() *= 0.5;
  M.delta = 0.05 / std::max({std::abs(alpha.t_min), std::abs(alpha.t_max), 1e-12});

  const HelmholtzSolver S1(grid, 1, false);
  std::optional<HelmholtzSolver> S2;
  if (m == 2) S2.emplace(grid, 2, true);

  const size_t K = opt.n_times;
  Family om(K), fs(K), tfs(K), wt(K), p(K), a1s(K), h(K);
  std::vector<double> amax(K);
  parallel_for(K, [&](size_t k) {
    const BlockSplit B = split_blocks(alpha, M.t[k]);
    const GridField F = GridField::sample(grid, B.f);
    om[k] = GridField::sample(grid, B.omega);
    amax[k] = std::max(F.max_abs(), om[k].max_abs());
    if (m == 1) {
      const Helmholtz H = S1.solve(om[k]);
      fs[k] = F;
      tfs[k] = H.omega_s;
      a1s[k] = H.h;  // a scalar potential is its own solenoidal part
    } else {
      const Helmholtz Hf = S1.solve(F);
      fs[k] = Hf.omega_s;
      p[k] = Hf.h;
      const TfHelmholtz Hw = S2->solve_tf(om[k]);
      tfs[k] = Hw.omega_tfs;
      wt[k] = Hw.omega_t;
      const Helmholtz Ha = S1.solve(Hw.h);
      a1s[k] = Ha.omega_s;
      h[k] = Ha.h;
    }
  });
  rep.alpha_scale = *std::max_element(amax.begin(), amax.end());

  auto add = [&](std::string name, double value, double tol) {
    rep.checks.push_back({std::move(name), value, tol, value <= tol});
  };
  add("sinogram_max", rep.max_sinogram, opt.sinogram_tol);

  rep.tfs_zero_mode = M(tfs, 0).max_abs();
  const std::string tfs_name = m == 1 ? "omega_s_hat" : "omega_tfs_hat";
  add("f_s_hat_0", ratio(M(fs, 0).max_abs(), M.scale(fs, 0)), opt.grid_tol);
  for (int j = 0; j <= 2; ++j)
    add(tfs_name + "_d" + std::to_string(j), ratio(M(tfs, j).max_abs(), M.scale(om, j)), opt.grid_tol);
  // d_tau^j hat f(0) = i j d_tau^{j-1} hat a_1^s(0), i.e. M_j[f] = -j M_{j-1}[a_1^s]
  add("f_j1", ratio((M(fs, 1) + M(a1s, 0)).max_abs(), std::max(M.scale(fs, 1), M.scale(a1s, 0))),
      opt.grid_tol);
  add("f_j2", ratio((M(fs, 2) + 2.0 * M(a1s, 1)).max_abs(), std::max(M.scale(fs, 2), 2 * M.scale(a1s, 1))),
      opt.grid_tol);

  if (m == 2) {
    add("omega_t_hat_0", ratio(M(wt, 0).max_abs(), M.scale(om, 0)), opt.grid_tol);
    // a_0 = int_{-inf}^t omega^t - p, where -d_t p g is the trace moved out of f
    const TimeFamily prim = primitive_in_time({M.t, wt}, std::numeric_limits<double>::infinity());
    Family a0(K);
    for (size_t k = 0; k < K; ++k) a0[k] = prim.slices[k] - p[k];
    // a_0 is a difference of two separately discretized fields of the size of T_0,
    // so the scale is the larger of those, not |a_0|
    const double s0 = std::max({M.scale(prim.slices, 0), M.scale(p, 0), M.scale(h, 0)});
    const double s1 = std::max({M.scale(prim.slices, 1), M.scale(p, 1), M.scale(h, 0)});
    add("a0_hat_0", ratio(M(a0, 0).max_abs(), s0), opt.nested_tol);
    // d_tau hat a_0(0) = -i hat h(0), i.e. M_1[a_0] = M_0[h]
    add("a0_j2", ratio((M(a0, 1) - M(h, 0)).max_abs(), s1), opt.nested_tol);
  }

  if (opt.noise_floor > 0) {
    const double r = rep.tfs_zero_mode / opt.noise_floor;
    rep.checks.push_back({tfs_name + "_detection", r, opt.detection_factor, r >= opt.detection_factor});
  }
  return rep;
}

}  // namespace lightray
