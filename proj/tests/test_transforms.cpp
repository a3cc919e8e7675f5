#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "lightray/transforms.hpp"
#include "oracles.hpp"

using namespace lightray;
using oracle::vec;

namespace {

std::vector<LiftedRay> rays_for(const StationaryGeometry& geo, int np, int nd) {
  std::vector<LiftedRay> out;
  for (const InflowSample& s : sample_inflow(geo.conformal_manifold(), np, nd))
    out.push_back(lift_ray(geo, integrate_g_curve(geo, s.x, s.v), 0.0));
  return out;
}

LiftedRay diameter_ray(const StationaryGeometry& geo) {
  InflowSample s = make_inflow(geo.conformal_manifold(), 0.0, 0.0);
  return lift_ray(geo, integrate_g_curve(geo, s.x, s.v), 0.0);
}

}  // namespace

TEST_CASE("zero field transforms to zero") {
  StationaryGeometry geo = make_geometry("rotation(0.1)");
  SpacetimeTensorField z;
  z.field = {3, 2, [](const Vec&) { return SymTensor(3, 2); }};
  for (const LiftedRay& r : rays_for(geo, 3, 3)) CHECK(light_ray_transform(geo, z, r) == 0.0);
}

TEST_CASE("time bump of unit integral along a Minkowski chord") {
  StationaryGeometry geo = make_geometry("minkowski");
  auto chi = [](double t) { return oracle::bump(vec({t}), vec({1.0}), 0.5); };
  std::vector<double> samples;
  const int N = 20000;
  for (int i = 0; i <= N; ++i) samples.push_back(chi(0.5 + i * 1.0 / N));
  const double mass = oracle::simpson(samples, 1.0 / N);
  SpacetimeTensorField f;
  f.field = scalar_field(3, [&](const Vec& tx) { return chi(tx[0]) / mass; });
  f.t_min = 0.5;
  f.t_max = 1.5;
  CHECK(light_ray_transform(geo, f, diameter_ray(geo)) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("the conformal metric itself is invisible to null rays") {
  StationaryGeometry geo = make_geometry("conformal-rotation(0.1,0.3)");
  LorentzMetric L = assemble(geo, true);
  SpacetimeTensorField g;
  g.field = {3, 2, [L](const Vec& tx) { return SymTensor::from_matrix(L.field.eval(tx)); }};
  for (const LiftedRay& r : rays_for(geo, 4, 3)) CHECK(std::abs(light_ray_transform(geo, g, r)) < 1e-10);
}

TEST_CASE("chord length and first moment on the diameter") {
  ChartedManifold M = flat_disc();
  TensorField one = scalar_field(2, [](const Vec&) { return 1.0; });
  InflowSample s = make_inflow(M, 0.0, 0.0);
  CHECK(geodesic_ray_transform(M, one, s) == doctest::Approx(2.0).epsilon(1e-10));
  cplx r1 = moment_transform(M, one, s, 1);
  CHECK(std::abs(r1 - cplx(0.0, 2.0)) < 1e-10);
  CHECK(std::abs(moment_transform(M, one, s, 0) - 2.0) < 1e-10);
}

TEST_CASE("geodesic transform of a bump matches dense line integration") {
  ChartedManifold M = flat_disc();
  Vec c = vec({0.2, -0.1});
  TensorField w = scalar_field(2, [c](const Vec& x) { return oracle::bump(x, c, 0.5); });
  for (const InflowSample& s : sample_inflow(M, 5, 4)) {
    // chord x + r v, r in [0, -2 x.v], midpoint rule with 200000 cells
    const double L = -2 * s.x.dot(s.v);
    const int N = 200000;
    double ref = 0;
    for (int i = 0; i < N; ++i) ref += oracle::bump(s.x + (i + 0.5) * L / N * s.v, c, 0.5) * L / N;
    CHECK(geodesic_ray_transform(M, w, s) == doctest::Approx(ref).epsilon(1e-8));
  }
}

TEST_CASE("potential covectors vanishing on the boundary have zero transform") {
  ChartedManifold M = conformal_disc(0.3);
  TensorField h = scalar_field(2, [](const Vec& x) {
    return (1 - x.squaredNorm()) * (0.3 + x[0] - x[0] * x[1]);
  });
  TensorField dh = sym_cov_derivative(M.metric, h);
  for (const InflowSample& s : sample_inflow(M, 4, 4)) CHECK(std::abs(geodesic_ray_transform(M, dh, s)) < 1e-8);
}

TEST_CASE("generalized transform: static reduction and direct-ray oracle") {
  StationaryGeometry mk = make_geometry("conformal-minkowski(0.3)");
  ChartedManifold Mc = mk.conformal_manifold();
  ScalarField f = [](const Vec& x) { return std::exp(-4 * (x - vec({0.1, 0.2})).squaredNorm()); };
  TensorField F = scalar_field(2, f);
  for (const InflowSample& s : sample_inflow(Mc, 3, 3))
    CHECK(generalized_ray_transform(mk, f, s) ==
          doctest::Approx(geodesic_ray_transform(Mc, F, s)).epsilon(1e-9));

  StationaryGeometry rot = make_geometry("rotation(0.1)");
  for (const InflowSample& s : sample_inflow(rot.conformal_manifold(), 3, 3)) {
    LiftedRay d = integrate_null_geodesic_direct(rot, 0.0, s.x, s.v);
    std::vector<double> v;
    for (const Vec& b : d.b) v.push_back(f(b));
    double ref = d.nodes.integrate(std::span<const double>(v));
    CHECK(generalized_ray_transform(rot, f, s) == doctest::Approx(ref).epsilon(1e-8));
  }
}

TEST_CASE("moment identity for a potential field") {
  ChartedManifold M = flat_disc();
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int r = 0; r <= 2; ++r) {
    std::vector<double> a(20);
    for (double& x : a) x = U(rng);
    TensorField u{2, r, [a, r](const Vec& x) {
                    SymTensor t(2, r);
                    for (int p = 0; p < t.size(); ++p)
                      t[p] = (1 - x.squaredNorm()) * (a[3 * p] + a[3 * p + 1] * x[0] + a[3 * p + 2] * x[1] * x[1]);
                    return t;
                  }};
    TensorField du = sym_cov_derivative(M.metric, u);
    for (const InflowSample& s : sample_inflow(M, 3, 2)) {
      SpatialCurve c = integrate_geodesic(M, s.x, s.v);
      for (int j = 1; j <= 3; ++j) {
        cplx lhs = moment_transform(du, c, j);
        cplx rhs = cplx(0, -j) * moment_transform(u, c, j - 1);
        CHECK(std::abs(lhs - rhs) < 1e-6 * (1 + std::abs(rhs)));
      }
    }
  }
}

TEST_CASE("Fourier slice on Minkowski for a Gaussian") {
  StationaryGeometry geo = make_geometry("minkowski");
  SpacetimeTensorField f = oracle::gaussian(vec({0.1, -0.2}), 0.3, 0.5, 0.4);
  for (const InflowSample& s : sample_inflow(geo.conformal_manifold(), 3, 3)) {
    LiftedRay base = lift_ray(geo, integrate_g_curve(geo, s.x, s.v), 0.0);
    std::vector<double> T = covering_T_grid(f, base, 0.05);
    for (double tau : {0.0, 1.0, 2.0}) {
      SliceComparison sc = fourier_slice(geo, f, base, tau, T);
      CHECK(std::abs(sc.lhs - sc.rhs) <= 1e-4 * std::max(std::abs(sc.lhs), 1.0));
    }
    std::vector<double> narrow(T.begin() + T.size() / 3, T.end());
    CHECK_THROWS_AS(fourier_slice(geo, f, base, 1.0, narrow), SupportError);
  }
}

TEST_CASE("linearity and time-translation covariance") {
  StationaryGeometry geo = make_geometry("rotation(0.1)");
  std::mt19937_64 rng(9);
  SpacetimeTensorField a = oracle::random_bump_field(2, 1, rng, vec({0.1, 0.0}), 0.5, 0.8, 0.6);
  SpacetimeTensorField b = oracle::random_bump_field(2, 1, rng, vec({-0.2, 0.1}), 0.4, 1.0, 0.5);
  SpacetimeTensorField ab = a;
  ab.field.fn = [a, b](const Vec& x) { return a(x) * 2.0 - b(x) * 0.5; };
  ab.t_min = std::min(a.t_min, b.t_min);
  ab.t_max = std::max(a.t_max, b.t_max);
  ab.spatial.reset();
  for (const LiftedRay& r : rays_for(geo, 3, 3)) {
    double lhs = light_ray_transform(geo, ab, r);
    double rhs = 2 * light_ray_transform(geo, a, r) - 0.5 * light_ray_transform(geo, b, r);
    CHECK(std::abs(lhs - rhs) < 1e-12);
    double s1 = light_ray_transform(geo, a, r.shifted(0.3));
    double s2 = light_ray_transform(geo, time_shifted(a, -0.3), r);
    CHECK(std::abs(s1 - s2) < 1e-12);
  }
  SpacetimeTensorField still;
  still.field = {3, 0, [](const Vec& tx) { return SymTensor::scalar(std::cos(tx[1] + 2 * tx[2]), 3); }};
  for (const LiftedRay& r : rays_for(geo, 2, 2))
    CHECK(std::abs(light_ray_transform(geo, still, r) - light_ray_transform(geo, still, r.shifted(1.7))) < 1e-12);
}

TEST_CASE("gauge fields are in the kernel") {
  std::mt19937_64 rng(21);
  {
    StationaryGeometry geo = make_geometry("minkowski");
    auto rays = rays_for(geo, 10, 10);
    SpacetimeTensorField T = oracle::random_bump_field(2, 0, rng, vec({0.1, 0.1}), 0.5, 1.0, 0.7);
    GaugeKernelResult r = verify_gauge_kernel(geo, T, nullptr, std::span<const LiftedRay>(rays));
    MESSAGE("m=1 max " << r.max_abs << " scale " << r.field_scale);
    CHECK(r.max_abs <= 1e-6);
  }
  {
    StationaryGeometry geo = make_geometry("rotation(0.1)");
    auto rays = rays_for(geo, 8, 8);
    SpacetimeTensorField T = oracle::random_bump_field(2, 1, rng, vec({-0.1, 0.1}), 0.6, 1.0, 0.8);
    SpacetimeTensorField U = oracle::random_bump_field(2, 0, rng, vec({0.2, 0.0}), 0.5, 0.9, 0.6);
    GaugeKernelResult r = verify_gauge_kernel(geo, T, &U, std::span<const LiftedRay>(rays));
    MESSAGE("m=2 max " << r.max_abs << " scale " << r.field_scale);
    CHECK(r.max_abs <= 1e-5);
    SpacetimeTensorField bad = oracle::random_bump_field(2, 1, rng, vec({0.6, 0.0}), 0.5, 1.0, 0.8);
    CHECK_THROWS_AS(verify_gauge_kernel(geo, bad, &U, std::span<const LiftedRay>(rays)), SupportError);
  }
}

TEST_CASE("conformal reparametrization") {
  StationaryGeometry geo = make_geometry("rotation(0.1)");
  std::mt19937_64 rng(5);
  LiftedRay ray = rays_for(geo, 3, 3)[4];
  ScalarField one = [](const Vec&) { return 1.0; };
  ScalarField c = [](const Vec& x) { return std::exp(0.3 * std::sin(x[1]) * std::cos(x[2]) + 0.1 * x[0]); };
  for (int m : {0, 2}) {
    SpacetimeTensorField a = oracle::random_bump_field(2, m, rng, vec({0.0, 0.0}), 0.7, 1.0, 0.9);
    ConformalCheck same = conformal_reparam_check(geo, a, one, true, ray);
    CHECK(std::abs(same.lhs - same.rhs) < 1e-12);
    ConformalCheck cc = conformal_reparam_check(geo, a, c, false, ray);
    MESSAGE("m=" << m << " lhs " << cc.lhs << " rhs " << cc.rhs);
    CHECK(std::abs(cc.lhs - cc.rhs) <= (m == 0 ? 1e-6 : 1e-5));
  }
}
