#include <doctest.h>

#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>

#include "lightray/errors.hpp"
#include "lightray/reconstruction.hpp"
#include "oracles.hpp"

using namespace lightray;
using oracle::vec;

namespace {

constexpr double kPi = std::numbers::pi;

// straight chord of the unit disc, |v| = 1
double chord(const InflowSample& s) { return -2.0 * s.x.dot(s.v.normalized()); }

std::vector<double> uniform(double a, double b, double step) {
  std::vector<double> t;
  for (double x = a; x <= b + 1e-12; x += step) t.push_back(x);
  return t;
}

double spatial_gauss(const Vec& x, const Vec& c, double s) {
  return std::exp(-(x - c).squaredNorm() / (2 * s * s));
}

// X-ray of exp(-|x - c|^2 / 2 s^2) along the line through x with direction v
double gauss_xray(const InflowSample& in, const Vec& c, double s) {
  const Vec v = in.v.normalized();
  const Vec d = (in.x - c) - (in.x - c).dot(v) * v;
  return s * std::sqrt(2 * kPi) * std::exp(-d.squaredNorm() / (2 * s * s));
}

double rel_l2(const Eigen::MatrixXd& u, const PixelGrid& G, const std::function<double(const Vec&)>& f) {
  double num = 0, den = 0;
  for (int i = 0; i < G.n; ++i)
    for (int j = 0; j < G.n; ++j) {
      if (!G.inside(i, j)) continue;
      const double ref = f(vec({G.centre(i), G.centre(j)}));
      num += (u(i, j) - ref) * (u(i, j) - ref);
      den += ref * ref;
    }
  return std::sqrt(num / den);
}

Eigen::MatrixXd fbp_of_gaussian(int nrays, int npix, const Vec& c, double s) {
  std::vector<double> data;
  for (const InflowSample& in : sample_inflow(flat_disc(), nrays, nrays)) data.push_back(gauss_xray(in, c, s));
  return fbp(nrays, nrays, data, PixelGrid{npix});
}

}  // namespace

TEST_CASE("zero field scans to a zero sinogram") {
  StationaryGeometry geo = make_geometry("minkowski");
  SpacetimeTensorField z;
  z.field = {3, 0, [](const Vec&) { return SymTensor::scalar(0.0, 3); }};
  z.t_min = -1;
  z.t_max = 1;
  const auto T = uniform(-4, 2, 0.5);
  CHECK(forward_scan(geo, z, 8, 8, T).max_abs() == 0.0);
}

TEST_CASE("separable field against dense quadrature along the chord") {
  StationaryGeometry geo = make_geometry("minkowski");
  const Vec c = vec({0.2, -0.1});
  auto chi = [](double t) { return std::exp(-t * t / 0.5); };
  SpacetimeTensorField f;
  f.field = {3, 0, [&](const Vec& tx) {
               return SymTensor::scalar(chi(tx[0]) * spatial_gauss(tx.tail(2), c, 0.3), 3);
             }};
  f.t_min = -4;
  f.t_max = 4;
  const auto T = uniform(-7, 5, 0.75);
  const Sinogram s = forward_scan(geo, f, 6, 5, T);
  double err = 0, peak = 0;
  for (size_t r = 0; r < s.rays(); ++r) {
    const InflowSample& in = s.inflow[r];
    const double L = chord(in);
    const Vec v = in.v.normalized();
    const int N = 20000;
    for (size_t k = 0; k < T.size(); ++k) {
      double acc = 0;
      for (int i = 0; i < N; ++i) {
        const double rr = (i + 0.5) * L / N;
        acc += chi(rr + T[k]) * spatial_gauss(in.x + rr * v, c, 0.3);
      }
      acc *= L / N;
      err = std::max(err, std::abs(acc - s(r, k)));
      peak = std::max(peak, std::abs(acc));
    }
  }
  CHECK(err < 1e-6 * peak);
}

TEST_CASE("time shift moves the sinogram along T") {
  StationaryGeometry geo = make_geometry("minkowski");
  GaussianBlob b{vec({0.1, 0.2}), 0.25, 0.0, 0.5, 1.0};
  const auto f = gaussian_phantom(std::span(&b, 1));
  const auto g = time_shifted(f, 1.5);
  const auto T = uniform(-7, 6, 0.5);
  const Sinogram s0 = forward_scan(geo, f, 6, 6, T), s1 = forward_scan(geo, g, 6, 6, T);
  double d = 0;
  for (size_t r = 0; r < s0.rays(); ++r)
    for (size_t k = 0; k + 3 < T.size(); ++k) d = std::max(d, std::abs(s1(r, k + 3) - s0(r, k)));
  CHECK(d < 1e-12 * s0.max_abs() + 1e-14);
}

TEST_CASE("uncovered support is rejected") {
  StationaryGeometry geo = make_geometry("minkowski");
  GaussianBlob b{vec({0.0, 0.0}), 0.25, 0.0, 0.5, 1.0};
  const auto f = gaussian_phantom(std::span(&b, 1));
  const auto T = uniform(-3, 3, 0.5);
  CHECK_THROWS_AS(forward_scan(geo, f, 4, 4, T), SupportError);
}

TEST_CASE("slices: hermitian pairs and the tau = 1 diameter chord") {
  StationaryGeometry geo = make_geometry("minkowski");
  const double st = 0.6, sx = 0.25, t0 = 0.3;
  GaussianBlob b{vec({0.1, -0.05}), sx, t0, st, 1.0};
  const auto f = gaussian_phantom(std::span(&b, 1));
  const auto T = uniform(f.t_min - 2.5, f.t_max + 0.5, 0.2);
  const Sinogram s = forward_scan(geo, f, 8, 7, T);

  const std::vector<double> taus{-2, -1, 0, 1, 2};
  CHECK(slice_stack(s, taus).hermitian_defect() <= 1e-10);

  // ray 3 of 7 at boundary point 0 is the diameter
  const InflowSample& in = s.inflow[3];
  REQUIRE(std::abs(chord(in) - 2.0) < 1e-12);
  // hat f(tau, x) = st sqrt(2 pi) e^{-i tau t0} e^{-st^2 tau^2 / 2} g0(x)
  auto direct = [&](double tau) {
    const cplx amp = st * std::sqrt(2 * kPi) * std::exp(cplx(-0.5 * st * st * tau * tau, -tau * t0));
    const Vec v = in.v.normalized();
    cplx ref = 0;
    const int N = 20000;
    for (int i = 0; i < N; ++i) {
      const double r = (i + 0.5) * 2.0 / N;
      ref += std::exp(cplx(0, tau * r)) * spatial_gauss(in.x + r * v, b.centre, sx);
    }
    return ref * amp * (2.0 / N);
  };
  for (double tau : {0.0, 1.0}) {
    const cplx ref = direct(tau);
    CHECK(std::abs(slice(s, tau)[3] - ref) < 1e-6 * std::abs(ref));
  }
}

TEST_CASE("FBP of a centred Gaussian at 128 x 128 detector sampling") {
  const double s = 0.2;
  const Eigen::MatrixXd u = fbp_of_gaussian(128, 128, vec({0, 0}), s);
  const double e = rel_l2(u, PixelGrid{128}, [&](const Vec& x) { return spatial_gauss(x, vec({0, 0}), s); });
  MESSAGE("FBP relative L2 error " << e);
  CHECK(e <= 0.05);
  // monotone in detector sampling on the same pixel grid
  double prev = 1e9;
  for (int nr : {64, 128, 256}) {
    const double en = rel_l2(fbp_of_gaussian(nr, 64, vec({0, 0}), s), PixelGrid{64},
                             [&](const Vec& x) { return spatial_gauss(x, vec({0, 0}), s); });
    MESSAGE("detector " << nr << ": " << en);
    CHECK(en < prev);
    prev = en;
  }
}

TEST_CASE("zero data and resolution guard") {
  const auto rays = sample_inflow(flat_disc(), 64, 64);
  const WeightedRayOperator A(rays, PixelGrid{32});
  std::vector<cplx> g(rays.size(), 0.0);
  CHECK(invert_slice(A, 64, 64, g, 0.0).image.cwiseAbs().maxCoeff() == 0.0);
  CHECK(invert_slice(A, 64, 64, g, 0.7).image.cwiseAbs().maxCoeff() == 0.0);
  const auto few = sample_inflow(flat_disc(), 32, 32);
  const WeightedRayOperator B(few, PixelGrid{32});
  CHECK_THROWS_AS(invert_slice(B, 32, 32, std::vector<cplx>(few.size()), 0.5), ResolutionError);
}

TEST_CASE("weighted operator adjoint and tau = 0 agreement with the X-ray oracle") {
  const auto rays = sample_inflow(flat_disc(), 64, 64);
  const PixelGrid G{64};
  const WeightedRayOperator A(rays, G);
  std::mt19937 rng(7);
  std::normal_distribution<double> N;
  Eigen::MatrixXcd u(G.n, G.n), w;
  for (int i = 0; i < G.n; ++i)
    for (int j = 0; j < G.n; ++j) u(i, j) = G.inside(i, j) ? cplx(N(rng), N(rng)) : 0.0;
  std::vector<cplx> g(rays.size()), Au;
  for (cplx& z : g) z = cplx(N(rng), N(rng));
  A.forward(u, 0.8, Au);
  A.adjoint(g, 0.8, w);
  cplx lhs = 0, rhs = 0;
  for (size_t r = 0; r < g.size(); ++r) lhs += std::conj(g[r]) * Au[r];
  rhs = (w.conjugate().cwiseProduct(u)).sum();
  CHECK(std::abs(lhs - rhs) < 1e-10 * std::abs(lhs));

  Eigen::MatrixXcd gauss(G.n, G.n);
  for (int i = 0; i < G.n; ++i)
    for (int j = 0; j < G.n; ++j)
      gauss(i, j) = G.inside(i, j) ? spatial_gauss(vec({G.centre(i), G.centre(j)}), vec({0.1, 0}), 0.2) : 0.0;
  A.forward(gauss, 0.0, Au);
  double err = 0, peak = 0;
  for (size_t r = 0; r < rays.size(); ++r) {
    const double ref = gauss_xray(rays[r], vec({0.1, 0}), 0.2);
    err = std::max(err, std::abs(Au[r].real() - ref));
    peak = std::max(peak, ref);
  }
  CHECK(err < 0.01 * peak);
}

TEST_CASE("CG inversion at tau = 0.5") {
  const int nr = 128;
  const auto rays = sample_inflow(flat_disc(), nr, nr);
  const PixelGrid G{64};
  const WeightedRayOperator A(rays, G);
  const double tau = 0.5, sx = 0.2;
  const Vec c = vec({0.1, -0.05});
  // complex phantom: u = e^{i x} g0(x); data by dense quadrature on the chord
  auto u = [&](const Vec& x) { return std::exp(cplx(0, x[0])) * spatial_gauss(x, c, sx); };
  std::vector<cplx> g(rays.size());
  for (size_t r = 0; r < rays.size(); ++r) {
    const double L = chord(rays[r]);
    const Vec v = rays[r].v.normalized();
    const int N = 400;
    cplx acc = 0;
    for (int i = 0; i < N; ++i) {
      const double rr = (i + 0.5) * L / N;
      acc += std::exp(cplx(0, tau * rr)) * u(rays[r].x + rr * v);
    }
    g[r] = acc * (L / N);
  }
  const SliceInversion inv = invert_slice(A, nr, nr, g, tau);
  double num = 0, den = 0;
  for (int i = 0; i < G.n; ++i)
    for (int j = 0; j < G.n; ++j) {
      if (!G.inside(i, j)) continue;
      const cplx ref = u(vec({G.centre(i), G.centre(j)}));
      num += std::norm(inv.image(i, j) - ref);
      den += std::norm(ref);
    }
  const double e = std::sqrt(num / den);
  MESSAGE("CG tau=0.5: error " << e << " after " << inv.iterations << " iterations");
  CHECK(e <= 0.10);
  CHECK(inv.iterations <= 200);
}

TEST_CASE("tau grid matches the temporal support") {
  const auto o = nyquist_tau_grid(24.0, 1.4);
  CHECK(o.dtau == doctest::Approx(2 * kPi / 48.0));
  CHECK(o.n_tau * o.dtau >= 1.4);
  CHECK((o.n_tau - 1) * o.dtau < 1.4);
}

TEST_CASE("end-to-end Gaussian phantom and the tau = 0 round trip") {
  StationaryGeometry geo = make_geometry("minkowski");
  const double st = 3.0;
  GaussianBlob b{vec({0.1, -0.05}), 0.2, 0.0, st, 1.0};
  const auto f = gaussian_phantom(std::span(&b, 1));
  const auto t0 = std::chrono::steady_clock::now();
  const auto T = uniform(f.t_min - 2.0, f.t_max, 1.0);
  const Sinogram s = forward_scan(geo, f, 128, 128, T, RayOptions{.step = 0.02});
  const double scan = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ReconstructionOptions opt = nyquist_tau_grid(8 * st, 4.3 / st);
  opt.t_out = {-2.0, 0.0, 2.0};
  const Reconstruction rec = reconstruct_scalar(geo, s, opt);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double e = relative_l2_error(rec, f);
  MESSAGE("end-to-end error " << e << ", " << opt.n_tau << " positive frequencies, " << secs << " s (scan " << scan << " s)");
  CHECK(e <= 0.08);
  CHECK(rec.imaginary_residual <= 0.01);

  // slicing at tau = 0 then FBP versus FBP of exact X-ray data of hat f(0, .)
  const std::vector<cplx> g0 = slice(s, 0.0);
  std::vector<double> direct(s.rays()), sliced(s.rays());
  for (size_t r = 0; r < s.rays(); ++r) {
    sliced[r] = g0[r].real();
    direct[r] = st * std::sqrt(2 * kPi) * gauss_xray(s.inflow[r], b.centre, b.sx);
  }
  const PixelGrid G{64};
  const Eigen::MatrixXd a = fbp(128, 128, sliced, G), d = fbp(128, 128, direct, G);
  CHECK((a - d).norm() <= 0.02 * d.norm());
}

TEST_CASE("two bumps are separated with centroids within one cell") {
  StationaryGeometry geo = make_geometry("minkowski");
  const double st = 3.0;
  std::vector<GaussianBlob> bs{{vec({-0.4, 0.1}), 0.15, 0.0, st, 1.0}, {vec({0.35, -0.3}), 0.15, 0.0, st, 0.8}};
  const auto f = gaussian_phantom(bs);
  const auto T = uniform(f.t_min - 2.0, f.t_max, 1.0);
  const Sinogram s = forward_scan(geo, f, 96, 96, T, RayOptions{.step = 0.02});
  ReconstructionOptions opt = nyquist_tau_grid(8 * st, 4.3 / st);
  opt.t_out = {0.0};
  const Reconstruction rec = reconstruct_scalar(geo, s, opt);
  for (const GaussianBlob& b : bs) {
    const Vec c = centroid(rec.frames[0], rec.grid, b.centre, 0.3);
    MESSAGE("centroid offset " << (c - b.centre).norm());
    CHECK((c - b.centre).norm() <= rec.grid.h());
  }
}

TEST_CASE("reconstruction preconditions") {
  GaussianBlob b{vec({0.0, 0.0}), 0.2, 0.0, 0.5, 1.0};
  const auto f = gaussian_phantom(std::span(&b, 1));
  const auto T = uniform(f.t_min - 2.0, f.t_max, 0.5);
  ReconstructionOptions opt;
  opt.t_out = {0.0};
  StationaryGeometry rot = make_geometry("rotation(0.1)");
  Sinogram s;
  CHECK_THROWS_AS(reconstruct_scalar(rot, s, opt), Error);
  StationaryGeometry mk = make_geometry("minkowski");
  s = forward_scan(mk, f, 16, 16, T);
  CHECK_THROWS_AS(reconstruct_scalar(mk, s, opt), ResolutionError);
  std::ostringstream os;
  s.write_csv(os);
  CHECK(os.str().rfind("ray,theta,psi,T,value\n", 0) == 0);
}
