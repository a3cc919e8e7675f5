#pragma once
// Independent reference computations shared by the unit and acceptance tests.
// They take deliberately different routes from the library code.

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "lightray/transforms.hpp"

namespace oracle {

using lightray::Mat;
using lightray::Vec;

inline Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

// Christoffels of a metric given as a plain callable, 2nd-order differences with a
// Richardson step (so the result is 4th order but from a different stencil).
template <class G>
std::vector<double> christoffel(G&& g, const Vec& x, double h, unsigned skip = 0) {
  const int n = static_cast<int>(x.size());
  std::vector<Mat> dg(n);
  for (int k = 0; k < n; ++k) {
    if (skip & (1u << k)) {
      dg[k] = Mat::Zero(n, n);
      continue;
    }
    auto d = [&](double s) {
      Vec a = x, b = x;
      a[k] += s;
      b[k] -= s;
      return Mat((g(a) - g(b)) / (2 * s));
    };
    dg[k] = (4.0 * d(h / 2) - d(h)) / 3.0;
  }
  Mat ginv = g(x).inverse();
  std::vector<double> gam(n * n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double s = 0;
        for (int l = 0; l < n; ++l)
          s += 0.5 * ginv(i, l) * (dg[j](l, k) + dg[k](l, j) - dg[l](j, k));
        gam[(i * n + j) * n + k] = s;
      }
  return gam;
}

// G^i = (Gamma^i_jk - Gamma_bar^i_jk) v^j v^k - 2 Gamma_bar^i_0k adot v^k
// from the assembled conformal spacetime metric and g_c, no reduced formula involved.
inline Vec g_field(const lightray::StationaryGeometry& geo, const Vec& z, const Vec& v, int sign) {
  const int n = geo.n();
  const double h = 1e-3;
  auto gc = [&](const Vec& x) { return geo.g_c(x); };
  auto gbar = [&](const Vec& tx) {
    Vec x = tx.tail(n);
    Vec e = geo.eta_c(x);
    Mat G(n + 1, n + 1);
    G(0, 0) = -1;
    G.block(0, 1, 1, n) = e.transpose();
    G.block(1, 0, n, 1) = e;
    G.block(1, 1, n, n) = geo.g_c(x);
    return G;
  };
  Vec tz(n + 1);
  tz[0] = 0;
  tz.tail(n) = z;
  auto gs = christoffel(gc, z, h);
  auto gb = christoffel(gbar, tz, h, 1u);
  Vec e = geo.eta_c(z);
  double ev = e.dot(v);
  double adot = ev + sign * std::sqrt(ev * ev + v.dot(geo.g_c(z) * v));
  const int N = n + 1;
  Vec out = Vec::Zero(n);
  for (int i = 0; i < n; ++i) {
    double s = 0;
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        s += (gs[(i * n + j) * n + k] - gb[((i + 1) * N + j + 1) * N + k + 1]) * v[j] * v[k];
    for (int k = 0; k < n; ++k) s -= 2 * gb[((i + 1) * N + 0) * N + k + 1] * adot * v[k];
    out[i] = s;
  }
  return out;
}

// Smooth bump exp(-1/(1 - r^2/R^2)) with the given centre.
inline double bump(const Vec& x, const Vec& centre, double radius) {
  double q = (x - centre).squaredNorm() / (radius * radius);
  return q < 1.0 ? std::exp(-1.0 / (1.0 - q)) : 0.0;
}

inline double simpson(const std::vector<double>& f, double h) {
  const int n = static_cast<int>(f.size()) - 1;
  double s = f.front() + f.back();
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4 : 2) * f[i];
  return s * h / 3;
}

// Compactly supported spacetime tensor field: a smooth bump in (t, x) times random
// affine polynomials in each packed component.
inline lightray::SpacetimeTensorField random_bump_field(int n, int rank, std::mt19937_64& rng,
                                                        const Vec& centre, double radius,
                                                        double t0, double t_radius) {
  std::uniform_real_distribution<double> U(-1, 1);
  const int N = n + 1;
  const int P = lightray::SymLayout::get(N, rank).size();
  std::vector<double> coef(static_cast<size_t>(P) * (N + 1));
  for (double& c : coef) c = U(rng);
  lightray::SpacetimeTensorField f;
  f.field = {N, rank, [=](const Vec& tx) {
               lightray::SymTensor out(N, rank);
               double q = (tx[0] - t0) * (tx[0] - t0) / (t_radius * t_radius) +
                          (tx.tail(n) - centre).squaredNorm() / (radius * radius);
               if (q >= 1.0) return out;
               double b = std::exp(-1.0 / (1.0 - q));
               for (int p = 0; p < P; ++p) {
                 const double* c = &coef[static_cast<size_t>(p) * (N + 1)];
                 double v = c[0];
                 for (int a = 0; a < N; ++a) v += c[a + 1] * tx[a];
                 out[p] = b * v;
               }
               return out;
             }};
  f.t_min = t0 - t_radius;
  f.t_max = t0 + t_radius;
  f.spatial = lightray::SupportBall{centre, radius};
  return f;
}

// Gaussian in (t, x) with temporal support cut at 8 sigma_t.
inline lightray::SpacetimeTensorField gaussian(const Vec& x0, double sx, double t0, double st) {
  lightray::SpacetimeTensorField f;
  const int n = static_cast<int>(x0.size());
  f.field = {n + 1, 0, [=](const Vec& tx) {
               double e = (tx[0] - t0) * (tx[0] - t0) / (2 * st * st) +
                          (tx.tail(n) - x0).squaredNorm() / (2 * sx * sx);
               return lightray::SymTensor::scalar(std::exp(-e), n + 1);
             }};
  f.t_min = t0 - 8 * st;
  f.t_max = t0 + 8 * st;
  return f;
}

}  // namespace oracle
