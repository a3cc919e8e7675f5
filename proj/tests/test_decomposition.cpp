#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <sstream>

#include "lightray/decomposition.hpp"
#include "lightray/errors.hpp"
#include "oracles.hpp"

using namespace lightray;
using oracle::vec;
using std::numbers::pi;

namespace {

// rank-m field on the plane from a per-component function f(x, q), q = number of y's
template <class F>
TensorField by_components(int rank, F f) {
  return {2, rank, [rank, f](const Vec& x) {
            SymTensor t(2, rank);
            for (int q = 0; q <= rank; ++q) {
              std::vector<int> idx(rank, 0);
              for (int k = rank - q; k < rank; ++k) idx[k] = 1;
              t[t.layout().packed_of(idx)] = f(x, q);
            }
            return t;
          }};
}

const MetricField& flat() {
  static const ChartedManifold M = flat_square();
  return M.metric;
}

// vanishes on the edges of the unit square
TensorField square_potential(int rank, bool trace_free = false) {
  return by_components(rank, [rank, trace_free](const Vec& x, int q) {
    const double b = std::sin(pi * x[0]) * std::sin(pi * x[1]);
    // trace-free rank 2: yy = -xx
    const bool flip = trace_free && rank == 2 && q == 2;
    if (flip) q = 0;
    const double v = b * (1 + x[0] * x[1] + 0.5 * (q + 1) * x[0] * x[0] - 0.3 * q * x[1]);
    return flip ? -v : v;
  });
}

// trace-free solenoidal field from the holomorphic W = (z - 0.4 - 0.3i)^3
TensorField holomorphic_field(int rank) {
  return by_components(rank, [rank](const Vec& x, int q) {
    const std::complex<double> z(x[0] - 0.4, x[1] - 0.3);
    const std::complex<double> W = z * z * z + 0.5 * z;
    const double u = W.real(), v = W.imag();
    if (rank == 2) return q == 0 ? u : q == 2 ? -u : -v;
    // rank 3: xxx = u, xxy = -v, xyy = -u, yyy = v
    const double vals[4] = {u, -v, -u, v};
    return vals[q];
  });
}

}  // namespace

TEST_CASE("lattice layout and sampling") {
  GridSpec g{GridDomain::square, 32};
  GridField f(g, 2);
  CHECK(f.comps.size() == 3);
  CHECK(f.nx(0) == 33);
  CHECK(f.ny(0) == 33);
  CHECK(f.nx(1) == 32);
  CHECK(f.ny(1) == 32);
  CHECK(f.node(1, 0, 0)[0] == doctest::Approx(1.0 / 64));
  GridField s = GridField::sample(g, by_components(2, [](const Vec& x, int q) { return q + x[0]; }));
  CHECK(s.at(1, 3, 4) == doctest::Approx(1 + 3.5 / 32));
  std::ostringstream os;
  s.write_csv(os);
  CHECK(os.str().rfind("component,x,y,value\n00,", 0) == 0);
  CHECK_THROWS_AS(GridSpec::for_manifold(polar_disc(), 32), DiscretizationError);
}

TEST_CASE("pointwise algebra on staggered lattices") {
  GridSpec g{GridDomain::square, 32};
  GridField w = GridField::sample(g, by_components(3, [](const Vec& x, int q) { return std::cos(q + x[0] * x[1]); }));
  GridField tf = grid_project_trace_free(w);
  CHECK(grid_trace(tf).max_abs() < 1e-14);
  GridField wt = grid_solve_ji(grid_trace(w));
  CHECK((tf + grid_metric_product(wt)).max_abs_diff(w) < 1e-14);
}

TEST_CASE("discrete d^s is second order away from the edges") {
  for (int m = 1; m <= 3; ++m) {
    TensorField p = square_potential(m - 1);
    TensorField dp = sym_cov_derivative(flat(), p);
    double e[2];
    for (int k = 0; k < 2; ++k) {
      GridSpec g{GridDomain::square, 32 << k};
      HelmholtzSolver S(g, m, false);
      GridField diff = S.apply_ds(GridField::sample(g, p)) - GridField::sample(g, dp);
      e[k] = 0;
      for (int q = 0; q <= m; ++q)
        for (int i = 0; i < diff.nx(q); ++i)
          for (int j = 0; j < diff.ny(q); ++j) {
            const Vec x = diff.node(q, i, j);
            if (std::min({x[0], x[1], 1 - x[0], 1 - x[1]}) > 0.1) e[k] = std::max(e[k], std::abs(diff.at(q, i, j)));
          }
    }
    MESSAGE("m=" << m << " " << e[0] << " -> " << e[1]);
    CHECK(e[0] / e[1] >= 3.5);
  }
}

TEST_CASE("potential fields: h recovered, omega_s vanishes, O(h^2)") {
  for (int m = 1; m <= 3; ++m) {
    TensorField p = square_potential(m - 1);
    TensorField dp = sym_cov_derivative(flat(), p);
    double eh[2], es[2];
    for (int k = 0; k < 2; ++k) {
      GridSpec g{GridDomain::square, 32 << k};
      GridField omega = GridField::sample(g, dp);
      Helmholtz r = helmholtz(g, omega);
      CHECK(r.report.residual <= 1e-8);
      CHECK((r.omega_s + HelmholtzSolver(g, m, false).apply_ds(r.h)).max_abs_diff(omega) < 1e-12);
      eh[k] = r.h.max_abs_diff(GridField::sample(g, p));
      es[k] = r.omega_s.max_abs();
    }
    MESSAGE("m=" << m << " h err " << eh[0] << " -> " << eh[1] << ", omega_s " << es[0] << " -> " << es[1]);
    CHECK(eh[0] / eh[1] >= 3.0);
    CHECK(es[0] / es[1] >= 3.0);
  }
}

TEST_CASE("solenoidal fields have h close to zero") {
  // m = 1 from a stream function, m = 2, 3 from a holomorphic function
  TensorField curl = by_components(1, [](const Vec& x, int q) {
    const double a = 1.3 * x[0], b = 0.7 * x[1];
    return q == 0 ? -0.7 * std::sin(a) * std::sin(b) : -1.3 * std::cos(a) * std::cos(b);
  });
  std::vector<TensorField> fields{curl, holomorphic_field(2), holomorphic_field(3)};
  for (int m = 1; m <= 3; ++m) {
    const TensorField& w = fields[m - 1];
    for (const Vec& x : {vec({0.3, 0.4}), vec({0.8, 0.1})})
      CHECK(divergence(flat(), w, x).max_abs() < 1e-8);
    double e[2];
    for (int k = 0; k < 2; ++k) {
      GridSpec g{GridDomain::square, 32 << k};
      Helmholtz r = helmholtz(g, GridField::sample(g, w));
      e[k] = r.h.max_abs() / GridField::sample(g, w).max_abs();
    }
    MESSAGE("m=" << m << " |h| " << e[0] << " -> " << e[1]);
    CHECK(e[1] < 1e-3);
    CHECK(e[0] / e[1] >= 3.0);
  }
}

TEST_CASE("decomposition is linear") {
  GridSpec g{GridDomain::square, 32};
  HelmholtzSolver S(g, 2, false);
  GridField a = GridField::sample(g, holomorphic_field(2));
  GridField b = GridField::sample(g, sym_cov_derivative(flat(), square_potential(1)));
  Helmholtz ra = S.solve(a), rb = S.solve(b), rab = S.solve(a * 2.0 + b);
  const double scale = (a * 2.0 + b).max_abs();
  CHECK((ra.omega_s * 2.0 + rb.omega_s).max_abs_diff(rab.omega_s) <= 1e-8 * scale);
  CHECK((ra.h * 2.0 + rb.h).max_abs_diff(rab.h) <= 1e-8 * scale);
}

TEST_CASE("trace-free decomposition of pure gauge and pure trace inputs") {
  for (int m = 2; m <= 3; ++m) {
    TensorField h0 = square_potential(m - 1, true);
    TensorField omega = sym_cov_derivative(flat(), h0);
    double e[2];
    for (int k = 0; k < 2; ++k) {
      GridSpec g{GridDomain::square, 32 << k};
      TfHelmholtz r = tf_helmholtz(g, GridField::sample(g, omega));
      CHECK(r.report.residual <= 1e-8);
      CHECK(r.trace_defect <= 1e-8);
      CHECK(r.h_trace_defect <= 1e-8);
      e[k] = std::max(r.omega_tfs.max_abs(), r.omega_t.max_abs());
      CHECK(r.h.max_abs_diff(GridField::sample(g, h0)) <= 2e-2);
    }
    MESSAGE("m=" << m << " tfs, t " << e[0] << " -> " << e[1]);
    CHECK(e[0] / e[1] >= 3.0);
  }
  GridSpec g{GridDomain::square, 48};
  ScalarField u = [](const Vec& x) { return std::exp(-8 * (x - vec({0.5, 0.45})).squaredNorm()); };
  TensorField ug{2, 2, [u](const Vec& x) { return metric_product(SymTensor::scalar(u(x), 2), Mat::Identity(2, 2)); }};
  TfHelmholtz r = tf_helmholtz(g, GridField::sample(g, ug));
  CHECK(r.omega_tfs.max_abs() < 1e-12);
  CHECK(r.h.max_abs() < 1e-12);
  CHECK(r.omega_t.max_abs_diff(GridField::sample(g, scalar_field(2, u))) < 1e-12);
}

TEST_CASE("trace-free decomposition reconstructs a synthesized triple") {
  for (int m = 2; m <= 3; ++m) {
    TensorField w0 = holomorphic_field(m);
    TensorField w1 = by_components(m - 2, [](const Vec& x, int q) { return std::cos(2 * x[0] + q) * x[1]; });
    TensorField w2 = square_potential(m - 1, true);
    TensorField dw2 = sym_cov_derivative(flat(), w2);
    TensorField omega{2, m, [=](const Vec& x) {
                        return w0(x) + metric_product(w1(x), Mat::Identity(2, 2)) + dw2(x);
                      }};
    double e[2];
    for (int k = 0; k < 2; ++k) {
      GridSpec g{GridDomain::square, 32 << k};
      TfHelmholtz r = tf_helmholtz(g, GridField::sample(g, omega));
      e[k] = std::max({r.omega_tfs.max_abs_diff(GridField::sample(g, w0)),
                       r.omega_t.max_abs_diff(GridField::sample(g, w1)),
                       r.h.max_abs_diff(GridField::sample(g, w2))});
    }
    MESSAGE("m=" << m << " triple " << e[0] << " -> " << e[1]);
    CHECK(e[1] < 1e-2);
    CHECK(e[0] / e[1] >= 3.0);
  }
}

TEST_CASE("disc: compactly supported potentials are recovered") {
  TensorField p = by_components(1, [](const Vec& x, int q) {
    return (q + 1.0) * oracle::bump(x, vec({0.1, -0.2}), 0.6);
  });
  TensorField dp = sym_cov_derivative(flat_disc().metric, p);
  double e[2];
  for (int k = 0; k < 2; ++k) {
    GridSpec g{GridDomain::disc, 48 << k};
    TfHelmholtz r = tf_helmholtz(g, GridField::sample(g, dp));
    CHECK(r.report.residual <= 1e-8);
    e[k] = std::max(r.omega_tfs.max_abs(), r.h.max_abs_diff(GridField::sample(g, p)));
  }
  MESSAGE("disc " << e[0] << " -> " << e[1]);
  CHECK(e[1] < 1e-2);
  CHECK(e[0] / e[1] >= 3.0);
}

TEST_CASE("time families: Fourier transform commutes with decomposition") {
  GridSpec g{GridDomain::square, 32};
  HelmholtzSolver S(g, 2, true);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> U(-1, 1);
  TimeFamily fam;
  for (int k = 0; k < 8; ++k) {
    fam.t.push_back(k / 7.0);
    std::vector<double> c(9);
    for (double& v : c) v = U(rng);
    const bool end = k == 0 || k == 7;
    fam.slices.push_back(GridField::sample(g, by_components(2, [c, end](const Vec& x, int q) {
      return end ? 0.0 : c[3 * q] + c[3 * q + 1] * std::sin(3 * x[0]) + c[3 * q + 2] * x[0] * x[1];
    })));
  }
  const std::vector<double> taus{0.0, 0.7, 2.0};
  FamilyDecomposition d = time_family_decompose(S, fam, taus);
  MESSAGE("commutation " << d.commutation_residual);
  CHECK(d.commutation_residual <= 1e-6);

  // separable: chi(t) omega_0
  TimeFamily sep;
  GridField w0 = fam.slices[3];
  TfHelmholtz d0 = S.solve_tf(w0);
  for (int k = 0; k < 6; ++k) {
    sep.t.push_back(0.2 * k);
    sep.slices.push_back(w0 * std::sin(pi * k / 5.0));
  }
  FamilyDecomposition ds = time_family_decompose(S, sep, taus);
  for (int k = 0; k < 6; ++k) {
    CHECK((d0.omega_tfs * std::sin(pi * k / 5.0)).max_abs_diff(ds.slices[k].omega_tfs) < 1e-12);
    CHECK((d0.h * std::sin(pi * k / 5.0)).max_abs_diff(ds.slices[k].h) < 1e-12);
  }

  TimeFamily open = fam;
  open.slices.back() = fam.slices[3];
  CHECK_THROWS_AS(time_family_decompose(S, open, taus), SupportError);
}

TEST_CASE("primitive in time") {
  GridSpec g{GridDomain::square, 32};
  GridField shape = GridField::sample(g, scalar_field(2, [](const Vec& x) { return 1 + x[0] * x[1]; }));
  auto bump = [](double t) { return oracle::bump(vec({t}), vec({0.5}), 0.4); };
  auto dbump = [](double t) {
    const double s = (t - 0.5) / 0.4, q = s * s;
    return q < 1 ? std::exp(-1 / (1 - q)) * (-2 * s / 0.4) / ((1 - q) * (1 - q)) : 0.0;
  };
  double err[2];
  for (int r = 0; r < 2; ++r) {
    const int K = 100 << r;
    TimeFamily fam;
    for (int k = 0; k <= K; ++k) {
      fam.t.push_back(double(k) / K);
      fam.slices.push_back(shape * dbump(double(k) / K));
    }
    TimeFamily a = primitive_in_time(fam);
    err[r] = 0;
    for (int k = 0; k <= K; ++k) err[r] = std::max(err[r], a.slices[k].max_abs_diff(shape * bump(fam.t[k])));
  }
  CHECK(err[0] / err[1] >= 3.5);
  CHECK(err[1] < 5e-4);

  TimeFamily zero{{0.0, 0.5, 1.0}, {shape * 0.0, shape * 0.0, shape * 0.0}};
  CHECK(primitive_in_time(zero).slices[1].max_abs() == 0.0);

  // sin(2 pi t) on [0, 1] sampled uniformly
  TimeFamily sine;
  for (int k = 0; k <= 64; ++k) {
    sine.t.push_back(k / 64.0);
    sine.slices.push_back(shape * std::sin(2 * pi * k / 64.0));
  }
  TimeFamily a = primitive_in_time(sine);
  CHECK(a.slices.front().max_abs() <= 1e-8);
  CHECK(a.slices.back().max_abs() <= 1e-8);

  TimeFamily biased = sine;
  for (GridField& s : biased.slices) s += shape * 0.1;
  CHECK_THROWS_AS(primitive_in_time(biased), ZeroMeanError);
}

TEST_CASE("decomposition preconditions") {
  GridSpec g{GridDomain::square, 32};
  CHECK_THROWS_AS(HelmholtzSolver(g, 4, false), RankError);
  CHECK_THROWS_AS(HelmholtzSolver(g, 1, true), RankError);
  CHECK_THROWS_AS(HelmholtzSolver(GridSpec{GridDomain::square, 16}, 1, false), ResolutionError);
}
