#pragma once

#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "lightray/fields.hpp"
#include "lightray/manifold.hpp"

namespace lightray {

// Uniform lattice over a flat 2D chart. Square: [0, 1]^2. Disc: the unit disc
// inside the box [-1, 1]^2 (masked).
enum class GridDomain { square, disc };

struct GridSpec {
  GridDomain domain = GridDomain::square;
  int n = 32;  // cells per side

  double origin() const { return domain == GridDomain::square ? 0.0 : -1.0; }
  double spacing() const { return (domain == GridDomain::square ? 1.0 : 2.0) / n; }
  // nodes per side for an integer (0) or half-cell (1) offset
  int count(int offset) const { return n + 1 - offset; }
  Vec node(int ox, int oy, int i, int j) const;
  // closed square / open disc
  bool inside(const Vec& x) const;
  // nodes carried by the discrete system (disc: a one-cell collar outside)
  bool active(const Vec& x) const;

  // "flat-square" or "flat-disc"; anything else is a DiscretizationError
  static GridSpec for_manifold(const ChartedManifold& man, int n);
};

// Symmetric rank-m field on a staggered lattice: component q (number of y
// indices) sits at offset ((m - q) mod 2, q mod 2) half cells.
struct GridField {
  GridSpec grid;
  int rank = 0;
  std::vector<std::vector<double>> comps;  // comps[q][i * ny + j]

  GridField() = default;
  GridField(const GridSpec& grid, int rank);

  int ox(int q) const { return (rank - q) % 2; }
  int oy(int q) const { return q % 2; }
  int nx(int q) const { return grid.count(ox(q)); }
  int ny(int q) const { return grid.count(oy(q)); }
  Vec node(int q, int i, int j) const { return grid.node(ox(q), oy(q), i, j); }
  double& at(int q, int i, int j) { return comps[q][static_cast<size_t>(i) * ny(q) + j]; }
  double at(int q, int i, int j) const { return comps[q][static_cast<size_t>(i) * ny(q) + j]; }

  // component q of a continuum field, at active nodes
  static GridField sample(const GridSpec& grid, const TensorField& f);

  // over nodes inside the domain
  double max_abs() const;
  double max_abs_diff(const GridField& o) const;
  double rms() const;

  GridField& operator+=(const GridField& o);
  GridField& operator-=(const GridField& o);
  GridField& operator*=(double s);
  friend GridField operator+(GridField a, const GridField& b) { return a += b; }
  friend GridField operator-(GridField a, const GridField& b) { return a -= b; }
  friend GridField operator*(GridField a, double s) { return a *= s; }
  friend GridField operator*(double s, GridField a) { return a *= s; }

  // long format: component,x,y,value with the component as its multi-index ("0011")
  void write_csv(std::ostream& os) const;
};

// Pointwise flat-metric algebra on lattices: i, j, p and (j i)^{-1}.
GridField grid_metric_product(const GridField& u);
GridField grid_trace(const GridField& w);
GridField grid_project_trace_free(const GridField& w);
GridField grid_solve_ji(const GridField& w);

struct SolverReport {
  double residual = 0.0;  // |D^T W omega_s|_inf / ||D^T| |W omega||_inf
  int iterations = 1;     // direct factorization
  double grid_h = 0.0;
};

struct Helmholtz {
  GridField omega_s, h;
  SolverReport report;
};

struct TfHelmholtz {
  GridField omega_tfs, omega_t, h;
  SolverReport report;
  double trace_defect = 0.0;    // max |j omega_tfs|
  double h_trace_defect = 0.0;  // max |j h| (m = 3)
};

// Factorizes d^s* W d^s (or d^s* W p d^s) once for a grid and rank. h = 0 on the
// boundary: nodes on the square's edges are fixed and half-cell ghosts mirror
// with a sign flip (so d^s is first order on edge rows only); on the disc h
// vanishes outside the open disc.
class HelmholtzSolver {
 public:
  HelmholtzSolver(const GridSpec& grid, int rank, bool trace_free);

  const GridSpec& grid() const;
  int rank() const;
  bool trace_free() const;

  Helmholtz solve(const GridField& omega) const;
  TfHelmholtz solve_tf(const GridField& omega) const;
  // discrete d^s of a rank m-1 field with this solver's boundary rule
  GridField apply_ds(const GridField& h) const;

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
};

Helmholtz helmholtz(const GridSpec& grid, const GridField& omega);
TfHelmholtz tf_helmholtz(const GridSpec& grid, const GridField& omega);

struct TimeFamily {
  std::vector<double> t;
  std::vector<GridField> slices;
};

struct FamilyDecomposition {
  // omega_tfs holds omega_s and omega_t is empty unless the solver is trace-free
  std::vector<TfHelmholtz> slices;
  double commutation_residual = 0.0;
};

// Decomposes each slice; for each tau, compares the decomposition of the
// trapezoid time transform with the transform of the decomposed slices.
// Throws SupportError unless the first and last slices vanish.
FamilyDecomposition time_family_decompose(const HelmholtzSolver& solver, const TimeFamily& family,
                                          std::span<const double> taus);

// Cumulative trapezoid in t. Throws ZeroMeanError when the total integral
// exceeds tol * max|omega| * (t_max - t_min).
TimeFamily primitive_in_time(const TimeFamily& family, double tol = 1e-8);

}  // namespace lightray
