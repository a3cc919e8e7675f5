#include "lightray/decomposition.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

#include "lightray/errors.hpp"
#include "lightray/parallel.hpp"

namespace lightray {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// packed index of the component with q y-indices
int comp_index(int rank, int q) {
  std::array<int, kMaxRank> idx{};
  for (int k = 0; k < rank; ++k) idx[k] = k < rank - q ? 0 : 1;
  return SymLayout::get(2, rank).packed_of(std::span<const int>(idx.data(), rank));
}

double binom(int m, int k) {
  double r = 1;
  for (int i = 1; i <= k; ++i) r = r * (m - k + i) / i;
  return r;
}

Mat identity2() { return Mat::Identity(2, 2); }

// Applies a flat pointwise map lattice by lattice. Flat i, j, p never mix
// components of different parity, so co-located components suffice.
template <class Op>
GridField pointwise(const GridField& in, int out_rank, Op op) {
  GridField out(in.grid, out_rank);
  if (out_rank < 0) return out;
  for (int oy = 0; oy < 2; ++oy) {
    const int ox_in = (in.rank - oy + 2) % 2;
    std::vector<int> qin, qout;
    for (int q = 0; q <= in.rank; ++q)
      if (in.oy(q) == oy) qin.push_back(q);
    for (int q = 0; q <= out_rank; ++q)
      if (out.oy(q) == oy) qout.push_back(q);
    if (qout.empty()) continue;
    if ((out_rank - oy + 2) % 2 != ox_in && !qin.empty())
      throw std::logic_error("pointwise map changes lattice parity");
    const size_t nodes = out.comps[qout[0]].size();
    for (size_t k = 0; k < nodes; ++k) {
      SymTensor t(2, in.rank);
      for (int q : qin) t[comp_index(in.rank, q)] = in.comps[q][k];
      const SymTensor u = op(t);
      for (int q : qout) out.comps[q][k] = u[comp_index(out_rank, q)];
    }
  }
  return out;
}

}  // namespace

Vec GridSpec::node(int ox, int oy, int i, int j) const {
  Vec x(2);
  const double d = spacing();
  x[0] = origin() + (i + 0.5 * ox) * d;
  x[1] = origin() + (j + 0.5 * oy) * d;
  return x;
}

bool GridSpec::inside(const Vec& x) const {
  if (domain == GridDomain::square) {
    const double e = 1e-12;
    return x[0] >= -e && x[0] <= 1 + e && x[1] >= -e && x[1] <= 1 + e;
  }
  return x.squaredNorm() < 1.0;
}

bool GridSpec::active(const Vec& x) const {
  if (domain == GridDomain::square) return true;
  return x.norm() < 1.0 + spacing();
}

GridSpec GridSpec::for_manifold(const ChartedManifold& man, int n) {
  if (man.id == "flat-square") return {GridDomain::square, n};
  if (man.id == "flat-disc") return {GridDomain::disc, n};
  throw DiscretizationError("elliptic solves are implemented on flat-square and flat-disc, not " +
                            man.id);
}

GridField::GridField(const GridSpec& g, int r) : grid(g), rank(r) {
  if (r < 0) return;
  comps.resize(r + 1);
  for (int q = 0; q <= r; ++q) comps[q].assign(static_cast<size_t>(nx(q)) * ny(q), 0.0);
}

GridField GridField::sample(const GridSpec& grid, const TensorField& f) {
  if (f.dim != 2) throw RankError("grid fields are two-dimensional");
  GridField out(grid, f.rank);
  for (int q = 0; q <= f.rank; ++q) {
    const int p = comp_index(f.rank, q);
    for (int i = 0; i < out.nx(q); ++i)
      for (int j = 0; j < out.ny(q); ++j) {
        const Vec x = out.node(q, i, j);
        if (grid.active(x)) out.at(q, i, j) = f(x)[p];
      }
  }
  return out;
}

double GridField::max_abs() const {
  double m = 0;
  for (int q = 0; q <= rank; ++q)
    for (int i = 0; i < nx(q); ++i)
      for (int j = 0; j < ny(q); ++j)
        if (grid.inside(node(q, i, j))) m = std::max(m, std::abs(at(q, i, j)));
  return m;
}

double GridField::max_abs_diff(const GridField& o) const { return (*this - o).max_abs(); }

double GridField::rms() const {
  double s = 0;
  long cnt = 0;
  for (int q = 0; q <= rank; ++q)
    for (int i = 0; i < nx(q); ++i)
      for (int j = 0; j < ny(q); ++j)
        if (grid.inside(node(q, i, j))) {
          s += at(q, i, j) * at(q, i, j);
          ++cnt;
        }
  return cnt ? std::sqrt(s / cnt) : 0.0;
}

GridField& GridField::operator+=(const GridField& o) {
  if (o.rank != rank || o.grid.n != grid.n) throw RankError("grid field shapes differ");
  for (int q = 0; q <= rank; ++q)
    for (size_t k = 0; k < comps[q].size(); ++k) comps[q][k] += o.comps[q][k];
  return *this;
}

GridField& GridField::operator-=(const GridField& o) { return *this += o * -1.0; }

GridField& GridField::operator*=(double s) {
  for (auto& c : comps)
    for (double& v : c) v *= s;
  return *this;
}

void GridField::write_csv(std::ostream& os) const {
  os << "component,x,y,value\n";
  os << std::setprecision(12);
  for (int q = 0; q <= rank; ++q) {
    const std::string label =
        rank == 0 ? std::string("-") : std::string(rank - q, '0') + std::string(q, '1');
    for (int i = 0; i < nx(q); ++i)
      for (int j = 0; j < ny(q); ++j) {
        const Vec x = node(q, i, j);
        if (grid.active(x)) os << label << ',' << x[0] << ',' << x[1] << ',' << at(q, i, j) << '\n';
      }
  }
}

GridField grid_metric_product(const GridField& u) {
  return pointwise(u, u.rank + 2, [](const SymTensor& t) { return metric_product(t, identity2()); });
}

GridField grid_trace(const GridField& w) {
  if (w.rank < 2) throw RankError("trace needs rank >= 2");
  return pointwise(w, w.rank - 2, [](const SymTensor& t) { return trace(t, identity2()); });
}

GridField grid_project_trace_free(const GridField& w) {
  return pointwise(w, w.rank, [](const SymTensor& t) { return project_trace_free(t, identity2()); });
}

GridField grid_solve_ji(const GridField& w) {
  return pointwise(w, w.rank, [](const SymTensor& t) { return solve_ji(t, identity2()); });
}

struct HelmholtzSolver::Impl {
  GridSpec grid;
  int m = 1;
  bool tf = false;
  std::vector<std::vector<int>> row_of;  // [q][node] -> row of omega
  std::vector<std::vector<int>> unk_of;  // [r][node] -> unknown of h
  Eigen::VectorXd W;
  SpMat D, Dabs, Q, P, B;  // B = (P D Q)^T W
  Eigen::SimplicialLDLT<SpMat> ldlt;
  int rows = 0, unknowns = 0;

  Eigen::VectorXd to_rows(const GridField& f) const {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(rows);
    for (int q = 0; q <= m; ++q)
      for (size_t k = 0; k < row_of[q].size(); ++k)
        if (row_of[q][k] >= 0) v[row_of[q][k]] = f.comps[q][k];
    return v;
  }
  GridField from_rows(const Eigen::VectorXd& v) const {
    GridField f(grid, m);
    for (int q = 0; q <= m; ++q)
      for (size_t k = 0; k < row_of[q].size(); ++k)
        if (row_of[q][k] >= 0) f.comps[q][k] = v[row_of[q][k]];
    return f;
  }
  Eigen::VectorXd to_unknowns(const GridField& h) const {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(unknowns);
    for (int r = 0; r < m; ++r)
      for (size_t k = 0; k < unk_of[r].size(); ++k)
        if (unk_of[r][k] >= 0) v[unk_of[r][k]] = h.comps[r][k];
    return v;
  }
  GridField from_unknowns(const Eigen::VectorXd& v) const {
    GridField h(grid, m - 1);
    for (int r = 0; r < m; ++r)
      for (size_t k = 0; k < unk_of[r].size(); ++k)
        if (unk_of[r][k] >= 0) h.comps[r][k] = v[unk_of[r][k]];
    return h;
  }
  double residual(const Eigen::VectorXd& omega, const Eigen::VectorXd& part) const {
    const Eigen::VectorXd num = D.transpose() * W.cwiseProduct(part);
    const Eigen::VectorXd den = Dabs.transpose() * W.cwiseProduct(omega).cwiseAbs();
    const double d = den.size() ? den.lpNorm<Eigen::Infinity>() : 0.0;
    return d > 0 ? num.lpNorm<Eigen::Infinity>() / d : 0.0;
  }
};

HelmholtzSolver::HelmholtzSolver(const GridSpec& grid, int m, bool trace_free) {
  if (m < 1 || m > 3) throw RankError("decompositions are implemented for ranks 1 to 3");
  if (trace_free && m < 2) throw RankError("the trace-free decomposition needs rank >= 2");
  if (grid.n < 32) throw ResolutionError("decomposition grids need at least 32 cells per side");
  auto I = std::make_shared<Impl>();
  I->grid = grid;
  I->m = m;
  I->tf = trace_free;
  const bool square = grid.domain == GridDomain::square;
  const int n = grid.n;
  const double d = grid.spacing();
  const GridField omega_shape(grid, m), h_shape(grid, m - 1);

  // h unknowns: off the square's edges, inside the open disc
  I->unk_of.resize(m);
  for (int r = 0; r < m; ++r) {
    I->unk_of[r].assign(h_shape.comps[r].size(), -1);
    for (int i = 0; i < h_shape.nx(r); ++i)
      for (int j = 0; j < h_shape.ny(r); ++j) {
        bool free;
        if (square) {
          const bool ex = h_shape.ox(r) == 0 && (i == 0 || i == n);
          const bool ey = h_shape.oy(r) == 0 && (j == 0 || j == n);
          free = !ex && !ey;
        } else {
          free = grid.inside(h_shape.node(r, i, j));
        }
        if (free) I->unk_of[r][static_cast<size_t>(i) * h_shape.ny(r) + j] = I->unknowns++;
      }
  }

  std::vector<double> w;
  I->row_of.resize(m + 1);
  for (int q = 0; q <= m; ++q) {
    I->row_of[q].assign(omega_shape.comps[q].size(), -1);
    for (int i = 0; i < omega_shape.nx(q); ++i)
      for (int j = 0; j < omega_shape.ny(q); ++j) {
        if (!grid.active(omega_shape.node(q, i, j))) continue;
        double wt = d * d * binom(m, q);
        if (square) {
          if (omega_shape.ox(q) == 0 && (i == 0 || i == n)) wt *= 0.5;
          if (omega_shape.oy(q) == 0 && (j == 0 || j == n)) wt *= 0.5;
        }
        I->row_of[q][static_cast<size_t>(i) * omega_shape.ny(q) + j] = I->rows++;
        w.push_back(wt);
      }
  }
  I->W = Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));

  // h component r at lattice (i, j) as a combination of unknowns. A half-cell
  // ghost outside the square mirrors its neighbour with a sign flip. This keeps
  // D^T W a consistent codifferential; a higher-order ghost sharpens d^s on the
  // edge rows but makes D^T W inconsistent at the first interior nodes.
  std::vector<Triplet> td;
  auto add = [&](int row, int r, int i, int j, double c) {
    const int nx = h_shape.nx(r), ny = h_shape.ny(r);
    auto put = [&](int a, int b, double w) {
      const int u = I->unk_of[r][static_cast<size_t>(a) * ny + b];
      if (u >= 0) td.emplace_back(row, u, w * c);
    };
    const bool out_x = i < 0 || i >= nx, out_y = j < 0 || j >= ny;
    if (!out_x && !out_y) return put(i, j, 1.0);
    if (!square) return;
    if (out_x && h_shape.ox(r) == 1) {
      put(i < 0 ? 0 : nx - 1, j, -1.0);
    } else if (out_y && h_shape.oy(r) == 1) {
      put(i, j < 0 ? 0 : ny - 1, -1.0);
    }
  };
  for (int q = 0; q <= m; ++q) {
    const int p = m - q;
    const int ox = omega_shape.ox(q), oy = omega_shape.oy(q);
    for (int i = 0; i < omega_shape.nx(q); ++i)
      for (int j = 0; j < omega_shape.ny(q); ++j) {
        const int row = I->row_of[q][static_cast<size_t>(i) * omega_shape.ny(q) + j];
        if (row < 0) continue;
        if (p > 0) {
          const double c = double(p) / (m * d);
          const int left = i - (1 - ox);
          add(row, q, left + 1, j, c);
          add(row, q, left, j, -c);
        }
        if (q > 0) {
          const double c = double(q) / (m * d);
          const int below = j - (1 - oy);
          add(row, q - 1, i, below + 1, c);
          add(row, q - 1, i, below, -c);
        }
      }
  }
  I->D.resize(I->rows, I->unknowns);
  I->D.setFromTriplets(td.begin(), td.end());
  I->Dabs = I->D.cwiseAbs();

  // h parametrization: trace-free rank-2 h is (a, b, -a)
  std::vector<Triplet> tq;
  int params = 0;
  if (trace_free && m == 3) {
    std::vector<int> a_of(I->unk_of[0].size(), -1);
    for (size_t k = 0; k < a_of.size(); ++k)
      if (I->unk_of[0][k] >= 0) {
        a_of[k] = params++;
        tq.emplace_back(I->unk_of[0][k], a_of[k], 1.0);
        tq.emplace_back(I->unk_of[2][k], a_of[k], -1.0);
      }
    for (int u : I->unk_of[1])
      if (u >= 0) tq.emplace_back(u, params++, 1.0);
  } else {
    for (int u = 0; u < I->unknowns; ++u) tq.emplace_back(u, u, 1.0);
    params = I->unknowns;
  }
  I->Q.resize(I->unknowns, params);
  I->Q.setFromTriplets(tq.begin(), tq.end());

  SpMat A = I->D * I->Q;
  if (trace_free) {
    // pointwise p on co-located components
    std::vector<std::vector<double>> Pc(m + 1, std::vector<double>(m + 1, 0.0));
    for (int qi = 0; qi <= m; ++qi) {
      SymTensor e(2, m);
      e[comp_index(m, qi)] = 1.0;
      const SymTensor pe = project_trace_free(e, identity2());
      for (int qo = 0; qo <= m; ++qo) Pc[qo][qi] = pe[comp_index(m, qo)];
    }
    std::vector<Triplet> tp;
    for (int qo = 0; qo <= m; ++qo)
      for (int qi = 0; qi <= m; ++qi) {
        if (Pc[qo][qi] == 0.0) continue;
        for (size_t k = 0; k < I->row_of[qo].size(); ++k)
          if (I->row_of[qo][k] >= 0) tp.emplace_back(I->row_of[qo][k], I->row_of[qi][k], Pc[qo][qi]);
      }
    I->P.resize(I->rows, I->rows);
    I->P.setFromTriplets(tp.begin(), tp.end());
    A = (I->P * A).pruned();
  }
  I->B = A.transpose() * I->W.asDiagonal();
  const SpMat K = I->B * A;
  I->ldlt.compute(K);
  if (I->ldlt.info() != Eigen::Success) throw DiscretizationError("sparse factorization failed");
  const Eigen::VectorXd piv = I->ldlt.vectorD().cwiseAbs();
  if (piv.size() && piv.minCoeff() <= 1e-12 * piv.maxCoeff())
    throw DiscretizationError("discrete elliptic system is singular");
  impl_ = std::move(I);
}

const GridSpec& HelmholtzSolver::grid() const { return impl_->grid; }
int HelmholtzSolver::rank() const { return impl_->m; }
bool HelmholtzSolver::trace_free() const { return impl_->tf; }

GridField HelmholtzSolver::apply_ds(const GridField& h) const {
  if (h.rank != impl_->m - 1) throw RankError("apply_ds expects a rank m-1 field");
  return impl_->from_rows(impl_->D * impl_->to_unknowns(h));
}

Helmholtz HelmholtzSolver::solve(const GridField& omega) const {
  const Impl& I = *impl_;
  if (I.tf) throw std::logic_error("solver was built for the trace-free decomposition");
  if (omega.rank != I.m) throw RankError("field rank does not match the solver");
  const Eigen::VectorXd w = I.to_rows(omega);
  const Eigen::VectorXd hv = I.Q * I.ldlt.solve(I.B * w);
  const Eigen::VectorXd s = w - I.D * hv;
  Helmholtz out;
  out.omega_s = I.from_rows(s);
  out.h = I.from_unknowns(hv);
  out.report = {I.residual(w, s), 1, I.grid.spacing()};
  return out;
}

TfHelmholtz HelmholtzSolver::solve_tf(const GridField& omega) const {
  const Impl& I = *impl_;
  if (!I.tf) throw std::logic_error("solver was not built for the trace-free decomposition");
  if (omega.rank != I.m) throw RankError("field rank does not match the solver");
  const Eigen::VectorXd w = I.to_rows(omega);
  const Eigen::VectorXd hv = I.Q * I.ldlt.solve(I.B * w);
  const Eigen::VectorXd r = w - I.D * hv;
  const Eigen::VectorXd s = I.P * r;
  TfHelmholtz out;
  out.omega_tfs = I.from_rows(s);
  out.omega_t = grid_solve_ji(grid_trace(I.from_rows(r)));
  out.h = I.from_unknowns(hv);
  out.report = {I.residual(w, s), 1, I.grid.spacing()};
  out.trace_defect = grid_trace(out.omega_tfs).max_abs();
  if (I.m == 3) out.h_trace_defect = grid_trace(out.h).max_abs();
  return out;
}

Helmholtz helmholtz(const GridSpec& grid, const GridField& omega) {
  return HelmholtzSolver(grid, omega.rank, false).solve(omega);
}

TfHelmholtz tf_helmholtz(const GridSpec& grid, const GridField& omega) {
  return HelmholtzSolver(grid, omega.rank, true).solve_tf(omega);
}

namespace {

TfHelmholtz decompose(const HelmholtzSolver& S, const GridField& f) {
  if (S.trace_free()) return S.solve_tf(f);
  Helmholtz h = S.solve(f);
  TfHelmholtz out;
  out.omega_tfs = std::move(h.omega_s);
  out.h = std::move(h.h);
  out.report = h.report;
  return out;
}

std::vector<double> trapezoid(const std::vector<double>& t) {
  std::vector<double> w(t.size(), 0.0);
  for (size_t k = 0; k + 1 < t.size(); ++k) {
    w[k] += 0.5 * (t[k + 1] - t[k]);
    w[k + 1] += 0.5 * (t[k + 1] - t[k]);
  }
  return w;
}

double family_max(const TimeFamily& f) {
  double m = 0;
  for (const GridField& g : f.slices) m = std::max(m, g.max_abs());
  return m;
}

}  // namespace

FamilyDecomposition time_family_decompose(const HelmholtzSolver& S, const TimeFamily& fam,
                                          std::span<const double> taus) {
  const size_t K = fam.slices.size();
  if (K != fam.t.size() || K < 2) throw SupportError("time family needs matching times and slices");
  const double peak = family_max(fam);
  if (fam.slices.front().max_abs() > 1e-12 * peak || fam.slices.back().max_abs() > 1e-12 * peak)
    throw SupportError("time family does not vanish at the ends of the window");

  FamilyDecomposition out;
  out.slices.resize(K);
  parallel_for(K, [&](size_t k) { out.slices[k] = decompose(S, fam.slices[k]); });

  const std::vector<double> w = trapezoid(fam.t);
  for (double tau : taus) {
    GridField re(S.grid(), S.rank()), im(S.grid(), S.rank());
    for (size_t k = 0; k < K; ++k) {
      re += fam.slices[k] * (w[k] * std::cos(tau * fam.t[k]));
      im += fam.slices[k] * (-w[k] * std::sin(tau * fam.t[k]));
    }
    const double scale = std::max(std::max(re.max_abs(), im.max_abs()), 1e-300);
    const TfHelmholtz dre = decompose(S, re), dim = decompose(S, im);
    auto compare = [&](auto member, const TfHelmholtz& d, bool use_sin) {
      GridField acc = d.*member;
      acc *= 0.0;
      for (size_t k = 0; k < K; ++k) {
        const double c = use_sin ? -std::sin(tau * fam.t[k]) : std::cos(tau * fam.t[k]);
        acc += out.slices[k].*member * (w[k] * c);
      }
      out.commutation_residual =
          std::max(out.commutation_residual, acc.max_abs_diff(d.*member) / scale);
    };
    compare(&TfHelmholtz::omega_tfs, dre, false);
    compare(&TfHelmholtz::omega_tfs, dim, true);
    compare(&TfHelmholtz::h, dre, false);
    compare(&TfHelmholtz::h, dim, true);
    if (S.trace_free()) {
      compare(&TfHelmholtz::omega_t, dre, false);
      compare(&TfHelmholtz::omega_t, dim, true);
    }
  }
  return out;
}

TimeFamily primitive_in_time(const TimeFamily& fam, double tol) {
  const size_t K = fam.slices.size();
  if (K != fam.t.size() || K < 2) throw SupportError("time family needs matching times and slices");
  TimeFamily out;
  out.t = fam.t;
  out.slices.reserve(K);
  out.slices.push_back(fam.slices[0] * 0.0);
  for (size_t k = 1; k < K; ++k)
    out.slices.push_back(out.slices.back() +
                         (fam.slices[k - 1] + fam.slices[k]) * (0.5 * (fam.t[k] - fam.t[k - 1])));
  const double bound = tol * family_max(fam) * (fam.t.back() - fam.t.front());
  if (out.slices.back().max_abs() > bound)
    throw ZeroMeanError("time integral of the family is not zero");
  return out;
}

}  // namespace lightray
