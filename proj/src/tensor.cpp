#include "lightray/tensor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Dense>

#include "lightray/errors.hpp"

namespace lightray {

namespace {

int ipow(int b, int e) {
  int r = 1;
  while (e-- > 0) r *= b;
  return r;
}

int factorial(int n) { return n <= 1 ? 1 : n * factorial(n - 1); }

void check_shape(int dim, int rank) {
  if (dim < 1 || dim > kMaxDim || rank < 0 || rank > kMaxRank)
    throw RankError("symmetric tensor of dim " + std::to_string(dim) + ", rank " +
                    std::to_string(rank) + " is outside the supported range");
}

}  // namespace

SymLayout::SymLayout(int dim, int rank) : dim_(dim), rank_(rank) {
  std::vector<int> cur(rank, 0);
  // sorted multi-indices in lexicographic order
  auto emit = [&](auto&& self, int pos, int lo) -> void {
    if (pos == rank) {
      idx_.insert(idx_.end(), cur.begin(), cur.end());
      int m = factorial(rank);
      for (int a = 0; a < dim; ++a)
        m /= factorial(static_cast<int>(std::count(cur.begin(), cur.end(), a)));
      mult_.push_back(m);
      return;
    }
    for (int a = lo; a < dim; ++a) {
      cur[pos] = a;
      self(self, pos + 1, a);
    }
  };
  emit(emit, 0, 0);

  full_to_packed_.assign(ipow(dim, rank), 0);
  std::vector<int> digits(rank);
  for (int f = 0; f < full_size(); ++f) {
    int r = f;
    for (int k = rank - 1; k >= 0; --k) {
      digits[k] = r % dim;
      r /= dim;
    }
    std::sort(digits.begin(), digits.end());
    int p = 0;
    for (; p < size(); ++p)
      if (std::equal(digits.begin(), digits.end(), multi_index(p).begin())) break;
    full_to_packed_[f] = p;
  }
}

const SymLayout& SymLayout::get(int dim, int rank) {
  check_shape(dim, rank);
  static const auto table = [] {
    std::array<std::array<SymLayout, kMaxRank + 1>, kMaxDim + 1> t;
    for (int d = 1; d <= kMaxDim; ++d)
      for (int r = 0; r <= kMaxRank; ++r) t[d][r] = SymLayout(d, r);
    return t;
  }();
  return table[dim][rank];
}

int SymLayout::packed_of(std::span<const int> idx) const {
  int f = 0;
  for (int i : idx) f = f * dim_ + i;
  return full_to_packed_[f];
}

SymTensor::SymTensor(int dim, int rank) : dim_(dim), rank_(rank) { check_shape(dim, rank); }

SymTensor SymTensor::scalar(double value, int dim) {
  SymTensor t(dim, 0);
  t.c_[0] = value;
  return t;
}

SymTensor SymTensor::from_covector(const Vec& w) {
  SymTensor t(static_cast<int>(w.size()), 1);
  for (int i = 0; i < w.size(); ++i) t.c_[i] = w[i];
  return t;
}

SymTensor SymTensor::from_matrix(const Mat& m) {
  const int d = static_cast<int>(m.rows());
  SymTensor t(d, 2);
  const auto& L = t.layout();
  for (int p = 0; p < L.size(); ++p) {
    auto ix = L.multi_index(p);
    t.c_[p] = 0.5 * (m(ix[0], ix[1]) + m(ix[1], ix[0]));
  }
  return t;
}

SymTensor SymTensor::symmetrize(std::span<const double> full, int dim, int rank) {
  SymTensor t(dim, rank);
  const auto& L = t.layout();
  std::vector<int> perm(rank);
  for (int p = 0; p < L.size(); ++p) {
    auto ix = L.multi_index(p);
    std::iota(perm.begin(), perm.end(), 0);
    double sum = 0.0;
    int count = 0;
    do {
      int f = 0;
      for (int k = 0; k < rank; ++k) f = f * dim + ix[perm[k]];
      sum += full[f];
      ++count;
    } while (std::next_permutation(perm.begin(), perm.end()));
    t.c_[p] = sum / count;
  }
  return t;
}

double SymTensor::contract(const Vec& v) const {
  const auto& L = layout();
  double sum = 0.0;
  for (int p = 0; p < L.size(); ++p) {
    double term = L.multiplicity(p) * c_[p];
    for (int i : L.multi_index(p)) term *= v[i];
    sum += term;
  }
  return sum;
}

SymTensor SymTensor::contract_once(const Vec& v) const {
  if (rank_ == 0) throw RankError("contract_once on a scalar");
  SymTensor r(dim_, rank_ - 1);
  const auto& L = r.layout();
  const auto& W = layout();
  std::array<int, kMaxRank> ix{};
  for (int p = 0; p < L.size(); ++p) {
    auto j = L.multi_index(p);
    std::copy(j.begin(), j.end(), ix.begin() + 1);
    double s = 0.0;
    for (int a = 0; a < dim_; ++a) {
      ix[0] = a;
      s += v[a] * c_[W.packed_of({ix.data(), static_cast<size_t>(rank_)})];
    }
    r.c_[p] = s;
  }
  return r;
}

double SymTensor::eval(std::span<const Vec> vectors) const {
  const auto& L = layout();
  double sum = 0.0;
  std::array<int, kMaxRank> digits{};
  for (int f = 0; f < L.full_size(); ++f) {
    int r = f;
    for (int k = rank_ - 1; k >= 0; --k) {
      digits[k] = r % dim_;
      r /= dim_;
    }
    double term = c_[L.packed_of_full(f)];
    for (int k = 0; k < rank_; ++k) term *= vectors[k][digits[k]];
    sum += term;
  }
  return sum;
}

std::vector<double> SymTensor::to_full() const {
  const auto& L = layout();
  std::vector<double> out(L.full_size());
  for (int f = 0; f < L.full_size(); ++f) out[f] = c_[L.packed_of_full(f)];
  return out;
}

double SymTensor::max_abs() const {
  double m = 0.0;
  for (int p = 0; p < size(); ++p) m = std::max(m, std::abs(c_[p]));
  return m;
}

SymTensor& SymTensor::operator+=(const SymTensor& o) {
  if (o.dim_ != dim_ || o.rank_ != rank_) throw RankError("adding tensors of different shape");
  for (int p = 0; p < size(); ++p) c_[p] += o.c_[p];
  return *this;
}

SymTensor& SymTensor::operator-=(const SymTensor& o) {
  if (o.dim_ != dim_ || o.rank_ != rank_)
    throw RankError("subtracting tensors of different shape");
  for (int p = 0; p < size(); ++p) c_[p] -= o.c_[p];
  return *this;
}

SymTensor& SymTensor::operator*=(double s) {
  for (int p = 0; p < size(); ++p) c_[p] *= s;
  return *this;
}

SymTensor sym_product(const SymTensor& a, const SymTensor& b) {
  const int d = a.dim();
  const int pa = a.rank();
  const int r = pa + b.rank();
  SymTensor out(d, r);
  const auto& L = out.layout();
  const auto& La = a.layout();
  const auto& Lb = b.layout();
  std::array<int, kMaxRank> ia{}, ib{};
  for (int p = 0; p < L.size(); ++p) {
    auto ix = L.multi_index(p);
    double sum = 0.0;
    int count = 0;
    // every choice of pa slots for a
    for (unsigned mask = 0; mask < (1u << r); ++mask) {
      if (std::popcount(mask) != pa) continue;
      int na = 0, nb = 0;
      for (int k = 0; k < r; ++k) {
        if (mask & (1u << k))
          ia[na++] = ix[k];
        else
          ib[nb++] = ix[k];
      }
      sum += a[La.packed_of({ia.data(), static_cast<size_t>(na)})] *
             b[Lb.packed_of({ib.data(), static_cast<size_t>(nb)})];
      ++count;
    }
    out[p] = sum / count;
  }
  return out;
}

SymTensor metric_product(const SymTensor& u, const Mat& g) {
  return sym_product(u, SymTensor::from_matrix(g));
}

SymTensor trace(const SymTensor& w, const Mat& ginv) {
  if (w.rank() < 2) throw RankError("trace needs rank >= 2");
  const int d = w.dim();
  SymTensor out(d, w.rank() - 2);
  const auto& L = out.layout();
  const auto& W = w.layout();
  std::array<int, kMaxRank> ix{};
  for (int p = 0; p < L.size(); ++p) {
    auto j = L.multi_index(p);
    std::copy(j.begin(), j.end(), ix.begin() + 2);
    double s = 0.0;
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) {
        ix[0] = a;
        ix[1] = b;
        s += ginv(a, b) * w[W.packed_of({ix.data(), static_cast<size_t>(w.rank())})];
      }
    out[p] = s;
  }
  return out;
}

SymTensor solve_ji(const SymTensor& w, const Mat& g) {
  const int d = w.dim();
  const Mat ginv = g.inverse();
  const int s = w.size();
  Eigen::MatrixXd K(s, s);
  for (int k = 0; k < s; ++k) {
    SymTensor e(d, w.rank());
    e[k] = 1.0;
    SymTensor col = trace(metric_product(e, g), ginv);
    for (int p = 0; p < s; ++p) K(p, k) = col[p];
  }
  Eigen::VectorXd rhs(s);
  for (int p = 0; p < s; ++p) rhs[p] = w[p];
  Eigen::VectorXd x = K.partialPivLu().solve(rhs);
  SymTensor out(d, w.rank());
  for (int p = 0; p < s; ++p) out[p] = x[p];
  return out;
}

SymTensor project_trace_free(const SymTensor& w, const Mat& g) {
  if (w.rank() < 2) return w;
  const Mat ginv = g.inverse();
  return w - metric_product(solve_ji(trace(w, ginv), g), g);
}

double inner(const SymTensor& u, const SymTensor& w, const Mat& ginv) {
  const int d = u.dim();
  const int m = u.rank();
  std::vector<double> a = u.to_full();
  std::vector<double> tmp(a.size());
  const std::vector<double> b = w.to_full();
  // raise slot k: stride d^(m-1-k)
  for (int k = 0; k < m; ++k) {
    int stride = ipow(d, m - 1 - k);
    for (size_t f = 0; f < a.size(); ++f) {
      int digit = static_cast<int>(f / stride) % d;
      size_t base = f - static_cast<size_t>(digit) * stride;
      double s = 0.0;
      for (int l = 0; l < d; ++l) s += ginv(digit, l) * a[base + static_cast<size_t>(l) * stride];
      tmp[f] = s;
    }
    std::swap(a, tmp);
  }
  double s = 0.0;
  for (size_t f = 0; f < a.size(); ++f) s += a[f] * b[f];
  return s;
}

}  // namespace lightray
