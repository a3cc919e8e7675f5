#include "lightray/fields.hpp"

#include <Eigen/Dense>

namespace lightray {

TensorField scalar_field(int dim, ScalarField f) {
  return {dim, 0, [f = std::move(f), dim](const Vec& x) { return SymTensor::scalar(f(x), dim); }};
}

TensorField scaled(const TensorField& T, ScalarField c) {
  return {T.dim, T.rank, [T, c = std::move(c)](const Vec& x) { return T(x) * c(x); }};
}

std::array<SymTensor, kMaxDim> partials(const TensorField& T, const Vec& x, const FdOptions& fd) {
  std::array<SymTensor, kMaxDim> d;
  for (int a = 0; a < T.dim; ++a) d[a] = partial4(T.fn, x, a, fd.step, fd.contains);
  return d;
}

SymTensor sym_cov_derivative(const Christoffel& gamma, const SymTensor& T,
                             std::span<const SymTensor> dT) {
  const int n = T.dim();
  const int r = T.rank();
  const int m = r + 1;
  const auto& LT = T.layout();
  const auto& Lm = SymLayout::get(n, m);
  // unsymmetrized nabla_{i1} T_{i2..im}, then the average over all orderings
  std::vector<double> full(Lm.full_size());
  std::array<int, kMaxRank + 1> digits{};
  std::array<int, kMaxRank> rest{};
  for (int f = 0; f < Lm.full_size(); ++f) {
    int q = f;
    for (int k = m - 1; k >= 0; --k) {
      digits[k] = q % n;
      q /= n;
    }
    const int a = digits[0];
    std::copy(digits.begin() + 1, digits.begin() + m, rest.begin());
    std::span<const int> rs(rest.data(), static_cast<size_t>(r));
    double v = dT[a][LT.packed_of(rs)];
    for (int s = 0; s < r; ++s) {
      const int keep = rest[s];
      for (int l = 0; l < n; ++l) {
        double gam = gamma(l, a, keep);
        if (gam == 0.0) continue;
        rest[s] = l;
        v -= gam * T[LT.packed_of(rs)];
      }
      rest[s] = keep;
    }
    full[f] = v;
  }
  return SymTensor::symmetrize(full, n, m);
}

SymTensor sym_cov_derivative(const MetricField& g, const TensorField& T, const Vec& x) {
  auto dT = partials(T, x, {g.fd_step, g.chart_contains});
  return sym_cov_derivative(christoffel(g, x), T(x), std::span<const SymTensor>(dT.data(), T.dim));
}

TensorField sym_cov_derivative(const MetricField& g, const TensorField& T) {
  return {T.dim, T.rank + 1, [g, T](const Vec& x) { return sym_cov_derivative(g, T, x); }};
}

SymTensor divergence(const Mat& ginv, const Christoffel& gamma, const SymTensor& w,
                     std::span<const SymTensor> dw) {
  const int n = w.dim();
  const int m = w.rank();
  if (m < 1) throw RankError("divergence of a scalar");
  const auto& L = w.layout();
  SymTensor out(n, m - 1);
  const auto& Lo = out.layout();
  std::array<int, kMaxRank> ix{};
  std::span<const int> is(ix.data(), static_cast<size_t>(m));
  for (int p = 0; p < Lo.size(); ++p) {
    auto J = Lo.multi_index(p);
    double acc = 0.0;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        if (ginv(a, b) == 0.0) continue;
        // (nabla_a w)_{b J}
        ix[0] = b;
        std::copy(J.begin(), J.end(), ix.begin() + 1);
        double v = dw[a][L.packed_of(is)];
        for (int s = 0; s < m; ++s) {
          const int keep = ix[s];
          for (int l = 0; l < n; ++l) {
            double gam = gamma(l, a, keep);
            if (gam == 0.0) continue;
            ix[s] = l;
            v -= gam * w[L.packed_of(is)];
          }
          ix[s] = keep;
        }
        acc += ginv(a, b) * v;
      }
    out[p] = -acc;
  }
  return out;
}

SymTensor divergence(const MetricField& g, const TensorField& w, const Vec& x) {
  auto dw = partials(w, x, {g.fd_step, g.chart_contains});
  Mat ginv = g.eval(x).inverse();
  return divergence(ginv, christoffel(g, x), w(x), std::span<const SymTensor>(dw.data(), w.dim));
}

TensorField divergence(const MetricField& g, const TensorField& w) {
  return {w.dim, w.rank - 1, [g, w](const Vec& x) { return divergence(g, w, x); }};
}

}  // namespace lightray
