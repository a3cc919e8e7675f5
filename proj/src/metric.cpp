#include "lightray/metric.hpp"

#include <cmath>

#include <Eigen/Dense>

namespace lightray {

Vec Christoffel::contract(const Vec& a, const Vec& b) const {
  Vec out = Vec::Zero(dim_);
  for (int i = 0; i < dim_; ++i) {
    double s = 0.0;
    for (int j = 0; j < dim_; ++j)
      for (int k = 0; k < dim_; ++k) s += (*this)(i, j, k) * a[j] * b[k];
    out[i] = s;
  }
  return out;
}

double Christoffel::max_abs() const {
  double m = 0.0;
  for (double x : v_) m = std::max(m, std::abs(x));
  return m;
}

void metric_derivatives(const MetricField& g, const Vec& x, std::array<Mat, kMaxDim>& dg) {
  if (g.derivative) {
    g.derivative(x, dg);
    return;
  }
  for (int k = 0; k < g.dim; ++k) {
    if (g.constant_dirs & (1u << k))
      dg[k] = Mat::Zero(g.dim, g.dim);
    else
      dg[k] = partial4(g.eval, x, k, g.fd_step, g.chart_contains);
  }
}

Christoffel christoffel(const Mat& g, const std::array<Mat, kMaxDim>& dg) {
  const int n = static_cast<int>(g.rows());
  const Mat ginv = g.inverse();
  Christoffel gam(n);
  // first kind: [jk, l] = (d_j g_lk + d_k g_lj - d_l g_jk) / 2
  for (int j = 0; j < n; ++j)
    for (int k = j; k < n; ++k) {
      std::array<double, kMaxDim> first{};
      for (int l = 0; l < n; ++l) first[l] = 0.5 * (dg[j](l, k) + dg[k](l, j) - dg[l](j, k));
      for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int l = 0; l < n; ++l) s += ginv(i, l) * first[l];
        gam(i, j, k) = s;
        gam(i, k, j) = s;
      }
    }
  return gam;
}

Christoffel christoffel(const MetricField& g, const Vec& x) {
  std::array<Mat, kMaxDim> dg;
  metric_derivatives(g, x, dg);
  return christoffel(g.eval(x), dg);
}

}  // namespace lightray
