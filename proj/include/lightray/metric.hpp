#pragma once

#include <array>
#include <functional>
#include <type_traits>

#include "lightray/errors.hpp"
#include "lightray/tensor.hpp"

namespace lightray {

using ChartPredicate = std::function<bool(const Vec&)>;

struct MetricField {
  int dim = 0;
  std::function<Mat(const Vec&)> eval;
  // optional closed-form partials: dg[k] = d_k g
  std::function<void(const Vec&, std::array<Mat, kMaxDim>&)> derivative;
  ChartPredicate chart_contains;  // empty: the whole R^dim
  double fd_step = 1e-4;
  unsigned constant_dirs = 0;     // bit k set: g does not depend on x^k

  Mat operator()(const Vec& x) const { return eval(x); }
};

// 5-point central difference of f along coordinate k; f returns anything closed under +, -, *.
template <class F>
auto partial4(F&& f, const Vec& x, int k, double h, const ChartPredicate& contains) {
  Vec p = x;
  auto at = [&](double off) {
    p[k] = x[k] + off;
    if (contains && !contains(p)) throw StencilError("finite-difference stencil leaves the chart");
    return f(p);
  };
  auto fp1 = at(h);
  auto fm1 = at(-h);
  auto fp2 = at(2 * h);
  auto fm2 = at(-2 * h);
  using R = std::decay_t<decltype(fp1)>;
  R out = ((fp1 - fm1) * 8.0 - (fp2 - fm2)) * (1.0 / (12.0 * h));
  return out;
}

class Christoffel {
 public:
  explicit Christoffel(int dim = 0) : dim_(dim) { v_.fill(0.0); }
  int dim() const { return dim_; }
  // Gamma^i_{jk}
  double operator()(int i, int j, int k) const { return v_[(i * kMaxDim + j) * kMaxDim + k]; }
  double& operator()(int i, int j, int k) { return v_[(i * kMaxDim + j) * kMaxDim + k]; }
  // Gamma^i_{jk} a^j b^k
  Vec contract(const Vec& a, const Vec& b) const;
  double max_abs() const;

 private:
  int dim_;
  std::array<double, kMaxDim * kMaxDim * kMaxDim> v_;
};

void metric_derivatives(const MetricField& g, const Vec& x, std::array<Mat, kMaxDim>& dg);
Christoffel christoffel(const Mat& g, const std::array<Mat, kMaxDim>& dg);
Christoffel christoffel(const MetricField& g, const Vec& x);

}  // namespace lightray
