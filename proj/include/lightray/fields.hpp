#pragma once

#include <functional>
#include <span>

#include "lightray/metric.hpp"

namespace lightray {

using ScalarField = std::function<double(const Vec&)>;
using CovectorField = std::function<Vec(const Vec&)>;

// Symmetric m-tensor field in chart components.
struct TensorField {
  int dim = 0;
  int rank = 0;
  std::function<SymTensor(const Vec&)> fn;

  SymTensor operator()(const Vec& x) const { return fn(x); }
  double eval(const Vec& x, std::span<const Vec> vectors) const { return fn(x).eval(vectors); }
};

TensorField scalar_field(int dim, ScalarField f);
// c(x) * T(x)
TensorField scaled(const TensorField& T, ScalarField c);

struct FdOptions {
  double step = 1e-4;
  ChartPredicate contains;
};

// all first partials of T at x, dT[a] = d_a T
std::array<SymTensor, kMaxDim> partials(const TensorField& T, const Vec& x, const FdOptions& fd);

// Symmetrized covariant derivative from Christoffels and partials.
SymTensor sym_cov_derivative(const Christoffel& gamma, const SymTensor& T,
                             std::span<const SymTensor> dT);
SymTensor sym_cov_derivative(const MetricField& g, const TensorField& T, const Vec& x);
TensorField sym_cov_derivative(const MetricField& g, const TensorField& T);

// -trace of the covariant derivative over its first two slots
SymTensor divergence(const Mat& ginv, const Christoffel& gamma, const SymTensor& w,
                     std::span<const SymTensor> dw);
SymTensor divergence(const MetricField& g, const TensorField& w, const Vec& x);
TensorField divergence(const MetricField& g, const TensorField& w);

}  // namespace lightray
