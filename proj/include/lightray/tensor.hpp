#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace lightray {

inline constexpr int kMaxDim = 4;
inline constexpr int kMaxRank = 4;
// number of sorted multi-indices for (kMaxDim, kMaxRank)
inline constexpr int kMaxPacked = 35;

// Dynamic size, fixed capacity: no heap traffic in the inner loops.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

// Bookkeeping for symmetric arrays stored by sorted multi-index.
class SymLayout {
 public:
  static const SymLayout& get(int dim, int rank);

  int dim() const { return dim_; }
  int rank() const { return rank_; }
  int size() const { return static_cast<int>(mult_.size()); }
  int full_size() const { return static_cast<int>(full_to_packed_.size()); }

  std::span<const int> multi_index(int packed) const {
    return {idx_.data() + static_cast<size_t>(packed) * rank_, static_cast<size_t>(rank_)};
  }
  // number of distinct orderings of the multi-index
  int multiplicity(int packed) const { return mult_[packed]; }
  int packed_of_full(int full) const { return full_to_packed_[full]; }
  int packed_of(std::span<const int> idx) const;

  SymLayout() = default;
  SymLayout(int dim, int rank);

 private:
  int dim_ = 0;
  int rank_ = 0;
  std::vector<int> idx_;
  std::vector<int> mult_;
  std::vector<int> full_to_packed_;
};

class SymTensor {
 public:
  SymTensor() : SymTensor(1, 0) {}
  SymTensor(int dim, int rank);

  static SymTensor scalar(double value, int dim = 1);
  static SymTensor from_covector(const Vec& w);
  static SymTensor from_matrix(const Mat& m);  // symmetric part
  // unsymmetrized row-major d^m array, averaged over all m! permutations
  static SymTensor symmetrize(std::span<const double> full, int dim, int rank);

  int dim() const { return dim_; }
  int rank() const { return rank_; }
  int size() const { return layout().size(); }
  const SymLayout& layout() const { return SymLayout::get(dim_, rank_); }

  double& operator[](int packed) { return c_[packed]; }
  double operator[](int packed) const { return c_[packed]; }
  double at(std::span<const int> idx) const { return c_[layout().packed_of(idx)]; }
  double at(std::initializer_list<int> idx) const {
    return at(std::span<const int>(idx.begin(), idx.size()));
  }
  void set(std::initializer_list<int> idx, double value) {
    c_[layout().packed_of(std::span<const int>(idx.begin(), idx.size()))] = value;
  }

  // w(v, ..., v)
  double contract(const Vec& v) const;
  // w(v, .) with the remaining slots free
  SymTensor contract_once(const Vec& v) const;
  // multilinear evaluation on m vectors
  double eval(std::span<const Vec> vectors) const;
  std::vector<double> to_full() const;

  double max_abs() const;

  SymTensor& operator+=(const SymTensor& o);
  SymTensor& operator-=(const SymTensor& o);
  SymTensor& operator*=(double s);
  friend SymTensor operator+(SymTensor a, const SymTensor& b) { return a += b; }
  friend SymTensor operator-(SymTensor a, const SymTensor& b) { return a -= b; }
  friend SymTensor operator*(SymTensor a, double s) { return a *= s; }
  friend SymTensor operator*(double s, SymTensor a) { return a *= s; }

 private:
  int dim_;
  int rank_;
  std::array<double, kMaxPacked> c_{};
};

// Sym(a (x) b)
SymTensor sym_product(const SymTensor& a, const SymTensor& b);
// i u = Sym(u (x) g)
SymTensor metric_product(const SymTensor& u, const Mat& g);
// j w: trace of the first two slots with g^{-1}
SymTensor trace(const SymTensor& w, const Mat& ginv);
// (j i)^{-1} w for w of rank m-2 given the rank m of i u
SymTensor solve_ji(const SymTensor& w, const Mat& g);
// p = 1 - i (j i)^{-1} j
SymTensor project_trace_free(const SymTensor& w, const Mat& g);
// pointwise inner product <u, w> with all slots raised by ginv
double inner(const SymTensor& u, const SymTensor& w, const Mat& ginv);

}  // namespace lightray
