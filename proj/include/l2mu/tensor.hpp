#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace l2mu {

/// Dense row-major matrix. Rows index the postsynaptic side, columns the
/// presynaptic side, so `y = W x` maps a column-sized input to a row-sized
/// output.
template <typename Real>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, Real fill = Real{0})
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  Real& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  const Real& operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<Real> values() { return values_; }
  std::span<const Real> values() const { return values_; }

  std::span<Real> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const Real> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

  void fill(Real v) { std::fill(values_.begin(), values_.end(), v); }

  template <typename Other>
  Matrix<Other> cast() const {
    Matrix<Other> out(rows_, cols_);
    for (std::size_t i = 0; i < values_.size(); ++i) out.values()[i] = static_cast<Other>(values_[i]);
    return out;
  }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.values_ == b.values_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Real> values_;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

/// Indices of non-zero entries. Spike vectors are mostly zero, so every
/// product below iterates only over these.
template <typename Real>
void active_indices(std::span<const Real> x, std::vector<std::size_t>& out) {
  out.clear();
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (x[j] != Real{0}) out.push_back(j);
  }
}

/// y[i] += sum_j W(i, j) x[j], summed in ascending j over non-zero x only.
/// Skipping zero terms leaves the floating-point result unchanged.
template <typename Real>
void matvec_accumulate(const Matrix<Real>& w, std::span<const Real> x, std::span<Real> y,
                       std::vector<std::size_t>& scratch) {
  require(x.size() == w.cols() && y.size() == w.rows(), "matvec: shape mismatch");
  active_indices(x, scratch);
  if (scratch.empty()) return;
  for (std::size_t i = 0; i < w.rows(); ++i) {
    const Real* row = w.row(i).data();
    Real acc{0};
    for (std::size_t j : scratch) acc += row[j] * x[j];
    y[i] += acc;
  }
}

/// gx[j] += sum_i W(i, j) gy[i]
template <typename Real>
void matvec_transposed_accumulate(const Matrix<Real>& w, std::span<const Real> gy,
                                  std::span<Real> gx) {
  require(gy.size() == w.rows() && gx.size() == w.cols(), "matvec_t: shape mismatch");
  for (std::size_t i = 0; i < w.rows(); ++i) {
    const Real g = gy[i];
    if (g == Real{0}) continue;
    const Real* row = w.row(i).data();
    for (std::size_t j = 0; j < w.cols(); ++j) gx[j] += row[j] * g;
  }
}

/// G(i, j) += gy[i] x[j]
template <typename Real>
void outer_accumulate(Matrix<Real>& g, std::span<const Real> gy, std::span<const Real> x,
                      std::vector<std::size_t>& scratch) {
  require(gy.size() == g.rows() && x.size() == g.cols(), "outer: shape mismatch");
  active_indices(x, scratch);
  if (scratch.empty()) return;
  for (std::size_t i = 0; i < g.rows(); ++i) {
    const Real gi = gy[i];
    if (gi == Real{0}) continue;
    Real* row = g.row(i).data();
    for (std::size_t j : scratch) row[j] += gi * x[j];
  }
}

}  // namespace l2mu
