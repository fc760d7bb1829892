#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace haarbcr {

/// Square coefficient matrix for one wavelet level, stored dense or banded.
/// Banded storage keeps entries with |k - l| <= halfband; everything outside
/// the band is an implicit exact zero.
class LevelMatrix {
 public:
  LevelMatrix() = default;

  static LevelMatrix dense(std::int64_t side) { return LevelMatrix(side, side - 1); }
  static LevelMatrix banded(std::int64_t side, std::int64_t halfband) {
    return LevelMatrix(side, std::min(halfband, side - 1));
  }

  std::int64_t side() const { return side_; }
  std::int64_t halfband() const { return halfband_; }
  bool is_dense() const { return halfband_ == side_ - 1; }
  std::int64_t row_stride() const { return is_dense() ? side_ : 2 * halfband_ + 1; }
  const std::vector<double>& storage() const { return data_; }
  std::vector<double>& storage() { return data_; }

  bool in_band(std::int64_t k, std::int64_t l) const { return std::llabs(k - l) <= halfband_; }

  double get(std::int64_t k, std::int64_t l) const {
    if (k < 0 || k >= side_ || l < 0 || l >= side_ || !in_band(k, l)) return 0.0;
    return data_[size_t(slot(k, l))];
  }

  double& at(std::int64_t k, std::int64_t l) {
    if (k < 0 || k >= side_ || l < 0 || l >= side_ || !in_band(k, l))
      throw std::out_of_range("LevelMatrix::at outside stored band");
    return data_[size_t(slot(k, l))];
  }

  std::int64_t col_begin(std::int64_t k) const { return std::max<std::int64_t>(0, k - halfband_); }
  std::int64_t col_end(std::int64_t k) const { return std::min(side_, k + halfband_ + 1); }

  /// y += A x (band-limited).
  void accumulate_mul(const std::vector<double>& x, std::vector<double>& y) const {
    for (std::int64_t k = 0; k < side_; ++k) {
      double acc = 0.0;
      const std::int64_t lo = col_begin(k), hi = col_end(k);
      const double* row = &data_[size_t(slot(k, lo))];
      for (std::int64_t l = lo; l < hi; ++l) acc += row[l - lo] * x[size_t(l)];
      y[size_t(k)] += acc;
    }
  }

  /// y += A^T x (band-limited).
  void accumulate_mul_transpose(const std::vector<double>& x, std::vector<double>& y) const {
    for (std::int64_t k = 0; k < side_; ++k) {
      const std::int64_t lo = col_begin(k), hi = col_end(k);
      const double* row = &data_[size_t(slot(k, lo))];
      const double xk = x[size_t(k)];
      for (std::int64_t l = lo; l < hi; ++l) y[size_t(l)] += row[l - lo] * xk;
    }
  }

  LevelMatrix transposed() const {
    LevelMatrix t(side_, halfband_);
    for (std::int64_t k = 0; k < side_; ++k)
      for (std::int64_t l = col_begin(k); l < col_end(k); ++l) t.at(l, k) = get(k, l);
    return t;
  }

  /// Copy with entries at |k-l| > keep_halfband dropped.
  LevelMatrix truncated(std::int64_t keep_halfband) const {
    LevelMatrix t(side_, std::min(keep_halfband, side_ - 1));
    for (std::int64_t k = 0; k < side_; ++k)
      for (std::int64_t l = t.col_begin(k); l < t.col_end(k); ++l) t.at(k, l) = get(k, l);
    return t;
  }

  double max_abs() const {
    double m = 0.0;
    for (std::int64_t k = 0; k < side_; ++k)
      for (std::int64_t l = col_begin(k); l < col_end(k); ++l)
        m = std::max(m, std::fabs(get(k, l)));
    return m;
  }

  double row_sum(std::int64_t k) const {
    double s = 0.0;
    for (std::int64_t l = col_begin(k); l < col_end(k); ++l) s += get(k, l);
    return s;
  }

  double col_sum(std::int64_t l) const {
    double s = 0.0;
    const std::int64_t lo = std::max<std::int64_t>(0, l - halfband_);
    const std::int64_t hi = std::min(side_, l + halfband_ + 1);
    for (std::int64_t k = lo; k < hi; ++k) s += get(k, l);
    return s;
  }

  double abs_row_sum(std::int64_t k) const {
    double s = 0.0;
    for (std::int64_t l = col_begin(k); l < col_end(k); ++l) s += std::fabs(get(k, l));
    return s;
  }

  double abs_col_sum(std::int64_t l) const {
    double s = 0.0;
    const std::int64_t lo = std::max<std::int64_t>(0, l - halfband_);
    const std::int64_t hi = std::min(side_, l + halfband_ + 1);
    for (std::int64_t k = lo; k < hi; ++k) s += std::fabs(get(k, l));
    return s;
  }

 private:
  LevelMatrix(std::int64_t side, std::int64_t halfband)
      : side_(side), halfband_(std::max<std::int64_t>(0, std::min(halfband, side - 1))) {
    if (side < 1) throw std::invalid_argument("LevelMatrix: side must be positive");
    data_.assign(size_t(side_ * row_stride()), 0.0);
  }

  // dense rows are addressed directly; banded rows keep 2w+1 slots centered on the diagonal
  std::int64_t slot(std::int64_t k, std::int64_t l) const {
    return is_dense() ? k * side_ + l : k * row_stride() + (l - k + halfband_);
  }

  std::int64_t side_ = 0;
  std::int64_t halfband_ = 0;
  std::vector<double> data_;
};

}  // namespace haarbcr
