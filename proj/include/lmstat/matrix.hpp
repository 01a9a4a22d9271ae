#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace lmstat {

/// Dense square matrix, row-major. Only what the kernel and eigen code need.
class Matrix {
 public:
  Matrix() = default;
  explicit Matrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}

  std::size_t size() const noexcept { return n_; }

  double& operator()(std::size_t i, std::size_t j) noexcept {
    assert(i < n_ && j < n_);
    return data_[i * n_ + j];
  }
  double operator()(std::size_t i, std::size_t j) const noexcept {
    assert(i < n_ && j < n_);
    return data_[i * n_ + j];
  }

  double trace() const noexcept {
    double t = 0.0;
    for (std::size_t i = 0; i < n_; ++i) t += (*this)(i, i);
    return t;
  }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

}  // namespace lmstat
