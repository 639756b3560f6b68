#pragma once

#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace amc::ad {

/// Shaped block of doubles. Rank 0 is a scalar, rank 1 a vector, rank 2 a
/// row-major matrix (one row per sample). Higher ranks are storable but no
/// primitive consumes them.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> dims, double fill = 0.0) : shape(std::move(dims)) {
    data.assign(element_count(shape), fill);
  }
  Tensor(std::vector<std::size_t> dims, std::vector<double> values) : shape(std::move(dims)), data(std::move(values)) {
    if (data.size() != element_count(shape)) {
      throw std::invalid_argument("Tensor: " + std::to_string(data.size()) + " values for shape of " +
                                  std::to_string(element_count(shape)));
    }
  }

  static Tensor scalar(double v) { return Tensor({}, std::vector<double>{v}); }
  static Tensor vector(std::vector<double> values) {
    const std::size_t n = values.size();
    return Tensor({n}, std::move(values));
  }
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
    return Tensor({rows, cols}, std::move(values));
  }

  static std::size_t element_count(const std::vector<std::size_t>& dims) {
    std::size_t n = 1;
    for (std::size_t d : dims) {
      n *= d;
    }
    return n;
  }

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  bool is_scalar() const { return data.size() == 1 && shape.size() <= 1; }

  /// Row count when viewed as a matrix: a vector is a single row.
  std::size_t rows() const { return shape.size() == 2 ? shape[0] : 1; }
  std::size_t cols() const {
    if (shape.size() == 2) return shape[1];
    if (shape.size() == 1) return shape[0];
    return 1;
  }

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

  double item() const {
    if (data.size() != 1) {
      throw std::invalid_argument("Tensor::item on a tensor of " + std::to_string(data.size()) + " elements");
    }
    return data[0];
  }

  bool operator==(const Tensor&) const = default;
};

}  // namespace amc::ad
