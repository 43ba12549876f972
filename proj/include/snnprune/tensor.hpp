#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace snnprune {

/// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  std::size_t size() const { return data.size(); }

  bool operator==(const Matrix&) const = default;
};

/// Row-major matrix of 0/1 bytes (spike trains, time-major).
struct BinaryMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> data;

  BinaryMatrix() = default;
  BinaryMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0) {}

  std::uint8_t& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  std::uint8_t operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<const std::uint8_t> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
  std::span<std::uint8_t> row(std::size_t r) { return {data.data() + r * cols, cols}; }

  bool operator==(const BinaryMatrix&) const = default;
};

}  // namespace snnprune
