#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace actmod {

// Dense real vector of fixed length.
class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t n, double fill = 0.0) : data_(n, fill) {}
  explicit Vector(std::vector<double> values) : data_(std::move(values)) {}
  Vector(std::initializer_list<double> values) : data_(values) {}

  std::size_t size() const { return data_.size(); }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  const std::vector<double>& raw() const { return data_; }

  bool all_finite() const;

  bool operator==(const Vector&) const = default;

 private:
  std::vector<double> data_;
};

// Dense row-major matrix. Column vectors are n x 1 matrices when they take
// part in matrix algebra.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix column(const Vector& v);
  static Matrix column(std::span<const double> v);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool same_shape(const Matrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }
  std::string shape_string() const;

  double& operator()(std::size_t r, std::size_t c) {
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  Vector to_vector() const { return Vector(data_); }
  Matrix transposed() const;

  void fill(double v);
  bool all_finite() const;
  double frobenius_norm() const;

  Matrix& operator+=(const Matrix& o);
  Matrix& operator-=(const Matrix& o);
  Matrix& operator*=(double s);

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);

// C = op(A) * op(B), where op transposes when the flag is set.
Matrix matmul(const Matrix& a, const Matrix& b, bool transpose_a = false,
              bool transpose_b = false);

// C += op(A) * op(B); C must already have the product's shape.
void matmul_accumulate(const Matrix& a, const Matrix& b, Matrix& c,
                       bool transpose_a = false, bool transpose_b = false);

// softmax(logits / scale) with max subtraction. Throws DomainError on
// non-finite logits or a non-positive scale.
Vector scaled_softmax(const Vector& logits, double scale);

// Unsquared Euclidean norm of u - v.
double euclidean_distance(std::span<const double> u, std::span<const double> v);
double euclidean_distance(const Vector& u, const Vector& v);

inline double hinge(double x) { return x > 0.0 ? x : 0.0; }

}  // namespace actmod
