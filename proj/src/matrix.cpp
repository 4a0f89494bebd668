#include "actmod/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "actmod/errors.hpp"

namespace actmod {

namespace {

// Four partial sums so the loop vectorises without reassociation flags.
double dot(const double* x, const double* y, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t p = 0;
  for (; p + 4 <= n; p += 4) {
    s0 += x[p] * y[p];
    s1 += x[p + 1] * y[p + 1];
    s2 += x[p + 2] * y[p + 2];
    s3 += x[p + 3] * y[p + 3];
  }
  for (; p < n; ++p) s0 += x[p] * y[p];
  return (s0 + s1) + (s2 + s3);
}

bool finite_span(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(),
                     [](double x) { return std::isfinite(x); });
}

}  // namespace

bool Vector::all_finite() const { return finite_span(data_); }

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
  if (data_.size() != rows_ * cols_) {
    throw DimensionError("matrix of shape " + shape_string() + " given " +
                         std::to_string(data_.size()) + " values");
  }
  if (!all_finite())
    throw DomainError("matrix of shape " + shape_string() +
                      " given non-finite values");
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionError("ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
  if (!all_finite()) throw DomainError("non-finite matrix literal");
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::column(const Vector& v) { return column(v.values()); }

Matrix Matrix::column(std::span<const double> v) {
  return Matrix(v.size(), 1, std::vector<double>(v.begin(), v.end()));
}

std::string Matrix::shape_string() const {
  std::ostringstream os;
  os << rows_ << "x" << cols_;
  return os.str();
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Matrix::all_finite() const { return finite_span(data_); }

double Matrix::frobenius_norm() const {
  double s = 0.0;
  for (double x : data_) s += x * x;
  return std::sqrt(s);
}

Matrix& Matrix::operator+=(const Matrix& o) {
  if (!same_shape(o))
    throw DimensionError("add: " + shape_string() + " vs " + o.shape_string());
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& o) {
  if (!same_shape(o))
    throw DimensionError("sub: " + shape_string() + " vs " + o.shape_string());
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& x : data_) x *= s;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double s) { return a *= s; }

void matmul_accumulate(const Matrix& a, const Matrix& b, Matrix& c,
                       bool transpose_a, bool transpose_b) {
  const std::size_t m = transpose_a ? a.cols() : a.rows();
  const std::size_t k = transpose_a ? a.rows() : a.cols();
  const std::size_t kb = transpose_b ? b.cols() : b.rows();
  const std::size_t n = transpose_b ? b.rows() : b.cols();
  if (k != kb) {
    throw DimensionError("matmul: " + a.shape_string() +
                         (transpose_a ? "^T" : "") + " x " + b.shape_string() +
                         (transpose_b ? "^T" : ""));
  }
  if (c.rows() != m || c.cols() != n) {
    throw DimensionError("matmul: output " + c.shape_string() +
                         " does not match " + std::to_string(m) + "x" +
                         std::to_string(n));
  }
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
  // With k == 1, b stored n x 1 has the same layout as 1 x n.
  if (k == 1 && transpose_b) transpose_b = false;
  if (!transpose_a && !transpose_b && n == 1) {
    for (std::size_t i = 0; i < m; ++i) {
      pc[i] += dot(pa + i * k, pb, k);
    }
  } else if (!transpose_a && !transpose_b) {
    for (std::size_t i = 0; i < m; ++i) {
      double* crow = pc + i * n;
      for (std::size_t p = 0; p < k; ++p) {
        const double aip = pa[i * k + p];
        if (aip == 0.0) continue;
        const double* brow = pb + p * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
      }
    }
  } else if (transpose_a && !transpose_b && n == 1) {
    for (std::size_t p = 0; p < k; ++p) {
      const double* arow = pa + p * m;
      const double bp = pb[p];
      if (bp == 0.0) continue;
      for (std::size_t i = 0; i < m; ++i) pc[i] += arow[i] * bp;
    }
  } else if (transpose_a && !transpose_b) {
    // a is k x m
    for (std::size_t p = 0; p < k; ++p) {
      const double* arow = pa + p * m;
      const double* brow = pb + p * n;
      for (std::size_t i = 0; i < m; ++i) {
        const double api = arow[i];
        if (api == 0.0) continue;
        double* crow = pc + i * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += api * brow[j];
      }
    }
  } else if (!transpose_a && transpose_b) {
    // b is n x k
    for (std::size_t i = 0; i < m; ++i) {
      const double* arow = pa + i * k;
      for (std::size_t j = 0; j < n; ++j) {
        pc[i * n + j] += dot(arow, pb + j * k, k);
      }
    }
  } else {
    matmul_accumulate(a.transposed(), b, c, false, true);
  }
}

Matrix matmul(const Matrix& a, const Matrix& b, bool transpose_a,
              bool transpose_b) {
  const std::size_t m = transpose_a ? a.cols() : a.rows();
  const std::size_t n = transpose_b ? b.rows() : b.cols();
  Matrix c(m, n);
  matmul_accumulate(a, b, c, transpose_a, transpose_b);
  return c;
}

Vector scaled_softmax(const Vector& logits, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw DomainError("scaled_softmax: scale must be positive and finite");
  if (!logits.all_finite())
    throw DomainError("scaled_softmax: non-finite logits");
  if (logits.size() == 0) throw DomainError("scaled_softmax: empty input");
  const auto v = logits.values();
  const double mx = *std::max_element(v.begin(), v.end());
  Vector out(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp((v[i] - mx) / scale);
    total += out[i];
  }
  for (std::size_t i = 0; i < v.size(); ++i) out[i] /= total;
  return out;
}

double euclidean_distance(std::span<const double> u,
                          std::span<const double> v) {
  if (u.size() != v.size()) {
    throw DimensionError("euclidean_distance: lengths " +
                         std::to_string(u.size()) + " and " +
                         std::to_string(v.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double d = u[i] - v[i];
    s += d * d;
  }
  return std::sqrt(s);
}

double euclidean_distance(const Vector& u, const Vector& v) {
  return euclidean_distance(u.values(), v.values());
}

}  // namespace actmod
