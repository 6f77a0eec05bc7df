#pragma once

#include "seqcls/types.hpp"

#include <cmath>
#include <utility>

namespace seqcls {
namespace ops {

// Elementwise and matrix building blocks with hand-derived backward
// counterparts. Every forward value is finite for finite inputs; sigmoid is
// clamped away from {0,1} so downstream logs stay finite.

inline void require_same_shape(const Mat& a, const Mat& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a) +
                     " vs " + shape_str(b));
}

inline Mat matmul(const Mat& a, const Mat& b) {
  if (a.cols() != b.rows())
    throw ShapeError("matmul: shape mismatch " + shape_str(a) + " vs " +
                     shape_str(b));
  return a * b;
}

/// Gradients of c = a*b given dc.
inline std::pair<Mat, Mat> matmul_backward(const Mat& dc, const Mat& a, const Mat& b) {
  if (dc.rows() != a.rows() || dc.cols() != b.cols())
    throw ShapeError("matmul_backward: gradient shape " + shape_str(dc) +
                     " does not match " + std::to_string(a.rows()) + "x" +
                     std::to_string(b.cols()));
  return {dc * b.transpose(), a.transpose() * dc};
}

inline Mat add(const Mat& a, const Mat& b) {
  require_same_shape(a, b, "add");
  return a + b;
}

inline std::pair<Mat, Mat> add_backward(const Mat& dc) { return {dc, dc}; }

inline Mat hadamard(const Mat& a, const Mat& b) {
  require_same_shape(a, b, "hadamard");
  return a.cwiseProduct(b);
}

inline std::pair<Mat, Mat> hadamard_backward(const Mat& dc, const Mat& a, const Mat& b) {
  require_same_shape(dc, a, "hadamard_backward");
  return {dc.cwiseProduct(b), dc.cwiseProduct(a)};
}

// Smallest representable gap below 1.0; keeps confidences strictly inside
// (0,1) even for saturated logits.
inline constexpr double kSigmoidFloor = 2.2250738585072014e-308;  // DBL_MIN
inline constexpr double kSigmoidCeil = 1.0 - 1.1102230246251565e-16;

inline double sigmoid_scalar(double z) {
  const double v = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z))
                            : std::exp(z) / (1.0 + std::exp(z));
  return std::min(std::max(v, kSigmoidFloor), kSigmoidCeil);
}

inline Mat sigmoid(const Mat& x) {
  return x.unaryExpr([](double z) { return sigmoid_scalar(z); });
}

/// dx given dy and the forward output y = sigmoid(x).
inline Mat sigmoid_backward(const Mat& dy, const Mat& y) {
  require_same_shape(dy, y, "sigmoid_backward");
  return (dy.array() * y.array() * (1.0 - y.array())).matrix();
}

inline Mat tanh(const Mat& x) {
  return x.unaryExpr([](double z) { return std::tanh(z); });
}

inline Mat tanh_backward(const Mat& dy, const Mat& y) {
  require_same_shape(dy, y, "tanh_backward");
  return (dy.array() * (1.0 - y.array().square())).matrix();
}

/// Row-wise softmax; each output row sums to 1.
inline Mat softmax_rows(const Mat& x) {
  Mat y(x.rows(), x.cols());
  for (Index r = 0; r < x.rows(); ++r) {
    const double m = x.row(r).maxCoeff();
    y.row(r) = (x.row(r).array() - m).exp();
    y.row(r) /= y.row(r).sum();
  }
  return y;
}

inline Mat softmax_rows_backward(const Mat& dy, const Mat& y) {
  require_same_shape(dy, y, "softmax_rows_backward");
  Mat dx(y.rows(), y.cols());
  for (Index r = 0; r < y.rows(); ++r) {
    const double dot = dy.row(r).dot(y.row(r));
    dx.row(r) = (y.row(r).array() * (dy.row(r).array() - dot)).matrix();
  }
  return dx;
}

inline bool all_finite(const Mat& m) { return m.allFinite(); }

}  // namespace ops
}  // namespace seqcls
