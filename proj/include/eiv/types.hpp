#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace eiv {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

/// Bad arguments: shape mismatch, non-finite entries, out-of-range parameters.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Iteration produced non-finite values or diverged.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const char* what) {
  if (!m.allFinite()) {
    throw InputError(std::string(what) + ": non-finite entries");
  }
}

template <typename DerivedA, typename DerivedB>
void require_same_shape(const Eigen::MatrixBase<DerivedA>& a,
                        const Eigen::MatrixBase<DerivedB>& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InputError(std::string(what) + ": shape mismatch (" +
                     std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                     " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()) + ")");
  }
}

/// Column-stacking vectorization, the convention used for every vec(.) in
/// the library (covariance operators, surrogate pairs, design rows).
template <typename Derived>
Vector<typename Derived::Scalar> vec(const Eigen::MatrixBase<Derived>& m) {
  Matrix<typename Derived::Scalar> dense = m;
  return Eigen::Map<const Vector<typename Derived::Scalar>>(dense.data(),
                                                            dense.size());
}

/// Inverse of vec().
template <typename Derived>
Matrix<typename Derived::Scalar> unvec(const Eigen::MatrixBase<Derived>& v,
                                       Index rows, Index cols) {
  if (v.size() != rows * cols) {
    throw InputError("unvec: length does not match rows*cols");
  }
  Vector<typename Derived::Scalar> dense = v;
  return Eigen::Map<const Matrix<typename Derived::Scalar>>(dense.data(), rows,
                                                            cols);
}

}  // namespace eiv
