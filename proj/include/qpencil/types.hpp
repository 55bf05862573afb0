#pragma once

// Basic numeric types and small dense-matrix helpers shared by every module.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>

namespace qpencil {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr cplx kI{0.0, 1.0};
inline constexpr double kPi = 3.14159265358979323846;

/// Malformed or inadmissible input (bad config, singular boundary data, ...).
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A numerical procedure could not make progress (rank-deficient fit,
/// stepper without progress, ...).
struct AlgorithmError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Step-size underflow inside the ODE integrator.
struct IntegratorError : AlgorithmError {
  IntegratorError(const std::string& what, double at)
      : AlgorithmError(what + " at x=" + std::to_string(at)), x(at) {}
  double x;
};

/// Max over rows of absolute row sums (the matrix infinity norm).
inline double matrix_norm(const Matrix& a) {
  double best = 0.0;
  for (Eigen::Index j = 0; j < a.rows(); ++j) {
    double row = 0.0;
    for (Eigen::Index k = 0; k < a.cols(); ++k) row += std::abs(a(j, k));
    best = std::max(best, row);
  }
  return best;
}

inline bool all_finite(const Matrix& a) {
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    if (!std::isfinite(a.data()[k].real()) || !std::isfinite(a.data()[k].imag())) return false;
  }
  return true;
}

inline Matrix identity(Eigen::Index m) { return Matrix::Identity(m, m); }

/// 2-norm condition number via singular values; +inf for exactly singular input.
inline double condition_number(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a);
  const auto& s = svd.singularValues();
  if (s.size() == 0) return 1.0;
  const double smin = s(s.size() - 1);
  if (smin == 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / smin;
}

namespace detail {

// Raw column-major m x m kernels used inside ODE right-hand sides, where
// Eigen temporaries would allocate on every stage.

/// c += alpha * a * b
inline void mm_acc(const cplx* a, const cplx* b, cplx* c, std::size_t m, cplx alpha = 1.0) {
  for (std::size_t col = 0; col < m; ++col) {
    for (std::size_t k = 0; k < m; ++k) {
      const cplx bk = alpha * b[k + col * m];
      if (bk == cplx{}) continue;
      const cplx* acol = a + k * m;
      cplx* ccol = c + col * m;
      for (std::size_t row = 0; row < m; ++row) ccol[row] += acol[row] * bk;
    }
  }
}

inline Eigen::Map<const Matrix> view(const cplx* p, std::size_t m) {
  return {p, static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m)};
}

inline Eigen::Map<Matrix> view(cplx* p, std::size_t m) {
  return {p, static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m)};
}

}  // namespace detail
}  // namespace qpencil
