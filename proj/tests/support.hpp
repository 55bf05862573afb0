#pragma once

#include "qpencil/app.hpp"

#include <gtest/gtest.h>

namespace qtest {

using namespace qpencil;

inline Matrix diag2(cplx a, cplx b) {
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = a;
  d(1, 1) = b;
  return d;
}

inline Matrix mat2(cplx a, cplx b, cplx c, cplx d) {
  Matrix r(2, 2);
  r << a, b, c, d;
  return r;
}

inline Matrix scalar1(cplx a) { return Matrix::Constant(1, 1, a); }

/// Q1 = Q0 = 0 with the given boundary data.
inline PencilCoefficients zero_pencil(const Matrix& h0, const Matrix& h1, double xmax = 10.0, std::size_t n = 1000) {
  const std::vector<Preset> none;
  return make_pencil(static_cast<std::size_t>(h0.rows()), xmax, n, h0, h1, none, none);
}

inline PencilCoefficients zero_pencil_reference() { return zero_pencil(diag2(1, 2), diag2(0.5, -0.5)); }

/// Closed form for Q = 0: (i rho (s I + h1) + h0)^{-1}, s = +-1 by half-plane.
inline Matrix zero_pencil_weyl(const PencilCoefficients& c, cplx rho, Side side = Side::Circle) {
  const double s = half_plane(rho, side);
  const Matrix a = kI * rho * (s * identity(static_cast<Eigen::Index>(c.m)) + c.h1) + c.h0;
  return a.inverse();
}

inline PencilCoefficients preset(const std::string& name) { return build_pencil(shipped_pencil(name).pencil); }

inline double rel(const Matrix& a, const Matrix& b) { return (a - b).norm() / std::max(1e-300, b.norm()); }

}  // namespace qtest
