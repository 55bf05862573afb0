#pragma once

// Coefficient storage for the quadratic pencil
//   Y'' + (rho^2 I + 2 i rho Q1(x) + Q0(x)) Y = 0,   Y'(0) + (i rho h1 + h0) Y(0) = 0
// on a truncated half-line [0, xmax].

#include "qpencil/types.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace qpencil {

/// Grid-sampled m x m matrix function, piecewise-cubic Hermite between nodes,
/// identically zero beyond the last node.
class MatrixFunction {
 public:
  MatrixFunction() = default;

  /// Values and slopes given explicitly at every node.
  MatrixFunction(std::size_t m, std::vector<double> grid, std::span<const Matrix> values,
                 std::span<const Matrix> slopes)
      : m_(m), grid_(std::move(grid)) {
    if (m_ == 0 || grid_.size() < 2) throw InputError("MatrixFunction: need m >= 1 and two nodes");
    if (values.size() != grid_.size() || slopes.size() != grid_.size())
      throw InputError("MatrixFunction: sample count does not match grid");
    for (std::size_t k = 1; k < grid_.size(); ++k)
      if (!(grid_[k] > grid_[k - 1])) throw InputError("MatrixFunction: grid not strictly increasing");
    const std::size_t mm = m_ * m_;
    values_.resize(grid_.size() * mm);
    slopes_.resize(grid_.size() * mm);
    for (std::size_t k = 0; k < grid_.size(); ++k) {
      if (values[k].rows() != static_cast<Eigen::Index>(m_) || values[k].cols() != static_cast<Eigen::Index>(m_) ||
          slopes[k].rows() != static_cast<Eigen::Index>(m_) || slopes[k].cols() != static_cast<Eigen::Index>(m_))
        throw InputError("MatrixFunction: sample has wrong shape");
      std::copy_n(values[k].data(), mm, values_.data() + k * mm);
      std::copy_n(slopes[k].data(), mm, slopes_.data() + k * mm);
    }
    detect_uniform();
  }

  /// Slopes estimated by finite differences (fourth order on uniform grids).
  static MatrixFunction from_samples(std::size_t m, std::vector<double> grid, std::span<const Matrix> values) {
    const std::size_t n = grid.size();
    if (n < 2 || values.size() != n) throw InputError("MatrixFunction: sample count does not match grid");
    std::vector<Matrix> slopes(n, Matrix::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m)));
    bool uniform = n >= 5;
    const double h = (grid.back() - grid.front()) / static_cast<double>(n - 1);
    for (std::size_t k = 1; k < n && uniform; ++k)
      uniform = std::abs(grid[k] - grid[k - 1] - h) <= 1e-9 * h;
    if (uniform) {
      for (std::size_t k = 0; k < n; ++k) slopes[k] = fd4_slope(values, k, h);
    } else {
      for (std::size_t k = 0; k < n; ++k) {
        if (k == 0) {
          slopes[k] = (values[1] - values[0]) / (grid[1] - grid[0]);
        } else if (k + 1 == n) {
          slopes[k] = (values[k] - values[k - 1]) / (grid[k] - grid[k - 1]);
        } else {
          const double hl = grid[k] - grid[k - 1];
          const double hr = grid[k + 1] - grid[k];
          slopes[k] = (values[k + 1] - values[k]) * (hl / (hr * (hl + hr))) +
                      (values[k] - values[k - 1]) * (hr / (hl * (hl + hr)));
        }
      }
    }
    return MatrixFunction(m, std::move(grid), values, slopes);
  }

  /// Fourth-order finite-difference derivative of uniformly spaced samples at index k.
  static Matrix fd4_slope(std::span<const Matrix> v, std::size_t k, double h) {
    const std::size_t n = v.size();
    if (n < 5) throw InputError("fd4_slope: need at least five samples");
    if (k >= 2 && k + 2 < n) return (v[k - 2] - 8.0 * v[k - 1] + 8.0 * v[k + 1] - v[k + 2]) / (12.0 * h);
    if (k < 2) {
      const std::size_t b = 0;
      const double t = static_cast<double>(k);
      return one_sided(v, b, t, h);
    }
    const std::size_t b = n - 5;
    return one_sided(v, b, static_cast<double>(k - b), h);
  }

  std::size_t dim() const { return m_; }
  std::size_t size() const { return grid_.size(); }
  bool empty() const { return grid_.empty(); }
  const std::vector<double>& grid() const { return grid_; }
  double xmax() const { return grid_.back(); }

  Matrix node_value(std::size_t k) const { return detail::view(values_.data() + k * m_ * m_, m_); }
  Matrix node_slope(std::size_t k) const { return detail::view(slopes_.data() + k * m_ * m_, m_); }

  /// Writes f(x) into out (m*m column-major entries).
  void eval_into(double x, cplx* out) const { eval_impl(x, out, false); }
  void eval_deriv_into(double x, cplx* out) const { eval_impl(x, out, true); }

  Matrix operator()(double x) const {
    Matrix r(m_, m_);
    eval_into(x, r.data());
    return r;
  }

  Matrix derivative(double x) const {
    Matrix r(m_, m_);
    eval_deriv_into(x, r.data());
    return r;
  }

  /// Pointwise sum of functions sharing the same grid.
  MatrixFunction& operator+=(const MatrixFunction& other) {
    if (other.m_ != m_ || other.grid_ != grid_) throw InputError("MatrixFunction: grid mismatch in sum");
    for (std::size_t k = 0; k < values_.size(); ++k) {
      values_[k] += other.values_[k];
      slopes_[k] += other.slopes_[k];
    }
    return *this;
  }

 private:
  static Matrix one_sided(std::span<const Matrix> v, std::size_t b, double t, double h) {
    // Derivative at b + t of the quartic through v[b..b+4].
    Matrix d = Matrix::Zero(v[b].rows(), v[b].cols());
    for (int j = 0; j < 5; ++j) {
      double w = 0.0;
      for (int l = 0; l < 5; ++l) {
        if (l == j) continue;
        double prod = 1.0;
        for (int q = 0; q < 5; ++q) {
          if (q == j || q == l) continue;
          prod *= (t - q) / static_cast<double>(j - q);
        }
        w += prod / static_cast<double>(j - l);
      }
      d += (w / h) * v[b + static_cast<std::size_t>(j)];
    }
    return d;
  }

  void detect_uniform() {
    const std::size_t n = grid_.size();
    step_ = (grid_.back() - grid_.front()) / static_cast<double>(n - 1);
    uniform_ = true;
    for (std::size_t k = 1; k < n && uniform_; ++k)
      uniform_ = std::abs(grid_[k] - grid_[k - 1] - step_) <= 1e-12 * std::max(1.0, std::abs(grid_.back()));
  }

  std::size_t cell(double x) const {
    const std::size_t n = grid_.size();
    if (uniform_) {
      const auto k = static_cast<std::size_t>(std::max(0.0, std::floor((x - grid_.front()) / step_)));
      return std::min(k, n - 2);
    }
    const auto it = std::upper_bound(grid_.begin(), grid_.end(), x);
    const auto k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - grid_.begin()) - 1));
    return std::min(k, n - 2);
  }

  void eval_impl(double x, cplx* out, bool deriv) const {
    const std::size_t mm = m_ * m_;
    if (x > grid_.back() || x < grid_.front()) {
      if (x < grid_.front() && !deriv) {
        std::copy_n(values_.data(), mm, out);
        return;
      }
      std::fill_n(out, mm, cplx{});
      return;
    }
    const std::size_t k = cell(x);
    const double h = grid_[k + 1] - grid_[k];
    const double t = (x - grid_[k]) / h;
    const cplx* y0 = values_.data() + k * mm;
    const cplx* y1 = y0 + mm;
    const cplx* d0 = slopes_.data() + k * mm;
    const cplx* d1 = d0 + mm;
    double c0, c1, c2, c3;
    if (!deriv) {
      const double t2 = t * t, t3 = t2 * t;
      c0 = 2 * t3 - 3 * t2 + 1;
      c1 = (t3 - 2 * t2 + t) * h;
      c2 = -2 * t3 + 3 * t2;
      c3 = (t3 - t2) * h;
    } else {
      const double t2 = t * t;
      c0 = (6 * t2 - 6 * t) / h;
      c1 = 3 * t2 - 4 * t + 1;
      c2 = (-6 * t2 + 6 * t) / h;
      c3 = 3 * t2 - 2 * t;
    }
    for (std::size_t e = 0; e < mm; ++e) out[e] = c0 * y0[e] + c1 * d0[e] + c2 * y1[e] + c3 * d1[e];
  }

  std::size_t m_ = 0;
  std::vector<double> grid_;
  std::vector<cplx> values_;
  std::vector<cplx> slopes_;
  bool uniform_ = false;
  double step_ = 0.0;
};

/// Uniform grid 0 = x_0 < ... < x_n = xmax.
inline std::vector<double> uniform_grid(double xmax, std::size_t n) {
  if (n < 1 || !(xmax > 0)) throw InputError("uniform_grid: need n >= 1 and xmax > 0");
  std::vector<double> g(n + 1);
  for (std::size_t k = 0; k <= n; ++k) g[k] = xmax * static_cast<double>(k) / static_cast<double>(n);
  g[n] = xmax;
  return g;
}

struct PencilCoefficients {
  std::size_t m = 1;
  double xmax = 1.0;
  MatrixFunction q1;
  MatrixFunction q1d;  ///< derivative of q1, stored separately
  MatrixFunction q0;
  Matrix h0;
  Matrix h1;

  const std::vector<double>& grid() const { return q1.grid(); }
};

// ---------------------------------------------------------------------------
// Closed-form coefficient families.

/// Scalar profile times a constant matrix shape.
struct Preset {
  std::string name = "zero";  ///< zero | constant | gaussian-decay | exponential-decay | skew-hermitian-gaussian
  double amplitude = 1.0;
  double width = 1.0;
  double center = 0.0;
  double rate = 1.0;
  Matrix shape;  ///< empty means identity (or the standard skew matrix for the skew preset)
};

/// Real skew-symmetric matrix with +1 above and -1 below the diagonal.
inline Matrix standard_skew(std::size_t m) {
  Matrix k = Matrix::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  for (Eigen::Index j = 0; j < k.rows(); ++j)
    for (Eigen::Index l = 0; l < k.cols(); ++l) k(j, l) = j < l ? 1.0 : (j > l ? -1.0 : 0.0);
  return k;
}

namespace detail {

inline Matrix preset_shape(const Preset& p, std::size_t m) {
  if (p.shape.size() != 0) {
    if (p.shape.rows() != static_cast<Eigen::Index>(m) || p.shape.cols() != static_cast<Eigen::Index>(m))
      throw InputError("preset shape has wrong dimension");
    return p.shape;
  }
  if (p.name == "skew-hermitian-gaussian") return standard_skew(m);
  return identity(static_cast<Eigen::Index>(m));
}

/// Profile value and first two derivatives at x.
inline std::array<double, 3> preset_profile(const Preset& p, double x) {
  if (p.name == "zero") return {0.0, 0.0, 0.0};
  if (p.name == "constant") return {p.amplitude, 0.0, 0.0};
  if (p.name == "gaussian-decay" || p.name == "skew-hermitian-gaussian") {
    if (!(p.width > 0)) throw InputError("gaussian preset needs width > 0");
    const double u = (x - p.center) / p.width;
    const double g = p.amplitude * std::exp(-u * u);
    const double d1 = -2.0 * u / p.width * g;
    const double d2 = (4.0 * u * u - 2.0) / (p.width * p.width) * g;
    return {g, d1, d2};
  }
  if (p.name == "exponential-decay") {
    const double g = p.amplitude * std::exp(-p.rate * x);
    return {g, -p.rate * g, p.rate * p.rate * g};
  }
  throw InputError("unknown preset '" + p.name + "'");
}

}  // namespace detail

/// Samples a preset on the grid; with derivative_order = 1 samples its derivative instead.
inline MatrixFunction sample_preset(const Preset& p, std::size_t m, const std::vector<double>& grid,
                                    int derivative_order = 0) {
  const Matrix shape = detail::preset_shape(p, m);
  std::vector<Matrix> v, s;
  v.reserve(grid.size());
  s.reserve(grid.size());
  const auto i0 = static_cast<std::size_t>(derivative_order);
  for (double x : grid) {
    const auto prof = detail::preset_profile(p, x);
    v.push_back(prof[i0] * shape);
    s.push_back(prof[i0 + 1] * shape);
  }
  return MatrixFunction(m, grid, v, s);
}

/// Closed-form preset value, used as a pointwise oracle.
inline Matrix preset_value(const Preset& p, std::size_t m, double x) {
  return detail::preset_profile(p, x)[0] * detail::preset_shape(p, m);
}

/// Builds a pencil from preset sums for Q1 and Q0.
inline PencilCoefficients make_pencil(std::size_t m, double xmax, std::size_t grid_n, const Matrix& h0,
                                      const Matrix& h1, std::span<const Preset> q1_terms,
                                      std::span<const Preset> q0_terms) {
  PencilCoefficients c;
  c.m = m;
  c.xmax = xmax;
  c.h0 = h0;
  c.h1 = h1;
  const auto grid = uniform_grid(xmax, grid_n);
  const Preset zero{};
  c.q1 = sample_preset(zero, m, grid);
  c.q1d = sample_preset(zero, m, grid);
  c.q0 = sample_preset(zero, m, grid);
  for (const auto& t : q1_terms) {
    c.q1 += sample_preset(t, m, grid);
    c.q1d += sample_preset(t, m, grid, 1);
  }
  for (const auto& t : q0_terms) c.q0 += sample_preset(t, m, grid);
  return c;
}

/// Pencil from raw samples of Q1 and Q0 on a shared grid; Q1' by finite differences.
inline PencilCoefficients make_pencil_from_samples(std::size_t m, const std::vector<double>& grid,
                                                   std::span<const Matrix> q1, std::span<const Matrix> q0,
                                                   const Matrix& h0, const Matrix& h1) {
  PencilCoefficients c;
  c.m = m;
  c.xmax = grid.back();
  c.h0 = h0;
  c.h1 = h1;
  c.q1 = MatrixFunction::from_samples(m, grid, q1);
  std::vector<Matrix> d(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) d[k] = c.q1.node_slope(k);
  c.q1d = MatrixFunction::from_samples(m, grid, d);
  c.q0 = MatrixFunction::from_samples(m, grid, q0);
  return c;
}

// ---------------------------------------------------------------------------
// Admissibility checks.

struct ValidationCheck {
  std::string name;
  bool passed = false;
  double value = 0.0;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  bool ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
  }
  const ValidationCheck* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

/// Trapezoid rule of a scalar sampled on the grid.
inline double trapezoid(const std::vector<double>& grid, const std::vector<double>& f) {
  double s = 0.0;
  for (std::size_t k = 1; k < grid.size(); ++k) s += 0.5 * (f[k] + f[k - 1]) * (grid[k] - grid[k - 1]);
  return s;
}

/// tail_tol bounds the coefficient norms at xmax; cond_limit bounds cond(I +- h1).
inline ValidationReport validate_pencil(const PencilCoefficients& c, double tail_tol = 1e-4,
                                        double cond_limit = 1e12) {
  ValidationReport rep;
  const auto m = static_cast<Eigen::Index>(c.m);
  const bool shapes = c.m >= 1 && c.h0.rows() == m && c.h0.cols() == m && c.h1.rows() == m && c.h1.cols() == m &&
                      c.q1.dim() == c.m && c.q0.dim() == c.m && c.q1d.dim() == c.m;
  rep.checks.push_back({"dimensions", shapes, static_cast<double>(c.m), shapes ? "" : "inconsistent shapes"});
  if (!shapes) return rep;

  const bool finite_h = all_finite(c.h0) && all_finite(c.h1);
  rep.checks.push_back({"finite-boundary-data", finite_h, 0.0, ""});

  for (int sgn : {+1, -1}) {
    const Matrix a = identity(m) + static_cast<double>(sgn) * c.h1;
    const double cond = finite_h ? condition_number(a) : std::numeric_limits<double>::infinity();
    const bool pass = std::isfinite(cond) && cond <= cond_limit;
    rep.checks.push_back({sgn > 0 ? "I+h1-invertible" : "I-h1-invertible", pass, cond,
                          pass ? "" : "matrix is (numerically) singular"});
  }

  const auto& grid = c.grid();
  std::vector<double> n1(grid.size()), n1d(grid.size()), n0(grid.size());
  bool finite_q = true;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Matrix a = c.q1.node_value(k), b = c.q1d.node_value(k), d = c.q0.node_value(k);
    finite_q = finite_q && all_finite(a) && all_finite(b) && all_finite(d);
    n1[k] = matrix_norm(a);
    n1d[k] = matrix_norm(b);
    n0[k] = matrix_norm(d);
  }
  const double integral = trapezoid(grid, n1) + trapezoid(grid, n1d) + trapezoid(grid, n0);
  rep.checks.push_back({"integrable", finite_q && std::isfinite(integral), integral, ""});

  const double tail = std::max({n1.back(), n0.back(), n1d.back()});
  rep.checks.push_back({"tail-decay", tail <= tail_tol, tail, ""});
  const bool grid_ok = std::abs(grid.front()) < 1e-14 && std::abs(grid.back() - c.xmax) <= 1e-12 * c.xmax &&
                       c.q0.grid() == grid && c.q1d.grid() == grid;
  rep.checks.push_back({"shared-grid", grid_ok, c.xmax, ""});
  return rep;
}

}  // namespace qpencil
