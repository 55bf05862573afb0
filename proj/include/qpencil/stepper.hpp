#pragma once

// Piecewise reconstruction with model refresh. Each step builds a model pencil
// that copies the already recovered coefficients on [0, delta] and decays
// exponentially beyond, solves the main equations forward from delta until the
// discrete system is flagged, and commits the recovered segment.

#include "qpencil/reconstruct.hpp"

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace qpencil {

struct ModelCheck {
  bool bounded = false;     ///< |Q~1(x)| <= |Q1(delta)| beyond delta
  bool integrable = false;  ///< int_delta^inf |Q~1| < |Q1(delta)| (or both zero)
  bool agrees = false;      ///< Q~1 = Q1 on [0, delta]
  bool ok() const { return bounded && integrable && agrees; }
};

/// Q1 on [0, delta] (given on any grid covering it) continued by Q1(delta) exp(-lambda (x - delta)),
/// sampled on grid with matching slopes. Throws when lambda <= 1.
inline MatrixFunction extend_model_Q1(const MatrixFunction& q, double delta, double lambda,
                                      const std::vector<double>& grid, ModelCheck* check = nullptr) {
  if (!(lambda > 1.0)) throw InputError("extend_model_Q1: decay rate must exceed 1");
  const std::size_t m = q.dim();
  const Matrix qd = delta > 0 ? q(delta) : q(q.grid().front());
  std::vector<Matrix> v, s;
  for (double x : grid) {
    if (x <= delta) {
      v.push_back(q(x));
      s.push_back(q.derivative(x));
    } else {
      const double e = std::exp(-lambda * (x - delta));
      v.push_back(e * qd);
      s.push_back(-lambda * e * qd);
    }
  }
  MatrixFunction out(m, grid, v, s);
  if (check) {
    const double nd = matrix_norm(qd);
    check->bounded = true;
    check->agrees = true;
    std::vector<double> tail_x, tail_f;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const double nv = matrix_norm(v[k]);
      if (grid[k] > delta) {
        check->bounded = check->bounded && nv <= nd * (1 + 1e-12);
        tail_x.push_back(grid[k]);
        tail_f.push_back(nv);
      } else {
        check->agrees = check->agrees && (v[k] - q(grid[k])).norm() <= 1e-12 * (1 + v[k].norm());
      }
    }
    const double integral = tail_x.size() > 1 ? trapezoid(tail_x, tail_f) : 0.0;
    check->integrable = nd == 0.0 || integral < nd;
  }
  return out;
}

/// Largest x > delta_prev such that every sampled x in (delta_prev, x] is solvable.
/// Returns +infinity when the whole profile is solvable, delta_prev when no progress is possible.
inline double detect_breakpoint(const std::vector<double>& xs, const std::vector<double>& condition, double threshold,
                                double delta_prev) {
  if (xs.size() != condition.size()) throw InputError("detect_breakpoint: size mismatch");
  double last = delta_prev;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    if (xs[k] <= delta_prev) continue;
    if (!(condition[k] <= threshold)) return last;
    last = xs[k];
  }
  return std::numeric_limits<double>::infinity();
}

struct StepRecord {
  std::size_t k = 0;
  double delta_prev = 0.0;
  double delta = 0.0;
  bool reached_end = false;
  double cond_min = 0.0, cond_max = 0.0;
  double first_flagged_x = -1.0;  ///< -1 when nothing was flagged
  double omega_slope = 0.0;       ///< max |Omega(x) - I| / (x - delta_prev), growth proxy
  double model_pole_bound = 0.0;
  double lambda = 0.0;
  std::size_t solves = 0;
  std::size_t committed = 0;  ///< total committed samples after this step
  std::string model_hash;
  std::string committed_hash;  ///< hash of the first `committed` samples right after this step
  ModelCheck model_check;
  double seconds = 0.0;
};

struct StepperConfig {
  double x_end = 8.0;          ///< right end of the recovery range
  double dx = 0.05;            ///< recovery grid spacing
  double model_xmax = 10.0;    ///< model coefficients live on [0, model_xmax]
  std::size_t model_grid_n = 2000;
  double lambda = 2.0;
  double pole_margin = 1.0;     ///< the decay rate is doubled until r0 >= pole_margin * model pole bound
  int max_lambda_doublings = 5;
  std::size_t max_steps = 64;
  bool hermitian_sqrt = false;
  bool single_model = false;   ///< one model over the whole range, flags recorded but ignored
  /// A step commits up to the last point before the first flagged x whose condition number is
  /// at most breakpoint_guard * meq.cond_limit. 1 means the point right before the flag.
  double breakpoint_guard = 1.0;
  MainEqOptions meq;
  OdeTolerances tol;
  std::function<void(const StepRecord&)> on_step;
};

struct Reconstruction {
  std::size_t m = 0;
  Matrix h0, h1, q1_at_0;
  AsymptoticData asymptotics;
  std::vector<double> grid;             ///< committed abscissas
  std::vector<Matrix> q1, q0, omega;    ///< omega is relative to the model of the committing step
  std::vector<double> condition, extract_residual, holdout_residual, product_spread, bracket_zero;
  std::vector<double> deltas;           ///< delta_0 = 0, delta_1, ...
  std::vector<StepRecord> steps;
  std::vector<double> flagged_x;        ///< abscissas where a step's system was flagged
};

namespace detail {

inline std::string fnv_hash(const MatrixFunction& a, const MatrixFunction& b) {
  std::uint64_t h = 1469598103934665603ull;
  auto feed = [&](const MatrixFunction& f) {
    for (std::size_t k = 0; k < f.size(); ++k) {
      const Matrix v = f.node_value(k);
      const auto* bytes = reinterpret_cast<const unsigned char*>(v.data());
      for (std::size_t i = 0; i < static_cast<std::size_t>(v.size()) * sizeof(cplx); ++i) {
        h ^= bytes[i];
        h *= 1099511628211ull;
      }
    }
  };
  feed(a);
  feed(b);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::uint64_t fnv_feed(std::uint64_t h, const void* p, std::size_t n) {
  const auto* bytes = static_cast<const unsigned char*>(p);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline std::vector<double> spaced_grid(double a, double b, double dx) {
  const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil((b - a) / dx - 1e-9)));
  std::vector<double> g(n + 1);
  for (std::size_t k = 0; k <= n; ++k) g[k] = a + (b - a) * static_cast<double>(k) / static_cast<double>(n);
  return g;
}

}  // namespace detail

/// q on [0, delta] continued by (v + (x - delta)(s + lambda v)) exp(-lambda (x - delta)), which
/// matches the value v and slope s at delta.
inline MatrixFunction continue_smoothly(const MatrixFunction* q, double delta, const Matrix& v, const Matrix& s,
                                        double lambda, const std::vector<double>& grid) {
  std::vector<Matrix> vals, slopes;
  const Matrix c1 = s + lambda * v;
  for (double x : grid) {
    if (q && x <= delta) {
      vals.push_back((*q)(x));
      slopes.push_back(q->derivative(x));
    } else {
      const double t = x - delta, e = std::exp(-lambda * t);
      vals.push_back(e * (v + t * c1));
      slopes.push_back(e * (c1 - lambda * (v + t * c1)));
    }
  }
  return MatrixFunction(static_cast<std::size_t>(v.rows()), grid, vals, slopes);
}

/// Model pencil for the current step. At delta = 0 it carries the boundary values Q1(0), Q1'(0),
/// Q0(0) read off the asymptotics; later it copies the committed coefficients on [0, delta]. The
/// continuation beyond delta is C1 in Q1 and Q0: a kink there would leave a slowly decaying
/// rho^-3 tail in Mhat along the real axis. check reports the class conditions for the Q1 part.
inline PencilCoefficients build_model(const Reconstruction& rec, double delta, double lambda,
                                      const StepperConfig& cfg, ModelCheck* check = nullptr) {
  const auto grid = uniform_grid(cfg.model_xmax, cfg.model_grid_n);
  const std::size_t m = rec.m;
  PencilCoefficients c;
  c.m = m;
  c.xmax = cfg.model_xmax;
  c.h0 = rec.h0;
  c.h1 = rec.h1;
  if (delta <= 0.0 || rec.grid.size() < 2) {
    const auto& a = rec.asymptotics;
    c.q1 = continue_smoothly(nullptr, 0.0, a.q1_at_0, a.q1_prime_at_0, lambda, grid);
    c.q0 = continue_smoothly(nullptr, 0.0, a.q0_at_0, Matrix::Zero(a.q0_at_0.rows(), a.q0_at_0.cols()), lambda, grid);
    delta = 0.0;
  } else {
    const auto q1 = MatrixFunction::from_samples(m, rec.grid, rec.q1);
    const auto q0 = MatrixFunction::from_samples(m, rec.grid, rec.q0);
    c.q1 = continue_smoothly(&q1, delta, q1(delta), q1.derivative(delta), lambda, grid);
    c.q0 = continue_smoothly(&q0, delta, q0(delta), q0.derivative(delta), lambda, grid);
  }
  std::vector<Matrix> d(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) d[k] = c.q1.node_slope(k);
  c.q1d = MatrixFunction::from_samples(m, grid, d);
  if (check) {
    const Matrix qd = c.q1(delta);
    const double nd = matrix_norm(qd);
    std::vector<double> tx, tf;
    check->bounded = true;
    for (std::size_t k = 0; k < grid.size(); ++k)
      if (grid[k] >= delta) {
        const double nv = matrix_norm(c.q1.node_value(k));
        check->bounded = check->bounded && nv <= nd * (1 + 1e-9);
        tx.push_back(grid[k]);
        tf.push_back(nv);
      }
    check->integrable = nd == 0.0 || trapezoid(tx, tf) < nd;
    check->agrees = true;
  }
  return c;
}

struct Breakpoint {
  std::size_t index = 0;     ///< last sample to commit
  bool reached_end = false;  ///< nothing flagged
  std::size_t flagged = 0;   ///< first flagged sample when !reached_end
};

/// Picks the commit point from a condition profile sampled from delta_prev onwards. Without flags
/// the whole profile is committed. Otherwise the last sample before the first flag with
/// cond <= guard_limit, falling back to the sample just before the flag. Index 0 means no progress.
inline Breakpoint detect_breakpoint(const std::vector<double>& cond, const std::vector<char>& flagged,
                                    double guard_limit) {
  if (cond.size() != flagged.size() || cond.empty()) throw InputError("detect_breakpoint: profile size mismatch");
  Breakpoint bp;
  const auto it = std::find(flagged.begin(), flagged.end(), char{1});
  if (it == flagged.end()) {
    bp.reached_end = true;
    bp.index = cond.size() - 1;
    return bp;
  }
  bp.flagged = static_cast<std::size_t>(it - flagged.begin());
  if (bp.flagged == 0) return bp;
  bp.index = bp.flagged - 1;
  for (std::size_t i = bp.flagged - 1; i >= 1; --i)
    if (cond[i] <= guard_limit) {
      bp.index = i;
      break;
    }
  return bp;
}

/// Weyl samples on the contour nodes paired with the contour they came from.
struct ContourData {
  Contour contour;
  std::vector<Matrix> M;  ///< per contour node
};

/// Matches samples to the nodes of the contour rebuilt from the header parameters.
inline ContourData match_contour(const WeylSamples& ws) {
  ContourData cd;
  cd.contour = build_contour(0.0, ws.r0, ws.R, ws.n_circle, ws.n_ray);
  std::vector<const WeylSample*> nodes;
  for (const auto& s : ws.samples)
    if (s.side != Side::Ladder) nodes.push_back(&s);
  if (nodes.size() != cd.contour.size())
    throw InputError("Weyl samples: expected " + std::to_string(cd.contour.size()) + " contour samples, found " +
                     std::to_string(nodes.size()));
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    const auto& nd = cd.contour.nodes[j];
    if (nodes[j]->side != nd.side || std::abs(nodes[j]->rho - nd.rho) > 1e-9 * (1 + std::abs(nd.rho)))
      throw InputError("Weyl samples: sample " + std::to_string(j) + " does not match the contour node");
    if (nodes[j]->M.rows() != static_cast<Eigen::Index>(ws.m) || !all_finite(nodes[j]->M))
      throw InputError("Weyl samples: bad matrix at sample " + std::to_string(j));
    cd.M.push_back(nodes[j]->M);
  }
  return cd;
}

/// Hash of the first n committed samples (abscissas, Q1, Q0); later steps must leave it unchanged.
inline std::string committed_hash(const Reconstruction& rec, std::size_t n) {
  if (n > rec.grid.size()) throw InputError("committed_hash: prefix longer than the reconstruction");
  std::uint64_t h = 1469598103934665603ull;
  for (std::size_t k = 0; k < n; ++k) {
    h = detail::fnv_feed(h, &rec.grid[k], sizeof(double));
    h = detail::fnv_feed(h, rec.q1[k].data(), static_cast<std::size_t>(rec.q1[k].size()) * sizeof(cplx));
    h = detail::fnv_feed(h, rec.q0[k].data(), static_cast<std::size_t>(rec.q0[k].size()) * sizeof(cplx));
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Piecewise recovery with model refresh at each breakpoint. With cfg.single_model the first
/// model is used over the whole range.
inline Reconstruction reconstruct_piecewise(const WeylSamples& ws, const StepperConfig& cfg) {
  const ContourData cd = match_contour(ws);
  std::vector<WeylSample> ladder;
  for (const auto& s : ws.samples)
    if (s.side == Side::Ladder) ladder.push_back(s);
  Reconstruction rec;
  rec.m = ws.m;
  rec.asymptotics = extract_asymptotic_data(ladder);
  rec.h0 = rec.asymptotics.h0;
  rec.h1 = rec.asymptotics.h1;
  rec.q1_at_0 = rec.asymptotics.q1_at_0;
  if (!(cfg.x_end > 0) || cfg.x_end > cfg.model_xmax) throw InputError("stepper: x_end must lie in (0, model_xmax]");
  const auto full = detail::spaced_grid(0.0, cfg.x_end, cfg.dx);
  const RecoveryPoints pts = default_recovery_points(ws.r0);
  const auto evals = pts.all();
  double delta = 0.0;
  rec.deltas.push_back(0.0);

  for (std::size_t step = 1;; ++step) {
    if (step > cfg.max_steps) throw AlgorithmError("stepper: step cap reached at delta = " + std::to_string(delta));
    const auto t0 = std::chrono::steady_clock::now();
    StepRecord sr;
    sr.k = step;
    sr.delta_prev = delta;

    // Model refresh; a larger decay rate is tried until the model poles sit well inside the circle.
    PencilCoefficients model;
    Transport mtr;
    double lambda = cfg.lambda, pole = 0.0;
    for (int attempt = 0;; ++attempt) {
      model = build_model(rec, delta, lambda, cfg, &sr.model_check);
      mtr = make_transport(model);
      pole = estimate_pole_bound(model, mtr);
      if (cfg.pole_margin * pole <= ws.r0) break;
      if (attempt == cfg.max_lambda_doublings)
        throw AlgorithmError("stepper: model pole bound " + std::to_string(pole) + " too close to the circle radius " +
                             std::to_string(ws.r0));
      lambda *= 2.0;
    }
    sr.lambda = lambda;
    sr.model_pole_bound = pole;
    sr.model_hash = detail::fnv_hash(model.q1, model.q0);

    std::vector<Matrix> mhat(cd.contour.size());
    parallel_for(cd.contour.size(), [&](std::size_t j) {
      const auto& nd = cd.contour.nodes[j];
      mhat[j] = cd.M[j] - weyl_matrix(model, mtr, nd.rho, nd.side, cfg.tol);
    });

    std::vector<double> xs;
    for (double x : full)
      if (x >= delta - 1e-12) xs.push_back(x);
    const MainEquation me(model, mtr, cd.contour, mhat, xs, evals, cfg.tol);
    std::vector<MainEqPoint> sol;
    std::vector<double> cond;
    std::vector<char> flag;
    sr.cond_min = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < xs.size(); ++i) {
      auto p = me.solve(i, cfg.meq);
      ++sr.solves;
      sr.cond_min = std::min(sr.cond_min, p.condition);
      sr.cond_max = std::max(sr.cond_max, p.condition);
      cond.push_back(p.condition);
      flag.push_back(p.solvable ? 0 : 1);
      const bool stop = !p.solvable && !cfg.single_model;
      if (!p.solvable) {
        rec.flagged_x.push_back(p.x);
        if (sr.first_flagged_x < 0) sr.first_flagged_x = p.x;
      }
      sol.push_back(std::move(p));
      if (stop) break;
    }
    std::size_t commit_n = sol.size();
    if (!cfg.single_model) {
      const Breakpoint bp = detect_breakpoint(cond, flag, cfg.breakpoint_guard * cfg.meq.cond_limit);
      if (bp.index == 0) {
        std::string prof;
        for (std::size_t i = 0; i < cond.size(); ++i) {
          char buf[64];
          std::snprintf(buf, sizeof buf, "%s%.4g:%.3e", i ? ", " : "", xs[i], cond[i]);
          prof += buf;
        }
        throw AlgorithmError("stepper: no progress beyond delta = " + std::to_string(delta) +
                             "; condition profile (x:cond) " + prof);
      }
      // Reconstruct through every solvable point so that delta is not a stencil end.
      commit_n = bp.index + 1;
      if (!bp.reached_end) sol.resize(bp.flagged);
    }
    if (commit_n < 2) throw AlgorithmError("stepper: no progress beyond delta = " + std::to_string(delta));

    const auto seg = reconstruct_segment(sol, pts, cfg.hermitian_sqrt);
    const std::size_t first = rec.grid.empty() ? 0 : 1;  // delta itself is already committed
    for (std::size_t i = first; i < commit_n; ++i) {
      rec.grid.push_back(seg.grid[i]);
      rec.q1.push_back(seg.q1[i]);
      rec.q0.push_back(seg.q0[i]);
      rec.omega.push_back(seg.omega[i]);
      rec.condition.push_back(seg.condition[i]);
      rec.extract_residual.push_back(seg.extract_residual[i]);
      rec.holdout_residual.push_back(seg.holdout_residual[i]);
      rec.product_spread.push_back(seg.product_spread[i]);
      rec.bracket_zero.push_back(seg.bracket_zero[i]);
      if (seg.grid[i] > delta)
        sr.omega_slope = std::max(sr.omega_slope, (seg.omega[i] - identity(seg.omega[i].rows())).norm() /
                                                       (seg.grid[i] - delta));
    }
    const double reached = seg.grid[commit_n - 1];
    sr.reached_end = reached >= cfg.x_end - 1e-12;
    sr.delta = reached;
    sr.committed = rec.grid.size();
    sr.committed_hash = committed_hash(rec, sr.committed);
    sr.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rec.steps.push_back(sr);
    rec.deltas.push_back(reached);
    if (cfg.on_step) cfg.on_step(sr);
    if (sr.reached_end || cfg.single_model) break;
    delta = reached;
  }
  return rec;
}

}  // namespace qpencil
