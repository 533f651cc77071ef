#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "otk/enumeration.hpp"
#include "otk/errors.hpp"
#include "otk/model.hpp"
#include "otk/thresholding.hpp"

namespace otk {

// Inner-solver controls. tolerance bounds the projected-gradient-mapping
// norm at the returned iterate; acceleration toggles the momentum scheme.
struct QPSettings {
  double tolerance = 1e-8;
  int max_inner_iterations = 5000;
  bool acceleration = true;
};

inline void check_qp_settings(const QPSettings& s) {
  if (!(s.tolerance > 0.0))
    throw input_error("QPSettings: tolerance must be positive");
  if (s.max_inner_iterations < 1)
    throw input_error("QPSettings: max_inner_iterations must be >= 1");
}

// Solution of the relaxed selection problem min ||y - A(u.*w)||^2 over the
// capped simplex. kkt_residual is the gradient-mapping norm at w.
struct RelaxedWeight {
  Vector w;
  double attained_objective = 0.0;
  double kkt_residual = 0.0;
  bool converged = true;
  bool degenerate = false;
  int iterations = 0;
};

// Exact minimizer over binary indicators with k ones.
struct BinarySolution {
  IndicatorVector indicator;
  double attained_objective = 0.0;
  SupportSet support;
};

// Euclidean projection onto {w : 0 <= w <= e, e'w = k}. The multiplier of
// the sum constraint solves sum_i clamp(v_i - lambda, 0, 1) = k, a
// nonincreasing piecewise-linear equation; 80 bisection steps pin lambda
// far below the 1e-10 feasibility budget.
inline Vector project_capped_simplex(const Vector& v, Index k) {
  const Index n = v.size();
  if (k < 1 || k > n)
    throw input_error("project_capped_simplex: k must be in [1, n]");
  if (k == n) return Vector::Ones(n);

  double lo = v.minCoeff() - 1.0;  // mass n at this lambda
  double hi = v.maxCoeff();        // mass 0 at this lambda
  auto mass = [&](double lam) {
    double s = 0.0;
    for (Index i = 0; i < n; ++i)
      s += std::clamp(v[i] - lam, 0.0, 1.0);
    return s;
  };
  for (int it = 0; it < 80; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mass(mid) >= static_cast<double>(k))
      lo = mid;
    else
      hi = mid;
  }
  double lam = 0.5 * (lo + hi);

  // Exact multiplier for the active partition the bisection identified.
  // Bisection alone leaves an ulp-scale bias on entries at the caps, so a
  // feasible input would not project to itself. The exact value is kept
  // only when it satisfies the mass equation at least as well.
  double free_sum = 0.0;
  Index free_count = 0, saturated = 0;
  for (Index i = 0; i < n; ++i) {
    double t = v[i] - lam;
    if (t >= 1.0)
      ++saturated;
    else if (t > 0.0) {
      free_sum += v[i];
      ++free_count;
    }
  }
  if (free_count > 0) {
    double exact = (free_sum + static_cast<double>(saturated - k)) /
                   static_cast<double>(free_count);
    if (std::abs(mass(exact) - static_cast<double>(k)) <=
        std::abs(mass(lam) - static_cast<double>(k)))
      lam = exact;
  }

  Vector w(n);
  for (Index i = 0; i < n; ++i) w[i] = std::clamp(v[i] - lam, 0.0, 1.0);
  return w;
}

namespace detail {

// Largest eigenvalue of B'B by power iteration, applied as B'(B s) so the
// Gram matrix is never formed. 50 steps, 1e-6 relative tolerance. If the
// start vector lands in the null space, fall back to basis vectors before
// concluding the operator is zero.
inline double gram_lambda_max(const Matrix& B) {
  const Index n = B.cols();
  Vector s = Vector::Ones(n);
  s.normalize();
  if ((B * s).isZero(0.0)) {
    Index j = 0;
    while (j < n && B.col(j).isZero(0.0)) ++j;
    if (j == n) return 0.0;
    s = Vector::Unit(n, j);
  }
  double lam = 0.0;
  for (int it = 0; it < 50; ++it) {
    Vector t = B.transpose() * (B * s);
    double nt = t.norm();
    if (nt == 0.0) return 0.0;
    double next = s.dot(t);
    s = t / nt;
    if (it > 0 && std::abs(next - lam) <= 1e-6 * std::abs(next)) {
      lam = next;
      break;
    }
    lam = next;
  }
  return lam;
}

}  // namespace detail

// Accelerated projected gradient on g(w) = ||y - Bw||^2, B = A diag(u),
// over the capped simplex. Started at the indicator of the k largest
// magnitudes of u, so the attained objective never exceeds the plain
// hard-thresholding residual; a caller-supplied warm start replaces that
// indicator only when it begins at least as good, preserving the same
// guarantee. Momentum restarts whenever the objective would increase, and
// the increase is re-taken as a plain projected gradient step, keeping
// the recorded objective sequence nonincreasing.
inline RelaxedWeight solve_relaxed_ot(const ProblemInstance& p,
                                      const Vector& u,
                                      const QPSettings& settings = {},
                                      const Vector* warm_start = nullptr) {
  if (u.size() != p.n())
    throw input_error("solve_relaxed_ot: u length must equal column count");
  check_qp_settings(settings);
  const Index n = p.n();
  const Index k = p.k;

  if (u.isZero(0.0)) {
    // Objective is constant; report the lexicographically first indicator.
    SupportSet s;
    for (Index i = 0; i < k; ++i) s.push_back(static_cast<int>(i));
    RelaxedWeight r;
    r.w = indicator_from_support(n, s).bits;
    r.attained_objective = p.y.squaredNorm();
    r.degenerate = true;
    return r;
  }

  const Matrix B = p.A * u.asDiagonal();
  const double lam_max = detail::gram_lambda_max(B);
  Vector w = hard_threshold(u, k).vector;
  for (Index i = 0; i < n; ++i) w[i] = (w[i] != 0.0) ? 1.0 : 0.0;
  if (static_cast<Index>(w.sum()) < k) {
    // u had fewer than k nonzeros; pad the indicator to k ones.
    Index have = static_cast<Index>(w.sum());
    for (Index i = 0; i < n && have < k; ++i)
      if (w[i] == 0.0) {
        w[i] = 1.0;
        ++have;
      }
  }

  double start_obj = (p.y - B * w).squaredNorm();
  if (warm_start != nullptr && warm_start->size() == n) {
    Vector candidate = project_capped_simplex(*warm_start, k);
    double candidate_obj = (p.y - B * candidate).squaredNorm();
    if (candidate_obj <= start_obj) {
      w = std::move(candidate);
      start_obj = candidate_obj;
    }
  }

  RelaxedWeight best;
  best.w = w;
  best.attained_objective = start_obj;
  if (lam_max <= std::numeric_limits<double>::min()) {
    // B vanishes on the feasible set's coordinates: every w is optimal.
    return best;
  }
  const double L = 2.0 * lam_max * 1.01;

  Vector w_prev = w;
  Vector v = w;
  double obj_prev = best.attained_objective;
  double t = 1.0;
  for (int it = 1; it <= settings.max_inner_iterations; ++it) {
    Vector grad_v = 2.0 * (B.transpose() * (B * v - p.y));
    Vector w_new = project_capped_simplex(v - grad_v / L, k);
    double obj_new = (p.y - B * w_new).squaredNorm();
    if (obj_new > obj_prev) {
      // Momentum overshoot: restart from the last iterate.
      t = 1.0;
      Vector grad_w = 2.0 * (B.transpose() * (B * w_prev - p.y));
      w_new = project_capped_simplex(w_prev - grad_w / L, k);
      obj_new = (p.y - B * w_new).squaredNorm();
    }
    assert(obj_new <= obj_prev * (1.0 + 1e-12) + 1e-300);

    Vector grad_new = 2.0 * (B.transpose() * (B * w_new - p.y));
    double kkt =
        L * (w_new - project_capped_simplex(w_new - grad_new / L, k)).norm();

    if (obj_new <= best.attained_objective) {
      best.w = w_new;
      best.attained_objective = obj_new;
      best.kkt_residual = kkt;
    }
    best.iterations = it;
    if (kkt <= settings.tolerance) {
      best.w = w_new;
      best.attained_objective = obj_new;
      best.kkt_residual = kkt;
      return best;
    }

    if (settings.acceleration) {
      double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      v = w_new + ((t - 1.0) / t_next) * (w_new - w_prev);
      t = t_next;
    } else {
      v = w_new;
    }
    w_prev = w_new;
    obj_prev = obj_new;
  }
  best.converged = false;
  return best;
}

// Exhaustive minimization of ||y - A(u.*w)||^2 over binary w with k ones.
// Depth-first over supports in lexicographic order; each tree edge updates
// a per-depth partial residual, so siblings reuse the common prefix. Ties
// resolve to the first support visited, the lexicographically smallest.
inline BinarySolution solve_binary_ot(const ProblemInstance& p,
                                      const Vector& u,
                                      std::uint64_t guard = 2'000'000) {
  if (u.size() != p.n())
    throw input_error("solve_binary_ot: u length must equal column count");
  const int n = static_cast<int>(p.n());
  const int k = static_cast<int>(p.k);
  if (binomial_capped(n, k, guard) > guard)
    throw guard_error(
        "solve_binary_ot: C(n,k) exceeds guard " + std::to_string(guard) +
        "; use solve_relaxed_ot instead");

  std::vector<Vector> partial(static_cast<std::size_t>(k) + 1);
  partial[0] = p.y;
  std::vector<int> chosen;
  chosen.reserve(k);
  SupportSet best_support;
  double best_obj = std::numeric_limits<double>::infinity();

  auto dfs = [&](auto&& self, int start) -> void {
    int depth = static_cast<int>(chosen.size());
    if (depth == k) {
      double obj = partial[depth].squaredNorm();
      if (obj < best_obj) {
        best_obj = obj;
        best_support = chosen;
      }
      return;
    }
    for (int i = start; i <= n - (k - depth); ++i) {
      partial[depth + 1] = partial[depth] - u[i] * p.A.col(i);
      chosen.push_back(i);
      self(self, i + 1);
      chosen.pop_back();
    }
  };
  dfs(dfs, 0);

  BinarySolution out{indicator_from_support(p.n(), best_support), best_obj,
                     best_support};
  return out;
}

// Least squares restricted to the columns in S, minimum-norm when the
// submatrix is rank deficient. Empty S returns the zero vector.
inline Vector least_squares_on_support(const ProblemInstance& p,
                                       const SupportSet& S) {
  const Index n = p.n();
  if (S.empty()) return Vector::Zero(n);
  if (!is_valid_support(S, n))
    throw input_error(
        "least_squares_on_support: support must be strictly increasing "
        "indices in [0, n)");
  Matrix As(p.m(), static_cast<Index>(S.size()));
  for (std::size_t j = 0; j < S.size(); ++j)
    As.col(static_cast<Index>(j)) = p.A.col(S[j]);
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(As);
  Vector z = cod.solve(p.y);
  Vector x = Vector::Zero(n);
  for (std::size_t j = 0; j < S.size(); ++j) x[S[j]] = z[static_cast<Index>(j)];
  return x;
}

// Basis pursuit baseline: min ||x||_1 subject to Ax = y, by Douglas-
// Rachford splitting. One half-step soft-thresholds (prox of gamma*||.||_1),
// the other projects onto the affine constraint set through a cached
// complete orthogonal decomposition, so rank-deficient A is handled. The
// splitting parameter gamma = 0.25 affects speed only, not the limit.
// Stops when the two half-steps agree to settings.tolerance * (1 + ||x||).
struct L1Result {
  Vector x;
  int iterations = 0;
  bool converged = true;
  double fixed_point_gap = 0.0;
};

inline L1Result solve_l1_baseline_detailed(const ProblemInstance& p,
                                           const QPSettings& settings = {}) {
  check_qp_settings(settings);
  const double gamma = 0.25;
  const Index n = p.n();
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(p.A);

  auto shrink = [&](const Vector& z) {
    Vector r(n);
    for (Index i = 0; i < n; ++i) {
      double a = std::abs(z[i]) - gamma;
      r[i] = a > 0.0 ? (z[i] > 0.0 ? a : -a) : 0.0;
    }
    return r;
  };
  auto affine_project = [&](const Vector& v) -> Vector {
    return v - cod.solve(p.A * v - p.y);
  };

  Vector z = Vector::Zero(n);
  L1Result res;
  for (int it = 1; it <= settings.max_inner_iterations; ++it) {
    Vector xh = shrink(z);
    Vector xp = affine_project(2.0 * xh - z);
    z += xp - xh;
    res.x = xp;
    res.iterations = it;
    res.fixed_point_gap = (xp - xh).norm();
    if (res.fixed_point_gap <= settings.tolerance * (1.0 + xp.norm()))
      return res;
  }
  res.converged = false;
  return res;
}

inline Vector solve_l1_baseline(const ProblemInstance& p,
                                const QPSettings& settings = {}) {
  return solve_l1_baseline_detailed(p, settings).x;
}

}  // namespace otk
