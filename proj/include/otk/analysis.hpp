#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include <Eigen/Eigenvalues>

#include "otk/enumeration.hpp"
#include "otk/errors.hpp"
#include "otk/model.hpp"
#include "otk/subsolvers.hpp"
#include "otk/thresholding.hpp"

namespace otk {

struct RipEstimate {
  int order = 0;
  double delta = 0.0;
  SupportSet witness_support;  // first support (lexicographically) attaining delta
};

// delta_K = max over |S| = K of max(lambda_max(A_S^T A_S) - 1,
// 1 - lambda_min(A_S^T A_S)), by exhaustive enumeration. Refuses when
// C(n, K) exceeds the guard.
inline RipEstimate rip_constant_bruteforce(const Matrix& A, int K,
                                           std::uint64_t guard = 1'000'000) {
  const int n = static_cast<int>(A.cols());
  if (K < 1 || K > n)
    throw input_error("rip_constant_bruteforce: K must be in [1, n]");
  std::uint64_t count = binomial_capped(n, K, guard);
  if (count > guard)
    throw guard_error("rip_constant_bruteforce: C(" + std::to_string(n) + ", " +
                      std::to_string(K) + ") exceeds the enumeration guard " +
                      std::to_string(guard));

  RipEstimate best;
  best.order = K;
  best.delta = -1.0;
  Matrix sub(A.rows(), K);
  for_each_combination(n, K, [&](const std::vector<int>& support) {
    for (int j = 0; j < K; ++j) sub.col(j) = A.col(support[j]);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sub.transpose() * sub,
                                              Eigen::EigenvaluesOnly);
    double lo = eig.eigenvalues().minCoeff();
    double hi = eig.eigenvalues().maxCoeff();
    double delta = std::max(hi - 1.0, 1.0 - lo);
    if (delta > best.delta) {
      best.delta = delta;
      best.witness_support = support;
    }
  });
  best.delta = std::max(best.delta, 0.0);
  return best;
}

// Root of tau^3 + tau^2 + tau = 1 in (0, 1), by bisection to 1e-14. The
// contraction factor rho(delta) below equals 1 exactly at this value.
inline double tau_star() {
  static const double root = [] {
    double lo = 0.0, hi = 1.0;
    while (hi - lo > 1e-14) {
      double mid = 0.5 * (lo + hi);
      double f = ((mid + 1.0) * mid + 1.0) * mid - 1.0;
      (f < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }();
  return root;
}

struct OtConstants {
  double rho = 0.0;
  double C = 0.0;
  bool c_defined = true;  // false when rho >= 1
};

inline OtConstants ot_constants(double delta2k) {
  if (!(delta2k >= 0.0 && delta2k < 1.0))
    throw input_error("ot_constants: delta2k must lie in [0, 1)");
  OtConstants out;
  out.rho = delta2k * std::sqrt((1.0 + delta2k) / (1.0 - delta2k));
  if (out.rho < 1.0) {
    out.C = (3.0 + delta2k) / ((1.0 - out.rho) * std::sqrt(1.0 - delta2k));
  } else {
    out.C = std::numeric_limits<double>::infinity();
    out.c_defined = false;
  }
  return out;
}

inline double local_rate(double deltak) {
  if (!(deltak >= 0.0 && deltak < 1.0))
    throw input_error("local_rate: deltak must lie in [0, 1)");
  return deltak * std::sqrt((1.0 + deltak) / (1.0 - deltak));
}

struct RotConstants {
  double varrho = 0.0;
  double c_rot = 0.0;
  double varrho_pursuit = 0.0;
  double c_star = 0.0;
};

inline RotConstants rot_constants(double deltak, double delta2k, double delta3k) {
  if (!(0.0 <= deltak && deltak <= delta2k && delta2k <= delta3k && delta3k < 1.0))
    throw input_error(
        "rot_constants: need 0 <= deltak <= delta2k <= delta3k < 1");
  RotConstants out;
  out.varrho = (delta2k + 2.0 * delta3k) *
                   std::sqrt((1.0 + deltak) / (1.0 - delta2k)) +
               delta3k;
  double inv_rot = 1.0 - out.varrho;
  double c_rot_core = (5.0 + 3.0 * deltak) / std::sqrt(1.0 - delta2k) +
                      std::sqrt(1.0 + deltak);
  out.c_rot = inv_rot > 0.0 ? c_rot_core / inv_rot
                            : std::numeric_limits<double>::infinity();

  out.varrho_pursuit = out.varrho / std::sqrt(1.0 - delta2k * delta2k);
  double inv_p = 1.0 - out.varrho_pursuit;
  double c_star_core =
      (5.0 + 3.0 * deltak) / ((1.0 - delta2k) * std::sqrt(1.0 + delta2k)) +
      std::sqrt(1.0 + deltak) / std::sqrt(1.0 - delta2k * delta2k) +
      std::sqrt(1.0 + deltak) / (1.0 - delta2k);
  out.c_star = inv_p > 0.0 ? c_star_core / inv_p
                           : std::numeric_limits<double>::infinity();
  return out;
}

struct ConvergenceConstants {
  double rho = 0.0;
  double C = 0.0;
  bool c_defined = true;
  double varrho = 0.0;
  double c_rot = 0.0;
  double varrho_pursuit = 0.0;
  double c_star = 0.0;
  double tau_star = 0.0;
};

inline ConvergenceConstants convergence_constants(double deltak, double delta2k,
                                                  double delta3k) {
  OtConstants ot = ot_constants(delta2k);
  RotConstants rot = rot_constants(deltak, delta2k, delta3k);
  ConvergenceConstants out;
  out.rho = ot.rho;
  out.C = ot.C;
  out.c_defined = ot.c_defined;
  out.varrho = rot.varrho;
  out.c_rot = rot.c_rot;
  out.varrho_pursuit = rot.varrho_pursuit;
  out.c_star = rot.c_star;
  out.tau_star = otk::tau_star();
  return out;
}

enum class BoundFamily { ot, rot, rotp };

// Right-hand side of the geometric error bound
// ||x^p - x||_2 <= factor^p * ||x^0 - x||_2 + constant * ||noise||_2
// for the selected family. Infinite when the contraction factor is >= 1.
inline double error_bound(const ConvergenceConstants& c, int p_index,
                          double initial_error, double noise_norm,
                          BoundFamily which) {
  if (p_index < 0) throw input_error("error_bound: p_index must be >= 0");
  if (!(initial_error >= 0.0) || !(noise_norm >= 0.0))
    throw input_error("error_bound: errors and noise norms must be >= 0");
  double factor = 0.0, constant = 0.0;
  switch (which) {
    case BoundFamily::ot:
      factor = c.rho;
      constant = c.C;
      break;
    case BoundFamily::rot:
      factor = c.varrho;
      constant = c.c_rot;
      break;
    case BoundFamily::rotp:
      factor = c.varrho_pursuit;
      constant = c.c_star;
      break;
  }
  if (factor >= 1.0) return std::numeric_limits<double>::infinity();
  return std::pow(factor, p_index) * initial_error + constant * noise_norm;
}

inline double gram_largest_eigenvalue(const Matrix& A) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(A.transpose() * A,
                                            Eigen::EigenvaluesOnly);
  return std::max(eig.eigenvalues().maxCoeff(), 0.0);
}

// Both sides of the compression-error estimate for u-hat = H_k(u):
//   | ||y - A u-hat||^2 - ||y - A u||^2 |
//     <= 2 ||A^T (y - A u)||_inf * sigma_k(u)_1 + lambda_max(A^T A) * sigma_k(u)_1^2
inline std::pair<double, double> compressibility_gap(const ProblemInstance& p,
                                                     const Vector& u) {
  if (u.size() != p.n())
    throw input_error("compressibility_gap: u length does not match");
  Vector u_hat = hard_threshold(u, p.k).vector;
  double full = (p.y - p.A * u).squaredNorm();
  double thresholded = (p.y - p.A * u_hat).squaredNorm();
  double lhs = std::abs(thresholded - full);
  double sigma = best_k_term_error(u, p.k);
  double grad_inf = (p.A.transpose() * (p.y - p.A * u)).lpNorm<Eigen::Infinity>();
  double rhs = 2.0 * grad_inf * sigma + gram_largest_eigenvalue(p.A) * sigma * sigma;
  return {lhs, rhs};
}

// Largest t >= 0 with gamma_star + phi t + lambda_max t^2 <= alpha_star,
// where gamma_star is the relaxation value attained by w and
// phi = 2 ||A^T (y - A(u (x) w))||_inf. Whenever sigma_k(u (x) w)_1 stays
// below this threshold, every hard-thresholded selection from u (x) w has
// squared residual at most alpha_star.
inline double omega_threshold(const ProblemInstance& p, const Vector& u,
                              const RelaxedWeight& w, double alpha_star) {
  if (u.size() != p.n() || w.w.size() != p.n())
    throw input_error("omega_threshold: vector lengths do not match");
  double gamma_star = w.attained_objective;
  double gap = alpha_star - gamma_star;
  if (gap < 0.0) {
    if (gap >= -1e-12 * (1.0 + std::abs(alpha_star)))
      gap = 0.0;  // equality case up to round-off
    else
      throw input_error(
          "omega_threshold: alpha_star is below the attained relaxation value");
  }
  Vector v = hadamard(u, w.w);
  double phi = 2.0 * (p.A.transpose() * (p.y - p.A * v)).lpNorm<Eigen::Infinity>();
  double lambda_max = gram_largest_eigenvalue(p.A);
  if (lambda_max <= 0.0) {
    if (phi > 0.0) return gap / phi;
    return gap > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  }
  double omega =
      (-phi + std::sqrt(phi * phi + 4.0 * gap * lambda_max)) / (2.0 * lambda_max);
  return std::max(omega, 0.0);
}

}  // namespace otk
