#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "otk/errors.hpp"

namespace otk {

using Matrix = Eigen::MatrixXd;  // dense, column-major
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Sorted list of column indices, 0-based, no duplicates.
using SupportSet = std::vector<int>;

inline SupportSet support_of(const Vector& x) {
  SupportSet s;
  for (Index i = 0; i < x.size(); ++i)
    if (x[i] != 0.0) s.push_back(static_cast<int>(i));
  return s;
}

inline bool is_valid_support(const SupportSet& s, Index n) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] < 0 || s[i] >= n) return false;
    if (i > 0 && s[i] <= s[i - 1]) return false;
  }
  return true;
}

// One instance of the sparse recovery problem: measurements y = Ax (+ noise),
// find a k-sparse x. Validated on construction.
struct ProblemInstance {
  Matrix A;
  Vector y;
  Index k;

  ProblemInstance(Matrix A_, Vector y_, Index k_)
      : A(std::move(A_)), y(std::move(y_)), k(k_) {
    if (A.rows() != y.size())
      throw input_error("ProblemInstance: y length must equal row count of A");
    if (k < 1 || k > A.cols())
      throw input_error("ProblemInstance: sparsity level k must be in [1, n]");
    if (!A.allFinite() || !y.allFinite())
      throw input_error("ProblemInstance: entries must be finite");
  }

  Index m() const { return A.rows(); }
  Index n() const { return A.cols(); }
};

// A vector together with its declared sparsity budget.
struct SparseSignal {
  Vector values;
  Index declared_sparsity;

  SparseSignal(Vector v, Index kappa)
      : values(std::move(v)), declared_sparsity(kappa) {
    Index nnz = 0;
    for (Index i = 0; i < values.size(); ++i)
      if (values[i] != 0.0) ++nnz;
    if (nnz > kappa)
      throw input_error("SparseSignal: more nonzeros than declared sparsity");
  }
};

// Noise scales for the experiment generators: y = A x + eps * theta and
// x_noisy = x* + eps_signal * theta_signal.
struct NoiseModel {
  double measurement_scale = 0.0;
  double signal_scale = 0.0;
};

inline void check_noise(const NoiseModel& nm) {
  if (nm.measurement_scale < 0.0 || nm.signal_scale < 0.0)
    throw input_error("NoiseModel: scales must be nonnegative");
}

inline double residual_norm(const ProblemInstance& p, const Vector& x) {
  if (x.size() != p.n())
    throw input_error("residual_norm: x length must equal column count of A");
  return (p.y - p.A * x).norm();
}

inline Vector hadamard(const Vector& u, const Vector& w) {
  if (u.size() != w.size())
    throw input_error("hadamard: vectors must have equal length");
  return u.cwiseProduct(w);
}

// One Landweber step with unit stepsize: u = x + A'(y - Ax).
inline Vector gradient_step(const ProblemInstance& p, const Vector& x) {
  if (x.size() != p.n())
    throw input_error("gradient_step: x length must equal column count of A");
  return x + p.A.transpose() * (p.y - p.A * x);
}

}  // namespace otk
