// A four-column instance where plain hard thresholding walks away from the
// solution while optimal selection recovers it in one step.
//
// The measurements y = (1, 5) are exactly the first column of A, so the
// 1-sparse solution is x* = (1, 0, 0, 0). Hard thresholding keeps the
// single largest entry of the gradient step, which is dominated by the
// heaviest column and points at the wrong coordinate; the residual then
// grows without bound. Choosing the kept entry by residual instead (the
// optimal selection) finds the right coordinate immediately.

#include <iostream>

#include "otk/otk.hpp"

int main() {
  otk::Matrix A(2, 4);
  A << 1, 2, 3, 4, 5, 6, 7, 8;
  otk::Vector y(2);
  y << 1, 5;
  otk::ProblemInstance p(A, y, 1);

  std::cout << "instance: 2x4, k = 1, solution x* = (1, 0, 0, 0)\n\n";

  otk::AlgorithmConfig iht;
  iht.variant = otk::Variant::iht;
  iht.max_iterations = 3;
  otk::RunResult run_iht = otk::run(p, iht);
  std::cout << "IHT from zero (3 iterations):\n";
  for (const otk::IterateRecord& r : run_iht.trace.records) {
    std::cout << "  p=" << r.iteration << "  x = (";
    for (otk::Index i = 0; i < r.iterate.size(); ++i)
      std::cout << (i ? ", " : "") << otk::format_double(r.iterate[i]);
    std::cout << ")  residual = " << otk::format_double(r.residual) << "\n";
  }
  std::cout << "  -> the kept coordinate never changes and the residual "
               "explodes\n\n";

  otk::Vector x0 = otk::Vector::Zero(4);
  otk::Vector u = otk::gradient_step(p, x0);
  std::cout << "gradient step from zero: u = (";
  for (otk::Index i = 0; i < u.size(); ++i)
    std::cout << (i ? ", " : "") << otk::format_double(u[i]);
  std::cout << ")\n";

  otk::BinarySolution best = otk::solve_binary_ot(p, u);
  std::cout << "residuals of the four 1-term selections of u:\n";
  for (int i = 0; i < 4; ++i) {
    otk::Vector w = otk::Vector::Zero(4);
    w[i] = 1.0;
    double objective = (y - A * otk::hadamard(u, w)).squaredNorm();
    std::cout << "  keep index " << i << ": " << otk::format_double(objective)
              << (i == best.support.front() ? "   <- optimal" : "") << "\n";
  }

  otk::AlgorithmConfig otp;
  otp.variant = otk::Variant::otp;
  otk::RunResult run_otp = otk::run(p, otp);
  const otk::IterateRecord& last = run_otp.trace.records.back();
  std::cout << "\nOTP from zero: x = (";
  for (otk::Index i = 0; i < last.iterate.size(); ++i)
    std::cout << (i ? ", " : "") << otk::format_double(last.iterate[i]);
  std::cout << ") after " << last.iteration
            << " iteration, residual = " << otk::format_double(last.residual)
            << " (" << otk::stop_reason_name(run_otp.trace.reason) << ")\n";
  return 0;
}
