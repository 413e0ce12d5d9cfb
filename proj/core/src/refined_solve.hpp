#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace soundfield::detail {

/// Factorize, solve, and polish a ridge system (G + lambda I) x = b with the
/// shift already applied to `gram`. A couple of refinement steps against the
/// original matrix recover the digits plain LDLT loses when the ridge barely
/// regularizes the system, and the guard is the normwise backward error
/// |G x - b| / (|G| |x| + |b|), the quantity a stable solve keeps small no
/// matter how ill conditioned G is. Without a ridge the system may be
/// genuinely singular and a backward stable answer can still be garbage, so
/// at lambda = 0 the solution must also reproduce the right hand side.
template <typename Matrix, typename Vector>
Vector refined_hermitian_solve(const Matrix& gram, const Vector& rhs, double lambda,
                               const std::string& label) {
  Eigen::LDLT<Matrix> ldlt(gram);
  Eigen::PartialPivLU<Matrix> lu;
  bool use_lu = ldlt.info() != Eigen::Success;
  const auto solve = [&](const Vector& b) {
    if (use_lu && lu.rows() == 0) lu.compute(gram);
    return use_lu ? lu.solve(b).eval() : ldlt.solve(b).eval();
  };
  Vector sol = solve(rhs);
  if (!use_lu && !sol.allFinite()) {
    use_lu = true;
    sol = solve(rhs);
  }
  const double rhs_norm = rhs.norm();
  const double gram_norm = gram.norm();
  const auto backward_error = [&] {
    const double scale = gram_norm * sol.norm() + rhs_norm;
    return scale > 0.0 ? (gram * sol - rhs).norm() / scale : 0.0;
  };
  double error = backward_error();
  for (int step = 0; step < 2 && error > 1e-14; ++step) {
    const Vector update = solve(rhs - gram * sol);
    if (!update.allFinite()) break;
    sol += update;
    error = backward_error();
  }
  if (!(error <= 1e-8))
    throw std::runtime_error(label + ": solve failed, backward error " + std::to_string(error) +
                             (lambda == 0.0 ? " (singular system at lambda = 0?)" : ""));
  if (lambda == 0.0) {
    const double residual = rhs_norm > 0.0 ? (gram * sol - rhs).norm() / rhs_norm : 0.0;
    if (!(residual <= 1e-6))
      throw std::runtime_error(label + ": solve failed, relative residual " +
                               std::to_string(residual) + " (singular system at lambda = 0?)");
  }
  return sol;
}

}  // namespace soundfield::detail
