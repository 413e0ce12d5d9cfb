#pragma once

#include <functional>
#include <string>

#include <Eigen/Dense>

#include "soundfield/kernels.hpp"
#include "soundfield/spectral.hpp"

namespace soundfield {

/// Samples collected by one microphone moving along a trajectory: position and
/// pressure per time step, plus the driving source signal. The source carries
/// window-1 samples of pre-roll so every step has a full history buffer.
struct MovingMeasurement {
  Eigen::Matrix3Xd positions;
  Eigen::VectorXd pressure;
  Eigen::VectorXd source;
  int window = 0;
  double sample_rate = 0.0;

  int count() const { return static_cast<int>(positions.cols()); }
  /// Source sample phi(n) for n in [-(window-1), count).
  double source_at(int n) const;
  /// History buffer (phi(n), phi(n-1), ..., phi(n-window+1)).
  TimeSequence source_window(int n) const;
  /// Forward spectra of all history buffers, num_bins x count.
  Eigen::MatrixXcd source_spectra() const;
  void validate(bool require_pressure) const;
};

using RirField = std::function<TimeSequence(const Eigen::Vector3d&)>;

/// Noiseless measurement operator: p(n) = <field(r_n), phi(n)>. Consecutive
/// duplicate positions reuse the previous field evaluation.
Eigen::VectorXd measure(const RirField& field, const MovingMeasurement& m);

struct SolverOptions {
  enum class Method { Direct, IterativeMatrixFree };
  Method method = Method::Direct;
  double tol = 1e-8;
  /// 0 selects the default of 10 * count.
  int max_iterations = 0;
  /// Above this sample count the Gram matrix is never materialized and the
  /// solver falls back to the matrix-free path.
  int materialize_cap = 20000;
};

struct SolveReport {
  std::string method;
  int iterations = 0;
  double residual = 0.0;
};

struct KrrModel {
  KernelSpec kernel;
  Eigen::Matrix3Xd positions;
  Eigen::MatrixXcd spectra;
  Eigen::VectorXd coefficients;
  double lambda = 0.0;
  SolveReport report;
};

/// Gram matrix of the windowed field kernel between all sample pairs:
/// K(n,m) = sum_l c_l Re[kappa_l(r_n, r_m) conj(Phi(n)_l) Phi(m)_l].
/// Computed on the upper triangle and mirrored, so K is exactly symmetric.
Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const MovingMeasurement& m);

/// Ridge fit (K + lambda I) a = p. Direct uses a symmetric factorization;
/// the matrix-free path runs conjugate gradients with streamed Gram rows.
/// Throws std::runtime_error when the solve does not reach tolerance
/// (e.g. a singular system at lambda = 0); nothing is regularized silently.
KrrModel fit_moving(const KernelSpec& spec, const MovingMeasurement& m, double lambda,
                    const SolverOptions& opts = {});

/// Field estimate at r per frequency bin: sum_n kappa_l(r, r_n) Phi(n)_l a_n.
FreqSequence reconstruct_bins(const KrrModel& model, const Eigen::Vector3d& r);
/// Time-domain impulse response estimate at r.
TimeSequence reconstruct(const KrrModel& model, const Eigen::Vector3d& r);
/// One impulse response per column of points, window x count.
Eigen::MatrixXd reconstruct_grid(const KrrModel& model, const Eigen::Matrix3Xd& points);

}  // namespace soundfield
