#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <vector>

#include "soundfield/kernels.hpp"
#include "soundfield/moving.hpp"
#include "soundfield/spectral.hpp"

namespace soundfield {

// Monte Carlo plane-wave features for the kernels in kernels.hpp. Directions
// are drawn per bin from the kernel's own directional weighting, so averaging
// feature products recovers the kernel up to its normalization constant
// sinh(strength)/strength.

// Unit vectors, uniform over the sphere. Draws are sequential, so a longer
// table extends a shorter one drawn with the same seed.
Eigen::Matrix3Xd uniform_directions(int count, std::uint64_t seed);

// von Mises-Fisher directions around `mean` via the inverse CDF of the
// cosine. strength below 1e-12 falls back to the uniform draw.
Eigen::Matrix3Xd vmf_directions(int count, const Eigen::Vector3d& mean, double strength,
                                std::uint64_t seed);

struct RffOptions {
  int features = 16;        // per bin
  Eigen::VectorXi per_bin;  // optional per-bin override, size num_bins
  std::uint64_t seed = 0;
};

struct FeatureBasis {
  KernelSpec kernel;
  std::uint64_t seed = 0;
  Eigen::VectorXi counts;                    // features per bin
  std::vector<Eigen::Matrix3Xd> directions;  // per bin, drawn independently

  int num_bins() const { return static_cast<int>(counts.size()); }
  int max_count() const { return counts.size() ? counts.maxCoeff() : 0; }

  static FeatureBasis build(const KernelSpec& spec, const RffOptions& opts);
};

// (1/D_l) sum of feature products at bin `bin`; the Monte Carlo estimate of
// sinh(strength)/strength times the kernel value
std::complex<double> kernel_estimate(const FeatureBasis& basis, int bin, const Eigen::Vector3d& r,
                                     const Eigen::Vector3d& rp);

// ----- fully known responses at fixed points, solved per bin in the primal

struct RffStationaryModel {
  FeatureBasis basis;
  Eigen::MatrixXcd coefficients;  // max_count x num_bins, zero padded
  double lambda = 0.0;
};

RffStationaryModel fit_stationary_rff(const FeatureBasis& basis,
                                      const Eigen::Matrix3Xd& positions,
                                      const Eigen::MatrixXd& responses, double lambda);

FreqSequence reconstruct_bins(const RffStationaryModel& model, const Eigen::Vector3d& r);
TimeSequence reconstruct(const RffStationaryModel& model, const Eigen::Vector3d& r);
Eigen::MatrixXd reconstruct_grid(const RffStationaryModel& model, const Eigen::Matrix3Xd& points);

// ----- single moving microphone, solved in the primal over all bins at once
//
// Row n of the feature matrix holds, for each feature d, the real separated
// coordinates of conj(z_d(r_n)) phi(n), so V Vt equals the Gram matrix of
// kernel_estimate and ridge regression on V matches the kernel fit.

Eigen::MatrixXd feature_matrix(const FeatureBasis& basis, const MovingMeasurement& m);

struct RffMovingModel {
  FeatureBasis basis;
  Eigen::VectorXd coefficients;  // window * max_count, feature-major blocks
  double lambda = 0.0;
};

RffMovingModel fit_moving_rff(const FeatureBasis& basis, const MovingMeasurement& m,
                              double lambda);

FreqSequence reconstruct_bins(const RffMovingModel& model, const Eigen::Vector3d& r);
TimeSequence reconstruct(const RffMovingModel& model, const Eigen::Vector3d& r);
Eigen::MatrixXd reconstruct_grid(const RffMovingModel& model, const Eigen::Matrix3Xd& points);

}  // namespace soundfield
