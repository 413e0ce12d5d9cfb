#pragma once

#include <Eigen/Dense>

#include "soundfield/kernels.hpp"
#include "soundfield/spectral.hpp"

namespace soundfield {

// Ridge regression against fully known responses at a handful of fixed points,
// solved independently per frequency bin. The reference point methods
// (nearest neighbour aside) reduce to this.
struct StationaryModel {
  KernelSpec kernel;
  Eigen::Matrix3Xd positions;          // 3 x M
  Eigen::MatrixXcd coefficients;       // num_bins x M
  double lambda = 0.0;
};

// `responses` holds one window-length impulse response per column, matching
// `positions`. lambda is applied per bin without rescaling.
StationaryModel fit_stationary(const KernelSpec& spec, const Eigen::Matrix3Xd& positions,
                               const Eigen::MatrixXd& responses, double lambda);

FreqSequence reconstruct_bins(const StationaryModel& model, const Eigen::Vector3d& r);
TimeSequence reconstruct(const StationaryModel& model, const Eigen::Vector3d& r);
Eigen::MatrixXd reconstruct_grid(const StationaryModel& model, const Eigen::Matrix3Xd& points);

}  // namespace soundfield
