#include "soundfield/stationary.hpp"

#include <stdexcept>
#include <string>

#include "refined_solve.hpp"

namespace soundfield {

StationaryModel fit_stationary(const KernelSpec& spec, const Eigen::Matrix3Xd& positions,
                               const Eigen::MatrixXd& responses, double lambda) {
  spec.validate();
  const int m = static_cast<int>(positions.cols());
  if (m < 1) throw std::invalid_argument("fit_stationary: no measurement points");
  if (responses.cols() != m)
    throw std::invalid_argument("fit_stationary: responses and positions disagree in count");
  if (responses.rows() != spec.length)
    throw std::invalid_argument("fit_stationary: responses must be window-length");
  if (lambda < 0.0) throw std::invalid_argument("fit_stationary: lambda must be >= 0");

  const int bins = spec.num_bins();
  Eigen::MatrixXcd targets(bins, m);
  for (int j = 0; j < m; ++j) targets.col(j) = dft_forward(responses.col(j)).bins;

  StationaryModel model;
  model.kernel = spec;
  model.positions = positions;
  model.lambda = lambda;
  model.coefficients.resize(bins, m);

  Eigen::MatrixXcd gram(m, m);
  for (int l = 0; l < bins; ++l) {
    for (int i = 0; i < m; ++i) {
      for (int j = i; j < m; ++j) {
        gram(i, j) = kernel_value(spec, l, positions.col(i), positions.col(j));
        gram(j, i) = std::conj(gram(i, j));
      }
      gram(i, i) += lambda;
    }
    const Eigen::VectorXcd rhs = targets.row(l).transpose();
    const Eigen::VectorXcd sol = detail::refined_hermitian_solve(
        gram, rhs, lambda, "fit_stationary: bin " + std::to_string(l));
    model.coefficients.row(l) = sol.transpose();
  }
  return model;
}

FreqSequence reconstruct_bins(const StationaryModel& model, const Eigen::Vector3d& r) {
  const KernelSpec& spec = model.kernel;
  const int bins = spec.num_bins();
  const int m = static_cast<int>(model.positions.cols());
  FreqSequence out;
  out.parent_length = spec.length;
  out.bins = Eigen::VectorXcd::Zero(bins);
  for (int l = 0; l < bins; ++l) {
    std::complex<double> acc = 0.0;
    for (int j = 0; j < m; ++j)
      acc += kernel_value(spec, l, r, model.positions.col(j)) * model.coefficients(l, j);
    out.bins[l] = acc;
  }
  out.bins[0] = out.bins[0].real();
  if (spec.has_nyquist()) out.bins[bins - 1] = out.bins[bins - 1].real();
  return out;
}

TimeSequence reconstruct(const StationaryModel& model, const Eigen::Vector3d& r) {
  return dft_inverse(reconstruct_bins(model, r));
}

Eigen::MatrixXd reconstruct_grid(const StationaryModel& model, const Eigen::Matrix3Xd& points) {
  const int count = static_cast<int>(points.cols());
  Eigen::MatrixXd out(model.kernel.length, count);
  for (int e = 0; e < count; ++e) out.col(e) = reconstruct(model, points.col(e));
  return out;
}

}  // namespace soundfield
