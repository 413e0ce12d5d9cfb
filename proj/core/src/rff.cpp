#include "soundfield/rff.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "refined_solve.hpp"
#include "soundfield/seeding.hpp"

namespace soundfield {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

Eigen::Matrix3Xd sample_directions(int count, const Eigen::Vector3d& e1, const Eigen::Vector3d& e2,
                                   const Eigen::Vector3d& pole, double strength,
                                   std::uint64_t seed) {
  if (count < 0) throw std::invalid_argument("direction sample count must be >= 0");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double tail = std::exp(-2.0 * strength);
  Eigen::Matrix3Xd out(3, count);
  for (int i = 0; i < count; ++i) {
    const double u = unit(rng);
    const double phi = kTwoPi * unit(rng);
    double w;
    if (strength < 1e-12)
      w = 2.0 * u - 1.0;
    else
      w = 1.0 + std::log(u + (1.0 - u) * tail) / strength;
    w = std::clamp(w, -1.0, 1.0);
    const double s = std::sqrt(std::max(0.0, 1.0 - w * w));
    out.col(i) = s * std::cos(phi) * e1 + s * std::sin(phi) * e2 + w * pole;
  }
  return out;
}

void require_compatible(const KernelSpec& spec, const MovingMeasurement& m) {
  if (spec.length != m.window)
    throw std::invalid_argument("rff: kernel length and measurement window differ");
  if (spec.sample_rate != m.sample_rate)
    throw std::invalid_argument("rff: kernel and measurement sample rates differ");
}

void check_bin(const FeatureBasis& basis, int bin) {
  if (bin < 0 || bin >= basis.num_bins())
    throw std::invalid_argument("rff: bin index out of range");
}

}  // namespace

Eigen::Matrix3Xd uniform_directions(int count, std::uint64_t seed) {
  return sample_directions(count, Eigen::Vector3d::UnitX(), Eigen::Vector3d::UnitY(),
                           Eigen::Vector3d::UnitZ(), 0.0, seed);
}

Eigen::Matrix3Xd vmf_directions(int count, const Eigen::Vector3d& mean, double strength,
                                std::uint64_t seed) {
  if (!(mean.norm() > 0.0)) throw std::invalid_argument("vmf_directions: zero mean direction");
  if (strength < 0.0) throw std::invalid_argument("vmf_directions: strength must be >= 0");
  const Eigen::Vector3d pole = mean.normalized();
  const Eigen::Vector3d helper =
      std::abs(pole.x()) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
  const Eigen::Vector3d e1 = pole.cross(helper).normalized();
  const Eigen::Vector3d e2 = pole.cross(e1);
  return sample_directions(count, e1, e2, pole, strength, seed);
}

FeatureBasis FeatureBasis::build(const KernelSpec& spec, const RffOptions& opts) {
  spec.validate();
  const int bins = spec.num_bins();

  FeatureBasis basis;
  basis.kernel = spec;
  basis.seed = opts.seed;
  if (opts.per_bin.size() > 0) {
    if (opts.per_bin.size() != bins)
      throw std::invalid_argument("FeatureBasis: per_bin must have one entry per bin");
    if ((opts.per_bin.array() < 0).any())
      throw std::invalid_argument("FeatureBasis: per-bin feature counts must be >= 0");
    basis.counts = opts.per_bin;
  } else {
    if (opts.features < 1) throw std::invalid_argument("FeatureBasis: features must be >= 1");
    basis.counts = Eigen::VectorXi::Constant(bins, opts.features);
  }
  if (basis.counts.maxCoeff() < 1)
    throw std::invalid_argument("FeatureBasis: at least one bin needs a feature");

  basis.directions.resize(bins);

  // every bin draws its own table (the seed is salted by the bin index) so
  // the per-bin estimation errors are independent and broadband sums over
  // the bins average them out
  const bool even = spec.has_nyquist();
  for (int l = 0; l < bins; ++l) {
    const std::uint64_t bin_seed = derive_seed(opts.seed, l);
    const double strength = spec.is_diffuse() ? 0.0 : spec.weighting[l].strength;
    if (strength == 0.0 || (even && l == bins - 1))
      basis.directions[l] = uniform_directions(basis.counts[l], bin_seed);
    else
      basis.directions[l] =
          vmf_directions(basis.counts[l], spec.weighting[l].direction, strength, bin_seed);
  }
  return basis;
}

std::complex<double> kernel_estimate(const FeatureBasis& basis, int bin, const Eigen::Vector3d& r,
                                     const Eigen::Vector3d& rp) {
  check_bin(basis, bin);
  const int d_count = basis.counts[bin];
  if (d_count == 0) return 0.0;
  const Eigen::Matrix3Xd& dirs = basis.directions[bin];
  std::complex<double> acc = 0.0;
  for (int d = 0; d < d_count; ++d)
    acc += plane_wave_entry(basis.kernel, bin, r, dirs.col(d)) *
           std::conj(plane_wave_entry(basis.kernel, bin, rp, dirs.col(d)));
  return acc / static_cast<double>(d_count);
}

RffStationaryModel fit_stationary_rff(const FeatureBasis& basis,
                                      const Eigen::Matrix3Xd& positions,
                                      const Eigen::MatrixXd& responses, double lambda) {
  const KernelSpec& spec = basis.kernel;
  const int m = static_cast<int>(positions.cols());
  if (m < 1) throw std::invalid_argument("fit_stationary_rff: no measurement points");
  if (responses.cols() != m)
    throw std::invalid_argument("fit_stationary_rff: responses and positions disagree in count");
  if (responses.rows() != spec.length)
    throw std::invalid_argument("fit_stationary_rff: responses must be window-length");
  if (lambda < 0.0) throw std::invalid_argument("fit_stationary_rff: lambda must be >= 0");

  const int bins = spec.num_bins();
  RffStationaryModel model;
  model.basis = basis;
  model.lambda = lambda;
  model.coefficients = Eigen::MatrixXcd::Zero(basis.max_count(), bins);

  Eigen::MatrixXcd targets(bins, m);
  for (int j = 0; j < m; ++j) targets.col(j) = dft_forward(responses.col(j)).bins;

  for (int l = 0; l < bins; ++l) {
    const int d_count = basis.counts[l];
    if (d_count == 0) continue;
    const double scale = 1.0 / std::sqrt(static_cast<double>(d_count));
    Eigen::MatrixXcd z(m, d_count);
    for (int j = 0; j < m; ++j)
      for (int d = 0; d < d_count; ++d)
        z(j, d) = scale * plane_wave_entry(spec, l, positions.col(j), basis.directions[l].col(d));
    Eigen::MatrixXcd gram = z.adjoint() * z;
    gram.diagonal().array() += lambda;
    const Eigen::VectorXcd rhs = z.adjoint() * targets.row(l).transpose();
    model.coefficients.col(l).head(d_count) = detail::refined_hermitian_solve(
        gram, rhs, lambda, "fit_stationary_rff: bin " + std::to_string(l));
  }
  return model;
}

FreqSequence reconstruct_bins(const RffStationaryModel& model, const Eigen::Vector3d& r) {
  const KernelSpec& spec = model.basis.kernel;
  const int bins = spec.num_bins();
  FreqSequence out;
  out.parent_length = spec.length;
  out.bins = Eigen::VectorXcd::Zero(bins);
  for (int l = 0; l < bins; ++l) {
    const int d_count = model.basis.counts[l];
    if (d_count == 0) continue;
    const double scale = 1.0 / std::sqrt(static_cast<double>(d_count));
    std::complex<double> acc = 0.0;
    for (int d = 0; d < d_count; ++d)
      acc += plane_wave_entry(spec, l, r, model.basis.directions[l].col(d)) *
             model.coefficients(d, l);
    out.bins[l] = scale * acc;
  }
  out.bins[0] = out.bins[0].real();
  if (spec.has_nyquist()) out.bins[bins - 1] = out.bins[bins - 1].real();
  return out;
}

TimeSequence reconstruct(const RffStationaryModel& model, const Eigen::Vector3d& r) {
  return dft_inverse(reconstruct_bins(model, r));
}

Eigen::MatrixXd reconstruct_grid(const RffStationaryModel& model, const Eigen::Matrix3Xd& points) {
  const int count = static_cast<int>(points.cols());
  Eigen::MatrixXd out(model.basis.kernel.length, count);
  for (int e = 0; e < count; ++e) out.col(e) = reconstruct(model, points.col(e));
  return out;
}

Eigen::MatrixXd feature_matrix(const FeatureBasis& basis, const MovingMeasurement& m) {
  m.validate(false);
  require_compatible(basis.kernel, m);
  const KernelSpec& spec = basis.kernel;
  const int n = m.count();
  const int bins = spec.num_bins();
  const int length = spec.length;
  const int dmax = basis.max_count();
  const Eigen::MatrixXcd spectra = m.source_spectra();

  Eigen::VectorXd scales(bins);
  for (int l = 0; l < bins; ++l)
    scales[l] = basis.counts[l] > 0 ? 1.0 / std::sqrt(static_cast<double>(basis.counts[l])) : 0.0;

  Eigen::MatrixXd v(n, length * dmax);
#pragma omp parallel for schedule(static)
  for (int row = 0; row < n; ++row) {
    FreqSequence slot;
    slot.parent_length = length;
    slot.bins.resize(bins);
    for (int d = 0; d < dmax; ++d) {
      for (int l = 0; l < bins; ++l) {
        if (d < basis.counts[l])
          slot.bins[l] = scales[l] *
                         std::conj(plane_wave_entry(spec, l, m.positions.col(row),
                                                    basis.directions[l].col(d))) *
                         spectra(l, row);
        else
          slot.bins[l] = 0.0;
      }
      v.row(row).segment(d * length, length) = separate(slot);
    }
  }
  return v;
}

RffMovingModel fit_moving_rff(const FeatureBasis& basis, const MovingMeasurement& m,
                              double lambda) {
  m.validate(true);
  require_compatible(basis.kernel, m);
  if (lambda < 0.0) throw std::invalid_argument("fit_moving_rff: lambda must be >= 0");

  const Eigen::MatrixXd v = feature_matrix(basis, m);
  const int p = static_cast<int>(v.cols());

  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(p, p);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(v.transpose());
  gram.diagonal().array() += lambda;
  gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
  const Eigen::VectorXd rhs = v.transpose() * m.pressure;

  RffMovingModel model;
  model.basis = basis;
  model.lambda = lambda;
  model.coefficients =
      detail::refined_hermitian_solve(gram, rhs, lambda, "fit_moving_rff: normal equations");
  return model;
}

FreqSequence reconstruct_bins(const RffMovingModel& model, const Eigen::Vector3d& r) {
  const KernelSpec& spec = model.basis.kernel;
  const int bins = spec.num_bins();
  const int length = spec.length;
  const int dmax = model.basis.max_count();

  FreqSequence out;
  out.parent_length = length;
  out.bins = Eigen::VectorXcd::Zero(bins);
  for (int d = 0; d < dmax; ++d) {
    const FreqSequence block =
        separate_inverse(model.coefficients.segment(d * length, length), length);
    for (int l = 0; l < bins; ++l) {
      if (d >= model.basis.counts[l]) continue;
      const double scale = 1.0 / std::sqrt(static_cast<double>(model.basis.counts[l]));
      out.bins[l] += scale * plane_wave_entry(spec, l, r, model.basis.directions[l].col(d)) *
                     block.bins[l];
    }
  }
  out.bins[0] = out.bins[0].real();
  if (spec.has_nyquist()) out.bins[bins - 1] = out.bins[bins - 1].real();
  return out;
}

TimeSequence reconstruct(const RffMovingModel& model, const Eigen::Vector3d& r) {
  return dft_inverse(reconstruct_bins(model, r));
}

Eigen::MatrixXd reconstruct_grid(const RffMovingModel& model, const Eigen::Matrix3Xd& points) {
  const int count = static_cast<int>(points.cols());
  Eigen::MatrixXd out(model.basis.kernel.length, count);
#pragma omp parallel for schedule(dynamic)
  for (int e = 0; e < count; ++e) out.col(e) = reconstruct(model, points.col(e));
  return out;
}

}  // namespace soundfield
