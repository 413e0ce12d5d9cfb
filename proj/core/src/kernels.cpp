#include "soundfield/kernels.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace soundfield {

namespace {

void require_spec_basics(int length, double sample_rate, double sound_speed) {
  if (length < 1) throw std::invalid_argument("KernelSpec: length must be >= 1");
  if (!(sample_rate > 0.0)) throw std::invalid_argument("KernelSpec: sample_rate must be > 0");
  if (!(sound_speed > 0.0)) throw std::invalid_argument("KernelSpec: sound_speed must be > 0");
}

void require_unit(const Eigen::Vector3d& v) {
  if (std::abs(v.norm() - 1.0) > 1e-12)
    throw std::invalid_argument("DirectionalWeight: direction must be a unit vector");
}

}  // namespace

KernelSpec KernelSpec::diffuse(int length, double sample_rate, double sound_speed) {
  KernelSpec spec{length, sample_rate, sound_speed, {}};
  spec.validate();
  return spec;
}

KernelSpec KernelSpec::directional(int length, double sample_rate,
                                   const Eigen::Vector3d& direction, double strength,
                                   double sound_speed) {
  require_spec_basics(length, sample_rate, sound_speed);
  const double norm = direction.norm();
  if (!(norm > 0.0)) throw std::invalid_argument("KernelSpec: direction must be nonzero");
  if (strength < 0.0) throw std::invalid_argument("KernelSpec: strength must be >= 0");
  KernelSpec spec{length, sample_rate, sound_speed, {}};
  spec.weighting.assign(spec.num_bins(), DirectionalWeight{direction / norm, strength});
  if (spec.has_nyquist()) spec.weighting.back().strength = 0.0;
  spec.validate();
  return spec;
}

KernelSpec KernelSpec::directional_table(int length, double sample_rate,
                                         std::vector<DirectionalWeight> table,
                                         double sound_speed) {
  KernelSpec spec{length, sample_rate, sound_speed, std::move(table)};
  spec.validate();
  return spec;
}

bool KernelSpec::reduces_to_diffuse() const {
  for (const auto& w : weighting)
    if (w.strength != 0.0) return false;
  return true;
}

double KernelSpec::omega(int bin) const {
  return 2.0 * std::numbers::pi * sample_rate * bin / length;
}

const DirectionalWeight& KernelSpec::weight_at(int bin) const {
  if (is_diffuse()) throw std::logic_error("KernelSpec: diffuse spec has no weighting table");
  return weighting.at(static_cast<size_t>(bin));
}

void KernelSpec::validate() const {
  require_spec_basics(length, sample_rate, sound_speed);
  if (weighting.empty()) return;
  if (static_cast<int>(weighting.size()) != num_bins())
    throw std::invalid_argument("KernelSpec: weighting table must cover all " +
                                std::to_string(num_bins()) + " bins");
  for (const auto& w : weighting) {
    require_unit(w.direction);
    if (w.strength < 0.0) throw std::invalid_argument("KernelSpec: strength must be >= 0");
  }
  if (has_nyquist() && weighting.back().strength != 0.0)
    throw std::invalid_argument("KernelSpec: Nyquist bin requires zero strength");
}

double spherical_j0(double z) {
  const double z2 = z * z;
  if (std::abs(z) < 1e-4) return 1.0 - z2 / 6.0 + z2 * z2 / 120.0;
  return std::sin(z) / z;
}

std::complex<double> spherical_j0(const std::complex<double>& z) {
  return spherical_j0_sq(z * z);
}

std::complex<double> spherical_j0_sq(const std::complex<double>& z_squared) {
  if (std::abs(z_squared) < 1e-8)
    return 1.0 - z_squared / 6.0 + z_squared * z_squared / 120.0;
  const std::complex<double> z = std::sqrt(z_squared);
  return std::sin(z) / z;
}

double kappa_diffuse(const KernelSpec& spec, int bin, const Eigen::Vector3d& r,
                     const Eigen::Vector3d& r2) {
  const double k = spec.wavenumber(bin);
  const double direct = spherical_j0(k * (r - r2).norm());
  if (!spec.is_nyquist_bin(bin)) return direct;
  return 0.5 * (direct + spherical_j0(k * (r + r2).norm()));
}

std::complex<double> kappa_vmf(const KernelSpec& spec, int bin, const Eigen::Vector3d& r,
                               const Eigen::Vector3d& r2) {
  const DirectionalWeight& w = spec.weight_at(bin);
  if (w.strength == 0.0 || spec.is_nyquist_bin(bin)) return kappa_diffuse(spec, bin, r, r2);
  const double k = spec.wavenumber(bin);
  const Eigen::Vector3d delta = r - r2;
  // xi = k*delta + i*strength*direction; j0 evaluated from xi^T xi
  const std::complex<double> xi_sq(k * k * delta.squaredNorm() - w.strength * w.strength,
                                   2.0 * w.strength * k * delta.dot(w.direction));
  return spherical_j0_sq(xi_sq);
}

std::complex<double> kernel_value(const KernelSpec& spec, int bin, const Eigen::Vector3d& r,
                                  const Eigen::Vector3d& r2) {
  if (spec.is_diffuse()) return kappa_diffuse(spec, bin, r, r2);
  return kappa_vmf(spec, bin, r, r2);
}

std::complex<double> plane_wave_entry(const KernelSpec& spec, int bin, const Eigen::Vector3d& r,
                                      const Eigen::Vector3d& direction) {
  const double phase = spec.wavenumber(bin) * r.dot(direction);
  if (spec.is_nyquist_bin(bin)) return std::cos(phase);
  return std::exp(std::complex<double>(0.0, -phase));
}

FreqSequence gamma_diag(const KernelSpec& spec, const Eigen::Vector3d& r,
                        const Eigen::Vector3d& r2) {
  spec.validate();
  FreqSequence out;
  out.parent_length = spec.length;
  out.bins.resize(spec.num_bins());
  for (int l = 0; l < spec.num_bins(); ++l) out.bins[l] = kernel_value(spec, l, r, r2);
  // bin 0 and Nyquist are analytically real
  out.bins[0] = out.bins[0].real();
  if (out.has_nyquist()) out.bins[out.nyquist_bin()] = out.bins[out.nyquist_bin()].real();
  return out;
}

}  // namespace soundfield
