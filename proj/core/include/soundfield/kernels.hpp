#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "soundfield/spectral.hpp"

namespace soundfield {

/// One term of a von Mises-Fisher directional weighting: unit axis and
/// nonnegative concentration. strength = 0 degenerates to the diffuse case.
struct DirectionalWeight {
  Eigen::Vector3d direction;
  double strength = 0.0;
};

/// Frequency-bin kernel family for sound fields sampled at `sample_rate` with
/// DFT length `length`. An empty weighting table selects the diffuse kernel on
/// every bin; otherwise the table holds one directional weight per bin and the
/// Nyquist entry (even length) must have zero strength.
struct KernelSpec {
  int length = 0;
  double sample_rate = 0.0;
  double sound_speed = 343.0;
  std::vector<DirectionalWeight> weighting;

  static KernelSpec diffuse(int length, double sample_rate, double sound_speed = 343.0);
  /// Broadcasts one directional weight to all bins (zero strength at Nyquist).
  static KernelSpec directional(int length, double sample_rate, const Eigen::Vector3d& direction,
                                double strength, double sound_speed = 343.0);
  static KernelSpec directional_table(int length, double sample_rate,
                                      std::vector<DirectionalWeight> table,
                                      double sound_speed = 343.0);

  bool is_diffuse() const { return weighting.empty(); }
  /// True when every strength is zero (or the table is empty).
  bool reduces_to_diffuse() const;
  int num_bins() const { return length / 2 + 1; }
  bool has_nyquist() const { return length >= 2 && length % 2 == 0; }
  bool is_nyquist_bin(int bin) const { return has_nyquist() && bin == length / 2; }
  double omega(int bin) const;
  double wavenumber(int bin) const { return omega(bin) / sound_speed; }
  const DirectionalWeight& weight_at(int bin) const;

  void validate() const;
};

/// sin(z)/z, even and entire in z^2; series below |z| = 1e-4.
double spherical_j0(double z);
std::complex<double> spherical_j0(const std::complex<double>& z);
/// Same function evaluated from z^2, avoiding the square root near zero.
std::complex<double> spherical_j0_sq(const std::complex<double>& z_squared);

/// Diffuse-field kernel at one bin: j0(omega*|r - r2|/c), with the Nyquist bin
/// symmetrized to (j0(omega*|r - r2|/c) + j0(omega*|r + r2|/c))/2.
double kappa_diffuse(const KernelSpec& spec, int bin, const Eigen::Vector3d& r,
                     const Eigen::Vector3d& r2);

/// von Mises-Fisher weighted kernel j0(sqrt(xi^T xi)) with
/// xi = (omega/c)(r - r2) + i*strength*direction. Reduces exactly to
/// kappa_diffuse when the bin's strength is zero.
std::complex<double> kappa_vmf(const KernelSpec& spec, int bin, const Eigen::Vector3d& r,
                               const Eigen::Vector3d& r2);

/// Per-bin kernel with the weighting dispatch applied.
std::complex<double> kernel_value(const KernelSpec& spec, int bin, const Eigen::Vector3d& r,
                                  const Eigen::Vector3d& r2);

/// Plane-wave transfer entry: exp(-i*(omega/c)*r.d) below Nyquist and
/// cos((omega/c)*r.d) at the Nyquist bin. Satisfies conj(E(r,d)) = E(-r,d).
std::complex<double> plane_wave_entry(const KernelSpec& spec, int bin, const Eigen::Vector3d& r,
                                      const Eigen::Vector3d& direction);

/// All kernel bins for one pair of positions, as a half spectrum.
FreqSequence gamma_diag(const KernelSpec& spec, const Eigen::Vector3d& r,
                        const Eigen::Vector3d& r2);

}  // namespace soundfield
