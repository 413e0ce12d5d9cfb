#pragma once

#include <complex>

#include <Eigen/Dense>

namespace soundfield {

using TimeSequence = Eigen::VectorXd;

/// Half spectrum of a real sequence of length parent_length, produced by the
/// positive-exponent forward transform (Fx)_l = sum_n exp(+2*pi*i*n*l/L) x_n
/// for l = 0..floor(L/2). Bin 0 is real; so is the Nyquist bin when L is even.
struct FreqSequence {
  Eigen::VectorXcd bins;
  int parent_length = 0;

  int num_bins() const { return static_cast<int>(bins.size()); }
  bool has_nyquist() const { return parent_length >= 2 && parent_length % 2 == 0; }
  int nyquist_bin() const { return parent_length / 2; }

  /// Throws std::invalid_argument when sizes are inconsistent or the reality
  /// constraints at bin 0 / Nyquist are violated beyond tol (relative).
  void require_valid(double tol = 1e-12) const;
};

/// Quadrature weights c_l of the half-spectrum inner product: 2/L for interior
/// bins, 1/L at bin 0 and (even L) at Nyquist. With these weights the forward
/// transform is unitary.
struct DftWeights {
  Eigen::VectorXd values;
  static DftWeights for_length(int length);
};

double dft_weight(int length, int bin);

FreqSequence dft_forward(const TimeSequence& x);
TimeSequence dft_inverse(const FreqSequence& v);

/// Weighted inner product Re[v^H C u] of two half spectra with equal parent
/// length. Equals the Euclidean inner product of the parent sequences.
double inner_product_freq(const FreqSequence& u, const FreqSequence& v);

/// Linear isometry from the half spectrum onto R^L: scaled real parts of all
/// bins followed by scaled imaginary parts of the interior bins.
Eigen::VectorXd separate(const FreqSequence& v);
FreqSequence separate_inverse(const Eigen::VectorXd& s, int parent_length);

/// Spectra of the sliding length-`window` history buffers of a source signal.
/// `signal` carries window-1 samples of pre-roll, so its length must be
/// count + window - 1. Column n holds the forward transform of the buffer
/// (phi(n), phi(n-1), ..., phi(n-window+1)).
Eigen::MatrixXcd window_spectra(const Eigen::VectorXd& signal, int window, int count);

}  // namespace soundfield
