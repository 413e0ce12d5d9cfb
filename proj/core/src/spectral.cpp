#include "soundfield/spectral.hpp"

#include <stdexcept>
#include <string>

#include <unsupported/Eigen/FFT>

namespace soundfield {

namespace {

int half_spectrum_size(int length) { return length / 2 + 1; }

void require_length(int length) {
  if (length < 1) throw std::invalid_argument("spectral: sequence length must be >= 1");
}

}  // namespace

void FreqSequence::require_valid(double tol) const {
  require_length(parent_length);
  if (num_bins() != half_spectrum_size(parent_length))
    throw std::invalid_argument("FreqSequence: expected " +
                                std::to_string(half_spectrum_size(parent_length)) +
                                " bins for parent length " + std::to_string(parent_length));
  const double scale = std::max(1.0, bins.cwiseAbs().maxCoeff());
  if (std::abs(bins[0].imag()) > tol * scale)
    throw std::invalid_argument("FreqSequence: bin 0 must be real");
  if (has_nyquist() && std::abs(bins[nyquist_bin()].imag()) > tol * scale)
    throw std::invalid_argument("FreqSequence: Nyquist bin must be real");
}

double dft_weight(int length, int bin) {
  require_length(length);
  if (bin < 0 || bin >= half_spectrum_size(length))
    throw std::invalid_argument("dft_weight: bin out of range");
  const bool boundary = bin == 0 || (length % 2 == 0 && bin == length / 2);
  return boundary ? 1.0 / length : 2.0 / length;
}

DftWeights DftWeights::for_length(int length) {
  require_length(length);
  DftWeights w;
  w.values.resize(half_spectrum_size(length));
  for (int l = 0; l < w.values.size(); ++l) w.values[l] = dft_weight(length, l);
  return w;
}

FreqSequence dft_forward(const TimeSequence& x) {
  const int length = static_cast<int>(x.size());
  require_length(length);
  FreqSequence out;
  out.parent_length = length;
  if (length == 1) {
    out.bins = Eigen::VectorXcd::Constant(1, x[0]);
    return out;
  }
  Eigen::VectorXcd full(length);
  {
    Eigen::VectorXcd in = x.cast<std::complex<double>>();
    Eigen::FFT<double> fft;
    fft.fwd(full, in);
  }
  // library forward uses exp(-2*pi*i*n*l/L); conjugate to the positive-exponent convention
  out.bins = full.head(half_spectrum_size(length)).conjugate();
  out.bins[0] = std::complex<double>(out.bins[0].real(), 0.0);  // exact for real input
  if (out.has_nyquist()) {
    const int ny = out.nyquist_bin();
    out.bins[ny] = std::complex<double>(out.bins[ny].real(), 0.0);
  }
  return out;
}

TimeSequence dft_inverse(const FreqSequence& v) {
  v.require_valid();
  const int length = v.parent_length;
  if (length == 1) return TimeSequence::Constant(1, v.bins[0].real());
  // rebuild the full spectrum in the library's convention (conjugate of ours)
  // and let the scaled inverse FFT realize Re[sum_l c_l exp(-2*pi*i*n*l/L) v_l]
  Eigen::VectorXcd full(length);
  full[0] = v.bins[0].real();
  const int half = length / 2;
  for (int l = 1; l <= half; ++l) {
    std::complex<double> b = v.bins[l];
    if (l == half && length % 2 == 0) b = b.real();
    full[l] = std::conj(b);
    if (length - l != l) full[length - l] = b;
  }
  Eigen::VectorXcd time(length);
  {
    Eigen::FFT<double> fft;
    fft.inv(time, full);
  }
  return time.real();
}

double inner_product_freq(const FreqSequence& u, const FreqSequence& v) {
  u.require_valid();
  v.require_valid();
  if (u.parent_length != v.parent_length)
    throw std::invalid_argument("inner_product_freq: parent lengths differ");
  double acc = 0.0;
  for (int l = 0; l < u.num_bins(); ++l) {
    const double c = dft_weight(u.parent_length, l);
    acc += c * (u.bins[l].real() * v.bins[l].real() + u.bins[l].imag() * v.bins[l].imag());
  }
  return acc;
}

Eigen::VectorXd separate(const FreqSequence& v) {
  v.require_valid();
  const int length = v.parent_length;
  const int nb = v.num_bins();
  Eigen::VectorXd s(length);
  int k = 0;
  for (int l = 0; l < nb; ++l) s[k++] = std::sqrt(dft_weight(length, l)) * v.bins[l].real();
  const int imag_end = v.has_nyquist() ? nb - 1 : nb;
  for (int l = 1; l < imag_end; ++l) s[k++] = std::sqrt(dft_weight(length, l)) * v.bins[l].imag();
  return s;
}

FreqSequence separate_inverse(const Eigen::VectorXd& s, int parent_length) {
  require_length(parent_length);
  if (s.size() != parent_length)
    throw std::invalid_argument("separate_inverse: coordinate vector must have the parent length");
  FreqSequence v;
  v.parent_length = parent_length;
  const int nb = half_spectrum_size(parent_length);
  v.bins.resize(nb);
  const int imag_end = (parent_length % 2 == 0 && parent_length >= 2) ? nb - 1 : nb;
  for (int l = 0; l < nb; ++l) {
    const double w = std::sqrt(dft_weight(parent_length, l));
    const double re = s[l] / w;
    const double im = (l >= 1 && l < imag_end) ? s[nb + l - 1] / w : 0.0;
    v.bins[l] = std::complex<double>(re, im);
  }
  return v;
}

Eigen::MatrixXcd window_spectra(const Eigen::VectorXd& signal, int window, int count) {
  require_length(window);
  if (count < 1) throw std::invalid_argument("window_spectra: count must be >= 1");
  if (signal.size() != count + window - 1)
    throw std::invalid_argument("window_spectra: signal must carry window-1 samples of pre-roll");
  const int nb = half_spectrum_size(window);
  Eigen::MatrixXcd out(nb, count);
  Eigen::FFT<double> fft;
  Eigen::VectorXcd buf(window), full(window);
  for (int n = 0; n < count; ++n) {
    for (int k = 0; k < window; ++k) buf[k] = signal[n + window - 1 - k];
    if (window == 1) {
      out(0, n) = buf[0];
      continue;
    }
    fft.fwd(full, buf);
    for (int l = 0; l < nb; ++l) out(l, n) = std::conj(full[l]);
    out(0, n) = out(0, n).real();
    if (window % 2 == 0) out(nb - 1, n) = out(nb - 1, n).real();
  }
  return out;
}

}  // namespace soundfield
