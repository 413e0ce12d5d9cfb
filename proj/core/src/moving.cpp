#include "soundfield/moving.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "refined_solve.hpp"

namespace soundfield {

namespace {

void require_compatible(const KernelSpec& spec, const MovingMeasurement& m) {
  spec.validate();
  if (spec.length != m.window)
    throw std::invalid_argument("moving: kernel length and measurement window differ");
  if (spec.sample_rate != m.sample_rate)
    throw std::invalid_argument("moving: kernel and measurement sample rates differ");
}

// sin(z)/z evaluated from z^2 = (a, b) without std::complex overhead
inline void j0_sq_parts(double a, double b, double& jr, double& ji) {
  const double h = std::hypot(a, b);
  if (h < 1e-8) {
    jr = 1.0 - a / 6.0 + (a * a - b * b) / 120.0;
    ji = -b / 6.0 + a * b / 60.0;
    return;
  }
  const double x = std::sqrt(0.5 * (h + a));
  const double y = std::copysign(std::sqrt(0.5 * (h - a)), b);
  const double sr = std::sin(x) * std::cosh(y);
  const double si = std::cos(x) * std::sinh(y);
  jr = (sr * x + si * y) / h;
  ji = (si * x - sr * y) / h;
}

inline double j0_real(double x) {
  if (std::abs(x) < 1e-4) {
    const double x2 = x * x;
    return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
  }
  return std::sin(x) / x;
}

// K(n,m) for the diffuse kernel; ar/ai and br/bi are the window spectra of
// samples n and m, sines of l*theta run on a rotation recurrence
double entry_diffuse(const Eigen::VectorXd& w, int bins, bool even, double theta,
                     double nyquist_sum_arg, const double* ar, const double* ai, const double* br,
                     const double* bi) {
  double acc = w[0] * ar[0] * br[0];
  const double c = std::cos(theta), s = std::sin(theta);
  double rc = 1.0, rs = 0.0;
  const int last = bins - 1;
  for (int l = 1; l < bins; ++l) {
    const double t = rc;
    rc = rc * c - rs * s;
    rs = rs * c + t * s;
    const double x = l * theta;
    double kappa = x < 1e-4 ? 1.0 - x * x / 6.0 : rs / x;
    if (even && l == last) kappa = 0.5 * (kappa + j0_real(nyquist_sum_arg));
    acc += w[l] * kappa * (ar[l] * br[l] + ai[l] * bi[l]);
  }
  return acc;
}

// K(n,m) for the directionally weighted kernel
double entry_weighted(const KernelSpec& spec, const Eigen::VectorXd& w, int bins, bool even,
                      double k1, const Eigen::Vector3d& delta, double dist_sum, const double* ar,
                      const double* ai, const double* br, const double* bi) {
  const double d2 = delta.squaredNorm();
  const int last = bins - 1;
  double acc = 0.0;
  for (int l = 0; l < bins; ++l) {
    const double zr = ar[l] * br[l] + ai[l] * bi[l];
    const double zi = ar[l] * bi[l] - ai[l] * br[l];
    const double kl = k1 * l;
    const DirectionalWeight& dw = spec.weighting[l];
    double jr, ji;
    if (even && l == last) {
      jr = 0.5 * (j0_real(kl * std::sqrt(d2)) + j0_real(kl * dist_sum));
      ji = 0.0;
    } else if (dw.strength == 0.0) {
      jr = j0_real(kl * std::sqrt(d2));
      ji = 0.0;
    } else {
      j0_sq_parts(kl * kl * d2 - dw.strength * dw.strength,
                  2.0 * dw.strength * kl * delta.dot(dw.direction), jr, ji);
    }
    acc += w[l] * (jr * zr - ji * zi);
  }
  return acc;
}

Eigen::MatrixXd assemble_gram(const KernelSpec& spec, const Eigen::Matrix3Xd& positions,
                              const Eigen::MatrixXcd& spectra) {
  const int n = static_cast<int>(positions.cols());
  const int bins = spec.num_bins();
  const bool even = spec.has_nyquist();
  const double k1 = spec.length > 1 ? spec.wavenumber(1) : 0.0;
  const double kny = even ? spec.wavenumber(spec.length / 2) : 0.0;
  const Eigen::VectorXd w = DftWeights::for_length(spec.length).values;
  const Eigen::MatrixXd phir = spectra.real();
  const Eigen::MatrixXd phii = spectra.imag();
  const bool diffuse = spec.is_diffuse() || spec.reduces_to_diffuse();

  Eigen::MatrixXd gram(n, n);
#pragma omp parallel for schedule(dynamic, 16)
  for (int i = 0; i < n; ++i) {
    const double* ar = phir.col(i).data();
    const double* ai = phii.col(i).data();
    for (int j = i; j < n; ++j) {
      const double* br = phir.col(j).data();
      const double* bi = phii.col(j).data();
      const Eigen::Vector3d delta = positions.col(i) - positions.col(j);
      const double dist_sum = even ? (positions.col(i) + positions.col(j)).norm() : 0.0;
      double v;
      if (diffuse)
        v = entry_diffuse(w, bins, even, k1 * delta.norm(), kny * dist_sum, ar, ai, br, bi);
      else
        v = entry_weighted(spec, w, bins, even, k1, delta, dist_sum, ar, ai, br, bi);
      gram(i, j) = v;
    }
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) gram(j, i) = gram(i, j);
  return gram;
}

// y = (K + lambda I) v with Gram rows streamed, never materialized
Eigen::VectorXd gram_matvec(const KernelSpec& spec, const Eigen::Matrix3Xd& positions,
                            const Eigen::MatrixXd& phir, const Eigen::MatrixXd& phii,
                            const Eigen::VectorXd& w, double lambda, const Eigen::VectorXd& v) {
  const int n = static_cast<int>(positions.cols());
  const int bins = spec.num_bins();
  const bool even = spec.has_nyquist();
  const double k1 = spec.length > 1 ? spec.wavenumber(1) : 0.0;
  const double kny = even ? spec.wavenumber(spec.length / 2) : 0.0;
  const bool diffuse = spec.is_diffuse() || spec.reduces_to_diffuse();
  Eigen::VectorXd y = lambda * v;
  for (int i = 0; i < n; ++i) {
    const double* ar = phir.col(i).data();
    const double* ai = phii.col(i).data();
    for (int j = i; j < n; ++j) {
      const Eigen::Vector3d delta = positions.col(i) - positions.col(j);
      const double dist_sum = even ? (positions.col(i) + positions.col(j)).norm() : 0.0;
      double k;
      if (diffuse)
        k = entry_diffuse(w, bins, even, k1 * delta.norm(), kny * dist_sum, ar, ai,
                          phir.col(j).data(), phii.col(j).data());
      else
        k = entry_weighted(spec, w, bins, even, k1, delta, dist_sum, ar, ai, phir.col(j).data(),
                           phii.col(j).data());
      y[i] += k * v[j];
      if (j != i) y[j] += k * v[i];
    }
  }
  return y;
}

}  // namespace

double MovingMeasurement::source_at(int n) const {
  const int idx = n + window - 1;
  if (idx < 0 || idx >= source.size())
    throw std::out_of_range("MovingMeasurement: source index out of range");
  return source[idx];
}

TimeSequence MovingMeasurement::source_window(int n) const {
  TimeSequence buf(window);
  for (int k = 0; k < window; ++k) buf[k] = source_at(n - k);
  return buf;
}

Eigen::MatrixXcd MovingMeasurement::source_spectra() const {
  return window_spectra(source, window, count());
}

void MovingMeasurement::validate(bool require_pressure) const {
  if (window < 1) throw std::invalid_argument("MovingMeasurement: window must be >= 1");
  if (!(sample_rate > 0.0))
    throw std::invalid_argument("MovingMeasurement: sample_rate must be > 0");
  if (count() < 1) throw std::invalid_argument("MovingMeasurement: no samples");
  if (source.size() != count() + window - 1)
    throw std::invalid_argument(
        "MovingMeasurement: source must have count + window - 1 samples (pre-roll included)");
  if (require_pressure && pressure.size() != count())
    throw std::invalid_argument("MovingMeasurement: pressure and positions disagree in length");
  if (!require_pressure && pressure.size() != 0 && pressure.size() != count())
    throw std::invalid_argument("MovingMeasurement: pressure and positions disagree in length");
}

Eigen::VectorXd measure(const RirField& field, const MovingMeasurement& m) {
  m.validate(false);
  Eigen::VectorXd p(m.count());
  TimeSequence rir;
  for (int n = 0; n < m.count(); ++n) {
    if (n == 0 || m.positions.col(n) != m.positions.col(n - 1)) {
      rir = field(m.positions.col(n));
      if (rir.size() != m.window)
        throw std::invalid_argument("measure: field must return window-length responses");
    }
    double acc = 0.0;
    for (int k = 0; k < m.window; ++k) acc += rir[k] * m.source[n - k + m.window - 1];
    p[n] = acc;
  }
  return p;
}

Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const MovingMeasurement& m) {
  m.validate(false);
  require_compatible(spec, m);
  return assemble_gram(spec, m.positions, m.source_spectra());
}

KrrModel fit_moving(const KernelSpec& spec, const MovingMeasurement& m, double lambda,
                    const SolverOptions& opts) {
  m.validate(true);
  require_compatible(spec, m);
  if (lambda < 0.0) throw std::invalid_argument("fit_moving: lambda must be >= 0");

  KrrModel model;
  model.kernel = spec;
  model.positions = m.positions;
  model.spectra = m.source_spectra();
  model.lambda = lambda;

  const int n = m.count();
  const Eigen::VectorXd& p = m.pressure;
  const double pnorm = p.norm();
  const double tol = std::max(opts.tol, 1e-14);

  const bool direct = opts.method == SolverOptions::Method::Direct && n <= opts.materialize_cap;
  if (direct) {
    Eigen::MatrixXd system = assemble_gram(spec, m.positions, model.spectra);
    system.diagonal().array() += lambda;
    model.coefficients =
        detail::refined_hermitian_solve(system, p, lambda, "fit_moving: direct solve");
    const double residual =
        pnorm > 0.0 ? (system * model.coefficients - p).norm() / pnorm : 0.0;
    model.report = {"direct-ldlt", 0, residual};
    return model;
  }

  // conjugate gradients on (K + lambda I) a = p, Gram rows streamed per product
  const Eigen::MatrixXd phir = model.spectra.real();
  const Eigen::MatrixXd phii = model.spectra.imag();
  const Eigen::VectorXd w = DftWeights::for_length(spec.length).values;
  const int max_iterations = opts.max_iterations > 0 ? opts.max_iterations : 10 * n;

  Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd r = p;
  Eigen::VectorXd d = r;
  double rs = r.squaredNorm();
  const double stop = tol * pnorm;
  int it = 0;
  while (std::sqrt(rs) > stop && it < max_iterations) {
    const Eigen::VectorXd q = gram_matvec(spec, m.positions, phir, phii, w, lambda, d);
    const double dq = d.dot(q);
    if (!(dq > 0.0))
      throw std::runtime_error("fit_moving: conjugate gradients met a non-positive curvature");
    const double alpha = rs / dq;
    a += alpha * d;
    r -= alpha * q;
    const double rs_next = r.squaredNorm();
    d = r + (rs_next / rs) * d;
    rs = rs_next;
    ++it;
  }
  const double residual =
      pnorm > 0.0
          ? (gram_matvec(spec, m.positions, phir, phii, w, lambda, a) - p).norm() / pnorm
          : 0.0;
  model.coefficients = a;
  model.report = {"iterative-matrix-free", it, residual};
  if (!(residual <= std::max(tol * 10.0, 1e-8)))
    throw std::runtime_error("fit_moving: conjugate gradients stopped at relative residual " +
                             std::to_string(residual) + " after " + std::to_string(it) +
                             " iterations");
  return model;
}

FreqSequence reconstruct_bins(const KrrModel& model, const Eigen::Vector3d& r) {
  const KernelSpec& spec = model.kernel;
  const int n = static_cast<int>(model.positions.cols());
  const int bins = spec.num_bins();
  const bool even = spec.has_nyquist();
  const double k1 = spec.length > 1 ? spec.wavenumber(1) : 0.0;
  const bool diffuse = spec.is_diffuse() || spec.reduces_to_diffuse();
  const int last = bins - 1;

  Eigen::VectorXcd g = Eigen::VectorXcd::Zero(bins);
  for (int m = 0; m < n; ++m) {
    const std::complex<double> weight = model.coefficients[m];
    const Eigen::Vector3d delta = r - model.positions.col(m);
    const double dist = delta.norm();
    const double dist_sum = even ? (r + model.positions.col(m)).norm() : 0.0;
    if (diffuse) {
      const double theta = k1 * dist;
      const double c = std::cos(theta), s = std::sin(theta);
      double rc = 1.0, rs = 0.0;
      g[0] += weight * model.spectra(0, m).real();
      for (int l = 1; l < bins; ++l) {
        const double t = rc;
        rc = rc * c - rs * s;
        rs = rs * c + t * s;
        const double x = l * theta;
        double kappa = x < 1e-4 ? 1.0 - x * x / 6.0 : rs / x;
        if (even && l == last) kappa = 0.5 * (kappa + j0_real(k1 * l * dist_sum));
        g[l] += kappa * weight * model.spectra(l, m);
      }
    } else {
      for (int l = 0; l < bins; ++l) {
        const double kl = k1 * l;
        const DirectionalWeight& dw = spec.weighting[l];
        double jr, ji;
        if (even && l == last) {
          jr = 0.5 * (j0_real(kl * dist) + j0_real(kl * dist_sum));
          ji = 0.0;
        } else if (dw.strength == 0.0) {
          jr = j0_real(kl * dist);
          ji = 0.0;
        } else {
          j0_sq_parts(kl * kl * dist * dist - dw.strength * dw.strength,
                      2.0 * dw.strength * kl * delta.dot(dw.direction), jr, ji);
        }
        g[l] += std::complex<double>(jr, ji) * weight * model.spectra(l, m);
      }
    }
  }
  FreqSequence out;
  out.parent_length = spec.length;
  out.bins = g;
  out.bins[0] = out.bins[0].real();  // analytically real
  if (even) out.bins[last] = out.bins[last].real();
  return out;
}

TimeSequence reconstruct(const KrrModel& model, const Eigen::Vector3d& r) {
  return dft_inverse(reconstruct_bins(model, r));
}

Eigen::MatrixXd reconstruct_grid(const KrrModel& model, const Eigen::Matrix3Xd& points) {
  const int count = static_cast<int>(points.cols());
  Eigen::MatrixXd out(model.kernel.length, count);
#pragma omp parallel for schedule(dynamic)
  for (int e = 0; e < count; ++e) out.col(e) = reconstruct(model, points.col(e));
  return out;
}

}  // namespace soundfield
