#include "soundfield/sim.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace soundfield {

namespace {

constexpr double kPi = 3.1415926535897932384626433832795;
constexpr int kHalfTaps = 40;  // 81-tap windowed sinc

struct SincTables {
  // cos and sin of pi k / (kHalfTaps + 1), periodic in k with period 82
  double c[2 * (kHalfTaps + 1)];
  double s[2 * (kHalfTaps + 1)];
  SincTables() {
    for (int k = 0; k < 2 * (kHalfTaps + 1); ++k) {
      c[k] = std::cos(kPi * k / (kHalfTaps + 1));
      s[k] = std::sin(kPi * k / (kHalfTaps + 1));
    }
  }
};

const SincTables& sinc_tables() {
  static const SincTables tables;
  return tables;
}

// gain * sinc(k - delay) under a Hann window, accumulated into rir
void add_arrival(TimeSequence& rir, double delay, double gain) {
  const SincTables& tab = sinc_tables();
  const int period = 2 * (kHalfTaps + 1);
  const int k0 = static_cast<int>(std::ceil(delay));
  const int lo = std::max(0, k0 - kHalfTaps);
  const int hi = std::min(static_cast<int>(rir.size()) - 1, k0 + kHalfTaps);
  if (lo > hi) return;

  const double sin_pd = std::sin(kPi * delay);
  const double cw = std::cos(kPi * delay / (kHalfTaps + 1));
  const double sw = std::sin(kPi * delay / (kHalfTaps + 1));
  for (int k = lo; k <= hi; ++k) {
    const double x = k - delay;
    double sinc;
    if (std::abs(x) < 1e-9)
      sinc = 1.0;
    else
      sinc = ((k & 1) ? sin_pd : -sin_pd) / (kPi * x);
    const int idx = k % period;
    const double window = 0.5 * (1.0 + tab.c[idx] * cw + tab.s[idx] * sw);
    rir[k] += gain * window * sinc;
  }
}

struct AxisImages {
  std::vector<double> offset;  // image coordinate
  std::vector<int> order;      // reflections contributed along this axis
};

AxisImages axis_images(double source, double size, double reach) {
  AxisImages images;
  const int span = static_cast<int>(reach / (2.0 * size)) + 2;
  for (int m = -span; m <= span; ++m)
    for (int q = 0; q <= 1; ++q) {
      images.offset.push_back((1 - 2 * q) * source + 2.0 * m * size);
      images.order.push_back(std::abs(m - q) + std::abs(m));
    }
  return images;
}

void biquad_in_place(Eigen::VectorXd& x, double b0, double b1, double b2, double a1, double a2) {
  double z1 = 0.0, z2 = 0.0;
  for (int i = 0; i < x.size(); ++i) {
    const double in = x[i];
    const double out = b0 * in + z1;
    z1 = b1 * in - a1 * out + z2;
    z2 = b2 * in - a2 * out;
    x[i] = out;
  }
}

void highpass_cascade(Eigen::VectorXd& x, double cutoff_hz, double sample_rate) {
  const double w0 = 2.0 * kPi * cutoff_hz / sample_rate;
  const double cw = std::cos(w0);
  const double sw = std::sin(w0);
  for (const double q : {0.5411961001461969, 1.3065629648763766}) {
    const double alpha = sw / (2.0 * q);
    const double a0 = 1.0 + alpha;
    biquad_in_place(x, (1.0 + cw) / (2.0 * a0), -(1.0 + cw) / a0, (1.0 + cw) / (2.0 * a0),
                    -2.0 * cw / a0, (1.0 - alpha) / a0);
  }
}

}  // namespace

double RoomConfig::wall_gain() const {
  if (reflection >= 0.0) {
    if (reflection >= 1.0)
      throw std::invalid_argument("RoomConfig: reflection coefficient must be below 1");
    return reflection;
  }
  if (!(rt60 > 0.0)) throw std::invalid_argument("RoomConfig: rt60 must be > 0");
  const double volume = dimensions.prod();
  const double surface = 2.0 * (dimensions.x() * dimensions.y() + dimensions.x() * dimensions.z() +
                                dimensions.y() * dimensions.z());
  const double absorption = 0.161 * volume / (surface * rt60);
  if (absorption >= 1.0)
    throw std::invalid_argument("RoomConfig: rt60 of " + std::to_string(rt60) +
                                " s is below this room's Sabine limit of " +
                                std::to_string(0.161 * volume / surface) +
                                " s; set an explicit reflection coefficient instead");
  return std::sqrt(1.0 - absorption);
}

void RoomConfig::validate() const {
  if ((dimensions.array() <= 0.0).any())
    throw std::invalid_argument("RoomConfig: dimensions must be positive");
  if (!(sound_speed > 0.0)) throw std::invalid_argument("RoomConfig: sound_speed must be > 0");
  (void)wall_gain();
}

TimeSequence simulate_rir(const RoomConfig& room, const Eigen::Vector3d& source,
                          const Eigen::Vector3d& mic, double sample_rate, int length,
                          bool highpass) {
  room.validate();
  if (length < 1) throw std::invalid_argument("simulate_rir: length must be >= 1");
  if (!(sample_rate > 0.0)) throw std::invalid_argument("simulate_rir: sample_rate must be > 0");
  for (int axis = 0; axis < 3; ++axis) {
    if (!(source[axis] > 0.0 && source[axis] < room.dimensions[axis]))
      throw std::invalid_argument("simulate_rir: source must be strictly inside the room");
    if (!(mic[axis] > 0.0 && mic[axis] < room.dimensions[axis]))
      throw std::invalid_argument("simulate_rir: microphone must be strictly inside the room");
  }
  if ((mic - source).norm() < 1e-9)
    throw std::invalid_argument("simulate_rir: microphone coincides with the source");

  const double gain = room.wall_gain();
  const double reach = (length + kHalfTaps + 1) * room.sound_speed / sample_rate;
  const AxisImages ix = axis_images(source.x(), room.dimensions.x(), reach);
  const AxisImages iy = axis_images(source.y(), room.dimensions.y(), reach);
  const AxisImages iz = axis_images(source.z(), room.dimensions.z(), reach);

  int max_total = 0;
  for (const AxisImages* axis : {&ix, &iy, &iz})
    max_total += *std::max_element(axis->order.begin(), axis->order.end());
  std::vector<double> gain_pow(max_total + 1);
  gain_pow[0] = 1.0;
  for (int k = 1; k <= max_total; ++k) gain_pow[k] = gain_pow[k - 1] * gain;

  TimeSequence rir = TimeSequence::Zero(length);
  const double inv_speed = sample_rate / room.sound_speed;
  for (size_t a = 0; a < ix.offset.size(); ++a) {
    const double dx = ix.offset[a] - mic.x();
    for (size_t b = 0; b < iy.offset.size(); ++b) {
      const double dy = iy.offset[b] - mic.y();
      const double dxy2 = dx * dx + dy * dy;
      const int order_xy = ix.order[a] + iy.order[b];
      if (room.max_order >= 0 && order_xy > room.max_order) continue;
      for (size_t c = 0; c < iz.offset.size(); ++c) {
        const int order = order_xy + iz.order[c];
        if (room.max_order >= 0 && order > room.max_order) continue;
        const double dz = iz.offset[c] - mic.z();
        const double dist = std::sqrt(dxy2 + dz * dz);
        if (dist > reach || dist < 1e-9) continue;
        add_arrival(rir, dist * inv_speed, gain_pow[order] / (4.0 * kPi * dist));
      }
    }
  }

  if (highpass) rir = highpass_filter(rir, 20.0, sample_rate);
  return rir;
}

Eigen::VectorXd log_sweep(int length, double sample_rate, double lo, double hi) {
  if (length < 2) throw std::invalid_argument("log_sweep: length must be >= 2");
  if (!(sample_rate > 0.0)) throw std::invalid_argument("log_sweep: sample_rate must be > 0");
  if (hi <= 0.0) hi = 0.48 * sample_rate;
  if (!(lo > 0.0 && lo < hi && hi <= 0.5 * sample_rate))
    throw std::invalid_argument("log_sweep: need 0 < lo < hi <= sample_rate / 2");

  const double period = length / sample_rate;
  const double ratio = hi / lo;
  const double log_ratio = std::log(ratio);
  const double total_phase = 2.0 * kPi * lo * period * (ratio - 1.0) / log_ratio;
  const double cycles = std::max(1.0, std::round(total_phase / (2.0 * kPi)));
  const double sync = 2.0 * kPi * cycles / total_phase;

  Eigen::VectorXd sweep(length);
  for (int n = 0; n < length; ++n) {
    const double t = n / sample_rate;
    const double phase =
        2.0 * kPi * lo * period / log_ratio * (std::exp(log_ratio * t / period) - 1.0);
    sweep[n] = std::sin(sync * phase);
  }
  return sweep;
}

Eigen::Matrix3Xd lissajous_trajectory(const TrajectoryConfig& config, int count,
                                      double sample_rate) {
  if (count < 1) throw std::invalid_argument("lissajous_trajectory: count must be >= 1");
  if (!(sample_rate > 0.0))
    throw std::invalid_argument("lissajous_trajectory: sample_rate must be > 0");
  if (!(config.speed > 0.0)) throw std::invalid_argument("lissajous_trajectory: speed must be > 0");
  if ((config.extent.array() < 0.0).any())
    throw std::invalid_argument("lissajous_trajectory: extent must be non-negative");

  const Eigen::Vector3d half = config.extent / 2.0;
  auto at = [&](double t) {
    return Eigen::Vector3d(config.center.x() + half.x() * std::cos(3.0 * t),
                           config.center.y() + half.y() * std::sin(4.0 * t),
                           config.center.z() + half.z() * std::sin(5.0 * t));
  };

  const int knots = 65536;
  std::vector<double> cumulative(knots + 1, 0.0);
  Eigen::Vector3d prev = at(0.0);
  for (int i = 1; i <= knots; ++i) {
    const Eigen::Vector3d next = at(2.0 * kPi * i / knots);
    cumulative[i] = cumulative[i - 1] + (next - prev).norm();
    prev = next;
  }
  const double total = cumulative[knots];

  Eigen::Matrix3Xd out(3, count);
  if (total < 1e-12) {
    for (int n = 0; n < count; ++n) out.col(n) = config.center;
    return out;
  }

  const double travelled = config.speed * (count - 1) / sample_rate;
  if (travelled < config.extent.maxCoeff() / 2.0)
    std::cerr << "lissajous_trajectory: path covers " << travelled
              << " m, less than half the region's largest edge; coverage will be poor\n";

  for (int n = 0; n < count; ++n) {
    const double s = std::fmod(config.speed * n / sample_rate, total);
    const auto upper = std::upper_bound(cumulative.begin(), cumulative.end(), s);
    const int seg = std::max(0, static_cast<int>(upper - cumulative.begin()) - 1);
    const double span = cumulative[seg + 1] - cumulative[seg];
    const double frac = span > 0.0 ? (s - cumulative[seg]) / span : 0.0;
    out.col(n) = at(2.0 * kPi * (seg + frac) / knots);
  }
  return out;
}

Eigen::Matrix3Xd segment_midpoints(const Eigen::Matrix3Xd& trajectory, int segments) {
  const int count = static_cast<int>(trajectory.cols());
  if (segments < 1 || segments > count)
    throw std::invalid_argument("segment_midpoints: segments must be in [1, count]");
  Eigen::Matrix3Xd out(3, segments);
  for (int i = 0; i < segments; ++i) {
    const int idx = std::min(count - 1, static_cast<int>((i + 0.5) * count / segments));
    out.col(i) = trajectory.col(idx);
  }
  return out;
}

double add_white_noise(Eigen::VectorXd& signal, double snr_db, std::uint64_t seed) {
  if (signal.size() == 0) throw std::invalid_argument("add_white_noise: empty signal");
  const double power = signal.squaredNorm() / signal.size();
  if (!(power > 0.0)) throw std::invalid_argument("add_white_noise: signal has no energy");
  const double sigma = std::sqrt(power * std::pow(10.0, -snr_db / 10.0));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, sigma);
  for (int i = 0; i < signal.size(); ++i) signal[i] += gauss(rng);
  return sigma;
}

Eigen::VectorXd highpass_filter(const Eigen::VectorXd& signal, double cutoff_hz,
                                double sample_rate) {
  if (!(cutoff_hz > 0.0 && cutoff_hz < 0.5 * sample_rate))
    throw std::invalid_argument("highpass_filter: cutoff must sit inside (0, sample_rate / 2)");
  Eigen::VectorXd work = signal;
  highpass_cascade(work, cutoff_hz, sample_rate);
  work.reverseInPlace();
  highpass_cascade(work, cutoff_hz, sample_rate);
  work.reverseInPlace();
  return work;
}

}  // namespace soundfield
