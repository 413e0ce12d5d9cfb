#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "soundfield/spectral.hpp"

namespace soundfield {

// Rectangular room with uniform wall reflectivity, simulated with the image
// source method. Either a target decay time (converted through Sabine's
// formula) or an explicit amplitude reflection coefficient can be given; the
// explicit value wins when both are set.
struct RoomConfig {
  Eigen::Vector3d dimensions{5.4, 4.3, 3.2};
  double rt60 = 0.3;
  double reflection = -1.0;  // in [0, 1) to override rt60
  int max_order = -1;        // cap on total reflection count, -1 = unlimited
  double sound_speed = 343.0;

  double wall_gain() const;
  void validate() const;
};

// Impulse response from `source` to `mic`, band-limited by an 81-tap windowed
// sinc per image. The optional highpass removes the low-frequency tail the
// sinc interpolation leaves behind (4th order Butterworth at 20 Hz, applied
// forward and backward).
TimeSequence simulate_rir(const RoomConfig& room, const Eigen::Vector3d& source,
                          const Eigen::Vector3d& mic, double sample_rate, int length,
                          bool highpass = true);

// One period of a phase-synchronized logarithmic sweep; hi defaults to
// 0.48 * sample_rate when zero or negative.
Eigen::VectorXd log_sweep(int length, double sample_rate, double lo = 20.0, double hi = 0.0);

// Closed Lissajous path with constant ground speed, obtained by arc-length
// reparameterization over a dense lookup table.
struct TrajectoryConfig {
  Eigen::Vector3d center{0, 0, 0};
  Eigen::Vector3d extent{1, 1, 1};  // full box edge lengths
  double speed = 0.5;               // m/s
};

Eigen::Matrix3Xd lissajous_trajectory(const TrajectoryConfig& config, int count,
                                      double sample_rate);

// Midpoint positions of `segments` equal chunks of a sampled trajectory; the
// fixed-microphone baselines measure there.
Eigen::Matrix3Xd segment_midpoints(const Eigen::Matrix3Xd& trajectory, int segments);

// White Gaussian noise scaled to the requested signal-to-noise ratio.
// Returns the noise standard deviation actually used.
double add_white_noise(Eigen::VectorXd& signal, double snr_db, std::uint64_t seed);

// 4th order Butterworth highpass run forward and backward (zero phase).
Eigen::VectorXd highpass_filter(const Eigen::VectorXd& signal, double cutoff_hz,
                                double sample_rate);

}  // namespace soundfield
