#pragma once

#include <Eigen/Dense>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "soundfield/moving.hpp"
#include "soundfield/rff.hpp"
#include "soundfield/sim.hpp"
#include "soundfield/spectral.hpp"
#include "soundfield/stationary.hpp"

namespace soundfield {

// ----- error metrics over a grid of reconstructed impulse responses.
// Columns of `estimates` and `truth` pair up; all energies are pooled across
// the grid before the ratio is taken.

// 10 log10 of total error energy over total reference energy, floored at
// -300 dB
double nmse_broadband_db(const Eigen::MatrixXd& estimates, const Eigen::MatrixXd& truth);

// one value per frequency bin; bins with no reference energy give NaN
Eigen::VectorXd nmse_per_frequency_db(const Eigen::MatrixXd& estimates,
                                      const Eigen::MatrixXd& truth);

// energy ratio restricted to bins with lo_hz <= frequency <= hi_hz, weighted
// the way the time-domain inner product weights bins; the full band
// reproduces nmse_broadband_db
double nmse_band_db(const Eigen::MatrixXd& estimates, const Eigen::MatrixXd& truth,
                    double sample_rate, double lo_hz, double hi_hz);

// reverberation time from the backward-integrated decay, straight-line fit
// between -5 and -25 dB; empty when the response never decays that far
std::optional<double> rt60_schroeder(const TimeSequence& rir, double sample_rate);

// index of the closest point, lowest index on ties
int nearest_index(const Eigen::Matrix3Xd& points, const Eigen::Vector3d& query);

// ----- scene synthesis: a moving microphone recording in a simulated room,
// plus the ground truth responses the estimators are scored against

struct ExperimentConfig {
  RoomConfig room;
  Eigen::Vector3d source_position{1.2, 3.4, 1.7};
  Eigen::Vector3d region_center{3.4, 2.0, 1.6};
  Eigen::Vector3d region_extent{1.0, 1.0, 0.5};
  double mic_speed = 0.5;
  double sample_rate = 1000.0;
  int window = 128;
  int samples = 2000;
  int stationary_mics = 8;
  double snr_db = std::numeric_limits<double>::infinity();
  double sweep_lo = 20.0;
  double sweep_hi = 0.0;  // 0 = 0.48 * sample_rate
  Eigen::Vector3i grid{5, 5, 2};
  std::uint64_t seed = 0;

  void validate() const;
  Eigen::Vector3d source_direction() const;  // region center toward the source
};

Eigen::Matrix3Xd region_grid(const ExperimentConfig& config);

struct Scene {
  MovingMeasurement measurement;     // pressure includes noise when snr is finite
  Eigen::Matrix3Xd eval_points;
  Eigen::MatrixXd truth;             // window x points, clean
  Eigen::Matrix3Xd stationary_points;
  Eigen::MatrixXd stationary_rirs;   // clean responses for the baselines
  double noise_sigma = 0.0;
};

Scene simulate_scene(const ExperimentConfig& config);

// ----- estimators under a common interface

struct EstimatorSpec {
  enum class Method {
    MovingKernel,
    MovingFeatures,
    StationaryKernel,
    StationaryFeatures,
    NearestNeighbour
  };
  Method method = Method::MovingKernel;
  double lambda0 = 1e-4;  // multiplied by the window length for moving methods
  double strength = 0.0;  // directional weighting toward the source; 0 = diffuse
  int features = 16;
  std::uint64_t seed = 0;
  SolverOptions solver;
};

std::string method_name(EstimatorSpec::Method method);

struct EstimateResult {
  Eigen::MatrixXd estimates;  // window x points
  double fit_seconds = 0.0;
  double reconstruct_seconds = 0.0;
  SolveReport report;  // moving kernel only
};

EstimateResult run_estimator(const ExperimentConfig& config, const Scene& scene,
                             const EstimatorSpec& estimator);

// ----- parameter sweeps with per-point callbacks so long runs can resume

struct SweepPoint {
  std::string axis;
  double value;
  std::uint64_t seed;       // scene seed of this replicate
  int estimator_index = 0;
  EstimatorSpec estimator;  // fully resolved, including the derived draw seed
};

struct SweepOutcome {
  SweepPoint point;
  double broadband_db = 0.0;  // NaN when the cell failed
  double band_db = 0.0;
  double fit_seconds = 0.0;
  std::string error;  // nonempty when the estimator failed; the sweep continues
};

struct SweepCallbacks {
  std::function<bool(const SweepPoint&)> should_skip;  // return true to resume past it
  std::function<void(const SweepOutcome&)> on_result;
};

struct SweepPlan {
  ExperimentConfig base;
  std::vector<EstimatorSpec> estimators;
  std::string axis;  // lambda0 | features | strength | samples | rt60
  std::vector<double> values;
  std::vector<std::uint64_t> seeds;
  double band_lo = 20.0;
  double band_hi = 0.0;  // 0 = 0.48 * sample_rate
};

// Scenes are shared across values when the axis only affects the estimator,
// and across estimators always; seeds are common to every value so replicates
// stay paired.
void run_sweep(const SweepPlan& plan, const SweepCallbacks& callbacks);

}  // namespace soundfield
