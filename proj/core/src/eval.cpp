#include "soundfield/eval.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <stdexcept>

#include "soundfield/seeding.hpp"

namespace soundfield {

namespace {

constexpr double kFloorDb = -300.0;

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

void require_comparable(const Eigen::MatrixXd& estimates, const Eigen::MatrixXd& truth) {
  if (estimates.rows() != truth.rows() || estimates.cols() != truth.cols())
    throw std::invalid_argument("nmse: estimate and truth shapes differ");
  if (truth.size() == 0) throw std::invalid_argument("nmse: empty inputs");
}

double ratio_db(double error_energy, double truth_energy) {
  if (!(truth_energy > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return std::max(kFloorDb, 10.0 * std::log10(error_energy / truth_energy));
}

}  // namespace

double nmse_broadband_db(const Eigen::MatrixXd& estimates, const Eigen::MatrixXd& truth) {
  require_comparable(estimates, truth);
  const double value = ratio_db((estimates - truth).squaredNorm(), truth.squaredNorm());
  if (std::isnan(value)) throw std::invalid_argument("nmse: reference has no energy");
  return value;
}

Eigen::VectorXd nmse_per_frequency_db(const Eigen::MatrixXd& estimates,
                                      const Eigen::MatrixXd& truth) {
  require_comparable(estimates, truth);
  const int length = static_cast<int>(truth.rows());
  const int bins = length / 2 + 1;
  Eigen::VectorXd error_energy = Eigen::VectorXd::Zero(bins);
  Eigen::VectorXd truth_energy = Eigen::VectorXd::Zero(bins);
  for (int e = 0; e < truth.cols(); ++e) {
    const Eigen::VectorXcd est = dft_forward(estimates.col(e)).bins;
    const Eigen::VectorXcd ref = dft_forward(truth.col(e)).bins;
    error_energy += (est - ref).cwiseAbs2();
    truth_energy += ref.cwiseAbs2();
  }
  Eigen::VectorXd out(bins);
  for (int l = 0; l < bins; ++l) out[l] = ratio_db(error_energy[l], truth_energy[l]);
  return out;
}

double nmse_band_db(const Eigen::MatrixXd& estimates, const Eigen::MatrixXd& truth,
                    double sample_rate, double lo_hz, double hi_hz) {
  require_comparable(estimates, truth);
  if (!(sample_rate > 0.0)) throw std::invalid_argument("nmse_band_db: sample rate must be > 0");
  if (!(lo_hz <= hi_hz)) throw std::invalid_argument("nmse_band_db: empty band");
  const int length = static_cast<int>(truth.rows());
  const int bins = length / 2 + 1;
  const Eigen::VectorXd weights = DftWeights::for_length(length).values;

  double error_energy = 0.0;
  double truth_energy = 0.0;
  bool any = false;
  for (int e = 0; e < truth.cols(); ++e) {
    const Eigen::VectorXcd est = dft_forward(estimates.col(e)).bins;
    const Eigen::VectorXcd ref = dft_forward(truth.col(e)).bins;
    for (int l = 0; l < bins; ++l) {
      const double f = sample_rate * l / length;
      if (f < lo_hz || f > hi_hz) continue;
      any = true;
      error_energy += weights[l] * std::norm(est[l] - ref[l]);
      truth_energy += weights[l] * std::norm(ref[l]);
    }
  }
  if (!any) throw std::invalid_argument("nmse_band_db: no bins inside the band");
  return ratio_db(error_energy, truth_energy);
}

std::optional<double> rt60_schroeder(const TimeSequence& rir, double sample_rate) {
  const int n = static_cast<int>(rir.size());
  if (n < 3 || !(sample_rate > 0.0)) return std::nullopt;
  Eigen::VectorXd energy(n);
  double acc = 0.0;
  for (int i = n - 1; i >= 0; --i) {
    acc += rir[i] * rir[i];
    energy[i] = acc;
  }
  if (!(energy[0] > 0.0)) return std::nullopt;

  int first = -1, last = -1;
  for (int i = 0; i < n; ++i) {
    const double db = 10.0 * std::log10(energy[i] / energy[0]);
    if (first < 0 && db <= -5.0) first = i;
    if (db <= -25.0) {
      last = i;
      break;
    }
  }
  if (first < 0 || last <= first) return std::nullopt;

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = first; i <= last; ++i) {
    const double db = 10.0 * std::log10(energy[i] / energy[0]);
    sx += i;
    sy += db;
    sxx += double(i) * i;
    sxy += i * db;
  }
  const double count = last - first + 1;
  const double denom = count * sxx - sx * sx;
  if (!(denom > 0.0)) return std::nullopt;
  const double slope = (count * sxy - sx * sy) / denom;
  if (!(slope < 0.0)) return std::nullopt;
  return -60.0 / (slope * sample_rate);
}

int nearest_index(const Eigen::Matrix3Xd& points, const Eigen::Vector3d& query) {
  if (points.cols() == 0) throw std::invalid_argument("nearest_index: no points");
  int best = 0;
  double best_dist = (points.col(0) - query).squaredNorm();
  for (int i = 1; i < points.cols(); ++i) {
    const double dist = (points.col(i) - query).squaredNorm();
    if (dist < best_dist) {
      best = i;
      best_dist = dist;
    }
  }
  return best;
}

void ExperimentConfig::validate() const {
  room.validate();
  if (!(sample_rate > 0.0)) throw std::invalid_argument("experiment: sample_rate must be > 0");
  if (window < 2) throw std::invalid_argument("experiment: window must be >= 2");
  if (samples < 1) throw std::invalid_argument("experiment: samples must be >= 1");
  if (stationary_mics < 1) throw std::invalid_argument("experiment: stationary_mics must be >= 1");
  if (stationary_mics > samples)
    throw std::invalid_argument("experiment: more stationary microphones than samples");
  if (!(mic_speed > 0.0)) throw std::invalid_argument("experiment: mic_speed must be > 0");
  if ((grid.array() < 1).any()) throw std::invalid_argument("experiment: grid counts must be >= 1");
  if ((region_extent.array() < 0.0).any())
    throw std::invalid_argument("experiment: region_extent must be non-negative");
  for (int axis = 0; axis < 3; ++axis) {
    const double lo = region_center[axis] - region_extent[axis] / 2;
    const double hi = region_center[axis] + region_extent[axis] / 2;
    if (!(lo > 0.0 && hi < room.dimensions[axis]))
      throw std::invalid_argument("experiment: region must sit strictly inside the room");
    if (!(source_position[axis] > 0.0 && source_position[axis] < room.dimensions[axis]))
      throw std::invalid_argument("experiment: source must sit strictly inside the room");
  }
  const Eigen::Array3d gap =
      (source_position - region_center).array().abs() - region_extent.array() / 2;
  if (gap.maxCoeff() <= 0.0)
    throw std::invalid_argument("experiment: source must lie outside the microphone region");
}

Eigen::Vector3d ExperimentConfig::source_direction() const {
  const Eigen::Vector3d delta = source_position - region_center;
  if (!(delta.norm() > 0.0))
    throw std::invalid_argument("experiment: source coincides with the region center");
  return delta.normalized();
}

Eigen::Matrix3Xd region_grid(const ExperimentConfig& config) {
  std::vector<std::vector<double>> coords(3);
  for (int axis = 0; axis < 3; ++axis) {
    const int n = config.grid[axis];
    const double lo = config.region_center[axis] - config.region_extent[axis] / 2;
    const double hi = config.region_center[axis] + config.region_extent[axis] / 2;
    for (int i = 0; i < n; ++i)
      coords[axis].push_back(n == 1 ? config.region_center[axis]
                                    : lo + (hi - lo) * i / (n - 1));
  }
  Eigen::Matrix3Xd grid(3, config.grid.prod());
  int col = 0;
  for (const double z : coords[2])
    for (const double y : coords[1])
      for (const double x : coords[0]) grid.col(col++) = Eigen::Vector3d(x, y, z);
  return grid;
}

Scene simulate_scene(const ExperimentConfig& config) {
  config.validate();

  Scene scene;
  TrajectoryConfig trajectory;
  trajectory.center = config.region_center;
  trajectory.extent = config.region_extent;
  trajectory.speed = config.mic_speed;

  MovingMeasurement& m = scene.measurement;
  m.window = config.window;
  m.sample_rate = config.sample_rate;
  m.positions = lissajous_trajectory(trajectory, config.samples, config.sample_rate);

  const Eigen::VectorXd period =
      log_sweep(config.window, config.sample_rate, config.sweep_lo, config.sweep_hi);
  m.source.resize(config.samples + config.window - 1);
  for (int i = 0; i < m.source.size(); ++i) {
    const int n = i - (config.window - 1);
    m.source[i] = period[((n % config.window) + config.window) % config.window];
  }

  auto field = [&](const Eigen::Vector3d& r) {
    return simulate_rir(config.room, config.source_position, r, config.sample_rate,
                        config.window);
  };
  m.pressure = measure(field, m);
  if (std::isfinite(config.snr_db))
    scene.noise_sigma =
        add_white_noise(m.pressure, config.snr_db, derive_seed(config.seed, 9001));

  scene.eval_points = region_grid(config);
  scene.truth.resize(config.window, scene.eval_points.cols());
  for (int e = 0; e < scene.eval_points.cols(); ++e)
    scene.truth.col(e) = field(scene.eval_points.col(e));

  scene.stationary_points = segment_midpoints(m.positions, config.stationary_mics);
  scene.stationary_rirs.resize(config.window, config.stationary_mics);
  for (int j = 0; j < config.stationary_mics; ++j)
    scene.stationary_rirs.col(j) = field(scene.stationary_points.col(j));
  return scene;
}

std::string method_name(EstimatorSpec::Method method) {
  switch (method) {
    case EstimatorSpec::Method::MovingKernel: return "moving-kernel";
    case EstimatorSpec::Method::MovingFeatures: return "moving-features";
    case EstimatorSpec::Method::StationaryKernel: return "stationary-kernel";
    case EstimatorSpec::Method::StationaryFeatures: return "stationary-features";
    case EstimatorSpec::Method::NearestNeighbour: return "nearest-neighbour";
  }
  throw std::invalid_argument("method_name: unknown method");
}

EstimateResult run_estimator(const ExperimentConfig& config, const Scene& scene,
                             const EstimatorSpec& estimator) {
  if (estimator.lambda0 < 0.0) throw std::invalid_argument("estimator: lambda0 must be >= 0");
  if (estimator.strength < 0.0) throw std::invalid_argument("estimator: strength must be >= 0");

  const KernelSpec kernel =
      estimator.strength > 0.0
          ? KernelSpec::directional(config.window, config.sample_rate,
                                    config.source_direction(), estimator.strength,
                                    config.room.sound_speed)
          : KernelSpec::diffuse(config.window, config.sample_rate, config.room.sound_speed);
  const double moving_lambda = config.window * estimator.lambda0;

  EstimateResult result;
  const double start = now_seconds();
  switch (estimator.method) {
    case EstimatorSpec::Method::MovingKernel: {
      const KrrModel model =
          fit_moving(kernel, scene.measurement, moving_lambda, estimator.solver);
      result.report = model.report;
      result.fit_seconds = now_seconds() - start;
      result.estimates = reconstruct_grid(model, scene.eval_points);
      break;
    }
    case EstimatorSpec::Method::MovingFeatures: {
      const FeatureBasis basis =
          FeatureBasis::build(kernel, {estimator.features, {}, estimator.seed});
      const RffMovingModel model = fit_moving_rff(basis, scene.measurement, moving_lambda);
      result.fit_seconds = now_seconds() - start;
      result.estimates = reconstruct_grid(model, scene.eval_points);
      break;
    }
    case EstimatorSpec::Method::StationaryKernel: {
      const StationaryModel model = fit_stationary(kernel, scene.stationary_points,
                                                   scene.stationary_rirs, estimator.lambda0);
      result.fit_seconds = now_seconds() - start;
      result.estimates = reconstruct_grid(model, scene.eval_points);
      break;
    }
    case EstimatorSpec::Method::StationaryFeatures: {
      const FeatureBasis basis =
          FeatureBasis::build(kernel, {estimator.features, {}, estimator.seed});
      const RffStationaryModel model = fit_stationary_rff(
          basis, scene.stationary_points, scene.stationary_rirs, estimator.lambda0);
      result.fit_seconds = now_seconds() - start;
      result.estimates = reconstruct_grid(model, scene.eval_points);
      break;
    }
    case EstimatorSpec::Method::NearestNeighbour: {
      result.fit_seconds = now_seconds() - start;
      result.estimates.resize(config.window, scene.eval_points.cols());
      for (int e = 0; e < scene.eval_points.cols(); ++e)
        result.estimates.col(e) =
            scene.stationary_rirs.col(nearest_index(scene.stationary_points,
                                                    scene.eval_points.col(e)));
      break;
    }
  }
  result.reconstruct_seconds = now_seconds() - start - result.fit_seconds;
  return result;
}

void run_sweep(const SweepPlan& plan, const SweepCallbacks& callbacks) {
  if (plan.values.empty()) throw std::invalid_argument("sweep: no values");
  if (plan.seeds.empty()) throw std::invalid_argument("sweep: no seeds");
  if (plan.estimators.empty()) throw std::invalid_argument("sweep: no estimators");
  const bool scene_axis = plan.axis == "samples" || plan.axis == "rt60";
  if (!scene_axis && plan.axis != "lambda0" && plan.axis != "features" &&
      plan.axis != "strength")
    throw std::invalid_argument("sweep: unknown axis '" + plan.axis + "'");

  const double band_hi = plan.band_hi > 0.0 ? plan.band_hi : 0.48 * plan.base.sample_rate;
  std::vector<std::optional<Scene>> shared(plan.seeds.size());

  for (const double value : plan.values) {
    ExperimentConfig config = plan.base;
    if (plan.axis == "samples") config.samples = static_cast<int>(std::lround(value));
    if (plan.axis == "rt60") config.room.rt60 = value;

    for (size_t si = 0; si < plan.seeds.size(); ++si) {
      config.seed = plan.seeds[si];
      std::optional<Scene> fresh;
      if (scene_axis) {
        fresh = simulate_scene(config);
      } else if (!shared[si]) {
        shared[si] = simulate_scene(config);
      }
      const Scene& scene = scene_axis ? *fresh : *shared[si];

      for (size_t ei = 0; ei < plan.estimators.size(); ++ei) {
        EstimatorSpec estimator = plan.estimators[ei];
        if (plan.axis == "lambda0") estimator.lambda0 = value;
        if (plan.axis == "features") estimator.features = static_cast<int>(std::lround(value));
        if (plan.axis == "strength") estimator.strength = value;
        estimator.seed = derive_seed(plan.seeds[si], 1000 + ei);

        SweepPoint point;
        point.axis = plan.axis;
        point.value = value;
        point.seed = plan.seeds[si];
        point.estimator_index = static_cast<int>(ei);
        point.estimator = estimator;
        if (callbacks.should_skip && callbacks.should_skip(point)) continue;

        SweepOutcome outcome;
        outcome.point = point;
        try {
          const EstimateResult run = run_estimator(config, scene, estimator);
          outcome.broadband_db = nmse_broadband_db(run.estimates, scene.truth);
          outcome.band_db = nmse_band_db(run.estimates, scene.truth, config.sample_rate,
                                         plan.band_lo, band_hi);
          outcome.fit_seconds = run.fit_seconds;
        } catch (const std::exception& failure) {
          outcome.broadband_db = std::numeric_limits<double>::quiet_NaN();
          outcome.band_db = outcome.broadband_db;
          outcome.error = failure.what();
        }
        if (callbacks.on_result) callbacks.on_result(outcome);
      }
    }
  }
}

}  // namespace soundfield
