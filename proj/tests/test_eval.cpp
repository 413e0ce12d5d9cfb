#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "soundfield/eval.hpp"
#include "soundfield/seeding.hpp"

using namespace soundfield;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig config;
  config.window = 32;
  config.samples = 400;
  config.stationary_mics = 4;
  config.grid = Eigen::Vector3i(3, 3, 1);
  config.mic_speed = 3.0;
  return config;
}

}  // namespace

TEST_CASE("broadband nmse matches a hand computation and is floored") {
  Eigen::MatrixXd truth(2, 2), est(2, 2);
  truth << 1, 1, 3, 5;
  est << 1, 2, 3, 4;
  // error energy 2, reference energy 36
  CHECK(nmse_broadband_db(est, truth) == doctest::Approx(10.0 * std::log10(2.0 / 36.0)).epsilon(1e-12));

  CHECK(nmse_broadband_db(truth, truth) == -300.0);
  CHECK(nmse_broadband_db(Eigen::MatrixXd::Zero(2, 2), truth) == doctest::Approx(0.0));
  CHECK(nmse_broadband_db(2 * truth, truth) == doctest::Approx(0.0));

  Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(2, 2);
  CHECK_THROWS_AS(nmse_broadband_db(est, zero), std::invalid_argument);
  Eigen::MatrixXd wide(2, 3);
  CHECK_THROWS_AS(nmse_broadband_db(wide, truth), std::invalid_argument);
}

TEST_CASE("band nmse over the full band reproduces the broadband value") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> gauss;
  const int length = 24;
  Eigen::MatrixXd truth(length, 5), est(length, 5);
  for (int e = 0; e < 5; ++e)
    for (int n = 0; n < length; ++n) {
      truth(n, e) = gauss(rng);
      est(n, e) = truth(n, e) + 0.3 * gauss(rng);
    }
  const double fs = 1000.0;
  const double broadband = nmse_broadband_db(est, truth);
  CHECK(nmse_band_db(est, truth, fs, 0.0, fs / 2) == doctest::Approx(broadband).epsilon(1e-10));
  CHECK_THROWS_AS(nmse_band_db(est, truth, fs, 600.0, 700.0), std::invalid_argument);
  CHECK_THROWS_AS(nmse_band_db(est, truth, fs, 100.0, 50.0), std::invalid_argument);
}

TEST_CASE("band and per-frequency nmse localize an error to its bin") {
  const int length = 16;
  const double fs = 1000.0;
  const double truth_amp2 = 0.8, truth_amp5 = 0.5, err_amp5 = 0.05;
  Eigen::MatrixXd truth(length, 3), est(length, 3);
  for (int e = 0; e < 3; ++e)
    for (int n = 0; n < length; ++n) {
      const double phase = 0.2 * e;
      truth(n, e) = truth_amp2 * std::cos(2 * M_PI * 2 * n / length + phase) +
                    truth_amp5 * std::cos(2 * M_PI * 5 * n / length);
      est(n, e) = truth(n, e) + err_amp5 * std::cos(2 * M_PI * 5 * n / length + 0.9);
    }

  const Eigen::VectorXd per = nmse_per_frequency_db(est, truth);
  REQUIRE(per.size() == length / 2 + 1);
  CHECK(per[2] == -300.0);
  // pure sinusoids occupy one bin each, so the ratio is just amplitude squared
  CHECK(per[5] == doctest::Approx(20.0 * std::log10(err_amp5 / truth_amp5)).epsilon(1e-9));

  // a reference with exactly no energy cannot be scored
  const Eigen::VectorXd unscored =
      nmse_per_frequency_db(est, Eigen::MatrixXd::Zero(length, 3));
  for (int l = 0; l < unscored.size(); ++l) CHECK(std::isnan(unscored[l]));

  const double bin_hz = fs / length;
  CHECK(nmse_band_db(est, truth, fs, 2 * bin_hz - 1, 2 * bin_hz + 1) == -300.0);
  CHECK(nmse_band_db(est, truth, fs, 5 * bin_hz - 1, 5 * bin_hz + 1) ==
        doctest::Approx(20.0 * std::log10(err_amp5 / truth_amp5)).epsilon(1e-9));
}

TEST_CASE("schroeder rt60 recovers an exact exponential decay") {
  const double fs = 1000.0, rt60 = 0.3;
  const double rate = 3.0 * std::log(10.0) / (fs * rt60);
  const int length = 2048;

  TimeSequence plain(length), modulated(length);
  for (int n = 0; n < length; ++n) {
    plain[n] = std::exp(-rate * n);
    modulated[n] = plain[n] * std::sin(0.7 * n + 0.3);
  }
  // the backward-integrated log energy of a geometric decay is exactly linear
  auto exact = rt60_schroeder(plain, fs);
  REQUIRE(exact.has_value());
  CHECK(*exact == doctest::Approx(rt60).epsilon(1e-6));

  auto rough = rt60_schroeder(modulated, fs);
  REQUIRE(rough.has_value());
  CHECK(*rough == doctest::Approx(rt60).epsilon(0.05));
}

TEST_CASE("schroeder rt60 is empty when the decay range is not reached") {
  const double fs = 1000.0;
  CHECK_FALSE(rt60_schroeder(Eigen::VectorXd::Ones(100), fs).has_value());

  TimeSequence impulse = Eigen::VectorXd::Zero(64);
  impulse[5] = 1.0;
  CHECK_FALSE(rt60_schroeder(impulse, fs).has_value());

  CHECK_FALSE(rt60_schroeder(Eigen::VectorXd::Zero(64), fs).has_value());
  CHECK_FALSE(rt60_schroeder(Eigen::VectorXd::Ones(2), fs).has_value());
}

TEST_CASE("nearest index picks the closest point and the lowest index on ties") {
  Eigen::Matrix3Xd points(3, 3);
  points.col(0) = Eigen::Vector3d(0, 0, 0);
  points.col(1) = Eigen::Vector3d(1, 1, 1);
  points.col(2) = Eigen::Vector3d(0.9, 1.0, 1.1);
  CHECK(nearest_index(points, Eigen::Vector3d(1, 1, 1)) == 1);
  CHECK(nearest_index(points, Eigen::Vector3d(0.1, 0, 0)) == 0);

  Eigen::Matrix3Xd pair(3, 2);
  pair.col(0) = Eigen::Vector3d(0, 0, 0);
  pair.col(1) = Eigen::Vector3d(2, 0, 0);
  CHECK(nearest_index(pair, Eigen::Vector3d(1, 0, 0)) == 0);

  Eigen::Matrix3Xd none(3, 0);
  CHECK_THROWS_AS(nearest_index(none, Eigen::Vector3d::Zero()), std::invalid_argument);
}

TEST_CASE("experiment config validation rejects bad geometry") {
  CHECK_NOTHROW(ExperimentConfig{}.validate());

  ExperimentConfig inside_region;
  inside_region.source_position = inside_region.region_center;
  CHECK_THROWS_AS(inside_region.validate(), std::invalid_argument);

  ExperimentConfig touching_wall;
  touching_wall.region_center.x() = touching_wall.room.dimensions.x() - 0.2;
  CHECK_THROWS_AS(touching_wall.validate(), std::invalid_argument);

  ExperimentConfig source_outside;
  source_outside.source_position.z() = -0.1;
  CHECK_THROWS_AS(source_outside.validate(), std::invalid_argument);

  ExperimentConfig too_many_mics;
  too_many_mics.samples = 4;
  too_many_mics.stationary_mics = 8;
  CHECK_THROWS_AS(too_many_mics.validate(), std::invalid_argument);

  ExperimentConfig bad_window;
  bad_window.window = 1;
  CHECK_THROWS_AS(bad_window.validate(), std::invalid_argument);
}

TEST_CASE("source direction points from the region center toward the source") {
  ExperimentConfig config;
  const Eigen::Vector3d expect =
      (config.source_position - config.region_center).normalized();
  CHECK((config.source_direction() - expect).norm() == 0.0);
  CHECK(config.source_direction().norm() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("region grid spans the region with the fastest index on x") {
  ExperimentConfig config;
  config.region_center = Eigen::Vector3d(2, 3, 1);
  config.region_extent = Eigen::Vector3d(1.0, 0.4, 0.0);
  config.grid = Eigen::Vector3i(2, 2, 1);
  const Eigen::Matrix3Xd grid = region_grid(config);
  REQUIRE(grid.cols() == 4);
  CHECK((grid.col(0) - Eigen::Vector3d(1.5, 2.8, 1)).norm() == 0.0);
  CHECK((grid.col(1) - Eigen::Vector3d(2.5, 2.8, 1)).norm() == 0.0);
  CHECK((grid.col(2) - Eigen::Vector3d(1.5, 3.2, 1)).norm() == 0.0);
  CHECK((grid.col(3) - Eigen::Vector3d(2.5, 3.2, 1)).norm() == 0.0);

  config.grid = Eigen::Vector3i(3, 1, 1);
  const Eigen::Matrix3Xd line = region_grid(config);
  REQUIRE(line.cols() == 3);
  CHECK(line(0, 1) == 2.0);
  CHECK(line(1, 0) == 3.0);
}

TEST_CASE("simulated scenes are deterministic and reproduce their parts") {
  ExperimentConfig config = small_config();
  config.samples = 200;
  const Scene scene = simulate_scene(config);

  CHECK(scene.measurement.count() == config.samples);
  CHECK(scene.measurement.window == config.window);
  CHECK_NOTHROW(scene.measurement.validate(true));
  CHECK(scene.noise_sigma == 0.0);
  CHECK(scene.eval_points.cols() == config.grid.prod());
  CHECK(scene.truth.rows() == config.window);
  CHECK(scene.stationary_points.cols() == config.stationary_mics);

  // the source is one sweep period tiled over the recording and its pre-roll
  const Eigen::VectorXd& source = scene.measurement.source;
  REQUIRE(source.size() == config.samples + config.window - 1);
  for (int i = 0; i + config.window < source.size(); ++i)
    CHECK(source[i] == source[i + config.window]);
  const Eigen::VectorXd period =
      log_sweep(config.window, config.sample_rate, config.sweep_lo, config.sweep_hi);
  CHECK(source[config.window - 1] == period[0]);

  const Scene again = simulate_scene(config);
  CHECK((scene.measurement.pressure - again.measurement.pressure).cwiseAbs().maxCoeff() == 0.0);
  CHECK((scene.truth - again.truth).cwiseAbs().maxCoeff() == 0.0);

  // truth and baseline responses come straight from the room model
  const Eigen::Vector3d probe = scene.eval_points.col(3);
  const TimeSequence direct = simulate_rir(config.room, config.source_position, probe,
                                           config.sample_rate, config.window);
  CHECK((scene.truth.col(3) - direct).cwiseAbs().maxCoeff() == 0.0);

  const Eigen::Matrix3Xd mids =
      segment_midpoints(scene.measurement.positions, config.stationary_mics);
  CHECK((scene.stationary_points - mids).cwiseAbs().maxCoeff() == 0.0);
  const TimeSequence at_mid = simulate_rir(config.room, config.source_position, mids.col(1),
                                           config.sample_rate, config.window);
  CHECK((scene.stationary_rirs.col(1) - at_mid).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("scene noise matches the requested level and leaves the truth clean") {
  ExperimentConfig config = small_config();
  config.samples = 1500;
  const Scene clean = simulate_scene(config);

  config.snr_db = 20.0;
  const Scene noisy = simulate_scene(config);
  CHECK(noisy.noise_sigma > 0.0);
  CHECK((noisy.truth - clean.truth).cwiseAbs().maxCoeff() == 0.0);
  CHECK((noisy.stationary_rirs - clean.stationary_rirs).cwiseAbs().maxCoeff() == 0.0);

  const Eigen::VectorXd noise = noisy.measurement.pressure - clean.measurement.pressure;
  const double power = clean.measurement.pressure.squaredNorm() / config.samples;
  const double target = std::sqrt(power * std::pow(10.0, -config.snr_db / 10.0));
  CHECK(noisy.noise_sigma == doctest::Approx(target).epsilon(1e-12));
  CHECK(std::sqrt(noise.squaredNorm() / config.samples) ==
        doctest::Approx(noisy.noise_sigma).epsilon(0.06));

  config.seed = 5;
  const Scene reseeded = simulate_scene(config);
  CHECK((reseeded.measurement.pressure - noisy.measurement.pressure).cwiseAbs().maxCoeff() > 0.0);
  CHECK((reseeded.truth - noisy.truth).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("every estimator produces a finite field of the right shape") {
  const ExperimentConfig config = small_config();
  const Scene scene = simulate_scene(config);

  for (const auto method :
       {EstimatorSpec::Method::MovingKernel, EstimatorSpec::Method::MovingFeatures,
        EstimatorSpec::Method::StationaryKernel, EstimatorSpec::Method::StationaryFeatures,
        EstimatorSpec::Method::NearestNeighbour}) {
    CAPTURE(method_name(method));
    EstimatorSpec spec;
    spec.method = method;
    spec.strength = method == EstimatorSpec::Method::MovingFeatures ? 2.0 : 0.0;
    const EstimateResult result = run_estimator(config, scene, spec);
    CHECK(result.estimates.rows() == config.window);
    CHECK(result.estimates.cols() == scene.eval_points.cols());
    CHECK(result.estimates.allFinite());
    CHECK(result.fit_seconds >= 0.0);
    if (method == EstimatorSpec::Method::MovingKernel)
      CHECK_FALSE(result.report.method.empty());
    if (method == EstimatorSpec::Method::NearestNeighbour) {
      const int nearest = nearest_index(scene.stationary_points, scene.eval_points.col(2));
      CHECK((result.estimates.col(2) - scene.stationary_rirs.col(nearest))
                .cwiseAbs()
                .maxCoeff() == 0.0);
    }
  }

  EstimatorSpec bad;
  bad.lambda0 = -1.0;
  CHECK_THROWS_AS(run_estimator(config, scene, bad), std::invalid_argument);
}

TEST_CASE("method names are distinct and stable") {
  CHECK(method_name(EstimatorSpec::Method::MovingKernel) == "moving-kernel");
  CHECK(method_name(EstimatorSpec::Method::MovingFeatures) == "moving-features");
  CHECK(method_name(EstimatorSpec::Method::StationaryKernel) == "stationary-kernel");
  CHECK(method_name(EstimatorSpec::Method::StationaryFeatures) == "stationary-features");
  CHECK(method_name(EstimatorSpec::Method::NearestNeighbour) == "nearest-neighbour");
}

TEST_CASE("sweeps enumerate value, seed and estimator in order and can resume") {
  SweepPlan plan;
  plan.base = small_config();
  plan.base.samples = 200;
  plan.base.stationary_mics = 3;
  plan.base.grid = Eigen::Vector3i(2, 2, 1);
  plan.axis = "lambda0";
  plan.values = {1e-6, 1e-2};
  plan.seeds = {7, 8};
  EstimatorSpec stationary;
  stationary.method = EstimatorSpec::Method::StationaryKernel;
  EstimatorSpec nearest;
  nearest.method = EstimatorSpec::Method::NearestNeighbour;
  plan.estimators = {stationary, nearest};

  std::vector<SweepOutcome> outcomes;
  SweepCallbacks collect;
  collect.on_result = [&](const SweepOutcome& o) { outcomes.push_back(o); };
  run_sweep(plan, collect);

  REQUIRE(outcomes.size() == 8);
  CHECK(outcomes[0].point.value == 1e-6);
  CHECK(outcomes[0].point.seed == 7);
  CHECK(outcomes[0].point.estimator_index == 0);
  CHECK(outcomes[1].point.estimator_index == 1);
  CHECK(outcomes[2].point.seed == 8);
  CHECK(outcomes[4].point.value == 1e-2);
  CHECK(outcomes[7].point.estimator_index == 1);
  for (const SweepOutcome& o : outcomes) {
    CHECK(std::isfinite(o.broadband_db));
    CHECK(std::isfinite(o.band_db));
    CHECK(o.point.axis == "lambda0");
    CHECK(o.point.estimator.lambda0 == o.point.value);
    CHECK(o.point.estimator.seed ==
          derive_seed(o.point.seed, 1000 + o.point.estimator_index));
  }
  // the regulariser changes the kernel estimate but never the lookup baseline
  CHECK(outcomes[0].broadband_db != outcomes[4].broadband_db);
  CHECK(outcomes[1].broadband_db == outcomes[5].broadband_db);

  std::vector<SweepOutcome> resumed;
  int seen = 0;
  SweepCallbacks resume;
  resume.should_skip = [&](const SweepPoint&) { return seen++ < 5; };
  resume.on_result = [&](const SweepOutcome& o) { resumed.push_back(o); };
  run_sweep(plan, resume);

  REQUIRE(resumed.size() == 3);
  for (size_t i = 0; i < resumed.size(); ++i) {
    const SweepOutcome& full = outcomes[5 + i];
    CHECK(resumed[i].point.value == full.point.value);
    CHECK(resumed[i].point.seed == full.point.seed);
    CHECK(resumed[i].point.estimator_index == full.point.estimator_index);
    CHECK(resumed[i].broadband_db == full.broadband_db);
    CHECK(resumed[i].band_db == full.band_db);
  }
}

TEST_CASE("sweep plans are validated before any work starts") {
  SweepPlan plan;
  plan.base = small_config();
  plan.values = {1.0};
  plan.seeds = {0};
  plan.estimators.emplace_back();

  plan.axis = "bogus";
  CHECK_THROWS_AS(run_sweep(plan, {}), std::invalid_argument);

  plan.axis = "lambda0";
  plan.values.clear();
  CHECK_THROWS_AS(run_sweep(plan, {}), std::invalid_argument);
  plan.values = {1.0};
  plan.seeds.clear();
  CHECK_THROWS_AS(run_sweep(plan, {}), std::invalid_argument);
  plan.seeds = {0};
  plan.estimators.clear();
  CHECK_THROWS_AS(run_sweep(plan, {}), std::invalid_argument);
}

TEST_CASE("a failing cell is reported and the sweep continues") {
  SweepPlan plan;
  plan.base = small_config();
  plan.base.samples = 200;
  plan.base.stationary_mics = 3;
  plan.base.grid = Eigen::Vector3i(2, 2, 1);
  plan.axis = "strength";
  plan.values = {2.0, -1.0};
  plan.seeds = {4};
  EstimatorSpec stationary;
  stationary.method = EstimatorSpec::Method::StationaryKernel;
  plan.estimators = {stationary};

  std::vector<SweepOutcome> outcomes;
  SweepCallbacks collect;
  collect.on_result = [&](const SweepOutcome& o) { outcomes.push_back(o); };
  run_sweep(plan, collect);

  REQUIRE(outcomes.size() == 2);
  CHECK(outcomes[0].error.empty());
  CHECK(std::isfinite(outcomes[0].broadband_db));
  CHECK_FALSE(outcomes[1].error.empty());
  CHECK(std::isnan(outcomes[1].broadband_db));
  CHECK(std::isnan(outcomes[1].band_db));
}

TEST_CASE("scene axes rebuild the scene at every sweep value") {
  SweepPlan plan;
  plan.base = small_config();
  plan.base.stationary_mics = 3;
  plan.base.grid = Eigen::Vector3i(2, 2, 1);
  plan.axis = "samples";
  plan.values = {200, 400};
  plan.seeds = {3};
  EstimatorSpec nearest;
  nearest.method = EstimatorSpec::Method::NearestNeighbour;
  plan.estimators = {nearest};

  std::vector<SweepOutcome> outcomes;
  SweepCallbacks collect;
  collect.on_result = [&](const SweepOutcome& o) { outcomes.push_back(o); };
  run_sweep(plan, collect);
  REQUIRE(outcomes.size() == 2);
  // more samples move the trajectory midpoints, so the lookup answer changes
  CHECK(outcomes[0].broadband_db != outcomes[1].broadband_db);
}
