#include <cmath>
#include <random>

#include <benchmark/benchmark.h>

#include "soundfield/eval.hpp"
#include "soundfield/moving.hpp"
#include "soundfield/rff.hpp"
#include "soundfield/sim.hpp"
#include "soundfield/spectral.hpp"

namespace {

using namespace soundfield;

MovingMeasurement synthetic_measurement(int count, int window, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  MovingMeasurement m;
  m.window = window;
  m.sample_rate = 1000.0;
  m.source.resize(count + window - 1);
  for (int n = 0; n < m.source.size(); ++n) m.source[n] = gauss(rng);
  m.pressure.resize(count);
  for (int n = 0; n < count; ++n) m.pressure[n] = gauss(rng);
  m.positions.resize(3, count);
  for (int n = 0; n < count; ++n) {
    const double t = 2.0 * n / count;
    m.positions.col(n) = Eigen::Vector3d(1.5 + 0.5 * std::sin(2.1 * t + 0.3),
                                         1.2 + 0.5 * std::sin(3.7 * t + 1.1),
                                         1.0 + 0.25 * std::sin(5.3 * t + 2.2));
  }
  return m;
}

void BM_DftRoundTrip(benchmark::State& state) {
  const int length = static_cast<int>(state.range(0));
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss;
  TimeSequence x(length);
  for (int n = 0; n < length; ++n) x[n] = gauss(rng);
  for (auto _ : state) {
    TimeSequence back = dft_inverse(dft_forward(x));
    benchmark::DoNotOptimize(back.data());
  }
}
BENCHMARK(BM_DftRoundTrip)->Arg(64)->Arg(256)->Arg(1024);

void BM_KernelMatrix(benchmark::State& state) {
  const int count = static_cast<int>(state.range(0));
  const KernelSpec spec = KernelSpec::diffuse(64, 1000.0);
  const MovingMeasurement m = synthetic_measurement(count, spec.length, 11);
  for (auto _ : state) {
    Eigen::MatrixXd k = kernel_matrix(spec, m);
    benchmark::DoNotOptimize(k.data());
  }
  state.SetComplexityN(count);
}
BENCHMARK(BM_KernelMatrix)->Arg(250)->Arg(500)->Arg(1000)->Arg(2000)
    ->Unit(benchmark::kMillisecond)->Complexity();

void BM_MovingKernelFit(benchmark::State& state) {
  const int count = static_cast<int>(state.range(0));
  const KernelSpec spec = KernelSpec::diffuse(64, 1000.0);
  const MovingMeasurement m = synthetic_measurement(count, spec.length, 13);
  const double lambda = spec.length * 1e-4;
  for (auto _ : state) {
    KrrModel model = fit_moving(spec, m, lambda);
    benchmark::DoNotOptimize(model.coefficients.data());
  }
  state.SetComplexityN(count);
}
BENCHMARK(BM_MovingKernelFit)->Arg(250)->Arg(500)->Arg(1000)->Arg(2000)
    ->Unit(benchmark::kMillisecond)->Complexity();

void BM_MovingFeatureFit(benchmark::State& state) {
  const int count = static_cast<int>(state.range(0));
  const KernelSpec spec = KernelSpec::diffuse(64, 1000.0);
  const MovingMeasurement m = synthetic_measurement(count, spec.length, 17);
  const FeatureBasis basis = FeatureBasis::build(spec, {16, {}, 19});
  const double lambda = spec.length * 1e-4;
  for (auto _ : state) {
    RffMovingModel model = fit_moving_rff(basis, m, lambda);
    benchmark::DoNotOptimize(model.coefficients.data());
  }
  state.SetComplexityN(count);
}
BENCHMARK(BM_MovingFeatureFit)->Arg(250)->Arg(500)->Arg(1000)->Arg(2000)
    ->Unit(benchmark::kMillisecond)->Complexity();

void BM_FeatureMatrix(benchmark::State& state) {
  const int features = static_cast<int>(state.range(0));
  const KernelSpec spec = KernelSpec::diffuse(64, 1000.0);
  const MovingMeasurement m = synthetic_measurement(1000, spec.length, 23);
  const FeatureBasis basis = FeatureBasis::build(spec, {features, {}, 29});
  for (auto _ : state) {
    Eigen::MatrixXd v = feature_matrix(basis, m);
    benchmark::DoNotOptimize(v.data());
  }
}
BENCHMARK(BM_FeatureMatrix)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_SimulateRir(benchmark::State& state) {
  const int length = static_cast<int>(state.range(0));
  RoomConfig room;
  room.rt60 = 0.3;
  const Eigen::Vector3d source(1.2, 3.4, 1.7);
  const Eigen::Vector3d mic(3.4, 2.0, 1.6);
  for (auto _ : state) {
    TimeSequence rir = simulate_rir(room, source, mic, 1000.0, length);
    benchmark::DoNotOptimize(rir.data());
  }
}
BENCHMARK(BM_SimulateRir)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_ReconstructGrid(benchmark::State& state) {
  const int points = static_cast<int>(state.range(0));
  const KernelSpec spec = KernelSpec::diffuse(64, 1000.0);
  const MovingMeasurement m = synthetic_measurement(500, spec.length, 31);
  const KrrModel model = fit_moving(spec, m, spec.length * 1e-4);
  Eigen::Matrix3Xd grid(3, points);
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> unit(0.8, 2.0);
  for (int e = 0; e < points; ++e)
    grid.col(e) = Eigen::Vector3d(unit(rng), unit(rng), unit(rng));
  for (auto _ : state) {
    Eigen::MatrixXd estimates = reconstruct_grid(model, grid);
    benchmark::DoNotOptimize(estimates.data());
  }
}
BENCHMARK(BM_ReconstructGrid)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
