#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "config.hpp"
#include "soundfield/dataset.hpp"
#include "soundfield/eval.hpp"
#include "soundfield/seeding.hpp"

namespace fs = std::filesystem;

namespace soundfield::cli {

namespace {

fs::path resolve_dir(const fs::path& override_dir, const fs::path& config_dir,
                     const std::string& key) {
  if (!override_dir.empty()) return override_dir;
  if (!config_dir.empty()) return config_dir;
  throw std::invalid_argument("config: " + key + ": no directory given (set \"" + key +
                              "\" in the config or pass --out)");
}

void apply_overrides(Config& config, const CommandOptions& options) {
  for (size_t i = 0; i < config.estimators.size(); ++i) {
    EstimatorSpec& spec = config.estimators[i];
    if (options.solver)
      spec.solver.method = *options.solver == "iterative"
                               ? SolverOptions::Method::IterativeMatrixFree
                               : SolverOptions::Method::Direct;
    if (options.tol) spec.solver.tol = *options.tol;
    if (!config.estimator_seeded[i])
      spec.seed = derive_seed(config.experiment.seed, 1000 + i);
  }
}

void require_estimators(const Config& config) {
  if (config.estimators.empty())
    throw std::invalid_argument("config: estimators: at least one estimator is required");
}

Scene scene_from(const Dataset& dataset) {
  Scene scene;
  scene.measurement = dataset.measurement;
  scene.eval_points = dataset.eval_points;
  scene.truth = dataset.truth;
  scene.stationary_points = dataset.stationary_points;
  scene.stationary_rirs = dataset.stationary_rirs;
  scene.noise_sigma = dataset.noise_sigma;
  return scene;
}

bool needs_stationary_data(EstimatorSpec::Method method) {
  return method == EstimatorSpec::Method::StationaryKernel ||
         method == EstimatorSpec::Method::StationaryFeatures ||
         method == EstimatorSpec::Method::NearestNeighbour;
}

std::string sanitize(std::string text) {
  for (char& c : text)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return text;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cell;
  std::stringstream cells(line);
  while (std::getline(cells, cell, ',')) fields.push_back(cell);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

std::vector<std::string> read_all_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

double resolved_band_hi(const Config& config) {
  return config.band_hi > 0.0 ? config.band_hi : 0.48 * config.experiment.sample_rate;
}

void print_table(const fs::path& path) {
  const std::vector<std::string> lines = read_all_lines(path);
  std::vector<std::vector<std::string>> rows;
  for (const std::string& line : lines) {
    if (line.empty() || line[0] == '#') continue;
    rows.push_back(split_fields(line));
  }
  if (rows.empty()) return;
  std::vector<size_t> widths;
  for (const auto& row : rows)
    for (size_t c = 0; c < row.size(); ++c) {
      if (c >= widths.size()) widths.push_back(0);
      widths[c] = std::max(widths[c], row[c].size());
    }
  std::cout << path.filename().string() << '\n';
  for (const auto& row : rows) {
    for (size_t c = 0; c < row.size(); ++c)
      std::cout << "  " << row[c] << std::string(widths[c] - row[c].size(), ' ');
    std::cout << '\n';
  }
}

}  // namespace

int cmd_simulate(const CommandOptions& options) {
  const Config config = load_config(options.config_path, options.seed);
  const fs::path dir = resolve_dir(options.out, config.dataset_dir, "dataset");

  const Scene scene = simulate_scene(config.experiment);
  Dataset dataset;
  dataset.measurement = scene.measurement;
  dataset.eval_points = scene.eval_points;
  dataset.truth = scene.truth;
  dataset.stationary_points = scene.stationary_points;
  dataset.stationary_rirs = scene.stationary_rirs;
  dataset.noise_sigma = scene.noise_sigma;
  dataset.periodic_source = true;
  dataset.seed = config.experiment.seed;
  dataset.config_hash = config.hash;
  save_dataset(dir, dataset);

  std::cout << "dataset " << dir.string() << ": " << dataset.measurement.count()
            << " samples, window " << dataset.measurement.window << ", "
            << dataset.eval_points.cols() << " truth points, "
            << dataset.stationary_points.cols() << " stationary microphones\n";
  return 0;
}

int cmd_estimate(const CommandOptions& options) {
  Config config = load_config(options.config_path, options.seed);
  require_estimators(config);
  apply_overrides(config, options);
  if (config.dataset_dir.empty())
    throw std::invalid_argument("config: dataset: required for the estimate command");
  const fs::path out = resolve_dir(options.out, config.results_dir, "results");

  const Dataset dataset = load_dataset(config.dataset_dir);
  const MovingMeasurement& m = dataset.measurement;
  if (m.window != config.experiment.window)
    throw std::invalid_argument("config: window " + std::to_string(config.experiment.window) +
                                " does not match the dataset window " +
                                std::to_string(m.window));
  if (m.sample_rate != config.experiment.sample_rate)
    throw std::invalid_argument("config: sample_rate " +
                                format_double(config.experiment.sample_rate) +
                                " does not match the dataset sample_rate " +
                                format_double(m.sample_rate));
  if (dataset.eval_points.cols() == 0)
    throw std::invalid_argument(config.dataset_dir.string() +
                                ": no truth/ grid to score the estimates against");
  for (const EstimatorSpec& spec : config.estimators)
    if (needs_stationary_data(spec.method) && dataset.stationary_points.cols() == 0)
      throw std::invalid_argument(config.dataset_dir.string() + ": " +
                                  method_name(spec.method) +
                                  " needs the stationary/ reference microphones");

  const Scene scene = scene_from(dataset);
  const std::string stamp = file_stamp(config.hash, config.experiment.seed);
  const double band_hi = resolved_band_hi(config);
  fs::create_directories(out);

  std::string summary =
      stamp +
      "\nmethod,lambda0,strength,features,broadband_db,band_db,fit_seconds,"
      "reconstruct_seconds,solver,iterations,residual\n";
  for (size_t i = 0; i < config.estimators.size(); ++i) {
    const EstimatorSpec& spec = config.estimators[i];
    const EstimateResult result = run_estimator(config.experiment, scene, spec);
    const double broadband = nmse_broadband_db(result.estimates, scene.truth);
    const double band = nmse_band_db(result.estimates, scene.truth,
                                     config.experiment.sample_rate, config.band_lo, band_hi);

    summary += method_name(spec.method) + ',' + format_double(spec.lambda0) + ',' +
               format_double(spec.strength) + ',' + std::to_string(spec.features) + ',' +
               format_double(broadband) + ',' + format_double(band) + ',' +
               format_double(result.fit_seconds) + ',' +
               format_double(result.reconstruct_seconds) + ',' + result.report.method + ',' +
               std::to_string(result.report.iterations) + ',' +
               format_double(result.report.residual) + '\n';

    const Eigen::VectorXd per_bin = nmse_per_frequency_db(result.estimates, scene.truth);
    std::string table = stamp + "\nfrequency_hz,nmse_db\n";
    for (int l = 0; l < per_bin.size(); ++l)
      table += format_double(config.experiment.sample_rate * l / config.experiment.window) +
               ',' + format_double(per_bin[l]) + '\n';
    write_file_atomic(out / ("nmse_frequency_" + std::to_string(i) + "_" +
                             method_name(spec.method) + ".csv"),
                      table);

    std::printf("%-20s broadband %8.2f dB   band %8.2f dB   fit %.3f s\n",
                method_name(spec.method).c_str(), broadband, band, result.fit_seconds);
  }
  write_file_atomic(out / "nmse_summary.csv", summary);
  return 0;
}

int cmd_sweep(const CommandOptions& options) {
  Config config = load_config(options.config_path, options.seed);
  require_estimators(config);
  if (!config.has_sweep)
    throw std::invalid_argument("config: sweep: required for the sweep command");
  if (options.solver || options.tol) apply_overrides(config, options);
  const fs::path out = resolve_dir(options.out, config.results_dir, "results");

  SweepPlan plan;
  plan.base = config.experiment;
  plan.estimators = config.estimators;
  plan.axis = config.sweep_axis;
  plan.values = config.sweep_values;
  plan.seeds = config.sweep_seeds;
  plan.band_lo = config.band_lo;
  plan.band_hi = config.band_hi;

  const fs::path cells = out / "cells";
  fs::create_directories(cells);
  const size_t rows_per_cell = plan.seeds.size() * plan.estimators.size();
  const std::string stamp = file_stamp(config.hash, config.experiment.seed);
  const std::string header =
      "axis,value,seed,estimator,method,lambda0,strength,features,broadband_db,band_db,"
      "fit_seconds,error";

  auto cell_path = [&](size_t value_index) {
    char name[64];
    std::snprintf(name, sizeof(name), "cell_%s_%03zu.csv", plan.axis.c_str(), value_index);
    return cells / name;
  };
  auto value_index_of = [&](double value) {
    for (size_t k = 0; k < plan.values.size(); ++k)
      if (plan.values[k] == value) return k;
    throw std::logic_error("sweep value not in plan");
  };

  struct Accumulator {
    double broadband = 0.0, band = 0.0, fit = 0.0;
    int count = 0, failed = 0;
    void add(double bb, double bd, double f, bool ok) {
      if (!ok) {
        ++failed;
        return;
      }
      broadband += bb;
      band += bd;
      fit += f;
      ++count;
    }
  };
  std::vector<std::vector<Accumulator>> totals(
      plan.values.size(), std::vector<Accumulator>(plan.estimators.size()));
  std::vector<bool> complete(plan.values.size(), false);
  std::vector<std::vector<SweepOutcome>> pending(plan.values.size());

  // completed cell files from an earlier run are trusted as long as they were
  // written under the same config hash and hold a full set of rows
  for (size_t k = 0; k < plan.values.size(); ++k) {
    const fs::path path = cell_path(k);
    if (!fs::exists(path)) continue;
    const std::vector<std::string> lines = read_all_lines(path);
    if (lines.size() < 2 || lines[0] != stamp || lines[1] != header) continue;
    std::vector<std::vector<std::string>> rows;
    for (size_t i = 2; i < lines.size(); ++i)
      if (!lines[i].empty()) rows.push_back(split_fields(lines[i]));
    if (rows.size() != rows_per_cell) continue;
    bool parsed = true;
    for (const auto& fields : rows) {
      if (fields.size() != 12) {
        parsed = false;
        break;
      }
      const int estimator = std::atoi(fields[3].c_str());
      const double broadband = std::strtod(fields[8].c_str(), nullptr);
      const double band = std::strtod(fields[9].c_str(), nullptr);
      const double fit = std::strtod(fields[10].c_str(), nullptr);
      const bool ok = fields[11].empty() && !std::isnan(broadband);
      totals[k][estimator].add(broadband, band, fit, ok);
    }
    if (parsed) complete[k] = true;
  }

  SweepCallbacks callbacks;
  callbacks.should_skip = [&](const SweepPoint& point) {
    return complete[value_index_of(point.value)];
  };
  callbacks.on_result = [&](const SweepOutcome& outcome) {
    const size_t k = value_index_of(outcome.point.value);
    pending[k].push_back(outcome);
    totals[k][outcome.point.estimator_index].add(outcome.broadband_db, outcome.band_db,
                                                 outcome.fit_seconds, outcome.error.empty());
    if (pending[k].size() < rows_per_cell) return;
    std::string table = stamp + '\n' + header + '\n';
    for (const SweepOutcome& row : pending[k]) {
      const EstimatorSpec& spec = row.point.estimator;
      table += plan.axis + ',' + format_double(row.point.value) + ',' +
               std::to_string(row.point.seed) + ',' +
               std::to_string(row.point.estimator_index) + ',' + method_name(spec.method) +
               ',' + format_double(spec.lambda0) + ',' + format_double(spec.strength) + ',' +
               std::to_string(spec.features) + ',' + format_double(row.broadband_db) + ',' +
               format_double(row.band_db) + ',' + format_double(row.fit_seconds) + ',' +
               sanitize(row.error) + '\n';
    }
    write_file_atomic(cell_path(k), table);
    complete[k] = true;
    pending[k].clear();
  };

  run_sweep(plan, callbacks);

  std::string aggregate =
      stamp + "\nvalue,estimator,method,mean_broadband_db,mean_band_db,mean_fit_seconds,seeds\n";
  for (size_t k = 0; k < plan.values.size(); ++k)
    for (size_t e = 0; e < plan.estimators.size(); ++e) {
      const Accumulator& acc = totals[k][e];
      const double inv = acc.count > 0 ? 1.0 / acc.count : 0.0;
      const double nan = std::numeric_limits<double>::quiet_NaN();
      aggregate += format_double(plan.values[k]) + ',' + std::to_string(e) + ',' +
                   method_name(plan.estimators[e].method) + ',' +
                   format_double(acc.count > 0 ? acc.broadband * inv : nan) + ',' +
                   format_double(acc.count > 0 ? acc.band * inv : nan) + ',' +
                   format_double(acc.count > 0 ? acc.fit * inv : nan) + ',' +
                   std::to_string(acc.count) + '\n';
      std::printf("%s=%-12g %-20s mean broadband %8.2f dB over %d seeds\n", plan.axis.c_str(),
                  plan.values[k], method_name(plan.estimators[e].method).c_str(),
                  acc.count > 0 ? acc.broadband * inv : std::nan(""), acc.count);
    }
  write_file_atomic(out / ("sweep_" + plan.axis + ".csv"), aggregate);
  return 0;
}

int cmd_import(const fs::path& dir) {
  const Dataset dataset = load_dataset(dir);
  char hash[24];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(dataset.config_hash));
  std::cout << "dataset " << dir.string() << " is valid\n"
            << "  samples          " << dataset.measurement.count() << '\n'
            << "  window           " << dataset.measurement.window << '\n'
            << "  sample_rate      " << format_double(dataset.measurement.sample_rate) << '\n'
            << "  truth points     " << dataset.eval_points.cols() << '\n'
            << "  stationary mics  " << dataset.stationary_points.cols() << '\n'
            << "  periodic source  " << (dataset.periodic_source ? "yes" : "no") << '\n'
            << "  noise sigma      " << format_double(dataset.noise_sigma) << '\n'
            << "  seed             " << dataset.seed << '\n'
            << "  config hash      " << hash << '\n';
  return 0;
}

int cmd_report(const fs::path& dir) {
  if (!fs::is_directory(dir))
    throw std::invalid_argument(dir.string() + ": not a results directory");
  bool found = false;
  if (fs::exists(dir / "nmse_summary.csv")) {
    print_table(dir / "nmse_summary.csv");
    found = true;
  }
  std::vector<fs::path> sweeps;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("sweep_", 0) == 0 && entry.path().extension() == ".csv")
      sweeps.push_back(entry.path());
  }
  std::sort(sweeps.begin(), sweeps.end());
  for (const fs::path& path : sweeps) {
    if (found) std::cout << '\n';
    print_table(path);
    found = true;
  }
  if (!found)
    throw std::invalid_argument(dir.string() +
                                ": no nmse_summary.csv or sweep_*.csv tables found");
  return 0;
}

}  // namespace soundfield::cli
