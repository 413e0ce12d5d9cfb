#include "config.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

namespace soundfield::cli {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& path, const std::string& what) {
  throw std::invalid_argument("config: " + path + ": " + what);
}

void reject_unknown_keys(const json& object, const std::string& path,
                         const std::set<std::string>& allowed) {
  for (const auto& item : object.items())
    if (!allowed.count(item.key()))
      bad(path.empty() ? item.key() : path + "." + item.key(), "unknown key");
}

double as_number(const json& value, const std::string& path) {
  if (!value.is_number()) bad(path, "expected a number");
  return value.get<double>();
}

int as_int(const json& value, const std::string& path) {
  if (!value.is_number_integer()) bad(path, "expected an integer");
  return value.get<int>();
}

std::uint64_t as_u64(const json& value, const std::string& path) {
  if (!value.is_number_unsigned() && !(value.is_number_integer() && value.get<long long>() >= 0))
    bad(path, "expected a non-negative integer");
  return value.get<std::uint64_t>();
}

std::string as_string(const json& value, const std::string& path) {
  if (!value.is_string()) bad(path, "expected a string");
  return value.get<std::string>();
}

Eigen::Vector3d as_vec3(const json& value, const std::string& path) {
  if (!value.is_array() || value.size() != 3) bad(path, "expected an array of 3 numbers");
  return {as_number(value[0], path + "[0]"), as_number(value[1], path + "[1]"),
          as_number(value[2], path + "[2]")};
}

Eigen::Vector3i as_vec3i(const json& value, const std::string& path) {
  if (!value.is_array() || value.size() != 3) bad(path, "expected an array of 3 integers");
  return {as_int(value[0], path + "[0]"), as_int(value[1], path + "[1]"),
          as_int(value[2], path + "[2]")};
}

EstimatorSpec::Method parse_method(const std::string& name, const std::string& path) {
  if (name == "moving-kernel") return EstimatorSpec::Method::MovingKernel;
  if (name == "moving-features") return EstimatorSpec::Method::MovingFeatures;
  if (name == "stationary-kernel") return EstimatorSpec::Method::StationaryKernel;
  if (name == "stationary-features") return EstimatorSpec::Method::StationaryFeatures;
  if (name == "nearest-neighbour") return EstimatorSpec::Method::NearestNeighbour;
  bad(path, "unknown method '" + name +
                "' (expected moving-kernel, moving-features, stationary-kernel, "
                "stationary-features or nearest-neighbour)");
}

void parse_room(const json& object, const std::string& path, RoomConfig& room) {
  if (!object.is_object()) bad(path, "expected an object");
  reject_unknown_keys(object, path,
                      {"dimensions", "rt60", "reflection", "max_order", "sound_speed"});
  if (object.contains("dimensions"))
    room.dimensions = as_vec3(object["dimensions"], path + ".dimensions");
  if (object.contains("rt60")) room.rt60 = as_number(object["rt60"], path + ".rt60");
  if (object.contains("reflection"))
    room.reflection = as_number(object["reflection"], path + ".reflection");
  if (object.contains("max_order"))
    room.max_order = as_int(object["max_order"], path + ".max_order");
  if (object.contains("sound_speed"))
    room.sound_speed = as_number(object["sound_speed"], path + ".sound_speed");
}

EstimatorSpec parse_estimator(const json& object, const std::string& path, bool& seeded) {
  if (!object.is_object()) bad(path, "expected an object");
  reject_unknown_keys(object, path,
                      {"method", "lambda0", "strength", "features", "seed", "solver", "tol"});
  if (!object.contains("method")) bad(path + ".method", "required");
  EstimatorSpec spec;
  spec.method = parse_method(as_string(object["method"], path + ".method"), path + ".method");
  if (object.contains("lambda0")) {
    spec.lambda0 = as_number(object["lambda0"], path + ".lambda0");
    if (spec.lambda0 < 0.0) bad(path + ".lambda0", "must be >= 0");
  }
  if (object.contains("strength")) {
    spec.strength = as_number(object["strength"], path + ".strength");
    if (spec.strength < 0.0) bad(path + ".strength", "must be >= 0");
  }
  if (object.contains("features")) {
    spec.features = as_int(object["features"], path + ".features");
    if (spec.features < 1) bad(path + ".features", "must be >= 1");
  }
  seeded = object.contains("seed");
  if (seeded) spec.seed = as_u64(object["seed"], path + ".seed");
  if (object.contains("solver")) {
    const std::string solver = as_string(object["solver"], path + ".solver");
    if (solver == "direct")
      spec.solver.method = SolverOptions::Method::Direct;
    else if (solver == "iterative")
      spec.solver.method = SolverOptions::Method::IterativeMatrixFree;
    else
      bad(path + ".solver", "expected 'direct' or 'iterative'");
  }
  if (object.contains("tol")) {
    spec.solver.tol = as_number(object["tol"], path + ".tol");
    if (!(spec.solver.tol > 0.0)) bad(path + ".tol", "must be > 0");
  }
  return spec;
}

json canonical(const Config& config) {
  const ExperimentConfig& e = config.experiment;
  json out;
  out["room"] = {{"dimensions", {e.room.dimensions.x(), e.room.dimensions.y(),
                                 e.room.dimensions.z()}},
                 {"rt60", e.room.rt60},
                 {"reflection", e.room.reflection},
                 {"max_order", e.room.max_order},
                 {"sound_speed", e.room.sound_speed}};
  out["source_position"] = {e.source_position.x(), e.source_position.y(),
                            e.source_position.z()};
  out["region_center"] = {e.region_center.x(), e.region_center.y(), e.region_center.z()};
  out["region_extent"] = {e.region_extent.x(), e.region_extent.y(), e.region_extent.z()};
  out["grid"] = {e.grid.x(), e.grid.y(), e.grid.z()};
  out["mic_speed"] = e.mic_speed;
  out["sample_rate"] = e.sample_rate;
  out["window"] = e.window;
  out["samples"] = e.samples;
  out["stationary_mics"] = e.stationary_mics;
  out["snr_db"] = std::isfinite(e.snr_db) ? json(e.snr_db) : json(nullptr);
  out["sweep_lo"] = e.sweep_lo;
  out["sweep_hi"] = e.sweep_hi;
  out["seed"] = e.seed;
  out["band"] = {config.band_lo, config.band_hi};
  out["estimators"] = json::array();
  for (size_t i = 0; i < config.estimators.size(); ++i) {
    const EstimatorSpec& spec = config.estimators[i];
    json entry = {{"method", method_name(spec.method)},
                  {"lambda0", spec.lambda0},
                  {"strength", spec.strength},
                  {"features", spec.features}};
    entry["seed"] = config.estimator_seeded[i] ? json(spec.seed) : json(nullptr);
    out["estimators"].push_back(entry);
  }
  if (config.has_sweep)
    out["sweep"] = {{"axis", config.sweep_axis},
                    {"values", config.sweep_values},
                    {"seeds", config.sweep_seeds}};
  else
    out["sweep"] = nullptr;
  return out;
}

}  // namespace

std::uint64_t fnv1a_hash(const std::string& text) {
  std::uint64_t hash = 14695981039346656037ull;
  for (const unsigned char byte : text) {
    hash ^= byte;
    hash *= 1099511628211ull;
  }
  return hash;
}

Config load_config(const std::filesystem::path& path,
                   std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path.string());
  json root = json::parse(in, nullptr, false);
  if (root.is_discarded())
    throw std::invalid_argument("config: " + path.string() + " is not valid JSON");
  if (!root.is_object()) bad("", "expected a JSON object");
  reject_unknown_keys(root, "",
                      {"room", "source_position", "region_center", "region_extent", "grid",
                       "mic_speed", "sample_rate", "window", "samples", "stationary_mics",
                       "snr_db", "sweep_lo", "sweep_hi", "seed", "band", "dataset", "results",
                       "estimators", "sweep"});

  Config config;
  ExperimentConfig& e = config.experiment;
  if (root.contains("room")) parse_room(root["room"], "room", e.room);
  if (root.contains("source_position"))
    e.source_position = as_vec3(root["source_position"], "source_position");
  if (root.contains("region_center"))
    e.region_center = as_vec3(root["region_center"], "region_center");
  if (root.contains("region_extent"))
    e.region_extent = as_vec3(root["region_extent"], "region_extent");
  if (root.contains("grid")) e.grid = as_vec3i(root["grid"], "grid");
  if (root.contains("mic_speed")) e.mic_speed = as_number(root["mic_speed"], "mic_speed");
  if (root.contains("sample_rate"))
    e.sample_rate = as_number(root["sample_rate"], "sample_rate");
  if (root.contains("window")) e.window = as_int(root["window"], "window");
  if (root.contains("samples")) e.samples = as_int(root["samples"], "samples");
  if (root.contains("stationary_mics"))
    e.stationary_mics = as_int(root["stationary_mics"], "stationary_mics");
  if (root.contains("snr_db") && !root["snr_db"].is_null())
    e.snr_db = as_number(root["snr_db"], "snr_db");
  if (root.contains("sweep_lo")) e.sweep_lo = as_number(root["sweep_lo"], "sweep_lo");
  if (root.contains("sweep_hi")) e.sweep_hi = as_number(root["sweep_hi"], "sweep_hi");
  if (root.contains("seed")) e.seed = as_u64(root["seed"], "seed");
  if (seed_override) e.seed = *seed_override;

  if (root.contains("band")) {
    const json& band = root["band"];
    if (!band.is_array() || band.size() != 2) bad("band", "expected [lo_hz, hi_hz]");
    config.band_lo = as_number(band[0], "band[0]");
    config.band_hi = as_number(band[1], "band[1]");
    if (config.band_lo < 0.0) bad("band[0]", "must be >= 0");
  }
  if (root.contains("dataset")) config.dataset_dir = as_string(root["dataset"], "dataset");
  if (root.contains("results")) config.results_dir = as_string(root["results"], "results");

  if (root.contains("estimators")) {
    const json& list = root["estimators"];
    if (!list.is_array()) bad("estimators", "expected an array");
    for (size_t i = 0; i < list.size(); ++i) {
      bool seeded = false;
      const std::string entry_path = "estimators[" + std::to_string(i) + "]";
      config.estimators.push_back(parse_estimator(list[i], entry_path, seeded));
      config.estimator_seeded.push_back(seeded);
    }
  }

  if (root.contains("sweep") && !root["sweep"].is_null()) {
    const json& sweep = root["sweep"];
    if (!sweep.is_object()) bad("sweep", "expected an object");
    reject_unknown_keys(sweep, "sweep", {"axis", "values", "seeds"});
    if (!sweep.contains("axis")) bad("sweep.axis", "required");
    config.sweep_axis = as_string(sweep["axis"], "sweep.axis");
    if (!sweep.contains("values") || !sweep["values"].is_array() || sweep["values"].empty())
      bad("sweep.values", "expected a non-empty array of numbers");
    for (size_t i = 0; i < sweep["values"].size(); ++i)
      config.sweep_values.push_back(
          as_number(sweep["values"][i], "sweep.values[" + std::to_string(i) + "]"));
    if (!sweep.contains("seeds") || !sweep["seeds"].is_array() || sweep["seeds"].empty())
      bad("sweep.seeds", "expected a non-empty array of seeds");
    for (size_t i = 0; i < sweep["seeds"].size(); ++i)
      config.sweep_seeds.push_back(
          as_u64(sweep["seeds"][i], "sweep.seeds[" + std::to_string(i) + "]"));
    config.has_sweep = true;
  }

  try {
    e.validate();
  } catch (const std::invalid_argument& reason) {
    throw std::invalid_argument("config: " + std::string(reason.what()));
  }

  config.hash = fnv1a_hash(canonical(config).dump());
  return config;
}

}  // namespace soundfield::cli
