#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "soundfield/eval.hpp"

namespace soundfield::cli {

/// Everything a command needs, read from one JSON config file. The hash is
/// FNV-1a over a canonical serialization of the resolved settings (defaults
/// applied, seed override applied) so equal hashes mean equal numerics; the
/// output paths and solver choice are deliberately excluded from it.
struct Config {
  ExperimentConfig experiment;
  std::vector<EstimatorSpec> estimators;
  std::vector<bool> estimator_seeded;  // true where the config pinned a draw seed
  double band_lo = 20.0;
  double band_hi = 0.0;  // 0 = 0.48 * sample_rate
  std::filesystem::path dataset_dir;
  std::filesystem::path results_dir;
  bool has_sweep = false;
  std::string sweep_axis;
  std::vector<double> sweep_values;
  std::vector<std::uint64_t> sweep_seeds;
  std::uint64_t hash = 0;
};

/// Parses and validates the config; failures throw std::invalid_argument
/// with the offending field path (e.g. "config: room.rt60: expected a
/// number").
Config load_config(const std::filesystem::path& path,
                   std::optional<std::uint64_t> seed_override);

std::uint64_t fnv1a_hash(const std::string& text);

}  // namespace soundfield::cli
