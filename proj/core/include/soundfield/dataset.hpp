#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>

#include "soundfield/moving.hpp"

namespace soundfield {

/// On-disk layout of a moving-microphone measurement, one directory per
/// dataset:
///   meta                  key/value text: rates, sizes, units, seed, hash
///   trajectory.csv        n,x,y,z per recording sample
///   recording.csv         n,p
///   source.csv            n,phi with window-1 pre-roll rows at negative n
///   truth/points.csv      i,x,y,z evaluation grid (optional)
///   truth/rir_#####.csv   n,h per grid point
///   stationary/...        same shape; reference microphones for baselines
/// Numbers carry 17 significant digits so a load/save cycle is byte
/// identical, and every file opens with "# config_hash=<hex16> seed=<dec>".
struct Dataset {
  MovingMeasurement measurement;
  Eigen::Matrix3Xd eval_points;        // 3 x E, may be empty
  Eigen::MatrixXd truth;               // window x E
  Eigen::Matrix3Xd stationary_points;  // 3 x M, may be empty
  Eigen::MatrixXd stationary_rirs;     // window x M
  double noise_sigma = 0.0;
  bool periodic_source = true;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;

  void validate() const;
};

void save_dataset(const std::filesystem::path& dir, const Dataset& dataset);

/// Reads and validates a dataset directory. A missing source pre-roll is
/// rebuilt by periodic extension when the meta file declares the source
/// periodic, and rejected otherwise. All failures throw
/// std::invalid_argument naming the offending file.
Dataset load_dataset(const std::filesystem::path& dir);

/// 17-significant-digit decimal; strtod of the result restores the exact bits
std::string format_double(double value);

/// the "# config_hash=<hex16> seed=<dec>" comment opening every emitted file
std::string file_stamp(std::uint64_t config_hash, std::uint64_t seed);

/// write-temp-rename so readers never observe a partial file
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace soundfield
