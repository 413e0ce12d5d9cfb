#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace soundfield::cli {

struct CommandOptions {
  std::filesystem::path config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> solver;  // "direct" | "iterative"
  std::optional<double> tol;
  std::filesystem::path out;  // overrides the config's dataset/results directory
};

/// Commands return 0 on success and signal failure by throwing:
/// std::invalid_argument for configuration and layout problems (exit 2),
/// std::runtime_error for numeric failures (exit 3).
int cmd_simulate(const CommandOptions& options);
int cmd_estimate(const CommandOptions& options);
int cmd_sweep(const CommandOptions& options);
int cmd_import(const std::filesystem::path& dir);
int cmd_report(const std::filesystem::path& dir);

}  // namespace soundfield::cli
