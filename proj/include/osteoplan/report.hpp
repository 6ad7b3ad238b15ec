#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "osteoplan/analysis.hpp"
#include "osteoplan/bayes_opt.hpp"
#include "osteoplan/design_space.hpp"

namespace osteoplan {

inline constexpr const char* kToolVersion = "0.1.0";

/// 17 significant digits; non-finite values as inf, -inf, nan.
std::string format_number(double value);

std::uint64_t fnv1a64(const std::string& bytes);

/// Writes to a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// One row per evaluation: evaluation, phase, raw and normalised design
/// components, objective, loss, best-so-far loss, safeguard columns.
std::string trace_csv(const OptimizationTrace& trace, const FeasibleRegion& region);

/// Normalised components and objective for every evaluation of every seed;
/// rows in the best 10% of objective values are flagged.
std::string parallel_coordinates_csv(const std::vector<OptimizationTrace>& traces, const FeasibleRegion& region);

/// index, mean, std of the best-so-far curves.
std::string convergence_csv(const ConvergenceSummary& summary);

std::string aggregate_json(const RunResult& result, const FeasibleRegion& region, const std::string& objective);

std::string sensitivity_csv(const SensitivityReport& report);

struct CommandStatus {
  std::string command;
  int exit_code = 0;
};

struct RunManifest {
  std::string config_hash;  // FNV-1a of the canonical configuration, hex
  std::string tool_version = kToolVersion;
  std::string started;      // UTC, ISO 8601
  std::string finished;
  std::vector<CommandStatus> commands;
  std::vector<std::string> artifacts;
};

std::string utc_timestamp();
std::string hash_hex(std::uint64_t h);
void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);

}  // namespace osteoplan
