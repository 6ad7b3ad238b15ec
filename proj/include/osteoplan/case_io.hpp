#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "osteoplan/bayes_opt.hpp"
#include "osteoplan/design_space.hpp"
#include "osteoplan/evaluator.hpp"
#include "osteoplan/objective.hpp"

namespace osteoplan {

enum class EvaluatorKind { Synthetic, External };

/// One reconstruction case: defect class, feasible region, bone HU and the
/// evaluator that scores it.
struct CaseBundle {
  std::string name;
  std::string description;
  std::string defect;  // B | S | RB
  FeasibleRegion region;
  double cortical_hu = 0.0;
  double cancellous_hu = 0.0;
  DesignVector baseline;
  EvaluatorKind evaluator = EvaluatorKind::Synthetic;
  SyntheticModelConfig synthetic;  // densities follow the HU fields
  std::string external_command;
  std::optional<std::filesystem::path> registration_bundle;

  int segment_count() const { return region.segment_count(); }
};

/// Reads and validates a case file. Every schema problem is collected and
/// reported in one SchemaError. Relative paths resolve against the file.
CaseBundle load_case(const std::filesystem::path& path);
CaseBundle parse_case(const std::string& text, const std::filesystem::path& base_dir = {});

/// Canonical JSON with every field spelled out.
std::string case_to_json(const CaseBundle& bundle);
void save_case(const std::filesystem::path& path, const CaseBundle& bundle);

std::unique_ptr<Evaluator> make_evaluator(const CaseBundle& bundle);

/// Parses "a,b,c,d,e[,f]" into a design vector.
DesignVector parse_phi(const std::string& text);

struct RunConfig {
  std::filesystem::path case_path;
  ObjectiveKind objective = ObjectiveKind::FOpt;
  ObjectiveWeights weights;
  BoConfig bo;
  std::filesystem::path out_dir = "out";
  unsigned threads = 1;
};

/// Run configuration file: {"case", "objective", "seeds", "iterations",
/// "n_sobol", "weights", "bo", "out", "threads"}. Missing keys keep defaults;
/// the case's segment count picks t_sigma unless "bo.t_sigma" is given.
RunConfig load_run_config(const std::filesystem::path& path);

/// Canonical JSON of everything that affects results (used for hashing).
std::string run_config_json(const RunConfig& config);

}  // namespace osteoplan
