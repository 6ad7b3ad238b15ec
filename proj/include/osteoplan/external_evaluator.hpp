#pragma once

#include <string>

#include "osteoplan/evaluator.hpp"

namespace osteoplan {

/// {"steps": n, "apposition": {"left": [...], "right": [...], "middle": [...]},
///  "sf_worst": {"left": [...], "right": [...]}}; +inf is written as null.
std::string evaluation_result_to_json(const EvaluationResult& result);
EvaluationResult evaluation_result_from_json(const std::string& text);

/// {"phi": [...], "names": [...]}
std::string evaluation_request_json(const DesignVector& phi);

/// Runs `/bin/sh -c command` once per evaluation, writes the request JSON to
/// its stdin and parses an EvaluationResult from its stdout. A nonzero exit
/// status or malformed output raises Error.
class ExternalEvaluator final : public Evaluator {
 public:
  ExternalEvaluator(FeasibleRegion region, std::string command);

  EvaluationResult evaluate(const DesignVector& phi) const override;
  const FeasibleRegion& region() const override { return region_; }
  const std::string& command() const { return command_; }

 private:
  FeasibleRegion region_;
  std::string command_;
};

}  // namespace osteoplan
