#include "osteoplan/report.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>

#include <fmt/format.h>
#include <json.hpp>

#include "osteoplan/errors.hpp"

namespace osteoplan {

using nlohmann::json;

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", v);
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) { return fmt::format("{:016x}", h); }

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw Error(fmt::format("cannot write {}", tmp.string()));
    f << content;
    if (!f) throw Error(fmt::format("write failed for {}", tmp.string()));
  }
  std::filesystem::rename(tmp, path);
}

std::string trace_csv(const OptimizationTrace& trace, const FeasibleRegion& region) {
  const auto names = design_component_names(region.segment_count());
  std::string out = "evaluation,phase";
  for (const auto& n : names) out += "," + n;
  for (const auto& n : names) out += "," + n + "_norm";
  out += ",objective,loss,best_so_far,safeguard,inflations,safeguard_capped\n";
  for (const auto& r : trace.records) {
    out += fmt::format("{},{}", r.evaluation, r.phase);
    for (double v : r.phi.to_vector()) out += "," + format_number(v);
    for (double v : normalize(region, r.phi)) out += "," + format_number(v);
    out += fmt::format(",{},{},{},{},{},{}\n", format_number(r.score), format_number(r.loss), format_number(r.best_loss),
                       r.safeguard_triggered ? 1 : 0, r.inflations, r.safeguard_capped ? 1 : 0);
  }
  return out;
}

std::string parallel_coordinates_csv(const std::vector<OptimizationTrace>& traces, const FeasibleRegion& region) {
  std::vector<double> scores;
  for (const auto& t : traces)
    for (const auto& r : t.records) scores.push_back(r.score);
  double cut = std::numeric_limits<double>::infinity();
  if (!scores.empty()) {
    std::vector<double> sorted = scores;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const std::size_t k = std::max<std::size_t>(1, (sorted.size() + 9) / 10);
    cut = sorted[k - 1];
  }
  const auto names = design_component_names(region.segment_count());
  std::string out = "seed,evaluation";
  for (const auto& n : names) out += "," + n;
  out += ",objective,top_decile\n";
  for (const auto& t : traces)
    for (const auto& r : t.records) {
      out += fmt::format("{},{}", t.seed, r.evaluation);
      for (double v : normalize(region, r.phi)) out += "," + format_number(v);
      out += fmt::format(",{},{}\n", format_number(r.score), r.score >= cut ? 1 : 0);
    }
  return out;
}

std::string convergence_csv(const ConvergenceSummary& s) {
  std::string out = "evaluation,mean_best,std_best\n";
  for (std::size_t i = 0; i < s.mean.size(); ++i)
    out += fmt::format("{},{},{}\n", i + 1, format_number(s.mean[i]), format_number(s.stddev[i]));
  return out;
}

namespace {

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::string aggregate_json(const RunResult& result, const FeasibleRegion& region, const std::string& objective) {
  json j;
  j["objective"] = objective;
  j["components"] = design_component_names(region.segment_count());
  j["seeds"] = json::array();
  for (const auto& t : result.traces) {
    json s{{"seed", t.seed}, {"evaluations", t.records.size()}, {"initial_evaluations", t.initial_evaluations}};
    if (const TraceRecord* b = t.best()) {
      s["best_objective"] = finite_or_null(b->score);
      s["best_phi"] = b->phi.to_vector();
      s["best_evaluation"] = b->evaluation;
    }
    s["safeguard_events"] = std::count_if(t.records.begin(), t.records.end(), [](const TraceRecord& r) { return r.safeguard_triggered; });
    s["error"] = t.error ? json(*t.error) : json(nullptr);
    j["seeds"].push_back(s);
  }
  const auto& a = result.aggregate;
  if (a.best_phi) {
    j["best_phi"] = a.best_phi->to_vector();
    j["best_phi_normalized"] = normalize(region, *a.best_phi);
    j["best_objective"] = finite_or_null(a.best_score);
  }
  json mean = json::array(), sd = json::array();
  for (double v : a.mean_best) mean.push_back(finite_or_null(-v));
  for (double v : a.std_best) sd.push_back(finite_or_null(v));
  j["mean_best_objective"] = mean;
  j["std_best_objective"] = sd;
  return j.dump(2);
}

std::string sensitivity_csv(const SensitivityReport& report) {
  std::string out = "case,parameter,direction,factor,baseline_f_opt,mean_f_opt,mean_relative_change,error\n";
  for (const auto& r : report.rows) {
    double mean = 0.0;
    for (double f : r.f_opt) mean += f;
    mean /= static_cast<double>(std::max<std::size_t>(1, r.f_opt.size()));
    std::string err = r.error.value_or("");
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    out += fmt::format("{},{},{},{},{},{},{},{}\n", r.case_name, r.parameter, r.direction > 0 ? "+" : "-",
                       format_number(r.factor), format_number(r.baseline_f_opt), format_number(mean),
                       format_number(r.mean_relative_change), err);
  }
  return out;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest(const std::filesystem::path& path, const RunManifest& m) {
  json j;
  j["config_hash"] = m.config_hash;
  j["tool_version"] = m.tool_version;
  j["started"] = m.started;
  j["finished"] = m.finished;
  j["commands"] = json::array();
  for (const auto& c : m.commands) j["commands"].push_back({{"command", c.command}, {"exit_code", c.exit_code}});
  j["artifacts"] = m.artifacts;
  write_file_atomic(path, j.dump(2) + "\n");
}

}  // namespace osteoplan
