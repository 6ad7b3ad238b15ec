#include "osteoplan/case_io.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "osteoplan/errors.hpp"
#include "osteoplan/external_evaluator.hpp"

namespace osteoplan {

using nlohmann::json;

namespace {

class Problems {
 public:
  void add(std::string msg) { list_.push_back(std::move(msg)); }
  bool empty() const { return list_.empty(); }
  [[noreturn]] void raise(const std::string& what) const {
    std::string msg = what + ": " + std::to_string(list_.size()) + " schema error(s)";
    for (const auto& p : list_) msg += "\n  " + p;
    throw SchemaError(msg);
  }

 private:
  std::vector<std::string> list_;
};

std::optional<double> number_at(const json& obj, const std::string& key, const std::string& path, Problems& pr,
                                bool required = true) {
  if (!obj.is_object() || !obj.contains(key) || obj.at(key).is_null()) {
    if (required) pr.add(fmt::format("{}.{}: missing", path, key));
    return std::nullopt;
  }
  if (!obj.at(key).is_number()) {
    pr.add(fmt::format("{}.{}: expected a number", path, key));
    return std::nullopt;
  }
  return obj.at(key).get<double>();
}

std::optional<DesignVector> vector_at(const json& obj, const std::string& key, const std::string& path,
                                      std::size_t dims, Problems& pr, bool required) {
  if (!obj.is_object() || !obj.contains(key)) {
    if (required) pr.add(fmt::format("{}.{}: missing", path, key));
    return std::nullopt;
  }
  const json& v = obj.at(key);
  if (!v.is_array() || v.size() != dims) {
    pr.add(fmt::format("{}.{}: expected an array of {} numbers", path, key, dims));
    return std::nullopt;
  }
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) {
      pr.add(fmt::format("{}.{}: expected numbers", path, key));
      return std::nullopt;
    }
    out.push_back(x.get<double>());
  }
  return DesignVector::from_vector(out);
}

template <typename T>
void maybe(const json& obj, const char* key, T& field, const std::string& path, Problems& pr) {
  if (!obj.contains(key)) return;
  try {
    field = obj.at(key).get<T>();
  } catch (const json::exception&) {
    pr.add(fmt::format("{}.{}: wrong type", path, key));
  }
}

void read_synthetic(const json& s, SyntheticModelConfig& c, std::size_t dims, Problems& pr) {
  const std::string path = "evaluator.synthetic";
  if (auto phi = vector_at(s, "phi_star", path, dims, pr, true)) c.phi_star = *phi;
  maybe(s, "elements_per_interface", c.elements_per_interface, path, pr);
  maybe(s, "steps", c.steps, path, pr);
  maybe(s, "cycle_seconds", c.cycle_seconds, path, pr);
  maybe(s, "peak_gap", c.peak_gap_mm, path, pr);
  maybe(s, "bolus_start", c.bolus_start, path, pr);
  maybe(s, "bolus_end", c.bolus_end, path, pr);
  maybe(s, "bolus_boost", c.bolus_boost, path, pr);
  maybe(s, "clip_fraction", c.clip_fraction, path, pr);
  maybe(s, "heterogeneity", c.heterogeneity, path, pr);
  maybe(s, "cortical_fraction", c.cortical_fraction, path, pr);
  maybe(s, "load_gain", c.load_gain, path, pr);
  if (s.contains("scales")) {
    const json& m = s["scales"];
    auto& k = c.scales;
    maybe(m, "left_roll", k.left_roll, path + ".scales", pr);
    maybe(m, "left_pitch", k.left_pitch, path + ".scales", pr);
    maybe(m, "right_roll", k.right_roll, path + ".scales", pr);
    maybe(m, "right_pitch", k.right_pitch, path + ".scales", pr);
    maybe(m, "vertical", k.vertical, path + ".scales", pr);
    maybe(m, "rdp", k.rdp, path + ".scales", pr);
    maybe(m, "middle_angle", k.middle_angle, path + ".scales", pr);
  }
  if (s.contains("contact")) {
    maybe(s["contact"], "E_kpa", c.contact.youngs_kpa, path + ".contact", pr);
    maybe(s["contact"], "nu", c.contact.poisson, path + ".contact", pr);
    maybe(s["contact"], "thickness_mm", c.contact.thickness_mm, path + ".contact", pr);
  }
  if (s.contains("stimulus")) {
    maybe(s["stimulus"], "s0", c.stimulus.s0, path + ".stimulus", pr);
    maybe(s["stimulus"], "delta", c.stimulus.delta, path + ".stimulus", pr);
  }
  if (s.contains("muscle")) {
    maybe(s["muscle"], "force_scale", c.muscle.force_scale, path + ".muscle", pr);
    maybe(s["muscle"], "optimal_length_scale", c.muscle.optimal_length_scale, path + ".muscle", pr);
  }
  for (auto* mat : {&c.cortical, &c.cancellous}) {
    const char* key = mat == &c.cortical ? "cortical" : "cancellous";
    if (!s.contains(key)) continue;
    maybe(s[key], "youngs_gpa", mat->youngs_gpa, path + "." + key, pr);
    maybe(s[key], "poisson", mat->poisson, path + "." + key, pr);
    maybe(s[key], "yield_mpa", mat->yield_mpa, path + "." + key, pr);
  }
}

json synthetic_json(const SyntheticModelConfig& c) {
  json s;
  s["phi_star"] = c.phi_star.to_vector();
  s["elements_per_interface"] = c.elements_per_interface;
  s["steps"] = c.steps;
  s["cycle_seconds"] = c.cycle_seconds;
  s["peak_gap"] = c.peak_gap_mm;
  s["bolus_start"] = c.bolus_start;
  s["bolus_end"] = c.bolus_end;
  s["bolus_boost"] = c.bolus_boost;
  s["clip_fraction"] = c.clip_fraction;
  s["heterogeneity"] = c.heterogeneity;
  s["cortical_fraction"] = c.cortical_fraction;
  s["load_gain"] = c.load_gain;
  s["scales"] = {{"left_roll", c.scales.left_roll},   {"left_pitch", c.scales.left_pitch},
                 {"right_roll", c.scales.right_roll}, {"right_pitch", c.scales.right_pitch},
                 {"vertical", c.scales.vertical},     {"rdp", c.scales.rdp},
                 {"middle_angle", c.scales.middle_angle}};
  s["contact"] = {{"E_kpa", c.contact.youngs_kpa}, {"nu", c.contact.poisson}, {"thickness_mm", c.contact.thickness_mm}};
  s["stimulus"] = {{"s0", c.stimulus.s0}, {"delta", c.stimulus.delta}};
  s["muscle"] = {{"force_scale", c.muscle.force_scale}, {"optimal_length_scale", c.muscle.optimal_length_scale}};
  s["cortical"] = {{"youngs_gpa", c.cortical.youngs_gpa}, {"poisson", c.cortical.poisson}, {"yield_mpa", c.cortical.yield_mpa}};
  s["cancellous"] = {
      {"youngs_gpa", c.cancellous.youngs_gpa}, {"poisson", c.cancellous.poisson}, {"yield_mpa", c.cancellous.yield_mpa}};
  return s;
}

}  // namespace

CaseBundle parse_case(const std::string& text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw SchemaError(fmt::format("case file is not valid JSON: {}", e.what()));
  }
  if (!j.is_object()) throw SchemaError("case file must hold a JSON object");

  Problems pr;
  CaseBundle c;
  if (j.contains("name") && j["name"].is_string()) c.name = j["name"].get<std::string>();
  else pr.add("name: missing or not a string");
  c.description = j.value("description", std::string{});

  if (j.contains("defect") && j["defect"].is_string()) {
    c.defect = j["defect"].get<std::string>();
    if (c.defect != "B" && c.defect != "S" && c.defect != "RB") pr.add(fmt::format("defect: '{}' is not one of B, S, RB", c.defect));
  } else {
    pr.add("defect: missing or not a string");
  }

  const json bounds = j.value("bounds", json::object());
  if (!j.contains("bounds")) pr.add("bounds: missing");
  const auto br = [&](const char* key, double& field) {
    if (auto v = number_at(bounds, key, "bounds", pr)) {
      field = *v;
      if (!(*v > 0.0)) pr.add(fmt::format("bounds.{}: must be positive", key));
    }
  };
  br("alpha_r", c.region.alpha_r);
  br("alpha_p", c.region.alpha_p);
  br("beta_r", c.region.beta_r);
  br("beta_p", c.region.beta_p);
  br("z", c.region.z);
  const bool two_segments = c.defect == "RB";
  if (auto r = number_at(bounds, "r", "bounds", pr, two_segments)) {
    if (!two_segments) pr.add(fmt::format("bounds.r: only ramus-body (RB) cases have an l_RDP range"));
    else if (!(*r > 0.0)) pr.add("bounds.r: must be positive");
    c.region.r = *r;
  } else if (two_segments) {
    c.region.r = 1.0;  // placeholder so later checks use the right arity
  }
  const std::size_t dims = two_segments ? 6 : 5;

  const json bone = j.value("bone", json::object());
  if (!j.contains("bone")) pr.add("bone: missing");
  if (auto v = number_at(bone, "cortical_hu", "bone", pr)) c.cortical_hu = *v;
  if (auto v = number_at(bone, "cancellous_hu", "bone", pr)) c.cancellous_hu = *v;

  c.baseline = DesignVector::baseline(two_segments ? 2 : 1);
  if (auto b = vector_at(j, "baseline", "case", dims, pr, false)) c.baseline = *b;

  const json ev = j.value("evaluator", json::object());
  const std::string kind = ev.value("kind", std::string("synthetic"));
  if (kind == "synthetic") {
    c.evaluator = EvaluatorKind::Synthetic;
    read_synthetic(ev.value("synthetic", json::object()), c.synthetic, dims, pr);
    if (!ev.contains("synthetic")) pr.add("evaluator.synthetic: missing (phi_star is required)");
  } else if (kind == "external") {
    c.evaluator = EvaluatorKind::External;
    if (ev.contains("command") && ev["command"].is_string()) c.external_command = ev["command"].get<std::string>();
    else pr.add("evaluator.command: missing for an external evaluator");
    if (ev.contains("synthetic")) read_synthetic(ev["synthetic"], c.synthetic, dims, pr);
    else c.synthetic.phi_star = DesignVector::baseline(two_segments ? 2 : 1);
  } else {
    pr.add(fmt::format("evaluator.kind: '{}' is not synthetic or external", kind));
  }
  if (j.contains("registration_bundle")) {
    std::filesystem::path p = j["registration_bundle"].get<std::string>();
    c.registration_bundle = p.is_absolute() ? p : base_dir / p;
  }

  if (!pr.empty()) pr.raise(c.name.empty() ? "case" : "case '" + c.name + "'");

  c.synthetic.set_hu(c.cortical_hu, c.cancellous_hu);
  try {
    c.region.validate();
    if (!contains(c.region, c.baseline)) throw SchemaError("baseline lies outside the feasible region");
    if (c.evaluator == EvaluatorKind::Synthetic) c.synthetic.validate(c.region);
  } catch (const Error& e) {
    throw SchemaError(fmt::format("case '{}': {}", c.name, e.what()));
  }
  return c;
}

CaseBundle load_case(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error(fmt::format("cannot open case file {}", path.string()));
  std::stringstream ss;
  ss << f.rdbuf();
  try {
    return parse_case(ss.str(), path.parent_path());
  } catch (const SchemaError& e) {
    throw SchemaError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

std::string case_to_json(const CaseBundle& c) {
  json j;
  j["name"] = c.name;
  j["description"] = c.description;
  j["defect"] = c.defect;
  j["bounds"] = {{"alpha_r", c.region.alpha_r}, {"alpha_p", c.region.alpha_p}, {"beta_r", c.region.beta_r},
                 {"beta_p", c.region.beta_p},   {"z", c.region.z}};
  if (c.region.r) j["bounds"]["r"] = *c.region.r;
  j["bone"] = {{"cortical_hu", c.cortical_hu}, {"cancellous_hu", c.cancellous_hu}};
  j["baseline"] = c.baseline.to_vector();
  if (c.evaluator == EvaluatorKind::Synthetic) {
    j["evaluator"] = {{"kind", "synthetic"}, {"synthetic", synthetic_json(c.synthetic)}};
  } else {
    j["evaluator"] = {{"kind", "external"}, {"command", c.external_command}, {"synthetic", synthetic_json(c.synthetic)}};
  }
  if (c.registration_bundle) j["registration_bundle"] = c.registration_bundle->string();
  return j.dump(2);
}

void save_case(const std::filesystem::path& path, const CaseBundle& bundle) {
  std::ofstream f(path);
  if (!f) throw Error(fmt::format("cannot write {}", path.string()));
  f << case_to_json(bundle) << '\n';
}

std::unique_ptr<Evaluator> make_evaluator(const CaseBundle& c) {
  if (c.evaluator == EvaluatorKind::External) return std::make_unique<ExternalEvaluator>(c.region, c.external_command);
  return std::make_unique<SyntheticEvaluator>(c.region, c.synthetic);
}

DesignVector parse_phi(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(fmt::format("phi: '{}' is not a number", item));
    }
  }
  if (v.size() != 5 && v.size() != 6) throw Error(fmt::format("phi: expected 5 or 6 components, got {}", v.size()));
  return DesignVector::from_vector(v);
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error(fmt::format("cannot open run configuration {}", path.string()));
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    throw SchemaError(fmt::format("{}: {}", path.string(), e.what()));
  }
  Problems pr;
  RunConfig rc;
  if (j.contains("case") && j["case"].is_string()) {
    rc.case_path = j["case"].get<std::string>();
    if (rc.case_path.is_relative()) rc.case_path = path.parent_path() / rc.case_path;
  } else {
    pr.add("case: missing");
  }
  try {
    rc.objective = parse_objective(j.value("objective", std::string("fopt")));
  } catch (const Error& e) {
    pr.add(std::string("objective: ") + e.what());
  }
  const std::string p = path.string();
  if (j.contains("weights")) {
    const json& w = j["weights"];
    maybe(w, "w1", rc.weights.w1, "weights", pr);
    maybe(w, "w2", rc.weights.w2, "weights", pr);
    maybe(w, "w_side", rc.weights.w_side, "weights", pr);
    maybe(w, "sf_desired", rc.weights.sf_desired, "weights", pr);
    maybe(w, "ordered_pairs", rc.weights.ordered_pairs, "weights", pr);
  }
  std::optional<double> t_sigma;
  if (j.contains("bo")) {
    const json& b = j["bo"];
    maybe(b, "candidates", rc.bo.candidates, "bo", pr);
    maybe(b, "local_refinements", rc.bo.local_refinements, "bo", pr);
    maybe(b, "fit_starts", rc.bo.fit_starts, "bo", pr);
    maybe(b, "sobol_skip", rc.bo.sobol_skip, "bo", pr);
    maybe(b, "sobol_leap", rc.bo.sobol_leap, "bo", pr);
    maybe(b, "shift_sobol_per_seed", rc.bo.shift_sobol_per_seed, "bo", pr);
    maybe(b, "max_inflations", rc.bo.max_inflations, "bo", pr);
    maybe(b, "inflation_factor", rc.bo.inflation_factor, "bo", pr);
    if (b.contains("t_sigma")) t_sigma = number_at(b, "t_sigma", "bo", pr);
  }
  maybe(j, "seeds", rc.bo.seeds, "run", pr);
  maybe(j, "iterations", rc.bo.n_iterations, "run", pr);
  maybe(j, "n_sobol", rc.bo.n_sobol, "run", pr);
  maybe(j, "threads", rc.threads, "run", pr);
  if (j.contains("out")) rc.out_dir = j["out"].get<std::string>();
  if (!pr.empty()) pr.raise(p);

  const CaseBundle c = load_case(rc.case_path);
  const BoConfig defaults = BoConfig::for_segments(c.segment_count());
  rc.bo.t_sigma = t_sigma.value_or(defaults.t_sigma);
  try {
    rc.weights.validate();
    rc.bo.validate();
  } catch (const Error& e) {
    throw SchemaError(fmt::format("{}: {}", p, e.what()));
  }
  return rc;
}

std::string run_config_json(const RunConfig& rc) {
  json j;
  j["case"] = rc.case_path.string();
  j["objective"] = objective_name(rc.objective);
  j["weights"] = {{"w1", rc.weights.w1},
                  {"w2", rc.weights.w2},
                  {"w_side", rc.weights.w_side},
                  {"sf_desired", rc.weights.sf_desired},
                  {"ordered_pairs", rc.weights.ordered_pairs}};
  j["seeds"] = rc.bo.seeds;
  j["iterations"] = rc.bo.n_iterations;
  j["n_sobol"] = rc.bo.n_sobol;
  j["bo"] = {{"sobol_skip", rc.bo.sobol_skip},
             {"sobol_leap", rc.bo.sobol_leap},
             {"t_sigma", rc.bo.t_sigma},
             {"candidates", rc.bo.candidates},
             {"local_refinements", rc.bo.local_refinements},
             {"inflation_factor", rc.bo.inflation_factor},
             {"max_inflations", rc.bo.max_inflations},
             {"fit_starts", rc.bo.fit_starts},
             {"shift_sobol_per_seed", rc.bo.shift_sobol_per_seed},
             {"warm_start", rc.bo.warm_start.size()}};
  return j.dump(2);
}

}  // namespace osteoplan
