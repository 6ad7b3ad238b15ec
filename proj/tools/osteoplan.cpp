// osteoplan command-line entry point.

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "osteoplan/analysis.hpp"
#include "osteoplan/bayes_opt.hpp"
#include "osteoplan/case_io.hpp"
#include "osteoplan/errors.hpp"
#include "osteoplan/external_evaluator.hpp"
#include "osteoplan/log.hpp"
#include "osteoplan/mesh_io.hpp"
#include "osteoplan/objective.hpp"
#include "osteoplan/personalize.hpp"
#include "osteoplan/report.hpp"

namespace fs = std::filesystem;
using namespace osteoplan;

namespace {

struct UsageError : Error {
  using Error::Error;
};

void require_file(const fs::path& p, const char* what) {
  if (!fs::is_regular_file(p)) throw UsageError(fmt::format("{} '{}' does not exist", what, p.string()));
}

struct Manifested {
  fs::path out;
  RunManifest manifest;
  std::string command;

  void finish(int code) {
    if (out.empty()) return;
    manifest.finished = utc_timestamp();
    manifest.commands.push_back({command, code});
    write_manifest(out / "manifest.json", manifest);
  }
};

// ---- optimize ---------------------------------------------------------------

struct OptimizeArgs {
  std::string config, case_path, objective = "fopt", out = "out";
  std::size_t seeds = 5, iters = 50, n_sobol = 25, candidates = 0;
  std::vector<std::uint64_t> seed_list;
  unsigned threads = 1;
};

int run_optimize(const OptimizeArgs& a, const CLI::App& sub) {
  RunConfig rc;
  if (!a.config.empty()) {
    require_file(a.config, "run configuration");
    rc = load_run_config(a.config);
  }
  if (!a.case_path.empty()) rc.case_path = a.case_path;
  if (rc.case_path.empty()) throw UsageError("optimize: --case or --config is required");
  require_file(rc.case_path, "case file");
  const CaseBundle bundle = load_case(rc.case_path);

  if (a.config.empty() || sub.count("--objective")) rc.objective = parse_objective(a.objective);
  if (a.config.empty()) rc.bo = BoConfig::for_segments(bundle.segment_count());
  if (a.config.empty() || sub.count("--seeds") || sub.count("--seed-list")) {
    if (!a.seed_list.empty()) {
      rc.bo.seeds = a.seed_list;
    } else {
      rc.bo.seeds.clear();
      for (std::size_t s = 1; s <= a.seeds; ++s) rc.bo.seeds.push_back(s);
    }
  }
  if (a.config.empty() || sub.count("--iters")) rc.bo.n_iterations = a.iters;
  if (a.config.empty() || sub.count("--n-sobol")) rc.bo.n_sobol = a.n_sobol;
  if (a.candidates > 0) rc.bo.candidates = a.candidates;
  if (a.config.empty() || sub.count("--out")) rc.out_dir = a.out;
  if (a.config.empty() || sub.count("--threads")) rc.threads = a.threads;
  rc.bo.validate();

  Manifested m{rc.out_dir, {}, "optimize"};
  m.manifest.started = utc_timestamp();
  m.manifest.config_hash = hash_hex(fnv1a64(run_config_json(rc) + case_to_json(bundle)));
  fs::create_directories(rc.out_dir);

  const auto evaluator = make_evaluator(bundle);
  const RunResult result = run(*evaluator, rc.objective, rc.weights, rc.bo, rc.threads);

  int code = 0;
  for (const auto& t : result.traces) {
    const auto name = fmt::format("trace_seed{}.csv", t.seed);
    write_file_atomic(rc.out_dir / name, trace_csv(t, bundle.region));
    m.manifest.artifacts.push_back(name);
    if (t.error) {
      std::cerr << fmt::format("seed {}: {}\n", t.seed, *t.error);
      code = 1;
    }
  }
  write_file_atomic(rc.out_dir / "aggregate.json", aggregate_json(result, bundle.region, objective_name(rc.objective)) + "\n");
  write_file_atomic(rc.out_dir / "parallel_coordinates.csv", parallel_coordinates_csv(result.traces, bundle.region));
  std::vector<std::vector<double>> curves;
  for (const auto& t : result.traces)
    if (!t.records.empty()) curves.push_back(t.best_so_far());
  if (!curves.empty()) {
    write_file_atomic(rc.out_dir / "convergence.csv", convergence_csv(convergence_summary(curves)));
    m.manifest.artifacts.push_back("convergence.csv");
  }
  m.manifest.artifacts.push_back("aggregate.json");
  m.manifest.artifacts.push_back("parallel_coordinates.csv");

  if (result.aggregate.best_phi) {
    std::cout << fmt::format("case {}: best {} = {:.6f} at phi = [", bundle.name, objective_name(rc.objective),
                             result.aggregate.best_score);
    const auto v = result.aggregate.best_phi->to_vector();
    for (std::size_t i = 0; i < v.size(); ++i) std::cout << (i ? ", " : "") << fmt::format("{:.4f}", v[i]);
    std::cout << "]\n";
  }
  m.finish(code);
  return code;
}

// ---- evaluate ---------------------------------------------------------------

int run_evaluate(const std::string& case_path, const std::string& phi_text, const std::string& out, bool as_json) {
  require_file(case_path, "case file");
  const CaseBundle bundle = load_case(case_path);
  const DesignVector phi = phi_text.empty() ? bundle.baseline : parse_phi(phi_text);
  if (phi.dims() != bundle.region.dims())
    throw UsageError(fmt::format("--phi has {} components; case '{}' needs {}", phi.dims(), bundle.name, bundle.region.dims()));
  const auto evaluator = make_evaluator(bundle);
  const EvaluationResult r = evaluator->evaluate(phi);
  const auto avg = interface_averages(r);
  const ObjectiveWeights w;
  if (as_json) {
    std::cout << evaluation_result_to_json(r) << '\n';
  } else {
    const auto ifaces = r.interfaces();
    for (std::size_t i = 0; i < ifaces.size(); ++i)
      std::cout << fmt::format("{:<7} mean apposition {:.6f}\n", interface_name(ifaces[i]), avg[i]);
    std::cout << fmt::format("F_opt {:.6f}\nF_sf  {:.6f}\n", f_opt(avg, w), f_sf(avg, r.sf_left, r.sf_right, w));
  }
  if (!out.empty()) {
    Manifested m{out, {}, "evaluate"};
    m.manifest.started = utc_timestamp();
    m.manifest.config_hash = hash_hex(fnv1a64(case_to_json(bundle) + evaluation_request_json(phi)));
    write_file_atomic(fs::path(out) / "evaluation.json", evaluation_result_to_json(r) + "\n");
    m.manifest.artifacts.push_back("evaluation.json");
    m.finish(0);
  }
  return 0;
}

// ---- register ---------------------------------------------------------------

int run_register(const std::string& bundle_dir, const std::string& out) {
  if (!fs::is_regular_file(fs::path(bundle_dir) / "bundle.json"))
    throw UsageError(fmt::format("'{}' has no bundle.json", bundle_dir));
  Manifested m{out, {}, "register"};
  m.manifest.started = utc_timestamp();
  std::ifstream f(fs::path(bundle_dir) / "bundle.json");
  std::stringstream ss;
  ss << f.rdbuf();
  m.manifest.config_hash = hash_hex(fnv1a64(ss.str()));

  const PersonalizationInputs in = load_registration_bundle(bundle_dir);
  const PatientParameters p = personalize(in);
  fs::create_directories(out);
  write_file_atomic(fs::path(out) / "patient_parameters.json", patient_parameters_json(p) + "\n");
  write_landmarks_csv(fs::path(out) / "landmarks.csv", p.landmarks);
  m.manifest.artifacts = {"patient_parameters.json", "landmarks.csv"};
  if (!p.disc.empty()) {
    write_polyline_csv(fs::path(out) / "disc.csv", p.disc);
    m.manifest.artifacts.push_back("disc.csv");
  }
  if (!p.capsule.empty()) {
    write_polyline_csv(fs::path(out) / "capsule.csv", p.capsule);
    m.manifest.artifacts.push_back("capsule.csv");
  }
  std::cout << fmt::format("registered: rigid mse {:.6g} mm^2, {} landmarks, {} muscles, {} ligaments\n", p.rigid.mse,
                           p.landmarks.size(), p.muscles.size(), p.ligaments.size());
  m.finish(0);
  return 0;
}

// ---- pcsa -------------------------------------------------------------------

int run_pcsa(const std::string& group_name, double scs, const std::string& mesh_path, const std::vector<double>& origin,
             const std::vector<double>& normal) {
  const MuscleGroup group = parse_muscle_group(group_name);
  if (!mesh_path.empty()) {
    require_file(mesh_path, "mesh");
    if (origin.size() != 3 || normal.size() != 3) throw UsageError("pcsa: --mesh needs --origin x,y,z and --normal x,y,z");
    const Plane plane = Plane::from_normal(Point3(origin[0], origin[1], origin[2]), Eigen::Vector3d(normal[0], normal[1], normal[2]));
    const ScsResult s = extract_scs(read_mesh(mesh_path), plane);
    for (std::size_t i = 0; i < s.offsets.size(); ++i)
      std::cout << fmt::format("plane {:+.0f} mm  area {:.6f} cm^2\n", s.offsets[i], s.areas[i]);
    scs = s.max_area;
    std::cout << fmt::format("largest section {:.6f} cm^2 at {:+.0f} mm\n", scs, s.best_offset);
  } else if (scs < 0.0) {
    throw UsageError("pcsa: give --scs or --mesh");
  }
  const PcsaEstimate e = pcsa_estimate(scs, group);
  std::cout << fmt::format("{}: SCS {:.6g} cm^2 -> WPCS {:.6g}, BPCS {:.6g}, PCSA {:.6g} cm^2{}\n", muscle_group_name(group),
                           scs, e.weber, e.buchner, e.mean, e.clamped ? " (clamped)" : "");
  for (const auto& b : max_force(e.mean, group))
    std::cout << fmt::format("  {:<17} {:>5.2f}  {:.6g} N\n", b.branch, b.proportion, b.force);
  return 0;
}

// ---- sensitivity --------------------------------------------------------------

int run_sensitivity(const std::vector<std::string>& cases, const std::string& baseline, double perturbation,
                    std::size_t repeats, const std::string& out, unsigned threads) {
  std::vector<SensitivityCase> list;
  std::string hashed;
  for (const auto& path : cases) {
    require_file(path, "case file");
    const CaseBundle b = load_case(path);
    if (b.evaluator != EvaluatorKind::Synthetic)
      throw UsageError(fmt::format("sensitivity: case '{}' does not use the synthetic evaluator", b.name));
    list.push_back({b.name, b.region, b.synthetic, b.baseline});
    hashed += case_to_json(b);
  }
  if (!baseline.empty()) {
    if (list.size() != 1) throw UsageError("sensitivity: --baseline applies to a single --case");
    list.front().baseline = parse_phi(baseline);
  }
  SensitivitySpec spec;
  spec.perturbation = perturbation;
  spec.repeats = repeats;
  Manifested m{out, {}, "sensitivity"};
  m.manifest.started = utc_timestamp();
  m.manifest.config_hash = hash_hex(fnv1a64(hashed + fmt::format("{}|{}", perturbation, repeats)));

  const SensitivityReport rep = sensitivity_run(list, spec, {}, synthetic_factory(), threads);
  fs::create_directories(out);
  write_file_atomic(fs::path(out) / "sensitivity.csv", sensitivity_csv(rep));
  m.manifest.artifacts = {"sensitivity.csv"};
  std::size_t failed = 0;
  for (const auto& r : rep.rows) failed += r.error.has_value();
  std::cout << fmt::format("{} cases, {} rows, {} evaluations, {} failed rows\n", list.size(), rep.rows.size(),
                           rep.evaluations, failed);
  m.finish(0);
  return 0;
}

// ---- validate -----------------------------------------------------------------

std::vector<Point3> read_interface_points(const fs::path& p) {
  require_file(p, "interface points");
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".csv" ? read_polyline_csv(p) : read_points(p);
}

int run_validate(const std::vector<std::string>& predicted, const std::vector<std::string>& observed,
                 std::vector<std::string> sides, const std::vector<std::string>& roi_points, double roi_thickness,
                 const std::string& out) {
  if (predicted.size() != observed.size())
    throw UsageError("validate: give one --observed-mask per --predicted-mask");
  if (!roi_points.empty() && roi_points.size() != predicted.size())
    throw UsageError("validate: give one --roi-points per mask pair");
  if (sides.empty()) {
    const char* names[] = {"left", "right"};
    for (std::size_t i = 0; i < predicted.size(); ++i) sides.push_back(i < 2 ? names[i] : fmt::format("side{}", i + 1));
  }
  if (sides.size() != predicted.size()) throw UsageError("validate: --side count must match the mask pairs");
  std::string csv = "side,dice,predicted_voxels,observed_voxels\n";
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    require_file(predicted[i], "mask header");
    require_file(observed[i], "mask header");
    VoxelMask p = read_mask(predicted[i]);
    VoxelMask o = read_mask(observed[i]);
    if (!roi_points.empty()) {
      const VoxelMask roi = region_of_interest(read_interface_points(roi_points[i]), p.grid, roi_thickness);
      p = restrict_mask(p, roi);
      o = restrict_mask(o, roi);
    }
    const double d = dice(p, o);
    std::cout << fmt::format("{:<6} Dice {:.6f}\n", sides[i], d);
    csv += fmt::format("{},{},{},{}\n", sides[i], format_number(d), p.count(), o.count());
  }
  if (!out.empty()) {
    Manifested m{out, {}, "validate"};
    m.manifest.started = utc_timestamp();
    m.manifest.config_hash = hash_hex(fnv1a64(csv));
    write_file_atomic(fs::path(out) / "dice.csv", csv);
    m.manifest.artifacts = {"dice.csv"};
    m.finish(0);
  }
  return 0;
}

// ---- report -------------------------------------------------------------------

std::vector<double> read_best_column(const fs::path& path) {
  std::ifstream f(path);
  std::string line;
  std::getline(f, line);
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string h;
    while (std::getline(ss, h, ',')) header.push_back(h);
  }
  const auto it = std::find(header.begin(), header.end(), "best_so_far");
  if (it == header.end()) throw Error(fmt::format("{}: no best_so_far column", path.string()));
  const auto col = static_cast<std::size_t>(it - header.begin());
  std::vector<double> out;
  while (std::getline(f, line)) {
    std::stringstream ss(line);
    std::string cell;
    for (std::size_t c = 0; c <= col && std::getline(ss, cell, ','); ++c) {
    }
    out.push_back(std::stod(cell));
  }
  return out;
}

int run_report(const std::string& dir) {
  if (!fs::is_directory(dir)) throw UsageError(fmt::format("run directory '{}' does not exist", dir));
  std::vector<fs::path> traces;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (name.rfind("trace_seed", 0) == 0 && e.path().extension() == ".csv") traces.push_back(e.path());
  }
  std::sort(traces.begin(), traces.end());
  if (traces.empty()) throw UsageError(fmt::format("no trace_seed*.csv files in '{}'", dir));
  std::vector<std::vector<double>> curves;
  for (const auto& t : traces) {
    curves.push_back(read_best_column(t));
    if (curves.back().empty()) throw Error(fmt::format("{} has no rows", t.string()));
    std::cout << fmt::format("{}: {} evaluations, best objective {:.6f}\n", t.filename().string(), curves.back().size(),
                             -curves.back().back());
  }
  const ConvergenceSummary s = convergence_summary(curves);
  write_file_atomic(fs::path(dir) / "convergence.csv", convergence_csv(s));
  std::cout << fmt::format("final mean best objective {:.6f} (std {:.6f}) over {} seeds\n", -s.mean.back(), s.stddev.back(),
                           curves.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Surgical-plan optimisation and template personalisation for mandibular reconstruction"};
  app.require_subcommand(1);
  std::string verbosity;
  app.add_option("--verbosity", verbosity, "quiet | warn | info")->check(CLI::IsMember({"quiet", "warn", "info"}));

  OptimizeArgs oa;
  auto* opt = app.add_subcommand("optimize", "Bayesian optimisation of a case");
  opt->add_option("--config", oa.config, "run configuration JSON");
  opt->add_option("--case", oa.case_path, "case file");
  opt->add_option("--objective", oa.objective, "fopt | fsf")->check(CLI::IsMember({"fopt", "fsf"}));
  opt->add_option("--seeds", oa.seeds, "number of seeds (1..N)")->check(CLI::PositiveNumber);
  opt->add_option("--seed-list", oa.seed_list, "explicit seeds")->delimiter(',');
  opt->add_option("--iters", oa.iters, "BO iterations per seed");
  opt->add_option("--n-sobol", oa.n_sobol, "initial Sobol' points");
  opt->add_option("--candidates", oa.candidates, "acquisition candidates per iteration");
  opt->add_option("--out", oa.out, "output directory");
  opt->add_option("--threads", oa.threads, "parallel seeds")->check(CLI::PositiveNumber);

  std::string ev_case, ev_phi, ev_out;
  bool ev_json = false;
  auto* eva = app.add_subcommand("evaluate", "Evaluate one design vector");
  eva->add_option("--case", ev_case, "case file")->required();
  eva->add_option("--phi", ev_phi, "comma-separated design vector (default: baseline)");
  eva->add_option("--out", ev_out, "write evaluation.json and a manifest here");
  eva->add_flag("--json", ev_json, "print the raw evaluation result");

  std::string reg_bundle, reg_out = "out";
  auto* reg = app.add_subcommand("register", "Personalise the template from a registration bundle");
  reg->add_option("--bundle", reg_bundle, "bundle directory (bundle.json)")->required();
  reg->add_option("--out", reg_out, "output directory");

  std::string pcsa_group, pcsa_mesh;
  double pcsa_scs = -1.0;
  std::vector<double> pcsa_origin, pcsa_normal;
  auto* pc = app.add_subcommand("pcsa", "PCSA and branch forces from a scan cross-section");
  pc->add_option("--group", pcsa_group, "masseter | temporalis | medial_pterygoid | lateral_pterygoid")->required();
  pc->add_option("--scs", pcsa_scs, "cross-section area (cm^2)");
  pc->add_option("--mesh", pcsa_mesh, "muscle surface (OBJ/PLY)");
  pc->add_option("--origin", pcsa_origin, "reference plane origin")->delimiter(',')->expected(3);
  pc->add_option("--normal", pcsa_normal, "reference plane normal")->delimiter(',')->expected(3);

  std::vector<std::string> sens_cases;
  std::string sens_baseline, sens_out = "out";
  double sens_pert = 0.10;
  std::size_t sens_repeats = 5;
  unsigned sens_threads = 1;
  auto* sens = app.add_subcommand("sensitivity", "One-at-a-time parameter sensitivity of F_opt");
  sens->add_option("--case", sens_cases, "case file (repeatable)")->required();
  sens->add_option("--baseline", sens_baseline, "design vector (default: case baseline)");
  sens->add_option("--perturbation", sens_pert, "relative perturbation");
  sens->add_option("--repeats", sens_repeats, "repeats per cell");
  sens->add_option("--out", sens_out, "output directory");
  sens->add_option("--threads", sens_threads, "parallel cells")->check(CLI::PositiveNumber);

  std::vector<std::string> val_pred, val_obs, val_sides, val_roi;
  std::string val_out;
  double val_roi_thickness = 0.5;
  auto* val = app.add_subcommand("validate", "Dice between predicted and observed bone-formation masks");
  val->add_option("--predicted-mask", val_pred, "mask header JSON (repeatable)")->required();
  val->add_option("--observed-mask", val_obs, "mask header JSON (repeatable)")->required();
  val->add_option("--side", val_sides, "side label per pair");
  val->add_option("--roi-points", val_roi, "interface points (.csv/.obj/.ply) per pair; Dice inside the band only");
  val->add_option("--roi-thickness", val_roi_thickness, "band half-width around the interface, mm")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  val->add_option("--out", val_out, "write dice.csv and a manifest here");

  std::string rep_dir;
  auto* rep = app.add_subcommand("report", "Summarise an optimize output directory");
  rep->add_option("--run", rep_dir, "optimize output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (verbosity == "quiet") set_verbosity(Verbosity::Quiet);
  else if (verbosity == "info") set_verbosity(Verbosity::Info);
  else if (verbosity == "warn") set_verbosity(Verbosity::Warn);

  try {
    if (*opt) return run_optimize(oa, *opt);
    if (*eva) return run_evaluate(ev_case, ev_phi, ev_out, ev_json);
    if (*reg) return run_register(reg_bundle, reg_out);
    if (*pc) return run_pcsa(pcsa_group, pcsa_scs, pcsa_mesh, pcsa_origin, pcsa_normal);
    if (*sens) return run_sensitivity(sens_cases, sens_baseline, sens_pert, sens_repeats, sens_out, sens_threads);
    if (*val) return run_validate(val_pred, val_obs, val_sides, val_roi, val_roi_thickness, val_out);
    if (*rep) return run_report(rep_dir);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const SchemaError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
