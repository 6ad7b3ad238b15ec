#include "osteoplan/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numeric>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>

#include "osteoplan/errors.hpp"
#include "osteoplan/log.hpp"

namespace osteoplan {

using nlohmann::json;

Point3 GridSpec::center(std::size_t i, std::size_t j, std::size_t k) const {
  return origin + Point3(static_cast<double>(i) * spacing.x(), static_cast<double>(j) * spacing.y(),
                         static_cast<double>(k) * spacing.z());
}

VoxelMask::VoxelMask(GridSpec g) : grid(g), values(g.count(), 0) {}

std::size_t VoxelMask::count() const {
  return static_cast<std::size_t>(std::count_if(values.begin(), values.end(), [](std::uint8_t v) { return v != 0; }));
}

void VoxelMask::validate() const {
  if (values.size() != grid.count())
    throw Error(fmt::format("voxel mask: {} values for a {}x{}x{} grid", values.size(), grid.dims[0], grid.dims[1], grid.dims[2]));
  if (!(grid.spacing.minCoeff() > 0.0)) throw Error("voxel mask: spacing must be positive");
}

VoxelMask read_mask(const std::filesystem::path& header) {
  std::ifstream f(header);
  if (!f) throw Error(fmt::format("cannot open {}", header.string()));
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    throw SchemaError(fmt::format("{}: {}", header.string(), e.what()));
  }
  GridSpec g;
  try {
    const auto dims = j.at("dims").get<std::vector<std::size_t>>();
    const auto spacing = j.at("spacing").get<std::vector<double>>();
    const auto origin = j.at("origin").get<std::vector<double>>();
    if (dims.size() != 3 || spacing.size() != 3 || origin.size() != 3)
      throw SchemaError(fmt::format("{}: dims, spacing and origin need three entries", header.string()));
    for (int a = 0; a < 3; ++a) {
      g.dims[static_cast<std::size_t>(a)] = dims[static_cast<std::size_t>(a)];
      g.spacing[a] = spacing[static_cast<std::size_t>(a)];
      g.origin[a] = origin[static_cast<std::size_t>(a)];
    }
  } catch (const json::exception& e) {
    throw SchemaError(fmt::format("{}: {}", header.string(), e.what()));
  }
  const auto raw = header.parent_path() / j.value("data", header.stem().string() + ".raw");
  std::ifstream r(raw, std::ios::binary);
  if (!r) throw Error(fmt::format("cannot open {}", raw.string()));
  VoxelMask m(g);
  r.read(reinterpret_cast<char*>(m.values.data()), static_cast<std::streamsize>(m.values.size()));
  if (r.gcount() != static_cast<std::streamsize>(m.values.size()))
    throw Error(fmt::format("{}: expected {} bytes", raw.string(), m.values.size()));
  for (auto& v : m.values) v = v != 0;
  m.validate();
  return m;
}

void write_mask(const std::filesystem::path& header, const VoxelMask& mask) {
  mask.validate();
  const std::string data = header.stem().string() + ".raw";
  json j;
  j["dims"] = {mask.grid.dims[0], mask.grid.dims[1], mask.grid.dims[2]};
  j["spacing"] = {mask.grid.spacing.x(), mask.grid.spacing.y(), mask.grid.spacing.z()};
  j["origin"] = {mask.grid.origin.x(), mask.grid.origin.y(), mask.grid.origin.z()};
  j["data"] = data;
  std::ofstream h(header);
  if (!h) throw Error(fmt::format("cannot write {}", header.string()));
  h << j.dump(2) << '\n';
  std::ofstream r(header.parent_path() / data, std::ios::binary);
  if (!r) throw Error(fmt::format("cannot write {}", (header.parent_path() / data).string()));
  r.write(reinterpret_cast<const char*>(mask.values.data()), static_cast<std::streamsize>(mask.values.size()));
}

double dice(const VoxelMask& a, const VoxelMask& b) {
  a.validate();
  b.validate();
  if (!(a.grid == b.grid)) throw Error("dice: masks are on different grids");
  std::size_t na = 0, nb = 0, both = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const bool x = a.values[i] != 0, y = b.values[i] != 0;
    na += x;
    nb += y;
    both += x && y;
  }
  if (na + nb == 0) {
    warn("dice: both masks are empty; returning 1.0");
    return 1.0;
  }
  return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

std::vector<std::size_t> select_apposition_elements(const std::vector<std::vector<double>>& history, double threshold,
                                                    double fraction) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw Error("select_apposition_elements: fraction must lie in [0, 1]");
  const std::size_t m = history.size();
  std::vector<std::size_t> counts(m, 0);
  std::vector<double> means(m, 0.0);
  for (std::size_t e = 0; e < m; ++e) {
    for (double s : history[e]) {
      counts[e] += s > threshold;
      means[e] += s;
    }
    if (!history[e].empty()) means[e] /= static_cast<double>(history[e].size());
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (counts[a] != counts[b]) return counts[a] > counts[b];
    if (means[a] != means[b]) return means[a] > means[b];
    return a < b;
  });
  const auto k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(m) - 1e-12));
  order.resize(std::min(k, m));
  return order;
}

namespace {

// Index box of the voxel centres within `reach` of p along each axis; false
// when the box misses the grid.
bool voxel_box(const Point3& p, double reach, const GridSpec& grid, std::array<std::size_t, 3>& lo,
               std::array<std::size_t, 3>& hi) {
  for (int a = 0; a < 3; ++a) {
    const auto n = static_cast<double>(grid.dims[static_cast<std::size_t>(a)]);
    const double l = std::ceil((p[a] - reach - grid.origin[a]) / grid.spacing[a]);
    const double h = std::floor((p[a] + reach - grid.origin[a]) / grid.spacing[a]);
    if (h < 0.0 || l > n - 1.0 || h < l) return false;
    lo[static_cast<std::size_t>(a)] = static_cast<std::size_t>(std::max(0.0, l));
    hi[static_cast<std::size_t>(a)] = static_cast<std::size_t>(std::min(n - 1.0, h));
  }
  return true;
}

}  // namespace

std::vector<double> splat_field(const std::vector<Point3>& points, const GridSpec& grid, double sigma) {
  if (!(sigma > 0.0)) throw Error("splat_to_grid: sigma must be positive");
  if (!(grid.spacing.minCoeff() > 0.0)) throw Error("splat_to_grid: spacing must be positive");
  std::vector<double> field(grid.count(), 0.0);
  const double inv = 1.0 / (2.0 * sigma * sigma);
  std::array<std::size_t, 3> lo{}, hi{};
  for (const auto& p : points) {
    if (!voxel_box(p, 6.0 * sigma, grid, lo, hi)) continue;
    for (std::size_t k = lo[2]; k <= hi[2]; ++k)
      for (std::size_t j = lo[1]; j <= hi[1]; ++j)
        for (std::size_t i = lo[0]; i <= hi[0]; ++i)
          field[grid.index(i, j, k)] += std::exp(-(grid.center(i, j, k) - p).squaredNorm() * inv);
  }
  return field;
}

VoxelMask region_of_interest(const std::vector<Point3>& interface_points, const GridSpec& grid, double thickness) {
  if (!(thickness > 0.0)) throw Error("region_of_interest: thickness must be positive");
  if (!(grid.spacing.minCoeff() > 0.0)) throw Error("region_of_interest: spacing must be positive");
  VoxelMask roi(grid);
  const double t2 = thickness * thickness;
  std::array<std::size_t, 3> lo{}, hi{};
  for (const auto& p : interface_points) {
    if (!voxel_box(p, thickness, grid, lo, hi)) continue;
    for (std::size_t k = lo[2]; k <= hi[2]; ++k)
      for (std::size_t j = lo[1]; j <= hi[1]; ++j)
        for (std::size_t i = lo[0]; i <= hi[0]; ++i)
          if ((grid.center(i, j, k) - p).squaredNorm() <= t2) roi.values[grid.index(i, j, k)] = 1;
  }
  return roi;
}

VoxelMask restrict_mask(const VoxelMask& mask, const VoxelMask& roi) {
  if (!(mask.grid == roi.grid)) throw Error("restrict_mask: grids differ");
  VoxelMask out(mask.grid);
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = mask.values[i] && roi.values[i];
  return out;
}

VoxelMask splat_to_grid(const std::vector<Point3>& points, const GridSpec& grid, double sigma, double threshold) {
  VoxelMask mask(grid);
  if (points.empty()) return mask;
  const auto field = splat_field(points, grid, sigma);
  for (std::size_t i = 0; i < field.size(); ++i) mask.values[i] = field[i] >= threshold;
  return mask;
}

double cortical_fraction(const std::vector<double>& hu, double threshold) {
  if (hu.empty()) throw Error("cortical_fraction: empty grid");
  const auto n = std::count_if(hu.begin(), hu.end(), [&](double v) { return v > threshold; });
  return static_cast<double>(n) / static_cast<double>(hu.size());
}

// ---- sensitivity -----------------------------------------------------------

std::vector<std::string> default_sensitivity_parameters() {
  return {"rho_cortical", "rho_cancellous", "E_cortical", "E_cancellous", "contact_E", "contact_nu",
          "t_contact",    "S0",             "l_opt_scale", "F_max_scale", "yield_scale"};
}

void apply_parameter(SyntheticModelConfig& c, const std::string& name, double factor) {
  if (name == "rho_cortical") c.cortical.density *= factor;
  else if (name == "rho_cancellous") c.cancellous.density *= factor;
  else if (name == "E_cortical") c.cortical.youngs_gpa *= factor;
  else if (name == "E_cancellous") c.cancellous.youngs_gpa *= factor;
  else if (name == "contact_E") c.contact.youngs_kpa *= factor;
  else if (name == "contact_nu") c.contact.poisson *= factor;
  else if (name == "t_contact") c.contact.thickness_mm *= factor;
  else if (name == "S0") c.stimulus.s0 *= factor;
  else if (name == "l_opt_scale") c.muscle.optimal_length_scale *= factor;
  else if (name == "F_max_scale") c.muscle.force_scale *= factor;
  else if (name == "yield_scale") {
    c.cortical.yield_mpa *= factor;
    c.cancellous.yield_mpa *= factor;
  } else if (name == "cycle_seconds") c.cycle_seconds *= factor;
  else if (name == "peak_gap") c.peak_gap_mm *= factor;
  else if (name == "load_gain") c.load_gain *= factor;
  else if (name == "bolus_boost") c.bolus_boost *= factor;
  else if (name == "heterogeneity") c.heterogeneity *= factor;
  else throw Error(fmt::format("unknown sensitivity parameter '{}'", name));
}

void SensitivitySpec::validate() const {
  if (parameters.empty()) throw Error("sensitivity: no parameters");
  if (repeats == 0) throw Error("sensitivity: repeats must be positive");
  if (!(perturbation >= 0.0 && perturbation < 1.0)) throw Error("sensitivity: perturbation must lie in [0, 1)");
  SyntheticModelConfig probe;
  for (const auto& p : parameters) apply_parameter(probe, p, 1.0);
}

EvaluatorFactory synthetic_factory() {
  return [](const FeasibleRegion& region, const SyntheticModelConfig& config) -> std::unique_ptr<Evaluator> {
    return std::make_unique<SyntheticEvaluator>(region, config);
  };
}

SensitivityReport sensitivity_run(const std::vector<SensitivityCase>& cases, const SensitivitySpec& spec,
                                  const ObjectiveWeights& weights, const EvaluatorFactory& factory, unsigned threads) {
  spec.validate();
  weights.validate();

  std::vector<double> baselines(cases.size());
  for (std::size_t c = 0; c < cases.size(); ++c) {
    const auto ev = factory(cases[c].region, cases[c].config);
    baselines[c] = score(ev->evaluate(cases[c].baseline), ObjectiveKind::FOpt, weights);
  }

  SensitivityReport report;
  for (std::size_t c = 0; c < cases.size(); ++c)
    for (const auto& p : spec.parameters)
      for (int dir : {-1, +1}) {
        SensitivityRow row;
        row.case_name = cases[c].name;
        row.parameter = p;
        row.direction = dir;
        row.factor = 1.0 + dir * spec.perturbation;
        row.baseline_f_opt = baselines[c];
        row.f_opt.assign(spec.repeats, std::nan(""));
        report.rows.push_back(std::move(row));
      }

  const std::size_t per_case = spec.parameters.size() * 2;
  const std::size_t cells = report.rows.size() * spec.repeats;
  std::mutex mutex;
  std::size_t next = 0;
  std::vector<std::string> errors(cells);
  auto worker = [&]() {
    for (;;) {
      std::size_t cell;
      {
        std::lock_guard<std::mutex> lock(mutex);
        if (next >= cells) return;
        cell = next++;
      }
      const std::size_t r = cell / spec.repeats;
      const std::size_t rep = cell % spec.repeats;
      const SensitivityCase& sc = cases[r / per_case];
      SensitivityRow& row = report.rows[r];
      try {
        SyntheticModelConfig cfg = sc.config;
        apply_parameter(cfg, row.parameter, row.factor);
        const auto ev = factory(sc.region, cfg);
        row.f_opt[rep] = score(ev->evaluate(sc.baseline), ObjectiveKind::FOpt, weights);
      } catch (const std::exception& e) {
        errors[cell] = e.what();
      }
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(cells, 1))));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  report.evaluations = cells;

  for (std::size_t r = 0; r < report.rows.size(); ++r) {
    SensitivityRow& row = report.rows[r];
    for (std::size_t rep = 0; rep < spec.repeats; ++rep) {
      const auto& e = errors[r * spec.repeats + rep];
      if (!e.empty() && !row.error) row.error = e;
    }
    if (row.error) {
      row.mean_relative_change = std::nan("");
      continue;
    }
    double acc = 0.0;
    for (double f : row.f_opt)
      acc += row.baseline_f_opt != 0.0 ? (f - row.baseline_f_opt) / std::abs(row.baseline_f_opt) : f - row.baseline_f_opt;
    row.mean_relative_change = acc / static_cast<double>(spec.repeats);
  }
  return report;
}

// ---- convergence -------------------------------------------------------------

ConvergenceSummary convergence_summary(const std::vector<std::vector<double>>& curves) {
  if (curves.empty()) throw Error("convergence_summary: no traces");
  std::size_t len = 0;
  for (const auto& c : curves) {
    if (c.empty()) throw Error("convergence_summary: empty trace");
    len = std::max(len, c.size());
  }
  ConvergenceSummary out;
  out.mean.resize(len);
  out.stddev.resize(len);
  const auto n = static_cast<double>(curves.size());
  for (std::size_t i = 0; i < len; ++i) {
    double s = 0.0;
    for (const auto& c : curves) s += i < c.size() ? c[i] : c.back();
    const double mean = s / n;
    double v = 0.0;
    for (const auto& c : curves) {
      const double d = (i < c.size() ? c[i] : c.back()) - mean;
      v += d * d;
    }
    out.mean[i] = mean;
    out.stddev[i] = std::sqrt(v / n);
  }
  return out;
}

}  // namespace osteoplan
