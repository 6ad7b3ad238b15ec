#include "osteoplan/personalize.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "osteoplan/errors.hpp"
#include "osteoplan/log.hpp"

namespace osteoplan {

using nlohmann::json;

PointCloud stride_subsample(const PointCloud& cloud, std::size_t max_points) {
  if (max_points == 0 || cloud.size() <= max_points) return cloud;
  const std::size_t stride = (cloud.size() + max_points - 1) / max_points;
  PointCloud out;
  for (std::size_t i = 0; i < cloud.size(); i += stride) out.push_back(cloud[i]);
  return out;
}

namespace {

FieldSummary summarize(const DeformationField& f) { return {f.converged, f.iterations, f.sigma2, f.beta}; }

const NamedPoint& find_landmark(const std::vector<NamedPoint>& pts, const std::string& name) {
  for (const auto& p : pts)
    if (p.name == name) return p;
  throw Error(fmt::format("landmark '{}' not found", name));
}

Plane section_plane(MuscleGroup group, const std::vector<NamedPoint>& lm, const PersonalizationInputs& in) {
  const auto& n = in.scs_names;
  const Plane fh = frankfort_plane(find_landmark(lm, n.porion_left).position, find_landmark(lm, n.porion_right).position,
                                   find_landmark(lm, n.orbitale_left).position, in.superior);
  switch (group) {
    case MuscleGroup::Masseter:
    case MuscleGroup::MedialPterygoid:
      return masseter_reference_plane(fh, find_landmark(lm, n.gonion_left).position,
                                      find_landmark(lm, n.gonion_right).position, in.anterior);
    case MuscleGroup::Temporalis:
      return temporalis_reference_plane(fh);
    case MuscleGroup::LateralPterygoid:
      return lateral_pterygoid_reference_plane(fh, find_landmark(lm, n.pole_left).position,
                                               find_landmark(lm, n.pole_right).position, in.anterior);
  }
  throw Error("unknown muscle group");
}

}  // namespace

PatientParameters personalize(const PersonalizationInputs& in) {
  PatientParameters out;
  out.disc_blend = in.disc_blend;
  out.capsule_blend = in.capsule_blend;

  out.rigid = rigid_init(in.template_maxilla, in.patient_maxilla, in.icp);
  const RigidTransform& rigid = out.rigid.transform;
  info(fmt::format("rigid initialisation: mse {:.6g} mm^2 after {} iterations", out.rigid.mse, out.rigid.iterations));

  const auto register_pair = [&](const PointCloud& tmpl, const PointCloud& patient) {
    return cpd_register(stride_subsample(rigid.apply(tmpl), in.cpd_max_points),
                        stride_subsample(patient, in.cpd_max_points), in.cpd);
  };
  const DeformationField maxilla = register_pair(in.template_maxilla, in.patient_maxilla);
  const DeformationField mandible = register_pair(in.template_mandible, in.patient_mandible);
  out.fields["maxilla"] = summarize(maxilla);
  out.fields["mandible"] = summarize(mandible);

  // Landmarks on bone first; hyoid points follow the mandible by similarity.
  std::vector<NamedPoint> hyoid;
  for (const auto& lm : in.template_landmarks) {
    NamedPoint p = lm;
    p.position = rigid.apply(lm.position);
    if (lm.parent == "maxilla" || lm.parent == "mandible") {
      const bool upper = lm.parent == "maxilla";
      p.position = transfer_landmark(p.position, upper ? maxilla : mandible);
      const auto& surface = upper ? in.patient_maxilla_surface : in.patient_mandible_surface;
      if (surface && !surface->empty()) p.position = surface->vertices[project_to_surface(p.position, *surface)];
      out.landmarks.push_back(p);
    } else if (lm.parent == "hyoid") {
      hyoid.push_back(p);
    } else {
      throw Error(fmt::format("landmark '{}' has unsupported parent '{}'", lm.name, lm.parent));
    }
  }
  if (!hyoid.empty()) {
    PointCloud src, dst;
    for (const auto& name : in.hyoid_triad) {
      src.push_back(rigid.apply(find_landmark(in.template_landmarks, name).position));
      dst.push_back(find_landmark(out.landmarks, name).position);
    }
    const SimilarityTransform sim = fit_similarity(src, dst);
    for (auto& p : hyoid) {
      p.position = sim.apply(p.position);
      out.landmarks.push_back(p);
    }
  }

  for (const auto& m : in.muscles) {
    const double len = (find_landmark(out.landmarks, m.origin).position - find_landmark(out.landmarks, m.insertion).position).norm();
    const MuscleLengths l = update_muscle(len, m.name);
    out.muscles[m.name] = {l.optimal, l.maximum, std::nullopt, std::nullopt};
  }
  for (const auto& g : in.ligaments) {
    const double len = (find_landmark(out.landmarks, g.origin).position - find_landmark(out.landmarks, g.insertion).position).norm();
    out.ligaments[g.name] = {g.group, ligament_rest(len, g.group)};
  }

  for (const auto& s : in.sections) {
    PcsaRecord rec{s.group, s.side, extract_scs(s.mesh, section_plane(s.group, out.landmarks, in)), {}};
    rec.pcsa = pcsa_estimate(rec.scs.max_area, s.group);
    for (const auto& b : max_force(rec.pcsa.mean, s.group)) {
      const std::string id = std::string(1, s.side) + b.muscle;
      auto it = out.muscles.find(id);
      if (it == out.muscles.end()) {
        warn(fmt::format("cross section for {} side {} has no muscle entry '{}'", muscle_group_name(s.group), s.side, id));
        continue;
      }
      it->second.pcsa = rec.pcsa.mean;
      it->second.f_max = b.force;
    }
    out.pcsa.push_back(rec);
  }

  if (in.tmj) {
    const TmjInputs& t = *in.tmj;
    const DeformationField condyle = register_pair(t.template_condyle, t.patient_condyle);
    const DeformationField fossa = register_pair(t.template_fossa, t.patient_fossa);
    out.fields["condyle"] = summarize(condyle);
    out.fields["fossa"] = summarize(fossa);
    const PointCloud cond_refs = t.patient_condyle;
    const PointCloud fossa_refs = t.patient_fossa;
    for (const auto& p : t.template_disc)
      out.disc.push_back(tmj_blend(rigid.apply(p), condyle, fossa, cond_refs, fossa_refs, in.disc_blend));
    for (const auto& p : t.template_capsule)
      out.capsule.push_back(tmj_blend(rigid.apply(p), condyle, fossa, cond_refs, fossa_refs, in.capsule_blend));
  }
  return out;
}

namespace {

Eigen::Vector3d vec3(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw SchemaError(fmt::format("{}: expected [x, y, z]", what));
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json vec_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace

PersonalizationInputs load_registration_bundle(const std::filesystem::path& dir) {
  const auto manifest = dir / "bundle.json";
  std::ifstream f(manifest);
  if (!f) throw Error(fmt::format("cannot open {}", manifest.string()));
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    throw SchemaError(fmt::format("{}: {}", manifest.string(), e.what()));
  }

  std::vector<std::string> problems;
  auto require = [&](const json& obj, const char* key, const std::string& path) -> const json* {
    if (!obj.is_object() || !obj.contains(key)) {
      problems.push_back(path + "." + key + ": missing");
      return nullptr;
    }
    return &obj.at(key);
  };
  const json* tmpl = require(j, "template", "bundle");
  const json* pat = require(j, "patient", "bundle");
  for (const char* k : {"maxilla", "mandible", "landmarks"})
    if (tmpl) require(*tmpl, k, "bundle.template");
  for (const char* k : {"maxilla", "mandible"})
    if (pat) require(*pat, k, "bundle.patient");
  if (!problems.empty()) {
    std::string msg = fmt::format("{}: invalid registration bundle:", manifest.string());
    for (const auto& p : problems) msg += "\n  " + p;
    throw SchemaError(msg);
  }

  auto path_of = [&](const json& v) { return dir / v.get<std::string>(); };
  auto is_mesh = [&](const std::filesystem::path& p) {
    const auto ext = p.extension().string();
    return ext == ".obj" || ext == ".ply" || ext == ".OBJ" || ext == ".PLY";
  };

  PersonalizationInputs in;
  in.template_maxilla = read_points(path_of(tmpl->at("maxilla")));
  in.template_mandible = read_points(path_of(tmpl->at("mandible")));
  in.template_landmarks = read_landmarks_csv(path_of(tmpl->at("landmarks")));
  const auto pmax = path_of(pat->at("maxilla"));
  const auto pman = path_of(pat->at("mandible"));
  in.patient_maxilla = read_points(pmax);
  in.patient_mandible = read_points(pman);
  if (is_mesh(pmax)) {
    TriMesh m = read_mesh(pmax);
    if (!m.faces.empty()) in.patient_maxilla_surface = std::move(m);
  }
  if (is_mesh(pman)) {
    TriMesh m = read_mesh(pman);
    if (!m.faces.empty()) in.patient_mandible_surface = std::move(m);
  }

  for (const auto& m : j.value("muscles", json::array()))
    in.muscles.push_back({m.at("name").get<std::string>(), m.at("origin").get<std::string>(), m.at("insertion").get<std::string>()});
  for (const auto& g : j.value("ligaments", json::array()))
    in.ligaments.push_back({g.at("name").get<std::string>(), g.at("group").get<std::string>(),
                            g.at("origin").get<std::string>(), g.at("insertion").get<std::string>()});
  for (const auto& s : j.value("sections", json::array())) {
    SectionSpec spec;
    spec.group = parse_muscle_group(s.at("group").get<std::string>());
    const std::string side = s.at("side").get<std::string>();
    if (side != "R" && side != "L") throw SchemaError("sections[].side must be R or L");
    spec.side = side[0];
    spec.mesh = read_mesh(path_of(s.at("mesh")));
    in.sections.push_back(std::move(spec));
  }
  if (j.contains("scs_landmarks")) {
    const json& n = j["scs_landmarks"];
    auto& names = in.scs_names;
    names.porion_left = n.value("porion_left", names.porion_left);
    names.porion_right = n.value("porion_right", names.porion_right);
    names.orbitale_left = n.value("orbitale_left", names.orbitale_left);
    names.gonion_left = n.value("gonion_left", names.gonion_left);
    names.gonion_right = n.value("gonion_right", names.gonion_right);
    names.pole_left = n.value("lateral_pole_left", names.pole_left);
    names.pole_right = n.value("lateral_pole_right", names.pole_right);
  }
  if (j.contains("superior")) in.superior = vec3(j["superior"], "superior");
  if (j.contains("anterior")) in.anterior = vec3(j["anterior"], "anterior");
  if (j.contains("hyoid_triad")) in.hyoid_triad = j["hyoid_triad"].get<std::vector<std::string>>();

  if (j.contains("tmj")) {
    const json& t = j["tmj"];
    TmjInputs tmj;
    tmj.template_condyle = read_points(path_of(t.at("template_condyle")));
    tmj.patient_condyle = read_points(path_of(t.at("patient_condyle")));
    tmj.template_fossa = read_points(path_of(t.at("template_fossa")));
    tmj.patient_fossa = read_points(path_of(t.at("patient_fossa")));
    if (t.contains("template_disc")) tmj.template_disc = read_points(path_of(t["template_disc"]));
    if (t.contains("template_capsule")) tmj.template_capsule = read_points(path_of(t["template_capsule"]));
    in.tmj = std::move(tmj);
  }
  if (j.contains("cpd")) {
    const json& c = j["cpd"];
    if (c.contains("beta")) in.cpd.beta = c["beta"].get<double>();
    in.cpd.lambda = c.value("lambda", in.cpd.lambda);
    in.cpd.w_outlier = c.value("w_outlier", in.cpd.w_outlier);
    in.cpd.max_iterations = c.value("max_iterations", in.cpd.max_iterations);
    in.cpd_max_points = c.value("max_points", in.cpd_max_points);
  }
  if (j.contains("icp")) {
    const json& c = j["icp"];
    in.icp.max_iterations = c.value("max_iterations", in.icp.max_iterations);
    in.icp.tolerance = c.value("tolerance", in.icp.tolerance);
  }
  return in;
}

std::string patient_parameters_json(const PatientParameters& p) {
  json j;
  json rot = json::array();
  for (int r = 0; r < 3; ++r) rot.push_back(json::array({p.rigid.transform.rotation(r, 0), p.rigid.transform.rotation(r, 1),
                                                         p.rigid.transform.rotation(r, 2)}));
  j["rigid"] = {{"rotation", rot}, {"translation", vec_json(p.rigid.transform.translation)}, {"mse", p.rigid.mse},
                {"iterations", p.rigid.iterations}};
  for (const auto& [name, f] : p.fields)
    j["fields"][name] = {{"converged", f.converged}, {"iterations", f.iterations}, {"sigma2", f.sigma2}, {"beta", f.beta}};
  j["landmarks"] = json::array();
  for (const auto& lm : p.landmarks)
    j["landmarks"].push_back({{"name", lm.name}, {"parent", lm.parent}, {"position", vec_json(lm.position)}});
  j["muscles"] = json::object();
  for (const auto& [name, m] : p.muscles) {
    json e{{"length_opt", m.length_opt}, {"length_max", m.length_max}};
    e["pcsa"] = m.pcsa ? json(*m.pcsa) : json(nullptr);
    e["f_max"] = m.f_max ? json(*m.f_max) : json(nullptr);
    j["muscles"][name] = e;
  }
  j["ligaments"] = json::object();
  for (const auto& [name, g] : p.ligaments) j["ligaments"][name] = {{"group", g.first}, {"rest_length", g.second}};
  j["pcsa"] = json::array();
  for (const auto& r : p.pcsa)
    j["pcsa"].push_back({{"group", muscle_group_name(r.group)}, {"side", std::string(1, r.side)}, {"scs", r.scs.max_area},
                         {"scs_offset", r.scs.best_offset}, {"wpcs", r.pcsa.weber}, {"bpcs", r.pcsa.buchner},
                         {"mean", r.pcsa.mean}, {"clamped", r.pcsa.clamped}});
  j["tmj"] = {{"k_nn", p.disc_blend.k_nn}, {"epsilon", p.disc_blend.epsilon}, {"q_disc", p.disc_blend.q},
              {"q_capsule", p.capsule_blend.q}, {"disc_points", p.disc.size()}, {"capsule_points", p.capsule.size()}};
  return j.dump(2);
}

}  // namespace osteoplan
