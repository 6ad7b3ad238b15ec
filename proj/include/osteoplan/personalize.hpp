#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "osteoplan/mesh_io.hpp"
#include "osteoplan/registration.hpp"

namespace osteoplan {

struct MuscleSpec {
  std::string name;        // muscle id with side prefix, e.g. "RAT"
  std::string origin;      // landmark names
  std::string insertion;
};

struct LigamentSpec {
  std::string name;
  std::string group;  // stm | sphm
  std::string origin;
  std::string insertion;
};

struct SectionSpec {
  MuscleGroup group = MuscleGroup::Masseter;
  char side = 'R';  // R | L
  TriMesh mesh;     // patient muscle surface
};

/// Landmark names used to build the cross-section planes.
struct ScsLandmarkNames {
  std::string porion_left = "Po_L";
  std::string porion_right = "Po_R";
  std::string orbitale_left = "Or_L";
  std::string gonion_left = "Go_L";
  std::string gonion_right = "Go_R";
  std::string pole_left = "LP_L";
  std::string pole_right = "LP_R";
};

struct TmjInputs {
  PointCloud template_condyle, patient_condyle;
  PointCloud template_fossa, patient_fossa;
  PointCloud template_disc, template_capsule;
};

struct PersonalizationInputs {
  PointCloud template_maxilla, patient_maxilla;
  PointCloud template_mandible, patient_mandible;
  std::optional<TriMesh> patient_maxilla_surface, patient_mandible_surface;
  std::vector<NamedPoint> template_landmarks;  // parent: maxilla | mandible | hyoid
  std::vector<MuscleSpec> muscles;
  std::vector<LigamentSpec> ligaments;
  std::vector<SectionSpec> sections;
  ScsLandmarkNames scs_names;
  Eigen::Vector3d superior = Eigen::Vector3d::UnitZ();
  Eigen::Vector3d anterior = Eigen::Vector3d::UnitY();
  std::vector<std::string> hyoid_triad{"Me", "Go_L", "Go_R"};  // mandible landmarks
  std::optional<TmjInputs> tmj;
  IcpOptions icp;
  CpdOptions cpd;
  std::size_t cpd_max_points = 1000;  // clouds are stride-subsampled above this
  TmjBlendOptions disc_blend{0.5, 1e-8, 20};
  TmjBlendOptions capsule_blend{1.0, 1e-8, 20};
};

struct MuscleParameters {
  double length_opt = 0.0;
  double length_max = 0.0;
  std::optional<double> pcsa;   // cm^2, group PCSA on that side
  std::optional<double> f_max;  // N
};

struct PcsaRecord {
  MuscleGroup group;
  char side;
  ScsResult scs;
  PcsaEstimate pcsa;
};

struct FieldSummary {
  bool converged = false;
  int iterations = 0;
  double sigma2 = 0.0;
  double beta = 0.0;
};

struct PatientParameters {
  IcpResult rigid;
  std::map<std::string, FieldSummary> fields;
  std::vector<NamedPoint> landmarks;
  std::map<std::string, MuscleParameters> muscles;
  std::map<std::string, std::pair<std::string, double>> ligaments;  // name -> (group, rest length)
  std::vector<PcsaRecord> pcsa;
  TmjBlendOptions disc_blend, capsule_blend;
  PointCloud disc, capsule;  // blended TMJ geometry
};

/// Template-to-patient personalisation: maxilla-based rigid initialisation,
/// CPD on maxilla and mandible, landmark transfer with surface projection,
/// hyoid similarity fallback, muscle and ligament updates, cross-section
/// PCSA and force scaling, and TMJ disc/capsule blending.
PatientParameters personalize(const PersonalizationInputs& inputs);

/// Reads a registration bundle: `dir/bundle.json` plus the files it names.
PersonalizationInputs load_registration_bundle(const std::filesystem::path& dir);

std::string patient_parameters_json(const PatientParameters& params);

/// Keeps every k-th point so that at most `max_points` remain.
PointCloud stride_subsample(const PointCloud& cloud, std::size_t max_points);

}  // namespace osteoplan
