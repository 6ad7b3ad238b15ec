#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "osteoplan/geometry.hpp"
#include "osteoplan/mesh_io.hpp"

namespace osteoplan {

using PointCloud = std::vector<Point3>;

/// Static 3-D kd-tree over a point cloud for nearest / k-nearest queries.
class PointIndex {
 public:
  explicit PointIndex(const PointCloud& points);

  /// Index of the nearest point (lowest index on exact ties).
  std::size_t nearest(const Point3& q) const;
  /// Indices of the k nearest points, closest first.
  std::vector<std::size_t> knn(const Point3& q, std::size_t k) const;
  std::size_t size() const { return points_.size(); }
  const Point3& point(std::size_t i) const { return points_[i]; }

 private:
  struct Node {
    int point = -1;
    int axis = 0;
    int left = -1;
    int right = -1;
  };
  int build(std::vector<int>& idx, int lo, int hi, int depth);

  PointCloud points_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Point3 apply(const Point3& p) const { return rotation * p + translation; }
  PointCloud apply(const PointCloud& cloud) const;
  RigidTransform compose(const RigidTransform& inner) const;  // this after inner
  bool is_proper(double tol = 1e-9) const;
};

/// Uniform scale + rotation + translation: p -> s R p + t.
struct SimilarityTransform {
  double scale = 1.0;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Point3 apply(const Point3& p) const { return scale * (rotation * p) + translation; }
};

/// Least-squares rotation + translation taking src[i] onto dst[i] (SVD).
RigidTransform fit_rigid(const PointCloud& src, const PointCloud& dst);

/// Least-squares similarity transform taking src[i] onto dst[i].
SimilarityTransform fit_similarity(const PointCloud& src, const PointCloud& dst);

struct IcpOptions {
  int max_iterations = 100;
  double tolerance = 1e-12;          // stop when the MSE change (mm^2) falls below this
  bool principal_axes_restarts = true;  // also start from the four principal-axis alignments
};

struct IcpResult {
  RigidTransform transform;
  double mse = 0.0;
  int iterations = 0;
};

/// Centroid alignment followed by nearest-neighbour ICP. With
/// `principal_axes_restarts`, ICP is also started from every proper
/// principal-axis alignment and the lowest-MSE result is kept. Throws on
/// clouds with fewer than 3 non-collinear points.
IcpResult rigid_init(const PointCloud& template_cloud, const PointCloud& target, const IcpOptions& options = {});

struct CpdOptions {
  std::optional<double> beta;  // default 0.1 * template diagonal
  double lambda = 2.0;
  double w_outlier = 0.1;
  int max_iterations = 150;
  double tolerance = 1e-6;     // relative objective change
};

/// Gaussian-kernel displacement field x -> x + sum_m G(x, y_m) w_m.
struct DeformationField {
  PointCloud controls;
  Eigen::MatrixXd coefficients;  // M x 3
  double beta = 1.0;
  bool converged = false;
  int iterations = 0;
  double sigma2 = 0.0;
  /// EM objective (negative log-likelihood plus lambda/2 tr(W^T G W)) before each M-step.
  std::vector<double> objective_history;
  /// Regularised mismatch sum P ||x - T(y)||^2 + lambda tr(W^T G W) at the same points.
  std::vector<double> mismatch_history;
};

double gaussian_kernel(const Point3& a, const Point3& b, double beta);

/// Nonrigid coherent point drift of `template_cloud` onto `target`.
DeformationField cpd_register(const PointCloud& template_cloud, const PointCloud& target, const CpdOptions& options = {});

Point3 apply_field(const DeformationField& field, const Point3& x);

/// Normalised transfer p + sum_m G(p,y_m) D(y_m) / sum_m G(p,y_m), with
/// D(y_m) = apply_field(y_m) - y_m. Throws OutsideInfluenceError when every
/// weight underflows.
Point3 transfer_landmark(const Point3& p, const DeformationField& field, std::optional<double> beta = std::nullopt);

/// Normalised-transfer displacement D(p) (see transfer_landmark).
Eigen::Vector3d transfer_displacement(const Point3& p, const DeformationField& field,
                                      std::optional<double> beta = std::nullopt);

// ---- musculoligamentous parameters -------------------------------------

/// Maximum-to-optimal length ratio of a template muscle (e.g. "RAT").
double muscle_length_ratio(const std::string& muscle);
const std::map<std::string, double>& muscle_length_ratios();

struct MuscleLengths {
  double optimal = 0.0;
  double maximum = 0.0;
};

MuscleLengths update_muscle(double current_length, const std::string& muscle);

enum class MuscleGroup { Masseter, Temporalis, MedialPterygoid, LateralPterygoid };

MuscleGroup parse_muscle_group(const std::string& name);
std::string muscle_group_name(MuscleGroup group);

struct PcsaRegression {
  double weber_slope, weber_intercept, weber_error;
  double buchner_slope, buchner_intercept, buchner_error;
};

const PcsaRegression& pcsa_regression(MuscleGroup group);

struct PcsaEstimate {
  double weber = 0.0;    // cm^2
  double buchner = 0.0;  // cm^2
  double mean = 0.0;     // cm^2
  bool clamped = false;  // a regression went negative and was set to 0
};

PcsaEstimate pcsa_estimate(double scs_cm2, MuscleGroup group);

inline constexpr double kMuscleStress = 40.0;  // N/cm^2

struct BranchForce {
  std::string branch;
  std::string muscle;  // template id without side prefix, e.g. "SM"
  double proportion = 0.0;
  double force = 0.0;  // N
};

/// Group force 40 N/cm^2 * PCSA split over the group's branches.
std::vector<BranchForce> max_force(double pcsa_cm2, MuscleGroup group);

/// Current length plus the family slack offset (stm 1.5 mm, sphm 5.5 mm).
double ligament_rest(double current_length, const std::string& group);

// ---- TMJ blending -------------------------------------------------------

struct TmjBlendOptions {
  double q = 0.5;
  double epsilon = 1e-8;
  std::size_t k_nn = 20;
};

struct TmjWeights {
  double condyle = 0.5;
  double fossa = 0.5;
};

TmjWeights tmj_weights(double d_condyle, double d_fossa, double q, double epsilon);

/// Mean distance from x to its k nearest points in refs.
double knn_mean_distance(const Point3& x, const PointIndex& refs, std::size_t k);

/// x + w_cond D_cond(x) + w_fossa D_fossa(x), where D are normalised-transfer
/// displacements of the two fields and the weights come from the k-NN mean
/// distances to the reference clouds.
Point3 tmj_blend(const Point3& x, const DeformationField& condyle_field, const DeformationField& fossa_field,
                 const PointCloud& condyle_refs, const PointCloud& fossa_refs, const TmjBlendOptions& options);

// ---- scan cross sections ------------------------------------------------

struct ScsResult {
  double max_area = 0.0;              // cm^2
  double best_offset = 0.0;           // mm from the reference plane
  std::size_t best_index = 0;         // into offsets/areas
  std::vector<double> offsets;        // 0, -1, +1, ..., -5, +5
  std::vector<double> areas;
};

/// Cross-section area on the reference plane and the ten parallel planes at
/// +-1..5 mm. Returns the largest (earliest offset in the list on ties).
ScsResult extract_scs(const TriMesh& mesh, const Plane& reference);

/// Frankfort horizontal through both porions and the left orbitale, normal
/// pointing to the same side as `superior_hint`.
Plane frankfort_plane(const Point3& porion_left, const Point3& porion_right, const Point3& orbitale_left,
                      const Eigen::Vector3d& superior_hint);

/// Plane containing the gonion line, tilted 30 degrees from the Frankfort
/// plane with its normal leaning anteriorly, then moved 25 mm along it.
Plane masseter_reference_plane(const Plane& frankfort, const Point3& gonion_left, const Point3& gonion_right,
                               const Eigen::Vector3d& anterior);

/// Frankfort plane moved 10 mm superiorly.
Plane temporalis_reference_plane(const Plane& frankfort);

/// Plane perpendicular to the Frankfort plane through the lateral poles,
/// normal pointing anteriorly, moved 10 mm anteriorly.
Plane lateral_pterygoid_reference_plane(const Plane& frankfort, const Point3& pole_left, const Point3& pole_right,
                                        const Eigen::Vector3d& anterior);

}  // namespace osteoplan
