#include "osteoplan/registration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "osteoplan/errors.hpp"
#include "osteoplan/log.hpp"

namespace osteoplan {

// ---- PointIndex ---------------------------------------------------------

PointIndex::PointIndex(const PointCloud& points) : points_(points) {
  if (points_.empty()) throw Error("PointIndex: empty point cloud");
  std::vector<int> idx(points_.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  nodes_.reserve(points_.size());
  root_ = build(idx, 0, static_cast<int>(idx.size()), 0);
}

int PointIndex::build(std::vector<int>& idx, int lo, int hi, int depth) {
  if (lo >= hi) return -1;
  const int axis = depth % 3;
  const int mid = lo + (hi - lo) / 2;
  std::nth_element(idx.begin() + lo, idx.begin() + mid, idx.begin() + hi, [&](int a, int b) {
    const double pa = points_[static_cast<std::size_t>(a)][axis];
    const double pb = points_[static_cast<std::size_t>(b)][axis];
    return pa < pb || (pa == pb && a < b);
  });
  const int node = static_cast<int>(nodes_.size());
  nodes_.push_back({idx[static_cast<std::size_t>(mid)], axis, -1, -1});
  const int left = build(idx, lo, mid, depth + 1);
  const int right = build(idx, mid + 1, hi, depth + 1);
  nodes_[static_cast<std::size_t>(node)].left = left;
  nodes_[static_cast<std::size_t>(node)].right = right;
  return node;
}

namespace {

struct Candidate {
  double d2;
  int index;
  bool operator<(const Candidate& o) const { return d2 < o.d2 || (d2 == o.d2 && index < o.index); }
};

}  // namespace

std::size_t PointIndex::nearest(const Point3& q) const { return knn(q, 1).front(); }

std::vector<std::size_t> PointIndex::knn(const Point3& q, std::size_t k) const {
  if (k == 0) return {};
  k = std::min(k, points_.size());
  std::priority_queue<Candidate> heap;  // worst candidate on top
  struct Item {
    int node;
    double bound;  // squared distance from q to the splitting plane that led here
  };
  std::vector<Item> todo{{root_, 0.0}};
  while (!todo.empty()) {
    const Item it = todo.back();
    todo.pop_back();
    if (it.node < 0) continue;
    if (heap.size() == k && it.bound > heap.top().d2) continue;
    const Node& n = nodes_[static_cast<std::size_t>(it.node)];
    const Point3& p = points_[static_cast<std::size_t>(n.point)];
    const Candidate c{(p - q).squaredNorm(), n.point};
    if (heap.size() < k) {
      heap.push(c);
    } else if (c < heap.top()) {
      heap.pop();
      heap.push(c);
    }
    const double diff = q[n.axis] - p[n.axis];
    const int near = diff <= 0.0 ? n.left : n.right;
    const int far = diff <= 0.0 ? n.right : n.left;
    // Far side first so the near side is popped next.
    todo.push_back({far, diff * diff});
    todo.push_back({near, it.bound});
  }
  std::vector<std::size_t> out(heap.size());
  for (std::size_t i = out.size(); i-- > 0;) {
    out[i] = static_cast<std::size_t>(heap.top().index);
    heap.pop();
  }
  return out;
}

// ---- rigid / similarity ---------------------------------------------------

PointCloud RigidTransform::apply(const PointCloud& cloud) const {
  PointCloud out;
  out.reserve(cloud.size());
  for (const auto& p : cloud) out.push_back(apply(p));
  return out;
}

RigidTransform RigidTransform::compose(const RigidTransform& inner) const {
  RigidTransform out;
  out.rotation = rotation * inner.rotation;
  out.translation = rotation * inner.translation + translation;
  return out;
}

bool RigidTransform::is_proper(double tol) const {
  const double orth = (rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  return orth <= tol && std::abs(rotation.determinant() - 1.0) <= tol;
}

namespace {

Eigen::Matrix3Xd to_matrix(const PointCloud& cloud) {
  Eigen::Matrix3Xd m(3, static_cast<Eigen::Index>(cloud.size()));
  for (std::size_t i = 0; i < cloud.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = cloud[i];
  return m;
}

Point3 centroid(const PointCloud& cloud) {
  Point3 c = Point3::Zero();
  for (const auto& p : cloud) c += p;
  return c / static_cast<double>(cloud.size());
}

void check_pairs(const PointCloud& src, const PointCloud& dst, const char* what) {
  if (src.size() != dst.size()) throw Error(fmt::format("{}: point counts differ ({} vs {})", what, src.size(), dst.size()));
  if (src.size() < 3) throw Error(fmt::format("{}: need at least 3 point pairs", what));
}

void check_non_degenerate(const PointCloud& cloud, const char* what) {
  if (cloud.size() < 3) throw Error(fmt::format("{}: need at least 3 points", what));
  const Point3 c = centroid(cloud);
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : cloud) cov += (p - c) * (p - c).transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  const Eigen::Vector3d ev = es.eigenvalues();  // ascending
  if (!(ev[2] > 0.0) || ev[1] <= 1e-12 * ev[2])
    throw Error(fmt::format("{}: point cloud is degenerate (collinear or coincident)", what));
}

Eigen::Matrix3d principal_axes(const PointCloud& cloud, const Point3& c) {
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : cloud) cov += (p - c) * (p - c).transpose();
  return Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(cov).eigenvectors();
}

}  // namespace

RigidTransform fit_rigid(const PointCloud& src, const PointCloud& dst) {
  check_pairs(src, dst, "fit_rigid");
  const Eigen::Matrix4d m = Eigen::umeyama(to_matrix(src), to_matrix(dst), false);
  RigidTransform t;
  t.rotation = m.topLeftCorner<3, 3>();
  t.translation = m.topRightCorner<3, 1>();
  return t;
}

SimilarityTransform fit_similarity(const PointCloud& src, const PointCloud& dst) {
  check_pairs(src, dst, "fit_similarity");
  const Eigen::Matrix4d m = Eigen::umeyama(to_matrix(src), to_matrix(dst), true);
  SimilarityTransform t;
  const Eigen::Matrix3d sr = m.topLeftCorner<3, 3>();
  t.scale = std::cbrt(sr.determinant());
  t.rotation = sr / t.scale;
  t.translation = m.topRightCorner<3, 1>();
  return t;
}

namespace {

IcpResult icp_from(const PointCloud& source, const PointCloud& target, const PointIndex& index, RigidTransform start,
                   const IcpOptions& options) {
  IcpResult result;
  result.transform = start;
  PointCloud moved(source.size()), matched(source.size());
  double prev = std::numeric_limits<double>::infinity();
  for (int it = 0; it < options.max_iterations; ++it) {
    double mse = 0.0;
    for (std::size_t i = 0; i < source.size(); ++i) {
      moved[i] = result.transform.apply(source[i]);
      matched[i] = target[index.nearest(moved[i])];
      mse += (moved[i] - matched[i]).squaredNorm();
    }
    mse /= static_cast<double>(source.size());
    result.mse = mse;
    result.iterations = it;
    if (std::abs(prev - mse) < options.tolerance) return result;
    prev = mse;
    result.transform = fit_rigid(moved, matched).compose(result.transform);
  }
  double mse = 0.0;
  for (const auto& p : source) {
    const Point3 q = result.transform.apply(p);
    mse += (q - target[index.nearest(q)]).squaredNorm();
  }
  result.mse = mse / static_cast<double>(source.size());
  result.iterations = options.max_iterations;
  return result;
}

}  // namespace

IcpResult rigid_init(const PointCloud& template_cloud, const PointCloud& target, const IcpOptions& options) {
  check_non_degenerate(template_cloud, "rigid_init (template)");
  check_non_degenerate(target, "rigid_init (target)");
  if (options.max_iterations < 1) throw Error("rigid_init: max_iterations must be positive");

  const PointIndex index(target);
  const Point3 ct = centroid(template_cloud);
  const Point3 cp = centroid(target);

  std::vector<RigidTransform> starts;
  RigidTransform centroid_only;
  centroid_only.translation = cp - ct;
  starts.push_back(centroid_only);
  if (options.principal_axes_restarts) {
    const Eigen::Matrix3d et = principal_axes(template_cloud, ct);
    const Eigen::Matrix3d ep = principal_axes(target, cp);
    const double base = et.determinant() * ep.determinant();
    for (int mask = 0; mask < 8; ++mask) {
      Eigen::Vector3d s(mask & 1 ? -1.0 : 1.0, mask & 2 ? -1.0 : 1.0, mask & 4 ? -1.0 : 1.0);
      if (base * s.prod() < 0.0) continue;
      RigidTransform t;
      t.rotation = ep * s.asDiagonal() * et.transpose();
      t.translation = cp - t.rotation * ct;
      starts.push_back(t);
    }
  }

  IcpResult best;
  bool have = false;
  for (const auto& s : starts) {
    IcpResult r = icp_from(template_cloud, target, index, s, options);
    if (!have || r.mse < best.mse) {
      best = r;
      have = true;
    }
  }
  return best;
}

// ---- CPD ------------------------------------------------------------------

double gaussian_kernel(const Point3& a, const Point3& b, double beta) {
  return std::exp(-(a - b).squaredNorm() / (2.0 * beta * beta));
}

namespace {

double bounding_diagonal(const PointCloud& cloud) {
  Point3 lo = cloud.front(), hi = cloud.front();
  for (const auto& p : cloud) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return (hi - lo).norm();
}

}  // namespace

DeformationField cpd_register(const PointCloud& template_cloud, const PointCloud& target, const CpdOptions& options) {
  if (template_cloud.empty() || target.empty()) throw Error("cpd_register: point clouds must be non-empty");
  if (!(options.lambda > 0.0)) throw Error("cpd_register: lambda must be positive");
  if (!(options.w_outlier >= 0.0 && options.w_outlier < 1.0)) throw Error("cpd_register: w_outlier must lie in [0, 1)");
  if (options.max_iterations < 1) throw Error("cpd_register: max_iterations must be positive");

  const auto M = static_cast<Eigen::Index>(template_cloud.size());
  const auto N = static_cast<Eigen::Index>(target.size());
  constexpr double D = 3.0;
  const double diag = bounding_diagonal(template_cloud);
  const double beta = options.beta.value_or(0.1 * diag);
  if (!(beta > 0.0)) throw Error("cpd_register: beta must be positive (template cloud has zero extent?)");

  Eigen::MatrixXd Y(M, 3), X(N, 3);
  for (Eigen::Index m = 0; m < M; ++m) Y.row(m) = template_cloud[static_cast<std::size_t>(m)].transpose();
  for (Eigen::Index n = 0; n < N; ++n) X.row(n) = target[static_cast<std::size_t>(n)].transpose();

  Eigen::MatrixXd G(M, M);
  for (Eigen::Index i = 0; i < M; ++i) {
    G(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < M; ++j) {
      const double g = std::exp(-(Y.row(i) - Y.row(j)).squaredNorm() / (2.0 * beta * beta));
      G(i, j) = g;
      G(j, i) = g;
    }
  }

  double sigma2 = (static_cast<double>(M) * X.squaredNorm() + static_cast<double>(N) * Y.squaredNorm() -
                   2.0 * X.colwise().sum().dot(Y.colwise().sum())) /
                  (static_cast<double>(M) * static_cast<double>(N) * D);
  const double sigma2_floor = 1e-14 * std::max(diag * diag, 1e-300);

  DeformationField field;
  field.controls = template_cloud;
  field.beta = beta;
  field.coefficients = Eigen::MatrixXd::Zero(M, 3);
  if (!(sigma2 > sigma2_floor)) {
    // Clouds already coincide.
    field.converged = true;
    field.sigma2 = std::max(sigma2, 0.0);
    return field;
  }

  const double w = options.w_outlier;
  Eigen::MatrixXd& W = field.coefficients;
  Eigen::MatrixXd GW = Eigen::MatrixXd::Zero(M, 3);
  Eigen::MatrixXd T = Y;
  Eigen::MatrixXd P(M, N);
  Eigen::VectorXd logits(M);
  double prev = std::numeric_limits<double>::infinity();

  for (int it = 1; it <= options.max_iterations; ++it) {
    // E-step in the log domain.
    const double log_c = 0.5 * D * std::log(2.0 * std::numbers::pi * sigma2) +
                         (w > 0.0 ? std::log(w / (1.0 - w)) : -std::numeric_limits<double>::infinity()) +
                         std::log(static_cast<double>(M) / static_cast<double>(N));
    double nll = 0.0;
    double mismatch = 0.0;
    for (Eigen::Index n = 0; n < N; ++n) {
      double top = log_c;
      for (Eigen::Index m = 0; m < M; ++m) {
        logits[m] = -(X.row(n) - T.row(m)).squaredNorm() / (2.0 * sigma2);
        top = std::max(top, logits[m]);
      }
      double sum = std::isfinite(log_c) ? std::exp(log_c - top) : 0.0;
      for (Eigen::Index m = 0; m < M; ++m) sum += std::exp(logits[m] - top);
      const double log_denom = top + std::log(sum);
      for (Eigen::Index m = 0; m < M; ++m) {
        P(m, n) = std::exp(logits[m] - log_denom);
        mismatch += P(m, n) * (X.row(n) - T.row(m)).squaredNorm();
      }
      nll -= log_denom + std::log((1.0 - w) / static_cast<double>(M)) - 0.5 * D * std::log(2.0 * std::numbers::pi * sigma2);
    }
    const double reg = W.cwiseProduct(GW).sum();
    const double objective = nll + 0.5 * options.lambda * reg;
    field.objective_history.push_back(objective);
    field.mismatch_history.push_back(mismatch + options.lambda * reg);
    field.iterations = it;

    if (std::isfinite(prev) && std::abs(prev - objective) <= options.tolerance * std::abs(prev)) {
      field.converged = true;
      break;
    }
    prev = objective;

    // M-step.
    const Eigen::VectorXd P1 = P.rowwise().sum();
    const Eigen::VectorXd Pt1 = P.colwise().sum().transpose();
    const Eigen::MatrixXd PX = P * X;
    const double Np = P1.sum();
    if (!(Np > 0.0)) throw Error("cpd_register: every target point was classified as an outlier");

    Eigen::MatrixXd A = P1.asDiagonal() * G;
    A.diagonal().array() += options.lambda * sigma2;
    const Eigen::MatrixXd rhs = PX - P1.asDiagonal() * Y;
    W = A.partialPivLu().solve(rhs);
    GW = G * W;
    T = Y + GW;

    const double num = (Pt1.array() * X.rowwise().squaredNorm().array()).sum() - 2.0 * PX.cwiseProduct(T).sum() +
                       (P1.array() * T.rowwise().squaredNorm().array()).sum();
    sigma2 = num / (Np * D);
    if (!(sigma2 > sigma2_floor)) {
      sigma2 = sigma2_floor;
      field.converged = true;
      break;
    }
  }
  field.sigma2 = sigma2;
  if (!field.converged) warn(fmt::format("cpd_register: not converged after {} iterations", options.max_iterations));
  return field;
}

Point3 apply_field(const DeformationField& field, const Point3& x) {
  Point3 out = x;
  for (std::size_t m = 0; m < field.controls.size(); ++m)
    out += gaussian_kernel(x, field.controls[m], field.beta) *
           field.coefficients.row(static_cast<Eigen::Index>(m)).transpose();
  return out;
}

Eigen::Vector3d transfer_displacement(const Point3& p, const DeformationField& field, std::optional<double> beta) {
  if (field.controls.empty()) throw Error("transfer_landmark: deformation field has no control points");
  const double b = beta.value_or(field.beta);
  if (!(b > 0.0)) throw Error("transfer_landmark: beta must be positive");
  double wsum = 0.0;
  Eigen::Vector3d acc = Eigen::Vector3d::Zero();
  for (const auto& y : field.controls) {
    const double g = gaussian_kernel(p, y, b);
    if (g == 0.0) continue;
    wsum += g;
    acc += g * (apply_field(field, y) - y);
  }
  if (!(wsum > 0.0)) throw OutsideInfluenceError("landmark outside influence region");
  return acc / wsum;
}

Point3 transfer_landmark(const Point3& p, const DeformationField& field, std::optional<double> beta) {
  return p + transfer_displacement(p, field, beta);
}

// ---- muscles and ligaments -------------------------------------------------

const std::map<std::string, double>& muscle_length_ratios() {
  static const std::map<std::string, double> table = [] {
    const std::pair<const char*, double> base[] = {{"AT", 1.27}, {"MT", 1.42}, {"PT", 1.31}, {"SP", 1.36},
                                                   {"IP", 1.32}, {"DM", 1.53}, {"SM", 1.30}, {"MP", 1.25},
                                                   {"PM", 1.58}, {"AM", 1.28}, {"AD", 1.28}, {"GH", 1.28}};
    std::map<std::string, double> t;
    for (const auto& [id, r] : base) {
      t[std::string("R") + id] = r;
      t[std::string("L") + id] = r;
    }
    return t;
  }();
  return table;
}

double muscle_length_ratio(const std::string& muscle) {
  const auto& t = muscle_length_ratios();
  const auto it = t.find(muscle);
  if (it == t.end()) throw Error(fmt::format("unknown muscle '{}'", muscle));
  return it->second;
}

MuscleLengths update_muscle(double current_length, const std::string& muscle) {
  if (!(current_length > 0.0)) throw Error("update_muscle: length must be positive");
  const double r = muscle_length_ratio(muscle);
  return {current_length, r * current_length};
}

MuscleGroup parse_muscle_group(const std::string& name) {
  std::string key;
  for (char c : name) key += c == ' ' || c == '-' ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (key == "masseter") return MuscleGroup::Masseter;
  if (key == "temporalis") return MuscleGroup::Temporalis;
  if (key == "medial_pterygoid") return MuscleGroup::MedialPterygoid;
  if (key == "lateral_pterygoid") return MuscleGroup::LateralPterygoid;
  throw Error(fmt::format("unknown muscle group '{}'", name));
}

std::string muscle_group_name(MuscleGroup group) {
  switch (group) {
    case MuscleGroup::Masseter: return "masseter";
    case MuscleGroup::Temporalis: return "temporalis";
    case MuscleGroup::MedialPterygoid: return "medial_pterygoid";
    case MuscleGroup::LateralPterygoid: return "lateral_pterygoid";
  }
  return "?";
}

const PcsaRegression& pcsa_regression(MuscleGroup group) {
  static const PcsaRegression masseter{1.52, 1.04, 0.86, 1.11, 0.85, 0.29};
  static const PcsaRegression temporalis{2.45, -1.85, 1.34, 1.87, -1.51, 0.75};
  static const PcsaRegression medial{2.34, -2.04, 0.55, 1.56, -1.40, 0.50};
  static const PcsaRegression lateral{1.55, -3.42, 0.41, 0.93, -1.51, 0.40};
  switch (group) {
    case MuscleGroup::Masseter: return masseter;
    case MuscleGroup::Temporalis: return temporalis;
    case MuscleGroup::MedialPterygoid: return medial;
    case MuscleGroup::LateralPterygoid: return lateral;
  }
  throw Error("unknown muscle group");
}

PcsaEstimate pcsa_estimate(double scs_cm2, MuscleGroup group) {
  if (!(scs_cm2 >= 0.0)) throw Error("pcsa_estimate: SCS must be nonnegative");
  const PcsaRegression& r = pcsa_regression(group);
  PcsaEstimate out;
  out.weber = r.weber_slope * scs_cm2 + r.weber_intercept;
  out.buchner = r.buchner_slope * scs_cm2 + r.buchner_intercept;
  if (out.weber < 0.0 || out.buchner < 0.0) {
    out.clamped = true;
    warn(fmt::format("pcsa_estimate: negative regression output for {} at SCS {} cm^2 clamped to 0",
                     muscle_group_name(group), scs_cm2));
    out.weber = std::max(0.0, out.weber);
    out.buchner = std::max(0.0, out.buchner);
  }
  out.mean = 0.5 * (out.weber + out.buchner);
  return out;
}

std::vector<BranchForce> max_force(double pcsa_cm2, MuscleGroup group) {
  if (!(pcsa_cm2 >= 0.0)) throw Error("max_force: PCSA must be nonnegative");
  const double total = kMuscleStress * pcsa_cm2;
  std::vector<BranchForce> out;
  auto add = [&](const char* branch, const char* muscle, double share) {
    out.push_back({branch, muscle, share, share * total});
  };
  switch (group) {
    case MuscleGroup::Masseter:
      add("superficial", "SM", 0.70);
      add("deep", "DM", 0.30);
      break;
    case MuscleGroup::Temporalis:
      add("anterior", "AT", 0.48);
      add("middle", "MT", 0.29);
      add("posterior", "PT", 0.23);
      break;
    case MuscleGroup::MedialPterygoid:
      add("medial_pterygoid", "MP", 1.00);
      break;
    case MuscleGroup::LateralPterygoid:
      add("superior", "SP", 0.30);
      add("inferior", "IP", 0.70);
      break;
  }
  return out;
}

double ligament_rest(double current_length, const std::string& group) {
  if (!(current_length > 0.0)) throw Error("ligament_rest: length must be positive");
  if (group == "stm") return current_length + 1.5;
  if (group == "sphm") return current_length + 5.5;
  throw Error(fmt::format("unknown ligament group '{}' (expected stm or sphm)", group));
}

// ---- TMJ --------------------------------------------------------------------

TmjWeights tmj_weights(double d_condyle, double d_fossa, double q, double epsilon) {
  if (!(d_condyle >= 0.0 && d_fossa >= 0.0)) throw Error("tmj_weights: distances must be nonnegative");
  if (!(q > 0.0) || !(epsilon >= 0.0)) throw Error("tmj_weights: need q > 0 and epsilon >= 0");
  const double a = d_condyle + epsilon;
  const double b = d_fossa + epsilon;
  if (a == 0.0 && b == 0.0) return {0.5, 0.5};
  if (a == 0.0) return {1.0, 0.0};
  if (b == 0.0) return {0.0, 1.0};
  const double ic = std::pow(1.0 / a, q);
  const double iff = std::pow(1.0 / b, q);
  TmjWeights w;
  w.condyle = ic / (ic + iff);
  w.fossa = 1.0 - w.condyle;
  return w;
}

double knn_mean_distance(const Point3& x, const PointIndex& refs, std::size_t k) {
  if (k == 0) throw Error("knn_mean_distance: k must be positive");
  if (refs.size() < k) throw Error(fmt::format("knn_mean_distance: reference cloud has {} points, need {}", refs.size(), k));
  double s = 0.0;
  const auto nn = refs.knn(x, k);
  for (std::size_t i : nn) s += (refs.point(i) - x).norm();
  return s / static_cast<double>(nn.size());
}

Point3 tmj_blend(const Point3& x, const DeformationField& condyle_field, const DeformationField& fossa_field,
                 const PointCloud& condyle_refs, const PointCloud& fossa_refs, const TmjBlendOptions& options) {
  if (condyle_refs.size() < options.k_nn || fossa_refs.size() < options.k_nn)
    throw Error(fmt::format("tmj_blend: reference clouds need at least k_NN = {} points", options.k_nn));
  const PointIndex ci(condyle_refs), fi(fossa_refs);
  const TmjWeights w = tmj_weights(knn_mean_distance(x, ci, options.k_nn), knn_mean_distance(x, fi, options.k_nn),
                                   options.q, options.epsilon);
  return x + w.condyle * transfer_displacement(x, condyle_field) + w.fossa * transfer_displacement(x, fossa_field);
}

// ---- scan cross sections -----------------------------------------------------

ScsResult extract_scs(const TriMesh& mesh, const Plane& reference) {
  ScsResult out;
  out.offsets.push_back(0.0);
  for (int k = 1; k <= 5; ++k) {
    out.offsets.push_back(-static_cast<double>(k));
    out.offsets.push_back(static_cast<double>(k));
  }
  for (std::size_t i = 0; i < out.offsets.size(); ++i) {
    const double a = cross_section_area(mesh, offset_plane(reference, out.offsets[i]));
    out.areas.push_back(a);
    if (i == 0 || a > out.max_area) {
      out.max_area = a;
      out.best_index = i;
      out.best_offset = out.offsets[i];
    }
  }
  return out;
}

Plane frankfort_plane(const Point3& porion_left, const Point3& porion_right, const Point3& orbitale_left,
                      const Eigen::Vector3d& superior_hint) {
  Eigen::Vector3d n = (porion_right - porion_left).cross(orbitale_left - porion_left);
  if (!(n.norm() > 1e-12)) throw Error("frankfort_plane: landmarks are collinear");
  n.normalize();
  if (n.dot(superior_hint) < 0.0) n = -n;
  return Plane::from_normal(porion_left, n);
}

namespace {

// Unit vector along the landmark pair and the in-plane anterior direction.
std::pair<Eigen::Vector3d, Eigen::Vector3d> bilateral_frame(const Plane& fh, const Point3& left, const Point3& right,
                                                            const Eigen::Vector3d& anterior) {
  Eigen::Vector3d lateral = right - left;
  lateral -= lateral.dot(fh.normal) * fh.normal;
  if (!(lateral.norm() > 1e-12)) throw Error("bilateral landmarks coincide in the Frankfort plane");
  lateral.normalize();
  Eigen::Vector3d ant = fh.normal.cross(lateral);
  if (ant.dot(anterior) < 0.0) ant = -ant;
  return {lateral, ant};
}

}  // namespace

Plane masseter_reference_plane(const Plane& frankfort, const Point3& gonion_left, const Point3& gonion_right,
                               const Eigen::Vector3d& anterior) {
  const auto [lateral, ant] = bilateral_frame(frankfort, gonion_left, gonion_right, anterior);
  (void)lateral;
  const double tilt = deg_to_rad(30.0);
  const Eigen::Vector3d n = std::cos(tilt) * frankfort.normal + std::sin(tilt) * ant;
  const Point3 mid = 0.5 * (gonion_left + gonion_right);
  return offset_plane(Plane::from_normal(mid, n), 25.0);
}

Plane temporalis_reference_plane(const Plane& frankfort) { return offset_plane(frankfort, 10.0); }

Plane lateral_pterygoid_reference_plane(const Plane& frankfort, const Point3& pole_left, const Point3& pole_right,
                                        const Eigen::Vector3d& anterior) {
  const auto [lateral, ant] = bilateral_frame(frankfort, pole_left, pole_right, anterior);
  (void)lateral;
  const Point3 mid = 0.5 * (pole_left + pole_right);
  return offset_plane(Plane::from_normal(mid, ant), 10.0);
}

}  // namespace osteoplan
