#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "core/camera.hpp"
#include "core/types.hpp"

namespace gm {

struct PointMatch {
  Eigen::Vector2d source;   // pixel in image 1
  Eigen::Vector2d support;  // pixel in image 2
};

// Essential matrix for the epipolar constraint x2^T E x1 = 0 with
// normalized camera coordinates; after normalized() the singular values
// are (1, 1, 0) and ||E||_F = sqrt(2).
struct EssentialMatrix {
  Eigen::Matrix3d E = Eigen::Matrix3d::Zero();

  EssentialMatrix normalized() const;
  // Two equal nonzero singular values and a vanishing third, within tol.
  bool is_valid(double tol = 1e-6) const;
};

enum class EssentialSolverKind { FivePoint, EightPoint };

// Up to ten essential matrices through five normalized point pairs
// (Stewenius-style action-matrix solution of the Nister problem).
std::vector<Eigen::Matrix3d> five_point_candidates(
    const std::vector<Eigen::Vector2d>& x1, const std::vector<Eigen::Vector2d>& x2);

// Hartley-normalized least squares over >= 8 normalized pairs, projected
// onto the essential manifold. Serves as the independent cross-check path
// and as the inlier refit.
EssentialMatrix eight_point(const std::vector<Eigen::Vector2d>& x1,
                            const std::vector<Eigen::Vector2d>& x2);

struct EssentialRansacResult {
  EssentialMatrix essential;
  std::vector<uint8_t> inliers;
  int n_inliers = 0;
  int iterations = 0;
};

// Deterministic RANSAC: per-iteration RNG substreams of (seed, iteration),
// models scored by inlier count with ties broken by lower truncated Sampson
// total, early exit at 0.9999 confidence, final least-squares refit on the
// inlier set. The pixel threshold maps to normalized coordinates through
// the mean focal length.
EssentialRansacResult estimate_essential_ransac(
    const std::vector<PointMatch>& matches, const Intrinsics& K1,
    const Intrinsics& K2, double inlier_px, int max_iters, uint64_t seed,
    EssentialSolverKind solver = EssentialSolverKind::FivePoint);

struct RelativePose {
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();  // unit length
  int n_cheiral = 0;   // matches passing the positive-depth test
  bool reliable = false;  // majority of matches are cheiral
};

// Picks the (R, t) candidate maximizing points with positive depth in both
// views. Near-zero baselines make the choice unreliable; the flag reports
// when fewer than half the matches back the winner.
RelativePose decompose_essential(const EssentialMatrix& E,
                                 const std::vector<PointMatch>& matches,
                                 const Intrinsics& K1, const Intrinsics& K2);

struct PoseError {
  double rot_deg = 0.0;
  double trans_deg = 0.0;
  double max_deg = 0.0;
};

PoseError pose_error(const Eigen::Matrix3d& est_R, const Eigen::Vector3d& est_t,
                     const Eigen::Matrix3d& gt_R, const Eigen::Vector3d& gt_t);

// Nondecreasing per-pair error values.
struct ErrorCurve {
  std::vector<double> sorted;

  static ErrorCurve from_values(std::vector<double> values);
  size_t size() const { return sorted.size(); }
};

// Exact empirical-CDF integration: AUC@t = (1/(N t)) sum_{e<=t} (t - e).
std::vector<double> auc(const ErrorCurve& errors,
                        const std::vector<double>& thresholds);

// Accuracy at threshold: fraction of errors <= t (closed threshold).
std::vector<double> map_at(const ErrorCurve& errors,
                           const std::vector<double>& thresholds);

// Fraction of masked pixels with ||T - T_gt||_2 <= delta; pixels whose
// prediction or ground truth is invalid count as misses.
std::vector<double> pck(const CorrespondenceField& T,
                        const CorrespondenceField& T_gt, const BoolMask& mask,
                        const std::vector<double>& deltas);

// Mean distance between the four image corners mapped by both homographies.
double homography_corner_error(const Eigen::Matrix3d& h_est,
                               const Eigen::Matrix3d& h_gt, int image_h,
                               int image_w);

struct HomographyRansacResult {
  Eigen::Matrix3d H = Eigen::Matrix3d::Identity();
  std::vector<uint8_t> inliers;
  int n_inliers = 0;
};

// Normalized-DLT RANSAC on 4-point samples (collinear samples rejected),
// forward transfer error in pixels, refit on inliers, deterministic per seed.
HomographyRansacResult estimate_homography_ransac(
    const std::vector<PointMatch>& matches, double inlier_px, int max_iters,
    uint64_t seed);

}  // namespace gm
