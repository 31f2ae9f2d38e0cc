#pragma once

#include <Eigen/Core>

#include "core/types.hpp"

namespace gm {

// Skewless pinhole intrinsics, focal lengths and principal point in pixels.
struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  Intrinsics() = default;
  Intrinsics(double fx_, double fy_, double cx_, double cy_);
  static Intrinsics from_matrix(const Eigen::Matrix3d& K);

  Eigen::Matrix3d matrix() const;
  Eigen::Matrix3d inverse() const;
};

// Rigid transform mapping source-camera points to support-camera points,
// X2 = R * X1 + t. Translation in meters.
struct RigidPose {
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();

  RigidPose() = default;
  RigidPose(const Eigen::Matrix3d& R_, const Eigen::Vector3d& t_);

  Eigen::Vector3d apply(const Eigen::Vector3d& x) const { return R * x + t; }
  RigidPose inverse() const;
  // this followed by other: other.compose(this) maps frame-1 to frame-3.
  RigidPose compose(const RigidPose& inner) const;
};

// Checks R'R = I and det(R) = 1 within 1e-9.
bool is_rotation(const Eigen::Matrix3d& R, double tol = 1e-9);

Eigen::Vector3d backproject(const Eigen::Vector2d& pixel, double depth,
                            const Intrinsics& K);

struct Projection {
  Eigen::Vector2d pixel;
  double depth;  // z in camera coordinates; negative means behind camera
};

Projection project(const Eigen::Vector3d& point, const Intrinsics& K);

// Ground-truth correspondences from depth and relative pose. A source pixel
// is valid when its reprojection lands in front of the support camera,
// inside the frame, on interpolable support depth, and survives the
// relative-depth occlusion check |z - d2(q)| / z <= rel_depth_tau.
CorrespondenceField gt_correspondence(const DepthMap& depth1,
                                      const DepthMap& depth2,
                                      const Intrinsics& K1,
                                      const Intrinsics& K2,
                                      const RigidPose& pose,
                                      double rel_depth_tau);

// Central-difference surface normals, unit length and camera-facing
// (normal . viewing ray < 0). Boundary pixels and pixels with an invalid
// 4-neighborhood are invalid.
NormalMap normals_from_depth(const DepthMap& depth, const Intrinsics& K);

// Fraction of valid-depth source pixels whose ground-truth correspondence
// is valid.
double overlap_ratio(const DepthMap& depth1, const DepthMap& depth2,
                     const Intrinsics& K1, const Intrinsics& K2,
                     const RigidPose& pose, double rel_depth_tau);

}  // namespace gm
