#include "core/camera.hpp"

#include <Eigen/Geometry>
#include <cmath>

#include "core/grid_ops.hpp"

namespace gm {

Intrinsics::Intrinsics(double fx_, double fy_, double cx_, double cy_)
    : fx(fx_), fy(fy_), cx(cx_), cy(cy_) {
  require(fx > 0.0 && fy > 0.0, ErrorCode::InvalidArgument,
          "Intrinsics: focal lengths must be positive");
  require(std::isfinite(cx) && std::isfinite(cy), ErrorCode::NumericError,
          "Intrinsics: non-finite principal point");
}

Intrinsics Intrinsics::from_matrix(const Eigen::Matrix3d& K) {
  require(std::abs(K(0, 1)) < 1e-12 && std::abs(K(1, 0)) < 1e-12 &&
              std::abs(K(2, 0)) < 1e-12 && std::abs(K(2, 1)) < 1e-12 &&
              std::abs(K(2, 2) - 1.0) < 1e-12,
          ErrorCode::InvalidArgument,
          "Intrinsics: matrix must be skewless pinhole with unit scale");
  return Intrinsics(K(0, 0), K(1, 1), K(0, 2), K(1, 2));
}

Eigen::Matrix3d Intrinsics::matrix() const {
  Eigen::Matrix3d K = Eigen::Matrix3d::Identity();
  K(0, 0) = fx;
  K(1, 1) = fy;
  K(0, 2) = cx;
  K(1, 2) = cy;
  return K;
}

Eigen::Matrix3d Intrinsics::inverse() const {
  Eigen::Matrix3d Ki = Eigen::Matrix3d::Identity();
  Ki(0, 0) = 1.0 / fx;
  Ki(1, 1) = 1.0 / fy;
  Ki(0, 2) = -cx / fx;
  Ki(1, 2) = -cy / fy;
  return Ki;
}

bool is_rotation(const Eigen::Matrix3d& R, double tol) {
  return (R.transpose() * R - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <=
             tol &&
         std::abs(R.determinant() - 1.0) <= tol;
}

RigidPose::RigidPose(const Eigen::Matrix3d& R_, const Eigen::Vector3d& t_)
    : R(R_), t(t_) {
  require(is_rotation(R), ErrorCode::InvalidArgument,
          "RigidPose: R is not a rotation");
  require(t.allFinite(), ErrorCode::NumericError,
          "RigidPose: non-finite translation");
}

RigidPose RigidPose::inverse() const {
  RigidPose inv;
  inv.R = R.transpose();
  inv.t = -(R.transpose() * t);
  return inv;
}

RigidPose RigidPose::compose(const RigidPose& inner) const {
  RigidPose out;
  out.R = R * inner.R;
  out.t = R * inner.t + t;
  return out;
}

Eigen::Vector3d backproject(const Eigen::Vector2d& pixel, double depth,
                            const Intrinsics& K) {
  require(depth > 0.0, ErrorCode::InvalidArgument,
          "backproject: depth must be positive");
  return {depth * (pixel.x() - K.cx) / K.fx, depth * (pixel.y() - K.cy) / K.fy,
          depth};
}

Projection project(const Eigen::Vector3d& point, const Intrinsics& K) {
  require(std::abs(point.z()) >= 1e-12, ErrorCode::Degenerate,
          "project: point on the principal plane");
  Projection p;
  p.pixel.x() = K.fx * point.x() / point.z() + K.cx;
  p.pixel.y() = K.fy * point.y() / point.z() + K.cy;
  p.depth = point.z();
  return p;
}

CorrespondenceField gt_correspondence(const DepthMap& depth1,
                                      const DepthMap& depth2,
                                      const Intrinsics& K1,
                                      const Intrinsics& K2,
                                      const RigidPose& pose,
                                      double rel_depth_tau) {
  require(rel_depth_tau > 0.0, ErrorCode::InvalidArgument,
          "gt_correspondence: rel_depth_tau must be positive");
  CorrespondenceField field(depth1.height, depth1.width);
  for (int i = 0; i < depth1.height; ++i) {
    for (int j = 0; j < depth1.width; ++j) {
      if (!depth1.is_valid(i, j)) continue;
      Eigen::Vector3d X1 = backproject({double(j), double(i)}, depth1.at(i, j), K1);
      Eigen::Vector3d X2 = pose.apply(X1);
      if (X2.z() < 1e-12) continue;
      Projection q = project(X2, K2);
      field.set(i, j, q.pixel.x(), q.pixel.y(), false);
      if (q.pixel.x() < 0.0 || q.pixel.x() > depth2.width - 1 ||
          q.pixel.y() < 0.0 || q.pixel.y() > depth2.height - 1)
        continue;
      auto d2 = depth_sample(depth2, q.pixel.x(), q.pixel.y());
      if (!d2) continue;
      if (std::abs(q.depth - *d2) / q.depth > rel_depth_tau) continue;
      field.set(i, j, q.pixel.x(), q.pixel.y(), true);
    }
  }
  return field;
}

NormalMap normals_from_depth(const DepthMap& depth, const Intrinsics& K) {
  require(depth.height >= 3 && depth.width >= 3, ErrorCode::InvalidArgument,
          "normals_from_depth: depth map must be at least 3x3");
  NormalMap normals(depth.height, depth.width);
  for (int i = 1; i < depth.height - 1; ++i) {
    for (int j = 1; j < depth.width - 1; ++j) {
      if (!depth.is_valid(i, j) || !depth.is_valid(i, j - 1) ||
          !depth.is_valid(i, j + 1) || !depth.is_valid(i - 1, j) ||
          !depth.is_valid(i + 1, j))
        continue;
      Eigen::Vector3d xl = backproject({double(j - 1), double(i)}, depth.at(i, j - 1), K);
      Eigen::Vector3d xr = backproject({double(j + 1), double(i)}, depth.at(i, j + 1), K);
      Eigen::Vector3d xu = backproject({double(j), double(i - 1)}, depth.at(i - 1, j), K);
      Eigen::Vector3d xd = backproject({double(j), double(i + 1)}, depth.at(i + 1, j), K);
      Eigen::Vector3d n = (xr - xl).cross(xd - xu);
      double norm = n.norm();
      if (norm < 1e-15) continue;
      n /= norm;
      Eigen::Vector3d ray = backproject({double(j), double(i)}, depth.at(i, j), K);
      double facing = n.dot(ray);
      if (facing == 0.0) continue;
      if (facing > 0.0) n = -n;
      normals.set(i, j, n.x(), n.y(), n.z());
    }
  }
  return normals;
}

double overlap_ratio(const DepthMap& depth1, const DepthMap& depth2,
                     const Intrinsics& K1, const Intrinsics& K2,
                     const RigidPose& pose, double rel_depth_tau) {
  CorrespondenceField field =
      gt_correspondence(depth1, depth2, K1, K2, pose, rel_depth_tau);
  size_t n_source = 0, n_covisible = 0;
  for (int i = 0; i < depth1.height; ++i)
    for (int j = 0; j < depth1.width; ++j) {
      if (!depth1.is_valid(i, j)) continue;
      ++n_source;
      n_covisible += field.is_valid(i, j) ? 1 : 0;
    }
  require(n_source > 0, ErrorCode::InsufficientData,
          "overlap_ratio: no valid source pixels");
  return static_cast<double>(n_covisible) / static_cast<double>(n_source);
}

}  // namespace gm
