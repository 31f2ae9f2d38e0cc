#include "core/planar.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>

#include "core/rng.hpp"

namespace gm {

PixelHomography pixel_homography(const Eigen::Vector3d& normal,
                                 const Eigen::Vector2d& pixel, double depth,
                                 const RigidPose& pose, const Intrinsics& K1,
                                 const Intrinsics& K2) {
  require(depth > 0.0, ErrorCode::InvalidArgument,
          "pixel_homography: depth must be positive");
  require(std::abs(normal.norm() - 1.0) < 1e-6, ErrorCode::InvalidArgument,
          "pixel_homography: normal must be unit length");
  Eigen::Vector3d X = backproject(pixel, depth, K1);
  double rho = normal.dot(X);
  require(std::abs(rho) > 1e-12, ErrorCode::Degenerate,
          "pixel_homography: plane passes through the camera center");
  Eigen::Matrix3d H =
      K2.matrix() * (pose.R + pose.t * normal.transpose() / rho) * K1.inverse();
  double det = H.determinant();
  require(std::abs(det) > 1e-15, ErrorCode::Degenerate,
          "pixel_homography: homography is singular");
  if (std::abs(H(2, 2)) > 1e-15) H /= H(2, 2);
  PixelHomography out;
  out.H = H;
  return out;
}

Eigen::Vector2d planar_project(const PixelHomography& H,
                               const Eigen::Vector2d& q) {
  Eigen::Vector3d v = H.H * Eigen::Vector3d(q.x(), q.y(), 1.0);
  require(std::abs(v.z()) >= 1e-12, ErrorCode::Degenerate,
          "planar_project: point maps to the line at infinity");
  return {v.x() / v.z(), v.y() / v.z()};
}

double point_plane_distance(const Eigen::Vector3d& n_p,
                            const Eigen::Vector2d& p, double d_p,
                            const Eigen::Vector2d& q, double d_q,
                            const Intrinsics& K1) {
  require(d_p > 0.0 && d_q > 0.0, ErrorCode::InvalidArgument,
          "point_plane_distance: depths must be positive");
  Eigen::Vector3d Xp = backproject(p, d_p, K1);
  Eigen::Vector3d Xq = backproject(q, d_q, K1);
  return std::abs(n_p.dot(Xq - Xp));
}

CoplanarSampleSet sample_coplanar_set(const BoolMask& valid, int k,
                                      uint64_t seed) {
  require(k > 0, ErrorCode::InvalidArgument,
          "sample_coplanar_set: K must be positive");
  std::vector<Eigen::Vector2i> pool;
  for (int i = 0; i < valid.height; ++i)
    for (int j = 0; j < valid.width; ++j)
      if (valid.at(i, j)) pool.emplace_back(j, i);
  require(pool.size() >= static_cast<size_t>(k), ErrorCode::InsufficientData,
          "sample_coplanar_set: fewer valid pixels than K");

  CoplanarSampleSet set;
  set.k = k;
  set.seed = seed;

  // Anchors: partial Fisher-Yates, without replacement.
  Pcg32 anchor_rng(seed, 0);
  std::vector<Eigen::Vector2i> shuffled = pool;
  for (int m = 0; m < k; ++m) {
    uint32_t pick =
        m + anchor_rng.next_below(static_cast<uint32_t>(shuffled.size() - m));
    std::swap(shuffled[m], shuffled[pick]);
    set.anchors.push_back(shuffled[m]);
  }

  set.candidates.resize(static_cast<size_t>(k) * k);
  for (int m = 0; m < k; ++m) {
    Pcg32 cand_rng(seed, static_cast<uint64_t>(m) + 1);
    for (int n = 0; n < k; ++n) {
      set.candidates[static_cast<size_t>(m) * k + n] =
          pool[cand_rng.next_below(static_cast<uint32_t>(pool.size()))];
    }
  }
  return set;
}

namespace {

bool geometry_valid(const NormalMap& normals, const DepthMap& depth, int x,
                    int y) {
  if (y < 0 || y >= depth.height || x < 0 || x >= depth.width) return false;
  return depth.is_valid(y, x) && normals.is_valid(y, x);
}

Eigen::Vector3d normal_at(const NormalMap& normals, int x, int y) {
  size_t b = 3 * normals.index(y, x);
  return {normals.normal[b], normals.normal[b + 1], normals.normal[b + 2]};
}

}  // namespace

IndicatorMatrix coplanar_indicator(const CoplanarSampleSet& samples,
                                   const NormalMap& normals,
                                   const DepthMap& depth,
                                   const CorrespondenceField& gt,
                                   const Intrinsics& K1, const Intrinsics& K2,
                                   const RigidPose& pose,
                                   const CoplanarThresholds& thresholds) {
  require(thresholds.k1 >= 0.0 && thresholds.k2 >= 0.0 && thresholds.k3 >= 0.0,
          ErrorCode::InvalidArgument,
          "coplanar_indicator: thresholds must be nonnegative");
  const int k = samples.k;
  IndicatorMatrix out;
  out.k = k;
  out.k1 = thresholds.k1;
  out.k2 = thresholds.k2;
  out.k3 = thresholds.k3;
  out.seed = samples.seed;
  out.bits.assign(static_cast<size_t>(k) * k, 0);

  for (int m = 0; m < k; ++m) {
    const Eigen::Vector2i& p = samples.anchors[m];
    if (!geometry_valid(normals, depth, p.x(), p.y())) continue;
    Eigen::Vector3d n_p = normal_at(normals, p.x(), p.y());
    double d_p = depth.at(p.y(), p.x());
    Eigen::Vector2d pf(p.x(), p.y());

    PixelHomography H_p;
    try {
      H_p = pixel_homography(n_p, pf, d_p, pose, K1, K2);
    } catch (const Error&) {
      continue;  // degenerate anchor plane, row stays 0
    }

    for (int n = 0; n < k; ++n) {
      const Eigen::Vector2i& q = samples.candidate(m, n);
      if (!geometry_valid(normals, depth, q.x(), q.y())) continue;
      Eigen::Vector3d n_q = normal_at(normals, q.x(), q.y());
      double d_q = depth.at(q.y(), q.x());
      Eigen::Vector2d qf(q.x(), q.y());

      double dot = std::clamp(n_p.dot(n_q), -1.0, 1.0);
      double normal_term =
          thresholds.literal_form ? 1.0 - std::acos(dot) : 1.0 - dot;
      if (normal_term > thresholds.k1) continue;

      if (point_plane_distance(n_p, pf, d_p, qf, d_q, K1) > thresholds.k2)
        continue;

      Eigen::Vector2d projected;
      try {
        projected = planar_project(H_p, qf);
      } catch (const Error&) {
        continue;
      }
      Eigen::Vector2d reference;
      if (thresholds.literal_form) {
        reference = qf;
      } else {
        if (!gt.is_valid(q.y(), q.x())) continue;
        reference = {gt.x(q.y(), q.x()), gt.y(q.y(), q.x())};
      }
      if ((projected - reference).norm() > thresholds.k3) continue;

      out.bits[static_cast<size_t>(m) * k + n] = 1;
    }
  }
  return out;
}

}  // namespace gm
