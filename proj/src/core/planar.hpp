#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "core/camera.hpp"
#include "core/types.hpp"

namespace gm {

// 3x3 projective map taking source-frame pixels to support-frame pixels for
// points on one pixel's tangent plane. Bottom-right entry normalized to 1
// where nonzero.
struct PixelHomography {
  Eigen::Matrix3d H = Eigen::Matrix3d::Identity();
};

// K anchors plus K candidates per anchor, all drawn from a validity mask.
// Candidate draws use per-anchor RNG substreams of (seed, anchor index), so
// the set is independent of evaluation order.
struct CoplanarSampleSet {
  int k = 0;
  uint64_t seed = 0;
  std::vector<Eigen::Vector2i> anchors;     // K pixels (x, y)
  std::vector<Eigen::Vector2i> candidates;  // K*K pixels, row-major by anchor

  const Eigen::Vector2i& candidate(int m, int n) const {
    return candidates[static_cast<size_t>(m) * k + n];
  }
};

struct IndicatorMatrix {
  int k = 0;
  double k1 = 0.0, k2 = 0.0, k3 = 0.0;
  uint64_t seed = 0;
  std::vector<uint8_t> bits;  // K*K row-major

  bool at(int m, int n) const { return bits[static_cast<size_t>(m) * k + n] != 0; }
  size_t count() const {
    size_t c = 0;
    for (uint8_t b : bits) c += (b != 0);
    return c;
  }
};

// Tangent-plane homography at a pixel: H = K2 (R + t n^T / rho) K1^{-1},
// rho = n . backproject(pixel, depth, K1). The quotient makes H independent
// of the normal's sign, and for points on the plane H reproduces the
// depth-based reprojection exactly.
PixelHomography pixel_homography(const Eigen::Vector3d& normal,
                                 const Eigen::Vector2d& pixel, double depth,
                                 const RigidPose& pose, const Intrinsics& K1,
                                 const Intrinsics& K2);

Eigen::Vector2d planar_project(const PixelHomography& H,
                               const Eigen::Vector2d& q);

// |n_p . (backproject(q, d_q) - backproject(p, d_p))| in meters.
double point_plane_distance(const Eigen::Vector3d& n_p,
                            const Eigen::Vector2d& p, double d_p,
                            const Eigen::Vector2d& q, double d_q,
                            const Intrinsics& K1);

// Anchors drawn uniformly without replacement, candidates uniformly with
// replacement, all from pixels where `valid` is set.
CoplanarSampleSet sample_coplanar_set(const BoolMask& valid, int k,
                                      uint64_t seed);

struct CoplanarThresholds {
  double k1 = 0.002;  // normal agreement, cosine distance
  double k2 = 0.02;   // point-to-plane distance, meters
  double k3 = 1.0;    // homography consistency, support-frame pixels
  // Literal published form: arccos in criterion (a) and a same-frame
  // self-comparison in criterion (c). Off by default; the literal (a) is
  // vacuous at k1 = 0.002 and the literal (c) compares across frames.
  // The homography is never transposed in either form.
  bool literal_form = false;
};

// O+[m][n] = 1 iff the pair passes normal agreement, point-to-plane
// distance, and homography consistency (boundary values count as passing).
// Entries whose geometry is invalid anywhere are 0.
IndicatorMatrix coplanar_indicator(const CoplanarSampleSet& samples,
                                   const NormalMap& normals,
                                   const DepthMap& depth,
                                   const CorrespondenceField& gt,
                                   const Intrinsics& K1, const Intrinsics& K2,
                                   const RigidPose& pose,
                                   const CoplanarThresholds& thresholds);

}  // namespace gm
