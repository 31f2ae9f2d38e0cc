#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <utility>
#include <vector>

#include "core/camera.hpp"
#include "core/matching.hpp"
#include "core/types.hpp"

namespace gm {

// World plane {X : normal . X = offset}, textured with seeded value noise.
struct PlaneSpec {
  Eigen::Vector3d normal = Eigen::Vector3d(0, 0, 1);
  double offset = 0.0;
  uint64_t texture_seed = 0;
  double texture_scale = 1.0;  // noise cells per meter
};

struct SceneSpec {
  std::vector<PlaneSpec> planes;
  Intrinsics intrinsics;
  std::vector<RigidPose> world_to_camera;  // one per view
  int height = 0;
  int width = 0;
  int channels = 3;
};

// One rendered view: exact ray-plane depths and per-pixel analytic normals
// in camera coordinates, plus the index of the plane each pixel hit
// (-1 where no plane is visible).
struct SceneView {
  DenseMap image;
  DepthMap depth;
  NormalMap normals;
  Intrinsics intrinsics;
  RigidPose world_to_camera;
  std::vector<int> plane_id;
};

std::vector<SceneView> synth_scene(const SceneSpec& spec);

// Relative pose mapping view a's camera frame to view b's.
RigidPose relative_pose(const SceneView& a, const SceneView& b);

// Unordered view pairs (i < j) whose overlap ratio falls inside
// [overlap_lo, overlap_hi], drawn `count` times with replacement with
// probability proportional to the overlap ratio.
std::vector<std::pair<int, int>> sample_pairs(
    const std::vector<SceneView>& views, double overlap_lo, double overlap_hi,
    int count, double rel_depth_tau, uint64_t seed);

// Per-cell features built from raw image patches at the given scale,
// optionally L2-normalized. Keeps correlation volumes non-degenerate
// without any learned embedding.
FeatureVolume patch_features(const DenseMap& image, int scale, bool normalize);

}  // namespace gm
