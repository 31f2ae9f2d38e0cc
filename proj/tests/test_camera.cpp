#include <doctest.h>

#include <Eigen/Geometry>
#include <cmath>

#include "core/camera.hpp"
#include "core/grid_ops.hpp"
#include "core/rng.hpp"
#include "core/synth.hpp"
#include "oracles.hpp"

using namespace gm;

namespace {

Eigen::Matrix3d rot_y(double angle) {
  return Eigen::AngleAxisd(angle, Eigen::Vector3d::UnitY()).toRotationMatrix();
}

DepthMap constant_depth(int h, int w, double d) {
  DepthMap map(h, w);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) map.set(i, j, d);
  return map;
}

}  // namespace

TEST_SUITE("camera") {

TEST_CASE("backproject worked examples") {
  Intrinsics eye(1, 1, 0, 0);
  Eigen::Vector3d p = backproject({0, 0}, 1.0, eye);
  CHECK(p.isApprox(Eigen::Vector3d(0, 0, 1)));
  p = backproject({2, 3}, 2.0, eye);
  CHECK(p.isApprox(Eigen::Vector3d(4, 6, 2)));
  Intrinsics K(100, 100, 50, 50);
  p = backproject({150, 50}, 4.0, K);
  CHECK(p.isApprox(Eigen::Vector3d(4, 0, 4)));
  CHECK_THROWS_AS(backproject({0, 0}, 0.0, K), Error);
  CHECK_THROWS_AS(backproject({0, 0}, -1.0, K), Error);
}

TEST_CASE("project worked examples and sign convention") {
  Intrinsics eye(1, 1, 0, 0);
  Projection pr = project({1, 1, 2}, eye);
  CHECK(pr.pixel.x() == doctest::Approx(0.5));
  CHECK(pr.pixel.y() == doctest::Approx(0.5));
  CHECK(pr.depth == doctest::Approx(2.0));
  pr = project({1, 1, -2}, eye);
  CHECK(pr.depth < 0.0);
  CHECK_THROWS_AS(project({1, 1, 0}, eye), Error);
}

TEST_CASE("project inverts backproject on random inputs") {
  Intrinsics K(240.0, 260.0, 31.5, 23.5);
  Pcg32 rng(23);
  for (int q = 0; q < 10000; ++q) {
    Eigen::Vector2d px(64.0 * rng.next_double(), 48.0 * rng.next_double());
    double d = 0.5 + 9.5 * rng.next_double();
    Projection pr = project(backproject(px, d, K), K);
    CHECK(std::abs(pr.pixel.x() - px.x()) < 1e-9);
    CHECK(std::abs(pr.pixel.y() - px.y()) < 1e-9);
    CHECK(pr.depth == doctest::Approx(d));
  }
}

TEST_CASE("gt_correspondence under the identity pose is the identity grid") {
  Intrinsics K(80, 80, 16, 12);
  DepthMap depth = constant_depth(24, 32, 2.5);
  RigidPose identity;
  CorrespondenceField field =
      gt_correspondence(depth, depth, K, K, identity, 0.05);
  for (int i = 0; i < 24; ++i)
    for (int j = 0; j < 32; ++j) {
      REQUIRE(field.is_valid(i, j));
      CHECK(field.x(i, j) == doctest::Approx(j).epsilon(1e-12));
      CHECK(field.y(i, j) == doctest::Approx(i).epsilon(1e-12));
    }
}

TEST_CASE("gt_correspondence stereo pair has uniform disparity fx*b/d") {
  const double fx = 100.0, baseline = 0.2, d = 2.0;
  Intrinsics K(fx, fx, 32, 16);
  DepthMap depth = constant_depth(32, 64, d);
  RigidPose pose(Eigen::Matrix3d::Identity(),
                 Eigen::Vector3d(-baseline, 0, 0));
  // X2 = X1 - b: the support camera sits at +b along x, disparity is -fx*b/d.
  CorrespondenceField field = gt_correspondence(depth, depth, K, K, pose, 0.05);
  double disparity = fx * baseline / d;
  int n_valid = 0;
  for (int i = 0; i < 32; ++i)
    for (int j = 0; j < 64; ++j) {
      if (!field.is_valid(i, j)) continue;
      ++n_valid;
      CHECK(field.x(i, j) == doctest::Approx(j - disparity).epsilon(1e-12));
      CHECK(field.y(i, j) == doctest::Approx(i).epsilon(1e-12));
    }
  CHECK(n_valid == 32 * (64 - 10));  // 10 px disparity leaves the frame
}

TEST_CASE("gt_correspondence occlusion agrees with an analytic ray cast") {
  // Fronto plane z = 3 and a slanted plane; camera 2 shifted along +x.
  SceneSpec spec;
  spec.height = 64;
  spec.width = 64;
  spec.channels = 1;
  spec.intrinsics = Intrinsics(80, 80, 32, 32);
  PlaneSpec fronto;
  fronto.normal = Eigen::Vector3d(0, 0, 1);
  fronto.offset = 3.0;
  PlaneSpec slanted;
  slanted.normal = Eigen::Vector3d(-0.6, 0, 1).normalized();
  slanted.offset = 2.3;
  spec.planes = {fronto, slanted};
  spec.world_to_camera.emplace_back();  // identity
  spec.world_to_camera.emplace_back(Eigen::Matrix3d::Identity(),
                                    Eigen::Vector3d(-0.4, 0, 0));
  std::vector<SceneView> views = synth_scene(spec);
  RigidPose pose = relative_pose(views[0], views[1]);
  CorrespondenceField field =
      gt_correspondence(views[0].depth, views[1].depth, spec.intrinsics,
                        spec.intrinsics, pose, 0.02);

  // Independent visibility oracle: re-cast the ray of the projected pixel in
  // view 2 and ask whether the source point is the nearest hit.
  auto analytic_depth2 = [&](const Eigen::Vector3d& ray) {
    Eigen::Vector3d origin(0.4, 0, 0);
    double best = std::numeric_limits<double>::infinity();
    for (const PlaneSpec& plane : spec.planes) {
      double denom = plane.normal.dot(ray);
      if (std::abs(denom) < 1e-15) continue;
      double s = (plane.offset - plane.normal.dot(origin)) / denom;
      if (s > 0 && s < best) best = s;
    }
    return best;
  };
  // Seam between the planes as seen by camera 2 (equal depths), used to
  // skip pixels whose bilinear depth lookup straddles the discontinuity.
  double off2 = slanted.offset - slanted.normal.dot(Eigen::Vector3d(0.4, 0, 0));
  double u_seam =
      (off2 / fronto.offset - slanted.normal.z()) / slanted.normal.x();
  double x_seam = 32 + 80 * u_seam;

  int checked = 0;
  for (int i = 0; i < 64; ++i)
    for (int j = 0; j < 64; ++j) {
      if (!views[0].depth.is_valid(i, j)) continue;
      Eigen::Vector3d X1 =
          backproject({double(j), double(i)}, views[0].depth.at(i, j),
                      spec.intrinsics);
      Eigen::Vector3d X2 = pose.apply(X1);
      if (X2.z() <= 0) continue;
      Projection q = project(X2, spec.intrinsics);
      if (q.pixel.x() < 1 || q.pixel.x() > 62 || q.pixel.y() < 1 ||
          q.pixel.y() > 62)
        continue;
      if (std::abs(q.pixel.x() - x_seam) < 3.0) continue;
      Eigen::Vector3d ray2((q.pixel.x() - 32) / 80.0, (q.pixel.y() - 32) / 80.0,
                           1.0);
      double visible_depth = analytic_depth2(ray2);
      bool visible = std::abs(X2.z() - visible_depth) / X2.z() < 0.02;
      CHECK(field.is_valid(i, j) == visible);
      ++checked;
    }
  CHECK(checked > 2000);
  // The pose produces genuine occlusion on the fronto plane.
  int occluded = 0;
  for (int i = 0; i < 64; ++i)
    for (int j = 0; j < 64; ++j)
      if (views[0].depth.is_valid(i, j) && !field.is_valid(i, j)) ++occluded;
  CHECK(occluded > 50);
}

TEST_CASE("gt_correspondence is inverse-consistent against the plane") {
  // Continuous backward map evaluated analytically at each forward target:
  // the scene plane gives the exact support-view depth at subpixel points.
  SceneSpec spec;
  spec.height = 48;
  spec.width = 48;
  spec.channels = 1;
  spec.intrinsics = Intrinsics(70, 70, 24, 24);
  PlaneSpec plane;
  plane.normal = Eigen::Vector3d(0.15, -0.1, 1).normalized();
  plane.offset = 2.5;
  spec.planes = {plane};
  spec.world_to_camera.emplace_back();
  spec.world_to_camera.emplace_back(rot_y(0.03), Eigen::Vector3d(-0.1, 0.05, 0.02));
  std::vector<SceneView> views = synth_scene(spec);
  RigidPose fwd_pose = relative_pose(views[0], views[1]);
  CorrespondenceField fwd =
      gt_correspondence(views[0].depth, views[1].depth, spec.intrinsics,
                        spec.intrinsics, fwd_pose, 0.05);
  // plane in the support camera frame
  Eigen::Vector3d n2 = fwd_pose.R * plane.normal;
  double off2 = plane.offset + n2.dot(fwd_pose.t);
  RigidPose bwd_pose = fwd_pose.inverse();
  int checked = 0;
  for (int i = 0; i < 48; ++i)
    for (int j = 0; j < 48; ++j) {
      if (!fwd.is_valid(i, j)) continue;
      Eigen::Vector2d q(fwd.x(i, j), fwd.y(i, j));
      double d2 = oracle::plane_depth(n2, off2, q, spec.intrinsics);
      Eigen::Vector3d back = bwd_pose.apply(backproject(q, d2, spec.intrinsics));
      Eigen::Vector2d p = project(back, spec.intrinsics).pixel;
      CHECK(std::abs(p.x() - j) < 1e-6);
      CHECK(std::abs(p.y() - i) < 1e-6);
      ++checked;
    }
  CHECK(checked > 1000);
}

TEST_CASE("gt_correspondence discrete fields compose exactly for affine flow") {
  // A fronto-parallel plane under pure translation has an affine flow, so
  // the bilinear field lookup is exact and the round trip closes.
  Intrinsics K(100, 100, 32, 16);
  DepthMap depth = constant_depth(32, 64, 2.0);
  RigidPose fwd_pose(Eigen::Matrix3d::Identity(), Eigen::Vector3d(-0.1, 0.04, 0));
  CorrespondenceField fwd =
      gt_correspondence(depth, depth, K, K, fwd_pose, 0.05);
  CorrespondenceField bwd =
      gt_correspondence(depth, depth, K, K, fwd_pose.inverse(), 0.05);
  int checked = 0;
  for (int i = 0; i < 32; ++i)
    for (int j = 0; j < 64; ++j) {
      if (!fwd.is_valid(i, j)) continue;
      auto back = field_sample(bwd, fwd.x(i, j), fwd.y(i, j));
      if (!back) continue;
      CHECK(std::abs(back->x() - j) < 1e-6);
      CHECK(std::abs(back->y() - i) < 1e-6);
      ++checked;
    }
  CHECK(checked > 500);
}

TEST_CASE("normals_from_depth on a fronto-parallel plane") {
  Intrinsics K(90, 110, 16, 16);
  DepthMap depth = constant_depth(32, 32, 4.0);
  NormalMap normals = normals_from_depth(depth, K);
  for (int i = 1; i < 31; ++i)
    for (int j = 1; j < 31; ++j) {
      REQUIRE(normals.is_valid(i, j));
      size_t b = 3 * normals.index(i, j);
      CHECK(normals.normal[b] == doctest::Approx(0.0).epsilon(1e-12));
      CHECK(normals.normal[b + 1] == doctest::Approx(0.0).epsilon(1e-12));
      CHECK(normals.normal[b + 2] == doctest::Approx(-1.0));
    }
  // boundary rows/cols invalid
  for (int j = 0; j < 32; ++j) {
    CHECK_FALSE(normals.is_valid(0, j));
    CHECK_FALSE(normals.is_valid(31, j));
  }
}

TEST_CASE("normals_from_depth recovers a slanted plane") {
  Intrinsics K(100, 100, 24, 24);
  Eigen::Vector3d n = Eigen::Vector3d(0.3, -0.2, 1.0).normalized();
  double off = 2.0;
  DepthMap depth(48, 48);
  for (int i = 0; i < 48; ++i)
    for (int j = 0; j < 48; ++j)
      depth.set(i, j, oracle::plane_depth(n, off, {double(j), double(i)}, K));
  NormalMap normals = normals_from_depth(depth, K);
  Eigen::Vector3d facing = -n;  // camera-facing orientation
  for (int i = 1; i < 47; ++i)
    for (int j = 1; j < 47; ++j) {
      REQUIRE(normals.is_valid(i, j));
      size_t b = 3 * normals.index(i, j);
      Eigen::Vector3d got(normals.normal[b], normals.normal[b + 1],
                          normals.normal[b + 2]);
      CHECK(got.norm() == doctest::Approx(1.0).epsilon(1e-9));
      double angle = std::acos(std::clamp(got.dot(facing), -1.0, 1.0));
      CHECK(angle < 1e-3);
      // camera-facing: normal . viewing ray < 0
      Eigen::Vector3d ray = backproject({double(j), double(i)}, depth.at(i, j), K);
      CHECK(got.dot(ray) < 0.0);
    }
}

TEST_CASE("normals_from_depth invalidates the 4-neighborhood of a hole") {
  Intrinsics K(50, 50, 8, 8);
  DepthMap depth = constant_depth(16, 16, 1.0);
  depth.invalidate(8, 8);
  NormalMap normals = normals_from_depth(depth, K);
  CHECK_FALSE(normals.is_valid(8, 8));
  CHECK_FALSE(normals.is_valid(7, 8));
  CHECK_FALSE(normals.is_valid(9, 8));
  CHECK_FALSE(normals.is_valid(8, 7));
  CHECK_FALSE(normals.is_valid(8, 9));
  CHECK(normals.is_valid(7, 7));
  CHECK(normals.is_valid(6, 8));
}

TEST_CASE("normals_from_depth requires at least 3x3") {
  Intrinsics K(50, 50, 1, 1);
  CHECK_THROWS_AS(normals_from_depth(constant_depth(2, 5, 1.0), K), Error);
}

TEST_CASE("overlap_ratio self-pair is one, disjoint views are zero") {
  Intrinsics K(80, 80, 16, 12);
  DepthMap depth = constant_depth(24, 32, 2.0);
  RigidPose identity;
  CHECK(overlap_ratio(depth, depth, K, K, identity, 0.05) == 1.0);
  RigidPose far(Eigen::Matrix3d::Identity(), Eigen::Vector3d(100.0, 0, 0));
  CHECK(overlap_ratio(depth, depth, K, K, far, 0.05) == 0.0);
}

TEST_CASE("overlap_ratio of a half-frame shift is about one half") {
  const double fx = 100.0, d = 2.0;
  const int w = 64;
  Intrinsics K(fx, fx, 32, 16);
  DepthMap depth = constant_depth(32, w, d);
  double baseline = (w / 2.0) * d / fx;  // disparity = half the frame width
  RigidPose pose(Eigen::Matrix3d::Identity(), Eigen::Vector3d(-baseline, 0, 0));
  double ratio = overlap_ratio(depth, depth, K, K, pose, 0.05);
  CHECK(ratio == doctest::Approx(0.5).epsilon(1.0 / w));
}

TEST_CASE("overlap_ratio with no valid source pixels is an error") {
  Intrinsics K(80, 80, 16, 12);
  DepthMap empty(8, 8);
  DepthMap full = constant_depth(8, 8, 1.0);
  CHECK_THROWS_AS(overlap_ratio(empty, full, K, K, RigidPose{}, 0.05), Error);
}

TEST_CASE("intrinsics and pose validation") {
  CHECK_THROWS_AS(Intrinsics(0.0, 1.0, 0, 0), Error);
  CHECK_THROWS_AS(Intrinsics(1.0, -2.0, 0, 0), Error);
  Eigen::Matrix3d skewed = Eigen::Matrix3d::Identity();
  skewed(0, 1) = 0.5;
  CHECK_THROWS_AS(Intrinsics::from_matrix(skewed), Error);
  Eigen::Matrix3d not_rot = Eigen::Matrix3d::Identity() * 2.0;
  CHECK_THROWS_AS(RigidPose(not_rot, Eigen::Vector3d::Zero()), Error);
  Eigen::Matrix3d reflect = Eigen::Matrix3d::Identity();
  reflect(2, 2) = -1.0;
  CHECK_THROWS_AS(RigidPose(reflect, Eigen::Vector3d::Zero()), Error);
}

}  // TEST_SUITE
