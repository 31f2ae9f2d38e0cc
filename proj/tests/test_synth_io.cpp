#include <doctest.h>

#include <Eigen/Geometry>
#include <filesystem>
#include <fstream>
#include <map>

#include "core/io.hpp"
#include "core/rng.hpp"
#include "core/synth.hpp"

using namespace gm;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("geomatch_test_" + name);
}

SceneSpec basic_spec() {
  SceneSpec spec;
  spec.height = 32;
  spec.width = 40;
  spec.channels = 3;
  spec.intrinsics = Intrinsics(60, 60, 20, 16);
  PlaneSpec plane;
  plane.normal = Eigen::Vector3d(0, 0, 1);
  plane.offset = 2.0;
  plane.texture_seed = 5;
  spec.planes = {plane};
  spec.world_to_camera.emplace_back();
  return spec;
}

}  // namespace

TEST_SUITE("synth_io") {

TEST_CASE("synth_scene single fronto plane has constant depth") {
  std::vector<SceneView> views = synth_scene(basic_spec());
  REQUIRE(views.size() == 1);
  const SceneView& v = views[0];
  for (int i = 0; i < 32; ++i)
    for (int j = 0; j < 40; ++j) {
      REQUIRE(v.depth.is_valid(i, j));
      CHECK(v.depth.at(i, j) == doctest::Approx(2.0).epsilon(1e-12));
      CHECK(v.plane_id[v.depth.index(i, j)] == 0);
      REQUIRE(v.normals.is_valid(i, j));
      CHECK(v.normals.normal[3 * v.normals.index(i, j) + 2] ==
            doctest::Approx(-1.0));
    }
  for (double px : v.image.values) {
    CHECK(px >= 0.0);
    CHECK(px <= 255.0);
  }
}

TEST_CASE("synth_scene is deterministic") {
  SceneSpec spec = basic_spec();
  spec.planes[0].normal = Eigen::Vector3d(0.2, -0.1, 1).normalized();
  std::vector<SceneView> a = synth_scene(spec);
  std::vector<SceneView> b = synth_scene(spec);
  CHECK(a[0].image.values == b[0].image.values);
  CHECK(a[0].depth.depth == b[0].depth.depth);
  CHECK(a[0].normals.normal == b[0].normals.normal);
}

TEST_CASE("synth_scene two-plane seam sits on the analytic intersection") {
  SceneSpec spec = basic_spec();
  spec.height = 64;
  spec.width = 64;
  spec.intrinsics = Intrinsics(80, 80, 32, 32);
  PlaneSpec fronto;
  fronto.normal = Eigen::Vector3d(0, 0, 1);
  fronto.offset = 3.0;
  PlaneSpec slanted;
  slanted.normal = Eigen::Vector3d(-0.6, 0, 1).normalized();
  slanted.offset = 2.3;
  spec.planes = {fronto, slanted};
  std::vector<SceneView> views = synth_scene(spec);
  // Equal-depth direction: off_B / (nz - |nx| u) = off_A.
  double u_star = (slanted.offset / fronto.offset - slanted.normal.z()) /
                  slanted.normal.x();
  double x_star = 32 + 80 * u_star;
  for (int i = 0; i < 64; ++i) {
    int first_fronto = -1;
    for (int j = 0; j < 64; ++j)
      if (views[0].plane_id[views[0].depth.index(i, j)] == 0) {
        first_fronto = j;
        break;
      }
    REQUIRE(first_fronto >= 0);
    CHECK(std::abs(first_fronto - x_star) <= 1.0);
  }
}

TEST_CASE("synth_scene rejects invisible planes and empty views") {
  SceneSpec spec = basic_spec();
  spec.planes[0].offset = -2.0;  // behind the camera
  CHECK_THROWS_AS(synth_scene(spec), Error);

  SceneSpec two = basic_spec();
  PlaneSpec hidden;
  hidden.normal = Eigen::Vector3d(0, 0, 1);
  hidden.offset = -5.0;  // never hit while the near plane covers everything
  two.planes.push_back(hidden);
  CHECK_THROWS_AS(synth_scene(two), Error);
}

TEST_CASE("relative_pose composes world poses") {
  SceneSpec spec = basic_spec();
  Eigen::Matrix3d r =
      Eigen::AngleAxisd(0.2, Eigen::Vector3d::UnitY()).toRotationMatrix();
  spec.world_to_camera.emplace_back(r, Eigen::Vector3d(0.3, -0.1, 0.05));
  std::vector<SceneView> views = synth_scene(spec);
  RigidPose rel = relative_pose(views[0], views[1]);
  // view0 camera frame == world frame, so the relative pose is view1's pose
  CHECK((rel.R - r).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((rel.t - Eigen::Vector3d(0.3, -0.1, 0.05)).norm() < 1e-12);
  // consistency: rel(a->b) composed with rel(b->a) is the identity
  RigidPose back = relative_pose(views[1], views[0]);
  RigidPose loop = back.compose(rel);
  CHECK((loop.R - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(loop.t.norm() < 1e-12);
}

TEST_CASE("sample_pairs keeps the identical pair and rejects empty ranges") {
  SceneSpec spec = basic_spec();
  spec.height = 24;
  spec.width = 24;
  spec.intrinsics = Intrinsics(40, 40, 12, 12);
  spec.world_to_camera.push_back(spec.world_to_camera[0]);  // identical view
  std::vector<SceneView> views = synth_scene(spec);
  auto pairs = sample_pairs(views, 0.9, 1.0, 4, 0.05, 77);
  REQUIRE(pairs.size() == 4);
  for (auto [a, b] : pairs) {
    CHECK(a == 0);
    CHECK(b == 1);
  }
  // [0, 0] excludes every positive-overlap pair
  CHECK_THROWS_AS(sample_pairs(views, 0.0, 0.0, 4, 0.05, 77), Error);
}

TEST_CASE("sample_pairs proportionality across two qualifying pairs") {
  SceneSpec spec = basic_spec();
  spec.height = 24;
  spec.width = 24;
  spec.intrinsics = Intrinsics(40, 40, 12, 12);
  double quarter_shift = 6.0 * 2.0 / 40.0;
  spec.world_to_camera.emplace_back(Eigen::Matrix3d::Identity(),
                                    Eigen::Vector3d(-quarter_shift, 0, 0));
  std::vector<SceneView> views = synth_scene(spec);
  // pairs: (0,1) overlap ~0.75 — duplicate third view for a second pair
  spec.world_to_camera.push_back(spec.world_to_camera[0]);
  views = synth_scene(spec);
  // qualifying: (0,1) ~0.75, (0,2) = 1.0, (1,2) ~0.75
  auto draws = sample_pairs(views, 0.1, 1.0, 20000, 0.05, 321);
  double w01 = overlap_ratio(views[0].depth, views[1].depth,
                             views[0].intrinsics, views[1].intrinsics,
                             relative_pose(views[0], views[1]), 0.05);
  std::map<std::pair<int, int>, int> hist;
  for (auto pr : draws) hist[pr]++;
  double total_w = w01 + 1.0 + w01;
  CHECK(hist[{0, 1}] / 20000.0 ==
        doctest::Approx(w01 / total_w).epsilon(0.08));
  CHECK(hist[{0, 2}] / 20000.0 == doctest::Approx(1.0 / total_w).epsilon(0.08));
}

TEST_CASE("patch_features flattens patches and normalizes") {
  DenseMap img(8, 8, 2);
  Pcg32 rng(9);
  for (double& v : img.values) v = 255 * rng.next_double();
  FeatureVolume f = patch_features(img, 4, false);
  CHECK(f.h == 2);
  CHECK(f.w == 2);
  CHECK(f.dim == 32);
  CHECK(f.cell(0)[0] == img.at(0, 0, 0));
  CHECK(f.cell(3)[0] == img.at(4, 4, 0));
  FeatureVolume fn = patch_features(img, 4, true);
  for (int c = 0; c < 4; ++c) {
    double norm = 0;
    for (int d = 0; d < 32; ++d) norm += fn.cell(c)[d] * fn.cell(c)[d];
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-9));
  }
  CHECK_THROWS_AS(patch_features(img, 3, true), Error);
}

TEST_CASE("dense map and mask files round-trip") {
  DenseMap map(5, 7, 3);
  Pcg32 rng(15);
  for (double& v : map.values) v = 255 * rng.next_double();
  auto path = temp_path("map.bin");
  save_densemap(path.string(), map);
  DenseMap loaded = load_densemap(path.string());
  CHECK(loaded.height == 5);
  CHECK(loaded.channels == 3);
  for (size_t i = 0; i < map.values.size(); ++i)
    CHECK(loaded.values[i] == doctest::Approx(map.values[i]).epsilon(1e-6));

  BoolMask mask(5, 7, false);
  mask.set(2, 3, true);
  auto mpath = temp_path("mask.bin");
  save_mask(mpath.string(), mask);
  BoolMask mloaded = load_mask(mpath.string());
  CHECK(mloaded.bits == mask.bits);
  std::filesystem::remove(path);
  std::filesystem::remove(mpath);
}

TEST_CASE("field, depth, volume, intrinsics, pose round-trips") {
  CorrespondenceField field(4, 6);
  Pcg32 rng(25);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 6; ++j)
      field.set(i, j, 10 * rng.next_double(), 10 * rng.next_double(),
                rng.next_below(2) == 1);
  auto fpath = temp_path("field.bin");
  save_field(fpath.string(), field);
  CorrespondenceField floaded = load_field(fpath.string());
  CHECK(floaded.valid == field.valid);
  for (size_t i = 0; i < field.coords.size(); ++i)
    CHECK(floaded.coords[i] == doctest::Approx(field.coords[i]).epsilon(1e-6));

  DepthMap depth(4, 6);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 6; ++j)
      if ((i + j) % 3) depth.set(i, j, 1.0 + rng.next_double());
  auto dpath = temp_path("depth.bin");
  save_depth(dpath.string(), depth);
  DepthMap dloaded = load_depth(dpath.string());
  CHECK(dloaded.valid == depth.valid);

  CorrelationVolume vol;
  vol.n = 4;
  vol.gamma = 0.1;
  vol.matrix.resize(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int k = 0; k < 4; ++k) vol.matrix(i, k) = rng.next_normal();
  auto vpath = temp_path("volume.bin");
  save_volume(vpath.string(), vol);
  CorrelationVolume vloaded = load_volume(vpath.string());
  CHECK(vloaded.n == 4);
  CHECK(vloaded.gamma == doctest::Approx(0.1));
  CHECK((vloaded.matrix - vol.matrix).cwiseAbs().maxCoeff() < 1e-6);

  Intrinsics K(123.5, 110.25, 32.5, 24.125);
  Intrinsics kloaded = intrinsics_from_json(intrinsics_to_json(K));
  CHECK(kloaded.fx == K.fx);
  CHECK(kloaded.cy == K.cy);

  Eigen::Matrix3d r =
      Eigen::AngleAxisd(0.3, Eigen::Vector3d(1, 2, 3).normalized())
          .toRotationMatrix();
  RigidPose pose(r, {0.1, -0.2, 0.3});
  RigidPose ploaded = pose_from_json(pose_to_json(pose));
  CHECK((ploaded.R - pose.R).cwiseAbs().maxCoeff() < 1e-15);

  std::filesystem::remove(fpath);
  std::filesystem::remove(fpath.string() + ".valid");
  std::filesystem::remove(dpath);
  std::filesystem::remove(dpath.string() + ".valid");
  std::filesystem::remove(vpath);
}

TEST_CASE("indicator JSON round-trip") {
  BoolMask valid(8, 8, true);
  CoplanarSampleSet samples = sample_coplanar_set(valid, 6, 55);
  IndicatorMatrix ind;
  ind.k = 6;
  ind.k1 = 0.002;
  ind.k2 = 0.02;
  ind.k3 = 1.0;
  ind.seed = 55;
  ind.bits.assign(36, 0);
  for (int i = 0; i < 36; i += 5) ind.bits[i] = 1;
  auto [ind2, samples2] = indicator_from_json(indicator_to_json(ind, samples));
  CHECK(ind2.bits == ind.bits);
  CHECK(ind2.k1 == ind.k1);
  CHECK(samples2.anchors == samples.anchors);
  CHECK(samples2.candidates == samples.candidates);
}

TEST_CASE("truncated files fail cleanly at every cut point") {
  DenseMap map(4, 5, 2);
  Pcg32 rng(77);
  for (double& v : map.values) v = rng.next_double();
  auto path = temp_path("whole.bin");
  save_densemap(path.string(), map);
  std::ifstream in(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  in.close();
  auto cut_path = temp_path("cut.bin");
  for (size_t cut = 0; cut + 1 < bytes.size(); cut += 7) {
    {
      std::ofstream out(cut_path, std::ios::binary | std::ios::trunc);
      out.write(bytes.data(), static_cast<std::streamsize>(cut));
    }
    CHECK_THROWS_AS(load_densemap(cut_path.string()), Error);
  }
  std::filesystem::remove(path);
  std::filesystem::remove(cut_path);
}

TEST_CASE("corrupted headers are reported as IO errors") {
  auto path = temp_path("corrupt.bin");
  {
    std::ofstream out(path);
    out << "{\"height\": \"nope\"}\n";
  }
  CHECK_THROWS_AS(load_densemap(path.string()), Error);
  {
    std::ofstream out(path);
    out << "not json at all\n";
  }
  CHECK_THROWS_AS(load_densemap(path.string()), Error);
  {
    std::ofstream out(path);
    out << "{\"height\":2,\"width\":2,\"channels\":1,\"dtype\":\"f32\"}\n";
    out << "xx";  // truncated payload
  }
  CHECK_THROWS_AS(load_densemap(path.string()), Error);
  std::filesystem::remove(path);
}

}  // TEST_SUITE
