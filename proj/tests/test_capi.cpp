#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "geomatch/geomatch.h"

namespace {

const char* kSceneSpec = R"({
  "height": 48, "width": 48, "channels": 1,
  "intrinsics": {"fx": 70, "fy": 70, "cx": 24, "cy": 24},
  "planes": [
    {"normal": [0, 0, 1], "offset": 4.0, "texture_seed": 3, "texture_scale": 2.0},
    {"normal": [0, 1, 0], "offset": 1.0, "texture_seed": 9, "texture_scale": 2.0}
  ],
  "views": [
    {"R": [1,0,0, 0,1,0, 0,0,1], "t": [0, 0, 0]},
    {"R": [1,0,0, 0,1,0, 0,0,1], "t": [-0.1, 0.02, -0.05]}
  ]
})";

}  // namespace

TEST_SUITE("capi") {

TEST_CASE("version and error reporting") {
  CHECK(std::strlen(gm_version()) > 0);
  gm_map* map = nullptr;
  CHECK(gm_map_create(-1, 4, 1, nullptr, &map) == GM_ERR_INVALID_ARGUMENT);
  CHECK(std::strlen(gm_last_error_message()) > 0);
  CHECK(gm_map_create(2, 2, 1, nullptr, &map) == GM_OK);
  CHECK(std::strlen(gm_last_error_message()) == 0);
  gm_map_free(map);
}

TEST_CASE("map round trip through the filesystem") {
  std::vector<double> values = {1, 2, 3, 4, 5, 6};
  gm_map* map = nullptr;
  REQUIRE(gm_map_create(2, 3, 1, values.data(), &map) == GM_OK);
  auto path = std::filesystem::temp_directory_path() / "gm_capi_map.bin";
  REQUIRE(gm_map_save(map, path.string().c_str()) == GM_OK);
  gm_map* loaded = nullptr;
  REQUIRE(gm_map_load(path.string().c_str(), &loaded) == GM_OK);
  int h = 0, w = 0, c = 0;
  CHECK(gm_map_dims(loaded, &h, &w, &c) == GM_OK);
  CHECK(h == 2);
  CHECK(w == 3);
  CHECK(c == 1);
  const double* data = gm_map_data(loaded);
  for (int i = 0; i < 6; ++i) CHECK(data[i] == values[i]);
  gm_map_free(map);
  gm_map_free(loaded);
  std::filesystem::remove(path);
  CHECK(gm_map_load("/nonexistent/path.bin", &loaded) == GM_ERR_IO);
}

TEST_CASE("bilinear sampling through the C surface") {
  std::vector<double> values = {0, 2, 4, 6};
  gm_map* map = nullptr;
  REQUIRE(gm_map_create(2, 2, 1, values.data(), &map) == GM_OK);
  double coords[4] = {0.5, 0.0, -1.0, 0.0};
  double out[2];
  uint8_t valid[2];
  REQUIRE(gm_bilinear_sample(map, coords, 2, GM_BORDER_INVALID, out, valid) ==
          GM_OK);
  CHECK(out[0] == doctest::Approx(1.0));
  CHECK(valid[0] == 1);
  CHECK(valid[1] == 0);
  gm_map_free(map);
}

TEST_CASE("synthetic scene pipeline: gt, indicator, losses, pose") {
  gm_scene* scene = nullptr;
  REQUIRE(gm_synth_scene(kSceneSpec, &scene) == GM_OK);
  int views = 0;
  CHECK(gm_scene_view_count(scene, &views) == GM_OK);
  CHECK(views == 2);

  gm_depth* d1 = nullptr;
  gm_depth* d2 = nullptr;
  gm_normals* n1 = nullptr;
  REQUIRE(gm_scene_depth(scene, 0, &d1) == GM_OK);
  REQUIRE(gm_scene_depth(scene, 1, &d2) == GM_OK);
  REQUIRE(gm_scene_normals(scene, 0, &n1) == GM_OK);
  gm_intrinsics K1, K2;
  REQUIRE(gm_scene_intrinsics(scene, 0, &K1) == GM_OK);
  REQUIRE(gm_scene_intrinsics(scene, 1, &K2) == GM_OK);
  gm_pose rel;
  REQUIRE(gm_scene_relative_pose(scene, 0, 1, &rel) == GM_OK);

  gm_field* gt = nullptr;
  REQUIRE(gm_gt_correspondence(d1, d2, &K1, &K2, &rel, 0.05, &gt) == GM_OK);
  double overlap = 0.0;
  REQUIRE(gm_overlap_ratio(d1, d2, &K1, &K2, &rel, 0.05, &overlap) == GM_OK);
  CHECK(overlap > 0.5);

  // joint validity mask
  gm_mask* dv = nullptr;
  gm_mask* nv = nullptr;
  gm_mask* gv = nullptr;
  REQUIRE(gm_depth_valid_mask(d1, &dv) == GM_OK);
  REQUIRE(gm_normals_valid_mask(n1, &nv) == GM_OK);
  REQUIRE(gm_field_valid_mask(gt, &gv) == GM_OK);
  std::vector<uint8_t> joint(48 * 48);
  for (size_t i = 0; i < joint.size(); ++i)
    joint[i] = gm_mask_data(dv)[i] && gm_mask_data(nv)[i] && gm_mask_data(gv)[i];
  gm_mask* valid = nullptr;
  REQUIRE(gm_mask_create(48, 48, joint.data(), &valid) == GM_OK);

  gm_indicator* indicator = nullptr;
  REQUIRE(gm_coplanar_indicator(valid, 30, 7, n1, d1, gt, &K1, &K2, &rel,
                                0.002, 0.02, 1.0, 0, &indicator) == GM_OK);
  int k = 0;
  CHECK(gm_indicator_size(indicator, &k) == GM_OK);
  CHECK(k == 30);
  size_t positives = 0;
  CHECK(gm_indicator_count(indicator, &positives) == GM_OK);
  CHECK(positives > 0);

  auto ipath = std::filesystem::temp_directory_path() / "gm_capi_ind.json";
  REQUIRE(gm_indicator_save(indicator, ipath.string().c_str()) == GM_OK);
  gm_indicator* reloaded = nullptr;
  REQUIRE(gm_indicator_load(ipath.string().c_str(), &reloaded) == GM_OK);
  size_t positives2 = 0;
  CHECK(gm_indicator_count(reloaded, &positives2) == GM_OK);
  CHECK(positives2 == positives);
  std::filesystem::remove(ipath);

  // losses of the perfect prediction
  double l_r = -1.0;
  REQUIRE(gm_refinement_loss(gt, gt, gv, &l_r) == GM_OK);
  CHECK(l_r == 0.0);
  double l_h = -1.0;
  REQUIRE(gm_homography_loss(gt, gt, indicator, &l_h) == GM_OK);
  CHECK(l_h == 0.0);

  // dense matches from the ground-truth field drive pose recovery
  std::vector<gm_match> matches;
  for (int i = 2; i < 46; i += 3)
    for (int j = 2; j < 46; j += 3) {
      double x = 0.0, y = 0.0;
      int v = 0;
      REQUIRE(gm_field_get(gt, i, j, &x, &y, &v) == GM_OK);
      if (!v) continue;
      matches.push_back({double(j), double(i), x, y});
    }
  REQUIRE(matches.size() >= 20);
  double E[9];
  int n_inliers = 0;
  REQUIRE(gm_estimate_essential(matches.data(),
                                static_cast<int>(matches.size()), &K1, &K2,
                                1.0, 500, 11, GM_SOLVER_FIVE_POINT, E, nullptr,
                                &n_inliers) == GM_OK);
  CHECK(n_inliers == static_cast<int>(matches.size()));
  gm_pose estimated;
  REQUIRE(gm_decompose_essential(E, matches.data(),
                                 static_cast<int>(matches.size()), &K1, &K2,
                                 &estimated, nullptr, nullptr) == GM_OK);
  gm_pose_error err;
  REQUIRE(gm_compute_pose_error(&estimated, &rel, &err) == GM_OK);
  CHECK(err.max_deg < 1e-3);

  gm_mask_free(dv);
  gm_mask_free(nv);
  gm_mask_free(gv);
  gm_mask_free(valid);
  gm_indicator_free(indicator);
  gm_indicator_free(reloaded);
  gm_field_free(gt);
  gm_normals_free(n1);
  gm_depth_free(d1);
  gm_depth_free(d2);
  gm_scene_free(scene);
}

TEST_CASE("patch mask and metrics via the C surface") {
  gm_patchmask* pm = nullptr;
  REQUIRE(gm_gen_mask(256, 256, 32, 0.75, 5, &pm) == GM_OK);
  int count = 0;
  REQUIRE(gm_patchmask_selected(pm, nullptr, &count) == GM_OK);
  CHECK(count == 48);
  gm_mask* at2 = nullptr;
  REQUIRE(gm_mask_at_scale(pm, 2, &at2) == GM_OK);
  size_t set = 0;
  CHECK(gm_mask_count(at2, &set) == GM_OK);
  CHECK(set == 48u * 16u * 16u);
  gm_mask_free(at2);
  gm_patchmask_free(pm);

  double errors[3] = {2.0, 4.0, 12.0};
  double thresholds[2] = {5.0, 10.0};
  double auc_out[2], map_out[2];
  REQUIRE(gm_auc(errors, 3, thresholds, 2, auc_out) == GM_OK);
  CHECK(auc_out[0] == doctest::Approx(4.0 / 15.0));
  CHECK(auc_out[1] == doctest::Approx(7.0 / 15.0));
  REQUIRE(gm_map_at(errors, 3, thresholds, 2, map_out) == GM_OK);
  CHECK(map_out[0] == doctest::Approx(2.0 / 3.0));

  double r4[4] = {1, 1, 1, 1}, c4[4] = {0, 0, 0, 0}, h4[4] = {0, 0, 0, 0};
  double total = 0.0;
  REQUIRE(gm_total_loss(r4, c4, 2.0, h4, 1.0, 0.7, 0.05, &total) == GM_OK);
  CHECK(total == doctest::Approx(1.0 + 1.4));
}

TEST_CASE("grid, matching, and MIM families through the C surface") {
  // identity warp keeps the image, fb consistency accepts the round trip
  std::vector<double> img_values(8 * 8, 0.0);
  for (size_t i = 0; i < img_values.size(); ++i)
    img_values[i] = double((i * 2654435761u) % 255u);
  gm_map* img = nullptr;
  REQUIRE(gm_map_create(8, 8, 1, img_values.data(), &img) == GM_OK);
  gm_field* id = nullptr;
  REQUIRE(gm_field_identity(8, 8, &id) == GM_OK);
  gm_conf* conf = nullptr;
  std::vector<double> ones(64, 1.0);
  REQUIRE(gm_conf_create(8, 8, ones.data(), &conf) == GM_OK);
  int ch = 0, cw = 0;
  CHECK(gm_conf_dims(conf, &ch, &cw) == GM_OK);
  CHECK(gm_conf_data(conf)[0] == 1.0);
  gm_map* warped = nullptr;
  REQUIRE(gm_warp_reconstruct(img, id, conf, 0.5, &warped) == GM_OK);
  for (int i = 0; i < 64; ++i) CHECK(gm_map_data(warped)[i] == img_values[i]);
  gm_mask* fb = nullptr;
  REQUIRE(gm_fb_consistency(id, id, 0.0, &fb) == GM_OK);
  size_t fb_count = 0;
  CHECK(gm_mask_count(fb, &fb_count) == GM_OK);
  CHECK(fb_count == 64);
  gm_mask_free(fb);

  // recon metrics of identical images over a full mask
  gm_map* big = nullptr;
  std::vector<double> big_values(16 * 16, 128.0);
  REQUIRE(gm_map_create(16, 16, 1, big_values.data(), &big) == GM_OK);
  gm_mask* full = nullptr;
  std::vector<uint8_t> set(256, 1);
  REQUIRE(gm_mask_create(16, 16, set.data(), &full) == GM_OK);
  double l1 = -1, ssim = -1;
  REQUIRE(gm_recon_metrics(big, big, full, &l1, &ssim) == GM_OK);
  CHECK(l1 == 0.0);
  CHECK(ssim == 0.0);
  gm_map_free(big);
  gm_mask_free(full);

  // matching pipeline: features, volume round trip, softmax, embedding
  gm_features* f = nullptr;
  REQUIRE(gm_patch_features(img, 4, 1, &f) == GM_OK);
  gm_volume* vol = nullptr;
  REQUIRE(gm_correlation_volume(f, f, 0.01, &vol) == GM_OK);
  auto vpath = std::filesystem::temp_directory_path() / "gm_capi_vol.bin";
  REQUIRE(gm_volume_save(vol, vpath.string().c_str()) == GM_OK);
  gm_volume* vol2 = nullptr;
  REQUIRE(gm_volume_load(vpath.string().c_str(), &vol2) == GM_OK);
  int vn = 0;
  CHECK(gm_volume_size(vol2, &vn) == GM_OK);
  CHECK(vn == 4);
  std::filesystem::remove(vpath);
  gm_map* soft = nullptr;
  REQUIRE(gm_softmax_rows(vol, &soft) == GM_OK);
  gm_field* coarse = nullptr;
  REQUIRE(gm_coarse_match(soft, 2, 2, 4, &coarse) == GM_OK);
  gm_map* dual = nullptr;
  REQUIRE(gm_dual_softmax(vol, &dual) == GM_OK);
  gm_matchlist* list = nullptr;
  REQUIRE(gm_mutual_nn_matches(dual, 0.0, &list) == GM_OK);
  int n_matches = 0;
  CHECK(gm_matchlist_size(list, &n_matches) == GM_OK);
  CHECK(n_matches == 4);  // identical images match cell to cell
  gm_map* emb = nullptr;
  REQUIRE(gm_positional_embedding(2, 2, 4, 16, &emb) == GM_OK);
  gm_map* agg = nullptr;
  REQUIRE(gm_aggregate_embedded(soft, emb, &agg) == GM_OK);
  int ah = 0, aw = 0, ac = 0;
  CHECK(gm_map_dims(agg, &ah, &aw, &ac) == GM_OK);
  CHECK(ah == 4);
  CHECK(aw == 16);

  // MIM masking and loss
  gm_patchmask* pm = nullptr;
  REQUIRE(gm_gen_mask(8, 8, 4, 0.5, 3, &pm) == GM_OK);
  gm_mask* w = nullptr;
  REQUIRE(gm_mask_at_scale(pm, 1, &w) == GM_OK);
  double token = 0.0;
  gm_map* masked = nullptr;
  REQUIRE(gm_apply_mask(img, w, &token, &masked) == GM_OK);
  const gm_map* recons[1] = {img};
  double loss = -1.0;
  REQUIRE(gm_mim_loss(recons, recons, 1, img, img, w, w, GM_MIM_MASKED_ONLY,
                      &loss) == GM_OK);
  CHECK(loss == 0.0);
  const gm_map* masked_recons[1] = {masked};
  REQUIRE(gm_mim_loss(masked_recons, masked_recons, 1, img, img, w, w,
                      GM_MIM_MASKED_ONLY, &loss) == GM_OK);
  CHECK(loss > 0.0);

  // PCK of the identity prediction
  gm_mask* all = nullptr;
  std::vector<uint8_t> bits(64, 1);
  REQUIRE(gm_mask_create(8, 8, bits.data(), &all) == GM_OK);
  double deltas[2] = {1.0, 3.0};
  double pck[2];
  REQUIRE(gm_pck(id, id, all, deltas, 2, pck) == GM_OK);
  CHECK(pck[0] == 1.0);
  CHECK(pck[1] == 1.0);

  gm_mask_free(all);
  gm_map_free(masked);
  gm_mask_free(w);
  gm_patchmask_free(pm);
  gm_map_free(agg);
  gm_map_free(emb);
  gm_matchlist_free(list);
  gm_map_free(dual);
  gm_field_free(coarse);
  gm_map_free(soft);
  gm_volume_free(vol);
  gm_volume_free(vol2);
  gm_features_free(f);
  gm_map_free(warped);
  gm_conf_free(conf);
  gm_field_free(id);
  gm_map_free(img);
}

TEST_CASE("scene accessors expose plane ids and per-view data") {
  gm_scene* scene = nullptr;
  REQUIRE(gm_synth_scene(kSceneSpec, &scene) == GM_OK);
  gm_map* image = nullptr;
  REQUIRE(gm_scene_image(scene, 0, &image) == GM_OK);
  int h = 0, w = 0, c = 0;
  CHECK(gm_map_dims(image, &h, &w, &c) == GM_OK);
  CHECK(h == 48);
  std::vector<int32_t> ids(48 * 48);
  REQUIRE(gm_scene_plane_ids(scene, 0, ids.data()) == GM_OK);
  bool saw_wall = false, saw_floor = false;
  for (int32_t id : ids) {
    saw_wall = saw_wall || id == 0;
    saw_floor = saw_floor || id == 1;
  }
  CHECK(saw_wall);
  CHECK(saw_floor);
  gm_depth* depth = nullptr;
  REQUIRE(gm_scene_depth(scene, 0, &depth) == GM_OK);
  double d = 0.0;
  int valid = 0;
  REQUIRE(gm_depth_get(depth, 24, 24, &d, &valid) == GM_OK);
  CHECK(valid == 1);
  CHECK(d > 0.0);
  gm_normals* normals = nullptr;
  REQUIRE(gm_scene_normals(scene, 0, &normals) == GM_OK);
  double n[3];
  REQUIRE(gm_normals_get(normals, 24, 24, n, &valid) == GM_OK);
  CHECK(valid == 1);
  CHECK(std::abs(n[0] * n[0] + n[1] * n[1] + n[2] * n[2] - 1.0) < 1e-9);
  int pairs[2] = {-1, -1};
  REQUIRE(gm_sample_pairs(scene, 0.1, 1.0, 1, 0.05, 9, pairs) == GM_OK);
  CHECK(pairs[0] == 0);
  CHECK(pairs[1] == 1);
  gm_normals_free(normals);
  gm_depth_free(depth);
  gm_map_free(image);
  gm_scene_free(scene);
}

TEST_CASE("homography estimation through the C surface") {
  std::vector<gm_match> matches;
  double H[9] = {1.0, 0.02, 3.0, -0.01, 1.0, -2.0, 0.0, 0.0, 1.0};
  for (int i = 0; i < 30; ++i) {
    double x = (13 * i) % 640, y = (29 * i) % 480;
    double u = H[0] * x + H[1] * y + H[2];
    double v = H[3] * x + H[4] * y + H[5];
    matches.push_back(gm_match{x, y, u, v});
  }
  double est[9];
  int n_inliers = 0;
  REQUIRE(gm_estimate_homography(matches.data(),
                                 static_cast<int>(matches.size()), 1.0, 500, 3,
                                 est, nullptr, &n_inliers) == GM_OK);
  CHECK(n_inliers == 30);
  double corner = -1.0;
  REQUIRE(gm_homography_corner_error(est, H, 480, 640, &corner) == GM_OK);
  CHECK(corner < 1e-6);
}

TEST_CASE("status codes map the error taxonomy") {
  gm_patchmask* pm = nullptr;
  CHECK(gm_gen_mask(100, 256, 32, 0.75, 0, &pm) == GM_ERR_INVALID_ARGUMENT);
  double out[2];
  CHECK(gm_planar_project(nullptr, 0, 0, out) == GM_ERR_INVALID_ARGUMENT);
  double singular[9] = {1, 0, 0, 0, 1, 0, 0, 0, 0};
  double corner = 0.0;
  CHECK(gm_homography_corner_error(singular, singular, 10, 10, &corner) ==
        GM_ERR_DEGENERATE);
  gm_match too_few[3] = {};
  gm_intrinsics K{100, 100, 0, 0};
  double E[9];
  CHECK(gm_estimate_essential(too_few, 3, &K, &K, 1.0, 10, 0,
                              GM_SOLVER_FIVE_POINT, E, nullptr, nullptr) ==
        GM_ERR_INSUFFICIENT_DATA);
  // out-of-range supervision indices must be rejected, not dereferenced
  gm_map* dual = nullptr;
  std::vector<double> half(4, 0.5);
  REQUIRE(gm_map_create(2, 2, 1, half.data(), &dual) == GM_OK);
  int bad_pos[2] = {5, 0};
  double loss = 0.0;
  CHECK(gm_global_matching_loss(dual, bad_pos, 1, nullptr, 0, 1e-6, &loss) ==
        GM_ERR_INVALID_ARGUMENT);
  gm_map_free(dual);
}

}  // TEST_SUITE
