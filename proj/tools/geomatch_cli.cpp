// geomatch command-line front end. Everything goes through the public C API
// in geomatch/geomatch.h; this file only parses arguments, shuttles files,
// and formats JSON.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "geomatch/geomatch.h"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

[[noreturn]] void fail(const std::string& stage, const std::string& detail) {
  std::cerr << "error [" << stage << "]: " << detail << "\n";
  std::exit(1);
}

void check(gm_status status, const std::string& stage) {
  if (status != GM_OK) fail(stage, gm_last_error_message());
}

template <typename T, void (*Free)(T*)>
struct Handle {
  T* ptr = nullptr;
  Handle() = default;
  explicit Handle(T* p) : ptr(p) {}
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  Handle(Handle&& o) noexcept : ptr(o.ptr) { o.ptr = nullptr; }
  Handle& operator=(Handle&& o) noexcept {
    std::swap(ptr, o.ptr);
    return *this;
  }
  ~Handle() {
    if (ptr) Free(ptr);
  }
  T** out() { return &ptr; }
  operator T*() const { return ptr; }
};

using MapH = Handle<gm_map, gm_map_free>;
using MaskH = Handle<gm_mask, gm_mask_free>;
using ConfH = Handle<gm_conf, gm_conf_free>;
using FieldH = Handle<gm_field, gm_field_free>;
using DepthH = Handle<gm_depth, gm_depth_free>;
using NormalsH = Handle<gm_normals, gm_normals_free>;
using FeaturesH = Handle<gm_features, gm_features_free>;
using VolumeH = Handle<gm_volume, gm_volume_free>;
using IndicatorH = Handle<gm_indicator, gm_indicator_free>;
using PatchMaskH = Handle<gm_patchmask, gm_patchmask_free>;
using MatchListH = Handle<gm_matchlist, gm_matchlist_free>;
using SceneH = Handle<gm_scene, gm_scene_free>;

json load_json_file(const std::string& path, const std::string& stage) {
  std::ifstream in(path);
  if (!in.good()) fail(stage, "cannot open " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) fail(stage, "malformed JSON in " + path);
  return j;
}

void write_json_file(const std::string& path, const json& j,
                     const std::string& stage) {
  std::ofstream out(path, std::ios::trunc);
  if (!out.good()) fail(stage, "cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
  if (!out.good()) fail(stage, "write failed: " + path);
}

// ---------------------------------------------------------------------------
// Config handling. One JSON tree with defaults from the published constants;
// unknown keys are rejected so typos cannot silently fall back to defaults.
// ---------------------------------------------------------------------------

json default_config() {
  return json{
      {"seed", 1},
      {"workspace", "."},
      {"scene",
       {{"height", 96},
        {"width", 128},
        {"channels", 3},
        {"intrinsics", {{"fx", 120.0}, {"fy", 120.0}, {"cx", 64.0}, {"cy", 48.0}}},
        {"planes", json::array()},
        {"views", json::array()}}},
      {"pairs",
       {{"overlap_lo", 0.2}, {"overlap_hi", 1.0}, {"count", 2},
        {"explicit", json::array()}}},
      {"matching",
       {{"scale", 8},
        {"gamma", 0.1},
        {"d_pos", 128},
        {"normalize", true},
        {"score_min", 0.0}}},
      {"coplanar",
       {{"K", 600}, {"k1", 0.002}, {"k2", 0.02}, {"k3", 1.0}, {"literal", false}}},
      {"mask", {{"patch", 32}, {"ratio", 0.75}}},
      {"losses", {{"eps", 1e-6}, {"w_c", 1.0}, {"w_g", 0.7}, {"w_h", 0.05}}},
      {"eval",
       {{"rel_depth_tau", 0.05},
        {"inlier_px", 1.0},
        {"max_iters", 2000},
        {"solver", "five_point"},
        {"auc_thresholds", {5.0, 10.0, 20.0}},
        {"pck_thresholds", {1.0, 3.0, 5.0}},
        {"corner_thresholds", {3.0, 5.0, 10.0}}}}};
}

void reject_unknown_keys(const json& user, const json& schema,
                         const std::string& prefix) {
  if (!user.is_object()) return;
  for (auto it = user.begin(); it != user.end(); ++it) {
    if (!schema.contains(it.key()))
      fail("config", "unknown key: " + prefix + it.key());
    // planes/views/explicit are free-form arrays of records
    if (schema[it.key()].is_object())
      reject_unknown_keys(it.value(), schema[it.key()], prefix + it.key() + ".");
  }
}

json merge_config(const json& base, const json& user) {
  json out = base;
  for (auto it = user.begin(); it != user.end(); ++it) {
    if (out.contains(it.key()) && out[it.key()].is_object() &&
        it.value().is_object()) {
      out[it.key()] = merge_config(out[it.key()], it.value());
    } else {
      out[it.key()] = it.value();
    }
  }
  return out;
}

json load_config(const std::string& path, std::optional<uint64_t> seed_flag) {
  json config = default_config();
  if (!path.empty()) {
    json user = load_json_file(path, "config");
    reject_unknown_keys(user, config, "");
    config = merge_config(config, user);
  }
  if (const char* env = std::getenv("GEOMATCH_SEED")) {
    config["seed"] = static_cast<uint64_t>(std::strtoull(env, nullptr, 10));
  }
  if (seed_flag) config["seed"] = *seed_flag;  // flags beat config and env
  return config;
}

std::string scene_spec_string(const json& config) {
  json scene = config["scene"];
  if (scene["planes"].empty()) {
    // Default two-plane scene: textured wall plus a slanted side plane.
    scene["planes"] = json::array(
        {{{"normal", {0.0, 0.0, 1.0}},
          {"offset", 3.0},
          {"texture_seed", 11},
          {"texture_scale", 10.0}},
         {{"normal", {-0.45, 0.1, 1.0}},
          {"offset", 2.4},
          {"texture_seed", 29},
          {"texture_scale", 10.0}}});
  }
  if (scene["views"].empty()) {
    scene["views"] = json::array(
        {{{"R", {1, 0, 0, 0, 1, 0, 0, 0, 1}}, {"t", {0, 0, 0}}},
         {{"R", {1, 0, 0, 0, 1, 0, 0, 0, 1}}, {"t", {-0.12, 0.02, -0.04}}}});
  }
  return scene.dump();
}

gm_intrinsics intrinsics_from_array(const json& arr, const std::string& stage) {
  if (!arr.is_array() || arr.size() != 9)
    fail(stage, "intrinsics need 9 row-major entries");
  gm_intrinsics K;
  K.fx = arr[0].get<double>();
  K.fy = arr[4].get<double>();
  K.cx = arr[2].get<double>();
  K.cy = arr[5].get<double>();
  return K;
}

gm_pose pose_from_json(const json& r, const json& t, const std::string& stage) {
  if (!r.is_array() || r.size() != 9 || !t.is_array() || t.size() != 3)
    fail(stage, "pose needs R[9] and t[3]");
  gm_pose pose;
  for (int i = 0; i < 9; ++i) pose.R[i] = r[i].get<double>();
  for (int i = 0; i < 3; ++i) pose.t[i] = t[i].get<double>();
  return pose;
}

// Scene directory layout written by `synth` and read by the other commands.
struct SceneFiles {
  std::string image, depth, normals, intrinsics, pose;
};

SceneFiles scene_files(const std::string& dir, int view) {
  std::string stem = dir + "/view" + std::to_string(view);
  return {stem + "_image.bin", stem + "_depth.bin", stem + "_normals.bin",
          stem + "_K.json", stem + "_pose.json"};
}

struct LoadedView {
  MapH image;
  DepthH depth;
  NormalsH normals;
  gm_intrinsics K;
  gm_pose world_pose;
};

LoadedView load_view(const std::string& dir, int view,
                     const std::string& stage) {
  SceneFiles files = scene_files(dir, view);
  LoadedView v;
  check(gm_map_load(files.image.c_str(), v.image.out()), stage);
  check(gm_depth_load(files.depth.c_str(), v.depth.out()), stage);
  check(gm_normals_load(files.normals.c_str(), v.normals.out()), stage);
  json kj = load_json_file(files.intrinsics, stage);
  v.K = intrinsics_from_array(kj["K"], stage);
  json pj = load_json_file(files.pose, stage);
  v.world_pose = pose_from_json(pj["R"], pj["t"], stage);
  return v;
}

gm_pose relative_pose_between(const gm_pose& a, const gm_pose& b) {
  // X_b = R_b R_a^T X_a + (t_b - R_b R_a^T t_a)
  gm_pose rel;
  double r[9], rt[3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double acc = 0.0;
      for (int k = 0; k < 3; ++k) acc += b.R[i * 3 + k] * a.R[j * 3 + k];
      r[i * 3 + j] = acc;
    }
  for (int i = 0; i < 3; ++i) {
    double acc = 0.0;
    for (int k = 0; k < 3; ++k) acc += r[i * 3 + k] * a.t[k];
    rt[i] = b.t[i] - acc;
  }
  for (int i = 0; i < 9; ++i) rel.R[i] = r[i];
  for (int i = 0; i < 3; ++i) rel.t[i] = rt[i];
  return rel;
}

// ---------------------------------------------------------------------------
// Shared pipeline pieces
// ---------------------------------------------------------------------------

struct MatchingOutput {
  VolumeH volume;
  MapH dual;
  std::vector<gm_match> matches;        // cell-center pixel matches
  std::vector<int> best_cell;           // per source cell, argmax support cell
  std::vector<double> best_score;       // its dual-softmax score
  int coarse_h = 0, coarse_w = 0, scale = 0;
};

MatchingOutput run_matching(const gm_map* image1, const gm_map* image2,
                            const json& mcfg, const std::string& stage) {
  MatchingOutput out;
  out.scale = mcfg["scale"].get<int>();
  int h = 0, w = 0, c = 0;
  check(gm_map_dims(image1, &h, &w, &c), stage);
  out.coarse_h = h / out.scale;
  out.coarse_w = w / out.scale;

  FeaturesH f1, f2;
  int normalize = mcfg["normalize"].get<bool>() ? 1 : 0;
  check(gm_patch_features(image1, out.scale, normalize, f1.out()), stage);
  check(gm_patch_features(image2, out.scale, normalize, f2.out()), stage);
  check(gm_correlation_volume(f1, f2, mcfg["gamma"].get<double>(),
                              out.volume.out()),
        stage);
  check(gm_dual_softmax(out.volume, out.dual.out()), stage);

  MatchListH list;
  check(gm_mutual_nn_matches(out.dual, mcfg["score_min"].get<double>(),
                             list.out()),
        stage);
  int n_matches = 0;
  check(gm_matchlist_size(list, &n_matches), stage);
  auto cell_center = [&](int cell, double* x, double* y) {
    int r = cell / out.coarse_w, cc = cell % out.coarse_w;
    *x = out.scale * (cc + 0.5);
    *y = out.scale * (r + 0.5);
  };
  for (int q = 0; q < n_matches; ++q) {
    int i = 0, k = 0;
    double score = 0.0;
    check(gm_matchlist_get(list, q, &i, &k, &score), stage);
    gm_match m;
    cell_center(i, &m.x1, &m.y1);
    cell_center(k, &m.x2, &m.y2);
    out.matches.push_back(m);
  }

  // per-cell argmax transfer for the dense prediction
  const double* dual = gm_map_data(out.dual);
  int n = out.coarse_h * out.coarse_w;
  out.best_cell.resize(n);
  out.best_score.resize(n);
  for (int i = 0; i < n; ++i) {
    int best = 0;
    for (int k = 1; k < n; ++k)
      if (dual[i * n + k] > dual[i * n + best]) best = k;
    out.best_cell[i] = best;
    out.best_score[i] = dual[i * n + best];
  }
  return out;
}

// Dense piecewise prediction: each pixel inherits its cell's argmax cell
// plus the pixel offset from the cell center.
FieldH dense_prediction(const MatchingOutput& m, int height, int width,
                        const std::string& stage) {
  FieldH field;
  check(gm_field_create(height, width, field.out()), stage);
  for (int i = 0; i < height; ++i)
    for (int j = 0; j < width; ++j) {
      int cell = (i / m.scale) * m.coarse_w + (j / m.scale);
      int target = m.best_cell[cell];
      double cx = m.scale * ((cell % m.coarse_w) + 0.5);
      double cy = m.scale * ((cell / m.coarse_w) + 0.5);
      double tx = m.scale * ((target % m.coarse_w) + 0.5);
      double ty = m.scale * ((target / m.coarse_w) + 0.5);
      check(gm_field_set(field.ptr, i, j, tx + (j - cx), ty + (i - cy), 1),
            stage);
    }
  return field;
}

ConfH dense_confidence(const MatchingOutput& m, int height, int width,
                       const std::string& stage) {
  std::vector<double> values(static_cast<size_t>(height) * width);
  for (int i = 0; i < height; ++i)
    for (int j = 0; j < width; ++j) {
      int cell = (i / m.scale) * m.coarse_w + (j / m.scale);
      double s = m.best_score[cell];
      values[static_cast<size_t>(i) * width + j] = std::clamp(s, 0.0, 1.0);
    }
  ConfH conf;
  check(gm_conf_create(height, width, values.data(), conf.out()), stage);
  return conf;
}

json losses_record(const gm_field* pred, const gm_conf* conf,
                   const gm_field* gt, const gm_depth* depth,
                   const gm_indicator* indicator, const gm_map* dual,
                   int coarse_h, int coarse_w, int scale, const json& lcfg,
                   const std::string& stage) {
  double eps = lcfg["eps"].get<double>();
  json out;

  MaskH p_plus;
  check(gm_field_valid_mask(gt, p_plus.out()), stage);
  double l_r = 0.0;
  check(gm_refinement_loss(pred, gt, p_plus, &l_r), stage);
  out["refinement"] = l_r;

  double l_h = 0.0;
  check(gm_homography_loss(pred, gt, indicator, &l_h), stage);
  out["homography"] = l_h;

  // P- defaults to valid-depth pixels without a valid correspondence.
  int h = 0, w = 0;
  check(gm_field_dims(gt, &h, &w), stage);
  MaskH depth_valid;
  check(gm_depth_valid_mask(depth, depth_valid.out()), stage);
  std::vector<uint8_t> minus_bits(static_cast<size_t>(h) * w, 0);
  const uint8_t* plus_bits = gm_mask_data(p_plus);
  const uint8_t* dv = gm_mask_data(depth_valid);
  size_t n_minus = 0;
  for (size_t i = 0; i < minus_bits.size(); ++i) {
    minus_bits[i] = (dv[i] && !plus_bits[i]) ? 1 : 0;
    n_minus += minus_bits[i];
  }
  if (n_minus > 0) {
    MaskH p_minus;
    check(gm_mask_create(h, w, minus_bits.data(), p_minus.out()), stage);
    double l_c = 0.0;
    check(gm_confidence_loss(conf, p_plus, p_minus, eps, &l_c), stage);
    out["confidence"] = l_c;
  } else {
    out["confidence"] = nullptr;  // every pixel has a valid correspondence
  }

  int n_pos = 0, n_neg = 0;
  check(gm_make_match_supervision(gt, coarse_h, coarse_w, scale, nullptr,
                                  &n_pos, nullptr, &n_neg),
        stage);
  if (n_pos + n_neg > 0) {
    std::vector<int> pos(2 * std::max(n_pos, 1)), neg(2 * std::max(n_neg, 1));
    int cap_pos = n_pos, cap_neg = n_neg;
    check(gm_make_match_supervision(gt, coarse_h, coarse_w, scale, pos.data(),
                                    &cap_pos, neg.data(), &cap_neg),
          stage);
    double l_g = 0.0;
    check(gm_global_matching_loss(dual, pos.data(), n_pos, neg.data(), n_neg,
                                  eps, &l_g),
          stage);
    out["global"] = l_g;
  } else {
    out["global"] = nullptr;
  }

  // Single-scale pipeline: the per-scale sums of the total reuse the one
  // computed value at every scale.
  if (!out["confidence"].is_null() && !out["global"].is_null()) {
    double r4[4], c4[4], h4[4];
    for (int s = 0; s < 4; ++s) {
      r4[s] = l_r;
      c4[s] = out["confidence"].get<double>();
      h4[s] = l_h;
    }
    double total = 0.0;
    check(gm_total_loss(r4, c4, out["global"].get<double>(), h4,
                        lcfg["w_c"].get<double>(), lcfg["w_g"].get<double>(),
                        lcfg["w_h"].get<double>(), &total),
          stage);
    out["total"] = total;
  } else {
    out["total"] = nullptr;
  }
  return out;
}

json thresholds_json(const std::vector<double>& thresholds,
                     const std::vector<double>& values) {
  json out = json::object();
  for (size_t i = 0; i < thresholds.size(); ++i) {
    json key = thresholds[i];
    out[key.dump()] = values[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int cmd_synth(const std::string& config_path, std::optional<uint64_t> seed,
              const std::string& out_dir) {
  const std::string stage = "synth";
  json config = load_config(config_path, seed);
  SceneH scene;
  check(gm_synth_scene(scene_spec_string(config).c_str(), scene.out()), stage);
  int n_views = 0;
  check(gm_scene_view_count(scene, &n_views), stage);
  fs::create_directories(out_dir);
  for (int v = 0; v < n_views; ++v) {
    SceneFiles files = scene_files(out_dir, v);
    MapH image;
    check(gm_scene_image(scene, v, image.out()), stage);
    check(gm_map_save(image, files.image.c_str()), stage);
    DepthH depth;
    check(gm_scene_depth(scene, v, depth.out()), stage);
    check(gm_depth_save(depth, files.depth.c_str()), stage);
    NormalsH normals;
    check(gm_scene_normals(scene, v, normals.out()), stage);
    check(gm_normals_save(normals, files.normals.c_str()), stage);
    gm_intrinsics K;
    check(gm_scene_intrinsics(scene, v, &K), stage);
    json kj = {{"K", {K.fx, 0.0, K.cx, 0.0, K.fy, K.cy, 0.0, 0.0, 1.0}}};
    write_json_file(files.intrinsics, kj, stage);
    gm_pose pose;
    check(gm_scene_world_pose(scene, v, &pose), stage);
    json pj = {{"R", json::array()}, {"t", json::array()}};
    for (int i = 0; i < 9; ++i) pj["R"].push_back(pose.R[i]);
    for (int i = 0; i < 3; ++i) pj["t"].push_back(pose.t[i]);
    write_json_file(files.pose, pj, stage);
  }
  json manifest = {{"views", n_views}, {"config", config}};
  write_json_file(out_dir + "/scene.json", manifest, stage);
  std::cout << json{{"views", n_views}, {"dir", out_dir}}.dump() << "\n";
  return 0;
}

int cmd_gen_gt(const std::string& scene_dir, int src, int dst, double tau,
               const std::string& out_path) {
  const std::string stage = "gen-gt";
  LoadedView a = load_view(scene_dir, src, stage);
  LoadedView b = load_view(scene_dir, dst, stage);
  gm_pose rel = relative_pose_between(a.world_pose, b.world_pose);
  FieldH field;
  check(gm_gt_correspondence(a.depth, b.depth, &a.K, &b.K, &rel, tau,
                             field.out()),
        stage);
  check(gm_field_save(field, out_path.c_str()), stage);
  double overlap = 0.0;
  check(gm_overlap_ratio(a.depth, b.depth, &a.K, &b.K, &rel, tau, &overlap),
        stage);
  std::cout << json{{"field", out_path}, {"overlap", overlap}}.dump() << "\n";
  return 0;
}

int cmd_coplanar(const std::string& scene_dir, int src, int dst,
                 const std::string& config_path, std::optional<uint64_t> seed,
                 const std::string& out_path) {
  const std::string stage = "coplanar";
  json config = load_config(config_path, seed);
  const json& ccfg = config["coplanar"];
  double tau = config["eval"]["rel_depth_tau"].get<double>();

  LoadedView a = load_view(scene_dir, src, stage);
  LoadedView b = load_view(scene_dir, dst, stage);
  gm_pose rel = relative_pose_between(a.world_pose, b.world_pose);
  FieldH gt;
  check(gm_gt_correspondence(a.depth, b.depth, &a.K, &b.K, &rel, tau, gt.out()),
        stage);

  // valid = depth, normals, and correspondence all valid
  int h = 0, w = 0;
  check(gm_field_dims(gt, &h, &w), stage);
  MaskH depth_valid, normal_valid, gt_valid;
  check(gm_depth_valid_mask(a.depth, depth_valid.out()), stage);
  check(gm_normals_valid_mask(a.normals, normal_valid.out()), stage);
  check(gm_field_valid_mask(gt, gt_valid.out()), stage);
  std::vector<uint8_t> joint(static_cast<size_t>(h) * w, 0);
  const uint8_t* dv = gm_mask_data(depth_valid);
  const uint8_t* nv = gm_mask_data(normal_valid);
  const uint8_t* gv = gm_mask_data(gt_valid);
  for (size_t i = 0; i < joint.size(); ++i) joint[i] = dv[i] && nv[i] && gv[i];
  MaskH valid;
  check(gm_mask_create(h, w, joint.data(), valid.out()), stage);

  IndicatorH indicator;
  check(gm_coplanar_indicator(
            valid, ccfg["K"].get<int>(), config["seed"].get<uint64_t>(),
            a.normals, a.depth, gt, &a.K, &b.K, &rel, ccfg["k1"].get<double>(),
            ccfg["k2"].get<double>(), ccfg["k3"].get<double>(),
            ccfg["literal"].get<bool>() ? 1 : 0, indicator.out()),
        stage);
  check(gm_indicator_save(indicator, out_path.c_str()), stage);
  size_t positives = 0;
  check(gm_indicator_count(indicator, &positives), stage);
  std::cout << json{{"indicator", out_path},
                    {"K", ccfg["K"].get<int>()},
                    {"positives", positives}}
                   .dump()
            << "\n";
  return 0;
}

int cmd_match(const std::string& image1, const std::string& image2,
              const std::string& config_path, const std::string& out_path,
              const std::string& volume_path) {
  const std::string stage = "match";
  json config = load_config(config_path, std::nullopt);
  MapH img1, img2;
  check(gm_map_load(image1.c_str(), img1.out()), stage);
  check(gm_map_load(image2.c_str(), img2.out()), stage);
  MatchingOutput m = run_matching(img1, img2, config["matching"], stage);
  if (!volume_path.empty())
    check(gm_volume_save(m.volume, volume_path.c_str()), stage);
  json matches = json::array();
  for (const gm_match& match : m.matches)
    matches.push_back({match.x1, match.y1, match.x2, match.y2});
  json out = {{"coarse_h", m.coarse_h},
              {"coarse_w", m.coarse_w},
              {"scale", m.scale},
              {"gamma", config["matching"]["gamma"]},
              {"matches", matches}};
  write_json_file(out_path, out, stage);
  std::cout << json{{"matches", matches.size()}, {"out", out_path}}.dump()
            << "\n";
  return 0;
}

int cmd_mask(int height, int width, const std::string& config_path,
             std::optional<uint64_t> seed, const std::string& out_path) {
  const std::string stage = "mask";
  json config = load_config(config_path, seed);
  int patch = config["mask"]["patch"].get<int>();
  double ratio = config["mask"]["ratio"].get<double>();
  uint64_t used_seed = config["seed"].get<uint64_t>();
  PatchMaskH mask;
  check(gm_gen_mask(height, width, patch, ratio, used_seed, mask.out()), stage);
  MaskH full;
  check(gm_mask_at_scale(mask, 1, full.out()), stage);
  check(gm_mask_save(full, out_path.c_str()), stage);
  int count = 0;
  check(gm_patchmask_selected(mask, nullptr, &count), stage);
  std::vector<int> cells(count);
  check(gm_patchmask_selected(mask, cells.data(), &count), stage);
  json sidecar = {{"seed", used_seed},
                  {"ratio", ratio},
                  {"patch", patch},
                  {"selected", cells}};
  write_json_file(out_path + ".json", sidecar, stage);
  std::cout << json{{"mask", out_path}, {"selected", count}}.dump() << "\n";
  return 0;
}

int cmd_losses(const std::string& pred_path, const std::string& gt_path,
               const std::string& indicator_path, const std::string& conf_path,
               const std::string& pminus_path, const std::string& volume_path,
               const std::string& config_path, const std::string& out_path) {
  const std::string stage = "losses";
  json config = load_config(config_path, std::nullopt);
  FieldH pred, gt;
  check(gm_field_load(pred_path.c_str(), pred.out()), stage);
  check(gm_field_load(gt_path.c_str(), gt.out()), stage);
  IndicatorH indicator;
  check(gm_indicator_load(indicator_path.c_str(), indicator.out()), stage);
  int h = 0, w = 0;
  check(gm_field_dims(gt, &h, &w), stage);

  double eps = config["losses"]["eps"].get<double>();
  json out;
  MaskH p_plus;
  check(gm_field_valid_mask(gt, p_plus.out()), stage);
  double l_r = 0.0;
  check(gm_refinement_loss(pred, gt, p_plus, &l_r), stage);
  out["refinement"] = l_r;
  double l_h = 0.0;
  check(gm_homography_loss(pred, gt, indicator, &l_h), stage);
  out["homography"] = l_h;

  if (!conf_path.empty()) {
    ConfH conf;
    check(gm_conf_load(conf_path.c_str(), conf.out()), stage);
    MaskH p_minus;
    if (!pminus_path.empty()) {
      check(gm_mask_load(pminus_path.c_str(), p_minus.out()), stage);
    } else {
      // default: complement of P+ over the frame
      const uint8_t* plus_bits = gm_mask_data(p_plus);
      std::vector<uint8_t> minus(static_cast<size_t>(h) * w, 0);
      for (size_t i = 0; i < minus.size(); ++i) minus[i] = plus_bits[i] ? 0 : 1;
      check(gm_mask_create(h, w, minus.data(), p_minus.out()), stage);
    }
    size_t n_minus = 0;
    check(gm_mask_count(p_minus, &n_minus), stage);
    if (n_minus > 0) {
      double l_c = 0.0;
      check(gm_confidence_loss(conf, p_plus, p_minus, eps, &l_c), stage);
      out["confidence"] = l_c;
    } else {
      out["confidence"] = nullptr;
    }
  } else {
    out["confidence"] = nullptr;
  }

  if (!volume_path.empty()) {
    VolumeH volume;
    check(gm_volume_load(volume_path.c_str(), volume.out()), stage);
    MapH dual;
    check(gm_dual_softmax(volume, dual.out()), stage);
    int scale = config["matching"]["scale"].get<int>();
    int ch = h / scale, cw = w / scale;
    int n_pos = 0, n_neg = 0;
    check(gm_make_match_supervision(gt, ch, cw, scale, nullptr, &n_pos, nullptr,
                                    &n_neg),
          stage);
    if (n_pos + n_neg > 0) {
      std::vector<int> pos(2 * std::max(n_pos, 1)),
          neg(2 * std::max(n_neg, 1));
      int cap_pos = n_pos, cap_neg = n_neg;
      check(gm_make_match_supervision(gt, ch, cw, scale, pos.data(), &cap_pos,
                                      neg.data(), &cap_neg),
            stage);
      double l_g = 0.0;
      check(gm_global_matching_loss(dual, pos.data(), n_pos, neg.data(), n_neg,
                                    eps, &l_g),
            stage);
      out["global"] = l_g;
    } else {
      out["global"] = nullptr;
    }
  } else {
    out["global"] = nullptr;
  }

  if (!out["confidence"].is_null() && !out["global"].is_null()) {
    double r4[4], c4[4], h4[4];
    for (int s = 0; s < 4; ++s) {
      r4[s] = l_r;
      c4[s] = out["confidence"].get<double>();
      h4[s] = l_h;
    }
    double total = 0.0;
    check(gm_total_loss(r4, c4, out["global"].get<double>(), h4,
                        config["losses"]["w_c"].get<double>(),
                        config["losses"]["w_g"].get<double>(),
                        config["losses"]["w_h"].get<double>(), &total),
          stage);
    out["total"] = total;
  } else {
    out["total"] = nullptr;
  }
  write_json_file(out_path, out, stage);
  std::cout << out.dump() << "\n";
  return 0;
}

std::vector<double> json_doubles(const json& arr) {
  std::vector<double> out;
  for (const auto& v : arr) out.push_back(v.get<double>());
  return out;
}

int cmd_eval_pose(const std::string& input_path, const std::string& config_path,
                  std::optional<uint64_t> seed, const std::string& out_path) {
  const std::string stage = "eval-pose";
  json config = load_config(config_path, seed);
  const json& ecfg = config["eval"];
  int solver = ecfg["solver"].get<std::string>() == "eight_point"
                   ? GM_SOLVER_EIGHT_POINT
                   : GM_SOLVER_FIVE_POINT;
  std::ifstream in(input_path);
  if (!in.good()) fail(stage, "cannot open " + input_path);
  std::vector<double> errors;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded())
      fail(stage, "malformed JSONL record at line " + std::to_string(line_no));
    std::vector<gm_match> matches;
    for (const auto& m : rec["matches"])
      matches.push_back({m[0].get<double>(), m[1].get<double>(),
                         m[2].get<double>(), m[3].get<double>()});
    gm_intrinsics K1 = intrinsics_from_array(rec["K1"], stage);
    gm_intrinsics K2 = intrinsics_from_array(rec["K2"], stage);
    gm_pose truth = pose_from_json(rec["gt_R"], rec["gt_t"], stage);

    double E[9];
    double err = 180.0;  // failed estimates count as maximal error
    gm_status status = gm_estimate_essential(
        matches.data(), static_cast<int>(matches.size()), &K1, &K2,
        ecfg["inlier_px"].get<double>(), ecfg["max_iters"].get<int>(),
        config["seed"].get<uint64_t>(), solver, E, nullptr, nullptr);
    if (status == GM_OK) {
      gm_pose estimated;
      status = gm_decompose_essential(E, matches.data(),
                                      static_cast<int>(matches.size()), &K1,
                                      &K2, &estimated, nullptr, nullptr);
      if (status == GM_OK) {
        gm_pose_error pe;
        if (gm_compute_pose_error(&estimated, &truth, &pe) == GM_OK)
          err = pe.max_deg;
      }
    }
    errors.push_back(err);
  }
  if (errors.empty()) fail(stage, "no records in " + input_path);

  std::vector<double> thresholds = json_doubles(ecfg["auc_thresholds"]);
  std::vector<double> auc_values(thresholds.size()),
      map_values(thresholds.size());
  check(gm_auc(errors.data(), static_cast<int>(errors.size()),
               thresholds.data(), static_cast<int>(thresholds.size()),
               auc_values.data()),
        stage);
  check(gm_map_at(errors.data(), static_cast<int>(errors.size()),
                  thresholds.data(), static_cast<int>(thresholds.size()),
                  map_values.data()),
        stage);
  json out = {{"per_pair_errors", errors},
              {"auc", thresholds_json(thresholds, auc_values)},
              {"map", thresholds_json(thresholds, map_values)}};
  write_json_file(out_path, out, stage);
  std::cout << out.dump() << "\n";
  return 0;
}

int cmd_eval_pck(const std::string& pred_path, const std::string& gt_path,
                 const std::string& mask_path, const std::string& config_path,
                 const std::string& out_path) {
  const std::string stage = "eval-pck";
  json config = load_config(config_path, std::nullopt);
  FieldH pred, gt;
  check(gm_field_load(pred_path.c_str(), pred.out()), stage);
  check(gm_field_load(gt_path.c_str(), gt.out()), stage);
  MaskH mask;
  if (mask_path.empty()) {
    check(gm_field_valid_mask(gt, mask.out()), stage);
  } else {
    check(gm_mask_load(mask_path.c_str(), mask.out()), stage);
  }
  std::vector<double> deltas = json_doubles(config["eval"]["pck_thresholds"]);
  std::vector<double> values(deltas.size());
  check(gm_pck(pred, gt, mask, deltas.data(), static_cast<int>(deltas.size()),
               values.data()),
        stage);
  json out = {{"pck", thresholds_json(deltas, values)}};
  write_json_file(out_path, out, stage);
  std::cout << out.dump() << "\n";
  return 0;
}

int cmd_eval_homography(const std::string& input_path,
                        const std::string& config_path,
                        std::optional<uint64_t> seed,
                        const std::string& out_path) {
  const std::string stage = "eval-homography";
  json config = load_config(config_path, seed);
  const json& ecfg = config["eval"];
  std::ifstream in(input_path);
  if (!in.good()) fail(stage, "cannot open " + input_path);
  std::vector<double> errors;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded())
      fail(stage, "malformed JSONL record at line " + std::to_string(line_no));
    std::vector<gm_match> matches;
    for (const auto& m : rec["matches"])
      matches.push_back({m[0].get<double>(), m[1].get<double>(),
                         m[2].get<double>(), m[3].get<double>()});
    double h_gt[9];
    for (int i = 0; i < 9; ++i) h_gt[i] = rec["H_gt"][i].get<double>();
    int image_h = rec["image_h"].get<int>();
    int image_w = rec["image_w"].get<int>();
    double H[9];
    double err = std::numeric_limits<double>::infinity();
    gm_status status = gm_estimate_homography(
        matches.data(), static_cast<int>(matches.size()),
        ecfg["inlier_px"].get<double>(), ecfg["max_iters"].get<int>(),
        config["seed"].get<uint64_t>(), H, nullptr, nullptr);
    if (status == GM_OK) {
      double corner = 0.0;
      if (gm_homography_corner_error(H, h_gt, image_h, image_w, &corner) ==
          GM_OK)
        err = corner;
    }
    errors.push_back(err);
  }
  if (errors.empty()) fail(stage, "no records in " + input_path);
  std::vector<double> thresholds = json_doubles(ecfg["corner_thresholds"]);
  std::vector<double> auc_values(thresholds.size());
  check(gm_auc(errors.data(), static_cast<int>(errors.size()),
               thresholds.data(), static_cast<int>(thresholds.size()),
               auc_values.data()),
        stage);
  json out = {{"per_pair_errors", errors},
              {"auc", thresholds_json(thresholds, auc_values)}};
  write_json_file(out_path, out, stage);
  std::cout << out.dump() << "\n";
  return 0;
}

int cmd_report(const std::string& config_path, std::optional<uint64_t> seed,
               const std::string& out_path) {
  const std::string stage = "report";
  json config = load_config(config_path, seed);
  uint64_t run_seed = config["seed"].get<uint64_t>();
  double tau = config["eval"]["rel_depth_tau"].get<double>();

  SceneH scene;
  check(gm_synth_scene(scene_spec_string(config).c_str(), scene.out()),
        "report/synth");
  int n_views = 0;
  check(gm_scene_view_count(scene, &n_views), "report/synth");

  // Pair selection: explicit list wins, otherwise overlap-weighted draws.
  std::vector<std::pair<int, int>> pairs;
  if (!config["pairs"]["explicit"].empty()) {
    for (const auto& p : config["pairs"]["explicit"])
      pairs.emplace_back(p[0].get<int>(), p[1].get<int>());
  } else {
    int count = config["pairs"]["count"].get<int>();
    std::vector<int> buf(2 * count);
    check(gm_sample_pairs(scene, config["pairs"]["overlap_lo"].get<double>(),
                          config["pairs"]["overlap_hi"].get<double>(), count,
                          tau, run_seed, buf.data()),
          "report/pairs");
    for (int i = 0; i < count; ++i) pairs.emplace_back(buf[2 * i], buf[2 * i + 1]);
  }

  json pair_reports = json::array();
  std::vector<double> pose_errors;
  std::vector<double> pck_sums(
      json_doubles(config["eval"]["pck_thresholds"]).size(), 0.0);

  for (auto [src, dst] : pairs) {
    const std::string pstage =
        "report/pair(" + std::to_string(src) + "," + std::to_string(dst) + ")";
    if (src < 0 || src >= n_views || dst < 0 || dst >= n_views)
      fail(pstage, "view index out of range");
    MapH image1, image2;
    check(gm_scene_image(scene, src, image1.out()), pstage);
    check(gm_scene_image(scene, dst, image2.out()), pstage);
    DepthH depth1, depth2;
    check(gm_scene_depth(scene, src, depth1.out()), pstage);
    check(gm_scene_depth(scene, dst, depth2.out()), pstage);
    NormalsH normals1;
    check(gm_scene_normals(scene, src, normals1.out()), pstage);
    gm_intrinsics K1, K2;
    check(gm_scene_intrinsics(scene, src, &K1), pstage);
    check(gm_scene_intrinsics(scene, dst, &K2), pstage);
    gm_pose rel;
    check(gm_scene_relative_pose(scene, src, dst, &rel), pstage);

    FieldH gt;
    check(gm_gt_correspondence(depth1, depth2, &K1, &K2, &rel, tau, gt.out()),
          pstage);
    double overlap = 0.0;
    check(gm_overlap_ratio(depth1, depth2, &K1, &K2, &rel, tau, &overlap),
          pstage);

    int h = 0, w = 0;
    check(gm_field_dims(gt, &h, &w), pstage);

    // coplanar indicator over jointly valid pixels
    MaskH depth_valid, normal_valid, gt_valid;
    check(gm_depth_valid_mask(depth1, depth_valid.out()), pstage);
    check(gm_normals_valid_mask(normals1, normal_valid.out()), pstage);
    check(gm_field_valid_mask(gt, gt_valid.out()), pstage);
    std::vector<uint8_t> joint(static_cast<size_t>(h) * w, 0);
    const uint8_t* dv = gm_mask_data(depth_valid);
    const uint8_t* nv = gm_mask_data(normal_valid);
    const uint8_t* gv = gm_mask_data(gt_valid);
    for (size_t i = 0; i < joint.size(); ++i)
      joint[i] = dv[i] && nv[i] && gv[i];
    MaskH valid;
    check(gm_mask_create(h, w, joint.data(), valid.out()), pstage);
    const json& ccfg = config["coplanar"];
    IndicatorH indicator;
    check(gm_coplanar_indicator(valid, ccfg["K"].get<int>(), run_seed, normals1,
                                depth1, gt, &K1, &K2, &rel,
                                ccfg["k1"].get<double>(),
                                ccfg["k2"].get<double>(),
                                ccfg["k3"].get<double>(),
                                ccfg["literal"].get<bool>() ? 1 : 0,
                                indicator.out()),
          pstage);
    size_t coplanar_positives = 0;
    check(gm_indicator_count(indicator, &coplanar_positives), pstage);

    // matching and dense prediction
    MatchingOutput matching =
        run_matching(image1, image2, config["matching"], pstage);
    FieldH pred = dense_prediction(matching, h, w, pstage);
    ConfH conf = dense_confidence(matching, h, w, pstage);

    // losses
    json losses = losses_record(pred, conf, gt, depth1, indicator,
                                matching.dual, matching.coarse_h,
                                matching.coarse_w, matching.scale,
                                config["losses"], pstage);

    // PCK over the gt-valid mask
    std::vector<double> deltas = json_doubles(config["eval"]["pck_thresholds"]);
    std::vector<double> pck_values(deltas.size());
    check(gm_pck(pred, gt, gt_valid, deltas.data(),
                 static_cast<int>(deltas.size()), pck_values.data()),
          pstage);
    for (size_t i = 0; i < pck_values.size(); ++i) pck_sums[i] += pck_values[i];

    // two-view pose from the mutual-NN matches
    json pose_report;
    double t_norm = std::sqrt(rel.t[0] * rel.t[0] + rel.t[1] * rel.t[1] +
                              rel.t[2] * rel.t[2]);
    if (t_norm < 1e-12 || matching.matches.size() < 8) {
      pose_report = nullptr;  // no baseline or too few matches to evaluate
    } else {
      double E[9];
      gm_status status = gm_estimate_essential(
          matching.matches.data(), static_cast<int>(matching.matches.size()),
          &K1, &K2, config["eval"]["inlier_px"].get<double>(),
          config["eval"]["max_iters"].get<int>(), run_seed,
          config["eval"]["solver"].get<std::string>() == "eight_point"
              ? GM_SOLVER_EIGHT_POINT
              : GM_SOLVER_FIVE_POINT,
          E, nullptr, nullptr);
      double err = 180.0;
      json detail = nullptr;
      if (status == GM_OK) {
        gm_pose estimated;
        status = gm_decompose_essential(
            E, matching.matches.data(),
            static_cast<int>(matching.matches.size()), &K1, &K2, &estimated,
            nullptr, nullptr);
        if (status == GM_OK) {
          gm_pose_error pe;
          if (gm_compute_pose_error(&estimated, &rel, &pe) == GM_OK) {
            err = pe.max_deg;
            detail = {{"rot_deg", pe.rot_deg},
                      {"trans_deg", pe.trans_deg},
                      {"max_deg", pe.max_deg}};
          }
        }
      }
      pose_errors.push_back(err);
      pose_report = detail.is_null() ? json{{"max_deg", err}} : detail;
    }

    pair_reports.push_back(
        {{"src", src},
         {"dst", dst},
         {"overlap", overlap},
         {"coplanar", {{"K", ccfg["K"]}, {"positives", coplanar_positives}}},
         {"matching", {{"mutual_matches", matching.matches.size()}}},
         {"pck", thresholds_json(deltas, pck_values)},
         {"losses", losses},
         {"pose", pose_report}});
  }

  json summary;
  std::vector<double> deltas = json_doubles(config["eval"]["pck_thresholds"]);
  std::vector<double> mean_pck(pck_sums.size());
  for (size_t i = 0; i < pck_sums.size(); ++i)
    mean_pck[i] = pck_sums[i] / static_cast<double>(pairs.size());
  summary["mean_pck"] = thresholds_json(deltas, mean_pck);
  if (!pose_errors.empty()) {
    std::vector<double> thresholds = json_doubles(config["eval"]["auc_thresholds"]);
    std::vector<double> auc_values(thresholds.size()),
        map_values(thresholds.size());
    check(gm_auc(pose_errors.data(), static_cast<int>(pose_errors.size()),
                 thresholds.data(), static_cast<int>(thresholds.size()),
                 auc_values.data()),
          stage);
    check(gm_map_at(pose_errors.data(), static_cast<int>(pose_errors.size()),
                    thresholds.data(), static_cast<int>(thresholds.size()),
                    map_values.data()),
          stage);
    summary["pose_auc"] = thresholds_json(thresholds, auc_values);
    summary["pose_map"] = thresholds_json(thresholds, map_values);
  } else {
    summary["pose_auc"] = nullptr;
    summary["pose_map"] = nullptr;
  }

  json report = {{"config", config},
                 {"seed", run_seed},
                 {"timestamp", json(nullptr)},
                 {"pairs", pair_reports},
                 {"summary", summary}};
  std::time_t now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  report["timestamp"] = stamp;
  write_json_file(out_path, report, stage);
  std::cout << json{{"report", out_path}, {"pairs", pairs.size()}}.dump()
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"geomatch: dense geometric matching math core"};
  app.set_version_flag("--version", []() { return std::string(gm_version()); });
  app.require_subcommand(1);

  std::string config_path, out_path, scene_dir;
  std::optional<uint64_t> seed;

  auto* synth = app.add_subcommand("synth", "render a synthetic plane scene");
  synth->add_option("--config", config_path, "config JSON");
  synth->add_option("--seed", seed, "seed override");
  synth->add_option("--out", out_path, "output directory")->required();

  auto* gen_gt = app.add_subcommand(
      "gen-gt", "ground-truth correspondences from depth and pose");
  int src = 0, dst = 1;
  double tau = 0.05;
  gen_gt->add_option("--scene", scene_dir, "scene directory")->required();
  gen_gt->add_option("--src", src, "source view index");
  gen_gt->add_option("--dst", dst, "support view index");
  gen_gt->add_option("--tau", tau, "relative depth tolerance");
  gen_gt->add_option("--out", out_path, "output field file")->required();

  auto* coplanar = app.add_subcommand("coplanar", "co-planar indicator matrix");
  coplanar->add_option("--scene", scene_dir, "scene directory")->required();
  coplanar->add_option("--src", src, "source view index");
  coplanar->add_option("--dst", dst, "support view index");
  coplanar->add_option("--config", config_path, "config JSON");
  coplanar->add_option("--seed", seed, "seed override");
  coplanar->add_option("--out", out_path, "output indicator JSON")->required();

  auto* match = app.add_subcommand(
      "match", "correlation-volume matching between two image files");
  std::string image1, image2, volume_path;
  match->add_option("--image1", image1, "source image map")->required();
  match->add_option("--image2", image2, "support image map")->required();
  match->add_option("--config", config_path, "config JSON");
  match->add_option("--volume", volume_path, "optional volume output");
  match->add_option("--out", out_path, "matches JSON")->required();

  auto* mask = app.add_subcommand("mask", "random MIM patch mask");
  int mask_h = 256, mask_w = 256;
  mask->add_option("--height", mask_h, "image height");
  mask->add_option("--width", mask_w, "image width");
  mask->add_option("--config", config_path, "config JSON");
  mask->add_option("--seed", seed, "seed override");
  mask->add_option("--out", out_path, "output mask file")->required();

  auto* losses = app.add_subcommand("losses", "loss components for a prediction");
  std::string pred_path, gt_path, indicator_path, conf_path, pminus_path;
  losses->add_option("--pred", pred_path, "predicted field")->required();
  losses->add_option("--gt", gt_path, "ground-truth field")->required();
  losses->add_option("--indicator", indicator_path, "indicator JSON")->required();
  losses->add_option("--conf", conf_path, "confidence map");
  losses->add_option("--pminus", pminus_path, "explicit P- mask");
  losses->add_option("--volume", volume_path, "correlation volume");
  losses->add_option("--config", config_path, "config JSON");
  losses->add_option("--out", out_path, "output JSON")->required();

  auto* eval_pose = app.add_subcommand("eval-pose", "two-view pose benchmark");
  std::string input_path;
  eval_pose->add_option("--input", input_path, "JSONL of pair records")
      ->required();
  eval_pose->add_option("--config", config_path, "config JSON");
  eval_pose->add_option("--seed", seed, "seed override");
  eval_pose->add_option("--out", out_path, "output JSON")->required();

  auto* eval_pck = app.add_subcommand("eval-pck", "dense matching PCK");
  std::string mask_path;
  eval_pck->add_option("--pred", pred_path, "predicted field")->required();
  eval_pck->add_option("--gt", gt_path, "ground-truth field")->required();
  eval_pck->add_option("--mask", mask_path, "evaluation mask");
  eval_pck->add_option("--config", config_path, "config JSON");
  eval_pck->add_option("--out", out_path, "output JSON")->required();

  auto* eval_h = app.add_subcommand("eval-homography",
                                    "homography estimation benchmark");
  eval_h->add_option("--input", input_path, "JSONL of pair records")->required();
  eval_h->add_option("--config", config_path, "config JSON");
  eval_h->add_option("--seed", seed, "seed override");
  eval_h->add_option("--out", out_path, "output JSON")->required();

  auto* report = app.add_subcommand("report", "full synthetic pipeline report");
  report->add_option("--config", config_path, "config JSON");
  report->add_option("--seed", seed, "seed override");
  report->add_option("--out", out_path, "output JSON")->required();

  CLI11_PARSE(app, argc, argv);

  if (synth->parsed()) return cmd_synth(config_path, seed, out_path);
  if (gen_gt->parsed()) return cmd_gen_gt(scene_dir, src, dst, tau, out_path);
  if (coplanar->parsed())
    return cmd_coplanar(scene_dir, src, dst, config_path, seed, out_path);
  if (match->parsed())
    return cmd_match(image1, image2, config_path, out_path, volume_path);
  if (mask->parsed())
    return cmd_mask(mask_h, mask_w, config_path, seed, out_path);
  if (losses->parsed())
    return cmd_losses(pred_path, gt_path, indicator_path, conf_path,
                      pminus_path, volume_path, config_path, out_path);
  if (eval_pose->parsed())
    return cmd_eval_pose(input_path, config_path, seed, out_path);
  if (eval_pck->parsed())
    return cmd_eval_pck(pred_path, gt_path, mask_path, config_path, out_path);
  if (eval_h->parsed())
    return cmd_eval_homography(input_path, config_path, seed, out_path);
  if (report->parsed()) return cmd_report(config_path, seed, out_path);
  return 1;
}
