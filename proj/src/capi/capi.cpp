#include "geomatch/geomatch.h"

#include <json.hpp>
#include <string>

#include "core/camera.hpp"
#include "core/grid_ops.hpp"
#include "core/io.hpp"
#include "core/losses.hpp"
#include "core/matching.hpp"
#include "core/mim_mask.hpp"
#include "core/planar.hpp"
#include "core/pose_eval.hpp"
#include "core/synth.hpp"
#include "core/types.hpp"

struct gm_map {
  gm::DenseMap v;
};
struct gm_mask {
  gm::BoolMask v;
};
struct gm_conf {
  gm::ConfidenceMap v;
};
struct gm_field {
  gm::CorrespondenceField v;
};
struct gm_depth {
  gm::DepthMap v;
};
struct gm_normals {
  gm::NormalMap v;
};
struct gm_features {
  gm::FeatureVolume v;
};
struct gm_volume {
  gm::CorrelationVolume v;
};
struct gm_indicator {
  gm::IndicatorMatrix ind;
  gm::CoplanarSampleSet samples;
};
struct gm_patchmask {
  gm::PatchMask v;
};
struct gm_matchlist {
  std::vector<gm::MutualMatch> v;
};
struct gm_scene {
  std::vector<gm::SceneView> views;
};

namespace {

thread_local std::string t_last_error;

gm_status to_status(gm::ErrorCode code) {
  switch (code) {
    case gm::ErrorCode::InvalidArgument: return GM_ERR_INVALID_ARGUMENT;
    case gm::ErrorCode::DimensionMismatch: return GM_ERR_DIMENSION_MISMATCH;
    case gm::ErrorCode::InsufficientData: return GM_ERR_INSUFFICIENT_DATA;
    case gm::ErrorCode::Degenerate: return GM_ERR_DEGENERATE;
    case gm::ErrorCode::IoError: return GM_ERR_IO;
    case gm::ErrorCode::NumericError: return GM_ERR_NUMERIC;
  }
  return GM_ERR_UNKNOWN;
}

template <typename F>
gm_status wrap(F&& fn) noexcept {
  try {
    fn();
    t_last_error.clear();
    return GM_OK;
  } catch (const gm::Error& e) {
    t_last_error = e.what();
    return to_status(e.code());
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return GM_ERR_UNKNOWN;
  } catch (...) {
    t_last_error = "unknown error";
    return GM_ERR_UNKNOWN;
  }
}

void need(bool cond, const char* what) {
  gm::require(cond, gm::ErrorCode::InvalidArgument, what);
}

gm::Intrinsics to_intrinsics(const gm_intrinsics* K) {
  need(K != nullptr, "null intrinsics");
  return gm::Intrinsics(K->fx, K->fy, K->cx, K->cy);
}

gm::RigidPose to_pose(const gm_pose* pose) {
  need(pose != nullptr, "null pose");
  Eigen::Matrix3d R;
  for (int i = 0; i < 9; ++i) R(i / 3, i % 3) = pose->R[i];
  return gm::RigidPose(R, {pose->t[0], pose->t[1], pose->t[2]});
}

void from_pose(const Eigen::Matrix3d& R, const Eigen::Vector3d& t,
               gm_pose* out) {
  for (int i = 0; i < 9; ++i) out->R[i] = R(i / 3, i % 3);
  out->t[0] = t.x();
  out->t[1] = t.y();
  out->t[2] = t.z();
}

Eigen::Matrix3d mat_from9(const double m[9]) {
  need(m != nullptr, "null matrix");
  Eigen::Matrix3d out;
  for (int i = 0; i < 9; ++i) out(i / 3, i % 3) = m[i];
  return out;
}

std::vector<gm::PointMatch> to_matches(const gm_match* matches, int n) {
  need(matches != nullptr && n >= 0, "null match array");
  std::vector<gm::PointMatch> out(n);
  for (int i = 0; i < n; ++i)
    out[i] = {{matches[i].x1, matches[i].y1}, {matches[i].x2, matches[i].y2}};
  return out;
}

gm_map* map_handle(gm::DenseMap m) { return new gm_map{std::move(m)}; }

gm_map* matrix_handle(const Eigen::MatrixXd& m) {
  gm::DenseMap map(static_cast<int>(m.rows()), static_cast<int>(m.cols()), 1);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      map.at(static_cast<int>(i), static_cast<int>(j)) = m(i, j);
  return new gm_map{std::move(map)};
}

Eigen::MatrixXd to_matrix(const gm_map* m) {
  need(m != nullptr, "null map");
  need(m->v.channels == 1, "matrix maps must be single-channel");
  Eigen::MatrixXd out(m->v.height, m->v.width);
  for (int i = 0; i < m->v.height; ++i)
    for (int j = 0; j < m->v.width; ++j) out(i, j) = m->v.at(i, j);
  return out;
}

}  // namespace

extern "C" {

const char* gm_version(void) { return "0.1.0"; }

const char* gm_last_error_message(void) { return t_last_error.c_str(); }

/* ---- dense maps ---- */

gm_status gm_map_create(int height, int width, int channels,
                        const double* values, gm_map** out) {
  return wrap([&] {
    need(out != nullptr, "null output");
    gm::DenseMap m(height, width, channels);
    if (values) {
      m.values.assign(values, values + m.size());
      gm::require(gm::all_finite(m.values), gm::ErrorCode::NumericError,
                  "gm_map_create: non-finite values");
    }
    *out = map_handle(std::move(m));
  });
}

void gm_map_free(gm_map* map) { delete map; }

gm_status gm_map_dims(const gm_map* map, int* height, int* width,
                      int* channels) {
  return wrap([&] {
    need(map != nullptr, "null map");
    if (height) *height = map->v.height;
    if (width) *width = map->v.width;
    if (channels) *channels = map->v.channels;
  });
}

const double* gm_map_data(const gm_map* map) {
  return map ? map->v.values.data() : nullptr;
}

gm_status gm_map_save(const gm_map* map, const char* path) {
  return wrap([&] {
    need(map != nullptr && path != nullptr, "null argument");
    gm::save_densemap(path, map->v);
  });
}

gm_status gm_map_load(const char* path, gm_map** out) {
  return wrap([&] {
    need(path != nullptr && out != nullptr, "null argument");
    *out = map_handle(gm::load_densemap(path));
  });
}

/* ---- masks ---- */

gm_status gm_mask_create(int height, int width, const uint8_t* bits,
                         gm_mask** out) {
  return wrap([&] {
    need(out != nullptr, "null output");
    gm::BoolMask m(height, width);
    if (bits)
      for (size_t i = 0; i < m.bits.size(); ++i) m.bits[i] = bits[i] ? 1 : 0;
    *out = new gm_mask{std::move(m)};
  });
}

void gm_mask_free(gm_mask* mask) { delete mask; }

gm_status gm_mask_dims(const gm_mask* mask, int* height, int* width) {
  return wrap([&] {
    need(mask != nullptr, "null mask");
    if (height) *height = mask->v.height;
    if (width) *width = mask->v.width;
  });
}

const uint8_t* gm_mask_data(const gm_mask* mask) {
  return mask ? mask->v.bits.data() : nullptr;
}

gm_status gm_mask_count(const gm_mask* mask, size_t* count) {
  return wrap([&] {
    need(mask != nullptr && count != nullptr, "null argument");
    *count = mask->v.count();
  });
}

gm_status gm_mask_save(const gm_mask* mask, const char* path) {
  return wrap([&] {
    need(mask != nullptr && path != nullptr, "null argument");
    gm::save_mask(path, mask->v);
  });
}

gm_status gm_mask_load(const char* path, gm_mask** out) {
  return wrap([&] {
    need(path != nullptr && out != nullptr, "null argument");
    *out = new gm_mask{gm::load_mask(path)};
  });
}

/* ---- confidence ---- */

gm_status gm_conf_create(int height, int width, const double* values,
                         gm_conf** out) {
  return wrap([&] {
    need(out != nullptr, "null output");
    gm::ConfidenceMap m(height, width);
    if (values)
      for (int i = 0; i < height; ++i)
        for (int j = 0; j < width; ++j)
          m.set(i, j, values[static_cast<size_t>(i) * width + j]);
    *out = new gm_conf{std::move(m)};
  });
}

void gm_conf_free(gm_conf* conf) { delete conf; }

gm_status gm_conf_dims(const gm_conf* conf, int* height, int* width) {
  return wrap([&] {
    need(conf != nullptr, "null confidence map");
    if (height) *height = conf->v.height;
    if (width) *width = conf->v.width;
  });
}

const double* gm_conf_data(const gm_conf* conf) {
  return conf ? conf->v.values.data() : nullptr;
}

gm_status gm_conf_save(const gm_conf* conf, const char* path) {
  return wrap([&] {
    need(conf != nullptr && path != nullptr, "null argument");
    gm::save_confidence(path, conf->v);
  });
}

gm_status gm_conf_load(const char* path, gm_conf** out) {
  return wrap([&] {
    need(path != nullptr && out != nullptr, "null argument");
    *out = new gm_conf{gm::load_confidence(path)};
  });
}

/* ---- fields ---- */

gm_status gm_field_create(int height, int width, gm_field** out) {
  return wrap([&] {
    need(out != nullptr, "null output");
    *out = new gm_field{gm::CorrespondenceField(height, width)};
  });
}

gm_status gm_field_identity(int height, int width, gm_field** out) {
  return wrap([&] {
    need(out != nullptr, "null output");
    *out = new gm_field{gm::CorrespondenceField::identity(height, width)};
  });
}

void gm_field_free(gm_field* field) { delete field; }

gm_status gm_field_dims(const gm_field* field, int* height, int* width) {
  return wrap([&] {
    need(field != nullptr, "null field");
    if (height) *height = field->v.height;
    if (width) *width = field->v.width;
  });
}

gm_status gm_field_set(gm_field* field, int i, int j, double x, double y,
                       int valid) {
  return wrap([&] {
    need(field != nullptr, "null field");
    need(i >= 0 && i < field->v.height && j >= 0 && j < field->v.width,
         "pixel out of range");
    field->v.set(i, j, x, y, valid != 0);
  });
}

gm_status gm_field_get(const gm_field* field, int i, int j, double* x,
                       double* y, int* valid) {
  return wrap([&] {
    need(field != nullptr, "null field");
    need(i >= 0 && i < field->v.height && j >= 0 && j < field->v.width,
         "pixel out of range");
    if (x) *x = field->v.x(i, j);
    if (y) *y = field->v.y(i, j);
    if (valid) *valid = field->v.is_valid(i, j) ? 1 : 0;
  });
}

gm_status gm_field_save(const gm_field* field, const char* path) {
  return wrap([&] {
    need(field != nullptr && path != nullptr, "null argument");
    gm::save_field(path, field->v);
  });
}

gm_status gm_field_load(const char* path, gm_field** out) {
  return wrap([&] {
    need(path != nullptr && out != nullptr, "null argument");
    *out = new gm_field{gm::load_field(path)};
  });
}

gm_status gm_field_valid_mask(const gm_field* field, gm_mask** out) {
  return wrap([&] {
    need(field != nullptr && out != nullptr, "null argument");
    gm::BoolMask mask(field->v.height, field->v.width);
    mask.bits = field->v.valid;
    *out = new gm_mask{std::move(mask)};
  });
}

/* ---- depth ---- */

gm_status gm_depth_create(int height, int width, const double* depth,
                          const uint8_t* valid, gm_depth** out) {
  return wrap([&] {
    need(out != nullptr, "null output");
    gm::DepthMap d(height, width);
    if (depth) {
      for (int i = 0; i < height; ++i)
        for (int j = 0; j < width; ++j) {
          size_t idx = static_cast<size_t>(i) * width + j;
          bool v = valid == nullptr || valid[idx] != 0;
          if (v) d.set(i, j, depth[idx]);
        }
    }
    *out = new gm_depth{std::move(d)};
  });
}

void gm_depth_free(gm_depth* depth) { delete depth; }

gm_status gm_depth_dims(const gm_depth* depth, int* height, int* width) {
  return wrap([&] {
    need(depth != nullptr, "null depth map");
    if (height) *height = depth->v.height;
    if (width) *width = depth->v.width;
  });
}

gm_status gm_depth_get(const gm_depth* depth, int i, int j, double* d,
                       int* valid) {
  return wrap([&] {
    need(depth != nullptr, "null depth map");
    need(i >= 0 && i < depth->v.height && j >= 0 && j < depth->v.width,
         "pixel out of range");
    if (d) *d = depth->v.at(i, j);
    if (valid) *valid = depth->v.is_valid(i, j) ? 1 : 0;
  });
}

gm_status gm_depth_valid_mask(const gm_depth* depth, gm_mask** out) {
  return wrap([&] {
    need(depth != nullptr && out != nullptr, "null argument");
    gm::BoolMask mask(depth->v.height, depth->v.width);
    mask.bits = depth->v.valid;
    *out = new gm_mask{std::move(mask)};
  });
}

gm_status gm_depth_save(const gm_depth* depth, const char* path) {
  return wrap([&] {
    need(depth != nullptr && path != nullptr, "null argument");
    gm::save_depth(path, depth->v);
  });
}

gm_status gm_depth_load(const char* path, gm_depth** out) {
  return wrap([&] {
    need(path != nullptr && out != nullptr, "null argument");
    *out = new gm_depth{gm::load_depth(path)};
  });
}

/* ---- normals ---- */

void gm_normals_free(gm_normals* normals) { delete normals; }

gm_status gm_normals_dims(const gm_normals* normals, int* height, int* width) {
  return wrap([&] {
    need(normals != nullptr, "null normal map");
    if (height) *height = normals->v.height;
    if (width) *width = normals->v.width;
  });
}

gm_status gm_normals_get(const gm_normals* normals, int i, int j, double n[3],
                         int* valid) {
  return wrap([&] {
    need(normals != nullptr, "null normal map");
    need(i >= 0 && i < normals->v.height && j >= 0 && j < normals->v.width,
         "pixel out of range");
    size_t b = 3 * normals->v.index(i, j);
    if (n) {
      n[0] = normals->v.normal[b];
      n[1] = normals->v.normal[b + 1];
      n[2] = normals->v.normal[b + 2];
    }
    if (valid) *valid = normals->v.is_valid(i, j) ? 1 : 0;
  });
}

gm_status gm_normals_valid_mask(const gm_normals* normals, gm_mask** out) {
  return wrap([&] {
    need(normals != nullptr && out != nullptr, "null argument");
    gm::BoolMask mask(normals->v.height, normals->v.width);
    mask.bits = normals->v.valid;
    *out = new gm_mask{std::move(mask)};
  });
}

gm_status gm_normals_save(const gm_normals* normals, const char* path) {
  return wrap([&] {
    need(normals != nullptr && path != nullptr, "null argument");
    gm::save_normals(path, normals->v);
  });
}

gm_status gm_normals_load(const char* path, gm_normals** out) {
  return wrap([&] {
    need(path != nullptr && out != nullptr, "null argument");
    *out = new gm_normals{gm::load_normals(path)};
  });
}

/* ---- grid ops ---- */

gm_status gm_bilinear_sample(const gm_map* map, const double* coords, int n,
                             int border_policy, double* out_values,
                             uint8_t* out_valid) {
  return wrap([&] {
    need(map != nullptr && coords != nullptr && n >= 0, "null argument");
    need(out_values != nullptr && out_valid != nullptr, "null output");
    std::vector<Eigen::Vector2d> pts(n);
    for (int i = 0; i < n; ++i) pts[i] = {coords[2 * i], coords[2 * i + 1]};
    gm::SampleBatch batch = gm::bilinear_sample(
        map->v, pts,
        border_policy == GM_BORDER_CLAMP ? gm::BorderPolicy::Clamp
                                         : gm::BorderPolicy::Invalid);
    std::copy(batch.values.begin(), batch.values.end(), out_values);
    std::copy(batch.valid.begin(), batch.valid.end(), out_valid);
  });
}

gm_status gm_warp_reconstruct(const gm_map* support, const gm_field* field,
                              const gm_conf* conf, double conf_threshold,
                              gm_map** out) {
  return wrap([&] {
    need(support && field && conf && out, "null argument");
    *out = map_handle(
        gm::warp_reconstruct(support->v, field->v, conf->v, conf_threshold));
  });
}

gm_status gm_fb_consistency(const gm_field* forward, const gm_field* backward,
                            double tau_px, gm_mask** out) {
  return wrap([&] {
    need(forward && backward && out, "null argument");
    *out = new gm_mask{gm::fb_consistency(forward->v, backward->v, tau_px)};
  });
}

gm_status gm_recon_metrics(const gm_map* a, const gm_map* b, const gm_mask* mask,
                           double* l1, double* one_minus_ssim) {
  return wrap([&] {
    need(a && b && mask && l1 && one_minus_ssim, "null argument");
    gm::ReconMetrics m = gm::recon_metrics(a->v, b->v, mask->v);
    *l1 = m.l1;
    *one_minus_ssim = m.one_minus_ssim;
  });
}

/* ---- camera ---- */

gm_status gm_backproject(const gm_intrinsics* K, double x, double y,
                         double depth, double out_point[3]) {
  return wrap([&] {
    need(out_point != nullptr, "null output");
    Eigen::Vector3d p = gm::backproject({x, y}, depth, to_intrinsics(K));
    out_point[0] = p.x();
    out_point[1] = p.y();
    out_point[2] = p.z();
  });
}

gm_status gm_project(const gm_intrinsics* K, const double point[3],
                     double out_pixel[2], double* out_depth) {
  return wrap([&] {
    need(point != nullptr && out_pixel != nullptr, "null argument");
    gm::Projection p =
        gm::project({point[0], point[1], point[2]}, to_intrinsics(K));
    out_pixel[0] = p.pixel.x();
    out_pixel[1] = p.pixel.y();
    if (out_depth) *out_depth = p.depth;
  });
}

gm_status gm_gt_correspondence(const gm_depth* depth1, const gm_depth* depth2,
                               const gm_intrinsics* K1, const gm_intrinsics* K2,
                               const gm_pose* pose, double rel_depth_tau,
                               gm_field** out) {
  return wrap([&] {
    need(depth1 && depth2 && out, "null argument");
    *out = new gm_field{gm::gt_correspondence(depth1->v, depth2->v,
                                              to_intrinsics(K1),
                                              to_intrinsics(K2), to_pose(pose),
                                              rel_depth_tau)};
  });
}

gm_status gm_normals_from_depth(const gm_depth* depth, const gm_intrinsics* K,
                                gm_normals** out) {
  return wrap([&] {
    need(depth && out, "null argument");
    *out = new gm_normals{gm::normals_from_depth(depth->v, to_intrinsics(K))};
  });
}

gm_status gm_overlap_ratio(const gm_depth* depth1, const gm_depth* depth2,
                           const gm_intrinsics* K1, const gm_intrinsics* K2,
                           const gm_pose* pose, double rel_depth_tau,
                           double* out) {
  return wrap([&] {
    need(depth1 && depth2 && out, "null argument");
    *out = gm::overlap_ratio(depth1->v, depth2->v, to_intrinsics(K1),
                             to_intrinsics(K2), to_pose(pose), rel_depth_tau);
  });
}

/* ---- planar ---- */

gm_status gm_pixel_homography(const double normal[3], double px, double py,
                              double depth, const gm_pose* pose,
                              const gm_intrinsics* K1, const gm_intrinsics* K2,
                              double out_h[9]) {
  return wrap([&] {
    need(normal != nullptr && out_h != nullptr, "null argument");
    gm::PixelHomography h = gm::pixel_homography(
        {normal[0], normal[1], normal[2]}, {px, py}, depth, to_pose(pose),
        to_intrinsics(K1), to_intrinsics(K2));
    for (int i = 0; i < 9; ++i) out_h[i] = h.H(i / 3, i % 3);
  });
}

gm_status gm_planar_project(const double h[9], double x, double y,
                            double out_xy[2]) {
  return wrap([&] {
    need(out_xy != nullptr, "null output");
    gm::PixelHomography hh;
    hh.H = mat_from9(h);
    Eigen::Vector2d p = gm::planar_project(hh, {x, y});
    out_xy[0] = p.x();
    out_xy[1] = p.y();
  });
}

gm_status gm_point_plane_distance(const double normal[3], double px, double py,
                                  double dp, double qx, double qy, double dq,
                                  const gm_intrinsics* K1, double* out) {
  return wrap([&] {
    need(normal != nullptr && out != nullptr, "null argument");
    *out = gm::point_plane_distance({normal[0], normal[1], normal[2]}, {px, py},
                                    dp, {qx, qy}, dq, to_intrinsics(K1));
  });
}

gm_status gm_coplanar_indicator(const gm_mask* valid, int k, uint64_t seed,
                                const gm_normals* normals, const gm_depth* depth,
                                const gm_field* gt, const gm_intrinsics* K1,
                                const gm_intrinsics* K2, const gm_pose* pose,
                                double k1, double k2, double k3,
                                int literal_form, gm_indicator** out) {
  return wrap([&] {
    need(valid && normals && depth && gt && out, "null argument");
    gm::CoplanarSampleSet samples = gm::sample_coplanar_set(valid->v, k, seed);
    gm::CoplanarThresholds thresholds;
    thresholds.k1 = k1;
    thresholds.k2 = k2;
    thresholds.k3 = k3;
    thresholds.literal_form = literal_form != 0;
    gm::IndicatorMatrix ind = gm::coplanar_indicator(
        samples, normals->v, depth->v, gt->v, to_intrinsics(K1),
        to_intrinsics(K2), to_pose(pose), thresholds);
    *out = new gm_indicator{std::move(ind), std::move(samples)};
  });
}

void gm_indicator_free(gm_indicator* indicator) { delete indicator; }

gm_status gm_indicator_size(const gm_indicator* indicator, int* k) {
  return wrap([&] {
    need(indicator && k, "null argument");
    *k = indicator->ind.k;
  });
}

gm_status gm_indicator_at(const gm_indicator* indicator, int m, int n,
                          int* set) {
  return wrap([&] {
    need(indicator && set, "null argument");
    need(m >= 0 && m < indicator->ind.k && n >= 0 && n < indicator->ind.k,
         "index out of range");
    *set = indicator->ind.at(m, n) ? 1 : 0;
  });
}

gm_status gm_indicator_count(const gm_indicator* indicator, size_t* count) {
  return wrap([&] {
    need(indicator && count, "null argument");
    *count = indicator->ind.count();
  });
}

gm_status gm_indicator_anchor(const gm_indicator* indicator, int m,
                              int out_xy[2]) {
  return wrap([&] {
    need(indicator && out_xy, "null argument");
    need(m >= 0 && m < indicator->samples.k, "index out of range");
    out_xy[0] = indicator->samples.anchors[m].x();
    out_xy[1] = indicator->samples.anchors[m].y();
  });
}

gm_status gm_indicator_candidate(const gm_indicator* indicator, int m, int n,
                                 int out_xy[2]) {
  return wrap([&] {
    need(indicator && out_xy, "null argument");
    need(m >= 0 && m < indicator->samples.k && n >= 0 &&
             n < indicator->samples.k,
         "index out of range");
    out_xy[0] = indicator->samples.candidate(m, n).x();
    out_xy[1] = indicator->samples.candidate(m, n).y();
  });
}

gm_status gm_indicator_save(const gm_indicator* indicator, const char* path) {
  return wrap([&] {
    need(indicator && path, "null argument");
    gm::save_indicator(path, indicator->ind, indicator->samples);
  });
}

gm_status gm_indicator_load(const char* path, gm_indicator** out) {
  return wrap([&] {
    need(path && out, "null argument");
    auto [ind, samples] = gm::load_indicator(path);
    *out = new gm_indicator{std::move(ind), std::move(samples)};
  });
}

/* ---- matching ---- */

gm_status gm_features_create(int h, int w, int dim, const double* values,
                             gm_features** out) {
  return wrap([&] {
    need(out != nullptr, "null output");
    gm::FeatureVolume f(h, w, dim);
    if (values) f.values.assign(values, values + f.values.size());
    gm::require(gm::all_finite(f.values), gm::ErrorCode::NumericError,
                "gm_features_create: non-finite values");
    *out = new gm_features{std::move(f)};
  });
}

void gm_features_free(gm_features* features) { delete features; }

gm_status gm_patch_features(const gm_map* image, int scale, int normalize,
                            gm_features** out) {
  return wrap([&] {
    need(image && out, "null argument");
    *out = new gm_features{gm::patch_features(image->v, scale, normalize != 0)};
  });
}

gm_status gm_correlation_volume(const gm_features* f1, const gm_features* f2,
                                double gamma, gm_volume** out) {
  return wrap([&] {
    need(f1 && f2 && out, "null argument");
    *out = new gm_volume{gm::correlation_volume(f1->v, f2->v, gamma)};
  });
}

void gm_volume_free(gm_volume* volume) { delete volume; }

gm_status gm_volume_size(const gm_volume* volume, int* n) {
  return wrap([&] {
    need(volume && n, "null argument");
    *n = volume->v.n;
  });
}

gm_status gm_volume_save(const gm_volume* volume, const char* path) {
  return wrap([&] {
    need(volume && path, "null argument");
    gm::save_volume(path, volume->v);
  });
}

gm_status gm_volume_load(const char* path, gm_volume** out) {
  return wrap([&] {
    need(path && out, "null argument");
    *out = new gm_volume{gm::load_volume(path)};
  });
}

gm_status gm_softmax_rows(const gm_volume* volume, gm_map** out) {
  return wrap([&] {
    need(volume && out, "null argument");
    *out = matrix_handle(gm::softmax_rows(volume->v));
  });
}

gm_status gm_dual_softmax(const gm_volume* volume, gm_map** out) {
  return wrap([&] {
    need(volume && out, "null argument");
    *out = matrix_handle(gm::dual_softmax(volume->v));
  });
}

gm_status gm_coarse_match(const gm_map* soft, int h, int w, int scale,
                          gm_field** out) {
  return wrap([&] {
    need(soft && out, "null argument");
    gm::CoordGrid grid = gm::make_coord_grid(h, w, scale);
    *out = new gm_field{gm::coarse_match_naive(to_matrix(soft), grid)};
  });
}

gm_status gm_positional_embedding(int h, int w, int scale, int d_pos,
                                  gm_map** out) {
  return wrap([&] {
    need(out != nullptr, "null output");
    gm::CoordGrid grid = gm::make_coord_grid(h, w, scale);
    *out = matrix_handle(gm::positional_embedding(grid, d_pos).values);
  });
}

gm_status gm_aggregate_embedded(const gm_map* soft, const gm_map* embedding,
                                gm_map** out) {
  return wrap([&] {
    need(soft && embedding && out, "null argument");
    gm::PositionalEmbedding m;
    m.values = to_matrix(embedding);
    *out = matrix_handle(gm::aggregate_embedded(to_matrix(soft), m));
  });
}

gm_status gm_mutual_nn_matches(const gm_map* dual, double score_min,
                               gm_matchlist** out) {
  return wrap([&] {
    need(dual && out, "null argument");
    *out = new gm_matchlist{gm::mutual_nn_matches(to_matrix(dual), score_min)};
  });
}

void gm_matchlist_free(gm_matchlist* list) { delete list; }

gm_status gm_matchlist_size(const gm_matchlist* list, int* n) {
  return wrap([&] {
    need(list && n, "null argument");
    *n = static_cast<int>(list->v.size());
  });
}

gm_status gm_matchlist_get(const gm_matchlist* list, int idx, int* i, int* k,
                           double* score) {
  return wrap([&] {
    need(list != nullptr, "null list");
    need(idx >= 0 && idx < static_cast<int>(list->v.size()),
         "index out of range");
    if (i) *i = list->v[idx].i;
    if (k) *k = list->v[idx].k;
    if (score) *score = list->v[idx].score;
  });
}

/* ---- losses ---- */

gm_status gm_mim_loss(const gm_map* const* recons1, const gm_map* const* recons2,
                      int n_scales, const gm_map* target1, const gm_map* target2,
                      const gm_mask* mask1, const gm_mask* mask2, int mode,
                      double* out) {
  return wrap([&] {
    need(recons1 && recons2 && n_scales > 0 && target1 && target2 && mask1 &&
             mask2 && out,
         "null argument");
    std::vector<const gm::DenseMap*> r1, r2;
    for (int s = 0; s < n_scales; ++s) {
      need(recons1[s] != nullptr && recons2[s] != nullptr,
           "null reconstruction");
      r1.push_back(&recons1[s]->v);
      r2.push_back(&recons2[s]->v);
    }
    *out = gm::mim_loss(r1, r2, target1->v, target2->v, mask1->v, mask2->v,
                        mode == GM_MIM_ALL_PIXELS ? gm::MimMode::AllPixels
                                                  : gm::MimMode::MaskedOnly);
  });
}

gm_status gm_homography_loss(const gm_field* pred, const gm_field* gt,
                             const gm_indicator* indicator, double* out) {
  return wrap([&] {
    need(pred && gt && indicator && out, "null argument");
    *out = gm::homography_loss(pred->v, gt->v, indicator->ind,
                               indicator->samples);
  });
}

gm_status gm_global_matching_loss(const gm_map* dual, const int* positives,
                                  int n_pos, const int* negatives, int n_neg,
                                  double eps, double* out) {
  return wrap([&] {
    need(dual && out, "null argument");
    need((positives != nullptr || n_pos == 0) &&
             (negatives != nullptr || n_neg == 0) && n_pos >= 0 && n_neg >= 0,
         "bad supervision arrays");
    gm::MatchSupervision sup;
    for (int i = 0; i < n_pos; ++i)
      sup.positives.emplace_back(positives[2 * i], positives[2 * i + 1]);
    for (int i = 0; i < n_neg; ++i)
      sup.negatives.emplace_back(negatives[2 * i], negatives[2 * i + 1]);
    *out = gm::global_matching_loss(to_matrix(dual), sup, eps);
  });
}

gm_status gm_refinement_loss(const gm_field* pred, const gm_field* gt,
                             const gm_mask* p_plus, double* out) {
  return wrap([&] {
    need(pred && gt && p_plus && out, "null argument");
    *out = gm::refinement_loss(pred->v, gt->v, p_plus->v);
  });
}

gm_status gm_confidence_loss(const gm_conf* conf, const gm_mask* p_plus,
                             const gm_mask* p_minus, double eps, double* out) {
  return wrap([&] {
    need(conf && p_plus && p_minus && out, "null argument");
    *out = gm::confidence_loss(conf->v, p_plus->v, p_minus->v, eps);
  });
}

gm_status gm_total_loss(const double per_scale_r[4], const double per_scale_c[4],
                        double l_g, const double per_scale_h[4], double w_c,
                        double w_g, double w_h, double* out) {
  return wrap([&] {
    need(per_scale_r && per_scale_c && per_scale_h && out, "null argument");
    gm::LossWeights weights;
    weights.w_c = w_c;
    weights.w_g = w_g;
    weights.w_h = w_h;
    std::array<double, 4> r, c, h;
    for (int s = 0; s < 4; ++s) {
      r[s] = per_scale_r[s];
      c[s] = per_scale_c[s];
      h[s] = per_scale_h[s];
    }
    *out = gm::total_loss(r, c, l_g, h, weights);
  });
}

gm_status gm_make_match_supervision(const gm_field* gt, int coarse_h,
                                    int coarse_w, int scale, int* positives,
                                    int* n_pos, int* negatives, int* n_neg) {
  return wrap([&] {
    need(gt && n_pos && n_neg, "null argument");
    gm::MatchSupervision sup =
        gm::make_match_supervision(gt->v, coarse_h, coarse_w, scale);
    if (positives) {
      need(*n_pos >= static_cast<int>(sup.positives.size()),
           "positives buffer too small");
      for (size_t i = 0; i < sup.positives.size(); ++i) {
        positives[2 * i] = sup.positives[i].first;
        positives[2 * i + 1] = sup.positives[i].second;
      }
    }
    if (negatives) {
      need(*n_neg >= static_cast<int>(sup.negatives.size()),
           "negatives buffer too small");
      for (size_t i = 0; i < sup.negatives.size(); ++i) {
        negatives[2 * i] = sup.negatives[i].first;
        negatives[2 * i + 1] = sup.negatives[i].second;
      }
    }
    *n_pos = static_cast<int>(sup.positives.size());
    *n_neg = static_cast<int>(sup.negatives.size());
  });
}

/* ---- masking ---- */

gm_status gm_gen_mask(int image_h, int image_w, int patch, double ratio,
                      uint64_t seed, gm_patchmask** out) {
  return wrap([&] {
    need(out != nullptr, "null output");
    *out = new gm_patchmask{gm::gen_mask(image_h, image_w, patch, ratio, seed)};
  });
}

void gm_patchmask_free(gm_patchmask* mask) { delete mask; }

gm_status gm_patchmask_selected(const gm_patchmask* mask, int* cells,
                                int* count) {
  return wrap([&] {
    need(mask && count, "null argument");
    if (cells) {
      need(*count >= static_cast<int>(mask->v.selected.size()),
           "cells buffer too small");
      for (size_t i = 0; i < mask->v.selected.size(); ++i)
        cells[i] = mask->v.selected[i];
    }
    *count = static_cast<int>(mask->v.selected.size());
  });
}

gm_status gm_mask_at_scale(const gm_patchmask* mask, int scale, gm_mask** out) {
  return wrap([&] {
    need(mask && out, "null argument");
    *out = new gm_mask{gm::mask_at_scale(mask->v, scale)};
  });
}

gm_status gm_apply_mask(const gm_map* map, const gm_mask* mask,
                        const double* token, gm_map** out) {
  return wrap([&] {
    need(map && mask && token && out, "null argument");
    std::vector<double> tok(token, token + map->v.channels);
    *out = map_handle(gm::apply_mask(map->v, mask->v, tok));
  });
}

/* ---- pose ---- */

gm_status gm_estimate_essential(const gm_match* matches, int n,
                                const gm_intrinsics* K1, const gm_intrinsics* K2,
                                double inlier_px, int max_iters, uint64_t seed,
                                int solver, double out_e[9],
                                uint8_t* out_inliers, int* out_n_inliers) {
  return wrap([&] {
    need(out_e != nullptr, "null output");
    gm::EssentialRansacResult result = gm::estimate_essential_ransac(
        to_matches(matches, n), to_intrinsics(K1), to_intrinsics(K2), inlier_px,
        max_iters, seed,
        solver == GM_SOLVER_EIGHT_POINT ? gm::EssentialSolverKind::EightPoint
                                        : gm::EssentialSolverKind::FivePoint);
    for (int i = 0; i < 9; ++i) out_e[i] = result.essential.E(i / 3, i % 3);
    if (out_inliers)
      std::copy(result.inliers.begin(), result.inliers.end(), out_inliers);
    if (out_n_inliers) *out_n_inliers = result.n_inliers;
  });
}

gm_status gm_decompose_essential(const double e[9], const gm_match* matches,
                                 int n, const gm_intrinsics* K1,
                                 const gm_intrinsics* K2, gm_pose* out,
                                 int* out_n_cheiral, int* out_reliable) {
  return wrap([&] {
    need(out != nullptr, "null output");
    gm::EssentialMatrix E;
    E.E = mat_from9(e);
    gm::RelativePose pose = gm::decompose_essential(
        E, to_matches(matches, n), to_intrinsics(K1), to_intrinsics(K2));
    from_pose(pose.R, pose.t, out);
    if (out_n_cheiral) *out_n_cheiral = pose.n_cheiral;
    if (out_reliable) *out_reliable = pose.reliable ? 1 : 0;
  });
}

gm_status gm_compute_pose_error(const gm_pose* estimated,
                                const gm_pose* truth, gm_pose_error* out) {
  return wrap([&] {
    need(estimated && truth && out, "null argument");
    Eigen::Matrix3d eR, gR;
    for (int i = 0; i < 9; ++i) {
      eR(i / 3, i % 3) = estimated->R[i];
      gR(i / 3, i % 3) = truth->R[i];
    }
    gm::PoseError err = gm::pose_error(
        eR, {estimated->t[0], estimated->t[1], estimated->t[2]}, gR,
        {truth->t[0], truth->t[1], truth->t[2]});
    out->rot_deg = err.rot_deg;
    out->trans_deg = err.trans_deg;
    out->max_deg = err.max_deg;
  });
}

gm_status gm_auc(const double* errors, int n, const double* thresholds,
                 int n_thresholds, double* out) {
  return wrap([&] {
    need(errors && thresholds && out && n >= 0 && n_thresholds >= 0,
         "null argument");
    gm::ErrorCurve curve =
        gm::ErrorCurve::from_values(std::vector<double>(errors, errors + n));
    std::vector<double> t(thresholds, thresholds + n_thresholds);
    std::vector<double> values = gm::auc(curve, t);
    std::copy(values.begin(), values.end(), out);
  });
}

gm_status gm_map_at(const double* errors, int n, const double* thresholds,
                    int n_thresholds, double* out) {
  return wrap([&] {
    need(errors && thresholds && out && n >= 0 && n_thresholds >= 0,
         "null argument");
    gm::ErrorCurve curve =
        gm::ErrorCurve::from_values(std::vector<double>(errors, errors + n));
    std::vector<double> t(thresholds, thresholds + n_thresholds);
    std::vector<double> values = gm::map_at(curve, t);
    std::copy(values.begin(), values.end(), out);
  });
}

gm_status gm_pck(const gm_field* pred, const gm_field* gt, const gm_mask* mask,
                 const double* deltas, int n_deltas, double* out) {
  return wrap([&] {
    need(pred && gt && mask && deltas && out && n_deltas >= 0, "null argument");
    std::vector<double> d(deltas, deltas + n_deltas);
    std::vector<double> values = gm::pck(pred->v, gt->v, mask->v, d);
    std::copy(values.begin(), values.end(), out);
  });
}

gm_status gm_homography_corner_error(const double h_est[9], const double h_gt[9],
                                     int image_h, int image_w, double* out) {
  return wrap([&] {
    need(out != nullptr, "null output");
    *out = gm::homography_corner_error(mat_from9(h_est), mat_from9(h_gt),
                                       image_h, image_w);
  });
}

gm_status gm_estimate_homography(const gm_match* matches, int n,
                                 double inlier_px, int max_iters, uint64_t seed,
                                 double out_h[9], uint8_t* out_inliers,
                                 int* out_n_inliers) {
  return wrap([&] {
    need(out_h != nullptr, "null output");
    gm::HomographyRansacResult result = gm::estimate_homography_ransac(
        to_matches(matches, n), inlier_px, max_iters, seed);
    for (int i = 0; i < 9; ++i) out_h[i] = result.H(i / 3, i % 3);
    if (out_inliers)
      std::copy(result.inliers.begin(), result.inliers.end(), out_inliers);
    if (out_n_inliers) *out_n_inliers = result.n_inliers;
  });
}

/* ---- synthetic scenes ---- */

gm_status gm_synth_scene(const char* spec_json, gm_scene** out) {
  return wrap([&] {
    need(spec_json && out, "null argument");
    nlohmann::json j = nlohmann::json::parse(spec_json, nullptr, false);
    gm::require(!j.is_discarded() && j.is_object(), gm::ErrorCode::IoError,
                "gm_synth_scene: malformed spec JSON");
    gm::SceneSpec spec;
    spec.height = j.value("height", 0);
    spec.width = j.value("width", 0);
    spec.channels = j.value("channels", 3);
    gm::require(j.contains("intrinsics"), gm::ErrorCode::InvalidArgument,
                "gm_synth_scene: missing intrinsics");
    const auto& ji = j["intrinsics"];
    spec.intrinsics =
        gm::Intrinsics(ji.value("fx", 0.0), ji.value("fy", 0.0),
                       ji.value("cx", 0.0), ji.value("cy", 0.0));
    gm::require(j.contains("planes") && j["planes"].is_array(),
                gm::ErrorCode::InvalidArgument, "gm_synth_scene: missing planes");
    for (const auto& jp : j["planes"]) {
      gm::PlaneSpec plane;
      gm::require(jp.contains("normal") && jp["normal"].size() == 3,
                  gm::ErrorCode::InvalidArgument,
                  "gm_synth_scene: plane needs a 3-vector normal");
      plane.normal = Eigen::Vector3d(jp["normal"][0].get<double>(),
                                     jp["normal"][1].get<double>(),
                                     jp["normal"][2].get<double>())
                         .normalized();
      plane.offset = jp.value("offset", 0.0);
      plane.texture_seed = jp.value("texture_seed", uint64_t{0});
      plane.texture_scale = jp.value("texture_scale", 1.0);
      spec.planes.push_back(plane);
    }
    gm::require(j.contains("views") && j["views"].is_array(),
                gm::ErrorCode::InvalidArgument, "gm_synth_scene: missing views");
    for (const auto& jv : j["views"]) {
      gm::require(jv.contains("R") && jv["R"].size() == 9 && jv.contains("t") &&
                      jv["t"].size() == 3,
                  gm::ErrorCode::InvalidArgument,
                  "gm_synth_scene: view needs R[9] and t[3]");
      Eigen::Matrix3d R;
      for (int i = 0; i < 9; ++i) R(i / 3, i % 3) = jv["R"][i].get<double>();
      Eigen::Vector3d t(jv["t"][0].get<double>(), jv["t"][1].get<double>(),
                        jv["t"][2].get<double>());
      spec.world_to_camera.emplace_back(R, t);
    }
    *out = new gm_scene{gm::synth_scene(spec)};
  });
}

void gm_scene_free(gm_scene* scene) { delete scene; }

gm_status gm_scene_view_count(const gm_scene* scene, int* count) {
  return wrap([&] {
    need(scene && count, "null argument");
    *count = static_cast<int>(scene->views.size());
  });
}

namespace {
const gm::SceneView& view_at(const gm_scene* scene, int view) {
  need(scene != nullptr, "null scene");
  need(view >= 0 && view < static_cast<int>(scene->views.size()),
       "view index out of range");
  return scene->views[view];
}
}  // namespace

gm_status gm_scene_image(const gm_scene* scene, int view, gm_map** out) {
  return wrap([&] {
    need(out != nullptr, "null output");
    *out = map_handle(view_at(scene, view).image);
  });
}

gm_status gm_scene_depth(const gm_scene* scene, int view, gm_depth** out) {
  return wrap([&] {
    need(out != nullptr, "null output");
    *out = new gm_depth{view_at(scene, view).depth};
  });
}

gm_status gm_scene_normals(const gm_scene* scene, int view, gm_normals** out) {
  return wrap([&] {
    need(out != nullptr, "null output");
    *out = new gm_normals{view_at(scene, view).normals};
  });
}

gm_status gm_scene_intrinsics(const gm_scene* scene, int view,
                              gm_intrinsics* out) {
  return wrap([&] {
    need(out != nullptr, "null output");
    const gm::Intrinsics& K = view_at(scene, view).intrinsics;
    out->fx = K.fx;
    out->fy = K.fy;
    out->cx = K.cx;
    out->cy = K.cy;
  });
}

gm_status gm_scene_world_pose(const gm_scene* scene, int view, gm_pose* out) {
  return wrap([&] {
    need(out != nullptr, "null output");
    const gm::RigidPose& pose = view_at(scene, view).world_to_camera;
    from_pose(pose.R, pose.t, out);
  });
}

gm_status gm_scene_relative_pose(const gm_scene* scene, int view_a, int view_b,
                                 gm_pose* out) {
  return wrap([&] {
    need(out != nullptr, "null output");
    gm::RigidPose pose =
        gm::relative_pose(view_at(scene, view_a), view_at(scene, view_b));
    from_pose(pose.R, pose.t, out);
  });
}

gm_status gm_scene_plane_ids(const gm_scene* scene, int view, int32_t* buf) {
  return wrap([&] {
    need(buf != nullptr, "null output");
    const gm::SceneView& v = view_at(scene, view);
    for (size_t i = 0; i < v.plane_id.size(); ++i) buf[i] = v.plane_id[i];
  });
}

gm_status gm_sample_pairs(const gm_scene* scene, double overlap_lo,
                          double overlap_hi, int count, double rel_depth_tau,
                          uint64_t seed, int* out_pairs) {
  return wrap([&] {
    need(scene && out_pairs, "null argument");
    auto pairs = gm::sample_pairs(scene->views, overlap_lo, overlap_hi, count,
                                  rel_depth_tau, seed);
    for (size_t i = 0; i < pairs.size(); ++i) {
      out_pairs[2 * i] = pairs[i].first;
      out_pairs[2 * i + 1] = pairs[i].second;
    }
  });
}

} /* extern "C" */
