#ifndef GEOMATCH_H
#define GEOMATCH_H

/* geomatch: geometric-matching math core.
 *
 * C interface over the C++ implementation: opaque handles, status-code
 * returns, thread-local error messages. Every function returns GM_OK on
 * success; on failure the out-parameters are untouched and
 * gm_last_error_message() describes the problem.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define GM_API __declspec(dllexport)
#else
#define GM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gm_status {
  GM_OK = 0,
  GM_ERR_INVALID_ARGUMENT = 1,
  GM_ERR_DIMENSION_MISMATCH = 2,
  GM_ERR_INSUFFICIENT_DATA = 3,
  GM_ERR_DEGENERATE = 4,
  GM_ERR_IO = 5,
  GM_ERR_NUMERIC = 6,
  GM_ERR_UNKNOWN = 7
} gm_status;

GM_API const char* gm_version(void);
/* Message for the most recent failure on this thread; empty if none. */
GM_API const char* gm_last_error_message(void);

/* ---- opaque handles ---------------------------------------------------- */

typedef struct gm_map gm_map;             /* dense real map (h, w, c) */
typedef struct gm_mask gm_mask;           /* boolean map */
typedef struct gm_conf gm_conf;           /* confidence map in [0, 1] */
typedef struct gm_field gm_field;         /* correspondence field + validity */
typedef struct gm_depth gm_depth;         /* metric depth + validity */
typedef struct gm_normals gm_normals;     /* unit normals + validity */
typedef struct gm_features gm_features;   /* coarse-grid feature volume */
typedef struct gm_volume gm_volume;       /* correlation volume */
typedef struct gm_indicator gm_indicator; /* co-planar indicator + samples */
typedef struct gm_patchmask gm_patchmask; /* MIM patch selection */
typedef struct gm_matchlist gm_matchlist; /* mutual-NN match list */
typedef struct gm_scene gm_scene;         /* synthetic multi-view scene */

/* ---- plain structs ------------------------------------------------------ */

typedef struct gm_intrinsics {
  double fx, fy, cx, cy;
} gm_intrinsics;

typedef struct gm_pose {
  double R[9]; /* row-major rotation */
  double t[3];
} gm_pose;

typedef struct gm_match {
  double x1, y1; /* source pixel */
  double x2, y2; /* support pixel */
} gm_match;

typedef struct gm_pose_error {
  double rot_deg, trans_deg, max_deg;
} gm_pose_error;

enum { GM_BORDER_INVALID = 0, GM_BORDER_CLAMP = 1 };
enum { GM_MIM_MASKED_ONLY = 0, GM_MIM_ALL_PIXELS = 1 };
enum { GM_SOLVER_FIVE_POINT = 0, GM_SOLVER_EIGHT_POINT = 1 };

/* ---- dense maps ---------------------------------------------------------- */

GM_API gm_status gm_map_create(int height, int width, int channels,
                               const double* values /* nullable */,
                               gm_map** out);
GM_API void gm_map_free(gm_map* map);
GM_API gm_status gm_map_dims(const gm_map* map, int* height, int* width,
                             int* channels);
GM_API const double* gm_map_data(const gm_map* map);
GM_API gm_status gm_map_save(const gm_map* map, const char* path);
GM_API gm_status gm_map_load(const char* path, gm_map** out);

GM_API gm_status gm_mask_create(int height, int width,
                                const uint8_t* bits /* nullable */,
                                gm_mask** out);
GM_API void gm_mask_free(gm_mask* mask);
GM_API gm_status gm_mask_dims(const gm_mask* mask, int* height, int* width);
GM_API const uint8_t* gm_mask_data(const gm_mask* mask);
GM_API gm_status gm_mask_count(const gm_mask* mask, size_t* count);
GM_API gm_status gm_mask_save(const gm_mask* mask, const char* path);
GM_API gm_status gm_mask_load(const char* path, gm_mask** out);

GM_API gm_status gm_conf_create(int height, int width,
                                const double* values /* nullable -> 0 */,
                                gm_conf** out);
GM_API void gm_conf_free(gm_conf* conf);
GM_API gm_status gm_conf_dims(const gm_conf* conf, int* height, int* width);
GM_API const double* gm_conf_data(const gm_conf* conf);
GM_API gm_status gm_conf_save(const gm_conf* conf, const char* path);
GM_API gm_status gm_conf_load(const char* path, gm_conf** out);

GM_API gm_status gm_field_create(int height, int width, gm_field** out);
GM_API gm_status gm_field_identity(int height, int width, gm_field** out);
GM_API void gm_field_free(gm_field* field);
GM_API gm_status gm_field_dims(const gm_field* field, int* height, int* width);
GM_API gm_status gm_field_set(gm_field* field, int i, int j, double x, double y,
                              int valid);
GM_API gm_status gm_field_get(const gm_field* field, int i, int j, double* x,
                              double* y, int* valid);
GM_API gm_status gm_field_save(const gm_field* field, const char* path);
GM_API gm_status gm_field_load(const char* path, gm_field** out);
/* Validity bits as a mask handle. */
GM_API gm_status gm_field_valid_mask(const gm_field* field, gm_mask** out);

GM_API gm_status gm_depth_create(int height, int width,
                                 const double* depth /* nullable */,
                                 const uint8_t* valid /* nullable */,
                                 gm_depth** out);
GM_API void gm_depth_free(gm_depth* depth);
GM_API gm_status gm_depth_dims(const gm_depth* depth, int* height, int* width);
GM_API gm_status gm_depth_get(const gm_depth* depth, int i, int j, double* d,
                              int* valid);
GM_API gm_status gm_depth_valid_mask(const gm_depth* depth, gm_mask** out);
GM_API gm_status gm_depth_save(const gm_depth* depth, const char* path);
GM_API gm_status gm_depth_load(const char* path, gm_depth** out);

GM_API void gm_normals_free(gm_normals* normals);
GM_API gm_status gm_normals_dims(const gm_normals* normals, int* height,
                                 int* width);
GM_API gm_status gm_normals_get(const gm_normals* normals, int i, int j,
                                double n[3], int* valid);
GM_API gm_status gm_normals_valid_mask(const gm_normals* normals, gm_mask** out);
GM_API gm_status gm_normals_save(const gm_normals* normals, const char* path);
GM_API gm_status gm_normals_load(const char* path, gm_normals** out);

/* ---- grid operations ----------------------------------------------------- */

/* coords: n pairs (x, y). out_values: n*channels doubles; out_valid: n bytes. */
GM_API gm_status gm_bilinear_sample(const gm_map* map, const double* coords,
                                    int n, int border_policy,
                                    double* out_values, uint8_t* out_valid);
GM_API gm_status gm_warp_reconstruct(const gm_map* support,
                                     const gm_field* field, const gm_conf* conf,
                                     double conf_threshold, gm_map** out);
GM_API gm_status gm_fb_consistency(const gm_field* forward,
                                   const gm_field* backward, double tau_px,
                                   gm_mask** out);
GM_API gm_status gm_recon_metrics(const gm_map* a, const gm_map* b,
                                  const gm_mask* mask, double* l1,
                                  double* one_minus_ssim);

/* ---- camera geometry ------------------------------------------------------ */

GM_API gm_status gm_backproject(const gm_intrinsics* K, double x, double y,
                                double depth, double out_point[3]);
GM_API gm_status gm_project(const gm_intrinsics* K, const double point[3],
                            double out_pixel[2], double* out_depth);
GM_API gm_status gm_gt_correspondence(const gm_depth* depth1,
                                      const gm_depth* depth2,
                                      const gm_intrinsics* K1,
                                      const gm_intrinsics* K2,
                                      const gm_pose* pose, double rel_depth_tau,
                                      gm_field** out);
GM_API gm_status gm_normals_from_depth(const gm_depth* depth,
                                       const gm_intrinsics* K,
                                       gm_normals** out);
GM_API gm_status gm_overlap_ratio(const gm_depth* depth1, const gm_depth* depth2,
                                  const gm_intrinsics* K1,
                                  const gm_intrinsics* K2, const gm_pose* pose,
                                  double rel_depth_tau, double* out);

/* ---- planar geometry ------------------------------------------------------ */

GM_API gm_status gm_pixel_homography(const double normal[3], double px,
                                     double py, double depth,
                                     const gm_pose* pose,
                                     const gm_intrinsics* K1,
                                     const gm_intrinsics* K2,
                                     double out_h[9] /* row-major */);
GM_API gm_status gm_planar_project(const double h[9], double x, double y,
                                   double out_xy[2]);
GM_API gm_status gm_point_plane_distance(const double normal[3], double px,
                                         double py, double dp, double qx,
                                         double qy, double dq,
                                         const gm_intrinsics* K1, double* out);
GM_API gm_status gm_coplanar_indicator(const gm_mask* valid, int k,
                                       uint64_t seed, const gm_normals* normals,
                                       const gm_depth* depth,
                                       const gm_field* gt,
                                       const gm_intrinsics* K1,
                                       const gm_intrinsics* K2,
                                       const gm_pose* pose, double k1, double k2,
                                       double k3, int literal_form,
                                       gm_indicator** out);
GM_API void gm_indicator_free(gm_indicator* indicator);
GM_API gm_status gm_indicator_size(const gm_indicator* indicator, int* k);
GM_API gm_status gm_indicator_at(const gm_indicator* indicator, int m, int n,
                                 int* set);
GM_API gm_status gm_indicator_count(const gm_indicator* indicator,
                                    size_t* count);
GM_API gm_status gm_indicator_anchor(const gm_indicator* indicator, int m,
                                     int out_xy[2]);
GM_API gm_status gm_indicator_candidate(const gm_indicator* indicator, int m,
                                        int n, int out_xy[2]);
GM_API gm_status gm_indicator_save(const gm_indicator* indicator,
                                   const char* path);
GM_API gm_status gm_indicator_load(const char* path, gm_indicator** out);

/* ---- correlation-volume matching ------------------------------------------ */

GM_API gm_status gm_features_create(int h, int w, int dim, const double* values,
                                    gm_features** out);
GM_API void gm_features_free(gm_features* features);
GM_API gm_status gm_patch_features(const gm_map* image, int scale,
                                   int normalize, gm_features** out);
GM_API gm_status gm_correlation_volume(const gm_features* f1,
                                       const gm_features* f2, double gamma,
                                       gm_volume** out);
GM_API void gm_volume_free(gm_volume* volume);
GM_API gm_status gm_volume_size(const gm_volume* volume, int* n);
GM_API gm_status gm_volume_save(const gm_volume* volume, const char* path);
GM_API gm_status gm_volume_load(const char* path, gm_volume** out);
/* Row-softmax / dual-softmax matrices come back as n x n single-channel maps. */
GM_API gm_status gm_softmax_rows(const gm_volume* volume, gm_map** out);
GM_API gm_status gm_dual_softmax(const gm_volume* volume, gm_map** out);
/* soft: n x n map over a coarse (h, w) grid at `scale`. */
GM_API gm_status gm_coarse_match(const gm_map* soft, int h, int w, int scale,
                                 gm_field** out);
GM_API gm_status gm_positional_embedding(int h, int w, int scale, int d_pos,
                                         gm_map** out /* n x d_pos */);
GM_API gm_status gm_aggregate_embedded(const gm_map* soft,
                                       const gm_map* embedding, gm_map** out);
GM_API gm_status gm_mutual_nn_matches(const gm_map* dual, double score_min,
                                      gm_matchlist** out);
GM_API void gm_matchlist_free(gm_matchlist* list);
GM_API gm_status gm_matchlist_size(const gm_matchlist* list, int* n);
GM_API gm_status gm_matchlist_get(const gm_matchlist* list, int idx, int* i,
                                  int* k, double* score);

/* ---- losses ---------------------------------------------------------------- */

GM_API gm_status gm_mim_loss(const gm_map* const* recons1,
                             const gm_map* const* recons2, int n_scales,
                             const gm_map* target1, const gm_map* target2,
                             const gm_mask* mask1, const gm_mask* mask2,
                             int mode, double* out);
GM_API gm_status gm_homography_loss(const gm_field* pred, const gm_field* gt,
                                    const gm_indicator* indicator, double* out);
GM_API gm_status gm_global_matching_loss(const gm_map* dual,
                                         const int* positives, int n_pos,
                                         const int* negatives, int n_neg,
                                         double eps, double* out);
GM_API gm_status gm_refinement_loss(const gm_field* pred, const gm_field* gt,
                                    const gm_mask* p_plus, double* out);
GM_API gm_status gm_confidence_loss(const gm_conf* conf, const gm_mask* p_plus,
                                    const gm_mask* p_minus, double eps,
                                    double* out);
GM_API gm_status gm_total_loss(const double per_scale_r[4],
                               const double per_scale_c[4], double l_g,
                               const double per_scale_h[4], double w_c,
                               double w_g, double w_h, double* out);
/* Positive/negative cell pairs from a ground-truth field; arrays are
 * flattened (i, k) pairs. Query counts first with null buffers. */
GM_API gm_status gm_make_match_supervision(const gm_field* gt, int coarse_h,
                                           int coarse_w, int scale,
                                           int* positives /* nullable */,
                                           int* n_pos,
                                           int* negatives /* nullable */,
                                           int* n_neg);

/* ---- paired-MIM masking ----------------------------------------------------- */

GM_API gm_status gm_gen_mask(int image_h, int image_w, int patch, double ratio,
                             uint64_t seed, gm_patchmask** out);
GM_API void gm_patchmask_free(gm_patchmask* mask);
GM_API gm_status gm_patchmask_selected(const gm_patchmask* mask,
                                       int* cells /* nullable */, int* count);
GM_API gm_status gm_mask_at_scale(const gm_patchmask* mask, int scale,
                                  gm_mask** out);
GM_API gm_status gm_apply_mask(const gm_map* map, const gm_mask* mask,
                               const double* token /* channels values */,
                               gm_map** out);

/* ---- pose estimation and metrics -------------------------------------------- */

GM_API gm_status gm_estimate_essential(const gm_match* matches, int n,
                                       const gm_intrinsics* K1,
                                       const gm_intrinsics* K2,
                                       double inlier_px, int max_iters,
                                       uint64_t seed, int solver,
                                       double out_e[9] /* row-major */,
                                       uint8_t* out_inliers /* nullable, n */,
                                       int* out_n_inliers);
GM_API gm_status gm_decompose_essential(const double e[9],
                                        const gm_match* matches, int n,
                                        const gm_intrinsics* K1,
                                        const gm_intrinsics* K2, gm_pose* out,
                                        int* out_n_cheiral /* nullable */,
                                        int* out_reliable /* nullable */);
GM_API gm_status gm_compute_pose_error(const gm_pose* estimated,
                                       const gm_pose* truth,
                                       gm_pose_error* out);
GM_API gm_status gm_auc(const double* errors, int n, const double* thresholds,
                        int n_thresholds, double* out);
GM_API gm_status gm_map_at(const double* errors, int n,
                           const double* thresholds, int n_thresholds,
                           double* out);
GM_API gm_status gm_pck(const gm_field* pred, const gm_field* gt,
                        const gm_mask* mask, const double* deltas, int n_deltas,
                        double* out);
GM_API gm_status gm_homography_corner_error(const double h_est[9],
                                            const double h_gt[9], int image_h,
                                            int image_w, double* out);
GM_API gm_status gm_estimate_homography(const gm_match* matches, int n,
                                        double inlier_px, int max_iters,
                                        uint64_t seed,
                                        double out_h[9] /* row-major */,
                                        uint8_t* out_inliers /* nullable */,
                                        int* out_n_inliers /* nullable */);

/* ---- synthetic scenes -------------------------------------------------------- */

/* spec_json:
 * {"height":H,"width":W,"channels":C,
 *  "intrinsics":{"fx":..,"fy":..,"cx":..,"cy":..},
 *  "planes":[{"normal":[3],"offset":d,"texture_seed":s,"texture_scale":f}],
 *  "views":[{"R":[9],"t":[3]}]}   // world-to-camera per view
 */
GM_API gm_status gm_synth_scene(const char* spec_json, gm_scene** out);
GM_API void gm_scene_free(gm_scene* scene);
GM_API gm_status gm_scene_view_count(const gm_scene* scene, int* count);
GM_API gm_status gm_scene_image(const gm_scene* scene, int view, gm_map** out);
GM_API gm_status gm_scene_depth(const gm_scene* scene, int view, gm_depth** out);
GM_API gm_status gm_scene_normals(const gm_scene* scene, int view,
                                  gm_normals** out);
GM_API gm_status gm_scene_intrinsics(const gm_scene* scene, int view,
                                     gm_intrinsics* out);
GM_API gm_status gm_scene_world_pose(const gm_scene* scene, int view,
                                     gm_pose* out);
GM_API gm_status gm_scene_relative_pose(const gm_scene* scene, int view_a,
                                        int view_b, gm_pose* out);
/* Plane index per pixel (-1 where nothing is visible); buf holds h*w ints. */
GM_API gm_status gm_scene_plane_ids(const gm_scene* scene, int view,
                                    int32_t* buf);
/* Draw `count` view pairs with probability proportional to overlap ratio
 * inside [overlap_lo, overlap_hi]; out_pairs holds 2*count ints. */
GM_API gm_status gm_sample_pairs(const gm_scene* scene, double overlap_lo,
                                 double overlap_hi, int count,
                                 double rel_depth_tau, uint64_t seed,
                                 int* out_pairs);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* GEOMATCH_H */
