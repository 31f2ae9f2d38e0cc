#include "core/synth.hpp"

#include <Eigen/Geometry>
#include <cmath>
#include <limits>

#include "core/rng.hpp"

namespace gm {

namespace {

uint64_t hash_mix(uint64_t x) {
  // SplitMix64 finalizer.
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double lattice_value(uint64_t seed, int64_t ix, int64_t iy) {
  uint64_t h = hash_mix(seed ^ hash_mix(static_cast<uint64_t>(ix) * 0x9e3779b97f4a7c15ULL ^
                                        static_cast<uint64_t>(iy)));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

// Two-octave value noise in [0, 1).
double value_noise(uint64_t seed, double u, double v) {
  double out = 0.0;
  double amp = 0.75;
  double freq = 1.0;
  for (int octave = 0; octave < 2; ++octave) {
    double x = u * freq, y = v * freq;
    int64_t ix = static_cast<int64_t>(std::floor(x));
    int64_t iy = static_cast<int64_t>(std::floor(y));
    double fx = smoothstep(x - ix);
    double fy = smoothstep(y - iy);
    double v00 = lattice_value(seed + octave, ix, iy);
    double v01 = lattice_value(seed + octave, ix + 1, iy);
    double v10 = lattice_value(seed + octave, ix, iy + 1);
    double v11 = lattice_value(seed + octave, ix + 1, iy + 1);
    double top = v00 + fx * (v01 - v00);
    double bot = v10 + fx * (v11 - v10);
    out += amp * (top + fy * (bot - top));
    amp *= 0.25;
    freq *= 4.0;
  }
  return out;
}

// Orthonormal in-plane axes for texture coordinates.
void plane_basis(const Eigen::Vector3d& n, Eigen::Vector3d& u,
                 Eigen::Vector3d& v) {
  Eigen::Vector3d a = std::abs(n.x()) < 0.9 ? Eigen::Vector3d(1, 0, 0)
                                            : Eigen::Vector3d(0, 1, 0);
  u = n.cross(a).normalized();
  v = n.cross(u).normalized();
}

}  // namespace

std::vector<SceneView> synth_scene(const SceneSpec& spec) {
  require(!spec.planes.empty(), ErrorCode::InvalidArgument,
          "synth_scene: no planes");
  require(!spec.world_to_camera.empty(), ErrorCode::InvalidArgument,
          "synth_scene: no cameras");
  require(spec.height > 0 && spec.width > 0 && spec.channels > 0,
          ErrorCode::InvalidArgument, "synth_scene: bad image size");
  for (const PlaneSpec& plane : spec.planes)
    require(std::abs(plane.normal.norm() - 1.0) < 1e-9,
            ErrorCode::InvalidArgument,
            "synth_scene: plane normals must be unit length");

  std::vector<SceneView> views;
  std::vector<size_t> plane_hits(spec.planes.size(), 0);
  for (const RigidPose& pose : spec.world_to_camera) {
    SceneView view;
    view.intrinsics = spec.intrinsics;
    view.world_to_camera = pose;
    view.image = DenseMap(spec.height, spec.width, spec.channels, 255.0);
    view.depth = DepthMap(spec.height, spec.width);
    view.normals = NormalMap(spec.height, spec.width);
    view.plane_id.assign(static_cast<size_t>(spec.height) * spec.width, -1);

    RigidPose cam_to_world = pose.inverse();
    Eigen::Vector3d origin = cam_to_world.t;

    size_t n_valid = 0;
    for (int i = 0; i < spec.height; ++i) {
      for (int j = 0; j < spec.width; ++j) {
        // Unit-depth ray through the pixel, rotated into world coordinates.
        Eigen::Vector3d ray_cam((j - spec.intrinsics.cx) / spec.intrinsics.fx,
                                (i - spec.intrinsics.cy) / spec.intrinsics.fy,
                                1.0);
        Eigen::Vector3d ray_world = cam_to_world.R * ray_cam;

        double best_s = std::numeric_limits<double>::infinity();
        int best_plane = -1;
        for (size_t p = 0; p < spec.planes.size(); ++p) {
          const PlaneSpec& plane = spec.planes[p];
          double denom = plane.normal.dot(ray_world);
          if (std::abs(denom) < 1e-15) continue;
          double s = (plane.offset - plane.normal.dot(origin)) / denom;
          if (s <= 1e-12) continue;
          if (s < best_s) {
            best_s = s;
            best_plane = static_cast<int>(p);
          }
        }
        if (best_plane < 0) continue;

        const PlaneSpec& plane = spec.planes[best_plane];
        // Ray has unit z in camera coordinates, so the parameter is depth.
        view.depth.set(i, j, best_s);
        view.plane_id[view.depth.index(i, j)] = best_plane;
        ++plane_hits[best_plane];
        ++n_valid;

        Eigen::Vector3d n_cam = pose.R * plane.normal;
        if (n_cam.dot(ray_cam) > 0.0) n_cam = -n_cam;
        view.normals.set(i, j, n_cam.x(), n_cam.y(), n_cam.z());

        Eigen::Vector3d hit = origin + best_s * ray_world;
        Eigen::Vector3d u, v;
        plane_basis(plane.normal, u, v);
        for (int c = 0; c < spec.channels; ++c) {
          double t = value_noise(plane.texture_seed + 7919ULL * c,
                                 u.dot(hit) * plane.texture_scale,
                                 v.dot(hit) * plane.texture_scale);
          view.image.at(i, j, c) = 255.0 * t;
        }
      }
    }
    require(n_valid > 0, ErrorCode::Degenerate,
            "synth_scene: a view sees no plane");
    views.push_back(std::move(view));
  }
  for (size_t p = 0; p < spec.planes.size(); ++p)
    require(plane_hits[p] > 0, ErrorCode::Degenerate,
            "synth_scene: a plane is behind every camera");
  return views;
}

RigidPose relative_pose(const SceneView& a, const SceneView& b) {
  return b.world_to_camera.compose(a.world_to_camera.inverse());
}

std::vector<std::pair<int, int>> sample_pairs(
    const std::vector<SceneView>& views, double overlap_lo, double overlap_hi,
    int count, double rel_depth_tau, uint64_t seed) {
  require(views.size() >= 2, ErrorCode::InsufficientData,
          "sample_pairs: need at least two views");
  require(count > 0, ErrorCode::InvalidArgument,
          "sample_pairs: count must be positive");
  std::vector<std::pair<int, int>> qualifying;
  std::vector<double> weights;
  for (size_t a = 0; a < views.size(); ++a) {
    for (size_t b = a + 1; b < views.size(); ++b) {
      double ov = overlap_ratio(views[a].depth, views[b].depth,
                                views[a].intrinsics, views[b].intrinsics,
                                relative_pose(views[a], views[b]),
                                rel_depth_tau);
      if (ov < overlap_lo || ov > overlap_hi) continue;
      qualifying.emplace_back(static_cast<int>(a), static_cast<int>(b));
      weights.push_back(ov);
    }
  }
  require(!qualifying.empty(), ErrorCode::InsufficientData,
          "sample_pairs: no pair inside the overlap range");
  double total = 0.0;
  for (double w : weights) total += w;
  require(total > 0.0, ErrorCode::InsufficientData,
          "sample_pairs: qualifying pairs all have zero overlap");

  std::vector<std::pair<int, int>> out;
  Pcg32 rng(seed);
  for (int d = 0; d < count; ++d) {
    double target = rng.next_double() * total;
    double acc = 0.0;
    size_t pick = qualifying.size() - 1;
    for (size_t q = 0; q < qualifying.size(); ++q) {
      acc += weights[q];
      if (target < acc) {
        pick = q;
        break;
      }
    }
    out.push_back(qualifying[pick]);
  }
  return out;
}

FeatureVolume patch_features(const DenseMap& image, int scale, bool normalize) {
  require(scale > 0 && image.height % scale == 0 && image.width % scale == 0,
          ErrorCode::InvalidArgument,
          "patch_features: scale must divide the image dimensions");
  FeatureVolume vol(image.height / scale, image.width / scale,
                    scale * scale * image.channels);
  for (int r = 0; r < vol.h; ++r) {
    for (int c = 0; c < vol.w; ++c) {
      double* f = vol.cell(r * vol.w + c);
      int d = 0;
      for (int di = 0; di < scale; ++di)
        for (int dj = 0; dj < scale; ++dj)
          for (int k = 0; k < image.channels; ++k)
            f[d++] = image.at(r * scale + di, c * scale + dj, k);
      if (normalize) {
        double norm = 0.0;
        for (int h = 0; h < vol.dim; ++h) norm += f[h] * f[h];
        norm = std::sqrt(norm);
        if (norm > 0.0)
          for (int h = 0; h < vol.dim; ++h) f[h] /= norm;
      }
    }
  }
  return vol;
}

}  // namespace gm
