#include "core/grid_ops.hpp"

#include <algorithm>
#include <cmath>

namespace gm {

namespace {

struct BilinearWeights {
  int i0, i1, j0, j1;
  double w00, w01, w10, w11;  // (i0,j0), (i0,j1), (i1,j0), (i1,j1)
};

// Assumes (x, y) already inside [0, W-1] x [0, H-1].
BilinearWeights weights_at(int height, int width, double x, double y) {
  BilinearWeights w;
  int j0 = static_cast<int>(std::floor(x));
  int i0 = static_cast<int>(std::floor(y));
  j0 = std::clamp(j0, 0, std::max(width - 2, 0));
  i0 = std::clamp(i0, 0, std::max(height - 2, 0));
  double fx = x - j0;
  double fy = y - i0;
  w.j0 = j0;
  w.i0 = i0;
  w.j1 = std::min(j0 + 1, width - 1);
  w.i1 = std::min(i0 + 1, height - 1);
  w.w00 = (1.0 - fy) * (1.0 - fx);
  w.w01 = (1.0 - fy) * fx;
  w.w10 = fy * (1.0 - fx);
  w.w11 = fy * fx;
  return w;
}

bool in_bounds(int height, int width, double x, double y) {
  return x >= 0.0 && x <= width - 1 && y >= 0.0 && y <= height - 1;
}

}  // namespace

bool bilinear_sample_one(const DenseMap& map, double x, double y,
                         BorderPolicy policy, double* out) {
  require(!map.empty(), ErrorCode::InvalidArgument, "bilinear_sample: empty map");
  require(std::isfinite(x) && std::isfinite(y), ErrorCode::NumericError,
          "bilinear_sample: non-finite coordinate");
  if (!in_bounds(map.height, map.width, x, y)) {
    if (policy == BorderPolicy::Invalid) {
      std::fill(out, out + map.channels, 0.0);
      return false;
    }
    x = std::clamp(x, 0.0, static_cast<double>(map.width - 1));
    y = std::clamp(y, 0.0, static_cast<double>(map.height - 1));
  }
  BilinearWeights w = weights_at(map.height, map.width, x, y);
  for (int k = 0; k < map.channels; ++k) {
    out[k] = w.w00 * map.at(w.i0, w.j0, k) + w.w01 * map.at(w.i0, w.j1, k) +
             w.w10 * map.at(w.i1, w.j0, k) + w.w11 * map.at(w.i1, w.j1, k);
  }
  return true;
}

SampleBatch bilinear_sample(const DenseMap& map,
                            const std::vector<Eigen::Vector2d>& coords,
                            BorderPolicy policy) {
  require(!map.empty(), ErrorCode::InvalidArgument, "bilinear_sample: empty map");
  SampleBatch batch;
  batch.channels = map.channels;
  batch.values.assign(coords.size() * map.channels, 0.0);
  batch.valid.assign(coords.size(), 0);
  for (size_t q = 0; q < coords.size(); ++q) {
    bool ok = bilinear_sample_one(map, coords[q].x(), coords[q].y(), policy,
                                  batch.values.data() + q * map.channels);
    batch.valid[q] = ok ? 1 : 0;
  }
  return batch;
}

std::optional<Eigen::Vector2d> field_sample(const CorrespondenceField& f,
                                            double x, double y) {
  if (!std::isfinite(x) || !std::isfinite(y)) return std::nullopt;
  if (!in_bounds(f.height, f.width, x, y)) return std::nullopt;
  BilinearWeights w = weights_at(f.height, f.width, x, y);
  if (!f.is_valid(w.i0, w.j0) || !f.is_valid(w.i0, w.j1) ||
      !f.is_valid(w.i1, w.j0) || !f.is_valid(w.i1, w.j1))
    return std::nullopt;
  Eigen::Vector2d out;
  out.x() = w.w00 * f.x(w.i0, w.j0) + w.w01 * f.x(w.i0, w.j1) +
            w.w10 * f.x(w.i1, w.j0) + w.w11 * f.x(w.i1, w.j1);
  out.y() = w.w00 * f.y(w.i0, w.j0) + w.w01 * f.y(w.i0, w.j1) +
            w.w10 * f.y(w.i1, w.j0) + w.w11 * f.y(w.i1, w.j1);
  return out;
}

std::optional<double> depth_sample(const DepthMap& d, double x, double y) {
  if (!std::isfinite(x) || !std::isfinite(y)) return std::nullopt;
  if (!in_bounds(d.height, d.width, x, y)) return std::nullopt;
  BilinearWeights w = weights_at(d.height, d.width, x, y);
  if (!d.is_valid(w.i0, w.j0) || !d.is_valid(w.i0, w.j1) ||
      !d.is_valid(w.i1, w.j0) || !d.is_valid(w.i1, w.j1))
    return std::nullopt;
  return w.w00 * d.at(w.i0, w.j0) + w.w01 * d.at(w.i0, w.j1) +
         w.w10 * d.at(w.i1, w.j0) + w.w11 * d.at(w.i1, w.j1);
}

DenseMap warp_reconstruct(const DenseMap& support, const CorrespondenceField& T,
                          const ConfidenceMap& P, double conf_threshold) {
  require(!support.empty(), ErrorCode::InvalidArgument,
          "warp_reconstruct: empty support map");
  require(T.height == P.height && T.width == P.width,
          ErrorCode::DimensionMismatch,
          "warp_reconstruct: field/confidence dimensions differ");
  const double kWhite = 255.0;
  DenseMap out(T.height, T.width, support.channels, kWhite);
  std::vector<double> sample(support.channels);
  for (int i = 0; i < T.height; ++i) {
    for (int j = 0; j < T.width; ++j) {
      if (!T.is_valid(i, j) || P.at(i, j) < conf_threshold) continue;
      if (!bilinear_sample_one(support, T.x(i, j), T.y(i, j),
                               BorderPolicy::Invalid, sample.data()))
        continue;
      for (int k = 0; k < support.channels; ++k)
        out.at(i, j, k) = sample[k];
    }
  }
  return out;
}

BoolMask fb_consistency(const CorrespondenceField& T_fwd,
                        const CorrespondenceField& T_bwd, double tau_px) {
  BoolMask mask(T_fwd.height, T_fwd.width, false);
  for (int i = 0; i < T_fwd.height; ++i) {
    for (int j = 0; j < T_fwd.width; ++j) {
      if (!T_fwd.is_valid(i, j)) continue;
      auto back = field_sample(T_bwd, T_fwd.x(i, j), T_fwd.y(i, j));
      if (!back) continue;
      double dx = back->x() - j;
      double dy = back->y() - i;
      if (std::hypot(dx, dy) <= tau_px) mask.set(i, j, true);
    }
  }
  return mask;
}

namespace {

constexpr int kSsimWindow = 11;
constexpr int kSsimRadius = kSsimWindow / 2;
constexpr double kSsimSigma = 1.5;
constexpr double kSsimC1 = (0.01 * 255.0) * (0.01 * 255.0);
constexpr double kSsimC2 = (0.03 * 255.0) * (0.03 * 255.0);

const std::vector<double>& gaussian_kernel() {
  static const std::vector<double> kernel = [] {
    std::vector<double> k(kSsimWindow * kSsimWindow);
    double sum = 0.0;
    for (int di = -kSsimRadius; di <= kSsimRadius; ++di)
      for (int dj = -kSsimRadius; dj <= kSsimRadius; ++dj) {
        double v = std::exp(-(di * di + dj * dj) / (2.0 * kSsimSigma * kSsimSigma));
        k[(di + kSsimRadius) * kSsimWindow + (dj + kSsimRadius)] = v;
        sum += v;
      }
    for (double& v : k) v /= sum;
    return k;
  }();
  return kernel;
}

}  // namespace

ReconMetrics recon_metrics(const DenseMap& a, const DenseMap& b,
                           const BoolMask& mask) {
  require(a.same_shape(b), ErrorCode::DimensionMismatch,
          "recon_metrics: map shapes differ");
  require(mask.height == a.height && mask.width == a.width,
          ErrorCode::DimensionMismatch, "recon_metrics: mask shape differs");
  size_t n_masked = mask.count();
  require(n_masked > 0, ErrorCode::InsufficientData, "recon_metrics: empty mask");

  ReconMetrics m;
  double l1_sum = 0.0;
  for (int i = 0; i < a.height; ++i)
    for (int j = 0; j < a.width; ++j) {
      if (!mask.at(i, j)) continue;
      for (int k = 0; k < a.channels; ++k)
        l1_sum += std::abs(a.at(i, j, k) - b.at(i, j, k));
    }
  m.l1 = l1_sum / (static_cast<double>(n_masked) * a.channels);

  require(a.height >= kSsimWindow && a.width >= kSsimWindow,
          ErrorCode::InsufficientData,
          "recon_metrics: map smaller than the SSIM window");
  const auto& kernel = gaussian_kernel();
  double ssim_sum = 0.0;
  size_t ssim_count = 0;
  for (int i = kSsimRadius; i < a.height - kSsimRadius; ++i) {
    for (int j = kSsimRadius; j < a.width - kSsimRadius; ++j) {
      if (!mask.at(i, j)) continue;
      double ssim_px = 0.0;
      for (int k = 0; k < a.channels; ++k) {
        double mu_a = 0.0, mu_b = 0.0, aa = 0.0, bb = 0.0, ab = 0.0;
        int kk = 0;
        for (int di = -kSsimRadius; di <= kSsimRadius; ++di)
          for (int dj = -kSsimRadius; dj <= kSsimRadius; ++dj, ++kk) {
            double w = kernel[kk];
            double va = a.at(i + di, j + dj, k);
            double vb = b.at(i + di, j + dj, k);
            mu_a += w * va;
            mu_b += w * vb;
            aa += w * va * va;
            bb += w * vb * vb;
            ab += w * va * vb;
          }
        double var_a = aa - mu_a * mu_a;
        double var_b = bb - mu_b * mu_b;
        double cov = ab - mu_a * mu_b;
        double num = (2.0 * mu_a * mu_b + kSsimC1) * (2.0 * cov + kSsimC2);
        double den = (mu_a * mu_a + mu_b * mu_b + kSsimC1) *
                     (var_a + var_b + kSsimC2);
        ssim_px += num / den;
      }
      ssim_sum += ssim_px / a.channels;
      ++ssim_count;
    }
  }
  require(ssim_count > 0, ErrorCode::InsufficientData,
          "recon_metrics: no masked pixel admits a full SSIM window");
  m.one_minus_ssim = 1.0 - ssim_sum / static_cast<double>(ssim_count);
  return m;
}

}  // namespace gm
