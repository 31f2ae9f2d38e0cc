#pragma once

// Test-only reference implementations. Everything here is written as the
// dumbest correct version of each quantity (brute-force loops, Monte-Carlo
// integration, exhaustive search) and stays independent of the library code
// paths it is used to check.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "core/camera.hpp"
#include "core/matching.hpp"
#include "core/rng.hpp"
#include "core/types.hpp"

namespace oracle {

// Per-pixel warp by explicit nested loops and hand-written bilinear weights.
inline gm::DenseMap warp_brute_force(const gm::DenseMap& support,
                                     const gm::CorrespondenceField& field,
                                     const gm::ConfidenceMap& conf,
                                     double threshold) {
  gm::DenseMap out(field.height, field.width, support.channels, 255.0);
  for (int i = 0; i < field.height; ++i) {
    for (int j = 0; j < field.width; ++j) {
      if (!field.is_valid(i, j) || conf.at(i, j) < threshold) continue;
      double x = field.x(i, j), y = field.y(i, j);
      if (x < 0 || x > support.width - 1 || y < 0 || y > support.height - 1)
        continue;
      int j0 = std::min(static_cast<int>(std::floor(x)), support.width - 2);
      int i0 = std::min(static_cast<int>(std::floor(y)), support.height - 2);
      j0 = std::max(j0, 0);
      i0 = std::max(i0, 0);
      double fx = x - j0, fy = y - i0;
      for (int k = 0; k < support.channels; ++k) {
        double v = (1 - fy) * ((1 - fx) * support.at(i0, j0, k) +
                               fx * support.at(i0, j0 + 1, k)) +
                   fy * ((1 - fx) * support.at(i0 + 1, j0, k) +
                         fx * support.at(i0 + 1, j0 + 1, k));
        out.at(i, j, k) = v;
      }
    }
  }
  return out;
}

// Quadruple-loop correlation volume.
inline Eigen::MatrixXd correlation_brute_force(const gm::FeatureVolume& f1,
                                               const gm::FeatureVolume& f2,
                                               double gamma) {
  int n = f1.cells();
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < f1.h; ++i)
    for (int j = 0; j < f1.w; ++j)
      for (int k = 0; k < f2.h; ++k)
        for (int l = 0; l < f2.w; ++l) {
          double dot = 0.0;
          for (int h = 0; h < f1.dim; ++h)
            dot += f1.cell(i * f1.w + j)[h] * f2.cell(k * f2.w + l)[h];
          m(i * f1.w + j, k * f2.w + l) = dot / gamma;
        }
  return m;
}

// Exhaustive mutual-argmax match set.
inline std::vector<std::pair<int, int>> mutual_argmax_brute_force(
    const Eigen::MatrixXd& m, double score_min) {
  std::vector<std::pair<int, int>> out;
  for (int i = 0; i < m.rows(); ++i) {
    for (int k = 0; k < m.cols(); ++k) {
      bool row_best = true, col_best = true;
      for (int kk = 0; kk < m.cols(); ++kk)
        if (m(i, kk) > m(i, k) || (m(i, kk) == m(i, k) && kk < k))
          row_best = row_best && kk == k;
      for (int ii = 0; ii < m.rows(); ++ii)
        if (m(ii, k) > m(i, k) || (m(ii, k) == m(i, k) && ii < i))
          col_best = col_best && ii == i;
      if (row_best && col_best && m(i, k) >= score_min) out.emplace_back(i, k);
    }
  }
  return out;
}

// Monte-Carlo integration of AUC@t = (1/t) int_0^t F(e) de against the
// empirical CDF. Stratified sampling (one uniform draw per equal-width
// stratum) keeps the estimator variance well below the comparison tolerance.
inline double auc_monte_carlo(const std::vector<double>& errors, double t,
                              int n_samples, uint64_t seed) {
  gm::Pcg32 rng(seed);
  double acc = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    double e = (s + rng.next_double()) / n_samples * t;
    int count = 0;
    for (double v : errors) count += v <= e ? 1 : 0;
    acc += static_cast<double>(count) / static_cast<double>(errors.size());
  }
  return acc / n_samples;
}

// Closed-form SSIM for two constant images.
inline double constant_image_ssim(double a, double b) {
  double c1 = (0.01 * 255.0) * (0.01 * 255.0);
  return (2.0 * a * b + c1) / (a * a + b * b + c1);
}

// Analytic depth of the plane n.X = off (camera frame) along pixel (x, y).
inline double plane_depth(const Eigen::Vector3d& n, double off,
                          const Eigen::Vector2d& px, const gm::Intrinsics& K) {
  Eigen::Vector3d ray((px.x() - K.cx) / K.fx, (px.y() - K.cy) / K.fy, 1.0);
  return off / n.dot(ray);
}

}  // namespace oracle
