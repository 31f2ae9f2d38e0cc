#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "core/types.hpp"

namespace gm {

// Sampling geometry: pixel (i, j) sits at continuous coordinates
// (x = j, y = i); coordinate pairs are (x, y) everywhere.
enum class BorderPolicy { Invalid, Clamp };

struct SampleBatch {
  int channels = 0;
  std::vector<double> values;  // channels per query, zero-filled when invalid
  std::vector<uint8_t> valid;
};

SampleBatch bilinear_sample(const DenseMap& map,
                            const std::vector<Eigen::Vector2d>& coords,
                            BorderPolicy policy = BorderPolicy::Invalid);

// Single-query form; `out` receives map.channels values.
bool bilinear_sample_one(const DenseMap& map, double x, double y,
                         BorderPolicy policy, double* out);

// Bilinear lookup of a correspondence field. Requires the four surrounding
// texels to be valid; returns nullopt otherwise or out of bounds.
std::optional<Eigen::Vector2d> field_sample(const CorrespondenceField& f,
                                            double x, double y);

// Interpolated depth with the same all-valid-neighbors rule.
std::optional<double> depth_sample(const DepthMap& d, double x, double y);

// Rebuild the source image by sampling `support` at T wherever T is valid
// and P >= conf_threshold; everything else is filled with white (255).
DenseMap warp_reconstruct(const DenseMap& support, const CorrespondenceField& T,
                          const ConfidenceMap& P, double conf_threshold);

// True where the backward field, sampled at the forward target, returns
// within tau_px of the starting pixel and both lookups are valid.
BoolMask fb_consistency(const CorrespondenceField& T_fwd,
                        const CorrespondenceField& T_bwd, double tau_px);

struct ReconMetrics {
  double l1 = 0.0;
  double one_minus_ssim = 0.0;
};

// Mean absolute difference plus 1 - SSIM over masked pixels. SSIM uses an
// 11x11 Gaussian window (sigma 1.5), C1 = (0.01*255)^2, C2 = (0.03*255)^2,
// computed per channel and averaged; windows must fit fully inside the map.
ReconMetrics recon_metrics(const DenseMap& a, const DenseMap& b,
                           const BoolMask& mask);

}  // namespace gm
