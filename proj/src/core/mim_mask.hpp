#pragma once

#include <cstdint>
#include <vector>

#include "core/matching.hpp"
#include "core/types.hpp"

namespace gm {

// Random patch selection over a cell grid of (image_h/patch) x
// (image_w/patch); selected holds row-major cell indices.
struct PatchMask {
  int image_h = 0;
  int image_w = 0;
  int patch = 32;
  double ratio = 0.75;
  uint64_t seed = 0;
  std::vector<int> selected;

  int cells_y() const { return image_h / patch; }
  int cells_x() const { return image_w / patch; }
  int cells() const { return cells_y() * cells_x(); }
};

// Uniformly samples round(ratio * cells) distinct cells (round half-up).
PatchMask gen_mask(int image_h, int image_w, int patch, double ratio,
                   uint64_t seed);

// Expands the cell selection to a boolean map at (image_h/scale) x
// (image_w/scale); each selected cell covers (patch/scale)^2 entries.
BoolMask mask_at_scale(const PatchMask& mask, int scale);

// out = f * (1 - w) + token * w per cell: masked cells become the token,
// unmasked cells are returned bit-identical.
DenseMap apply_mask(const DenseMap& f, const BoolMask& mask,
                    const std::vector<double>& token);
FeatureVolume apply_mask(const FeatureVolume& f, const BoolMask& mask,
                         const std::vector<double>& token);

}  // namespace gm
