#include "core/mim_mask.hpp"

#include <cmath>

#include "core/rng.hpp"

namespace gm {

PatchMask gen_mask(int image_h, int image_w, int patch, double ratio,
                   uint64_t seed) {
  require(patch > 0, ErrorCode::InvalidArgument,
          "gen_mask: patch size must be positive");
  require(image_h > 0 && image_w > 0 && image_h % patch == 0 &&
              image_w % patch == 0,
          ErrorCode::InvalidArgument,
          "gen_mask: patch must divide both image dimensions");
  require(ratio > 0.0 && ratio < 1.0, ErrorCode::InvalidArgument,
          "gen_mask: ratio must lie in (0, 1)");
  PatchMask mask;
  mask.image_h = image_h;
  mask.image_w = image_w;
  mask.patch = patch;
  mask.ratio = ratio;
  mask.seed = seed;

  const int cells = mask.cells();
  const int n_select = static_cast<int>(std::floor(ratio * cells + 0.5));
  std::vector<int> order(cells);
  for (int i = 0; i < cells; ++i) order[i] = i;
  Pcg32 rng(seed);
  for (int i = 0; i < n_select; ++i) {
    uint32_t pick = i + rng.next_below(static_cast<uint32_t>(cells - i));
    std::swap(order[i], order[pick]);
    mask.selected.push_back(order[i]);
  }
  return mask;
}

BoolMask mask_at_scale(const PatchMask& mask, int scale) {
  require(scale > 0 && mask.patch % scale == 0, ErrorCode::InvalidArgument,
          "mask_at_scale: scale must divide the patch size");
  const int block = mask.patch / scale;
  BoolMask out(mask.image_h / scale, mask.image_w / scale, false);
  for (int cell : mask.selected) {
    int cy = cell / mask.cells_x();
    int cx = cell % mask.cells_x();
    for (int di = 0; di < block; ++di)
      for (int dj = 0; dj < block; ++dj)
        out.set(cy * block + di, cx * block + dj, true);
  }
  return out;
}

namespace {

void apply_rows(const BoolMask& mask, int channels,
                const std::vector<double>& token, const double* in,
                double* out, int height, int width) {
  require(static_cast<int>(token.size()) == channels,
          ErrorCode::DimensionMismatch,
          "apply_mask: token dimension differs from channel count");
  require(mask.height == height && mask.width == width,
          ErrorCode::DimensionMismatch,
          "apply_mask: mask shape differs from the spatial shape");
  for (int i = 0; i < height; ++i)
    for (int j = 0; j < width; ++j) {
      size_t base = (static_cast<size_t>(i) * width + j) * channels;
      bool w = mask.at(i, j);
      for (int k = 0; k < channels; ++k)
        out[base + k] = w ? token[k] : in[base + k];
    }
}

}  // namespace

DenseMap apply_mask(const DenseMap& f, const BoolMask& mask,
                    const std::vector<double>& token) {
  DenseMap out(f.height, f.width, f.channels);
  apply_rows(mask, f.channels, token, f.values.data(), out.values.data(),
             f.height, f.width);
  return out;
}

FeatureVolume apply_mask(const FeatureVolume& f, const BoolMask& mask,
                         const std::vector<double>& token) {
  FeatureVolume out(f.h, f.w, f.dim);
  apply_rows(mask, f.dim, token, f.values.data(), out.values.data(), f.h, f.w);
  return out;
}

}  // namespace gm
