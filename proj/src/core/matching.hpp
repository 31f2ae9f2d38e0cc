#pragma once

#include <Eigen/Core>
#include <vector>

#include "core/types.hpp"

namespace gm {

// Per-cell feature vectors on a coarse grid (row-major cells).
struct FeatureVolume {
  int h = 0;
  int w = 0;
  int dim = 0;
  std::vector<double> values;

  FeatureVolume() = default;
  FeatureVolume(int h_, int w_, int dim_) : h(h_), w(w_), dim(dim_) {
    require(h > 0 && w > 0 && dim > 0, ErrorCode::InvalidArgument,
            "FeatureVolume dimensions must be positive");
    values.assign(static_cast<size_t>(h) * w * dim, 0.0);
  }

  int cells() const { return h * w; }
  double* cell(int idx) { return values.data() + static_cast<size_t>(idx) * dim; }
  const double* cell(int idx) const {
    return values.data() + static_cast<size_t>(idx) * dim;
  }
};

// n x n matrix of inner products scaled by 1/gamma; index (i, k) pairs
// source cell i with support cell k, cells flattened row-major.
struct CorrelationVolume {
  int n = 0;
  double gamma = 1.0;
  Eigen::MatrixXd matrix;
};

// Coarse-cell centers in full-resolution pixels: cell (r, c) at scale s
// sits at (s*(c + 0.5), s*(r + 0.5)).
struct CoordGrid {
  int h = 0;
  int w = 0;
  Eigen::MatrixX2d coords;  // n x 2, (x, y)
};

CoordGrid make_coord_grid(int h, int w, int scale);

struct PositionalEmbedding {
  Eigen::MatrixXd values;  // n x d_pos, entries in [-1, 1]
};

CorrelationVolume correlation_volume(const FeatureVolume& f1,
                                     const FeatureVolume& f2, double gamma);

// Row-stochastic softmax with row-max stabilization.
Eigen::MatrixXd softmax_rows(const CorrelationVolume& c);

// Expected support coordinate per source cell, T*[i] = sum_k soft[i][k] X[k].
// Ambiguous when the softmaxed row is multimodal; the embedding route below
// exists to resolve exactly that.
CorrespondenceField coarse_match_naive(const Eigen::MatrixXd& c_soft,
                                       const CoordGrid& grid);

// Sinusoidal embedding of the 2D grid coordinates: per axis, sine/cosine
// pairs with wavelengths geometric between 2*pi and 1e4*2*pi; x channels
// first, then y. d_pos must be divisible by 4.
PositionalEmbedding positional_embedding(const CoordGrid& grid, int d_pos);

// Correlation-weighted mixture of candidate embeddings, soft * M.
Eigen::MatrixXd aggregate_embedded(const Eigen::MatrixXd& c_soft,
                                   const PositionalEmbedding& m);

// Elementwise product of row-softmax and column-softmax.
Eigen::MatrixXd dual_softmax(const CorrelationVolume& c);

struct MutualMatch {
  int i = 0;
  int k = 0;
  double score = 0.0;
};

// Pairs that are the argmax of both their row and their column with score
// at least score_min; ties broken toward the lowest index.
std::vector<MutualMatch> mutual_nn_matches(const Eigen::MatrixXd& c_dual,
                                           double score_min);

}  // namespace gm
