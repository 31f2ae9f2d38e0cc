#include "core/matching.hpp"

#include <cmath>

namespace gm {

CoordGrid make_coord_grid(int h, int w, int scale) {
  require(h > 0 && w > 0 && scale > 0, ErrorCode::InvalidArgument,
          "make_coord_grid: dimensions must be positive");
  CoordGrid g;
  g.h = h;
  g.w = w;
  g.coords.resize(h * w, 2);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      g.coords(r * w + c, 0) = scale * (c + 0.5);
      g.coords(r * w + c, 1) = scale * (r + 0.5);
    }
  return g;
}

CorrelationVolume correlation_volume(const FeatureVolume& f1,
                                     const FeatureVolume& f2, double gamma) {
  require(gamma > 0.0, ErrorCode::InvalidArgument,
          "correlation_volume: gamma must be positive");
  require(f1.h == f2.h && f1.w == f2.w && f1.dim == f2.dim,
          ErrorCode::DimensionMismatch,
          "correlation_volume: feature volumes differ in shape");
  const int n = f1.cells();
  CorrelationVolume vol;
  vol.n = n;
  vol.gamma = gamma;
  vol.matrix.resize(n, n);
  for (int i = 0; i < n; ++i) {
    const double* a = f1.cell(i);
    for (int k = 0; k < n; ++k) {
      const double* b = f2.cell(k);
      double dot = 0.0;
      for (int h = 0; h < f1.dim; ++h) dot += a[h] * b[h];
      vol.matrix(i, k) = dot / gamma;
    }
  }
  return vol;
}

Eigen::MatrixXd softmax_rows(const CorrelationVolume& c) {
  require(c.matrix.allFinite(), ErrorCode::NumericError,
          "softmax_rows: non-finite correlation entries");
  Eigen::MatrixXd out(c.matrix.rows(), c.matrix.cols());
  for (Eigen::Index i = 0; i < c.matrix.rows(); ++i) {
    double m = c.matrix.row(i).maxCoeff();
    Eigen::ArrayXd e = (c.matrix.row(i).array() - m).exp();
    out.row(i) = (e / e.sum()).matrix();
  }
  return out;
}

CorrespondenceField coarse_match_naive(const Eigen::MatrixXd& c_soft,
                                       const CoordGrid& grid) {
  require(c_soft.cols() == grid.coords.rows() &&
              c_soft.rows() == grid.coords.rows(),
          ErrorCode::DimensionMismatch,
          "coarse_match_naive: matrix and grid sizes differ");
  Eigen::MatrixX2d t = c_soft * grid.coords;
  CorrespondenceField field(grid.h, grid.w);
  for (int r = 0; r < grid.h; ++r)
    for (int c = 0; c < grid.w; ++c) {
      int i = r * grid.w + c;
      field.set(r, c, t(i, 0), t(i, 1));
    }
  return field;
}

PositionalEmbedding positional_embedding(const CoordGrid& grid, int d_pos) {
  require(d_pos > 0 && d_pos % 4 == 0, ErrorCode::InvalidArgument,
          "positional_embedding: d_pos must be a positive multiple of 4");
  const int n = static_cast<int>(grid.coords.rows());
  const int d_axis = d_pos / 2;
  const int n_pairs = d_axis / 2;
  PositionalEmbedding emb;
  emb.values.resize(n, d_pos);
  for (int i = 0; i < n; ++i) {
    for (int axis = 0; axis < 2; ++axis) {
      double pos = grid.coords(i, axis);
      for (int p = 0; p < n_pairs; ++p) {
        double freq = std::pow(10000.0, -2.0 * p / d_axis);
        emb.values(i, axis * d_axis + 2 * p) = std::sin(pos * freq);
        emb.values(i, axis * d_axis + 2 * p + 1) = std::cos(pos * freq);
      }
    }
  }
  return emb;
}

Eigen::MatrixXd aggregate_embedded(const Eigen::MatrixXd& c_soft,
                                   const PositionalEmbedding& m) {
  require(c_soft.cols() == m.values.rows(), ErrorCode::DimensionMismatch,
          "aggregate_embedded: matrix and embedding sizes differ");
  return c_soft * m.values;
}

Eigen::MatrixXd dual_softmax(const CorrelationVolume& c) {
  Eigen::MatrixXd rows = softmax_rows(c);
  CorrelationVolume transposed;
  transposed.n = c.n;
  transposed.gamma = c.gamma;
  transposed.matrix = c.matrix.transpose();
  Eigen::MatrixXd cols = softmax_rows(transposed).transpose();
  return rows.cwiseProduct(cols);
}

std::vector<MutualMatch> mutual_nn_matches(const Eigen::MatrixXd& c_dual,
                                           double score_min) {
  const Eigen::Index rows = c_dual.rows();
  const Eigen::Index cols = c_dual.cols();
  std::vector<Eigen::Index> row_best(rows), col_best(cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < cols; ++k)
      if (c_dual(i, k) > c_dual(i, best)) best = k;
    row_best[i] = best;
  }
  for (Eigen::Index k = 0; k < cols; ++k) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < rows; ++i)
      if (c_dual(i, k) > c_dual(best, k)) best = i;
    col_best[k] = best;
  }
  std::vector<MutualMatch> matches;
  for (Eigen::Index i = 0; i < rows; ++i) {
    Eigen::Index k = row_best[i];
    if (col_best[k] != i) continue;
    double score = c_dual(i, k);
    if (score < score_min) continue;
    matches.push_back({static_cast<int>(i), static_cast<int>(k), score});
  }
  return matches;
}

}  // namespace gm
