#pragma once

#include <Eigen/Core>
#include <array>
#include <functional>
#include <utility>
#include <vector>

#include "core/planar.hpp"
#include "core/types.hpp"

namespace gm {

// Sparse positive/negative cell-pair supervision over the n x n coarse grid.
struct MatchSupervision {
  std::vector<std::pair<int, int>> positives;
  std::vector<std::pair<int, int>> negatives;
};

struct LossWeights {
  double w_c = 1.0;
  double w_g = 0.7;
  double w_h = 0.05;
  std::array<int, 4> scales{1, 2, 4, 8};
};

enum class MimMode {
  MaskedOnly,  // sum over masked pixels, divide by the masked count
  AllPixels,   // sum over every pixel, divide by the unmasked count
};

// Sum over scales of the per-image mean absolute reconstruction error.
// Each image pair is masked independently; each image normalizes by its own
// pixel count (and channel count) under the selected mode.
double mim_loss(const std::vector<const DenseMap*>& recons1,
                const std::vector<const DenseMap*>& recons2,
                const DenseMap& target1, const DenseMap& target2,
                const BoolMask& mask1, const BoolMask& mask2, MimMode mode);

// Relative-displacement penalty over co-planar pairs:
// mean over O+ = 1 of |(T_p - T_q) - (Tgt_p - Tgt_q)|_1, fields sampled
// bilinearly at the anchor/candidate coordinates. Zero when O+ is empty.
double homography_loss(const CorrespondenceField& T,
                       const CorrespondenceField& T_gt,
                       const IndicatorMatrix& o_plus,
                       const CoplanarSampleSet& samples);

// Binary cross-entropy over the dual-softmax volume. An empty set drops its
// term; both sets empty is an error.
double global_matching_loss(const Eigen::MatrixXd& c_dual,
                            const MatchSupervision& sup, double eps);

// Mean L2 correspondence error over P+.
double refinement_loss(const CorrespondenceField& T,
                       const CorrespondenceField& T_gt, const BoolMask& p_plus);

// BCE on the confidence map over disjoint P+ / P-.
double confidence_loss(const ConfidenceMap& P, const BoolMask& p_plus,
                       const BoolMask& p_minus, double eps);

// (1/4) sum_s (L_r + w_c L_c) + w_g L_g + (1/4) w_h sum_s L_h over the four
// scales {1, 2, 4, 8}.
double total_loss(const std::array<double, 4>& per_scale_r,
                  const std::array<double, 4>& per_scale_c, double l_g,
                  const std::array<double, 4>& per_scale_h,
                  const LossWeights& weights);

// Positive pairs: coarse cell i maps to cell k when the ground-truth
// correspondence of cell i's center, rounded to the nearest coarse cell of
// the support grid, is k. Negatives fill the rows and columns touched by a
// positive.
MatchSupervision make_match_supervision(const CorrespondenceField& t_gt,
                                        int coarse_h, int coarse_w, int scale);

// A scalar objective with its closed-form gradient, both over a flat
// parameter vector. Used by the finite-difference verification harness.
struct Objective {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
};

// Parameters: correspondence coordinates flattened (x, y) per pixel.
Objective refinement_objective(const CorrespondenceField& t_gt,
                               const BoolMask& p_plus);
// Parameters: confidence values flattened per pixel.
Objective confidence_objective(const BoolMask& p_plus, const BoolMask& p_minus,
                               double eps, int height, int width);
// Parameters: dual-softmax entries flattened row-major over an n x n grid.
Objective global_matching_objective(const MatchSupervision& sup, double eps,
                                    int n);

struct GradientCheck {
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_err = 0.0;
};

// Central-difference check of the directional derivative at `point` along
// `direction` with step h. The caller keeps the point away from L1 kinks
// and argmax ties.
GradientCheck fd_gradient_check(const Objective& objective,
                                const Eigen::VectorXd& point,
                                const Eigen::VectorXd& direction, double h);

}  // namespace gm
