#include "core/losses.hpp"

#include <cmath>

#include "core/grid_ops.hpp"

namespace gm {

namespace {

double image_term(const DenseMap& recon, const DenseMap& target,
                  const BoolMask& mask, MimMode mode) {
  require(recon.same_shape(target), ErrorCode::DimensionMismatch,
          "mim_loss: reconstruction and target shapes differ");
  require(mask.height == target.height && mask.width == target.width,
          ErrorCode::DimensionMismatch, "mim_loss: mask shape differs");
  size_t n_masked = mask.count();
  size_t n_norm = mode == MimMode::MaskedOnly
                      ? n_masked
                      : static_cast<size_t>(mask.height) * mask.width - n_masked;
  require(n_norm > 0, ErrorCode::InsufficientData,
          "mim_loss: normalization pixel count is zero");
  double sum = 0.0;
  for (int i = 0; i < target.height; ++i)
    for (int j = 0; j < target.width; ++j) {
      if (mode == MimMode::MaskedOnly && !mask.at(i, j)) continue;
      for (int k = 0; k < target.channels; ++k)
        sum += std::abs(recon.at(i, j, k) - target.at(i, j, k));
    }
  return sum / (static_cast<double>(n_norm) * target.channels);
}

}  // namespace

double mim_loss(const std::vector<const DenseMap*>& recons1,
                const std::vector<const DenseMap*>& recons2,
                const DenseMap& target1, const DenseMap& target2,
                const BoolMask& mask1, const BoolMask& mask2, MimMode mode) {
  require(!recons1.empty() && recons1.size() == recons2.size(),
          ErrorCode::InvalidArgument,
          "mim_loss: need matching per-scale reconstruction lists");
  double loss = 0.0;
  for (size_t s = 0; s < recons1.size(); ++s) {
    loss += image_term(*recons1[s], target1, mask1, mode);
    loss += image_term(*recons2[s], target2, mask2, mode);
  }
  return loss;
}

double homography_loss(const CorrespondenceField& T,
                       const CorrespondenceField& T_gt,
                       const IndicatorMatrix& o_plus,
                       const CoplanarSampleSet& samples) {
  require(T.height == T_gt.height && T.width == T_gt.width,
          ErrorCode::DimensionMismatch, "homography_loss: field shapes differ");
  require(o_plus.k == samples.k, ErrorCode::DimensionMismatch,
          "homography_loss: indicator and sample set sizes differ");
  double sum = 0.0;
  size_t used = 0;
  for (int m = 0; m < o_plus.k; ++m) {
    const Eigen::Vector2i& p = samples.anchors[m];
    auto t_p = field_sample(T, p.x(), p.y());
    auto g_p = field_sample(T_gt, p.x(), p.y());
    if (!t_p || !g_p) continue;
    for (int n = 0; n < o_plus.k; ++n) {
      if (!o_plus.at(m, n)) continue;
      const Eigen::Vector2i& q = samples.candidate(m, n);
      auto t_q = field_sample(T, q.x(), q.y());
      auto g_q = field_sample(T_gt, q.x(), q.y());
      if (!t_q || !g_q) continue;
      Eigen::Vector2d diff = (*t_p - *t_q) - (*g_p - *g_q);
      sum += std::abs(diff.x()) + std::abs(diff.y());
      ++used;
    }
  }
  if (used == 0) return 0.0;
  return sum / static_cast<double>(used);
}

double global_matching_loss(const Eigen::MatrixXd& c_dual,
                            const MatchSupervision& sup, double eps) {
  require(!sup.positives.empty() || !sup.negatives.empty(),
          ErrorCode::InsufficientData,
          "global_matching_loss: both supervision sets are empty");
  auto in_range = [&](const std::pair<int, int>& p) {
    return p.first >= 0 && p.first < c_dual.rows() && p.second >= 0 &&
           p.second < c_dual.cols();
  };
  double loss = 0.0;
  if (!sup.positives.empty()) {
    double s = 0.0;
    for (auto [i, k] : sup.positives) {
      require(in_range({i, k}), ErrorCode::InvalidArgument,
              "global_matching_loss: positive pair index out of range");
      s += std::log(c_dual(i, k) + eps);
    }
    loss -= s / static_cast<double>(sup.positives.size());
  }
  if (!sup.negatives.empty()) {
    double s = 0.0;
    for (auto [i, k] : sup.negatives) {
      require(in_range({i, k}), ErrorCode::InvalidArgument,
              "global_matching_loss: negative pair index out of range");
      s += std::log(1.0 - c_dual(i, k) + eps);
    }
    loss -= s / static_cast<double>(sup.negatives.size());
  }
  return loss;
}

double refinement_loss(const CorrespondenceField& T,
                       const CorrespondenceField& T_gt,
                       const BoolMask& p_plus) {
  require(T.height == T_gt.height && T.width == T_gt.width &&
              p_plus.height == T.height && p_plus.width == T.width,
          ErrorCode::DimensionMismatch, "refinement_loss: shapes differ");
  size_t n = p_plus.count();
  require(n > 0, ErrorCode::InsufficientData, "refinement_loss: P+ is empty");
  double sum = 0.0;
  for (int i = 0; i < T.height; ++i)
    for (int j = 0; j < T.width; ++j) {
      if (!p_plus.at(i, j)) continue;
      sum += std::hypot(T.x(i, j) - T_gt.x(i, j), T.y(i, j) - T_gt.y(i, j));
    }
  return sum / static_cast<double>(n);
}

double confidence_loss(const ConfidenceMap& P, const BoolMask& p_plus,
                       const BoolMask& p_minus, double eps) {
  require(P.height == p_plus.height && P.width == p_plus.width &&
              P.height == p_minus.height && P.width == p_minus.width,
          ErrorCode::DimensionMismatch, "confidence_loss: shapes differ");
  size_t n_plus = p_plus.count(), n_minus = p_minus.count();
  require(n_plus > 0 && n_minus > 0, ErrorCode::InsufficientData,
          "confidence_loss: P+ and P- must both be nonempty");
  double pos = 0.0, neg = 0.0;
  for (int i = 0; i < P.height; ++i)
    for (int j = 0; j < P.width; ++j) {
      bool plus = p_plus.at(i, j);
      bool minus = p_minus.at(i, j);
      require(!(plus && minus), ErrorCode::InvalidArgument,
              "confidence_loss: P+ and P- overlap");
      if (plus) pos += std::log(P.at(i, j) + eps);
      if (minus) neg += std::log(1.0 - P.at(i, j) + eps);
    }
  return -pos / static_cast<double>(n_plus) - neg / static_cast<double>(n_minus);
}

double total_loss(const std::array<double, 4>& per_scale_r,
                  const std::array<double, 4>& per_scale_c, double l_g,
                  const std::array<double, 4>& per_scale_h,
                  const LossWeights& weights) {
  require(weights.w_c >= 0.0 && weights.w_g >= 0.0 && weights.w_h >= 0.0,
          ErrorCode::InvalidArgument, "total_loss: weights must be nonnegative");
  double rc = 0.0, h = 0.0;
  for (int s = 0; s < 4; ++s) {
    rc += per_scale_r[s] + weights.w_c * per_scale_c[s];
    h += per_scale_h[s];
  }
  return 0.25 * rc + weights.w_g * l_g + 0.25 * weights.w_h * h;
}

MatchSupervision make_match_supervision(const CorrespondenceField& t_gt,
                                        int coarse_h, int coarse_w, int scale) {
  require(coarse_h > 0 && coarse_w > 0 && scale > 0, ErrorCode::InvalidArgument,
          "make_match_supervision: bad coarse grid");
  MatchSupervision sup;
  std::vector<uint8_t> row_touched(coarse_h * coarse_w, 0);
  std::vector<uint8_t> col_touched(coarse_h * coarse_w, 0);
  std::vector<int> pos_of_row(coarse_h * coarse_w, -1);
  for (int r = 0; r < coarse_h; ++r) {
    for (int c = 0; c < coarse_w; ++c) {
      double cx = scale * (c + 0.5);
      double cy = scale * (r + 0.5);
      auto target = field_sample(t_gt, cx, cy);
      if (!target) continue;
      int kc = static_cast<int>(std::floor(target->x() / scale));
      int kr = static_cast<int>(std::floor(target->y() / scale));
      if (kc < 0 || kc >= coarse_w || kr < 0 || kr >= coarse_h) continue;
      int i = r * coarse_w + c;
      int k = kr * coarse_w + kc;
      sup.positives.emplace_back(i, k);
      row_touched[i] = 1;
      col_touched[k] = 1;
      pos_of_row[i] = k;
    }
  }
  const int n = coarse_h * coarse_w;
  std::vector<uint8_t> is_positive(static_cast<size_t>(n) * n, 0);
  for (auto [i, k] : sup.positives)
    is_positive[static_cast<size_t>(i) * n + k] = 1;
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      if (!row_touched[i] && !col_touched[k]) continue;
      if (is_positive[static_cast<size_t>(i) * n + k]) continue;
      sup.negatives.emplace_back(i, k);
    }
  return sup;
}

Objective refinement_objective(const CorrespondenceField& t_gt,
                               const BoolMask& p_plus) {
  size_t n_sel = p_plus.count();
  require(n_sel > 0, ErrorCode::InsufficientData,
          "refinement_objective: P+ is empty");
  const int h = t_gt.height, w = t_gt.width;
  auto gt = t_gt;
  auto mask = p_plus;
  Objective obj;
  obj.value = [gt, mask, h, w, n_sel](const Eigen::VectorXd& x) {
    double sum = 0.0;
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        if (!mask.at(i, j)) continue;
        size_t b = 2 * (static_cast<size_t>(i) * w + j);
        sum += std::hypot(x[b] - gt.x(i, j), x[b + 1] - gt.y(i, j));
      }
    return sum / static_cast<double>(n_sel);
  };
  obj.gradient = [gt, mask, h, w, n_sel](const Eigen::VectorXd& x) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(x.size());
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        if (!mask.at(i, j)) continue;
        size_t b = 2 * (static_cast<size_t>(i) * w + j);
        double dx = x[b] - gt.x(i, j);
        double dy = x[b + 1] - gt.y(i, j);
        double norm = std::hypot(dx, dy);
        require(norm > 0.0, ErrorCode::Degenerate,
                "refinement_objective: gradient at an L2 kink");
        g[b] = dx / (norm * n_sel);
        g[b + 1] = dy / (norm * n_sel);
      }
    return g;
  };
  return obj;
}

Objective confidence_objective(const BoolMask& p_plus, const BoolMask& p_minus,
                               double eps, int height, int width) {
  size_t n_plus = p_plus.count(), n_minus = p_minus.count();
  require(n_plus > 0 && n_minus > 0, ErrorCode::InsufficientData,
          "confidence_objective: empty supervision set");
  auto plus = p_plus;
  auto minus = p_minus;
  Objective obj;
  obj.value = [plus, minus, eps, height, width, n_plus,
               n_minus](const Eigen::VectorXd& x) {
    double pos = 0.0, neg = 0.0;
    for (int i = 0; i < height; ++i)
      for (int j = 0; j < width; ++j) {
        size_t b = static_cast<size_t>(i) * width + j;
        if (plus.at(i, j)) pos += std::log(x[b] + eps);
        if (minus.at(i, j)) neg += std::log(1.0 - x[b] + eps);
      }
    return -pos / static_cast<double>(n_plus) -
           neg / static_cast<double>(n_minus);
  };
  obj.gradient = [plus, minus, eps, height, width, n_plus,
                  n_minus](const Eigen::VectorXd& x) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(x.size());
    for (int i = 0; i < height; ++i)
      for (int j = 0; j < width; ++j) {
        size_t b = static_cast<size_t>(i) * width + j;
        if (plus.at(i, j)) g[b] -= 1.0 / ((x[b] + eps) * n_plus);
        if (minus.at(i, j)) g[b] += 1.0 / ((1.0 - x[b] + eps) * n_minus);
      }
    return g;
  };
  return obj;
}

Objective global_matching_objective(const MatchSupervision& sup, double eps,
                                    int n) {
  require(!sup.positives.empty() || !sup.negatives.empty(),
          ErrorCode::InsufficientData,
          "global_matching_objective: empty supervision");
  Objective obj;
  auto s = sup;
  obj.value = [s, eps, n](const Eigen::VectorXd& x) {
    Eigen::MatrixXd c =
        Eigen::Map<const Eigen::MatrixXd>(x.data(), n, n).transpose();
    return global_matching_loss(c, s, eps);
  };
  obj.gradient = [s, eps, n](const Eigen::VectorXd& x) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(x.size());
    if (!s.positives.empty()) {
      double inv = 1.0 / static_cast<double>(s.positives.size());
      for (auto [i, k] : s.positives) {
        size_t b = static_cast<size_t>(i) * n + k;
        g[b] -= inv / (x[b] + eps);
      }
    }
    if (!s.negatives.empty()) {
      double inv = 1.0 / static_cast<double>(s.negatives.size());
      for (auto [i, k] : s.negatives) {
        size_t b = static_cast<size_t>(i) * n + k;
        g[b] += inv / (1.0 - x[b] + eps);
      }
    }
    return g;
  };
  return obj;
}

GradientCheck fd_gradient_check(const Objective& objective,
                                const Eigen::VectorXd& point,
                                const Eigen::VectorXd& direction, double h) {
  require(h > 0.0, ErrorCode::InvalidArgument,
          "fd_gradient_check: step must be positive");
  require(point.size() == direction.size(), ErrorCode::DimensionMismatch,
          "fd_gradient_check: point and direction sizes differ");
  GradientCheck check;
  check.analytic = objective.gradient(point).dot(direction);
  double fp = objective.value(point + h * direction);
  double fm = objective.value(point - h * direction);
  check.numeric = (fp - fm) / (2.0 * h);
  double denom =
      std::max({std::abs(check.analytic), std::abs(check.numeric), 1e-12});
  check.rel_err = std::abs(check.analytic - check.numeric) / denom;
  return check;
}

}  // namespace gm
