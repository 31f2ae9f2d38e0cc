#include "core/pose_eval.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "core/rng.hpp"

namespace gm {

namespace {

constexpr double kRadToDeg = 180.0 / 3.14159265358979323846;

// ---------------------------------------------------------------------------
// Polynomial ring over (x, y, z) up to total degree 3, used by the
// five-point solver. Monomial order: the ten cubics first, then the
// quotient-ring basis [x2, xy, xz, y2, yz, z2, x, y, z, 1].
// ---------------------------------------------------------------------------

struct Mono {
  int dx, dy, dz;
};

constexpr std::array<Mono, 20> kMonos = {{{3, 0, 0}, {2, 1, 0}, {2, 0, 1},
                                          {1, 2, 0}, {1, 1, 1}, {1, 0, 2},
                                          {0, 3, 0}, {0, 2, 1}, {0, 1, 2},
                                          {0, 0, 3}, {2, 0, 0}, {1, 1, 0},
                                          {1, 0, 1}, {0, 2, 0}, {0, 1, 1},
                                          {0, 0, 2}, {1, 0, 0}, {0, 1, 0},
                                          {0, 0, 1}, {0, 0, 0}}};

int mono_index(int dx, int dy, int dz) {
  for (int i = 0; i < 20; ++i)
    if (kMonos[i].dx == dx && kMonos[i].dy == dy && kMonos[i].dz == dz)
      return i;
  return -1;
}

using Poly = std::array<double, 20>;

Poly poly_mul(const Poly& a, const Poly& b) {
  Poly out{};
  for (int i = 0; i < 20; ++i) {
    if (a[i] == 0.0) continue;
    for (int j = 0; j < 20; ++j) {
      if (b[j] == 0.0) continue;
      int idx = mono_index(kMonos[i].dx + kMonos[j].dx,
                           kMonos[i].dy + kMonos[j].dy,
                           kMonos[i].dz + kMonos[j].dz);
      out[idx] += a[i] * b[j];
    }
  }
  return out;
}

Poly poly_add(const Poly& a, const Poly& b) {
  Poly out;
  for (int i = 0; i < 20; ++i) out[i] = a[i] + b[i];
  return out;
}

Poly poly_sub(const Poly& a, const Poly& b) {
  Poly out;
  for (int i = 0; i < 20; ++i) out[i] = a[i] - b[i];
  return out;
}

Poly poly_scale(const Poly& a, double s) {
  Poly out;
  for (int i = 0; i < 20; ++i) out[i] = a[i] * s;
  return out;
}

Eigen::Vector3d homog(const Eigen::Vector2d& p) { return {p.x(), p.y(), 1.0}; }

double sampson_sq(const Eigen::Matrix3d& E, const Eigen::Vector2d& x1,
                  const Eigen::Vector2d& x2) {
  Eigen::Vector3d p1 = homog(x1), p2 = homog(x2);
  Eigen::Vector3d Ex1 = E * p1;
  Eigen::Vector3d Etx2 = E.transpose() * p2;
  double c = p2.dot(Ex1);
  double denom = Ex1.x() * Ex1.x() + Ex1.y() * Ex1.y() + Etx2.x() * Etx2.x() +
                 Etx2.y() * Etx2.y();
  if (denom < 1e-30) return std::numeric_limits<double>::infinity();
  return c * c / denom;
}

struct HartleyNorm {
  Eigen::Matrix3d T = Eigen::Matrix3d::Identity();
  std::vector<Eigen::Vector2d> points;
};

HartleyNorm hartley_normalize(const std::vector<Eigen::Vector2d>& pts) {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  double scale = 0.0;
  for (const auto& p : pts) scale += (p - mean).norm();
  scale /= static_cast<double>(pts.size());
  require(scale > 1e-12, ErrorCode::Degenerate,
          "normalization: coincident points");
  double s = std::sqrt(2.0) / scale;
  HartleyNorm out;
  out.T << s, 0, -s * mean.x(), 0, s, -s * mean.y(), 0, 0, 1;
  out.points.reserve(pts.size());
  for (const auto& p : pts) out.points.emplace_back(s * (p - mean));
  return out;
}

}  // namespace

EssentialMatrix EssentialMatrix::normalized() const {
  EssentialMatrix out;
  double n = E.norm();
  require(n > 1e-15, ErrorCode::Degenerate, "essential matrix is zero");
  out.E = E * (std::sqrt(2.0) / n);
  return out;
}

bool EssentialMatrix::is_valid(double tol) const {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(E);
  Eigen::Vector3d s = svd.singularValues();
  double scale = s(0);
  if (scale < 1e-15) return false;
  return std::abs(s(0) - s(1)) / scale <= tol && s(2) / scale <= tol;
}

std::vector<Eigen::Matrix3d> five_point_candidates(
    const std::vector<Eigen::Vector2d>& x1,
    const std::vector<Eigen::Vector2d>& x2) {
  require(x1.size() == x2.size(), ErrorCode::DimensionMismatch,
          "five_point_candidates: point counts differ");
  require(x1.size() >= 5, ErrorCode::InsufficientData,
          "five_point_candidates: need at least five pairs");
  const int n = static_cast<int>(x1.size());
  Eigen::MatrixXd Q(n, 9);
  for (int r = 0; r < n; ++r) {
    double a = x1[r].x(), b = x1[r].y();
    double c = x2[r].x(), d = x2[r].y();
    Q.row(r) << c * a, c * b, c, d * a, d * b, d, a, b, 1.0;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Q, Eigen::ComputeFullV);
  std::array<Eigen::Matrix3d, 4> basis;
  for (int k = 0; k < 4; ++k) {
    Eigen::VectorXd v = svd.matrixV().col(5 + k);
    basis[k] << v(0), v(1), v(2), v(3), v(4), v(5), v(6), v(7), v(8);
  }

  // E = x B0 + y B1 + z B2 + B3 as degree-1 polynomial entries.
  Poly e[3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      Poly p{};
      p[16] = basis[0](i, j);
      p[17] = basis[1](i, j);
      p[18] = basis[2](i, j);
      p[19] = basis[3](i, j);
      e[i][j] = p;
    }

  // det(E) = 0.
  Poly det = poly_sub(
      poly_mul(e[0][0],
               poly_sub(poly_mul(e[1][1], e[2][2]), poly_mul(e[1][2], e[2][1]))),
      poly_mul(e[0][1],
               poly_sub(poly_mul(e[1][0], e[2][2]), poly_mul(e[1][2], e[2][0]))));
  det = poly_add(det,
                 poly_mul(e[0][2], poly_sub(poly_mul(e[1][0], e[2][1]),
                                            poly_mul(e[1][1], e[2][0]))));

  // 2 E E^T E - trace(E E^T) E = 0.
  Poly eet[3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      Poly acc{};
      for (int k = 0; k < 3; ++k)
        acc = poly_add(acc, poly_mul(e[i][k], e[j][k]));
      eet[i][j] = acc;
    }
  Poly trace = poly_add(poly_add(eet[0][0], eet[1][1]), eet[2][2]);

  Eigen::Matrix<double, 10, 20> M;
  for (int c = 0; c < 20; ++c) M(0, c) = det[c];
  int row = 1;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j, ++row) {
      Poly acc{};
      for (int k = 0; k < 3; ++k)
        acc = poly_add(acc, poly_mul(eet[i][k], e[k][j]));
      Poly constraint = poly_sub(poly_scale(acc, 2.0), poly_mul(trace, e[i][j]));
      for (int c = 0; c < 20; ++c) M(row, c) = constraint[c];
    }

  Eigen::Matrix<double, 10, 10> A = M.leftCols<10>();
  Eigen::Matrix<double, 10, 10> B = M.rightCols<10>();
  Eigen::FullPivLU<Eigen::Matrix<double, 10, 10>> lu(A);
  if (!lu.isInvertible()) return {};
  Eigen::Matrix<double, 10, 10> C = lu.solve(B);

  // Action matrix for multiplication by x on [x2 xy xz y2 yz z2 x y z 1].
  Eigen::Matrix<double, 10, 10> action = Eigen::Matrix<double, 10, 10>::Zero();
  for (int r = 0; r < 6; ++r) action.row(r) = -C.row(r);
  action(6, 0) = 1.0;
  action(7, 1) = 1.0;
  action(8, 2) = 1.0;
  action(9, 6) = 1.0;

  Eigen::EigenSolver<Eigen::MatrixXd> es(action);
  std::vector<Eigen::Matrix3d> out;
  for (int s = 0; s < 10; ++s) {
    std::complex<double> lambda = es.eigenvalues()(s);
    if (std::abs(lambda.imag()) > 1e-6 * (1.0 + std::abs(lambda.real())))
      continue;
    Eigen::VectorXcd v = es.eigenvectors().col(s);
    if (std::abs(v(9)) < 1e-12) continue;
    Eigen::VectorXcd w = v / v(9);
    double x = w(6).real(), y = w(7).real(), z = w(8).real();
    Eigen::Matrix3d E = x * basis[0] + y * basis[1] + z * basis[2] + basis[3];
    double norm = E.norm();
    if (norm < 1e-12) continue;
    E *= std::sqrt(2.0) / norm;
    // A minimal sample is interpolated exactly; drop numerical junk there.
    // Overdetermined input leaves residuals at the noise level, so no cut.
    if (x1.size() == 5) {
      double residual = 0.0;
      for (size_t r = 0; r < 5; ++r)
        residual = std::max(residual,
                            std::abs(homog(x2[r]).dot(E * homog(x1[r]))));
      if (residual > 1e-6) continue;
    }
    out.push_back(E);
  }
  return out;
}

EssentialMatrix eight_point(const std::vector<Eigen::Vector2d>& x1,
                            const std::vector<Eigen::Vector2d>& x2) {
  require(x1.size() == x2.size(), ErrorCode::DimensionMismatch,
          "eight_point: point counts differ");
  require(x1.size() >= 8, ErrorCode::InsufficientData,
          "eight_point: need at least eight pairs");
  HartleyNorm n1 = hartley_normalize(x1);
  HartleyNorm n2 = hartley_normalize(x2);
  const int n = static_cast<int>(x1.size());
  Eigen::MatrixXd Q(n, 9);
  for (int r = 0; r < n; ++r) {
    double a = n1.points[r].x(), b = n1.points[r].y();
    double c = n2.points[r].x(), d = n2.points[r].y();
    Q.row(r) << c * a, c * b, c, d * a, d * b, d, a, b, 1.0;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Q, Eigen::ComputeFullV);
  Eigen::VectorXd v = svd.matrixV().col(8);
  Eigen::Matrix3d Eh;
  Eh << v(0), v(1), v(2), v(3), v(4), v(5), v(6), v(7), v(8);
  Eigen::Matrix3d E = n2.T.transpose() * Eh * n1.T;
  Eigen::JacobiSVD<Eigen::Matrix3d> esvd(
      E, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Vector3d sing(1.0, 1.0, 0.0);
  EssentialMatrix out;
  out.E = esvd.matrixU() * sing.asDiagonal() * esvd.matrixV().transpose();
  return out;
}

namespace {

std::vector<int> sample_distinct(Pcg32& rng, int count, int bound) {
  std::vector<int> picked;
  picked.reserve(count);
  while (static_cast<int>(picked.size()) < count) {
    int idx = static_cast<int>(rng.next_below(static_cast<uint32_t>(bound)));
    bool dup = false;
    for (int p : picked) dup = dup || (p == idx);
    if (!dup) picked.push_back(idx);
  }
  return picked;
}

Eigen::Matrix3d skew_matrix(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

// Linear two-view triangulation with P1 = [I|0], P2 = [R|t].
bool triangulate_cheiral(const Eigen::Matrix3d& R, const Eigen::Vector3d& t,
                         const Eigen::Vector2d& x1, const Eigen::Vector2d& x2) {
  Eigen::Matrix<double, 3, 4> P1 = Eigen::Matrix<double, 3, 4>::Zero();
  P1.leftCols<3>() = Eigen::Matrix3d::Identity();
  Eigen::Matrix<double, 3, 4> P2;
  P2.leftCols<3>() = R;
  P2.col(3) = t;
  Eigen::Matrix4d A;
  A.row(0) = x1.x() * P1.row(2) - P1.row(0);
  A.row(1) = x1.y() * P1.row(2) - P1.row(1);
  A.row(2) = x2.x() * P2.row(2) - P2.row(0);
  A.row(3) = x2.y() * P2.row(2) - P2.row(1);
  Eigen::JacobiSVD<Eigen::Matrix4d> svd(A, Eigen::ComputeFullV);
  Eigen::Vector4d X = svd.matrixV().col(3);
  if (std::abs(X(3)) < 1e-15) return false;
  Eigen::Vector3d p = X.head<3>() / X(3);
  double z2 = (R * p + t).z();
  return p.z() > 0.0 && z2 > 0.0;
}

// Picks the cheirality-best (R, t) among the four decompositions, counting
// over at most 50 of the flagged points.
bool choose_pose(const Eigen::Matrix3d& E,
                 const std::vector<Eigen::Vector2d>& x1,
                 const std::vector<Eigen::Vector2d>& x2,
                 const std::vector<uint8_t>& mask, Eigen::Matrix3d* out_R,
                 Eigen::Vector3d* out_t) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      E, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d U = svd.matrixU();
  Eigen::Matrix3d V = svd.matrixV();
  if (U.determinant() < 0.0) U = -U;
  if (V.determinant() < 0.0) V = -V;
  Eigen::Matrix3d W;
  W << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  std::array<Eigen::Matrix3d, 2> rotations = {U * W * V.transpose(),
                                              U * W.transpose() * V.transpose()};
  Eigen::Vector3d t = U.col(2);
  int best_count = 0;
  for (const Eigen::Matrix3d& R : rotations) {
    for (double sign : {1.0, -1.0}) {
      Eigen::Vector3d tc = sign * t;
      int count = 0, used = 0;
      for (size_t i = 0; i < x1.size() && used < 50; ++i) {
        if (!mask[i]) continue;
        ++used;
        count += triangulate_cheiral(R, tc, x1[i], x2[i]) ? 1 : 0;
      }
      if (count > best_count) {
        best_count = count;
        *out_R = R;
        *out_t = tc;
      }
    }
  }
  return best_count > 0;
}

// Gauss-Newton polish of (R, t) on the unit-baseline manifold, minimizing
// the signed Sampson residuals of the flagged matches. Numeric Jacobian
// over the five pose parameters.
void polish_pose(Eigen::Matrix3d* R, Eigen::Vector3d* t,
                 const std::vector<Eigen::Vector2d>& x1,
                 const std::vector<Eigen::Vector2d>& x2,
                 const std::vector<uint8_t>& mask) {
  std::vector<int> idx;
  for (size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) idx.push_back(static_cast<int>(i));
  if (idx.size() < 8) return;
  const int n = static_cast<int>(idx.size());

  auto residuals = [&](const Eigen::Matrix3d& Rc, const Eigen::Vector3d& tc,
                       Eigen::VectorXd& r) {
    Eigen::Matrix3d E = skew_matrix(tc) * Rc;
    for (int q = 0; q < n; ++q) {
      Eigen::Vector3d p1 = homog(x1[idx[q]]);
      Eigen::Vector3d p2 = homog(x2[idx[q]]);
      Eigen::Vector3d Ex1 = E * p1;
      Eigen::Vector3d Etx2 = E.transpose() * p2;
      double denom = Ex1.x() * Ex1.x() + Ex1.y() * Ex1.y() +
                     Etx2.x() * Etx2.x() + Etx2.y() * Etx2.y();
      r[q] = denom > 1e-30 ? p2.dot(Ex1) / std::sqrt(denom) : 0.0;
    }
  };
  auto apply = [&](const Eigen::Matrix3d& Rc, const Eigen::Vector3d& tc,
                   const Eigen::Matrix<double, 5, 1>& p, Eigen::Matrix3d* Rn,
                   Eigen::Vector3d* tn) {
    Eigen::Vector3d w = p.head<3>();
    double angle = w.norm();
    Eigen::Matrix3d dR =
        angle < 1e-15
            ? Eigen::Matrix3d::Identity()
            : Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
    *Rn = Rc * dR;
    // two-column basis of the plane orthogonal to t
    Eigen::Vector3d a = std::abs(tc.x()) < 0.9 ? Eigen::Vector3d::UnitX()
                                               : Eigen::Vector3d::UnitY();
    Eigen::Vector3d b1 = tc.cross(a).normalized();
    Eigen::Vector3d b2 = tc.cross(b1).normalized();
    *tn = (tc + p[3] * b1 + p[4] * b2).normalized();
  };

  Eigen::VectorXd r(n), rp(n), rm(n);
  residuals(*R, *t, r);
  double best_cost = r.squaredNorm();
  const double h = 1e-7;
  double lambda = 1e-8;
  for (int iter = 0; iter < 50; ++iter) {
    Eigen::MatrixXd J(n, 5);
    for (int col = 0; col < 5; ++col) {
      Eigen::Matrix<double, 5, 1> p = Eigen::Matrix<double, 5, 1>::Zero();
      Eigen::Matrix3d Rn;
      Eigen::Vector3d tn;
      p[col] = h;
      apply(*R, *t, p, &Rn, &tn);
      residuals(Rn, tn, rp);
      p[col] = -h;
      apply(*R, *t, p, &Rn, &tn);
      residuals(Rn, tn, rm);
      J.col(col) = (rp - rm) / (2.0 * h);
    }
    Eigen::Matrix<double, 5, 5> JtJ = J.transpose() * J;
    Eigen::Matrix<double, 5, 1> g = -J.transpose() * r;
    bool stepped = false;
    for (int attempt = 0; attempt < 8; ++attempt) {
      Eigen::Matrix<double, 5, 5> damped = JtJ;
      damped.diagonal().array() += lambda * (1.0 + JtJ.diagonal().array());
      Eigen::Matrix<double, 5, 1> step = damped.ldlt().solve(g);
      if (!step.allFinite()) break;
      Eigen::Matrix3d Rn;
      Eigen::Vector3d tn;
      apply(*R, *t, step, &Rn, &tn);
      residuals(Rn, tn, rp);
      double cost = rp.squaredNorm();
      if (cost < best_cost) {
        *R = Rn;
        *t = tn;
        r = rp;
        stepped = step.norm() > 1e-14;
        best_cost = cost;
        lambda = std::max(lambda * 0.3, 1e-12);
        break;
      }
      lambda *= 10.0;
    }
    if (!stepped) break;
  }
}

int ransac_required_iters(int n_inliers, int n_total, int minimal,
                          int max_iters) {
  if (n_inliers <= 0) return max_iters;
  double w = static_cast<double>(n_inliers) / n_total;
  double p_sample = std::pow(w, minimal);
  if (p_sample >= 1.0 - 1e-12) return 1;
  if (p_sample < 1e-12) return max_iters;
  double needed = std::log(1.0 - 0.9999) / std::log(1.0 - p_sample);
  if (needed >= static_cast<double>(max_iters)) return max_iters;
  return static_cast<int>(std::ceil(needed));
}

}  // namespace

EssentialRansacResult estimate_essential_ransac(
    const std::vector<PointMatch>& matches, const Intrinsics& K1,
    const Intrinsics& K2, double inlier_px, int max_iters, uint64_t seed,
    EssentialSolverKind solver) {
  const int minimal = solver == EssentialSolverKind::FivePoint ? 5 : 8;
  const int n = static_cast<int>(matches.size());
  require(n >= minimal, ErrorCode::InsufficientData,
          "estimate_essential_ransac: too few matches");
  require(inlier_px > 0.0 && max_iters > 0, ErrorCode::InvalidArgument,
          "estimate_essential_ransac: bad threshold or iteration budget");

  std::vector<Eigen::Vector2d> x1(n), x2(n);
  for (int i = 0; i < n; ++i) {
    x1[i] = {(matches[i].source.x() - K1.cx) / K1.fx,
             (matches[i].source.y() - K1.cy) / K1.fy};
    x2[i] = {(matches[i].support.x() - K2.cx) / K2.fx,
             (matches[i].support.y() - K2.cy) / K2.fy};
  }
  const double mean_f = (K1.fx + K1.fy + K2.fx + K2.fy) / 4.0;
  const double thresh_sq = (inlier_px / mean_f) * (inlier_px / mean_f);

  auto score_model = [&](const Eigen::Matrix3d& E, std::vector<uint8_t>* mask,
                         double* truncated) {
    int count = 0;
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      double d = sampson_sq(E, x1[i], x2[i]);
      bool in = d <= thresh_sq;
      count += in ? 1 : 0;
      total += std::min(d, thresh_sq);
      if (mask) (*mask)[i] = in ? 1 : 0;
    }
    if (truncated) *truncated = total;
    return count;
  };

  Eigen::Matrix3d best_E = Eigen::Matrix3d::Zero();
  int best_count = -1;
  double best_score = std::numeric_limits<double>::infinity();
  int needed = max_iters;
  int it = 0;
  for (; it < max_iters && it < needed; ++it) {
    Pcg32 rng(seed, static_cast<uint64_t>(it) + 1);
    std::vector<int> idx = sample_distinct(rng, minimal, n);
    bool degenerate = false;
    for (size_t a = 0; a < idx.size() && !degenerate; ++a)
      for (size_t b = a + 1; b < idx.size(); ++b)
        if ((x1[idx[a]] - x1[idx[b]]).norm() < 1e-12 ||
            (x2[idx[a]] - x2[idx[b]]).norm() < 1e-12) {
          degenerate = true;
          break;
        }
    if (degenerate) continue;

    std::vector<Eigen::Vector2d> s1, s2;
    for (int i : idx) {
      s1.push_back(x1[i]);
      s2.push_back(x2[i]);
    }
    std::vector<Eigen::Matrix3d> candidates;
    if (solver == EssentialSolverKind::FivePoint) {
      candidates = five_point_candidates(s1, s2);
    } else {
      try {
        candidates.push_back(eight_point(s1, s2).E);
      } catch (const Error&) {
        continue;
      }
    }
    for (const Eigen::Matrix3d& E : candidates) {
      double truncated = 0.0;
      int count = score_model(E, nullptr, &truncated);
      if (count > best_count ||
          (count == best_count && truncated < best_score)) {
        best_count = count;
        best_score = truncated;
        best_E = E;
        needed = std::min(max_iters,
                          ransac_required_iters(count, n, minimal, max_iters));
      }
    }
  }
  require(best_count >= minimal, ErrorCode::Degenerate,
          "estimate_essential_ransac: no valid model found");

  EssentialRansacResult result;
  result.iterations = it;
  result.essential.E = best_E;
  result.inliers.assign(n, 0);
  result.n_inliers = score_model(best_E, &result.inliers, nullptr);

  // Refit rounds on the consensus set: linear least squares, cheirality
  // pick, Sampson polish on the essential manifold, re-score. Iterating
  // lets the consensus grow out of the biased first set the minimal model
  // selects when the threshold sits near the noise level.
  double best_trunc = 0.0;
  score_model(result.essential.E, nullptr, &best_trunc);
  for (int round = 0; round < 10 && result.n_inliers >= 8; ++round) {
    Eigen::Matrix3d start = result.essential.E;
    std::vector<Eigen::Vector2d> r1, r2;
    for (int i = 0; i < n; ++i) {
      if (!result.inliers[i]) continue;
      r1.push_back(x1[i]);
      r2.push_back(x2[i]);
    }
    try {
      start = eight_point(r1, r2).E;
    } catch (const Error&) {
      // keep the current model as the polish seed
    }
    Eigen::Matrix3d R;
    Eigen::Vector3d t;
    if (!choose_pose(start, x1, x2, result.inliers, &R, &t)) break;
    polish_pose(&R, &t, x1, x2, result.inliers);
    Eigen::Matrix3d polished = skew_matrix(t) * R;
    std::vector<uint8_t> mask(n, 0);
    double truncated = 0.0;
    int count = score_model(polished, &mask, &truncated);
    bool better = count > result.n_inliers ||
                  (count == result.n_inliers && truncated < best_trunc - 1e-15);
    if (!better) break;
    result.essential.E = polished;
    result.inliers = std::move(mask);
    result.n_inliers = count;
    best_trunc = truncated;
  }
  result.essential = result.essential.normalized();
  return result;
}

RelativePose decompose_essential(const EssentialMatrix& E,
                                 const std::vector<PointMatch>& matches,
                                 const Intrinsics& K1, const Intrinsics& K2) {
  require(!matches.empty(), ErrorCode::InsufficientData,
          "decompose_essential: need at least one match");
  EssentialMatrix En = E.normalized();
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      En.E, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d U = svd.matrixU();
  Eigen::Matrix3d V = svd.matrixV();
  if (U.determinant() < 0.0) U = -U;
  if (V.determinant() < 0.0) V = -V;
  Eigen::Matrix3d W;
  W << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  std::array<Eigen::Matrix3d, 2> rotations = {U * W * V.transpose(),
                                              U * W.transpose() * V.transpose()};
  Eigen::Vector3d t = U.col(2);

  std::vector<Eigen::Vector2d> x1, x2;
  for (const PointMatch& m : matches) {
    x1.emplace_back((m.source.x() - K1.cx) / K1.fx,
                    (m.source.y() - K1.cy) / K1.fy);
    x2.emplace_back((m.support.x() - K2.cx) / K2.fx,
                    (m.support.y() - K2.cy) / K2.fy);
  }

  RelativePose best;
  int best_count = -1;
  for (const Eigen::Matrix3d& R : rotations) {
    for (double sign : {1.0, -1.0}) {
      Eigen::Vector3d tc = sign * t;
      int count = 0;
      for (size_t i = 0; i < x1.size(); ++i)
        count += triangulate_cheiral(R, tc, x1[i], x2[i]) ? 1 : 0;
      if (count > best_count) {
        best_count = count;
        best.R = R;
        best.t = tc;
      }
    }
  }
  require(best_count > 0, ErrorCode::Degenerate,
          "decompose_essential: no candidate passes the cheirality test");
  best.n_cheiral = best_count;
  best.reliable = 2 * best_count >= static_cast<int>(matches.size());
  return best;
}

PoseError pose_error(const Eigen::Matrix3d& est_R, const Eigen::Vector3d& est_t,
                     const Eigen::Matrix3d& gt_R, const Eigen::Vector3d& gt_t) {
  require(is_rotation(est_R, 1e-6) && is_rotation(gt_R, 1e-6),
          ErrorCode::InvalidArgument, "pose_error: inputs are not rotations");
  require(est_t.norm() > 1e-15 && gt_t.norm() > 1e-15, ErrorCode::Degenerate,
          "pose_error: zero translation has no direction");
  PoseError err;
  double c = ((est_R.transpose() * gt_R).trace() - 1.0) / 2.0;
  err.rot_deg = std::acos(std::clamp(c, -1.0, 1.0)) * kRadToDeg;
  double d = est_t.normalized().dot(gt_t.normalized());
  err.trans_deg = std::acos(std::clamp(d, -1.0, 1.0)) * kRadToDeg;
  err.max_deg = std::max(err.rot_deg, err.trans_deg);
  return err;
}

ErrorCurve ErrorCurve::from_values(std::vector<double> values) {
  for (double v : values)
    require(!std::isnan(v) && v >= 0.0, ErrorCode::InvalidArgument,
            "ErrorCurve: errors must be nonnegative");
  std::sort(values.begin(), values.end());
  ErrorCurve curve;
  curve.sorted = std::move(values);
  return curve;
}

std::vector<double> auc(const ErrorCurve& errors,
                        const std::vector<double>& thresholds) {
  require(!errors.sorted.empty(), ErrorCode::InsufficientData,
          "auc: empty error set");
  std::vector<double> out;
  for (double t : thresholds) {
    require(t > 0.0, ErrorCode::InvalidArgument, "auc: threshold must be positive");
    double integral = 0.0;
    for (double e : errors.sorted) {
      if (e > t) break;
      integral += t - e;
    }
    out.push_back(integral / (t * static_cast<double>(errors.size())));
  }
  return out;
}

std::vector<double> map_at(const ErrorCurve& errors,
                           const std::vector<double>& thresholds) {
  require(!errors.sorted.empty(), ErrorCode::InsufficientData,
          "map_at: empty error set");
  std::vector<double> out;
  for (double t : thresholds) {
    require(t > 0.0, ErrorCode::InvalidArgument,
            "map_at: threshold must be positive");
    auto it = std::upper_bound(errors.sorted.begin(), errors.sorted.end(), t);
    out.push_back(static_cast<double>(it - errors.sorted.begin()) /
                  static_cast<double>(errors.size()));
  }
  return out;
}

std::vector<double> pck(const CorrespondenceField& T,
                        const CorrespondenceField& T_gt, const BoolMask& mask,
                        const std::vector<double>& deltas) {
  require(T.height == T_gt.height && T.width == T_gt.width &&
              mask.height == T.height && mask.width == T.width,
          ErrorCode::DimensionMismatch, "pck: shapes differ");
  size_t n = mask.count();
  require(n > 0, ErrorCode::InsufficientData, "pck: empty mask");
  std::vector<double> out;
  for (double delta : deltas) {
    size_t hits = 0;
    for (int i = 0; i < T.height; ++i)
      for (int j = 0; j < T.width; ++j) {
        if (!mask.at(i, j)) continue;
        if (!T.is_valid(i, j) || !T_gt.is_valid(i, j)) continue;
        double d = std::hypot(T.x(i, j) - T_gt.x(i, j),
                              T.y(i, j) - T_gt.y(i, j));
        hits += d <= delta ? 1 : 0;
      }
    out.push_back(static_cast<double>(hits) / static_cast<double>(n));
  }
  return out;
}

namespace {

Eigen::Vector2d apply_homography(const Eigen::Matrix3d& H,
                                 const Eigen::Vector2d& p) {
  Eigen::Vector3d v = H * homog(p);
  require(std::abs(v.z()) >= 1e-12, ErrorCode::Degenerate,
          "homography maps a corner to infinity");
  return {v.x() / v.z(), v.y() / v.z()};
}

}  // namespace

double homography_corner_error(const Eigen::Matrix3d& h_est,
                               const Eigen::Matrix3d& h_gt, int image_h,
                               int image_w) {
  require(image_h > 1 && image_w > 1, ErrorCode::InvalidArgument,
          "homography_corner_error: bad image size");
  require(std::abs(h_est.determinant()) > 1e-12 &&
              std::abs(h_gt.determinant()) > 1e-12,
          ErrorCode::Degenerate, "homography_corner_error: singular homography");
  std::array<Eigen::Vector2d, 4> corners = {
      Eigen::Vector2d(0, 0), Eigen::Vector2d(image_w - 1, 0),
      Eigen::Vector2d(0, image_h - 1),
      Eigen::Vector2d(image_w - 1, image_h - 1)};
  double sum = 0.0;
  for (const auto& c : corners)
    sum += (apply_homography(h_est, c) - apply_homography(h_gt, c)).norm();
  return sum / 4.0;
}

namespace {

Eigen::Matrix3d homography_dlt(const std::vector<Eigen::Vector2d>& p1,
                               const std::vector<Eigen::Vector2d>& p2) {
  HartleyNorm n1 = hartley_normalize(p1);
  HartleyNorm n2 = hartley_normalize(p2);
  const int n = static_cast<int>(p1.size());
  Eigen::MatrixXd A(2 * n, 9);
  for (int i = 0; i < n; ++i) {
    double x = n1.points[i].x(), y = n1.points[i].y();
    double u = n2.points[i].x(), v = n2.points[i].y();
    A.row(2 * i) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
    A.row(2 * i + 1) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  Eigen::VectorXd h = svd.matrixV().col(8);
  Eigen::Matrix3d Hn;
  Hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  Eigen::Matrix3d H = n2.T.inverse() * Hn * n1.T;
  require(std::abs(H.determinant()) > 1e-12, ErrorCode::Degenerate,
          "homography_dlt: rank-deficient solution");
  if (std::abs(H(2, 2)) > 1e-12) H /= H(2, 2);
  return H;
}

bool triple_collinear(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                      const Eigen::Vector2d& c) {
  Eigen::Vector2d u = b - a, v = c - a;
  double area2 = std::abs(u.x() * v.y() - u.y() * v.x());
  double scale = std::max({u.norm(), v.norm(), 1e-12});
  return area2 < 1e-9 * scale * scale;
}

bool sample_degenerate(const std::vector<Eigen::Vector2d>& pts) {
  for (size_t a = 0; a < pts.size(); ++a)
    for (size_t b = a + 1; b < pts.size(); ++b)
      for (size_t c = b + 1; c < pts.size(); ++c)
        if (triple_collinear(pts[a], pts[b], pts[c])) return true;
  return false;
}

}  // namespace

HomographyRansacResult estimate_homography_ransac(
    const std::vector<PointMatch>& matches, double inlier_px, int max_iters,
    uint64_t seed) {
  const int n = static_cast<int>(matches.size());
  require(n >= 4, ErrorCode::InsufficientData,
          "estimate_homography_ransac: need at least four matches");
  require(inlier_px > 0.0 && max_iters > 0, ErrorCode::InvalidArgument,
          "estimate_homography_ransac: bad threshold or iteration budget");
  const double thresh_sq = inlier_px * inlier_px;

  auto transfer_sq = [&](const Eigen::Matrix3d& H, int i) {
    Eigen::Vector3d v = H * homog(matches[i].source);
    if (std::abs(v.z()) < 1e-15) return std::numeric_limits<double>::infinity();
    Eigen::Vector2d proj(v.x() / v.z(), v.y() / v.z());
    return (proj - matches[i].support).squaredNorm();
  };
  auto score_model = [&](const Eigen::Matrix3d& H, std::vector<uint8_t>* mask,
                         double* truncated) {
    int count = 0;
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      double d = transfer_sq(H, i);
      bool in = d <= thresh_sq;
      count += in ? 1 : 0;
      total += std::min(d, thresh_sq);
      if (mask) (*mask)[i] = in ? 1 : 0;
    }
    if (truncated) *truncated = total;
    return count;
  };

  Eigen::Matrix3d best_H;
  bool have_model = false;
  int best_count = -1;
  double best_score = std::numeric_limits<double>::infinity();
  int needed = max_iters;
  for (int it = 0; it < max_iters && it < needed; ++it) {
    Pcg32 rng(seed, static_cast<uint64_t>(it) + 1);
    std::vector<int> idx = sample_distinct(rng, 4, n);
    std::vector<Eigen::Vector2d> s1, s2;
    for (int i : idx) {
      s1.push_back(matches[i].source);
      s2.push_back(matches[i].support);
    }
    if (sample_degenerate(s1) || sample_degenerate(s2)) continue;
    Eigen::Matrix3d H;
    try {
      H = homography_dlt(s1, s2);
    } catch (const Error&) {
      continue;
    }
    double truncated = 0.0;
    int count = score_model(H, nullptr, &truncated);
    if (count > best_count || (count == best_count && truncated < best_score)) {
      best_count = count;
      best_score = truncated;
      best_H = H;
      have_model = true;
      needed = std::min(max_iters, ransac_required_iters(count, n, 4, max_iters));
    }
  }
  require(have_model && best_count >= 4, ErrorCode::Degenerate,
          "estimate_homography_ransac: no valid model found");

  HomographyRansacResult result;
  result.H = best_H;
  result.inliers.assign(n, 0);
  result.n_inliers = score_model(best_H, &result.inliers, nullptr);
  if (result.n_inliers > 4) {
    std::vector<Eigen::Vector2d> r1, r2;
    for (int i = 0; i < n; ++i) {
      if (!result.inliers[i]) continue;
      r1.push_back(matches[i].source);
      r2.push_back(matches[i].support);
    }
    try {
      Eigen::Matrix3d refit = homography_dlt(r1, r2);
      std::vector<uint8_t> mask(n, 0);
      int count = score_model(refit, &mask, nullptr);
      if (count >= result.n_inliers) {
        result.H = refit;
        result.inliers = mask;
        result.n_inliers = count;
      }
    } catch (const Error&) {
      // keep the minimal-sample model
    }
  }
  return result;
}

}  // namespace gm
