#include <doctest.h>

#include <cmath>

#include "core/grid_ops.hpp"
#include "core/rng.hpp"
#include "oracles.hpp"

using namespace gm;

namespace {

DenseMap ramp_image(int h, int w) {
  DenseMap img(h, w, 1);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) img.at(i, j) = j;
  return img;
}

}  // namespace

TEST_SUITE("grid_ops") {

TEST_CASE("bilinear sample reproduces stored texels at integer coordinates") {
  Pcg32 rng(7);
  DenseMap map(5, 7, 3);
  for (double& v : map.values) v = 255.0 * rng.next_double();
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 7; ++j) {
      double out[3];
      REQUIRE(bilinear_sample_one(map, j, i, BorderPolicy::Invalid, out));
      for (int k = 0; k < 3; ++k) CHECK(out[k] == map.at(i, j, k));
    }
}

TEST_CASE("bilinear sample of a constant map returns the constant") {
  DenseMap map(4, 4, 1, 42.5);
  Pcg32 rng(3);
  for (int q = 0; q < 100; ++q) {
    double x = rng.next_double() * 3.0, y = rng.next_double() * 3.0;
    double out;
    REQUIRE(bilinear_sample_one(map, x, y, BorderPolicy::Invalid, &out));
    CHECK(out == doctest::Approx(42.5).epsilon(1e-14));
  }
}

TEST_CASE("bilinear sample worked 2x2 example") {
  DenseMap map(2, 2, 1);
  map.at(0, 0) = 0.0;
  map.at(0, 1) = 2.0;
  map.at(1, 0) = 4.0;
  map.at(1, 1) = 6.0;
  double out;
  REQUIRE(bilinear_sample_one(map, 0.5, 0.0, BorderPolicy::Invalid, &out));
  CHECK(out == doctest::Approx(1.0));
}

TEST_CASE("bilinear border policies") {
  DenseMap map(2, 2, 1, 9.0);
  double out;
  CHECK_FALSE(bilinear_sample_one(map, -0.5, 0.0, BorderPolicy::Invalid, &out));
  CHECK(out == 0.0);
  REQUIRE(bilinear_sample_one(map, -0.5, 0.0, BorderPolicy::Clamp, &out));
  CHECK(out == 9.0);
  REQUIRE(bilinear_sample_one(map, 5.0, 5.0, BorderPolicy::Clamp, &out));
  CHECK(out == 9.0);
}

TEST_CASE("bilinear sample errors") {
  DenseMap map(2, 2, 1);
  double out;
  CHECK_THROWS_AS(bilinear_sample_one(DenseMap{}, 0, 0, BorderPolicy::Invalid, &out),
                  Error);
  CHECK_THROWS_AS(
      bilinear_sample_one(map, std::nan(""), 0, BorderPolicy::Invalid, &out),
      Error);
  CHECK_THROWS_AS(bilinear_sample_one(map, 0, std::numeric_limits<double>::infinity(),
                                      BorderPolicy::Invalid, &out),
                  Error);
}

TEST_CASE("bilinear output stays inside the neighboring texel range") {
  Pcg32 rng(11);
  DenseMap map(8, 9, 1);
  for (double& v : map.values) v = 255.0 * rng.next_double();
  for (int q = 0; q < 10000; ++q) {
    double x = rng.next_double() * 8.0, y = rng.next_double() * 7.0;
    double out;
    REQUIRE(bilinear_sample_one(map, x, y, BorderPolicy::Invalid, &out));
    int j0 = std::min(static_cast<int>(x), 7);
    int i0 = std::min(static_cast<int>(y), 6);
    double lo = std::min({map.at(i0, j0), map.at(i0, j0 + 1),
                          map.at(i0 + 1, j0), map.at(i0 + 1, j0 + 1)});
    double hi = std::max({map.at(i0, j0), map.at(i0, j0 + 1),
                          map.at(i0 + 1, j0), map.at(i0 + 1, j0 + 1)});
    CHECK(out >= lo - 1e-9);
    CHECK(out <= hi + 1e-9);
  }
}

TEST_CASE("warp_reconstruct identity field is the identity map") {
  Pcg32 rng(5);
  DenseMap support(6, 8, 3);
  for (double& v : support.values) v = 255.0 * rng.next_double();
  CorrespondenceField id = CorrespondenceField::identity(6, 8);
  ConfidenceMap conf(6, 8, 1.0);
  DenseMap out = warp_reconstruct(support, id, conf, 0.5);
  for (size_t i = 0; i < support.values.size(); ++i)
    CHECK(out.values[i] == support.values[i]);
}

TEST_CASE("warp_reconstruct fills low confidence with white") {
  DenseMap support(4, 4, 2, 10.0);
  CorrespondenceField id = CorrespondenceField::identity(4, 4);
  ConfidenceMap conf(4, 4, 0.0);
  DenseMap out = warp_reconstruct(support, id, conf, 0.5);
  for (double v : out.values) CHECK(v == 255.0);
}

TEST_CASE("warp_reconstruct shifted ramp matches the brute-force oracle") {
  DenseMap ramp = ramp_image(5, 9);
  CorrespondenceField shift(5, 9);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 9; ++j) shift.set(i, j, j + 1.0, i);
  ConfidenceMap conf(5, 9, 1.0);
  DenseMap out = warp_reconstruct(ramp, shift, conf, 0.5);
  DenseMap expect = oracle::warp_brute_force(ramp, shift, conf, 0.5);
  for (size_t i = 0; i < out.values.size(); ++i)
    CHECK(out.values[i] == doctest::Approx(expect.values[i]).epsilon(1e-12));
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j + 1 < 9; ++j)
      CHECK(out.at(i, j) == doctest::Approx(j + 1.0));
    CHECK(out.at(i, 8) == 255.0);  // shifted outside, filled white
  }
}

TEST_CASE("warp_reconstruct rejects mismatched shapes") {
  DenseMap support(4, 4, 1);
  CorrespondenceField field(4, 4);
  ConfidenceMap conf(3, 4);
  CHECK_THROWS_AS(warp_reconstruct(support, field, conf, 0.5), Error);
}

TEST_CASE("fb_consistency identity round trip") {
  CorrespondenceField id = CorrespondenceField::identity(5, 6);
  BoolMask mask = fb_consistency(id, id, 0.0);
  CHECK(mask.count() == 30);
}

TEST_CASE("fb_consistency opposite shifts validate the interior") {
  const int h = 6, w = 12, shift = 5;
  CorrespondenceField fwd(h, w), bwd(h, w);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      fwd.set(i, j, j + shift, i);
      bwd.set(i, j, j - shift, i);
    }
  BoolMask mask = fb_consistency(fwd, bwd, 1e-9);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j)
      CHECK(mask.at(i, j) == (j + shift <= w - 1));
}

TEST_CASE("fb_consistency against a constant backward field") {
  const int h = 7, w = 7;
  CorrespondenceField fwd = CorrespondenceField::identity(h, w);
  CorrespondenceField bwd(h, w);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) bwd.set(i, j, 3.0, 2.0);
  double tau = 1.5;
  BoolMask mask = fb_consistency(fwd, bwd, tau);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j)
      CHECK(mask.at(i, j) == (std::hypot(3.0 - j, 2.0 - i) <= tau));
}

TEST_CASE("fb_consistency is symmetric for bijective shift fields") {
  const int h = 8, w = 16, shift = 3;
  CorrespondenceField fwd(h, w), bwd(h, w);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      fwd.set(i, j, j + shift, i);
      bwd.set(i, j, j - shift, i);
    }
  BoolMask ab = fb_consistency(fwd, bwd, 1e-9);
  BoolMask ba = fb_consistency(bwd, fwd, 1e-9);
  size_t count_ab = ab.count(), count_ba = ba.count();
  CHECK(count_ab == static_cast<size_t>(h * (w - shift)));
  CHECK(count_ab == count_ba);
}

TEST_CASE("recon_metrics identical images give exact zeros") {
  Pcg32 rng(13);
  DenseMap a(16, 16, 3);
  for (double& v : a.values) v = 255.0 * rng.next_double();
  BoolMask mask(16, 16, true);
  ReconMetrics m = recon_metrics(a, a, mask);
  CHECK(m.l1 == 0.0);
  CHECK(m.one_minus_ssim == 0.0);
}

TEST_CASE("recon_metrics extreme contrast") {
  DenseMap a(12, 12, 1, 0.0);
  DenseMap b(12, 12, 1, 255.0);
  BoolMask mask(12, 12, true);
  ReconMetrics m = recon_metrics(a, b, mask);
  CHECK(m.l1 == doctest::Approx(255.0));
}

TEST_CASE("recon_metrics constant images match the closed-form SSIM") {
  DenseMap a(16, 16, 1, 100.0);
  DenseMap b(16, 16, 1, 110.0);
  BoolMask mask(16, 16, true);
  ReconMetrics m = recon_metrics(a, b, mask);
  CHECK(m.l1 == doctest::Approx(10.0).epsilon(1e-12));
  double expect = 1.0 - oracle::constant_image_ssim(100.0, 110.0);
  CHECK(m.one_minus_ssim == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("recon_metrics l1 behaves like a metric on constant maps") {
  Pcg32 rng(17);
  BoolMask mask(12, 12, true);
  for (int trial = 0; trial < 50; ++trial) {
    double va = 255 * rng.next_double(), vb = 255 * rng.next_double(),
           vc = 255 * rng.next_double();
    DenseMap a(12, 12, 1, va), b(12, 12, 1, vb), c(12, 12, 1, vc);
    double ab = recon_metrics(a, b, mask).l1;
    double ba = recon_metrics(b, a, mask).l1;
    double aa = recon_metrics(a, a, mask).l1;
    double ac = recon_metrics(a, c, mask).l1;
    double cb = recon_metrics(c, b, mask).l1;
    CHECK(ab == ba);
    CHECK(aa == 0.0);
    CHECK(ab <= ac + cb + 1e-9 * (1.0 + ac + cb));
  }
}

TEST_CASE("recon_metrics empty mask is an error") {
  DenseMap a(12, 12, 1);
  BoolMask mask(12, 12, false);
  CHECK_THROWS_AS(recon_metrics(a, a, mask), Error);
}

}  // TEST_SUITE
