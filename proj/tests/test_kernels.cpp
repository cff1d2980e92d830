#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "mstnhp/kernels.hpp"
#include "support.hpp"

using namespace mstnhp;

TEST_CASE("temporal factor") {
  REQUIRE(temporal_factor(0.3, 0.0) == 0.0);  // strict indicator at zero lag
  REQUIRE(temporal_factor(0.3, 1.0) == Catch::Approx(0.222245).margin(1e-6));
  REQUIRE(temporal_factor(2.0, -1.0) == 0.0);
}

TEST_CASE("spatial factor") {
  REQUIRE(spatial_factor(0.5, {0, 0}) == Catch::Approx(0.318310).margin(1e-6));
  REQUIRE(spatial_factor(0.25, {0.5, 0.0}) == Catch::Approx(0.3861294).margin(1e-6));
  // normalization: midpoint quadrature of the density over a wide box
  const int n = 400;
  const double lo = -5.0, hi = 5.0, d = (hi - lo) / n;
  double acc = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      acc += spatial_factor(0.5, {lo + (i + 0.5) * d, lo + (j + 0.5) * d}) * d * d;
  REQUIRE(acc == Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("preset parameter tables") {
  const auto b1 = biv1_params();
  REQUIRE(b1.K == 2);
  REQUIRE(b1.mu == std::vector<double>{0.1, 0.1});
  REQUIRE(b1.alpha == std::vector<double>{0.25, 0.1, 0.1, 0.25});
  REQUIRE(b1.b(1, 1) == 0.3);
  REQUIRE(b1.s2(1, 1) == 0.5);
  const auto b2 = biv2_params();
  REQUIRE(b2.a(1, 2) == -0.1);
  REQUIRE(b2.a(2, 1) == -0.1);
  const auto b3 = biv3_params();
  REQUIRE(b3.b(1, 1) == 0.1);
  REQUIRE(b3.s2(1, 2) == 0.25);
  REQUIRE(b3.s2(1, 1) == 0.5);
  const auto ct = compare_temporal_spec();
  REQUIRE(ct.mu == std::vector<double>{0.3, 0.3});
  REQUIRE(ct.beta == std::vector<double>{1.3, 0.4});
  REQUIRE(ct.a(1, 1) == 0.15);
  REQUIRE(ct.a(2, 2) == 0.15);
}

TEST_CASE("spatio-temporal intensity examples") {
  const auto b1 = biv1_params();
  REQUIRE(st_intensity(b1, {}, 1, {0.3, 0.3}, 5.0) == Catch::Approx(0.1));
  REQUIRE(st_intensity(Biv4Kernel{}, {}, 2, {0.3, 0.3}, 5.0) == Catch::Approx(0.1));

  std::vector<STEvent> hist = {{1, 0.0, {0.5, 0.5}}};
  const double lam = st_intensity(b1, hist, 1, {0.5, 0.5}, 1.0);
  REQUIRE(lam == Catch::Approx(0.117686).margin(1e-6));
  REQUIRE_THROWS_AS(st_intensity(b1, hist, 3, {0.5, 0.5}, 1.0), std::invalid_argument);
}

TEST_CASE("inhibition clamps the intensity at zero") {
  const auto b2 = biv2_params();
  std::vector<STEvent> hist;
  for (int i = 0; i < 15; ++i) hist.push_back({2, i * 1e-6, {0.5, 0.5}});
  const double t = 1e-3;
  REQUIRE(st_intensity_raw(b2, hist, 1, {0.5, 0.5}, t) < 0.0);
  REQUIRE(st_intensity(b2, hist, 1, {0.5, 0.5}, t) == 0.0);
}

TEST_CASE("temporal intensity examples") {
  const auto ct = compare_temporal_spec();
  REQUIRE(temporal_intensity(ct, {}, 1, 1.0) == Catch::Approx(0.3));
  std::vector<STEvent> hist = {{1, 0.0, {}}};
  REQUIRE(temporal_intensity(ct, hist, 1, 1.0) == Catch::Approx(0.340880).margin(1e-6));
  // right-continuity: jump just after the event is the branching weight
  const double before = temporal_intensity(ct, hist, 1, 0.0);  // left limit at the event
  const double after = temporal_intensity(ct, hist, 1, 1e-9);
  REQUIRE(after - before == Catch::Approx(0.15).margin(1e-6));
}

TEST_CASE("temporal compensator closed form") {
  TemporalHawkesSpec poisson;
  poisson.K = 1;
  poisson.mu = {0.3};
  poisson.alpha = {0.0};
  poisson.beta = {1.0};
  REQUIRE(compensator_temporal(poisson, {}, 1, 0.0, 10.0) == Catch::Approx(3.0));

  TemporalHawkesSpec one;
  one.K = 1;
  one.mu = {1e-12};
  one.alpha = {0.5};
  one.beta = {0.7};
  std::vector<STEvent> hist = {{1, 0.0, {}}};
  // complete integral of the excitation kernel is alpha / beta
  REQUIRE(compensator_temporal(one, hist, 1, 0.0, 1e6) ==
          Catch::Approx(0.5 / 0.7).margin(1e-5));

  // three-event history vs trapezoid quadrature
  const auto ct = compare_temporal_spec();
  std::vector<STEvent> h3 = {{1, 0.2, {}}, {2, 1.1, {}}, {1, 2.7, {}}};
  const double t0 = 3.0, t1 = 5.0;
  const int n = 10000;
  const double dt = (t1 - t0) / n;
  double quad = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double w = (i == 0 || i == n) ? 0.5 : 1.0;
    quad += w * temporal_intensity(ct, h3, 1, t0 + i * dt) * dt;
  }
  const double exact = compensator_temporal(ct, h3, 1, t0, t1);
  REQUIRE(exact == Catch::Approx(quad).epsilon(1e-6));
}

TEST_CASE("superposition of the unclamped sum") {
  const auto b1 = biv1_params();
  RandomStream rng(5);
  std::vector<STEvent> all;
  for (int i = 0; i < 8; ++i)
    all.push_back({1 + static_cast<int>(rng.next_u64() % 2), 0.3 * i,
                   {rng.uniform(), rng.uniform()}});
  std::vector<STEvent> a(all.begin(), all.begin() + 4);
  std::vector<STEvent> b(all.begin() + 4, all.end());
  const Point s{0.4, 0.6};
  const double t = 5.0;
  for (int k = 1; k <= 2; ++k) {
    const double mu = b1.mu[static_cast<std::size_t>(k - 1)];
    const double whole = st_intensity_raw(b1, all, k, s, t) - mu;
    const double parts = (st_intensity_raw(b1, a, k, s, t) - mu) +
                         (st_intensity_raw(b1, b, k, s, t) - mu);
    REQUIRE(whole == Catch::Approx(parts).margin(1e-12));
  }
}

TEST_CASE("monotone decay of the separable sum on event-free intervals") {
  const auto b1 = biv1_params();
  std::vector<STEvent> hist = {{1, 0.0, {0.2, 0.2}}, {2, 0.5, {0.7, 0.7}}};
  const Point s{0.5, 0.5};
  double prev = st_intensity_raw(b1, hist, 1, s, 0.6);
  for (int i = 1; i <= 50; ++i) {
    const double cur = st_intensity_raw(b1, hist, 1, s, 0.6 + 0.1 * i);
    REQUIRE(cur <= prev + 1e-15);
    prev = cur;
  }
}

TEST_CASE("spatial symmetry about the source event") {
  const auto b3 = biv3_params();
  std::vector<STEvent> hist = {{2, 0.0, {0.5, 0.5}}};
  const double r = 0.3, t = 1.5;
  const double ref = st_intensity(b3, hist, 1, {0.5 + r, 0.5}, t);
  for (int i = 1; i < 12; ++i) {
    const double a = 2.0 * std::numbers::pi * i / 12.0;
    const Point s{0.5 + r * std::cos(a), 0.5 + r * std::sin(a)};
    REQUIRE(st_intensity(b3, hist, 1, s, t) == Catch::Approx(ref).margin(1e-12));
  }
}

TEST_CASE("non-separable bivariate kernel support and continuity") {
  // sine component lives on time lags [0,4] only
  REQUIRE(Biv4Kernel::g(2, 2, {0, 0}, 4.5) == 0.0);
  REQUIRE(Biv4Kernel::g(2, 2, {0, 0}, -0.5) == 0.0);
  REQUIRE(Biv4Kernel::g(2, 2, {0, 0}, 1.0) ==
          Catch::Approx(std::sin(1.0) / 8.0).margin(1e-12));
  REQUIRE(Biv4Kernel::g(2, 2, {0, 0}, 3.5) == 0.0);  // sin negative, floored

  std::vector<STEvent> hist = {{1, 0.0, {0.3, 0.3}}, {2, 0.4, {0.6, 0.6}}};
  const Point s{0.5, 0.5};
  for (int k = 1; k <= 2; ++k) {
    for (double t = 0.5; t < 6.0; t += 0.05) {
      const double a = st_intensity(Biv4Kernel{}, hist, k, s, t);
      const double b = st_intensity(Biv4Kernel{}, hist, k, s, t + 1e-7);
      REQUIRE(std::abs(b - a) < 1e-5);
    }
  }
}

TEST_CASE("non-separable kernel future envelope dominates") {
  RandomStream rng(23);
  for (int trial = 0; trial < 2000; ++trial) {
    const int k = 1 + static_cast<int>(rng.next_u64() % 2);
    const int l = 1 + static_cast<int>(rng.next_u64() % 2);
    const double dt = rng.uniform(0.0, 6.0);
    const double dt2 = dt + rng.uniform(0.0, 6.0);
    const Point ds{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    REQUIRE(Biv4Kernel::g(k, l, ds, dt2) <= Biv4Kernel::future_sup(k, l, dt) + 1e-12);
  }
}

TEST_CASE("parameter validation") {
  SeparableKernelParams p = biv1_params();
  p.beta[0] = 0.0;
  REQUIRE_THROWS_AS(p.validate(), std::invalid_argument);
  p = biv1_params();
  p.mu = {0.1};
  REQUIRE_THROWS_AS(p.validate(), std::invalid_argument);
  TemporalHawkesSpec t = compare_temporal_spec();
  t.mu[0] = 0.0;
  REQUIRE_THROWS_AS(t.validate(), std::invalid_argument);
}
