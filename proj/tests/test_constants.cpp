#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "starmean/constants.hpp"
#include "starmean/normal.hpp"

using namespace starmean;

TEST_CASE("g and h pointwise values", "[constants]") {
  CHECK(g_func(0.0) == Catch::Approx(-std::log(2.0) / 2.0).epsilon(1e-12));
  // limit of -2g(t)/(1/2-t) as t -> 0 is log 4
  const double t = 1e-8;
  CHECK(-2.0 * g_func(t) / (0.5 - t) == Catch::Approx(std::log(4.0)).margin(1e-5));
  CHECK(h_func(0.49) > 0.45);
  CHECK_THROWS_AS(g_func(0.5), std::domain_error);
  CHECK_THROWS_AS(h_func(-0.01), std::domain_error);
}

TEST_CASE("g and h property grid", "[constants]") {
  double prev_ratio = -1e300;
  for (int i = 0; i < 1000; ++i) {
    const double t = (i + 0.5) / 1000.0 * 0.5;
    CHECK(g_func(t) < 0.0);
    const double ratio = -2.0 * g_func(t) / (0.5 - t);
    CHECK(ratio > prev_ratio);  // increasing on (0, 1/2)
    prev_ratio = ratio;
    const double frac = h_func(t) / t;
    CHECK(frac > 0.0);
    CHECK(frac < 1.0);
  }
}

TEST_CASE("normal quantile accuracy", "[constants]") {
  // above z ~ 4 the rounding of p = Phi(z) itself moves the true quantile by
  // more than 1e-12, so the round trip is only meaningful below that
  for (int i = 1; i < 200; ++i) {
    const double z = -8.0 + 12.0 * i / 200.0;
    const double p = normal_cdf(z);
    if (p <= 0.0 || p >= 1.0) continue;
    CHECK(normal_quantile(p) == Catch::Approx(z).margin(1e-12));
  }
  // the upper tail is served by symmetry
  for (int i = 1; i < 50; ++i) {
    const double p = i / 50.0 * 0.49;
    CHECK(normal_quantile(1.0 - p) == Catch::Approx(-normal_quantile(p)).margin(1e-11));
  }
}

TEST_CASE("gaussian constants satisfy the construction identities", "[constants]") {
  struct Case {
    double C, kappa;
  };
  for (const auto& [C, kappa] : {Case{6.0, 0.25}, Case{10.0, 0.1}, Case{6.0, 0.45}}) {
    const auto k = solve_gaussian_constants(C, kappa);
    CHECK(k.C1 * k.C2 == Catch::Approx(2.0).margin(1e-9));
    CHECK(k.L == Catch::Approx(k.beta * k.C1 / 2.0).margin(1e-12));
    CHECK(k.alpha > 0.0);
    CHECK(k.alpha < 0.5);
    CHECK(k.C3 > 0.0);
    CHECK(k.C3 == Catch::Approx(std::min(k.C2 * k.C2 / 2.0, (0.5 - k.alpha) * k.C_prime * k.C_prime / 2.0)));

    // conditions (i) and (ii) on a 100-point grid of C' delta / sigma in (L, 10 L]
    const double eps = 0.5 - kappa;
    for (int i = 1; i <= 100; ++i) {
      const double z = k.L * (1.0 + 9.0 * i / 100.0);
      const double varrho = std::exp(-z * z);
      CHECK(eps < k.alpha * (1.0 - varrho));
      CHECK((0.5 - k.alpha) * std::log(1.0 / varrho) >= -2.0 * g_func(k.alpha));
    }
  }
  // alpha solves h(alpha) = 1/2 - kappa before the margin
  const auto k = solve_gaussian_constants(6.0, 0.25);
  CHECK(h_func(k.alpha / 1.01) == Catch::Approx(0.25).margin(1e-9));
  CHECK_THROWS_AS(solve_gaussian_constants(2.0, 0.25), std::invalid_argument);
  CHECK_THROWS_AS(solve_gaussian_constants(6.0, 1e-14), std::domain_error);
}

TEST_CASE("C3 positive across the feasible grid", "[constants]") {
  for (double C : {4.0, 6.0, 8.0, 12.0})
    for (double kappa : {0.05, 0.15, 0.3, 0.5}) {
      const auto k = solve_gaussian_constants(C, kappa);
      CHECK(k.C3 > 0.0);
    }
}

TEST_CASE("grouped constants enforce C1 C2 = 2k", "[constants]") {
  const auto g = solve_grouped_constants(3.0, 4, 0.1, 24.0);
  CHECK(g.C1 * g.C2 == Catch::Approx(2.0 * 4.0).margin(1e-9));
  CHECK(g.C3 > 0.0);
}

TEST_CASE("unknown sub-Gaussian constants satisfy Lemma-level invariants", "[constants]") {
  for (double C3 : {0.25, 0.5, 1.0}) {
    const auto u = solve_unknown_subgaussian_constants(C3);
    CHECK(u.D3 == Catch::Approx(8.0 + 12.0 * std::log(4.0) + 12.0 * C3).margin(1e-9));
    CHECK(u.C - 2.0 > std::max(u.D1, std::max(u.D4, u.D6)));
    const double frac = u.D2 * u.D3 / (u.C1 * (u.C - 2.0 - u.D1));
    CHECK(frac > 0.0);
    CHECK(frac < 1.0);
    CHECK(u.beta > 0.0);
    CHECK(u.beta < 1.0);
    CHECK(u.C5 > 0.0);
    CHECK(u.C5 <= u.C3);
    // alpha admits a corruption rate of 1/32
    CHECK(h_func(u.alpha) > 1.0 / 32.0);
  }
}

TEST_CASE("R selection", "[constants]") {
  // the second bound's radicand is positive on all of (0, 1/2)
  for (int i = 1; i < 50; ++i) {
    const double eps = i / 100.0;
    CHECK(-2.0 * g_func(eps) / (0.5 - eps) > std::log(4.0));
  }

  const double C = 3.0, c = 8.0;
  const auto p = select_R(2, 1.0, 0.1, 0.99, C, c, 0.5);
  // direct formula oracle
  const double b1 = std::sqrt(8.0 * 2.0 * std::log(5.0) / 0.01);
  const double b2 = std::sqrt(-32.0 * g_func(0.1) / (0.99 * 0.4));
  const double b3 = std::sqrt(512.0 * std::log(2.0) / (0.99 * 0.4));
  const double b4 = 2.0 * (C + 1.0);
  CHECK(p.R == Catch::Approx(1.01 * std::max(std::max(b1, b2), std::max(b3, b4))));
  CHECK(p.m == Catch::Approx(p.R / (c - 1.0)));
  CHECK(p.d_m == Catch::Approx(2.0 * c * p.R / (c - 1.0)));
  CHECK(p.d_m == Catch::Approx(16.0 * p.R / 7.0));  // c = 8

  CHECK_THROWS_AS(select_R(2, 1.0, 0.1, 0.4, C, c, 0.5), std::invalid_argument);
  const auto forced = select_R(2, 1.0, 0.1, 0.4, C, c, 0.5, true);
  CHECK(forced.gamma_overridden);
}

TEST_CASE("eta_J halves per level", "[constants]") {
  const double d = 2.0, C = 3.0, k = 0.11;
  CHECK(eta_J(d, 1, C, k) == Catch::Approx(d * std::sqrt(k) / (C + 1.0)));
  for (int J = 1; J < 10; ++J)
    CHECK(eta_J(d, J + 1, C, k) == Catch::Approx(eta_J(d, J, C, k) / 2.0).epsilon(1e-14));
  CHECK_THROWS_AS(eta_J(d, 0, C, k), std::invalid_argument);
}
