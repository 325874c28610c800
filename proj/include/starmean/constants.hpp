#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "starmean/normal.hpp"

namespace starmean {

// g(t) = (1/2+t) log(1/2+t) + (1/2-t) log(1-2t) on [0, 1/2); negative there.
inline double g_func(double t) {
  if (!(t >= 0.0 && t < 0.5)) throw std::domain_error("g_func: t must be in [0, 1/2)");
  const double a = 0.5 + t;
  const double b = 0.5 - t;
  return a * std::log(a) + (t == 0.0 ? b * std::log(1.0) : b * std::log(1.0 - 2.0 * t));
}

// h(t) = t (1 - exp(2 g(t) / (1/2 - t))); increasing surjection onto (0, 1/2).
inline double h_func(double t) {
  if (!(t >= 0.0 && t < 0.5)) throw std::domain_error("h_func: t must be in [0, 1/2)");
  return t * (1.0 - std::exp(2.0 * g_func(t) / (0.5 - t)));
}

struct GaussianConstants {
  double C = 0.0;
  double kappa = 0.0;
  double C_prime = 0.0;  // (C-2)/(2 sqrt(2 pi))
  double alpha = 0.0;
  double beta = 0.0;
  double C1 = 0.0;
  double C2 = 0.0;
  double L = 0.0;
  double C3 = 0.0;  // min of the two case exponents
};

// Resolve the constants behind the Gaussian testing bound for given C > 2 and
// kappa in (0, 1/2]. alpha solves h(alpha) = 1/2 - kappa (plus a 1% margin so
// the strict inequalities survive floating point); beta is minimal with
// Phi^{-1}(1/2 + beta/C') > sqrt(-2 g(alpha)/(1/2 - alpha)), again with a 1%
// margin. Then C1 = 2 Phi^{-1}(1/2 + beta/C')/beta, L = beta C1 / 2,
// C2 = C' (Phi(L) - 1/2)/L, and C1 C2 = 2 identically.
inline GaussianConstants solve_gaussian_constants(double C, double kappa) {
  if (!(C > 2.0)) throw std::invalid_argument("solve_gaussian_constants: need C > 2");
  if (!(kappa > 0.0 && kappa <= 0.5)) throw std::invalid_argument("solve_gaussian_constants: kappa in (0, 1/2]");
  GaussianConstants k;
  k.C = C;
  k.kappa = kappa;
  k.C_prime = (C - 2.0) / (2.0 * std::sqrt(2.0 * kPi));

  const double target = 0.5 - kappa;
  double alpha;
  if (target <= 0.0) {
    alpha = 1e-4;  // kappa = 1/2: any alpha in (0, 1/2) works
  } else {
    double lo = 1e-12, hi = 0.5 - 1e-12;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (h_func(mid) < target ? lo : hi) = mid;
    }
    alpha = 0.5 * (lo + hi) * 1.01;
    if (!(alpha < 0.5))
      throw std::domain_error("solve_gaussian_constants: kappa too small, alpha margin leaves (0, 1/2)");
  }
  k.alpha = alpha;

  const double root = std::sqrt(-2.0 * g_func(alpha) / (0.5 - alpha));
  double beta = k.C_prime * (normal_cdf(root) - 0.5) * 1.01;
  if (beta / k.C_prime >= 0.5) beta = k.C_prime * (0.25 + 0.5 * (normal_cdf(root) - 0.5));
  k.beta = beta;

  const double q = normal_quantile(0.5 + beta / k.C_prime);
  k.C1 = 2.0 * q / beta;
  k.L = beta * k.C1 / 2.0;
  k.C2 = k.C_prime * (normal_cdf(k.L) - 0.5) / k.L;
  k.C3 = std::min(k.C2 * k.C2 / 2.0, (0.5 - alpha) * k.C_prime * k.C_prime / 2.0);
  return k;
}

// Grouped (known or symmetric sub-Gaussian) test configuration. The group
// size k and gamma come from a local CLT with non-constructive constants, so
// they are configuration with documented defaults; C1 C2 = 2k is enforced.
struct GroupedConstants {
  std::size_t k = 4;
  double gamma = 0.1;  // requires epsilon <= gamma / k
  double D2 = 24.0;
  double C = 0.0;
  double C1 = 0.0;  // 4 k D2 / (C - 2)
  double C2 = 0.0;  // (C - 2) / (2 D2)
  double C3 = 0.0;  // Hoeffding-case exponent C2^2 / (2k)
};

inline GroupedConstants solve_grouped_constants(double C, std::size_t k = 4, double gamma = 0.1,
                                                double D2 = 24.0) {
  if (!(C > 2.0)) throw std::invalid_argument("solve_grouped_constants: need C > 2");
  if (k < 1 || !(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("solve_grouped_constants: bad k or gamma");
  GroupedConstants g;
  g.k = k;
  g.gamma = gamma;
  g.D2 = D2;
  g.C = C;
  g.C1 = 4.0 * static_cast<double>(k) * D2 / (C - 2.0);
  g.C2 = (C - 2.0) / (2.0 * D2);
  g.C3 = g.C2 * g.C2 / (2.0 * static_cast<double>(k));
  return g;
}

struct UnknownSubGaussianConstants {
  double C3 = 0.0;  // trimmed-mean branch exponent (configurable)
  double D1 = 0.0;  // 4 sqrt(2 (C3 + log 4))
  double D2 = 24.0;
  double D3 = 0.0;  // 8 + 3 D1^2 / 8 = 8 + 12 log 4 + 12 C3
  double D4 = 0.0;  // D2 sqrt(2 D3) + D1
  double D6 = 0.0;  // sqrt(64 D3 log 2)
  double C = 0.0;   // satisfies C - 2 > max(D1, D4, D6)
  double C1 = 0.0;  // > D2 D3 / (C - 2 - D1)
  double alpha = 0.0;
  double beta = 0.0;
  double C4 = 0.0;  // majority-branch exponent (1/2 - alpha) beta (C-2)^2 / 32
  double C5 = 0.0;  // overall Type I exponent min(C3, C4)
};

// Construct the unknown-sub-Gaussian constants for a chosen trimmed-mean
// exponent C3. alpha solves h(alpha) = 1/32 (plus margin); C is then pushed
// above both max(D1, D4, D6) + 2 and the value making the varrho-case
// inequality hold.
inline UnknownSubGaussianConstants solve_unknown_subgaussian_constants(double C3 = 0.5,
                                                                       double D2 = 24.0) {
  if (!(C3 > 0.0)) throw std::invalid_argument("solve_unknown_subgaussian_constants: need C3 > 0");
  UnknownSubGaussianConstants u;
  u.C3 = C3;
  u.D2 = D2;
  u.D1 = 4.0 * std::sqrt(2.0 * (C3 + std::log(4.0)));
  u.D3 = 8.0 + 3.0 * u.D1 * u.D1 / 8.0;
  u.D4 = D2 * std::sqrt(2.0 * u.D3) + u.D1;
  u.D6 = std::sqrt(64.0 * u.D3 * std::log(2.0));

  double lo = 1e-12, hi = 0.5 - 1e-12;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (h_func(mid) < 1.0 / 32.0 ? lo : hi) = mid;
  }
  u.alpha = 0.5 * (lo + hi) * 1.01;

  const double need = -2.0 * g_func(u.alpha) / (0.5 - u.alpha);
  const double c_from_alpha = 2.0 + std::sqrt(64.0 * u.D3 * (need + std::log(2.0)));
  u.C = 1.01 * std::max(2.0 + std::max(u.D1, std::max(u.D4, u.D6)), c_from_alpha);
  u.C1 = 1.01 * u.D2 * u.D3 / (u.C - 2.0 - u.D1);
  u.beta = 1.0 - 64.0 * u.D3 * std::log(2.0) / ((u.C - 2.0) * (u.C - 2.0));
  u.C4 = (0.5 - u.alpha) * u.beta * (u.C - 2.0) * (u.C - 2.0) / 32.0;
  u.C5 = std::min(u.C3, u.C4);
  return u;
}

struct UnboundedParams {
  double gamma = 0.0;
  double R = 0.0;
  double m = 0.0;    // R / (c - 1)
  double d_m = 0.0;  // 2 m + 2 R
  bool gamma_overridden = false;
};

// Lower bounds on gamma required by the unbounded theory.
inline double gamma_lower_bound_gaussian(double C, double C1, double C3) {
  return std::max(1.0 - C3 / (6.0 * (C + 1.0) * (C + 1.0) * std::log(2.0)),
                  1.0 - 4.0 / ((C + 1.0) * (C + 1.0) * C1 * C1));
}

inline double gamma_lower_bound_subgaussian(double C, double C1, double C5) {
  const double c2 = (C + 1.0) * (C + 1.0);
  return std::max(1.0 - C5 / (6.0 * c2 * std::log(2.0)),
                  std::max(1.0 - 1.0 / c2, 1.0 - 1.0 / (C1 * C1 * c2)));
}

// R = 1.01 x max of the three tail bounds and 2(C+1); m and d_m derived.
// When allow_override is false the gamma lower bound is enforced and the
// violated inequality named; otherwise the result is flagged.
inline UnboundedParams select_R(std::size_t n, double sigma, double epsilon, double gamma,
                                double C, double c, double gamma_bound, bool allow_override = false) {
  if (!(epsilon >= 0.0 && epsilon < 0.5)) throw std::invalid_argument("select_R: need epsilon in [0, 1/2)");
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("select_R: gamma in (0,1)");
  UnboundedParams p;
  p.gamma = gamma;
  if (gamma <= gamma_bound) {
    if (!allow_override)
      throw std::invalid_argument("select_R: gamma <= required lower bound " + std::to_string(gamma_bound));
    p.gamma_overridden = true;
  }
  const double s2 = sigma * sigma;
  const double b1 = std::sqrt(8.0 * static_cast<double>(n) * s2 * std::log(5.0) / (1.0 - gamma));
  const double b2 = std::sqrt(-32.0 * s2 * g_func(epsilon) / (gamma * (0.5 - epsilon)));
  const double b3 = std::sqrt(512.0 * s2 * std::log(2.0) / (gamma * (0.5 - epsilon)));
  const double b4 = 2.0 * (C + 1.0);
  p.R = 1.01 * std::max(std::max(b1, b2), std::max(b3, b4));
  p.m = p.R / (c - 1.0);
  p.d_m = 2.0 * p.m + 2.0 * p.R;
  return p;
}

// eta_J = d sqrt(exponent_const) / (2^{J-1} (C + 1)); halves per level.
inline double eta_J(double d_or_dm, int J, double C, double exponent_const) {
  if (J < 1) throw std::invalid_argument("eta_J: need J >= 1");
  return d_or_dm * std::sqrt(exponent_const) / (std::ldexp(1.0, J - 1) * (C + 1.0));
}

}  // namespace starmean
