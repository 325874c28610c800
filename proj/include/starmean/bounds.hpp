#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

#include "starmean/entropy.hpp"
#include "starmean/hypotests.hpp"
#include "starmean/normal.hpp"
#include "starmean/star_set.hpp"

namespace starmean {

// D(q || p) = q log(q/p) + (1-q) log((1-q)/(1-p))
inline double kl_bernoulli(double q, double p) {
  if (!(p > 0.0 && p < 1.0 && q >= 0.0 && q <= 1.0)) throw std::domain_error("kl_bernoulli: bad arguments");
  double s = 0.0;
  if (q > 0.0) s += q * std::log(q / p);
  if (q < 1.0) s += (1.0 - q) * std::log((1.0 - q) / (1.0 - p));
  return s;
}

// P(Bin(N, p) <= N (p - t)) <= exp(-2 N t^2)
inline double hoeffding_tail(std::size_t N, double p, double t) {
  (void)p;
  if (t < 0.0) throw std::domain_error("hoeffding_tail: need t >= 0");
  return std::exp(-2.0 * static_cast<double>(N) * t * t);
}

// P(Bin(N, p) <= N q) <= exp(-N D(q || p)) for q <= p
inline double kl_chernoff_tail(std::size_t N, double p, double q) {
  if (q > p) throw std::domain_error("kl_chernoff_tail: lower tail needs q <= p");
  return std::exp(-static_cast<double>(N) * kl_bernoulli(q, p));
}

// 1 - Phi(z) <= (1/2) exp(-z^2 / 2) for z >= 0
inline double gaussian_tail(double z) {
  if (z < 0.0) throw std::domain_error("gaussian_tail: need z >= 0");
  return 0.5 * std::exp(-0.5 * z * z);
}

// P(||X - mu|| > R) <= 5^n exp(-R^2 / (8 sigma^2)) for sub-Gaussian X, capped at 1
inline double subgaussian_norm_tail(std::size_t n, double sigma, double R) {
  if (!(sigma > 0.0 && R >= 0.0)) throw std::domain_error("subgaussian_norm_tail: bad arguments");
  const double log_val = static_cast<double>(n) * std::log(5.0) - R * R / (8.0 * sigma * sigma);
  return std::min(1.0, std::exp(log_val));
}

// Chord bound from convexity of the upper tail: for 0 <= z <= L,
// 1 - Phi(z) <= 1/2 - (z/L)(Phi(L) - 1/2).
inline double cdf_convexity_bound(double z, double L) {
  if (!(L > 0.0) || z < 0.0 || z > L) throw std::domain_error("cdf_convexity_bound: need 0 <= z <= L");
  return 0.5 - (z / L) * (normal_cdf(L) - 0.5);
}

// Fano-type lower bound: maximize eta^2 / (8 c^2) over eta satisfying
// log M^loc(eta, c) > 4 (N eta^2 / (2 sigma^2) v log 2). Absolute constants
// are dropped (set to 1); outputs are "up to absolute constants".
inline double fano_lower(const std::function<double(double)>& log_mloc, double eta_max,
                         std::size_t N, double sigma, double c, std::size_t grid = 64) {
  double best = 0.0;
  for (std::size_t i = 1; i <= grid; ++i) {
    const double eta = eta_max * static_cast<double>(i) / static_cast<double>(grid);
    const double lhs = log_mloc(eta);
    const double rhs = 4.0 * std::max(static_cast<double>(N) * eta * eta / (2.0 * sigma * sigma),
                                      std::log(2.0));
    if (lhs > rhs) best = std::max(best, eta * eta / (8.0 * c * c));
  }
  return best;
}

inline double fano_lower(const StarSet& set, std::size_t N, double sigma, double c,
                         const LocalEntropyOptions& opts = {}) {
  if (is_singleton(set)) return 0.0;
  double eta_max;
  if (set.bounded()) {
    eta_max = *set.diameter();
  } else if (opts.region) {
    eta_max = opts.region->second;
  } else {
    throw std::invalid_argument("fano_lower: unbounded set requires a localization region");
  }
  return fano_lower([&](double eta) { return local_entropy(set, eta, c, eta / 8.0, opts); }, eta_max,
                    N, sigma, c);
}

// Lemma-level corruption lower bounds, constant-1 convention.
inline double corruption_lower(double sigma, double epsilon, double d) {
  if (!(epsilon >= 0.0 && epsilon < 0.5)) throw std::domain_error("corruption_lower: epsilon in [0, 1/2)");
  if (epsilon == 0.0 || d == 0.0) return 0.0;
  return std::min(epsilon * epsilon * sigma * sigma, d * d);
}

inline double subgaussian_lower(double sigma, double epsilon, double d) {
  if (!(epsilon >= 0.0 && epsilon < 0.5)) throw std::domain_error("subgaussian_lower: epsilon in [0, 1/2)");
  if (epsilon == 0.0 || d == 0.0) return 0.0;
  return std::min(epsilon * epsilon * std::log(1.0 / epsilon) * sigma * sigma, d * d);
}

struct RateEnvelope {
  double eta_star_sq = 0.0;
  double corruption_term = 0.0;  // sigma^2 eps^2, or sigma^2 eps^2 log(1/eps)
  std::optional<double> d_sq;    // absent for unbounded sets
  double rate = 0.0;
};

inline RateEnvelope rate_envelope(NoiseVariant variant, double eta_star_val, double sigma,
                                  double epsilon, std::optional<double> d) {
  RateEnvelope env;
  env.eta_star_sq = eta_star_val * eta_star_val;
  const double s2e2 = sigma * sigma * epsilon * epsilon;
  env.corruption_term = (variant == NoiseVariant::UnknownSubGaussian && epsilon > 0.0)
                            ? s2e2 * std::log(1.0 / epsilon)
                            : s2e2;
  env.rate = std::max(env.eta_star_sq, env.corruption_term);
  if (d) {
    env.d_sq = (*d) * (*d);
    env.rate = std::min(env.rate, *env.d_sq);
  }
  return env;
}

}  // namespace starmean
