#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "starmean/constants.hpp"
#include "starmean/point.hpp"
#include "starmean/rng.hpp"

namespace starmean {

enum class NoiseVariant { Gaussian, GroupedSubGaussian, UnknownSubGaussian };

struct NoiseModel {
  NoiseVariant variant = NoiseVariant::Gaussian;
  double sigma = 1.0;
  // grouped variant
  std::size_t k = 4;
  double gamma = 0.1;
  // unknown sub-Gaussian variant
  double epsilon = 0.0;  // known corruption rate
  double C3 = 0.5;       // exponent constant behind delta0
};

inline double d3_of(const NoiseModel& m) { return 8.0 + 12.0 * std::log(4.0) + 12.0 * m.C3; }

// Majority test: 1 iff at least half of the points are weakly closer to nu2.
// Threshold may be overridden (the unknown-sub-Gaussian branch uses N over a
// 2N sample).
inline int psi_gaussian(const Point& nu1, const Point& nu2, const std::vector<Point>& data) {
  if (data.empty()) throw std::invalid_argument("psi_gaussian: empty sample");
  std::size_t count = 0;
  for (const auto& x : data)
    if (dist_sq(x, nu1) >= dist_sq(x, nu2)) ++count;
  return 2 * count >= data.size() ? 1 : 0;
}

// Means of X_i + R_i over consecutive groups of size k; a trailing remainder
// is dropped. Exposed so the grouped test and the estimator share it.
inline std::vector<Point> group_means(const std::vector<Point>& data, const std::vector<Point>& r_draws,
                                      std::size_t k, std::size_t* dropped = nullptr) {
  if (k < 1 || k > data.size()) throw std::invalid_argument("group_means: need 1 <= k <= N");
  if (r_draws.size() < data.size()) throw std::invalid_argument("group_means: missing smoothing draws");
  const std::size_t groups = data.size() / k;
  if (dropped) *dropped = data.size() - groups * k;
  std::vector<Point> means(groups, Point(data.front().size(), 0.0));
  for (std::size_t j = 0; j < groups; ++j) {
    for (std::size_t i = j * k; i < (j + 1) * k; ++i)
      for (std::size_t d = 0; d < means[j].size(); ++d) means[j][d] += data[i][d] + r_draws[i][d];
    for (double& v : means[j]) v /= static_cast<double>(k);
  }
  return means;
}

inline int psi_grouped(const Point& nu1, const Point& nu2, const std::vector<Point>& data,
                       const std::vector<Point>& r_draws, std::size_t k) {
  return psi_gaussian(nu1, nu2, group_means(data, r_draws, k));
}

// V = (||x - nu1||^2 - ||x - nu2||^2) / ||nu2 - nu1||
inline double v_statistic(const Point& nu1, const Point& nu2, const Point& x) {
  const double sep = dist(nu1, nu2);
  if (sep <= 0.0) throw std::invalid_argument("v_statistic: nu1 == nu2");
  return (dist_sq(x, nu1) - dist_sq(x, nu2)) / sep;
}

inline double clamp_phi(double x, double a, double b) { return std::min(std::max(x, a), b); }

// Quantile convention: type-1 lower empirical quantile, index ceil(p*N) of
// the sorted half (1-based).
inline double lower_quantile(const std::vector<double>& sorted_vals, double p) {
  const auto n = sorted_vals.size();
  auto idx = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n)));
  idx = std::min(std::max<std::size_t>(idx, 1), n);
  return sorted_vals[idx - 1];
}

// Core trimmed mean at a given trimming level: quantiles from the second
// half, clamped mean over the first half.
inline double trimmed_mean_at(const std::vector<double>& values, double eps_tilde) {
  if (values.size() < 2 || values.size() % 2 != 0)
    throw std::invalid_argument("trimmed_mean: need an even sample of 2N values");
  if (!(eps_tilde > 0.0 && eps_tilde < 0.5))
    throw std::domain_error("trimmed_mean: eps_tilde outside (0, 1/2)");
  const std::size_t n = values.size() / 2;
  std::vector<double> second(values.begin() + static_cast<std::ptrdiff_t>(n), values.end());
  std::sort(second.begin(), second.end());
  const double q1 = lower_quantile(second, eps_tilde);
  const double q2 = lower_quantile(second, 1.0 - eps_tilde);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += clamp_phi(values[i], q1, q2);
  return sum / static_cast<double>(n);
}

// TM_{delta0}: eps_tilde = 8 eps + 12 log(4/delta0) / N. Signals the invalid
// regime when eps_tilde leaves (0, 1/2).
inline double trimmed_mean(const std::vector<double>& values, double epsilon, double delta0) {
  if (values.size() < 2 || values.size() % 2 != 0)
    throw std::invalid_argument("trimmed_mean: need an even sample of 2N values");
  if (!(delta0 > 0.0 && delta0 < 1.0)) throw std::invalid_argument("trimmed_mean: delta0 in (0,1)");
  const std::size_t n = values.size() / 2;
  const double eps_tilde = 8.0 * epsilon + 12.0 * std::log(4.0 / delta0) / static_cast<double>(n);
  return trimmed_mean_at(values, eps_tilde);
}

// delta-dependent test for unknown sub-Gaussian noise on a 2N sample of
// smoothed points Z_i = X_i + R_i: trimmed-mean sign test when delta/sigma is
// small, the majority rule (threshold N over 2N) otherwise.
inline int psi_unknown_subgaussian(const Point& nu1, const Point& nu2,
                                   const std::vector<Point>& smoothed, double delta,
                                   const NoiseModel& model) {
  if (!(delta > 0.0)) throw std::invalid_argument("psi_unknown_subgaussian: need delta > 0");
  if (smoothed.size() % 2 != 0)
    throw std::invalid_argument("psi_unknown_subgaussian: need an even sample");
  const std::size_t n = smoothed.size() / 2;
  const double ratio = delta * delta / (model.sigma * model.sigma);
  const double d3 = d3_of(model);
  if (ratio <= 1.0 / (4.0 * d3)) {
    const double delta0 = std::exp(-model.C3 * static_cast<double>(n) * ratio);
    std::vector<double> v(smoothed.size());
    for (std::size_t i = 0; i < smoothed.size(); ++i) v[i] = v_statistic(nu1, nu2, smoothed[i]);
    return trimmed_mean(v, model.epsilon, delta0) > 0.0 ? 1 : 0;
  }
  std::size_t count = 0;
  for (const auto& z : smoothed)
    if (dist_sq(z, nu1) >= dist_sq(z, nu2)) ++count;
  return count >= n ? 1 : 0;
}

// Inputs a pairwise test needs beyond the two points. The smoothing draws
// are generated once per estimation run and reused across all tests in it.
struct DominationContext {
  NoiseModel noise;
  const std::vector<Point>* data = nullptr;        // raw observations
  std::vector<Point> smoothed;                     // X_i + R_i (variants 2-3)
  std::vector<Point> grouped_means;                // variant 2
  double delta = 0.0;                              // variant 3 tests are delta-dependent
  std::size_t dropped_tail = 0;
};

inline DominationContext make_context(const std::vector<Point>& data, const NoiseModel& model,
                                      Rng* rng = nullptr) {
  DominationContext ctx;
  ctx.noise = model;
  ctx.data = &data;
  if (model.variant != NoiseVariant::Gaussian) {
    if (!rng) throw std::invalid_argument("make_context: smoothing draws need an rng");
    std::vector<Point> r;
    r.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i)
      r.push_back(rng->normal_vector(data.front().size(), model.sigma));
    ctx.smoothed.resize(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) ctx.smoothed[i] = add(data[i], r[i]);
    if (model.variant == NoiseVariant::GroupedSubGaussian)
      ctx.grouped_means = group_means(data, r, model.k, &ctx.dropped_tail);
  }
  return ctx;
}

inline int psi_dispatch(const Point& nu1, const Point& nu2, const DominationContext& ctx) {
  switch (ctx.noise.variant) {
    case NoiseVariant::Gaussian:
      return psi_gaussian(nu1, nu2, *ctx.data);
    case NoiseVariant::GroupedSubGaussian:
      return psi_gaussian(nu1, nu2, ctx.grouped_means);
    case NoiseVariant::UnknownSubGaussian:
      return psi_unknown_subgaussian(nu1, nu2, ctx.smoothed, ctx.delta, ctx.noise);
  }
  throw std::logic_error("psi_dispatch: unknown variant");
}

// 1 iff a dominates b. The pair is sorted lexicographically before testing;
// psi = 0 favors the smaller point. Exactly one of a > b, b > a holds, and
// nothing here may assume transitivity.
inline int dominates(const Point& a, const Point& b, const DominationContext& ctx) {
  if (!lex_less(a, b) && !lex_less(b, a)) throw std::invalid_argument("dominates: a == b");
  const bool a_first = lex_less(a, b);
  const Point& nu1 = a_first ? a : b;
  const Point& nu2 = a_first ? b : a;
  const int psi = psi_dispatch(nu1, nu2, ctx);
  const bool nu1_wins = (psi == 0);
  return (a_first == nu1_wins) ? 1 : 0;
}

}  // namespace starmean
