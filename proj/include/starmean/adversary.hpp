#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "starmean/normal.hpp"
#include "starmean/point.hpp"
#include "starmean/rng.hpp"
#include "starmean/star_set.hpp"

namespace starmean {

// Observations before and after corruption; the mask never exceeds the
// floor(eps N) budget and clean rows pass through bit-identical.
struct Dataset {
  std::vector<Point> clean;
  std::vector<Point> observed;
  std::vector<char> corrupted_mask;
  Point mu_true;
  double epsilon_budget = 0.0;

  std::size_t corrupted_count() const {
    return static_cast<std::size_t>(std::count(corrupted_mask.begin(), corrupted_mask.end(), char(1)));
  }
  std::size_t budget() const {
    return static_cast<std::size_t>(std::floor(epsilon_budget * static_cast<double>(clean.size())));
  }
};

inline Dataset make_clean_dataset(std::vector<Point> clean, Point mu, double epsilon) {
  Dataset ds;
  ds.observed = clean;
  ds.clean = std::move(clean);
  ds.corrupted_mask.assign(ds.clean.size(), 0);
  ds.mu_true = std::move(mu);
  ds.epsilon_budget = epsilon;
  return ds;
}

// Replace the floor(eps N) points closest to mu by mu + magnitude * u, where
// u is a fixed unit direction toward a distant region of K (falling back to
// the first axis when the set gives no direction). A strong generic
// adversary for stress tests; the mask is set even at magnitude zero.
inline Dataset corrupt_oracle_shift(std::vector<Point> clean, const Point& mu, const StarSet& set,
                                    double epsilon, double magnitude, std::uint64_t /*seed*/) {
  if (!(epsilon >= 0.0 && epsilon < 0.5)) throw std::invalid_argument("corrupt_oracle_shift: epsilon in [0, 1/2)");
  Dataset ds = make_clean_dataset(std::move(clean), mu, epsilon);
  const std::size_t w = ds.budget();
  if (w == 0) return ds;

  Point u(mu.size(), 0.0);
  if (set.bounded() && *set.diameter() > 0.0) {
    auto pts = strided(set.candidates(set.center(), *set.diameter(), *set.diameter() / 16.0), 512);
    double best = -1.0;
    for (const auto& p : pts) {
      const double ds2 = dist_sq(p, mu);
      if (ds2 > best) {
        best = ds2;
        u = sub(p, mu);
      }
    }
  }
  if (norm(u) <= 0.0) u[0] = 1.0;
  u = scale(u, 1.0 / norm(u));

  std::vector<std::size_t> idx(ds.clean.size());
  std::iota(idx.begin(), idx.end(), 0u);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const double da = dist_sq(ds.clean[a], mu);
    const double db = dist_sq(ds.clean[b], mu);
    return da != db ? da < db : a < b;
  });
  const Point target = add(mu, scale(u, magnitude));
  for (std::size_t i = 0; i < w; ++i) {
    ds.corrupted_mask[idx[i]] = 1;
    if (magnitude != 0.0) ds.observed[idx[i]] = target;
  }
  return ds;
}

// TV(N(t1, s^2 I), N(t2, s^2 I)) = 2 Phi(||t1 - t2|| / (2 s)) - 1
inline double gaussian_tv(const Point& theta1, const Point& theta2, double sigma) {
  return 2.0 * normal_cdf(dist(theta1, theta2) / (2.0 * sigma)) - 1.0;
}

namespace detail {

// Draw from the axis marginal of q1 = (p_{t2} - p_{t1}) 1(p_{t2} >= p_{t1}) / TV:
// in the coordinate along the axis centered at the midpoint, the density is
// proportional to (phi((t-a/2)/s) - phi((t+a/2)/s)) on t >= 0. Proposal
// N(a/2, s^2) restricted to t >= 0, accepted w.p. 1 - exp(-t a / s^2).
inline double q1_axis_draw(Rng& rng, double a, double sigma) {
  for (int tries = 0; tries < 100000; ++tries) {
    const double t = a / 2.0 + sigma * rng.normal();
    if (t < 0.0) continue;
    if (rng.uniform() <= 1.0 - std::exp(-t * a / (sigma * sigma))) return t;
  }
  throw std::runtime_error("q1_axis_draw: rejection sampler stalled");
}

}  // namespace detail

// Lemma-2.2-style two-point mixture adversary: data from N(theta1, s^2 I),
// a Binomial(N, eps'') number of rows replaced by Q1 draws when that count
// fits the budget, where eps'' solves TV = eps'' / (1 - eps'').
inline Dataset corrupt_tv_mixture(std::vector<Point> clean, const Point& theta1, const Point& theta2,
                                  double epsilon, double sigma, std::uint64_t seed) {
  if (!(epsilon >= 0.0 && epsilon < 0.5)) throw std::invalid_argument("corrupt_tv_mixture: epsilon in [0, 1/2)");
  const double eps_prime = epsilon;
  const double sep_sq_cap = 4.0 * sigma * sigma * eps_prime * eps_prime / ((1.0 - eps_prime) * (1.0 - eps_prime));
  if (dist_sq(theta1, theta2) > sep_sq_cap * (1.0 + 1e-9))
    throw std::invalid_argument("corrupt_tv_mixture: separation exceeds the Pinsker budget");
  Dataset ds = make_clean_dataset(std::move(clean), theta1, epsilon);
  const double tv = gaussian_tv(theta1, theta2, sigma);
  if (tv <= 0.0) return ds;
  const double eps2 = tv / (1.0 + tv);

  Rng rng(seed);
  std::vector<char> hit(ds.clean.size(), 0);
  std::size_t w = 0;
  for (std::size_t i = 0; i < ds.clean.size(); ++i)
    if (rng.uniform() < eps2) {
      hit[i] = 1;
      ++w;
    }
  if (w > ds.budget()) return ds;  // over budget: adversary leaves the data clean

  const double a = dist(theta1, theta2);
  Point axis = scale(sub(theta2, theta1), 1.0 / a);
  const Point mid = lerp(theta1, theta2, 0.5);
  for (std::size_t i = 0; i < ds.clean.size(); ++i) {
    if (!hit[i]) continue;
    const double t = detail::q1_axis_draw(rng, a, sigma);
    Point x = add(mid, scale(axis, t));
    // orthogonal component: iid Gaussian, projected off the axis
    Point gz = rng.normal_vector(x.size(), sigma);
    const double along = dot(gz, axis);
    for (std::size_t dcoord = 0; dcoord < x.size(); ++dcoord)
      x[dcoord] += gz[dcoord] - along * axis[dcoord];
    ds.observed[i] = std::move(x);
    ds.corrupted_mask[i] = 1;
  }
  return ds;
}

// Lemma-2.3-style point-mass mixture: X_i ~ (1 - eps/2) N(mu, s^2 I) +
// (eps/2) delta_nu; when the point-mass count W fits the budget the
// adversary swaps those rows for fresh Gaussians, otherwise it does nothing.
struct PointmassOutcome {
  Dataset data;
  std::size_t w = 0;
  bool swapped = false;
};

inline PointmassOutcome corrupt_pointmass_mixture(const Point& mu, const Point& nu, double epsilon,
                                                  double sigma, std::size_t N, std::uint64_t seed,
                                                  double d = std::numeric_limits<double>::infinity()) {
  if (!(epsilon >= 0.0 && epsilon < 0.5))
    throw std::invalid_argument("corrupt_pointmass_mixture: epsilon in [0, 1/2)");
  if (epsilon > 0.0) {
    const double want = std::min(sigma * std::sqrt(std::log(1.0 / epsilon)), d / epsilon);
    const double got = dist(mu, nu);
    if (got < want / 2.0 || got > want * 2.0)
      throw std::invalid_argument(
          "corrupt_pointmass_mixture: ||mu - nu|| not within 2x of sigma sqrt(log(1/eps)) ^ d/eps");
  }
  Rng rng(seed);
  PointmassOutcome out;
  std::vector<Point> draws;
  std::vector<char> from_mass(N, 0);
  for (std::size_t i = 0; i < N; ++i) {
    if (epsilon > 0.0 && rng.uniform() < epsilon / 2.0) {
      draws.push_back(nu);
      from_mass[i] = 1;
      ++out.w;
    } else {
      draws.push_back(add(mu, rng.normal_vector(mu.size(), sigma)));
    }
  }
  out.data = make_clean_dataset(std::move(draws), mu, epsilon);
  if (static_cast<double>(out.w) <= epsilon * static_cast<double>(N)) {
    out.swapped = true;
    for (std::size_t i = 0; i < N; ++i)
      if (from_mass[i]) {
        out.data.observed[i] = add(mu, rng.normal_vector(mu.size(), sigma));
        out.data.corrupted_mask[i] = 1;
      }
  }
  return out;
}

}  // namespace starmean
