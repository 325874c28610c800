#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "starmean/constants.hpp"
#include "starmean/entropy.hpp"
#include "starmean/hypotests.hpp"
#include "starmean/point.hpp"
#include "starmean/star_set.hpp"
#include "starmean/tournament.hpp"
#include "starmean/tree.hpp"

namespace starmean {

struct LocalizationResult {
  bool s_nonempty = false;
  std::vector<Point> witness_points;  // grid members of S(R)
  Point chosen_root;                  // nearest countable-packing point, ties lex
  std::optional<double> hat_r;
  std::optional<Point> hat_p;
};

namespace detail {

// Grid members of the search window. Any point of S lies within R of at
// least one observation, so the union of candidate balls B(X_i, R + pitch)
// contains every witness the sweep can miss only by the grid pitch.
inline std::vector<Point> window_members(const std::vector<Point>& data, const StarSet& set,
                                         double R, double pitch) {
  std::vector<Point> all;
  const double r2 = R + pitch;
  for (const auto& x : data) {
    auto c = set.candidates(x, r2, pitch);
    all.insert(all.end(), c.begin(), c.end());
  }
  std::sort(all.begin(), all.end(), [](const Point& a, const Point& b) { return lex_less(a, b); });
  all.erase(std::unique(all.begin(), all.end(),
                        [](const Point& a, const Point& b) { return !lex_less(a, b) && !lex_less(b, a); }),
            all.end());
  return all;
}

inline bool in_S(const std::vector<Point>& data, const Point& nu, double R) {
  std::size_t violations = 0;
  for (const auto& x : data)
    if (dist(x, nu) > R) ++violations;
  return static_cast<double>(violations) <= static_cast<double>(data.size()) / 2.0 - 1.0;
}

}  // namespace detail

// S(R) = {nu in K : #\{i : ||X_i - nu|| > R\} <= N/2 - 1}, swept over grid
// members of the search window. Empty S is a valid outcome.
inline LocalizationResult compute_S(const std::vector<Point>& data, const StarSet& set, double R,
                                    double pitch) {
  LocalizationResult res;
  for (auto& nu : detail::window_members(data, set, R, pitch))
    if (detail::in_S(data, nu, R)) res.witness_points.push_back(std::move(nu));
  res.s_nonempty = !res.witness_points.empty();
  return res;
}

// hat_R = min_{t > R} {t : S(t) != empty}; monotone in t by nestedness, so a
// bisection over [R, R_max] suffices. Returns the minimizer and the
// lexicographically smallest witness of S(hat_R).
inline std::pair<double, Point> hat_R(const std::vector<Point>& data, const StarSet& set, double R,
                                      double pitch) {
  if (compute_S(data, set, R, pitch).s_nonempty)
    throw std::invalid_argument("hat_R: S(R) is nonempty; no fallback needed");
  double far = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i)
    for (std::size_t j = i + 1; j < data.size(); ++j) far = std::max(far, dist(data[i], data[j]));
  const double r_max = std::max(2.0 * far, 2.0 * R);
  if (!compute_S(data, set, r_max, pitch).s_nonempty)
    throw std::runtime_error("hat_R: window too small; S empty even at R_max");
  double lo = R, hi = r_max;
  for (int it = 0; it < 50 && (hi - lo) > std::max(1e-9, 1e-7 * r_max); ++it) {
    const double mid = 0.5 * (lo + hi);
    (compute_S(data, set, mid, pitch).s_nonempty ? hi : lo) = mid;
  }
  auto final_S = compute_S(data, set, hi, pitch);
  return {hi, final_S.witness_points.front()};
}

struct UnboundedEstimatorConfig {
  NoiseModel noise;
  double c = 8.0;
  double kappa = 0.25;
  double epsilon = 0.0;   // corruption rate, known in the unbounded case
  double r_gamma = 0.99;  // gamma in the R-selection
  bool allow_gamma_override = false;
  double pitch = 0.0;     // S-sweep and tree pitch; 0 = d_m / 2^{depth+2}
  double s_pitch = 0.0;   // override for the S sweep alone
  int depth = 0;
  bool run_to_depth = false;
  int max_depth = kDefaultMaxTreeDepth;
  double exponent_const = 0.0;
};

struct UnboundedRun {
  UnboundedParams params;
  LocalizationResult localization;
  Point estimate;
  int j_star = 1;
  bool used_fallback = false;
};

// Full unbounded pipeline: pick R, localize with S(R), root the d_m-tree at
// the countable-packing point nearest S, and run the tournament for J*
// steps with the cubed-entropy stopping rule. Empty S falls back to the
// lexicographically smallest point of S(hat_R).
inline UnboundedRun run_unbounded_estimator(const std::vector<Point>& data, const StarSet& set,
                                            const UnboundedEstimatorConfig& cfg, Rng& rng) {
  if (set.bounded()) throw std::invalid_argument("run_unbounded_estimator: set is bounded");
  if (data.empty()) throw std::invalid_argument("run_unbounded_estimator: empty sample");
  const double C = cfg.c / 2.0 - 1.0;
  const std::size_t n = set.dim();

  double k_exp = cfg.exponent_const;
  double gamma_bound;
  if (cfg.noise.variant == NoiseVariant::Gaussian) {
    const auto gc = solve_gaussian_constants(C, cfg.kappa);
    if (k_exp <= 0.0) k_exp = gc.C3;
    gamma_bound = gamma_lower_bound_gaussian(C, gc.C1, gc.C3);
  } else if (cfg.noise.variant == NoiseVariant::GroupedSubGaussian) {
    const auto gc = solve_grouped_constants(C, cfg.noise.k, cfg.noise.gamma);
    if (k_exp <= 0.0) k_exp = gc.C3;
    gamma_bound = gamma_lower_bound_subgaussian(C, gc.C1, gc.C3);
  } else {
    const auto uc = solve_unknown_subgaussian_constants(cfg.noise.C3);
    if (k_exp <= 0.0) k_exp = cfg.noise.C3;
    gamma_bound = gamma_lower_bound_subgaussian(C, uc.C1, uc.C5);
  }

  UnboundedRun run;
  run.params = select_R(n, cfg.noise.sigma, cfg.epsilon, cfg.r_gamma, C, cfg.c, gamma_bound,
                        cfg.allow_gamma_override);
  const double d_m = run.params.d_m;
  const int depth = cfg.depth > 0 ? cfg.depth : 4;
  const double tree_pitch = cfg.pitch > 0.0 ? cfg.pitch : d_m / std::ldexp(1.0, depth + 2);
  const double s_pitch = cfg.s_pitch > 0.0 ? cfg.s_pitch : tree_pitch;

  run.localization = compute_S(data, set, run.params.R, s_pitch);
  if (!run.localization.s_nonempty) {
    auto [t, p] = hat_R(data, set, run.params.R, s_pitch);
    run.localization.hat_r = t;
    run.localization.hat_p = p;
    run.estimate = p;
    run.used_fallback = true;
    return run;
  }

  // root: countable-packing point nearest the witness set, ties
  // lexicographic. The packing is materialized near the lex-smallest
  // witness only: its 2m-covering puts a point within 2m of w0, and with
  // diam(S) <= 2R that already gives S inside B(root, d_m).
  const auto& witnesses = run.localization.witness_points;
  const Point& w0 = witnesses.front();
  auto packing = countable_packing(set, run.params.m, {w0, 2.0 * run.params.m + s_pitch});
  if (packing.points.empty()) throw std::runtime_error("run_unbounded_estimator: empty countable packing");
  // packing points arrive lex-sorted, so strict improvement keeps the
  // lexicographically smallest minimizer
  Point root = packing.points.front();
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : packing.points) {
    double dmin = std::numeric_limits<double>::infinity();
    for (const auto& w : witnesses) dmin = std::min(dmin, dist_sq(p, w));
    if (dmin < best) {
      best = dmin;
      root = p;
    }
  }
  run.localization.chosen_root = root;

  JStarOptions jopts;
  jopts.max_levels = cfg.max_depth;
  jopts.power = JStarEntropyPower::Cubed;
  jopts.region = std::make_pair(root, d_m);
  std::size_t n_half = data.size();
  std::vector<Point> working = data;
  if (cfg.noise.variant == NoiseVariant::UnknownSubGaussian) {
    if (working.size() % 2 != 0) working.push_back(Point(n, 0.0));
    n_half = working.size() / 2;
  }
  run.j_star = j_star(set, n_half, cfg.noise.sigma, cfg.c, C, k_exp, d_m, jopts);

  const int eff_depth = std::max(depth, run.j_star + 1);
  auto tree = build_tree(set, root, eff_depth, cfg.c, tree_pitch, d_m, cfg.max_depth);
  DominationContext ctx = make_context(working, cfg.noise,
                                       cfg.noise.variant == NoiseVariant::Gaussian ? nullptr : &rng);
  const int steps = cfg.run_to_depth ? tree.params.depth - 1 : std::min(run.j_star, tree.params.depth - 1);
  auto st = traverse(tree, steps, ctx, C);
  run.estimate = st.output;
  return run;
}

}  // namespace starmean
