#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "starmean/constants.hpp"
#include "starmean/entropy.hpp"
#include "starmean/hypotests.hpp"
#include "starmean/point.hpp"
#include "starmean/tree.hpp"

namespace starmean {

// T(delta, nu, S) = max distance from nu to a dominating contender at
// distance >= C delta; 0 when no such contender exists.
inline double tournament_T(double delta, const Point& nu, const std::vector<Point>& S,
                           const DominationContext& ctx, double C) {
  if (!(C > 2.0)) throw std::invalid_argument("tournament_T: need C > 2");
  double best = 0.0;
  for (const auto& other : S) {
    const double d = dist(nu, other);
    if (d < C * delta || d <= 0.0) continue;
    if (dominates(other, nu, ctx)) best = std::max(best, d);
  }
  return best;
}

namespace detail {

// Pairwise psi over a fixed candidate list with the per-candidate distance
// rows computed once. Decisions agree bitwise with psi_dispatch on the same
// context.
class PairwiseTester {
 public:
  PairwiseTester(const std::vector<Point>& candidates, const DominationContext& ctx)
      : cands_(candidates), ctx_(ctx) {
    const std::vector<Point>* pts = nullptr;
    switch (ctx.noise.variant) {
      case NoiseVariant::Gaussian: pts = ctx.data; break;
      case NoiseVariant::GroupedSubGaussian: pts = &ctx.grouped_means; break;
      case NoiseVariant::UnknownSubGaussian: pts = &ctx.smoothed; break;
    }
    pts_ = pts;
    const std::size_t m = candidates.size();
    const std::size_t n = pts->size();
    dist_rows_.resize(m, std::vector<double>(n));
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t t = 0; t < n; ++t) dist_rows_[i][t] = dist_sq(candidates[i], (*pts)[t]);
  }

  // psi for the lex-ordered pair (cands[i], cands[j]), i lex-before j
  int psi(std::size_t i, std::size_t j) const {
    const auto& di = dist_rows_[i];
    const auto& dj = dist_rows_[j];
    if (ctx_.noise.variant == NoiseVariant::UnknownSubGaussian) {
      const std::size_t n = di.size() / 2;
      const double sep = dist(cands_[i], cands_[j]);
      const double ratio = ctx_.delta * ctx_.delta / (ctx_.noise.sigma * ctx_.noise.sigma);
      if (ratio <= 1.0 / (4.0 * d3_of(ctx_.noise))) {
        const double delta0 = std::exp(-ctx_.noise.C3 * static_cast<double>(n) * ratio);
        std::vector<double> v(di.size());
        for (std::size_t t = 0; t < di.size(); ++t) v[t] = (di[t] - dj[t]) / sep;
        return trimmed_mean(v, ctx_.noise.epsilon, delta0) > 0.0 ? 1 : 0;
      }
      std::size_t count = 0;
      for (std::size_t t = 0; t < di.size(); ++t)
        if (di[t] >= dj[t]) ++count;
      return count >= n ? 1 : 0;
    }
    std::size_t count = 0;
    for (std::size_t t = 0; t < di.size(); ++t)
      if (di[t] >= dj[t]) ++count;
    return 2 * count >= di.size() ? 1 : 0;
  }

 private:
  const std::vector<Point>& cands_;
  const DominationContext& ctx_;
  const std::vector<Point>* pts_ = nullptr;
  std::vector<std::vector<double>> dist_rows_;
};

}  // namespace detail

// argmin of T over the offspring; ties resolved by the lexicographically
// smallest point (the offspring are scanned in lex order with strict
// improvement). Pairwise tests are evaluated once per unordered pair.
inline Point select_next(std::vector<Point> offspring, double delta, DominationContext& ctx,
                         double C) {
  if (offspring.empty()) throw std::invalid_argument("select_next: empty offspring");
  std::sort(offspring.begin(), offspring.end(),
            [](const Point& a, const Point& b) { return lex_less(a, b); });
  offspring.erase(std::unique(offspring.begin(), offspring.end(),
                              [](const Point& a, const Point& b) {
                                return !lex_less(a, b) && !lex_less(b, a);
                              }),
                  offspring.end());
  if (offspring.size() == 1) return offspring[0];
  ctx.delta = delta;
  const std::size_t m = offspring.size();
  detail::PairwiseTester tester(offspring, ctx);
  std::vector<double> t_val(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const double d = dist(offspring[i], offspring[j]);
      if (d < C * delta) continue;
      const int psi = tester.psi(i, j);  // offspring sorted, so i is nu1
      if (psi == 1)
        t_val[i] = std::max(t_val[i], d);  // j dominates i
      else
        t_val[j] = std::max(t_val[j], d);  // i dominates j
    }
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < m; ++i)
    if (t_val[i] < t_val[best]) best = i;
  return offspring[best];
}

enum class JStarEntropyPower { Squared, Cubed };  // bounded vs unbounded condition

struct JStarOptions {
  int max_levels = 16;
  JStarEntropyPower power = JStarEntropyPower::Squared;
  bool remark_rescale = false;  // (2c, eta_J) -> (c, eta_J / 2) in the condition
  double entropy_pitch_factor = 1.0 / 8.0;
  std::optional<std::pair<Point, double>> region;  // unbounded localization
};

// Maximal J with N eta_J^2 / sigma^2 > 2 log[M^loc(c eta_J / sqrt(K), 2c)]^pow
// v log 2 (eta_J = d sqrt(K) / (2^{J-1}(C+1))), scanning upward until the
// first failure; 1 if even J = 1 fails. The entropy argument simplifies to
// the level-J ball radius d / 2^{J-2}.
inline int j_star(const StarSet& set, std::size_t N, double sigma, double c, double C,
                  double exponent_const, double d_or_dm, const JStarOptions& opts = {}) {
  const double pow_exp = opts.power == JStarEntropyPower::Squared ? 2.0 : 3.0;
  int best = 1;
  for (int J = 1; J <= opts.max_levels; ++J) {
    const double eta = eta_J(d_or_dm, J, C, exponent_const);
    const double lhs = static_cast<double>(N) * eta * eta / (sigma * sigma);
    const double radius = opts.remark_rescale ? d_or_dm / std::ldexp(1.0, J - 1)
                                              : d_or_dm / std::ldexp(1.0, J - 2);
    const double cc = opts.remark_rescale ? c : 2.0 * c;
    LocalEntropyOptions eopts;
    eopts.region = opts.region;
    eopts.pitch_factor = opts.entropy_pitch_factor;
    const double log_m = local_entropy(set, radius, cc, radius * opts.entropy_pitch_factor, eopts);
    const double rhs = std::max(2.0 * std::pow(log_m, pow_exp), std::log(2.0));
    if (lhs > rhs) {
      best = J;
    } else {
      break;  // lhs decreases and rhs is non-decreasing in J
    }
  }
  return best;
}

struct TraversalState {
  std::vector<std::uint32_t> path;       // node ids Upsilon_1, Upsilon_2, ...
  std::vector<double> delta_schedule;    // d / (2^k (C+1)) at step k
  int j_star = 1;
  int steps = 0;
  Point output;
};

// One pass of the traversal: from the root, take select_next at each level
// for `steps` steps, following offspring edges. The tree must be at least
// that deep.
inline TraversalState traverse(const PackingTree& tree, int steps, DominationContext& ctx,
                               double C) {
  if (steps + 1 > tree.params.depth)
    throw std::invalid_argument("traverse: tree too shallow for the requested steps");
  TraversalState st;
  st.steps = steps;
  std::uint32_t cur = tree.root();
  st.path.push_back(cur);
  for (int k = 1; k <= steps; ++k) {
    const double delta = tree.params.d / (std::ldexp(1.0, k) * (C + 1.0));
    st.delta_schedule.push_back(delta);
    const auto& node = tree.node(cur);
    std::vector<Point> offspring;
    offspring.reserve(node.offspring.size());
    for (auto id : node.offspring) offspring.push_back(tree.node(id).point);
    const Point next = select_next(std::move(offspring), delta, ctx, C);
    std::uint32_t next_id = node.offspring.front();
    for (auto id : node.offspring)
      if (!lex_less(tree.node(id).point, next) && !lex_less(next, tree.node(id).point)) {
        next_id = id;
        break;
      }
    cur = next_id;
    st.path.push_back(cur);
  }
  st.output = tree.node(cur).point;
  return st;
}

struct EstimatorConfig {
  NoiseModel noise;
  double c = 8.0;
  double kappa = 0.25;
  double pitch = 0.0;             // tree candidate pitch; 0 = d / 2^{depth+2}
  int depth = 0;                  // tree depth; 0 = j_star + 1
  bool run_to_depth = false;      // take every level the tree has, not just J*
  bool remark_rescale = false;
  std::size_t n_smoothing_reps = 1;  // variant 2 averages over R draws
  int max_depth = kDefaultMaxTreeDepth;
  double exponent_const = 0.0;    // 0 = resolve from the variant's constants
  const PackingTree* prebuilt = nullptr;  // shared data-independent tree
};

inline double resolve_exponent_const(const EstimatorConfig& cfg) {
  if (cfg.exponent_const > 0.0) return cfg.exponent_const;
  const double C = cfg.c / 2.0 - 1.0;
  switch (cfg.noise.variant) {
    case NoiseVariant::Gaussian:
      return solve_gaussian_constants(C, cfg.kappa).C3;
    case NoiseVariant::GroupedSubGaussian:
      return solve_grouped_constants(C, cfg.noise.k, cfg.noise.gamma).C3;
    case NoiseVariant::UnknownSubGaussian:
      return cfg.noise.C3;
  }
  throw std::logic_error("resolve_exponent_const: unknown variant");
}

// Bounded-set estimator: build (or reuse) the packing tree, compute J*, and
// traverse. C = c/2 - 1, never set independently. Variant 2 averages nu**
// over independent smoothing draws; variant 3 runs on a 2N sample with the
// delta-dependent test, padding odd samples with the null vector.
inline std::pair<Point, TraversalState> run_estimator(const std::vector<Point>& data,
                                                      const StarSet& set,
                                                      const EstimatorConfig& cfg, Rng& rng) {
  if (data.empty()) throw std::invalid_argument("run_estimator: empty sample");
  if (!set.bounded()) throw std::invalid_argument("run_estimator: bounded sets only; see the unbounded runner");
  const double C = cfg.c / 2.0 - 1.0;
  const double d = *set.diameter();
  const double k_exp = resolve_exponent_const(cfg);

  if (is_singleton(set)) {
    TraversalState st;
    st.output = set.center();
    return {set.center(), st};
  }

  std::size_t n_half = data.size();
  std::vector<Point> working = data;
  if (cfg.noise.variant == NoiseVariant::UnknownSubGaussian) {
    if (working.size() % 2 != 0) {
      // pad with the null vector, inflating the effective corruption rate
      working.push_back(Point(data.front().size(), 0.0));
    }
    n_half = working.size() / 2;
  }

  JStarOptions jopts;
  jopts.max_levels = cfg.max_depth;
  jopts.remark_rescale = cfg.remark_rescale;
  const int js = j_star(set, n_half, cfg.noise.sigma, cfg.c, C, k_exp, d, jopts);

  const int depth = cfg.depth > 0 ? cfg.depth : std::max(js + 1, 2);
  // "at least J* iterations": without the extra-iterations flag the tree
  // must reach level J* + 1; with it the whole materialized tree is used
  if (!cfg.run_to_depth && depth < js + 1)
    throw std::invalid_argument("run_estimator: tree too shallow for J*");
  const double pitch = cfg.pitch > 0.0 ? cfg.pitch : d / std::ldexp(1.0, depth + 2);

  PackingTree local_tree;
  const PackingTree* tree = cfg.prebuilt;
  if (!tree) {
    local_tree = build_tree(set, set.center(), depth, cfg.c, pitch, std::nullopt, cfg.max_depth);
    tree = &local_tree;
  }
  if (!cfg.run_to_depth && tree->params.depth < js + 1)
    throw std::invalid_argument("run_estimator: tree too shallow for J*");
  const int steps = cfg.run_to_depth ? tree->params.depth - 1 : js;

  const std::size_t reps =
      cfg.noise.variant == NoiseVariant::GroupedSubGaussian ? std::max<std::size_t>(1, cfg.n_smoothing_reps) : 1;
  Point mean_out;
  TraversalState last;
  for (std::size_t rep = 0; rep < reps; ++rep) {
    DominationContext ctx = make_context(working, cfg.noise,
                                         cfg.noise.variant == NoiseVariant::Gaussian ? nullptr : &rng);
    TraversalState st = traverse(*tree, steps, ctx, C);
    st.j_star = js;
    if (rep == 0) {
      mean_out = st.output;
    } else {
      for (std::size_t i = 0; i < mean_out.size(); ++i)
        mean_out[i] += (st.output[i] - mean_out[i]) / static_cast<double>(rep + 1);
    }
    last = std::move(st);
  }
  last.output = mean_out;
  return {mean_out, last};
}

}  // namespace starmean
