#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

#include "starmean/grid_hash.hpp"
#include "starmean/point.hpp"
#include "starmean/rng.hpp"
#include "starmean/star_set.hpp"

namespace starmean {

struct PackingResult {
  std::vector<Point> points;
  double separation = 0.0;
  Point ball_center;
  double ball_radius = 0.0;
};

// Greedy lexicographic-order packing over the candidate grid: admit a
// candidate iff its distance to every admitted point exceeds sep. The result
// is a sep-packing and, by maximality over an h-covering candidate set, a
// (sep + pitch)-covering of B(center, radius) ∩ K.
inline PackingResult maximal_packing_over(const std::vector<Point>& candidates, const Point& center,
                                          double radius, double sep) {
  PackingResult res;
  res.separation = sep;
  res.ball_center = center;
  res.ball_radius = radius;
  if (candidates.empty()) return res;
  GridHash hash(center.size(), sep);
  for (const auto& p : candidates) {
    bool blocked = false;
    hash.visit_neighbors(p, [&](std::uint32_t id) {
      if (!blocked && dist_sq(p, res.points[id]) <= sep * sep) blocked = true;
    });
    if (!blocked) {
      hash.insert(p, static_cast<std::uint32_t>(res.points.size()));
      res.points.push_back(p);
    }
  }
  return res;
}

inline PackingResult maximal_packing(const StarSet& set, const Point& center, double radius,
                                     double sep, double pitch) {
  if (sep <= 2.0 * pitch)
    throw std::invalid_argument("maximal_packing: need sep > 2*pitch");
  auto cands = set.candidates(center, radius, pitch);
  if (cands.empty()) {
    if (set.contains(center) && 0.0 <= radius) {
      PackingResult res;
      res.separation = sep;
      res.ball_center = center;
      res.ball_radius = radius;
      res.points.push_back(center);
      return res;
    }
    throw std::runtime_error("maximal_packing: empty intersection");
  }
  return maximal_packing_over(cands, center, radius, sep);
}

struct LocalEntropyOptions {
  // Localization ball: required for unbounded sets, optional otherwise.
  std::optional<std::pair<Point, double>> region;
  // Explicit sweep points (e.g. tree parents); overrides the grid sweep.
  const std::vector<Point>* sweep_override = nullptr;
  std::size_t sweep_cap = 256;
  // Candidate pitch for the packings, relative to eta. The estimate is a
  // lower bound for any pitch; finer costs more.
  double pitch_factor = 1.0 / 8.0;
};

// Lower estimate of log M_K^loc(eta, c): the largest (eta/c)-packing of
// B(nu, eta) ∩ K over a sweep of ball centers nu. On a SparseCone the
// Varshamov-Gilbert construction is also tried (see vg_sparse_packing).
inline PackingResult vg_sparse_packing(std::size_t n, std::size_t s, double delta);

namespace detail {

// keep the cap points closest to the anchor (tie: lex order); keeps the
// sweep geometry consistent across scales
inline std::vector<Point> cap_nearest(std::vector<Point> pts, const Point& anchor, std::size_t cap) {
  if (pts.size() <= cap || cap == 0) return pts;
  std::stable_sort(pts.begin(), pts.end(), [&](const Point& a, const Point& b) {
    return dist_sq(a, anchor) < dist_sq(b, anchor);
  });
  pts.resize(cap);
  return pts;
}

}  // namespace detail

inline double local_entropy(const StarSet& set, double eta, double c, double pitch,
                            const LocalEntropyOptions& opts = {}) {
  if (!(c > 2.0)) throw std::invalid_argument("local_entropy: need c > 2");
  if (!(eta > 0.0)) throw std::invalid_argument("local_entropy: need eta > 0");
  if (is_singleton(set)) return 0.0;

  const double root_n = std::sqrt(static_cast<double>(set.dim()));
  std::vector<Point> sweep;
  bool grid_feasible = true;
  if (opts.sweep_override) {
    sweep = *opts.sweep_override;
  } else {
    Point sweep_anchor;
    try {
      if (opts.region) {
        sweep_anchor = opts.region->first;
        sweep = detail::cap_nearest(
            set.candidates(opts.region->first, opts.region->second, eta / 4.0 * 2.0 * root_n),
            sweep_anchor, opts.sweep_cap);
      } else if (set.bounded()) {
        const double d = *set.diameter();
        sweep_anchor = set.center();
        sweep = detail::cap_nearest(
            set.candidates(set.center(), d, std::max(eta / 4.0, d / 64.0) * 2.0 * root_n),
            sweep_anchor, opts.sweep_cap);
      } else {
        throw std::invalid_argument("local_entropy: unbounded set requires a localization region");
      }
    } catch (const std::runtime_error&) {
      grid_feasible = false;  // candidate enumeration infeasible at this scale
    }
    const Point& ks = set.center();
    if (grid_feasible && set.contains(ks) &&
        (!opts.region || dist(ks, opts.region->first) <= opts.region->second))
      sweep.push_back(ks);
  }

  const double base_pitch = pitch > 0.0 ? pitch : eta * opts.pitch_factor;
  const double sep = eta / c;
  const double pack_pitch = std::max(std::min(base_pitch, eta * opts.pitch_factor), sep / 4.0);
  std::size_t best = 1;
  for (const auto& nu : sweep) {
    try {
      auto cands = set.candidates(nu, eta, pack_pitch);
      if (cands.empty()) continue;
      best = std::max(best, maximal_packing_over(cands, nu, eta, sep).points.size());
    } catch (const std::runtime_error&) {
      // window infeasible to materialize; the estimate stays a lower bound
    }
  }
  if (const auto* cone = dynamic_cast<const SparseCone*>(&set)) {
    const std::size_t n = cone->dim();
    const std::size_t s = cone->sparsity();
    if (s <= n / 8 && c > std::sqrt(2.0)) {
      // VG codewords form an (eta/c)-packing of B(0, eta) ∩ K.
      best = std::max(best, vg_sparse_packing(n, s, eta).points.size());
    }
  }
  return std::log(static_cast<double>(best));
}

struct EntropyProfile {
  std::vector<double> etas;      // decreasing
  std::vector<double> log_mloc;  // raw lower estimates
  std::vector<double> log_mloc_monotone;  // cumulative-max corrected
  double c = 0.0;
};

inline EntropyProfile entropy_profile(const StarSet& set, const std::vector<double>& etas, double c,
                                      double pitch, const LocalEntropyOptions& opts = {}) {
  EntropyProfile prof;
  prof.c = c;
  prof.etas = etas;
  std::sort(prof.etas.begin(), prof.etas.end(), std::greater<double>());
  for (double eta : prof.etas) prof.log_mloc.push_back(local_entropy(set, eta, c, pitch, opts));
  // Entropy is non-increasing in eta; enforce on the corrected column so
  // downstream solvers see a monotone profile even when grid estimates dip.
  prof.log_mloc_monotone = prof.log_mloc;
  for (std::size_t i = 1; i < prof.log_mloc_monotone.size(); ++i)
    prof.log_mloc_monotone[i] = std::max(prof.log_mloc_monotone[i], prof.log_mloc_monotone[i - 1]);
  return prof;
}

// Greedy sparse Varshamov-Gilbert packing: s-sparse binary codewords kept if
// they disagree with every retained codeword on at least s/2 coordinates,
// scaled to norm delta. Guarantees log(count) >= (s/8) log(1 + n/(2s)).
// Construction stops once the family is comfortably past the guaranteed
// count, so only min(|family|, cap) codewords materialize.
inline PackingResult vg_sparse_packing(std::size_t n, std::size_t s, double delta) {
  if (s < 1 || s > n / 8) throw std::invalid_argument("vg_sparse_packing: need 1 <= s <= n/8");
  const double target = std::ceil(std::exp(static_cast<double>(s) / 8.0 *
                                           std::log(1.0 + static_cast<double>(n) / (2.0 * static_cast<double>(s)))));
  if (target > 1.0e6) throw std::runtime_error("vg_sparse_packing: guaranteed count too large to materialize");
  const auto cap = static_cast<std::size_t>(std::max(4096.0, target));

  std::vector<std::vector<std::size_t>> kept;  // supports; values are all-ones
  auto disagreement = [&](const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    // |a Δ b| for sorted index sets
    std::size_t inter = 0, i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
      if (a[i] == b[j]) {
        ++inter;
        ++i;
        ++j;
      } else if (a[i] < b[j]) {
        ++i;
      } else {
        ++j;
      }
    }
    return a.size() + b.size() - 2 * inter;
  };
  auto try_keep = [&](const std::vector<std::size_t>& supp) {
    for (const auto& k : kept)
      if (2.0 * static_cast<double>(disagreement(supp, k)) < static_cast<double>(s)) return;
    kept.push_back(supp);
  };

  double total = 1.0;
  for (std::size_t i = 0; i < s; ++i) total *= static_cast<double>(n - i) / static_cast<double>(i + 1);
  if (total <= 1.0e6) {
    // lexicographic enumeration; a full pass is greedy-maximal, and an early
    // stop at the cap already certifies the bound
    std::vector<std::size_t> supp(s);
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t start, std::size_t depth) {
      if (kept.size() >= cap) return;
      if (depth == s) {
        try_keep(supp);
        return;
      }
      for (std::size_t i = start; i + (s - depth) <= n && kept.size() < cap; ++i) {
        supp[depth] = i;
        rec(i + 1, depth + 1);
      }
    };
    rec(0, 0);
  } else {
    // seeded random draws until the guaranteed count is reached
    Rng rng(0x5eedULL ^ (static_cast<std::uint64_t>(n) << 16) ^ s);
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    for (std::size_t draw = 0; draw < 400000 && kept.size() < cap; ++draw) {
      for (std::size_t i = 0; i < s; ++i) std::swap(pool[i], pool[i + rng.index(n - i)]);
      std::vector<std::size_t> supp(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(s));
      std::sort(supp.begin(), supp.end());
      try_keep(supp);
    }
  }
  if (kept.size() < static_cast<std::size_t>(target))
    throw std::runtime_error("vg_sparse_packing: construction fell short of the guaranteed count");

  PackingResult res;
  res.ball_center = Point(n, 0.0);
  res.ball_radius = delta;
  // min disagreement s/2 gives pairwise distance >= delta/sqrt(2); back off
  // an ulp so the strict-separation invariant holds at the boundary
  res.separation = delta / std::sqrt(2.0) * (1.0 - 1e-12);
  const double coord = delta / std::sqrt(static_cast<double>(s));
  for (const auto& supp : kept) {
    Point p(n, 0.0);
    for (std::size_t i : supp) p[i] = coord;
    res.points.push_back(std::move(p));
  }
  return res;
}

// eta* = sup{eta >= 0 : N eta^2 / sigma^2 <= log M^loc(eta, c)}, solved by
// bisection using the monotonicity of local entropy. 60 iterations or
// relative width 1e-6, whichever comes first.
inline double eta_star(const StarSet& set, std::size_t N, double sigma, double c,
                       double pitch = 0.0, const LocalEntropyOptions& opts = {}) {
  if (N < 1 || !(sigma > 0.0) || !(c > 2.0)) throw std::invalid_argument("eta_star: bad arguments");
  if (is_singleton(set)) return 0.0;
  double hi;
  if (set.bounded()) {
    hi = *set.diameter();
  } else if (opts.region) {
    hi = opts.region->second;
  } else {
    throw std::invalid_argument("eta_star: unbounded set requires a localization region");
  }
  if (hi <= 0.0) return 0.0;
  auto holds = [&](double eta) {
    const double p = pitch > 0.0 ? pitch : eta / 8.0;
    return static_cast<double>(N) * eta * eta / (sigma * sigma) <=
           local_entropy(set, eta, c, p, opts);
  };
  double lo = 0.0;
  if (!holds(hi * 1e-7)) return 0.0;
  if (holds(hi)) return hi;
  lo = hi * 1e-7;
  for (int it = 0; it < 60 && (hi - lo) > 1e-6 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (holds(mid) ? lo : hi) = mid;
  }
  return lo;
}

// Countable m-packing and 2m-covering of K ∩ region: the lattice-of-balls
// construction is realized by bucketing an (m/4)-covering of the members
// into cells of diameter m/2, keeping the lexicographically smallest member
// per cell, then a lex-order prune at distance m. Any member is within
// m/4 + m/2 + m < 2m of a retained point.
inline PackingResult countable_packing(const StarSet& set, double m,
                                       const std::pair<Point, double>& region) {
  if (!(m > 0.0)) throw std::invalid_argument("countable_packing: need m > 0");
  const auto& [r_center, r_radius] = region;
  const std::size_t n = set.dim();
  const double cell = m / (2.0 * std::sqrt(static_cast<double>(n)));

  // pitch at the guarantee limit: p + m/2 + m <= 2m needs p <= m/2
  auto members = set.candidates(r_center, r_radius + m, 0.49 * m);
  // members arrive lex-sorted, so the first occupant of a cell is its rep
  std::vector<Point> chosen;
  std::set<std::vector<std::int64_t>> seen;
  std::vector<std::int64_t> key(n);
  for (const auto& p : members) {
    for (std::size_t i = 0; i < n; ++i) key[i] = static_cast<std::int64_t>(std::floor(p[i] / cell));
    if (seen.insert(key).second) chosen.push_back(p);
  }

  PackingResult res;
  res.separation = m;
  res.ball_center = r_center;
  res.ball_radius = r_radius;
  GridHash hash(n, m);
  for (const auto& p : chosen) {
    bool blocked = false;
    hash.visit_neighbors(p, [&](std::uint32_t id) {
      if (!blocked && dist_sq(p, res.points[id]) <= m * m) blocked = true;
    });
    if (!blocked) {
      hash.insert(p, static_cast<std::uint32_t>(res.points.size()));
      res.points.push_back(p);
    }
  }
  if (res.points.empty() && set.contains(r_center)) res.points.push_back(r_center);
  return res;
}

}  // namespace starmean
