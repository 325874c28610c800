#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "starmean/point.hpp"

namespace starmean {

// Relative membership tolerance; avoids boundary flapping for analytic sets.
inline constexpr double kMemTol = 1e-9;

inline double mem_slack(double scale) { return kMemTol * (1.0 + std::fabs(scale)); }

// A star-shaped constraint set. Everything downstream (packings, trees,
// tournaments) consumes sets only through this interface.
//
// candidates(nu, r, pitch) materializes member points inside B(nu, r) such
// that every member of B(nu, r) ∩ K is within `pitch` of some returned point
// (the returned list is lexicographically sorted and duplicate-free). For
// unbounded sets this is the only way to observe the set: candidates exist
// only within explicitly supplied balls.
class StarSet {
 public:
  virtual ~StarSet() = default;

  virtual std::size_t dim() const = 0;
  virtual const Point& center() const = 0;
  virtual std::optional<double> diameter() const = 0;
  virtual bool contains(const Point& p) const = 0;
  virtual std::vector<Point> candidates(const Point& nu, double radius, double pitch) const = 0;
  virtual std::string describe() const = 0;

  bool bounded() const { return diameter().has_value(); }

 protected:
  static void finalize(std::vector<Point>& pts) {
    std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) { return lex_less(a, b); });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const Point& a, const Point& b) {
                            return !lex_less(a, b) && !lex_less(b, a);
                          }),
              pts.end());
  }
};

namespace detail {

// Iterate the k*-anchored lattice of spacing s over an axis-aligned window,
// applying fn to each lattice point. Guards against absurd index ranges.
template <typename Fn>
void for_lattice(const Point& anchor, const Point& lo, const Point& hi, double s, Fn&& fn) {
  const std::size_t n = anchor.size();
  std::vector<std::int64_t> klo(n), khi(n), k(n);
  double count = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    klo[i] = static_cast<std::int64_t>(std::ceil((lo[i] - anchor[i]) / s - 1e-12));
    khi[i] = static_cast<std::int64_t>(std::floor((hi[i] - anchor[i]) / s + 1e-12));
    if (khi[i] < klo[i]) return;
    count *= static_cast<double>(khi[i] - klo[i] + 1);
  }
  if (count > 6.0e7) throw std::runtime_error("candidate lattice too large; coarsen the pitch");
  k = klo;
  Point p(n);
  while (true) {
    for (std::size_t i = 0; i < n; ++i) p[i] = anchor[i] + s * static_cast<double>(k[i]);
    fn(p);
    std::size_t axis = 0;
    while (axis < n && ++k[axis] > khi[axis]) {
      k[axis] = klo[axis];
      ++axis;
    }
    if (axis == n) break;
  }
}

inline void window_box(const Point& nu, double r, Point& lo, Point& hi) {
  lo.resize(nu.size());
  hi.resize(nu.size());
  for (std::size_t i = 0; i < nu.size(); ++i) {
    lo[i] = nu[i] - r;
    hi[i] = nu[i] + r;
  }
}

}  // namespace detail

class EuclideanBall final : public StarSet {
 public:
  EuclideanBall(Point center, double radius) : c_(std::move(center)), rho_(radius) {
    if (rho_ < 0.0) throw std::invalid_argument("EuclideanBall: negative radius");
  }

  std::size_t dim() const override { return c_.size(); }
  const Point& center() const override { return c_; }
  std::optional<double> diameter() const override { return 2.0 * rho_; }

  bool contains(const Point& p) const override {
    require_dim(p, c_.size(), "EuclideanBall::contains");
    return dist(p, c_) <= rho_ + mem_slack(rho_);
  }

  std::vector<Point> candidates(const Point& nu, double radius, double pitch) const override {
    require_dim(nu, c_.size(), "EuclideanBall::candidates");
    const double s = pitch / (2.0 * std::sqrt(static_cast<double>(dim())));
    const double snap_reach = s * std::sqrt(static_cast<double>(dim()));
    Point lo, hi;
    detail::window_box(nu, radius, lo, hi);
    for (std::size_t i = 0; i < dim(); ++i) {
      lo[i] = std::max(lo[i], c_[i] - rho_);
      hi[i] = std::min(hi[i], c_[i] + rho_);
    }
    std::vector<Point> out;
    detail::for_lattice(c_, lo, hi, s, [&](const Point& q) {
      Point p = q;
      const double dc = dist(p, c_);
      if (dc > rho_) {
        if (dc > rho_ + snap_reach || dc == 0.0) return;
        p = lerp(c_, p, rho_ / dc);  // radial snap onto the sphere
      }
      if (dist(p, nu) <= radius + mem_slack(radius)) out.push_back(std::move(p));
    });
    if (out.empty() && contains(nu) && dist(nu, c_) <= rho_ && dist(nu, nu) <= radius) out.push_back(nu);
    finalize(out);
    return out;
  }

  std::string describe() const override { return "ball"; }

  double radius() const { return rho_; }

 private:
  Point c_;
  double rho_;
};

class Hyperrectangle final : public StarSet {
 public:
  Hyperrectangle(Point lo, Point hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
    if (lo_.size() != hi_.size()) throw std::invalid_argument("Hyperrectangle: lo/hi size mismatch");
    c_.resize(lo_.size());
    for (std::size_t i = 0; i < lo_.size(); ++i) {
      if (lo_[i] > hi_[i]) throw std::invalid_argument("Hyperrectangle: lo > hi");
      c_[i] = 0.5 * (lo_[i] + hi_[i]);
    }
  }

  static Hyperrectangle interval(double a, double b) { return Hyperrectangle(Point{a}, Point{b}); }

  std::size_t dim() const override { return lo_.size(); }
  const Point& center() const override { return c_; }
  std::optional<double> diameter() const override { return dist(lo_, hi_); }

  bool contains(const Point& p) const override {
    require_dim(p, lo_.size(), "Hyperrectangle::contains");
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double t = mem_slack(hi_[i] - lo_[i]);
      if (p[i] < lo_[i] - t || p[i] > hi_[i] + t) return false;
    }
    return true;
  }

  std::vector<Point> candidates(const Point& nu, double radius, double pitch) const override {
    require_dim(nu, lo_.size(), "Hyperrectangle::candidates");
    const std::size_t n = dim();
    const double s = pitch / (2.0 * std::sqrt(static_cast<double>(n)));
    // Per-axis values: anchored lattice clamped to the box, plus the exact
    // box faces that fall inside the window.
    std::vector<std::vector<double>> axis(n);
    double count = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double wlo = std::max(lo_[i], nu[i] - radius);
      const double whi = std::min(hi_[i], nu[i] + radius);
      if (wlo > whi + mem_slack(radius)) return {};
      auto& vals = axis[i];
      const auto klo = static_cast<std::int64_t>(std::ceil((wlo - c_[i]) / s - 1e-12));
      const auto khi = static_cast<std::int64_t>(std::floor((whi - c_[i]) / s + 1e-12));
      for (std::int64_t k = klo; k <= khi; ++k) vals.push_back(c_[i] + s * static_cast<double>(k));
      vals.push_back(wlo);
      vals.push_back(whi);
      std::sort(vals.begin(), vals.end());
      vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
      count *= static_cast<double>(vals.size());
      if (count > 6.0e7) throw std::runtime_error("candidate lattice too large; coarsen the pitch");
    }
    std::vector<Point> out;
    std::vector<std::size_t> idx(n, 0);
    Point p(n);
    while (true) {
      for (std::size_t i = 0; i < n; ++i) p[i] = axis[i][idx[i]];
      if (dist(p, nu) <= radius + mem_slack(radius)) out.push_back(p);
      std::size_t a = 0;
      while (a < n && ++idx[a] == axis[a].size()) {
        idx[a] = 0;
        ++a;
      }
      if (a == n) break;
    }
    finalize(out);
    return out;
  }

  std::string describe() const override { return dim() == 1 ? "interval" : "box"; }

  const Point& lo() const { return lo_; }
  const Point& hi() const { return hi_; }

 private:
  Point lo_, hi_, c_;
};

// Union of axis-aligned segments through a common center: bounded and
// non-convex, but star-shaped by construction.
class StarCross final : public StarSet {
 public:
  StarCross(Point center, std::vector<double> arm_half_lengths)
      : c_(std::move(center)), arms_(std::move(arm_half_lengths)) {
    if (c_.size() != arms_.size()) throw std::invalid_argument("StarCross: arms/dim mismatch");
    for (double a : arms_)
      if (a < 0.0) throw std::invalid_argument("StarCross: negative arm");
  }

  std::size_t dim() const override { return c_.size(); }
  const Point& center() const override { return c_; }

  std::optional<double> diameter() const override {
    // Realized either along one arm (tip to tip) or across two arms.
    double best = 0.0;
    for (std::size_t i = 0; i < arms_.size(); ++i) {
      best = std::max(best, 2.0 * arms_[i]);
      for (std::size_t j = i + 1; j < arms_.size(); ++j)
        best = std::max(best, std::hypot(arms_[i], arms_[j]));
    }
    return best;
  }

  bool contains(const Point& p) const override {
    require_dim(p, c_.size(), "StarCross::contains");
    const double scale = *diameter();
    int off_axis = -1;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (std::fabs(p[i] - c_[i]) > mem_slack(scale)) {
        if (off_axis >= 0) return false;
        off_axis = static_cast<int>(i);
      }
    }
    if (off_axis < 0) return true;  // the center itself
    const auto i = static_cast<std::size_t>(off_axis);
    return std::fabs(p[i] - c_[i]) <= arms_[i] + mem_slack(arms_[i]);
  }

  std::vector<Point> candidates(const Point& nu, double radius, double pitch) const override {
    require_dim(nu, c_.size(), "StarCross::candidates");
    std::vector<Point> out;
    if (dist(c_, nu) <= radius + mem_slack(radius)) out.push_back(c_);
    for (std::size_t i = 0; i < arms_.size(); ++i) {
      if (arms_[i] <= 0.0) continue;
      // Intersection of B(nu, r) with the line {c + t e_i} is |t - ti0| <= w.
      const double ti0 = nu[i] - c_[i];
      double w_sq = radius * radius;
      for (std::size_t j = 0; j < c_.size(); ++j)
        if (j != i) w_sq -= (nu[j] - c_[j]) * (nu[j] - c_[j]);
      if (w_sq < 0.0) continue;
      const double w = std::sqrt(w_sq);
      const double t0 = std::max(-arms_[i], ti0 - w);
      const double t1 = std::min(arms_[i], ti0 + w);
      if (t0 > t1) continue;
      const auto steps = static_cast<std::size_t>(std::ceil((t1 - t0) / pitch)) + 1;
      for (std::size_t kstep = 0; kstep <= steps; ++kstep) {
        const double t = (kstep == steps) ? t1 : t0 + pitch * static_cast<double>(kstep);
        if (t > t1) break;
        Point p = c_;
        p[i] += t;
        out.push_back(std::move(p));
      }
    }
    finalize(out);
    return out;
  }

  std::string describe() const override { return "cross"; }

 private:
  Point c_;
  std::vector<double> arms_;
};

// Vectors with at most s nonzero coordinates. Unbounded, centered at 0.
class SparseCone final : public StarSet {
 public:
  SparseCone(std::size_t n, std::size_t s) : c_(n, 0.0), s_(s) {
    if (s_ < 1 || s_ > n) throw std::invalid_argument("SparseCone: need 1 <= s <= n");
  }

  std::size_t dim() const override { return c_.size(); }
  const Point& center() const override { return c_; }
  std::optional<double> diameter() const override { return std::nullopt; }

  std::size_t sparsity() const { return s_; }

  bool contains(const Point& p) const override {
    require_dim(p, c_.size(), "SparseCone::contains");
    std::size_t nz = 0;
    for (double v : p)
      if (std::fabs(v) > kMemTol) ++nz;
    return nz <= s_;
  }

  std::vector<Point> candidates(const Point& nu, double radius, double pitch) const override {
    require_dim(nu, c_.size(), "SparseCone::candidates");
    const std::size_t n = dim();
    double supports = 1.0;
    for (std::size_t i = 0; i < s_; ++i) supports *= static_cast<double>(n - i) / static_cast<double>(i + 1);
    if (supports > 2.0e4) throw std::runtime_error("SparseCone: too many supports to enumerate candidates");
    const double s = pitch / (2.0 * std::sqrt(static_cast<double>(s_)));
    std::vector<Point> out;
    if (norm(nu) <= radius + mem_slack(radius)) out.push_back(c_);
    std::vector<std::size_t> supp(s_);
    enumerate_supports(0, 0, supp, [&](const std::vector<std::size_t>& sp) {
      // lattice over the coordinate subspace R^sp, window from the ball
      std::vector<std::vector<double>> axis(s_);
      double count = 1.0;
      for (std::size_t a = 0; a < s_; ++a) {
        const double wlo = nu[sp[a]] - radius;
        const double whi = nu[sp[a]] + radius;
        const auto klo = static_cast<std::int64_t>(std::ceil(wlo / s - 1e-12));
        const auto khi = static_cast<std::int64_t>(std::floor(whi / s + 1e-12));
        for (std::int64_t k = klo; k <= khi; ++k) axis[a].push_back(s * static_cast<double>(k));
        count *= static_cast<double>(axis[a].size());
        if (axis[a].empty()) return;
      }
      if (count > 4.0e7) throw std::runtime_error("SparseCone: candidate lattice too large");
      std::vector<std::size_t> idx(s_, 0);
      while (true) {
        Point p(n, 0.0);
        for (std::size_t a = 0; a < s_; ++a) p[sp[a]] = axis[a][idx[a]];
        if (dist(p, nu) <= radius + mem_slack(radius)) out.push_back(std::move(p));
        std::size_t a = 0;
        while (a < s_ && ++idx[a] == axis[a].size()) {
          idx[a] = 0;
          ++a;
        }
        if (a == s_) break;
      }
    });
    finalize(out);
    return out;
  }

  std::string describe() const override { return "sparse_cone"; }

 private:
  template <typename Fn>
  void enumerate_supports(std::size_t start, std::size_t depth, std::vector<std::size_t>& supp,
                          Fn&& fn) const {
    if (depth == s_) {
      fn(supp);
      return;
    }
    for (std::size_t i = start; i + (s_ - depth) <= dim(); ++i) {
      supp[depth] = i;
      enumerate_supports(i + 1, depth + 1, supp, fn);
    }
  }

  Point c_;
  std::size_t s_;
};

// Probability simplex {x >= 0, sum x = 1}.
class Simplex final : public StarSet {
 public:
  explicit Simplex(std::size_t n) : c_(n, 1.0 / static_cast<double>(n)) {
    if (n < 1) throw std::invalid_argument("Simplex: dimension must be positive");
  }

  std::size_t dim() const override { return c_.size(); }
  const Point& center() const override { return c_; }
  std::optional<double> diameter() const override { return c_.size() > 1 ? std::sqrt(2.0) : 0.0; }

  bool contains(const Point& p) const override {
    require_dim(p, c_.size(), "Simplex::contains");
    double sum = 0.0;
    for (double v : p) {
      if (v < -kMemTol) return false;
      sum += v;
    }
    return std::fabs(sum - 1.0) <= mem_slack(1.0);
  }

  std::vector<Point> candidates(const Point& nu, double radius, double pitch) const override {
    require_dim(nu, c_.size(), "Simplex::candidates");
    const std::size_t n = dim();
    const auto m = static_cast<std::int64_t>(
        std::ceil(2.0 * std::sqrt(static_cast<double>(n)) / pitch));
    std::vector<Point> out;
    // Compositions of m into n parts, pruned to the window coordinatewise.
    std::vector<std::int64_t> k(n, 0);
    Point p(n);
    std::function<void(std::size_t, std::int64_t)> rec = [&](std::size_t axis, std::int64_t rem) {
      if (axis + 1 == n) {
        const double v = static_cast<double>(rem) / static_cast<double>(m);
        if (v < nu[axis] - radius - pitch || v > nu[axis] + radius + pitch) return;
        k[axis] = rem;
        for (std::size_t i = 0; i < n; ++i) p[i] = static_cast<double>(k[i]) / static_cast<double>(m);
        if (dist(p, nu) <= radius + mem_slack(radius)) out.push_back(p);
        return;
      }
      const auto lo = std::max<std::int64_t>(
          0, static_cast<std::int64_t>(std::floor((nu[axis] - radius - pitch) * static_cast<double>(m))));
      const auto hi = std::min<std::int64_t>(
          rem, static_cast<std::int64_t>(std::ceil((nu[axis] + radius + pitch) * static_cast<double>(m))));
      for (std::int64_t v = lo; v <= hi; ++v) {
        k[axis] = v;
        rec(axis + 1, rem - v);
      }
    };
    rec(0, m);
    finalize(out);
    return out;
  }

  std::string describe() const override { return "simplex"; }

 private:
  Point c_;
};

inline bool is_singleton(const StarSet& set) {
  auto d = set.diameter();
  return d.has_value() && *d <= 0.0;
}

// Deterministic strided subsample keeping at most cap points (always keeps
// the first element, which candidates() sorts lexicographically smallest).
inline std::vector<Point> strided(std::vector<Point> pts, std::size_t cap) {
  if (pts.size() <= cap || cap == 0) return pts;
  std::vector<Point> out;
  out.reserve(cap);
  const double step = static_cast<double>(pts.size()) / static_cast<double>(cap);
  for (std::size_t i = 0; i < cap; ++i)
    out.push_back(pts[static_cast<std::size_t>(i * step)]);
  return out;
}

namespace detail {

// Exact max-pairwise-distance pair over a candidate set. Any pair at
// distance >= D_lb has both endpoints with r_p + rmax >= D_lb (triangle
// inequality through the centroid), so pruning to those points is lossless.
inline std::pair<Point, Point> farthest_pair(const std::vector<Point>& pts) {
  const std::size_t n = pts.front().size();
  Point g(n, 0.0);
  for (const auto& p : pts)
    for (std::size_t i = 0; i < n; ++i) g[i] += p[i];
  for (std::size_t i = 0; i < n; ++i) g[i] /= static_cast<double>(pts.size());
  std::vector<double> r(pts.size());
  double rmax = 0.0;
  std::size_t a = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    r[i] = dist(pts[i], g);
    if (r[i] > rmax) {
      rmax = r[i];
      a = i;
    }
  }
  std::size_t b = a;
  double d_lb = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double d2 = dist_sq(pts[a], pts[i]);
    if (d2 > d_lb) {
      d_lb = d2;
      b = i;
    }
  }
  d_lb = std::sqrt(d_lb);
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (r[i] + rmax >= d_lb - 1e-12) keep.push_back(i);
  std::size_t bi = a, bj = b;
  double best = d_lb * d_lb;
  for (std::size_t i = 0; i < keep.size(); ++i)
    for (std::size_t j = i + 1; j < keep.size(); ++j) {
      const double ds = dist_sq(pts[keep[i]], pts[keep[j]]);
      if (ds > best) {
        best = ds;
        bi = keep[i];
        bj = keep[j];
      }
    }
  return {pts[bi], pts[bj]};
}

}  // namespace detail

// Max pairwise distance over the candidate grid; within 2*pitch of the true
// diameter for bounded sets.
inline double diameter_estimate(const StarSet& set, double pitch) {
  auto d = set.diameter();
  if (!d) throw std::invalid_argument("diameter_estimate: unbounded set");
  if (*d <= 0.0) return 0.0;
  auto pts = set.candidates(set.center(), *d, pitch);
  auto [a, b] = detail::farthest_pair(pts);
  return dist(a, b);
}

// Endpoints of a segment contained in the set with length >= d/3 - O(pitch):
// take the candidate pair nearly achieving the diameter and keep the longer
// of the two segments back to the star center.
inline std::pair<Point, Point> find_long_segment(const StarSet& set, double pitch) {
  auto d = set.diameter();
  if (!d) throw std::invalid_argument("find_long_segment: unbounded set");
  if (*d <= 0.0) throw std::domain_error("find_long_segment: singleton set");
  auto pts = set.candidates(set.center(), *d, pitch);
  auto [nu1, nu2] = detail::farthest_pair(pts);
  const Point& k_star = set.center();
  const Point& a = dist_sq(nu1, k_star) >= dist_sq(nu2, k_star) ? nu1 : nu2;
  return {a, k_star};
}

// Set specification grammar used by configs, e.g.
//   {"kind":"ball","center":[0,0],"radius":1.0}
//   {"kind":"interval","lo":0.0,"hi":1.0}
//   {"kind":"box","lo":[0,0],"hi":[1,1]}
//   {"kind":"cross","center":[0,0],"arms":[1,1]}
//   {"kind":"sparse_cone","n":2,"s":1}
//   {"kind":"simplex","n":3}
inline std::shared_ptr<StarSet> make_set(const nlohmann::json& spec) {
  const std::string kind = spec.at("kind").get<std::string>();
  if (kind == "ball")
    return std::make_shared<EuclideanBall>(spec.at("center").get<Point>(), spec.at("radius").get<double>());
  if (kind == "interval")
    return std::make_shared<Hyperrectangle>(Point{spec.at("lo").get<double>()}, Point{spec.at("hi").get<double>()});
  if (kind == "box")
    return std::make_shared<Hyperrectangle>(spec.at("lo").get<Point>(), spec.at("hi").get<Point>());
  if (kind == "cross")
    return std::make_shared<StarCross>(spec.at("center").get<Point>(), spec.at("arms").get<std::vector<double>>());
  if (kind == "sparse_cone")
    return std::make_shared<SparseCone>(spec.at("n").get<std::size_t>(), spec.at("s").get<std::size_t>());
  if (kind == "simplex") return std::make_shared<Simplex>(spec.at("n").get<std::size_t>());
  if (kind == "singleton")
    return std::make_shared<EuclideanBall>(spec.at("center").get<Point>(), 0.0);
  throw std::invalid_argument("make_set: unknown kind '" + kind + "'");
}

}  // namespace starmean
