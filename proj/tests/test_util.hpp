#pragma once

#include <vector>

#include "starmean/point.hpp"
#include "starmean/rng.hpp"
#include "starmean/star_set.hpp"

namespace test_util {

using starmean::Point;

// uniform point in the axis-aligned box [lo, hi]^n
inline Point uniform_box(starmean::Rng& rng, const Point& lo, const Point& hi) {
  Point p(lo.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = lo[i] + (hi[i] - lo[i]) * rng.uniform();
  return p;
}

inline double min_dist_to(const std::vector<Point>& pts, const Point& x) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : pts) best = std::min(best, starmean::dist(p, x));
  return best;
}

}  // namespace test_util
