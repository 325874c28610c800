#pragma once

#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "starmean/point.hpp"

namespace starmean {

// Uniform-grid neighbor index over points, cell size = query radius. Lookups
// scan the 3^n neighboring cells, which hold O(1) points when the stored
// points are themselves separated on the cell scale.
class GridHash {
 public:
  GridHash(std::size_t dim, double cell) : dim_(dim), cell_(cell > 0 ? cell : 1.0) {}

  void insert(const Point& p, std::uint32_t id) {
    buckets_[key(p)].push_back(id);
  }

  // Visit ids of stored points in cells overlapping B(p, cell); the visitor
  // must do its own exact distance check.
  template <typename Fn>
  void visit_neighbors(const Point& p, Fn&& fn) const {
    std::vector<std::int64_t> base(dim_), off(dim_, -1);
    for (std::size_t i = 0; i < dim_; ++i) base[i] = cell_index(p[i]);
    while (true) {
      std::uint64_t h = 1469598103934665603ULL;
      for (std::size_t i = 0; i < dim_; ++i) h = step(h, base[i] + off[i]);
      auto it = buckets_.find(h);
      if (it != buckets_.end())
        for (std::uint32_t id : it->second) fn(id);
      std::size_t axis = 0;
      while (axis < dim_ && ++off[axis] > 1) {
        off[axis] = -1;
        ++axis;
      }
      if (axis == dim_) break;
    }
  }

 private:
  std::int64_t cell_index(double x) const { return static_cast<std::int64_t>(std::floor(x / cell_)); }

  static std::uint64_t step(std::uint64_t h, std::int64_t v) {
    h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ULL;
    return h * 1099511628211ULL;
  }

  std::uint64_t key(const Point& p) const {
    std::uint64_t h = 1469598103934665603ULL;
    for (std::size_t i = 0; i < dim_; ++i) h = step(h, cell_index(p[i]));
    return h;
  }

  std::size_t dim_;
  double cell_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> buckets_;
};

}  // namespace starmean
