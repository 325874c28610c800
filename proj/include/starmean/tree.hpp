#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "starmean/entropy.hpp"
#include "starmean/grid_hash.hpp"
#include "starmean/point.hpp"
#include "starmean/star_set.hpp"

namespace starmean {

struct TreeNode {
  Point point;
  int level = 0;
  std::vector<std::uint32_t> parents;
  std::vector<std::uint32_t> offspring;
};

struct TreeParams {
  double d = 0.0;    // diameter, or d_m when overridden
  double c = 0.0;    // packing constant, > 6
  double pitch = 0.0;
  int depth = 0;
  std::optional<std::pair<Point, double>> clip;  // unbounded variant: B(root, d_m)
};

// The pruned directed multi-level packing graph. Pruning re-wires edges
// across parents, so nodes may have several parents; the graph is stored as
// a DAG and "tree" kept as its name.
struct PackingTree {
  std::vector<TreeNode> nodes;
  std::vector<std::vector<std::uint32_t>> levels;  // levels[j] = ids at level j+1
  std::vector<std::size_t> max_preprune_count;     // per level, before pruning
  TreeParams params;

  const TreeNode& node(std::uint32_t id) const { return nodes[id]; }
  std::uint32_t root() const { return levels.front().front(); }

  double level_sep(int level) const {
    // level k >= 3 offspring packings use d / (2^{k-1} c); level 2 uses d/c
    return params.d / (std::ldexp(1.0, level - 1) * params.c);
  }
  double level_ball(int level) const { return params.d / std::ldexp(1.0, level - 2); }

  nlohmann::json to_json() const;
};

inline constexpr int kDefaultMaxTreeDepth = 12;

// Algorithm: level 2 is a maximal (d/c)-packing of B(root, d) ∩ K; each later
// level packs every parent's ball at the halved scale, then prunes the whole
// level in lexicographic order, re-wiring edges from pruned points to their
// lexicographically-least retained neighbor within the packing distance.
inline PackingTree build_tree(const StarSet& set, const Point& root, int depth, double c,
                              double pitch, std::optional<double> d_override = std::nullopt,
                              int max_depth = kDefaultMaxTreeDepth) {
  if (!(c > 6.0)) throw std::invalid_argument("build_tree: need c > 6 (so C = c/2 - 1 > 2)");
  if (depth < 2) throw std::invalid_argument("build_tree: need depth >= 2");
  if (depth > max_depth) throw std::invalid_argument("build_tree: depth exceeds the configured cap");
  if (!set.contains(root)) throw std::invalid_argument("build_tree: root not in the set");
  if (!d_override && !set.bounded())
    throw std::invalid_argument("build_tree: unbounded set requires d_override");

  PackingTree tree;
  tree.params.c = c;
  tree.params.pitch = pitch;
  tree.params.depth = depth;
  tree.params.d = d_override ? *d_override : *set.diameter();
  if (d_override) tree.params.clip = std::make_pair(root, *d_override);
  const double d = tree.params.d;

  auto clip_ok = [&](const Point& p) {
    return !tree.params.clip || dist(p, tree.params.clip->first) <= tree.params.clip->second + mem_slack(d);
  };
  auto window_candidates = [&](const Point& u, double radius) {
    auto all = set.candidates(u, radius, pitch);
    if (tree.params.clip) {
      std::vector<Point> kept;
      kept.reserve(all.size());
      for (auto& p : all)
        if (clip_ok(p)) kept.push_back(std::move(p));
      return kept;
    }
    return all;
  };

  tree.nodes.push_back(TreeNode{root, 1, {}, {}});
  tree.levels.push_back({0});
  tree.max_preprune_count.push_back(1);

  if (d <= 0.0) {  // singleton: every level is the single center point
    for (int lvl = 2; lvl <= depth; ++lvl) {
      const auto id = static_cast<std::uint32_t>(tree.nodes.size());
      const auto parent = static_cast<std::uint32_t>(id - 1);
      tree.nodes.push_back(TreeNode{root, lvl, {parent}, {}});
      tree.nodes[parent].offspring.push_back(id);
      tree.levels.push_back({id});
      tree.max_preprune_count.push_back(1);
    }
    return tree;
  }

  // level 2: no pruning
  {
    auto pack = maximal_packing_over(window_candidates(root, d), root, d, d / c);
    std::vector<std::uint32_t> lvl;
    for (auto& p : pack.points) {
      const auto id = static_cast<std::uint32_t>(tree.nodes.size());
      tree.nodes.push_back(TreeNode{std::move(p), 2, {0}, {}});
      tree.nodes[0].offspring.push_back(id);
      lvl.push_back(id);
    }
    tree.levels.push_back(std::move(lvl));
    tree.max_preprune_count.push_back(pack.points.size());
  }

  for (int lvl = 3; lvl <= depth; ++lvl) {
    const double sep = d / (std::ldexp(1.0, lvl - 1) * c);
    const double ball = d / std::ldexp(1.0, lvl - 2);

    // per-parent maximal packings (the pre-pruned level), stored flat
    std::vector<Point> pre_points;
    std::vector<std::uint32_t> pre_parent;
    std::size_t max_pack = 0;
    for (std::uint32_t pid : tree.levels.back()) {
      auto pack = maximal_packing_over(window_candidates(tree.nodes[pid].point, ball),
                                       tree.nodes[pid].point, ball, sep);
      max_pack = std::max(max_pack, pack.points.size());
      for (auto& p : pack.points) {
        pre_points.push_back(std::move(p));
        pre_parent.push_back(pid);
      }
    }
    tree.max_preprune_count.push_back(max_pack);

    // global lexicographic order
    std::vector<std::uint32_t> order(pre_points.size());
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
      if (lex_less(pre_points[a], pre_points[b])) return true;
      if (lex_less(pre_points[b], pre_points[a])) return false;
      return a < b;
    });

    // Streaming prune: a point within sep of an already-retained point is
    // absorbed by the lexicographically smallest such point (the one that
    // processed it first in Algorithm terms); its parent edge re-wires there.
    std::vector<std::uint32_t> lvl_ids;
    GridHash hash(set.dim(), sep);
    for (std::uint32_t pre_id : order) {
      const Point& p = pre_points[pre_id];
      // retained points were appended in lex order, so the smallest local
      // index within sep is the point that absorbed this one
      std::int64_t absorb = -1;
      hash.visit_neighbors(p, [&](std::uint32_t local) {
        if (dist_sq(p, tree.nodes[lvl_ids[local]].point) <= sep * sep)
          if (absorb < 0 || local < absorb) absorb = local;
      });
      const std::uint32_t parent = pre_parent[pre_id];
      if (absorb < 0) {
        const auto id = static_cast<std::uint32_t>(tree.nodes.size());
        tree.nodes.push_back(TreeNode{p, lvl, {parent}, {}});
        tree.nodes[parent].offspring.push_back(id);
        hash.insert(p, static_cast<std::uint32_t>(lvl_ids.size()));
        lvl_ids.push_back(id);
      } else {
        const auto keeper = lvl_ids[static_cast<std::size_t>(absorb)];
        auto& parents = tree.nodes[keeper].parents;
        if (std::find(parents.begin(), parents.end(), parent) == parents.end()) {
          parents.push_back(parent);
          tree.nodes[parent].offspring.push_back(keeper);
        }
      }
    }
    tree.levels.push_back(std::move(lvl_ids));
  }
  return tree;
}

inline nlohmann::json PackingTree::to_json() const {
  nlohmann::json j;
  j["d"] = params.d;
  j["c"] = params.c;
  j["pitch"] = params.pitch;
  j["depth"] = params.depth;
  nlohmann::json nodes_json = nlohmann::json::array();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    nodes_json.push_back({{"id", i},
                          {"point", nodes[i].point},
                          {"level", nodes[i].level},
                          {"parents", nodes[i].parents},
                          {"offspring", nodes[i].offspring}});
  }
  j["nodes"] = std::move(nodes_json);
  return j;
}

struct TreeReport {
  std::vector<std::string> violations;
  std::size_t checks = 0;
  bool ok() const { return violations.empty(); }
};

namespace detail {

inline double nearest_dist(const std::vector<Point>& pts, const GridHash& hash, const Point& x,
                           double fallback_radius) {
  double best = fallback_radius;
  hash.visit_neighbors(x, [&](std::uint32_t id) { best = std::min(best, dist(x, pts[id])); });
  return best;
}

}  // namespace detail

// Deterministic structural checks: per-level packing separation, per-level
// and per-parent coverings (with one pitch of slack), offspring cardinality
// against the pre-pruning packing sizes, and the path bounds along every
// ancestor chain. Violations are reported with node ids, never swallowed.
inline TreeReport verify_tree(const StarSet& set, const PackingTree& tree) {
  TreeReport rep;
  const double d = tree.params.d;
  const double c = tree.params.c;
  const double pitch = tree.params.pitch;
  auto complain = [&](const std::string& msg) { rep.violations.push_back(msg); };

  if (d <= 0.0) {  // singleton tree: structure is all there is to check
    for (std::size_t j = 0; j < tree.levels.size(); ++j) {
      ++rep.checks;
      if (tree.levels[j].size() != 1) complain("singleton level " + std::to_string(j + 1) + " not a single node");
    }
    return rep;
  }

  // 1. packing separation per level (strict)
  for (std::size_t j = 1; j < tree.levels.size(); ++j) {
    const int level = static_cast<int>(j) + 1;
    const double sep = tree.level_sep(level);
    GridHash hash(set.dim(), sep);
    const auto& ids = tree.levels[j];
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const Point& p = tree.nodes[ids[i]].point;
      hash.visit_neighbors(p, [&](std::uint32_t prev) {
        ++rep.checks;
        if (dist_sq(p, tree.nodes[ids[prev]].point) <= sep * sep)
          complain("level " + std::to_string(level) + ": nodes " + std::to_string(ids[prev]) + "," +
                   std::to_string(ids[i]) + " violate the packing separation");
      });
      hash.insert(p, static_cast<std::uint32_t>(i));
    }
  }

  // 2. level covering of the candidate members of K (or of the clip ball)
  {
    const Point& root_pt = tree.nodes[tree.root()].point;
    const double radius = tree.params.clip ? tree.params.clip->second : d;
    auto sample = set.candidates(root_pt, radius, pitch);
    for (std::size_t j = 1; j < tree.levels.size(); ++j) {
      const int level = static_cast<int>(j) + 1;
      const double cover = d / (std::ldexp(1.0, level - 2) * c) + pitch;
      std::vector<Point> pts;
      for (auto id : tree.levels[j]) pts.push_back(tree.nodes[id].point);
      GridHash hash(set.dim(), cover);
      for (std::size_t i = 0; i < pts.size(); ++i) hash.insert(pts[i], static_cast<std::uint32_t>(i));
      for (const auto& x : sample) {
        ++rep.checks;
        if (detail::nearest_dist(pts, hash, x, 2.0 * cover) > cover)
          complain("level " + std::to_string(level) + ": candidate member uncovered at radius " +
                   std::to_string(cover));
      }
    }
  }

  // 3. per-parent offspring covering and cardinality
  for (std::size_t j = 2; j < tree.levels.size(); ++j) {
    const int level = static_cast<int>(j) + 1;
    const double ball = tree.level_ball(level);
    const double cover = d / (std::ldexp(1.0, level - 2) * c) + pitch;
    const std::size_t cap = tree.max_preprune_count[j];
    for (auto pid : tree.levels[j - 1]) {
      const auto& parent = tree.nodes[pid];
      ++rep.checks;
      if (parent.offspring.size() > cap)
        complain("node " + std::to_string(pid) + ": offspring count " +
                 std::to_string(parent.offspring.size()) + " exceeds the packing bound " + std::to_string(cap));
      std::vector<Point> off;
      for (auto oid : parent.offspring) off.push_back(tree.nodes[oid].point);
      if (off.empty()) {
        complain("node " + std::to_string(pid) + ": no offspring at level " + std::to_string(level));
        continue;
      }
      GridHash hash(set.dim(), cover);
      for (std::size_t i = 0; i < off.size(); ++i) hash.insert(off[i], static_cast<std::uint32_t>(i));
      auto sample = set.candidates(parent.point, ball, pitch);
      for (const auto& x : sample) {
        if (tree.params.clip && dist(x, tree.params.clip->first) > tree.params.clip->second) continue;
        ++rep.checks;
        if (detail::nearest_dist(off, hash, x, 2.0 * cover) > cover)
          complain("node " + std::to_string(pid) + ": offspring fail to cover its ball at radius " +
                   std::to_string(cover));
      }
    }
  }

  // 4. edge increments and the cumulative path bound via ancestor sets
  {
    std::vector<std::vector<std::vector<std::uint32_t>>> anc(tree.nodes.size());
    for (std::size_t j = 1; j < tree.levels.size(); ++j) {
      const int level = static_cast<int>(j) + 1;
      const double inc = level >= 3 ? tree.level_sep(level) + tree.level_ball(level) : d;
      for (auto id : tree.levels[j]) {
        const auto& nd = tree.nodes[id];
        std::vector<std::vector<std::uint32_t>> mine(j);  // ancestors per level 1..j
        for (auto pid : nd.parents) {
          ++rep.checks;
          if (dist(nd.point, tree.nodes[pid].point) > inc + 1e-9)
            complain("edge " + std::to_string(pid) + "->" + std::to_string(id) +
                     " exceeds the increment bound " + std::to_string(inc));
          mine[j - 1].push_back(pid);
          for (std::size_t lj = 0; lj + 1 < j; ++lj)
            for (auto a : anc[pid][lj]) mine[lj].push_back(a);
        }
        for (auto& v : mine) {
          std::sort(v.begin(), v.end());
          v.erase(std::unique(v.begin(), v.end()), v.end());
        }
        for (std::size_t lj = 0; lj < j; ++lj) {
          const double bound = d * (2.0 + 4.0 * c) / (c * std::ldexp(1.0, static_cast<int>(lj) + 1));
          for (auto a : mine[lj]) {
            ++rep.checks;
            if (dist(nd.point, tree.nodes[a].point) > bound + 1e-9)
              complain("path " + std::to_string(a) + "..." + std::to_string(id) +
                       " exceeds the Cauchy bound " + std::to_string(bound));
          }
        }
        anc[id] = std::move(mine);
      }
    }
  }
  return rep;
}

}  // namespace starmean
