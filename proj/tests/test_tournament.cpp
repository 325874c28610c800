#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "starmean/tournament.hpp"
#include "test_util.hpp"

using namespace starmean;

namespace {

// ---- straight-line 2-D transcription of the tree + tournament, sharing no
// data structures with the library ----

using P2 = std::array<double, 2>;

bool lex2(const P2& a, const P2& b) {
  if (a[0] < b[0] - 1e-12) return true;
  if (a[0] > b[0] + 1e-12) return false;
  return a[1] < b[1] - 1e-12;
}

double d2sq(const P2& a, const P2& b) {
  const double u = a[0] - b[0], v = a[1] - b[1];
  return u * u + v * v;
}

std::vector<double> axis_vals(double lo, double hi, double anchor, double spacing) {
  std::vector<double> vals;
  const auto klo = static_cast<long long>(std::ceil((lo - anchor) / spacing - 1e-12));
  const auto khi = static_cast<long long>(std::floor((hi - anchor) / spacing + 1e-12));
  for (long long k = klo; k <= khi; ++k) vals.push_back(anchor + spacing * static_cast<double>(k));
  vals.push_back(lo);
  vals.push_back(hi);
  std::sort(vals.begin(), vals.end());
  vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
  return vals;
}

// grid members of box [0,1]^2 inside B(nu, r), lex sorted
std::vector<P2> ref_candidates(const P2& nu, double r, double spacing) {
  auto xs = axis_vals(std::max(0.0, nu[0] - r), std::min(1.0, nu[0] + r), 0.5, spacing);
  auto ys = axis_vals(std::max(0.0, nu[1] - r), std::min(1.0, nu[1] + r), 0.5, spacing);
  std::vector<P2> out;
  for (double x : xs)
    for (double y : ys) {
      P2 p{x, y};
      if (d2sq(p, nu) <= r * r * (1.0 + 1e-9) + 1e-18) out.push_back(p);
    }
  std::sort(out.begin(), out.end(), lex2);
  return out;
}

std::vector<P2> ref_pack(const P2& center, double radius, double sep, double spacing) {
  std::vector<P2> kept;
  for (const auto& p : ref_candidates(center, radius, spacing)) {
    bool blocked = false;
    for (const auto& q : kept)
      if (d2sq(p, q) <= sep * sep) blocked = true;
    if (!blocked) kept.push_back(p);
  }
  return kept;
}

struct RefLevel {
  std::vector<P2> pts;
  std::vector<std::vector<int>> parents;
};

std::vector<RefLevel> ref_tree(const P2& root, int depth, double c, double pitch) {
  const double d = std::sqrt(2.0);
  const double spacing = pitch / (2.0 * std::sqrt(2.0));
  std::vector<RefLevel> levels;
  levels.push_back({{root}, {{}}});
  {
    RefLevel lvl;
    for (const auto& p : ref_pack(root, d, d / c, spacing)) {
      lvl.pts.push_back(p);
      lvl.parents.push_back({0});
    }
    levels.push_back(lvl);
  }
  for (int k = 3; k <= depth; ++k) {
    const double sep = d / (std::pow(2.0, k - 1) * c);
    const double ball = d / std::pow(2.0, k - 2);
    std::vector<std::pair<P2, int>> pre;
    for (std::size_t pi = 0; pi < levels.back().pts.size(); ++pi)
      for (const auto& p : ref_pack(levels.back().pts[pi], ball, sep, spacing))
        pre.emplace_back(p, static_cast<int>(pi));
    std::stable_sort(pre.begin(), pre.end(),
                     [](const auto& a, const auto& b) { return lex2(a.first, b.first); });
    RefLevel lvl;
    std::vector<bool> done(pre.size(), false);
    for (std::size_t i = 0; i < pre.size(); ++i) {
      if (done[i]) continue;
      lvl.pts.push_back(pre[i].first);
      std::vector<int> par = {pre[i].second};
      done[i] = true;
      for (std::size_t j = i + 1; j < pre.size(); ++j) {
        if (done[j]) continue;
        if (d2sq(pre[j].first, pre[i].first) <= sep * sep) {
          if (std::find(par.begin(), par.end(), pre[j].second) == par.end())
            par.push_back(pre[j].second);
          done[j] = true;
        }
      }
      lvl.parents.push_back(par);
    }
    levels.push_back(lvl);
  }
  return levels;
}

// Algorithm: at step k pick the offspring minimizing T(d/(2^k (C+1)), ., O),
// ties to the lexicographically smallest point.
P2 ref_traverse(const std::vector<RefLevel>& levels, const std::vector<P2>& data, double c) {
  const double d = std::sqrt(2.0);
  const double C = c / 2.0 - 1.0;
  int cur = 0;
  for (std::size_t k = 1; k < levels.size(); ++k) {
    const auto& next = levels[k];
    std::vector<int> offspring;
    for (std::size_t i = 0; i < next.pts.size(); ++i)
      if (std::find(next.parents[i].begin(), next.parents[i].end(), cur) != next.parents[i].end())
        offspring.push_back(static_cast<int>(i));
    std::sort(offspring.begin(), offspring.end(),
              [&](int a, int b) { return lex2(next.pts[a], next.pts[b]); });
    const double delta = d / (std::pow(2.0, k) * (C + 1.0));
    auto psi = [&](const P2& nu1, const P2& nu2) {
      std::size_t count = 0;
      for (const auto& x : data)
        if (d2sq(x, nu1) >= d2sq(x, nu2)) ++count;
      return 2 * count >= data.size() ? 1 : 0;
    };
    auto dominates_ref = [&](const P2& a, const P2& b) {
      const bool a_first = lex2(a, b);
      const P2& nu1 = a_first ? a : b;
      const P2& nu2 = a_first ? b : a;
      const bool nu1_wins = psi(nu1, nu2) == 0;
      return a_first == nu1_wins;
    };
    int best = offspring.front();
    double best_t = -1.0;
    for (int oi : offspring) {
      double t = 0.0;
      for (int oj : offspring) {
        if (oi == oj) continue;
        const double dd = std::sqrt(d2sq(next.pts[oi], next.pts[oj]));
        if (dd < C * delta) continue;
        if (dominates_ref(next.pts[oj], next.pts[oi])) t = std::max(t, dd);
      }
      if (best_t < 0.0 || t < best_t) {
        best_t = t;
        best = oi;
      }
    }
    cur = best;
  }
  return levels.back().pts[static_cast<std::size_t>(cur)];
}

}  // namespace

TEST_CASE("tournament statistic basics", "[tournament]") {
  NoiseModel model;
  std::vector<Point> data = {Point{0.05}, Point{-0.03}, Point{0.01}};
  DominationContext ctx = make_context(data, model);

  // singleton contender set
  CHECK(tournament_T(0.1, Point{0.0}, {Point{0.0}}, ctx, 3.0) == 0.0);

  // all contenders within C delta: the distance filter empties S'
  CHECK(tournament_T(1.0, Point{0.0}, {Point{0.0}, Point{1.0}, Point{2.0}}, ctx, 3.0) == 0.0);

  // 1-D table: data clustered at 0, S = {0, 0.5, 1.0}, C delta = 0.4
  std::vector<Point> S = {Point{0.0}, Point{0.5}, Point{1.0}};
  const double delta = 0.4 / 3.0;
  CHECK(tournament_T(delta, Point{0.0}, S, ctx, 3.0) == 0.0);
  CHECK(tournament_T(delta, Point{1.0}, S, ctx, 3.0) == Catch::Approx(1.0));
  CHECK(tournament_T(delta, Point{0.5}, S, ctx, 3.0) == Catch::Approx(0.5));

  // selection: the three-point scenario picks 0
  CHECK(select_next({Point{0.0}, Point{0.5}, Point{1.0}}, delta, ctx, 3.0) == Point{0.0});
  // single offspring
  CHECK(select_next({Point{0.7}}, delta, ctx, 3.0) == Point{0.7});
  CHECK_THROWS_AS(select_next({}, delta, ctx, 3.0), std::invalid_argument);
}

TEST_CASE("all-zero T falls back to the lexicographic minimum", "[tournament]") {
  NoiseModel model;
  std::vector<Point> data = {Point{10.0, 10.0}};  // equidistant-ish, all tests trivial
  DominationContext ctx = make_context(data, model);
  // contenders tightly clustered: every pairwise distance < C delta
  std::vector<Point> S = {Point{0.3, 0.1}, Point{0.1, 0.4}, Point{0.2, 0.2}};
  const Point got = select_next(S, 10.0, ctx, 3.0);
  CHECK(got == Point{0.1, 0.4});
}

TEST_CASE("pairwise max dominates the separation", "[tournament]") {
  // max(T_i, T_j) >= ||nu_i - nu_j|| whenever the pair is C delta apart
  Rng rng(41);
  NoiseModel model;
  for (int it = 0; it < 50; ++it) {
    std::vector<Point> data;
    for (int i = 0; i < 15; ++i) data.push_back(rng.normal_vector(2, 1.0));
    DominationContext ctx = make_context(data, model);
    std::vector<Point> S;
    for (int i = 0; i < 8; ++i) S.push_back(rng.normal_vector(2, 1.0));
    const double C = 3.0, delta = 0.2;
    std::vector<double> T(S.size());
    for (std::size_t i = 0; i < S.size(); ++i) T[i] = tournament_T(delta, S[i], S, ctx, C);
    for (std::size_t i = 0; i < S.size(); ++i)
      for (std::size_t j = i + 1; j < S.size(); ++j) {
        const double dd = dist(S[i], S[j]);
        if (dd >= C * delta) CHECK(std::max(T[i], T[j]) >= dd - 1e-12);
      }
  }
}

TEST_CASE("select_next agrees with tournament_T + dominates", "[tournament]") {
  Rng rng(43);
  NoiseModel model;
  for (int it = 0; it < 40; ++it) {
    std::vector<Point> data;
    for (int i = 0; i < 13; ++i) data.push_back(rng.normal_vector(2, 0.8));
    DominationContext ctx = make_context(data, model);
    std::vector<Point> S;
    for (int i = 0; i < 7; ++i) S.push_back(rng.normal_vector(2, 1.0));
    const double C = 3.0, delta = 0.15;
    const Point fast = select_next(S, delta, ctx, C);
    // naive argmin via the public pieces
    std::sort(S.begin(), S.end(), [](const Point& a, const Point& b) { return lex_less(a, b); });
    std::size_t best = 0;
    double best_t = tournament_T(delta, S[0], S, ctx, C);
    for (std::size_t i = 1; i < S.size(); ++i) {
      const double t = tournament_T(delta, S[i], S, ctx, C);
      if (t < best_t) {
        best_t = t;
        best = i;
      }
    }
    CHECK(fast == S[best]);
  }
}

TEST_CASE("j_star closed form on flat entropy", "[tournament]") {
  EuclideanBall singleton(Point{0.0}, 0.0);  // entropy identically zero
  const std::size_t N = 100;
  const double sigma = 0.1, c = 8.0, C = c / 2.0 - 1.0, k_exp = 0.02, d = 2.0;
  const int js = j_star(singleton, N, sigma, c, C, k_exp, d);
  // closed form: largest J with eta_J > sigma sqrt(log 2 / N)
  const double thresh = sigma * std::sqrt(std::log(2.0) / static_cast<double>(N));
  int expect = 1;
  for (int J = 1; J <= 16; ++J)
    if (eta_J(d, J, C, k_exp) * eta_J(d, J, C, k_exp) * static_cast<double>(N) / (sigma * sigma) >
        std::log(2.0))
      expect = J;
    else
      break;
  CHECK(js == expect);
  CHECK(eta_J(d, js, C, k_exp) > thresh);
  CHECK(eta_J(d, js + 1, C, k_exp) <= thresh);

  // quadrupling N shifts J* up by exactly one when the entropy is flat
  CHECK(j_star(singleton, 4 * N, sigma, c, C, k_exp, d) == js + 1);
}

TEST_CASE("j_star equals a dense scan on the interval", "[tournament]") {
  auto iv = Hyperrectangle::interval(0.0, 1.0);
  const std::size_t N = 400;
  const double sigma = 0.05, c = 8.0, C = c / 2.0 - 1.0;
  const double k_exp = solve_gaussian_constants(C, 0.25).C3;
  const int js = j_star(iv, N, sigma, c, C, k_exp, 1.0);
  CHECK(js >= 1);

  int oracle = 1;
  for (int J = 1; J <= 12; ++J) {
    const double eta = eta_J(1.0, J, C, k_exp);
    const double lhs = static_cast<double>(N) * eta * eta / (sigma * sigma);
    const double radius = 1.0 / std::pow(2.0, J - 2);
    const double logm = local_entropy(iv, radius, 2.0 * c, radius / 8.0);
    if (lhs > std::max(2.0 * logm * logm, std::log(2.0)))
      oracle = J;
    else
      break;
  }
  CHECK(js == oracle);
}

TEST_CASE("noiseless estimator concentrates at mu", "[tournament]") {
  Hyperrectangle box(Point{0.0, 0.0}, Point{1.0, 1.0});
  const Point mu{0.3, 0.7};
  std::vector<Point> data(40, mu);
  EstimatorConfig cfg;
  cfg.noise.sigma = 0.01;
  cfg.depth = 4;
  cfg.run_to_depth = true;
  cfg.pitch = std::sqrt(2.0) / 128.0;
  Rng rng(1);
  auto [out, st] = run_estimator(data, box, cfg, rng);
  const double d = std::sqrt(2.0);
  // every tournament is exact here, so the output lands within (C+1) delta
  // of mu at the final step
  CHECK(dist(out, mu) <= d / std::pow(2.0, cfg.depth - 1) + cfg.pitch);
  CHECK(st.path.size() == static_cast<std::size_t>(cfg.depth));
}

TEST_CASE("singleton set estimates its center", "[tournament]") {
  EuclideanBall singleton(Point{0.4, -0.1}, 0.0);
  std::vector<Point> data(10, Point{5.0, 5.0});
  EstimatorConfig cfg;
  Rng rng(2);
  auto [out, st] = run_estimator(data, singleton, cfg, rng);
  CHECK(out == singleton.center());
}

TEST_CASE("estimator matches the straight-line transcription bit for bit", "[tournament]") {
  Hyperrectangle box(Point{0.0, 0.0}, Point{1.0, 1.0});
  const double c = 8.0, pitch = 0.02;
  const int depth = 3;
  const Point mu{0.4, 0.6};
  Rng data_rng(42);
  std::vector<Point> data;
  for (int i = 0; i < 200; ++i) data.push_back(add(mu, data_rng.normal_vector(2, 0.15)));

  EstimatorConfig cfg;
  cfg.noise.sigma = 0.15;
  cfg.depth = depth;
  cfg.pitch = pitch;
  cfg.run_to_depth = true;
  Rng rng(3);
  auto [out, st] = run_estimator(data, box, cfg, rng);

  std::vector<P2> ref_data;
  for (const auto& x : data) ref_data.push_back(P2{x[0], x[1]});
  auto levels = ref_tree(P2{0.5, 0.5}, depth, c, pitch);
  const P2 ref_out = ref_traverse(levels, ref_data, c);

  REQUIRE(out.size() == 2);
  CHECK(out[0] == ref_out[0]);
  CHECK(out[1] == ref_out[1]);
}

TEST_CASE("traversal respects the Cauchy path bound", "[tournament]") {
  Hyperrectangle box(Point{0.0, 0.0}, Point{1.0, 1.0});
  Rng data_rng(7);
  const Point mu{0.25, 0.25};
  std::vector<Point> data;
  for (int i = 0; i < 100; ++i) data.push_back(add(mu, data_rng.normal_vector(2, 0.1)));
  const double c = 8.0, d = std::sqrt(2.0);
  auto tree = build_tree(box, box.center(), 5, c, d / 256.0);
  NoiseModel model;
  model.sigma = 0.1;
  DominationContext ctx = make_context(data, model);
  auto st = traverse(tree, 4, ctx, c / 2.0 - 1.0);
  for (std::size_t jp = 0; jp < st.path.size(); ++jp)
    for (std::size_t jq = jp; jq < st.path.size(); ++jq) {
      const double bound = d * (2.0 + 4.0 * c) / (c * std::pow(2.0, jp + 1));
      CHECK(dist(tree.node(st.path[jp]).point, tree.node(st.path[jq]).point) <= bound + 1e-9);
    }
  CHECK_THROWS_AS(traverse(tree, 5, ctx, 3.0), std::invalid_argument);
}
