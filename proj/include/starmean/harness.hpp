#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "starmean/adversary.hpp"
#include "starmean/bounds.hpp"
#include "starmean/constants.hpp"
#include "starmean/entropy.hpp"
#include "starmean/hypotests.hpp"
#include "starmean/point.hpp"
#include "starmean/rng.hpp"
#include "starmean/star_set.hpp"
#include "starmean/tournament.hpp"
#include "starmean/unbounded.hpp"

namespace starmean {

inline constexpr const char* kVersionTag = "starmean-0.1.0";

struct NoiseGenSpec {
  std::string kind = "gaussian";  // or "skewed_two_point"
  double p = 0.9;
  double bounded_scale = 0.45;  // relative to sigma
  double gauss_scale = 0.5;     // relative to sigma
};

struct AdversarySpec {
  std::string kind = "none";  // none | oracle_shift | tv_mixture | pointmass_mixture
  double magnitude = 0.0;     // oracle_shift, in units of sigma
};

struct RobustConfig {
  nlohmann::json set_spec;
  std::shared_ptr<StarSet> set;
  NoiseModel noise;
  NoiseGenSpec noise_gen;
  double epsilon = 0.0;
  AdversarySpec adversary;
  std::size_t N = 100;
  std::size_t trials = 100;
  std::uint64_t seed = 1;
  double c = 8.0;
  double kappa = 0.25;
  int depth = 0;
  int max_depth = kDefaultMaxTreeDepth;
  double pitch = 0.0;
  std::size_t smoothing_reps = 1;
  bool run_to_depth = false;
  bool remark_rescale = false;
  std::string mode = "bounded";  // or "unbounded"
  double r_gamma = 0.99;
  bool allow_gamma_override = false;
  std::optional<Point> mu;  // default: the set center
  bool mu_sweep = false;    // worst-case placement over coarse candidates
  std::string out_csv;
  std::string out_json;
  std::vector<std::string> warnings;
};

inline RobustConfig parse_config(const nlohmann::json& j) {
  RobustConfig cfg;
  cfg.set_spec = j.at("set");
  cfg.set = make_set(cfg.set_spec);

  const auto& nj = j.at("noise");
  const std::string variant = nj.value("variant", "gaussian");
  if (variant == "gaussian") {
    cfg.noise.variant = NoiseVariant::Gaussian;
  } else if (variant == "grouped" || variant == "known_or_symmetric_subgaussian") {
    cfg.noise.variant = NoiseVariant::GroupedSubGaussian;
  } else if (variant == "unknown_subgaussian") {
    cfg.noise.variant = NoiseVariant::UnknownSubGaussian;
  } else {
    throw std::invalid_argument("parse_config: unknown noise variant '" + variant + "'");
  }
  cfg.noise.sigma = nj.at("sigma").get<double>();
  cfg.noise.k = nj.value("k", std::size_t{4});
  cfg.noise.gamma = nj.value("gamma", 0.1);
  cfg.noise.C3 = nj.value("C3", 0.5);
  if (nj.contains("generator")) {
    const auto& gj = nj.at("generator");
    cfg.noise_gen.kind = gj.value("kind", "gaussian");
    cfg.noise_gen.p = gj.value("p", 0.9);
    cfg.noise_gen.bounded_scale = gj.value("bounded_scale", 0.45);
    cfg.noise_gen.gauss_scale = gj.value("gauss_scale", 0.5);
  }

  cfg.epsilon = j.value("epsilon", 0.0);
  cfg.noise.epsilon = cfg.epsilon;
  if (j.contains("adversary")) {
    const auto& aj = j.at("adversary");
    cfg.adversary.kind = aj.value("kind", "none");
    cfg.adversary.magnitude = aj.value("magnitude", 0.0);
  }
  cfg.N = j.at("N").get<std::size_t>();
  cfg.trials = j.value("trials", std::size_t{100});
  cfg.seed = j.value("seed", std::uint64_t{1});
  cfg.c = j.value("c", 8.0);
  cfg.kappa = j.value("kappa", 0.25);
  cfg.depth = j.value("depth", 0);
  cfg.max_depth = j.value("max_depth", kDefaultMaxTreeDepth);
  cfg.pitch = j.value("pitch", 0.0);
  cfg.smoothing_reps = j.value("smoothing_reps", std::size_t{1});
  cfg.run_to_depth = j.value("run_to_depth", false);
  cfg.remark_rescale = j.value("remark_rescale", false);
  cfg.mode = j.value("mode", std::string("bounded"));
  cfg.r_gamma = j.value("r_gamma", 0.99);
  cfg.allow_gamma_override = j.value("allow_gamma_override", false);
  if (j.contains("mu")) {
    if (j.at("mu").is_string() && j.at("mu").get<std::string>() == "sweep")
      cfg.mu_sweep = true;
    else
      cfg.mu = j.at("mu").get<Point>();
  }
  cfg.out_csv = j.value("out_csv", std::string());
  cfg.out_json = j.value("out_json", std::string());

  // module-level preconditions, validated at load
  if (!(cfg.c > 6.0)) throw std::invalid_argument("parse_config: need c > 6");
  if (!(cfg.kappa > 0.0 && cfg.kappa <= 0.5)) throw std::invalid_argument("parse_config: kappa in (0, 1/2]");
  if (!(cfg.epsilon >= 0.0 && cfg.epsilon < 0.5)) throw std::invalid_argument("parse_config: epsilon in [0, 1/2)");
  if (cfg.noise.variant == NoiseVariant::GroupedSubGaussian &&
      cfg.epsilon > cfg.noise.gamma / static_cast<double>(cfg.noise.k))
    throw std::invalid_argument("parse_config: grouped variant needs epsilon <= gamma/k");
  if (cfg.noise.variant == NoiseVariant::UnknownSubGaussian) {
    if (cfg.epsilon >= 1.0 / 8.0)
      throw std::invalid_argument("parse_config: unknown-sub-Gaussian variant needs epsilon < 1/8");
    if (cfg.epsilon >= 1.0 / 32.0)
      cfg.warnings.push_back("epsilon >= 1/32 is outside the unknown-sub-Gaussian theory; running anyway");
  }
  if (cfg.mode == "unbounded" && cfg.set->bounded())
    throw std::invalid_argument("parse_config: unbounded mode on a bounded set");
  if (cfg.mode == "bounded" && !cfg.set->bounded())
    throw std::invalid_argument("parse_config: bounded mode on an unbounded set");
  return cfg;
}

// Clean noise draw for one observation.
inline Point draw_noise(Rng& rng, const NoiseGenSpec& gen, double sigma, std::size_t n) {
  if (gen.kind == "gaussian") return rng.normal_vector(n, sigma);
  if (gen.kind == "skewed_two_point") {
    // centered two-point + Gaussian mix; sub-Gaussian with parameter <= sigma
    Point p(n);
    const double sy = sigma * gen.bounded_scale;
    const double sg = sigma * gen.gauss_scale;
    const double denom = std::sqrt(gen.p * (1.0 - gen.p));
    for (auto& v : p) {
      const double b = rng.uniform() < gen.p ? 1.0 : 0.0;
      v = sy * (b - gen.p) / denom + sg * rng.normal();
    }
    return p;
  }
  throw std::invalid_argument("draw_noise: unknown generator '" + gen.kind + "'");
}

inline Dataset apply_adversary(const RobustConfig& cfg, std::vector<Point> clean, const Point& mu,
                               std::uint64_t seed) {
  if (cfg.adversary.kind == "none" || cfg.epsilon == 0.0)
    return make_clean_dataset(std::move(clean), mu, cfg.epsilon);
  if (cfg.adversary.kind == "oracle_shift")
    return corrupt_oracle_shift(std::move(clean), mu, *cfg.set, cfg.epsilon,
                                cfg.adversary.magnitude * cfg.noise.sigma, seed);
  if (cfg.adversary.kind == "tv_mixture") {
    const double ep = cfg.epsilon;
    const double sep = 2.0 * cfg.noise.sigma * ep / (1.0 - ep);
    Point dir(mu.size(), 0.0);
    const Point& ks = cfg.set->center();
    if (dist(mu, ks) > 0.0)
      dir = scale(sub(ks, mu), 1.0 / dist(mu, ks));
    else
      dir[0] = 1.0;
    Point theta2 = add(mu, scale(dir, sep * 0.999));
    if (!cfg.set->contains(theta2)) theta2 = mu;  // degenerate but budget-safe
    return corrupt_tv_mixture(std::move(clean), mu, theta2, cfg.epsilon, cfg.noise.sigma, seed);
  }
  throw std::invalid_argument("apply_adversary: unknown adversary '" + cfg.adversary.kind + "'");
}

struct RiskReport {
  std::vector<double> errors_sq;
  double risk = 0.0;
  double stderr_risk = 0.0;
  double median_sq = 0.0;
  RateEnvelope envelope;
  double fano = 0.0;
  double corruption_lb = 0.0;
  double eta_star_val = 0.0;
  int j_star_used = 1;
  double wall_seconds = 0.0;
  nlohmann::json config_echo;
  nlohmann::json constants;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
};

namespace detail {

inline nlohmann::json resolved_constants(const RobustConfig& cfg) {
  nlohmann::json j;
  const double C = cfg.c / 2.0 - 1.0;
  j["C"] = C;
  j["c"] = cfg.c;
  const auto gk = solve_gaussian_constants(C, cfg.kappa);
  j["gaussian"] = {{"kappa", gk.kappa}, {"C_prime", gk.C_prime}, {"alpha", gk.alpha},
                   {"beta", gk.beta},   {"C1", gk.C1},           {"C2", gk.C2},
                   {"L", gk.L},         {"C3", gk.C3}};
  const auto gr = solve_grouped_constants(C, cfg.noise.k, cfg.noise.gamma);
  j["grouped"] = {{"k", gr.k}, {"gamma", gr.gamma}, {"D2", gr.D2}, {"C1", gr.C1}, {"C2", gr.C2}, {"C3", gr.C3}};
  const auto us = solve_unknown_subgaussian_constants(cfg.noise.C3);
  j["unknown_subgaussian"] = {{"C3", us.C3}, {"D1", us.D1}, {"D2", us.D2}, {"D3", us.D3},
                              {"D4", us.D4}, {"D6", us.D6}, {"C", us.C},   {"C1", us.C1},
                              {"alpha", us.alpha}, {"C4", us.C4}, {"C5", us.C5}};
  j["version"] = kVersionTag;
  return j;
}

}  // namespace detail

inline nlohmann::json RiskReport::to_json() const {
  nlohmann::json j;
  j["risk"] = risk;
  j["stderr"] = stderr_risk;
  j["median_sq"] = median_sq;
  j["trials"] = errors_sq.size();
  j["eta_star"] = eta_star_val;
  j["envelope"] = {{"eta_star_sq", envelope.eta_star_sq},
                   {"corruption_term", envelope.corruption_term},
                   {"rate", envelope.rate}};
  if (envelope.d_sq) j["envelope"]["d_sq"] = *envelope.d_sq;
  j["fano_lower"] = fano;
  j["corruption_lower"] = corruption_lb;
  j["j_star"] = j_star_used;
  j["wall_seconds"] = wall_seconds;
  j["config"] = config_echo;
  j["constants"] = constants;
  j["warnings"] = warnings;
  return j;
}

// Data-independent tree shared across trials of one config.
inline PackingTree build_config_tree(const RobustConfig& cfg) {
  const auto& set = *cfg.set;
  const double d = *set.diameter();
  int depth = cfg.depth;
  if (depth <= 0) depth = 5;
  const double pitch = cfg.pitch > 0.0 ? cfg.pitch : d / std::ldexp(1.0, depth + 2);
  return build_tree(set, set.center(), depth, cfg.c, pitch, std::nullopt, cfg.max_depth);
}

inline Point pick_mu(const RobustConfig& cfg, std::size_t trial, const std::vector<Point>& sweep_pool) {
  if (cfg.mu) return *cfg.mu;
  if (cfg.mu_sweep && !sweep_pool.empty()) return sweep_pool[trial % sweep_pool.size()];
  return cfg.set->center();
}

// One Monte Carlo run: per trial, sample mu, draw clean data, corrupt, run
// the variant estimator, record the squared error. Per-trial seeds derive
// from the master seed so the aggregate is order-independent.
inline RiskReport run_trials(const RobustConfig& cfg, const PackingTree* shared_tree = nullptr) {
  const auto t0 = std::chrono::steady_clock::now();
  RiskReport rep;
  rep.warnings = cfg.warnings;
  const auto& set = *cfg.set;

  std::vector<Point> sweep_pool;
  if (cfg.mu_sweep) {
    if (set.bounded())
      sweep_pool = strided(set.candidates(set.center(), *set.diameter(), *set.diameter() / 8.0), 64);
    else
      sweep_pool.push_back(set.center());
  }

  PackingTree local_tree;
  const PackingTree* tree = shared_tree;
  if (cfg.mode == "bounded" && !tree && !is_singleton(set)) {
    local_tree = build_config_tree(cfg);
    tree = &local_tree;
  }

  EstimatorConfig est;
  est.noise = cfg.noise;
  est.c = cfg.c;
  est.kappa = cfg.kappa;
  est.pitch = cfg.pitch;
  est.depth = tree ? tree->params.depth : cfg.depth;
  est.run_to_depth = cfg.run_to_depth;
  est.remark_rescale = cfg.remark_rescale;
  est.n_smoothing_reps = cfg.smoothing_reps;
  est.max_depth = cfg.max_depth;
  est.prebuilt = tree;

  UnboundedEstimatorConfig ucfg;
  ucfg.noise = cfg.noise;
  ucfg.c = cfg.c;
  ucfg.kappa = cfg.kappa;
  ucfg.epsilon = cfg.epsilon;
  ucfg.r_gamma = cfg.r_gamma;
  ucfg.allow_gamma_override = cfg.allow_gamma_override;
  ucfg.pitch = cfg.pitch;
  ucfg.depth = cfg.depth;
  ucfg.run_to_depth = cfg.run_to_depth;
  ucfg.max_depth = cfg.max_depth;

  const std::size_t data_count =
      cfg.noise.variant == NoiseVariant::UnknownSubGaussian ? 2 * cfg.N : cfg.N;

  for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
    Rng rng(mix_seed(cfg.seed, trial));
    const Point mu = pick_mu(cfg, trial, sweep_pool);
    std::vector<Point> clean(data_count);
    for (auto& x : clean) x = add(mu, draw_noise(rng, cfg.noise_gen, cfg.noise.sigma, set.dim()));
    Dataset ds = apply_adversary(cfg, std::move(clean), mu, mix_seed(cfg.seed, trial) ^ 0xadull);

    Point estimate;
    if (cfg.mode == "unbounded") {
      auto run = run_unbounded_estimator(ds.observed, set, ucfg, rng);
      estimate = run.estimate;
      rep.j_star_used = run.j_star;
    } else {
      auto [out, st] = run_estimator(ds.observed, set, est, rng);
      estimate = out;
      rep.j_star_used = st.j_star;
    }
    rep.errors_sq.push_back(dist_sq(estimate, mu));
  }

  double sum = 0.0, sum_sq = 0.0;
  for (double e : rep.errors_sq) {
    sum += e;
    sum_sq += e * e;
  }
  const auto tn = static_cast<double>(rep.errors_sq.size());
  rep.risk = sum / tn;
  rep.stderr_risk = tn > 1 ? std::sqrt(std::max(0.0, (sum_sq / tn - rep.risk * rep.risk) / (tn - 1.0))) : 0.0;
  std::vector<double> sorted = rep.errors_sq;
  std::sort(sorted.begin(), sorted.end());
  rep.median_sq = sorted[sorted.size() / 2];

  LocalEntropyOptions eopts;
  std::optional<double> d;
  const double sigma_eff = std::max(cfg.noise.sigma, 1e-12);  // sigma = 0 runs are legal
  if (set.bounded()) {
    d = *set.diameter();
  } else {
    eopts.region = std::make_pair(set.center(), 8.0 * sigma_eff * std::sqrt(static_cast<double>(set.dim())) +
                                                     8.0 * sigma_eff);
  }
  rep.eta_star_val = eta_star(set, cfg.N, sigma_eff, cfg.c, 0.0, eopts);
  rep.envelope = rate_envelope(cfg.noise.variant, rep.eta_star_val, cfg.noise.sigma, cfg.epsilon, d);
  rep.fano = fano_lower(set, cfg.N, sigma_eff, cfg.c, eopts);
  rep.corruption_lb = cfg.noise.variant == NoiseVariant::UnknownSubGaussian
                          ? subgaussian_lower(cfg.noise.sigma, cfg.epsilon, d.value_or(1e30))
                          : corruption_lower(cfg.noise.sigma, cfg.epsilon, d.value_or(1e30));

  rep.config_echo = {{"set", cfg.set_spec}, {"N", cfg.N},       {"epsilon", cfg.epsilon},
                     {"sigma", cfg.noise.sigma}, {"trials", cfg.trials}, {"seed", cfg.seed},
                     {"c", cfg.c},          {"kappa", cfg.kappa}, {"mode", cfg.mode}};
  rep.constants = detail::resolved_constants(cfg);
  rep.wall_seconds =
      std::chrono::duration_cast<std::chrono::duration<double>>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// One row per trial; byte-identical for a fixed (config, seed).
inline std::string trials_csv(const RiskReport& rep) {
  std::string out = "trial,error_sq\n";
  for (std::size_t i = 0; i < rep.errors_sq.size(); ++i)
    out += std::to_string(i) + "," + format_double(rep.errors_sq[i]) + "\n";
  return out;
}

struct SweepResult {
  std::string axis;
  std::vector<double> values;
  std::vector<RiskReport> reports;

  std::string csv() const {
    std::string out =
        "axis,value,N,epsilon,sigma,risk,stderr,median_sq,eta_star_sq,corruption_term,envelope,"
        "fano_lower,corruption_lower\n";
    for (std::size_t i = 0; i < values.size(); ++i) {
      const auto& r = reports[i];
      const auto& e = r.config_echo;
      out += axis + "," + format_double(values[i]) + "," +
             std::to_string(e.at("N").get<std::size_t>()) + "," +
             format_double(e.at("epsilon").get<double>()) + "," +
             format_double(e.at("sigma").get<double>()) + "," + format_double(r.risk) + "," +
             format_double(r.stderr_risk) + "," + format_double(r.median_sq) + "," +
             format_double(r.envelope.eta_star_sq) + "," + format_double(r.envelope.corruption_term) +
             "," + format_double(r.envelope.rate) + "," + format_double(r.fano) + "," +
             format_double(r.corruption_lb) + "\n";
    }
    return out;
  }
};

// Rate-vs-parameter curves: one report per value of the chosen axis.
inline SweepResult sweep(const RobustConfig& base, const std::string& axis,
                         const std::vector<double>& values) {
  SweepResult res;
  res.axis = axis;
  res.values = values;
  for (double v : values) {
    RobustConfig cfg = base;
    if (axis == "epsilon") {
      cfg.epsilon = v;
      cfg.noise.epsilon = v;
    } else if (axis == "N") {
      cfg.N = static_cast<std::size_t>(v);
    } else if (axis == "sigma") {
      cfg.noise.sigma = v;
    } else if (axis == "s") {
      auto spec = cfg.set_spec;
      if (spec.value("kind", "") != "sparse_cone")
        throw std::invalid_argument("sweep: axis 's' needs a sparse_cone set");
      spec["s"] = static_cast<std::size_t>(v);
      cfg.set_spec = spec;
      cfg.set = make_set(spec);
    } else {
      throw std::invalid_argument("sweep: unknown axis '" + axis + "'");
    }
    res.reports.push_back(run_trials(cfg));
  }
  return res;
}

}  // namespace starmean
