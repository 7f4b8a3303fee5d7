// Copyright 2026 The ugw-local Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "ugw/parallel.hpp"
#include "ugw/rng.hpp"
#include "ugw/stats.hpp"
#include "ugw/verify.hpp"

namespace ugw {

FiniteGraph GraphModel::sample(std::size_t n, std::uint64_t seed) const {
  switch (kind) {
    case Kind::kErdosRenyi:
      require(n >= 2 && mean_degree > 0.0 && mean_degree < static_cast<double>(n), ErrorKind::kInvalidArgument,
              "Erdos-Renyi model needs 0 < mean degree < n");
      return sample_erdos_renyi(n, mean_degree / static_cast<double>(n), seed);
    case Kind::kRegular:
      return sample_regular(n, kappa, seed);
    case Kind::kConfiguration: {
      require(degree_law.has_value(), ErrorKind::kInvalidArgument, "configuration model needs a degree law");
      rng::Engine engine(seed, 1, rng::Domain::kStructure);
      std::vector<std::size_t> degrees(n);
      std::size_t sum = 0;
      for (auto& d : degrees) {
        d = degree_law->quantile(engine.uniform());
        sum += d;
      }
      // Redraw the last degree until the sum is even.
      for (int attempt = 0; sum % 2 == 1 && attempt < 1000; ++attempt) {
        sum -= degrees.back();
        degrees.back() = degree_law->quantile(engine.uniform());
        sum += degrees.back();
      }
      if (sum % 2 == 1) ++degrees.back();
      return sample_configuration_model(n, degrees, rng::mix(seed, 7));
    }
  }
  fail(ErrorKind::kInvalidArgument, "unknown graph model");
}

std::string GraphModel::describe() const {
  char buf[96];
  switch (kind) {
    case Kind::kErdosRenyi:
      std::snprintf(buf, sizeof buf, "er(mean_degree=%.17g)", mean_degree);
      return buf;
    case Kind::kRegular:
      std::snprintf(buf, sizeof buf, "regular(kappa=%zu)", kappa);
      return buf;
    case Kind::kConfiguration:
      return "configuration";
  }
  return "unknown";
}

TestReport local_limit_experiment(const GraphModel& model, const DriftSpec& drift, const DiffusionSpec& diffusion,
                                  const InitialLaw& init, const TimeGrid& grid, const LocalEnsemble& local,
                                  const LocalLimitOptions& options) {
  const auto& prov = local.provenance();
  if (prov.drift != drift.name() || prov.diffusion != diffusion.name() || prov.init != init.name)
    fail(ErrorKind::kInvalidComparison, "local solution was computed with " + prov.drift + ", " + prov.diffusion +
                                            ", " + prov.init + " but the finite system uses " + drift.name() +
                                            ", " + diffusion.name() + ", " + init.name);
  if (!(local.grid() == grid)) fail(ErrorKind::kInvalidComparison, "local solution uses a different time grid");
  if (!init.bounded_support)
    fail(ErrorKind::kInvalidComparison, "the initial law must have bounded support for this comparison");
  if (model.kind == GraphModel::Kind::kRegular && prov.mode == "ugw")
    fail(ErrorKind::kInvalidComparison, "regular graphs are compared against the regular-tree solution");
  if (model.kind != GraphModel::Kind::kRegular && prov.mode == "regular")
    fail(ErrorKind::kInvalidComparison, "random-degree graphs are compared against the UGW solution");
  require(options.trials >= 1, ErrorKind::kInvalidArgument, "need at least one trial");

  const double T = grid.horizon();
  const PointSet target = local.root_marginal(T);
  SimulationOptions sim;
  sim.threads = options.threads;
  std::vector<double> small(options.trials), large(options.trials);
  for (std::size_t i = 0; i < options.trials; ++i) {
    for (int s = 0; s < 2; ++s) {
      const std::size_t n = s == 0 ? options.n_small : options.n_large;
      const std::uint64_t base = 4 * i + 2 * static_cast<std::uint64_t>(s);
      const FiniteGraph g = model.sample(n, rng::mix(options.seed, base));
      const PathBundle paths = simulate_system(SimTopology::from_graph(g), drift, diffusion, init, grid,
                                               rng::mix(options.seed, base + 1), sim);
      (s == 0 ? small : large)[i] = wasserstein1(empirical_measure(paths, T), target);
    }
  }
  std::size_t decreases = 0;
  for (std::size_t i = 0; i < options.trials; ++i) decreases += large[i] < small[i];
  TestReport r;
  r.name = "local_limit";
  r.statistic = stats::mean(large);
  r.mc_std_error = stats::std_error(large);
  r.threshold = options.tolerance;
  r.p_value = stats::binomial_upper_tail(decreases, options.trials, 0.5);
  r.verdict = r.statistic < options.tolerance && r.p_value < options.alpha ? Verdict::kPass : Verdict::kFail;
  r.numbers = {{"w1_small_mean", stats::mean(small)},
               {"w1_large_mean", stats::mean(large)},
               {"n_small", static_cast<double>(options.n_small)},
               {"n_large", static_cast<double>(options.n_large)},
               {"trials", static_cast<double>(options.trials)},
               {"decreases", static_cast<double>(decreases)},
               {"replicas", static_cast<double>(local.replicas())},
               {"seed", static_cast<double>(options.seed)}};
  r.notes = {{"model", model.describe()}, {"drift", drift.name()}, {"sigma", diffusion.name()}, {"init", init.name}};
  return r;
}

// ---------------------------------------------------------------------------

std::optional<RerootRecord> extract_reroot_record(const SampledTree& tree, const PathBundle& paths,
                                                  std::size_t step, const RerootFunction& h) {
  if (tree.offspring(0) == 0) return std::nullopt;
  const std::size_t one = tree.first_child(0);
  RerootRecord rec;
  auto root = paths.state(0, step), child = paths.state(one, step);
  rec.root.assign(root.begin(), root.end());
  rec.child.assign(child.begin(), child.end());
  std::vector<std::span<const double>> nbrs;
  for (std::size_t i = 0; i < tree.offspring(0); ++i) nbrs.push_back(paths.state(tree.first_child(0) + i, step));
  rec.h_root = h(root, child, nbrs);
  nbrs.clear();
  nbrs.push_back(root);
  for (std::size_t i = 0; i < tree.offspring(one); ++i) nbrs.push_back(paths.state(tree.first_child(one) + i, step));
  rec.h_child = h(child, root, nbrs);
  rec.degree_root = static_cast<double>(tree.degree(0));
  rec.degree_child = static_cast<double>(tree.degree(one));
  return rec;
}

namespace {

// Differences between the tilted root regression and the child regression on the panel.
std::vector<double> reroot_differences(std::span<const RerootRecord> recs, std::span<const std::size_t> pick,
                                       const std::vector<std::vector<double>>& panel,
                                       const GammaEstimatorConfig& config) {
  const std::size_t d = recs.front().root.size();
  std::vector<double> fa, fb, ra, rb, wa;
  fa.reserve(pick.size() * 2 * d);
  fb.reserve(pick.size() * 2 * d);
  for (auto i : pick) {
    const auto& r = recs[i];
    fa.insert(fa.end(), r.root.begin(), r.root.end());
    fa.insert(fa.end(), r.child.begin(), r.child.end());
    fb.insert(fb.end(), r.child.begin(), r.child.end());
    fb.insert(fb.end(), r.root.begin(), r.root.end());
    ra.push_back(r.h_root);
    rb.push_back(r.h_child);
    wa.push_back(r.degree_root / r.degree_child);
  }
  const GammaEstimator A(std::move(fa), 2 * d, std::move(ra), 1, std::move(wa), config);
  const GammaEstimator B(std::move(fb), 2 * d, std::move(rb), 1, {}, config);
  std::vector<double> out;
  double ea = 0.0, eb = 0.0;
  for (const auto& q : panel) {
    A.estimate(q, {&ea, 1});
    B.estimate(q, {&eb, 1});
    out.push_back(ea - eb);
  }
  return out;
}

}  // namespace

TestReport reroot_gamma_check(std::span<const RerootRecord> records, const RerootOptions& options) {
  const std::size_t n = records.size();
  const std::size_t k =
      options.estimator.k != 0 ? options.estimator.k
                               : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
  if (n < 2 * std::max<std::size_t>(k, 1))
    fail(ErrorKind::kInsufficientData, "reroot check has " + std::to_string(n) + " trees with 1 in T");
  const std::size_t d = records.front().root.size();
  std::vector<std::vector<double>> marg(d);
  for (const auto& r : records)
    for (std::size_t c = 0; c < d; ++c) marg[c].push_back(r.root[c]);
  for (auto& m : marg) std::sort(m.begin(), m.end());
  auto quant = [&](std::size_t c, double p) {
    return marg[c][std::min(n - 1, static_cast<std::size_t>(p * static_cast<double>(n)))];
  };
  std::vector<std::vector<double>> panel;
  for (double pu : options.panel_quantiles)
    for (double pv : options.panel_quantiles) {
      std::vector<double> q(2 * d);
      for (std::size_t c = 0; c < d; ++c) {
        q[c] = quant(c, pu);
        q[d + c] = quant(c, pv);
      }
      panel.push_back(std::move(q));
    }

  GammaEstimatorConfig config = options.estimator;
  config.k = k;
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  const std::vector<double> diff = reroot_differences(records, all, panel, config);

  std::vector<std::vector<double>> boot(panel.size());
  std::vector<std::size_t> pick(n);
  for (std::size_t b = 0; b < options.bootstrap; ++b) {
    rng::Engine engine(options.seed, b, rng::Domain::kAuxiliary);
    for (auto& p : pick) p = engine.below(n);
    const auto db = reroot_differences(records, pick, panel, config);
    for (std::size_t i = 0; i < panel.size(); ++i) boot[i].push_back(db[i]);
  }
  double pooled = 0.0, sup = 0.0;
  for (std::size_t i = 0; i < panel.size(); ++i) {
    pooled += stats::variance(boot[i]);
    sup = std::max(sup, std::abs(diff[i]));
  }
  pooled = std::sqrt(pooled / static_cast<double>(panel.size()));

  TestReport r;
  r.name = "reroot_gamma";
  r.statistic = sup;
  r.mc_std_error = pooled;
  r.threshold = options.sigmas * pooled;
  r.verdict = r.statistic <= r.threshold ? Verdict::kPass : Verdict::kFail;
  r.numbers = {{"records", static_cast<double>(n)},
               {"panel_points", static_cast<double>(panel.size())},
               {"bootstrap", static_cast<double>(options.bootstrap)},
               {"k", static_cast<double>(k)},
               {"seed", static_cast<double>(options.seed)}};
  return r;
}

}  // namespace ugw
