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

#include "ugw/verify.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numeric>

#include "ugw/stats.hpp"

namespace ugw {

const char* to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::kPass: return "pass";
    case Verdict::kFail: return "fail";
    case Verdict::kInconclusive: return "inconclusive";
  }
  return "inconclusive";
}

double TestReport::number(const std::string& key) const {
  for (const auto& [k, v] : numbers)
    if (k == key) return v;
  fail(ErrorKind::kInvalidArgument, "report '" + name + "' has no field '" + key + "'");
}

std::string to_json(const TestReport& report) {
  auto num = [](double v) -> nlohmann::ordered_json {
    if (std::isfinite(v)) return v;
    return nullptr;
  };
  nlohmann::ordered_json j;
  j["name"] = report.name;
  j["statistic"] = num(report.statistic);
  j["threshold"] = num(report.threshold);
  j["p_value"] = num(report.p_value);
  j["mc_std_error"] = num(report.mc_std_error);
  j["verdict"] = to_string(report.verdict);
  nlohmann::ordered_json meta = nlohmann::ordered_json::object();
  for (const auto& [k, v] : report.numbers) meta[k] = num(v);
  for (const auto& [k, v] : report.notes) meta[k] = v;
  j["metadata"] = meta;
  return j.dump(2);
}

// ---------------------------------------------------------------------------

namespace {

struct Weighted {
  double x, w;
  int side;
};

// Walks the merged weighted samples; `visit(gap_start, gap_end, Fa, Fb)` sees
// the CDFs on each interval between consecutive distinct values.
template <class Visit>
void walk_cdfs(std::span<const double> a, std::span<const double> wa, std::span<const double> b,
               std::span<const double> wb, Visit&& visit) {
  require(!a.empty() && !b.empty(), ErrorKind::kInvalidArgument, "samples must be nonempty");
  require(wa.empty() || wa.size() == a.size(), ErrorKind::kInvalidArgument, "weight length mismatch");
  require(wb.empty() || wb.size() == b.size(), ErrorKind::kInvalidArgument, "weight length mismatch");
  std::vector<Weighted> all;
  all.reserve(a.size() + b.size());
  double ta = 0.0, tb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double w = wa.empty() ? 1.0 : wa[i];
    require(std::isfinite(a[i]) && w >= 0.0, ErrorKind::kInvalidArgument, "bad sample value or weight");
    all.push_back({a[i], w, 0});
    ta += w;
  }
  for (std::size_t i = 0; i < b.size(); ++i) {
    const double w = wb.empty() ? 1.0 : wb[i];
    require(std::isfinite(b[i]) && w >= 0.0, ErrorKind::kInvalidArgument, "bad sample value or weight");
    all.push_back({b[i], w, 1});
    tb += w;
  }
  require(ta > 0.0 && tb > 0.0, ErrorKind::kInvalidArgument, "total weight must be positive");
  std::sort(all.begin(), all.end(), [](const Weighted& p, const Weighted& q) { return p.x < q.x; });
  stats::Accumulator fa, fb;
  std::size_t i = 0;
  while (i < all.size()) {
    const double x = all[i].x;
    while (i < all.size() && all[i].x == x) {
      (all[i].side == 0 ? fa : fb).add(all[i].w);
      ++i;
    }
    const double next = i < all.size() ? all[i].x : x;
    visit(x, next, std::min(1.0, fa.value() / ta), std::min(1.0, fb.value() / tb));
  }
}

double effective_size(std::span<const double> w, std::size_t n) {
  if (w.empty()) return static_cast<double>(n);
  double s = 0.0, s2 = 0.0;
  for (double v : w) {
    s += v;
    s2 += v * v;
  }
  return s2 > 0.0 ? s * s / s2 : 0.0;
}

TestReport ks_report(std::string name, double D, double na, double nb, double alpha) {
  TestReport r;
  r.name = std::move(name);
  r.statistic = D;
  r.threshold = alpha;
  const double en = std::sqrt(na * nb / (na + nb));
  r.p_value = stats::kolmogorov_sf((en + 0.12 + 0.11 / en) * D);
  r.verdict = r.p_value >= alpha ? Verdict::kPass : Verdict::kFail;
  r.numbers = {{"n_a", na}, {"n_b", nb}};
  return r;
}

}  // namespace

double wasserstein1_1d(std::span<const double> a, std::span<const double> b) {
  return wasserstein1_1d(a, {}, b, {});
}

double wasserstein1_1d(std::span<const double> a, std::span<const double> wa, std::span<const double> b,
                       std::span<const double> wb) {
  stats::Accumulator acc;
  walk_cdfs(a, wa, b, wb, [&](double x, double next, double fa, double fb) {
    acc.add(std::abs(fa - fb) * (next - x));
  });
  return acc.value();
}

double wasserstein1(const PointSet& a, const PointSet& b) {
  require(!a.empty() && !b.empty(), ErrorKind::kInvalidArgument, "samples must be nonempty");
  require(a.dim() == b.dim(), ErrorKind::kInvalidArgument, "sample dimensions differ");
  if (a.dim() == 1) return wasserstein1_1d(a.data(), b.data());
  const auto dirs = stats::halton_directions(64, a.dim());
  std::vector<double> pa(a.size()), pb(b.size());
  double total = 0.0;
  for (const auto& u : dirs) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      auto p = a.point(i);
      pa[i] = std::inner_product(p.begin(), p.end(), u.begin(), 0.0);
    }
    for (std::size_t i = 0; i < b.size(); ++i) {
      auto p = b.point(i);
      pb[i] = std::inner_product(p.begin(), p.end(), u.begin(), 0.0);
    }
    total += wasserstein1_1d(pa, pb);
  }
  return total / static_cast<double>(dirs.size());
}

TestReport two_sample_ks(std::span<const double> a, std::span<const double> b, double alpha) {
  double D = 0.0;
  walk_cdfs(a, {}, b, {}, [&](double, double, double fa, double fb) { D = std::max(D, std::abs(fa - fb)); });
  return ks_report("two_sample_ks", D, static_cast<double>(a.size()), static_cast<double>(b.size()), alpha);
}

TestReport weighted_two_sample_ks(std::span<const double> a, std::span<const double> wa,
                                  std::span<const double> b, std::span<const double> wb, double alpha) {
  double D = 0.0;
  walk_cdfs(a, wa, b, wb, [&](double, double, double fa, double fb) { D = std::max(D, std::abs(fa - fb)); });
  return ks_report("weighted_two_sample_ks", D, effective_size(wa, a.size()), effective_size(wb, b.size()),
                   alpha);
}

TestReport one_sample_ks(std::span<const double> a, const std::function<double(double)>& cdf, double alpha) {
  require(!a.empty(), ErrorKind::kInvalidArgument, "sample must be nonempty");
  std::vector<double> x(a.begin(), a.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double D = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    D = std::max({D, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  TestReport r;
  r.name = "one_sample_ks";
  r.statistic = D;
  r.threshold = alpha;
  const double en = std::sqrt(n);
  r.p_value = stats::kolmogorov_sf((en + 0.12 + 0.11 / en) * D);
  r.verdict = r.p_value >= alpha ? Verdict::kPass : Verdict::kFail;
  r.numbers = {{"n", n}};
  return r;
}

// ---------------------------------------------------------------------------

namespace {

// KS on fixed projections of two weighted samples of equal dimension, with a
// Bonferroni-adjusted minimum p-value.
TestReport projected_ks(std::string name, const PointSet& a, std::span<const double> wa, const PointSet& b,
                        std::span<const double> wb, double alpha) {
  require(a.size() >= 2 && b.size() >= 2, ErrorKind::kInsufficientData,
          name + ": too few replicas for a two-sample test");
  constexpr std::size_t kDirections = 8;
  const auto dirs = stats::halton_directions(kDirections, a.dim());
  std::vector<double> pa(a.size()), pb(b.size());
  double p_min = 1.0, d_max = 0.0;
  for (const auto& u : dirs) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      auto p = a.point(i);
      pa[i] = std::inner_product(p.begin(), p.end(), u.begin(), 0.0);
    }
    for (std::size_t i = 0; i < b.size(); ++i) {
      auto p = b.point(i);
      pb[i] = std::inner_product(p.begin(), p.end(), u.begin(), 0.0);
    }
    const TestReport r = weighted_two_sample_ks(pa, wa, pb, wb, alpha);
    p_min = std::min(p_min, r.p_value);
    d_max = std::max(d_max, r.statistic);
  }
  TestReport r;
  r.name = std::move(name);
  r.statistic = d_max;
  r.threshold = alpha;
  r.p_value = std::min(1.0, p_min * static_cast<double>(dirs.size()));
  r.verdict = r.p_value >= alpha ? Verdict::kPass : Verdict::kFail;
  r.numbers = {{"n_a", static_cast<double>(a.size())},
               {"n_b", static_cast<double>(b.size())},
               {"n_eff_a", effective_size(wa, a.size())},
               {"n_eff_b", effective_size(wb, b.size())},
               {"directions", static_cast<double>(dirs.size())}};
  return r;
}

void push_pair(PointSet& set, std::span<const double> x, std::span<const double> y) {
  std::vector<double> row(x.begin(), x.end());
  row.insert(row.end(), y.begin(), y.end());
  set.push_back(row);
}

}  // namespace

TestReport exchangeability_test(const LocalEnsemble& ens, double t, std::size_t i, std::size_t i2,
                                double alpha) {
  const auto j = ens.grid().index_of(t);
  require(j.has_value(), ErrorKind::kInvalidArgument, "time is not on the grid");
  require(i >= 1 && i2 >= 1 && i != i2, ErrorKind::kInvalidArgument, "need two distinct child indices");
  PointSet a(2 * ens.dim()), b(2 * ens.dim());
  bool toggle = false;
  for (std::size_t m = 0; m < ens.replicas(); ++m) {
    if (ens.degree(m) < std::max(i, i2)) continue;
    if (!toggle)
      push_pair(a, ens.state(m, 0, *j), ens.state(m, i, *j));
    else
      push_pair(b, ens.state(m, 0, *j), ens.state(m, i2, *j));
    toggle = !toggle;
  }
  TestReport r = projected_ks("exchangeability", a, {}, b, {}, alpha);
  r.numbers.push_back({"child_a", static_cast<double>(i)});
  r.numbers.push_back({"child_b", static_cast<double>(i2)});
  r.numbers.push_back({"time", t});
  return r;
}

TestReport pair_symmetry_test(const LocalEnsemble& ens, double t, double alpha) {
  const auto j = ens.grid().index_of(t);
  require(j.has_value(), ErrorKind::kInvalidArgument, "time is not on the grid");
  PointSet a(2 * ens.dim()), b(2 * ens.dim());
  std::vector<double> wb;
  bool toggle = false;
  for (std::size_t m = 0; m < ens.replicas(); ++m) {
    if (ens.degree(m) == 0) continue;
    if (!toggle) {
      push_pair(a, ens.state(m, 1, *j), ens.state(m, 0, *j));
    } else {
      push_pair(b, ens.state(m, 0, *j), ens.state(m, 1, *j));
      wb.push_back(ens.tilt_weight(m));
    }
    toggle = !toggle;
  }
  TestReport r = projected_ks("pair_symmetry", a, {}, b, wb, alpha);
  r.numbers.push_back({"time", t});
  return r;
}

TestReport tilt_normalization_check(const OffspringLaw& rho, std::size_t samples, std::uint64_t seed) {
  require(samples >= 2, ErrorKind::kInvalidArgument, "need at least two samples");
  const FirstGeneration gen = sample_first_generation(rho, samples, seed);
  std::vector<double> w(samples);
  for (std::size_t m = 0; m < samples; ++m)
    w[m] = gen.degree[m] == 0 ? 0.0 : static_cast<double>(gen.degree[m]) / (1.0 + gen.aux[m]);
  TestReport r;
  r.name = "tilt_normalization";
  const double target = 1.0 - rho(0);
  const double m = stats::mean(w);
  r.mc_std_error = stats::std_error(w);
  r.statistic = std::abs(m - target);
  r.threshold = 3.0 * r.mc_std_error;
  r.verdict = r.statistic <= r.threshold ? Verdict::kPass : Verdict::kFail;
  r.numbers = {{"mean", m}, {"target", target}, {"samples", static_cast<double>(samples)},
               {"seed", static_cast<double>(seed)}};
  return r;
}

// ---------------------------------------------------------------------------

TestReport reweight_identity_check(const OffspringLaw& rho, const std::function<double(std::size_t)>& h,
                                   double tolerance) {
  const OffspringLaw hat = size_biased(rho);
  const auto p = rho.pmf();
  const auto q = hat.pmf();
  stats::Accumulator first, second, closed;
  // E[h(1 + C) 1{N nonempty}] with N ~ rho and C ~ hat-rho independent.
  for (std::size_t n = 1; n < p.size(); ++n)
    for (std::size_t k = 0; k < q.size(); ++k) first.add(p[n] * q[k] * h(k + 1));
  // E[N / (1 + C) h(N) 1{N nonempty}].
  for (std::size_t n = 1; n < p.size(); ++n)
    for (std::size_t k = 0; k < q.size(); ++k)
      second.add(p[n] * q[k] * static_cast<double>(n) / static_cast<double>(1 + k) * h(n));
  for (std::size_t k = 0; k < q.size(); ++k) closed.add(q[k] * h(k + 1));
  const double c = (1.0 - rho(0)) * closed.value();
  TestReport r;
  r.name = "reweight_identity";
  r.statistic = std::max({std::abs(first.value() - c), std::abs(second.value() - c),
                          std::abs(first.value() - second.value())});
  r.threshold = tolerance;
  r.verdict = r.statistic <= tolerance ? Verdict::kPass : Verdict::kFail;
  r.numbers = {{"tilted_aux", first.value()}, {"tilted_degree", second.value()}, {"closed_form", c}};
  return r;
}

// ---------------------------------------------------------------------------

namespace {

// u = (sigma sigma^T)^{-1} b; returns |sigma^{-1} b|^2 = b . u.
double solve_metric(std::span<const double> sigma, std::span<const double> b, std::span<double> u,
                    std::size_t step) {
  const std::size_t d = b.size();
  if (d == 1) {
    if (!(std::abs(sigma[0]) > 0.0))
      throw Error(ErrorKind::kSingularDiffusion, "sigma is singular", step);
    u[0] = b[0] / (sigma[0] * sigma[0]);
    return b[0] * u[0];
  }
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> s(sigma.data(), d, d);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(s);
  if (!lu.isInvertible()) throw Error(ErrorKind::kSingularDiffusion, "sigma is singular", step);
  Eigen::Map<const Eigen::VectorXd> bv(b.data(), d);
  const Eigen::VectorXd v = lu.solve(bv);
  const Eigen::VectorXd w = s.transpose().fullPivLu().solve(v);
  for (std::size_t c = 0; c < d; ++c) u[c] = w(c);
  return v.squaredNorm();
}

}  // namespace

PathWeight girsanov_weight(const PathBundle& paths, const DriftSpec& drift, const DiffusionSpec& diffusion) {
  const std::size_t d = paths.dim();
  require(drift.dim() == d && diffusion.dim() == d, ErrorKind::kInvalidArgument, "dimension mismatch");
  const TimeGrid& grid = paths.grid();
  const double h = grid.step_size();
  PathWeight out;
  out.log_weight.assign(paths.vertex_count(), 0.0);
  std::vector<double> b(d), sigma(d * d), u(d);
  std::vector<PathView> nbrs;
  const Adjacency& adj = paths.adjacency();
  for (std::size_t v = 0; v < paths.vertex_count(); ++v) {
    if (!paths.member(v)) continue;
    double lw = 0.0;
    for (std::size_t j = 0; j < grid.steps(); ++j) {
      nbrs.clear();
      if (adj.size() == paths.vertex_count())
        for (auto n : adj.neighbors(v))
          if (paths.member(n)) nbrs.push_back(paths.path(n, j));
      const PathView self = paths.path(v, j);
      drift.evaluate({j, grid.time(j), self, nbrs}, b);
      diffusion.evaluate(j, grid.time(j), self, sigma);
      const double quad = solve_metric(sigma, b, u, j);
      const auto x0 = paths.state(v, j), x1 = paths.state(v, j + 1);
      double lin = 0.0;
      for (std::size_t c = 0; c < d; ++c) lin += u[c] * (x1[c] - x0[c]);
      lw += lin - 0.5 * quad * h;
    }
    out.log_weight[v] = lw;
    out.total += lw;
  }
  return out;
}

TestReport relative_entropy_check(const DriftSpec& b1, const DriftSpec& b2, const DiffusionSpec& diffusion,
                                  const InitialLaw& init, const TimeGrid& grid, std::size_t paths,
                                  std::uint64_t seed, double sigmas) {
  require(paths >= 2, ErrorKind::kInvalidArgument, "need at least two paths");
  const SimTopology topo = SimTopology::from_graph(FiniteGraph::empty(paths));
  const PathBundle bundle = simulate_system(topo, b1, diffusion, init, grid, seed);
  const PathWeight l1 = girsanov_weight(bundle, b1, diffusion);
  const PathWeight l2 = girsanov_weight(bundle, b2, diffusion);
  const std::size_t d = bundle.dim();
  std::vector<double> lhs(paths), rhs(paths), diff(paths);
  std::vector<double> v1(d), v2(d), sigma(d * d), u(d);
  for (std::size_t v = 0; v < paths; ++v) {
    double quad = 0.0;
    for (std::size_t j = 0; j < grid.steps(); ++j) {
      const PathView self = bundle.path(v, j);
      b1.evaluate({j, grid.time(j), self, {}}, v1);
      b2.evaluate({j, grid.time(j), self, {}}, v2);
      for (std::size_t c = 0; c < d; ++c) v1[c] -= v2[c];
      diffusion.evaluate(j, grid.time(j), self, sigma);
      quad += solve_metric(sigma, v1, u, j) * grid.step_size();
    }
    lhs[v] = l1.log_weight[v] - l2.log_weight[v];
    rhs[v] = 0.5 * quad;
    diff[v] = lhs[v] - rhs[v];
  }
  TestReport r;
  r.name = "relative_entropy";
  r.statistic = std::abs(stats::mean(diff));
  r.mc_std_error = stats::std_error(diff);
  r.threshold = sigmas * r.mc_std_error;
  r.verdict = r.statistic <= r.threshold ? Verdict::kPass : Verdict::kFail;
  r.numbers = {{"lhs", stats::mean(lhs)},
               {"lhs_std_error", stats::std_error(lhs)},
               {"rhs", stats::mean(rhs)},
               {"paths", static_cast<double>(paths)},
               {"seed", static_cast<double>(seed)}};
  r.notes = {{"b1", b1.name()}, {"b2", b2.name()}, {"sigma", diffusion.name()}};
  return r;
}

}  // namespace ugw
