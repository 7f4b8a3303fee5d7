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


#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "ugw/coefficients.hpp"
#include "ugw/error.hpp"
#include "ugw/knn.hpp"
#include "ugw/localeq.hpp"
#include "ugw/rng.hpp"
#include "ugw/stats.hpp"
#include "ugw/verify.hpp"

namespace ugw {
namespace {

GammaEstimatorConfig current_only() {
  GammaEstimatorConfig c;
  c.dyadic_lags = false;
  return c;
}

TEST(HistoryEmbedding, DyadicLags) {
  EXPECT_EQ(HistoryEmbedding::dyadic(200).lags(), (std::vector<std::size_t>{50, 25, 12, 6}));
  EXPECT_EQ(HistoryEmbedding::dyadic(10).lags(), (std::vector<std::size_t>{2, 1}));
  const std::vector<double> path = {1, 2, 3, 4};
  std::vector<double> out(3);
  HistoryEmbedding({1, 5}).embed(PathView(path.data(), 3, 1), out);
  EXPECT_EQ(out, (std::vector<double>{3, 2, 1}));  // lag 5 clamps at time zero
}

TEST(KdTree, MatchesBruteForceWithTies) {
  rng::Engine eng(3, 0);
  const std::size_t n = 3000, dim = 3;
  std::vector<double> pts(n * dim);
  for (auto& x : pts) x = std::round(eng.normal() * 4.0) / 4.0;  // many exact ties
  const KdTree tree(pts, dim);
  std::vector<KdTree::Hit> hits;
  for (int q = 0; q < 50; ++q) {
    std::vector<double> query(dim);
    for (auto& x : query) x = eng.normal();
    std::vector<KdTree::Hit> brute;
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t c = 0; c < dim; ++c) s += (pts[i * dim + c] - query[c]) * (pts[i * dim + c] - query[c]);
      brute.push_back({s, i});
    }
    std::sort(brute.begin(), brute.end());
    tree.knn(query, 37, hits);
    ASSERT_EQ(hits.size(), 37u);
    for (std::size_t i = 0; i < hits.size(); ++i) {
      EXPECT_EQ(hits[i].index, brute[i].index);
      EXPECT_EQ(hits[i].dist2, brute[i].dist2);
    }
    const double r2 = brute[80].dist2;
    tree.radius(query, r2, hits);
    const auto expected = std::upper_bound(brute.begin(), brute.end(), KdTree::Hit{r2, n}) - brute.begin();
    EXPECT_EQ(static_cast<std::ptrdiff_t>(hits.size()), expected);
  }
}

TEST(GammaEstimator, ConstantResponseIsExact) {
  rng::Engine eng(4, 0);
  std::vector<double> f(2000);
  for (auto& x : f) x = eng.normal();
  const GammaEstimator g(f, 2, std::vector<double>(1000, 0.7), 1, {}, current_only());
  for (int i = 0; i < 20; ++i) {
    const std::vector<double> q = {eng.normal() * 3, eng.normal() * 3};
    double out = 0.0;
    g.estimate(q, {&out, 1});
    EXPECT_EQ(out, 0.7);
    QueryDiagnostics d;
    g.estimate(q, {&out, 1}, &d);
    EXPECT_EQ(out, 0.7);
    EXPECT_EQ(d.neighbors_used, 32u);
  }
}

TEST(GammaEstimator, InsufficientStratum) {
  GammaEstimatorConfig c = current_only();
  c.k = 10;
  EXPECT_THROW(GammaEstimator(std::vector<double>(5, 0.0), 1, std::vector<double>(5, 0.0), 1, {}, c), Error);
}

// (A, B, C) jointly Gaussian with C = 0.5 A + 0.3 B + 0.2 Z; the regression of
// C on (A, B) is linear.
double gaussian_rmse(std::size_t m, std::uint64_t seed) {
  rng::Engine eng(seed, 0);
  std::vector<double> f(2 * m), r(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double a = eng.normal(), b = 0.6 * a + 0.8 * eng.normal();
    f[2 * i] = a;
    f[2 * i + 1] = b;
    r[i] = 0.5 * a + 0.3 * b + 0.2 * eng.normal();
  }
  const GammaEstimator g(f, 2, r, 1, {}, current_only());
  double se = 0.0;
  const int queries = 4000;
  for (int i = 0; i < queries; ++i) {
    const double a = eng.normal(), b = 0.6 * a + 0.8 * eng.normal();
    const std::vector<double> q = {a, b};
    double out = 0.0;
    g.estimate(q, {&out, 1});
    se += (out - (0.5 * a + 0.3 * b)) * (out - (0.5 * a + 0.3 * b));
  }
  return std::sqrt(se / queries);
}

TEST(GammaEstimator, GaussianConditionalMean) {
  // Averaged over three ensembles; single-ensemble RMSE is dominated by tail queries.
  double small = 0.0, large = 0.0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    small += gaussian_rmse(10000, seed) / 3;
    large += gaussian_rmse(40000, seed) / 3;
  }
  EXPECT_LT(small, 0.05);
  EXPECT_LE(large, 0.7 * small);
}

// Noise-free linear response in six features: the local fit is exact up to the
// ridge, while the local average carries the neighborhood-radius bias.
TEST(GammaEstimator, LocalLinearRemovesSmoothingBias) {
  const std::size_t n = 4000, dim = 6;
  rng::Engine eng(21, 0);
  std::vector<double> f(n * dim), r(n);
  auto target = [](const double* x) { return 1.0 + 2.0 * x[0] - x[3] + 0.5 * x[5]; };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < dim; ++c) f[i * dim + c] = eng.normal();
    r[i] = target(f.data() + i * dim);
  }
  GammaEstimatorConfig linear = current_only();
  GammaEstimatorConfig average = current_only();
  average.local_linear = false;
  const GammaEstimator gl(f, dim, r, 1, {}, linear), ga(f, dim, r, 1, {}, average);
  double sl = 0.0, sa = 0.0;
  const int queries = 500;
  std::vector<double> q(dim);
  for (int i = 0; i < queries; ++i) {
    for (auto& v : q) v = eng.normal();
    double ol = 0.0, oa = 0.0;
    gl.estimate(q, {&ol, 1});
    ga.estimate(q, {&oa, 1});
    sl += (ol - target(q.data())) * (ol - target(q.data()));
    sa += (oa - target(q.data())) * (oa - target(q.data()));
  }
  EXPECT_LT(std::sqrt(sl / queries), 0.02);
  EXPECT_LT(std::sqrt(sl / queries), 0.1 * std::sqrt(sa / queries));
}

TEST(GammaEstimator, WeightedConditionalMean) {
  // w in {1, 3} with equal odds, response x + 0.2 (w = 3) or x - 0.2 (w = 1):
  // the weighted regression is x + (3 * 0.2 - 0.2) / 4 = x + 0.1.
  rng::Engine eng(6, 0);
  const std::size_t m = 10000;
  std::vector<double> f(m), r(m), w(m);
  for (std::size_t i = 0; i < m; ++i) {
    f[i] = eng.uniform() * 2 - 1;
    const bool heavy = eng.uniform() < 0.5;
    w[i] = heavy ? 3.0 : 1.0;
    r[i] = f[i] + (heavy ? 0.2 : -0.2) + 0.1 * eng.normal();
  }
  const GammaEstimator g(f, 1, r, 1, w, current_only());
  double se = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double x = eng.uniform() * 1.8 - 0.9;
    double out = 0.0;
    g.estimate({&x, 1}, {&out, 1});
    se += (out - (x + 0.1)) * (out - (x + 0.1));
  }
  EXPECT_LT(std::sqrt(se / 1000), 0.05);
}

TEST(FirstGeneration, TiltWeights) {
  const FirstGeneration g = sample_first_generation(OffspringLaw::dirac(4), 50, 2);
  for (std::size_t m = 0; m < 50; ++m) {
    EXPECT_EQ(g.degree[m], 4u);
    EXPECT_EQ(g.aux[m], 3u);
  }
  const FirstGeneration iso = sample_first_generation(OffspringLaw::dirac(0), 10, 2);
  for (std::size_t m = 0; m < 10; ++m) EXPECT_EQ(iso.aux[m], 0u);
}

TEST(LocalEquation, DiracLawReducesToRegularSolver) {
  const TimeGrid grid(1.0, 12);
  const auto b = ou_pairwise(0.5, 1.0);
  const GammaEstimatorConfig cfg;
  const LocalEnsemble reg = solve_local_regular(3, b, identity_diffusion(), uniform_initial(-1, 1), 800, grid, cfg, 4);
  const LocalEnsemble ugw = solve_local_ugw(OffspringLaw::dirac(3), b, identity_diffusion(), uniform_initial(-1, 1),
                                            800, grid, cfg, 4);
  ASSERT_EQ(reg.replicas(), ugw.replicas());
  for (std::size_t m = 0; m < reg.replicas(); ++m)
    for (std::size_t s = 0; s < reg.slots(m); ++s)
      for (std::size_t j = 0; j <= grid.steps(); ++j) ASSERT_EQ(reg.state(m, s, j)[0], ugw.state(m, s, j)[0]);
  const PathView y = reg.path(3, 1, 6), y2 = reg.path(3, 0, 6);
  const auto gr = estimate_gamma_regular(reg, b, 6, y, y2, cfg);
  const auto gu = estimate_gamma_ugw(reg, b, 6, y, y2, cfg);
  EXPECT_NEAR(gr[0], gu[0], 1e-12);
}

TEST(LocalEquation, ZeroDriftMatchesDriftless) {
  const TimeGrid grid(1.0, 20);
  const auto init = gaussian_initial(0.0, 1.0);
  const LocalEnsemble reg = solve_local_regular(2, zero_drift(), identity_diffusion(), init, 2000, grid, {}, 7);
  FirstGeneration s{std::vector<std::uint32_t>(2000, 2), std::vector<std::uint32_t>(2000, 1)};
  const LocalEnsemble free = solve_local_driftless(s, identity_diffusion(), init, grid, 7);
  for (std::size_t m = 0; m < 2000; ++m)
    for (std::size_t slot = 0; slot < 3; ++slot) ASSERT_EQ(reg.state(m, slot, 20)[0], free.state(m, slot, 20)[0]);
  const PointSet root = reg.root_marginal(1.0);
  EXPECT_GT(one_sample_ks(root.data(), [](double x) { return stats::normal_cdf(x / std::sqrt(2.0)); }).p_value, 0.01);
}

TEST(LocalEquation, IsolatedRootsAreSingleParticles) {
  const TimeGrid grid(1.0, 40);
  const auto b = bounded_tanh(1.0);
  const LocalEnsemble ens = solve_local_ugw(OffspringLaw::dirac(0), b, identity_diffusion(), dirac_initial({0.0}),
                                            5000, grid, current_only(), 8);
  const PathBundle single = simulate_system(SimTopology::from_graph(FiniteGraph::empty(5000)), b, identity_diffusion(),
                                            dirac_initial({0.0}), grid, 9);
  const PointSet a = ens.root_marginal(1.0), c = empirical_measure(single, 1.0);
  EXPECT_GT(two_sample_ks(a.data(), c.data()).p_value, 0.01);
  for (std::size_t m = 0; m < 10; ++m) EXPECT_EQ(ens.state(m, 1, 40)[0], ens.state(m, 1, 0)[0]);
}

TEST(LocalEquation, ChildrenAreExchangeable) {
  const LocalEnsemble ens = solve_local_regular(3, ou_pairwise(0.5, 1.0), identity_diffusion(), uniform_initial(-1, 1),
                                                10000, TimeGrid(1.0, 20), current_only(), 10);
  const PointSet y1 = ens.child_marginal(1.0, 1), y2 = ens.child_marginal(1.0, 2);
  EXPECT_GT(two_sample_ks(y1.data(), y2.data()).p_value, 0.01);
}

TEST(LocalEquation, UnchangedByThreadCount) {
  LocalSolveOptions one, three;
  one.threads = 1;
  three.threads = 3;
  const auto rho = OffspringLaw::poisson(2.0);
  const TimeGrid grid(1.0, 8);
  EXPECT_TRUE(solve_local_ugw(rho, ou_pairwise(0.5, 1.0), identity_diffusion(), uniform_initial(-1, 1), 600, grid, {},
                              3, one) ==
              solve_local_ugw(rho, ou_pairwise(0.5, 1.0), identity_diffusion(), uniform_initial(-1, 1), 600, grid, {},
                              3, three));
}

}  // namespace
}  // namespace ugw
