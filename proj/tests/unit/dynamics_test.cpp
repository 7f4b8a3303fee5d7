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

#include <cmath>
#include <sstream>

#include "ugw/coefficients.hpp"
#include "ugw/dynamics.hpp"
#include "ugw/error.hpp"
#include "ugw/stats.hpp"
#include "ugw/verify.hpp"

namespace ugw {
namespace {

SimTopology isolated(std::size_t n) { return SimTopology::from_graph(FiniteGraph::empty(n)); }

TEST(TimeGrid, IndexOf) {
  const TimeGrid g(1.0, 100);
  EXPECT_EQ(g.index_of(0.5), 50u);
  EXPECT_EQ(g.index_of(1.0), 100u);
  EXPECT_FALSE(g.index_of(0.505).has_value());
  EXPECT_THROW(TimeGrid(0.0, 10), Error);
}

TEST(Simulate, BrownianIncrements) {
  const std::size_t n = 10000;
  const PathBundle p = simulate_system(isolated(n), zero_drift(), identity_diffusion(), dirac_initial({0.0}),
                                       TimeGrid(2.0, 50), 3);
  const PointSet x = empirical_measure(p, 2.0);
  const TestReport ks = one_sample_ks(x.data(), [](double v) { return stats::normal_cdf(v / std::sqrt(2.0)); });
  EXPECT_GT(ks.p_value, 0.01);
}

TEST(Simulate, DriftlessIsBitIdenticalToZeroDrift) {
  const SimTopology topo = SimTopology::from_graph(sample_erdos_renyi(200, 0.02, 1));
  const auto sigma = tanh_diagonal_diffusion(0.2);
  const auto init = gaussian_initial(0.0, 1.0);
  const TimeGrid grid(1.0, 40);
  EXPECT_TRUE(simulate_driftless(topo, sigma, init, grid, 9) ==
              simulate_system(topo, zero_drift(), sigma, init, grid, 9));
}

TEST(Simulate, ThreadCountDoesNotChangeOutput) {
  const SimTopology topo = SimTopology::from_graph(sample_regular(300, 3, 4));
  SimulationOptions one, four;
  one.threads = 1;
  four.threads = 4;
  const auto b = ou_pairwise(0.5, 1.0);
  const TimeGrid grid(1.0, 30);
  EXPECT_TRUE(simulate_system(topo, b, identity_diffusion(), uniform_initial(-1, 1), grid, 5, one) ==
              simulate_system(topo, b, identity_diffusion(), uniform_initial(-1, 1), grid, 5, four));
}

TEST(Simulate, NonMembersStayFrozen) {
  const SampledTree tree = sample_ugw(OffspringLaw::poisson(2.0), 3, 16, 8);
  const SimTopology topo = SimTopology::from_tree(tree, 2);
  const TimeGrid grid(1.0, 20);
  const PathBundle p = simulate_system(topo, ou_pairwise(0.5, 1.0), identity_diffusion(), gaussian_initial(0, 1), grid, 2);
  std::size_t frozen = 0;
  for (std::size_t v = 0; v < p.vertex_count(); ++v) {
    if (p.member(v)) continue;
    ++frozen;
    for (std::size_t j = 1; j <= grid.steps(); ++j) EXPECT_EQ(p.state(v, j)[0], p.state(v, 0)[0]);
  }
  EXPECT_GT(frozen, 0u);
}

TEST(Simulate, LinearDriftOnTriangleMatchesMomentOde) {
  // dX = (avg of neighbors - X) dt + dW on K3, X(0) ~ N(1, 0.25 I).
  // The flow is P + e^{-1.5 t}(I - P) with P = J/3.
  const std::size_t copies = 10000;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t c = 0; c < copies; ++c) {
    edges.emplace_back(3 * c, 3 * c + 1);
    edges.emplace_back(3 * c, 3 * c + 2);
    edges.emplace_back(3 * c + 1, 3 * c + 2);
  }
  const SimTopology topo = SimTopology::from_graph(FiniteGraph::from_edges(3 * copies, edges));
  const PathBundle p = simulate_system(topo, ou_pairwise(0.0, 1.0), identity_diffusion(), gaussian_initial(1.0, 0.5),
                                       TimeGrid(1.0, 400), 12);
  const double e3 = std::exp(-3.0);
  const double var = 0.25 * (1.0 / 3 + e3 * 2.0 / 3) + 1.0 / 3 + (1 - e3) / 3 * 2.0 / 3;
  const double cov = 0.25 * (1.0 / 3 - e3 / 3) + 1.0 / 3 - (1 - e3) / 3 / 3;
  std::vector<double> x0(copies), prod(copies), sq(copies);
  for (std::size_t c = 0; c < copies; ++c) {
    const double a = p.state(3 * c, 400)[0], b = p.state(3 * c + 1, 400)[0];
    x0[c] = a;
    sq[c] = (a - 1.0) * (a - 1.0);
    prod[c] = (a - 1.0) * (b - 1.0);
  }
  EXPECT_NEAR(stats::mean(x0), 1.0, 3.0 * stats::std_error(x0));
  EXPECT_NEAR(stats::mean(sq), var, 3.0 * stats::std_error(sq) + 0.005);
  EXPECT_NEAR(stats::mean(prod), cov, 3.0 * stats::std_error(prod) + 0.005);
}

TEST(Simulate, QuadraticVariationFollowsSigma) {
  const std::size_t K = 2000;
  const TimeGrid grid(1.0, K);
  const PathBundle p = simulate_system(isolated(20), zero_drift(), tanh_diagonal_diffusion(0.1), gaussian_initial(0, 1),
                                       grid, 21);
  for (std::size_t v = 0; v < 20; ++v) {
    double qv = 0.0, integral = 0.0;
    for (std::size_t j = 0; j < K; ++j) {
      const double x = p.state(v, j)[0], dx = p.state(v, j + 1)[0] - x;
      const double s = 1.0 + 0.1 * std::tanh(x);
      qv += dx * dx;
      integral += s * s * grid.step_size();
    }
    EXPECT_NEAR(qv / integral, 1.0, 0.05 * 2.5);  // 2.5 sd of the chi-square ratio at K = 2000 is 0.08
  }
}

TEST(Simulate, DivergenceReportsStep) {
  try {
    simulate_system(isolated(3), constant_drift({1e12}), identity_diffusion(), dirac_initial({0.0}),
                    TimeGrid(1.0, 10), 1);
    FAIL() << "expected divergence";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDiverged);
    ASSERT_TRUE(e.step().has_value());
    EXPECT_GE(*e.step(), 1u);
  }
}

TEST(Simulate, ContractChecksRejectAsymmetricDrift) {
  // A drift that depends on the order of the neighbor collection.
  DriftSpec ordered("ordered", 1,
                    [](const DriftQuery& q, std::span<double> out) { out[0] = q.neighbors.front().current()[0]; },
                    [](std::size_t, double, PathView, std::span<double> out) { out[0] = 0.0; }, 1.0);
  SimulationOptions opt;
  opt.check_contracts = true;
  const SimTopology topo = SimTopology::from_graph(FiniteGraph::path(5));
  EXPECT_THROW(simulate_system(topo, ordered, identity_diffusion(), gaussian_initial(0, 1), TimeGrid(1.0, 5), 1, opt),
               Error);
}

TEST(EmpiricalMeasure, Examples) {
  const PathBundle one = simulate_system(isolated(1), zero_drift(), identity_diffusion(), dirac_initial({0.5}),
                                         TimeGrid(1.0, 4), 1);
  EXPECT_EQ(empirical_measure(one, 1.0).size(), 1u);
  EXPECT_EQ(empirical_measure(one, 1.0).point(0)[0], one.state(0, 4)[0]);

  SimTopology frozen = isolated(6);
  std::fill(frozen.member.begin(), frozen.member.end(), 0);
  const PathBundle f = simulate_system(frozen, zero_drift(), identity_diffusion(), gaussian_initial(0, 1),
                                       TimeGrid(1.0, 4), 2);
  const PointSet at_t = empirical_measure(f, 1.0), at_0 = empirical_measure(f, 0.0);
  EXPECT_EQ(std::vector<double>(at_t.data().begin(), at_t.data().end()),
            std::vector<double>(at_0.data().begin(), at_0.data().end()));
}

TEST(EmpiricalMeasure, ConcentratesOnLargeGraphs) {
  const TimeGrid grid(1.0, 50);
  const auto b = ou_pairwise(0.5, 1.0);
  auto draw = [&](std::uint64_t seed) {
    const SimTopology topo = SimTopology::from_graph(sample_erdos_renyi(2000, 3.0 / 2000, seed));
    return empirical_measure(simulate_system(topo, b, identity_diffusion(), uniform_initial(-1, 1), grid, seed + 1), 1.0);
  };
  EXPECT_LT(wasserstein1(draw(100), draw(200)), 0.05);
}

TEST(MomentBound, BrownianBandAndFrozenVertex) {
  SimTopology topo = isolated(50);
  topo.member[0] = 0;
  const TimeGrid grid(1.0, 100);
  std::vector<PathBundle> bundles;
  double frozen_sq = 0.0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    bundles.push_back(simulate_system(topo, zero_drift(), identity_diffusion(), gaussian_initial(0.0, 0.0), grid, s));
    frozen_sq += bundles.back().state(0, 0)[0] * bundles.back().state(0, 0)[0];
  }
  const MomentReport m = moment_bound_check(bundles, 1.0);
  EXPECT_DOUBLE_EQ(m.per_vertex[0], frozen_sq / 100.0);
  double avg = 0.0;
  for (std::size_t v = 1; v < 50; ++v) avg += m.per_vertex[v] / 49.0;
  EXPECT_GE(avg, 1.0);
  EXPECT_LE(avg, 4.0);
  EXPECT_FALSE(m.unbounded_growth);
  std::vector<PathBundle> few(bundles.begin(), bundles.begin() + 10);
  EXPECT_THROW(moment_bound_check(few, 1.0), Error);
}

TEST(PathIo, BinaryRoundTrip) {
  const SimTopology topo = SimTopology::from_tree(sample_ugw(OffspringLaw::poisson(2.0), 2, 8, 3), 1);
  const PathBundle p = simulate_system(topo, ou_pairwise(0.5, 1.0), identity_diffusion(), gaussian_initial(0, 1),
                                       TimeGrid(0.5, 7), 4);
  std::stringstream s;
  write_paths_binary(s, p);
  EXPECT_TRUE(read_paths_binary(s) == p);
  std::ostringstream csv;
  write_paths_csv(csv, p);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "vertex_label,time,coord_0,member");
}

TEST(Coefficients, RegistryRejectsUnknownNames) {
  EXPECT_THROW(make_drift("nope", {}, 1), Error);
  EXPECT_THROW(make_drift("ou-pairwise", {{"beta", 1.0}}, 1), Error);
  EXPECT_EQ(make_drift("ou-pairwise", {{"theta", 0.5}, {"alpha", 1.0}}, 1).name(), ou_pairwise(0.5, 1.0).name());
}

}  // namespace
}  // namespace ugw
