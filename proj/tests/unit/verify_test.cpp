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
#include <numeric>

#include "ugw/coefficients.hpp"
#include "ugw/error.hpp"
#include "ugw/rng.hpp"
#include "ugw/stats.hpp"
#include "ugw/verify.hpp"

namespace ugw {
namespace {

std::vector<double> normals(std::uint64_t seed, std::size_t n, double shift = 0.0) {
  rng::Engine eng(seed, 0);
  std::vector<double> x(n);
  for (auto& v : x) v = eng.normal() + shift;
  return x;
}

TEST(Wasserstein, Examples) {
  const std::vector<double> a = {0.3, -1.0, 2.0};
  EXPECT_EQ(wasserstein1_1d(a, a), 0.0);
  EXPECT_EQ(wasserstein1_1d(std::vector<double>{0.0}, std::vector<double>{1.0}), 1.0);
}

TEST(Wasserstein, MatchesExhaustiveAssignment) {
  rng::Engine eng(2, 0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> a(5), b(5);
    for (auto& x : a) x = eng.normal();
    for (auto& x : b) x = eng.normal() * 2;
    std::vector<int> perm = {0, 1, 2, 3, 4};
    double best = 1e300;
    do {
      double cost = 0.0;
      for (int i = 0; i < 5; ++i) cost += std::abs(a[i] - b[perm[i]]);
      best = std::min(best, cost / 5);
    } while (std::next_permutation(perm.begin(), perm.end()));
    EXPECT_NEAR(wasserstein1_1d(a, b), best, 1e-12);
  }
}

TEST(Wasserstein, SlicedIsZeroOnIdenticalSets) {
  PointSet p(2, {0.0, 1.0, 2.0, -1.0, 0.5, 0.5});
  EXPECT_EQ(wasserstein1(p, p), 0.0);
}

TEST(TwoSampleKs, Examples) {
  const auto a = normals(1, 10000);
  EXPECT_EQ(two_sample_ks(a, a).statistic, 0.0);
  EXPECT_LT(two_sample_ks(a, normals(2, 10000, 1.0)).p_value, 1e-6);
}

TEST(TwoSampleKs, NullPValuesAreUniform) {
  std::vector<double> p;
  for (std::uint64_t t = 0; t < 200; ++t) p.push_back(two_sample_ks(normals(2 * t + 10, 10000), normals(2 * t + 11, 10000)).p_value);
  EXPECT_GT(one_sample_ks(p, [](double u) { return std::clamp(u, 0.0, 1.0); }).p_value, 0.01);
}

TEST(ReweightIdentity, Examples) {
  const auto one = [](std::size_t) { return 1.0; };
  const OffspringLaw mixed = OffspringLaw::from_pmf({0.25, 0.25, 0.5});
  const TestReport r1 = reweight_identity_check(mixed, one);
  EXPECT_TRUE(r1.passed());
  EXPECT_EQ(r1.number("tilted_aux"), 1.0 - mixed(0));
  EXPECT_EQ(r1.number("tilted_degree"), 1.0 - mixed(0));
  const auto h = [](std::size_t k) { return static_cast<double>(std::min<std::size_t>(k, 5)); };
  for (std::size_t kappa = 1; kappa <= 6; ++kappa) {
    const TestReport r = reweight_identity_check(OffspringLaw::dirac(kappa), h);
    EXPECT_EQ(r.number("tilted_aux"), h(kappa));
    EXPECT_EQ(r.number("tilted_degree"), h(kappa));
  }
  const TestReport rp = reweight_identity_check(OffspringLaw::poisson(2.0), h);
  EXPECT_TRUE(rp.passed());
  EXPECT_NEAR(rp.number("tilted_aux"), rp.number("closed_form"), 1e-12);
  EXPECT_NEAR(rp.number("tilted_degree"), rp.number("closed_form"), 1e-12);
}

TEST(TiltNormalization, PassesForPoisson) {
  EXPECT_TRUE(tilt_normalization_check(OffspringLaw::poisson(2.0), 100000, 3).passed());
}

TEST(Girsanov, ZeroDriftHasZeroWeight) {
  const PathBundle p = simulate_driftless(SimTopology::from_graph(FiniteGraph::path(10)), identity_diffusion(),
                                          gaussian_initial(0, 1), TimeGrid(1.0, 20), 1);
  for (double w : girsanov_weight(p, zero_drift(), identity_diffusion()).log_weight) EXPECT_EQ(w, 0.0);
}

TEST(Girsanov, ExponentialWeightHasUnitMean) {
  const std::size_t n = 10000;
  const PathBundle p = simulate_driftless(SimTopology::from_graph(FiniteGraph::empty(n)), identity_diffusion(),
                                          dirac_initial({0.0}), TimeGrid(1.0, 50), 2);
  const PathWeight lw = girsanov_weight(p, constant_drift({0.5}), identity_diffusion());
  std::vector<double> w(n);
  for (std::size_t v = 0; v < n; ++v) w[v] = std::exp(lw.log_weight[v]);
  EXPECT_NEAR(stats::mean(w), 1.0, 3.0 * stats::std_error(w));
}

TEST(RelativeEntropy, Examples) {
  const TimeGrid grid(1.0, 50);
  const TestReport same = relative_entropy_check(bounded_tanh(1.0), bounded_tanh(1.0), identity_diffusion(),
                                                 gaussian_initial(0, 1), grid, 500, 4);
  EXPECT_EQ(same.number("lhs"), 0.0);
  EXPECT_EQ(same.number("rhs"), 0.0);
  const TestReport c = relative_entropy_check(constant_drift({1.0}), zero_drift(), identity_diffusion(),
                                              dirac_initial({0.0}), grid, 10000, 5);
  EXPECT_TRUE(c.passed());
  EXPECT_NEAR(c.number("lhs"), 0.5, 0.025);
  EXPECT_TRUE(relative_entropy_check(bounded_tanh(1.0), zero_drift(), identity_diffusion(), gaussian_initial(0, 1),
                                     grid, 5000, 6)
                  .passed());
}

TEST(MassTransport, ExactSidesForSimpleFunctions) {
  MarkedTreeModel model{ou_pairwise(0.5, 1.0), identity_diffusion(), uniform_initial(-1, 1), TimeGrid(1.0, 10), 4, 32, 0};
  const auto all = default_transport_functions();
  const OffspringLaw rho = OffspringLaw::poisson(2.0);
  const TestReport r = mass_transport_check(rho, all, 2000, 7, model);
  EXPECT_EQ(r.number("diagonal.outgoing"), 1.0);
  EXPECT_EQ(r.number("diagonal.incoming"), 1.0);
  EXPECT_EQ(r.number("adjacent.outgoing"), r.number("adjacent.incoming"));
  EXPECT_NEAR(r.number("adjacent.outgoing"), rho.mean(), 3.0 * std::sqrt(2.0 / 2000));
  EXPECT_TRUE(r.passed());
}

TEST(MassTransport, RejectsFunctionsBeyondTheirRadius) {
  TransportFunction far{"far", 1, 1.0, [](const SampledTree& t, const PathBundle&, std::size_t, std::size_t o, std::size_t o2) {
                          return tree_distance(t, o, o2) == 2 ? 1.0 : 0.0;
                        }};
  MarkedTreeModel model{zero_drift(), identity_diffusion(), dirac_initial({0.0}), TimeGrid(1.0, 2), 3, 8, 0};
  const std::vector<TransportFunction> fs = {far};
  try {
    mass_transport_check(OffspringLaw::dirac(2), fs, 10, 1, model);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidTestFunction);
  }
}

TEST(Mrf, NonInteractingDriftGivesUniformPValues) {
  std::vector<double> p;
  const TimeGrid grid(1.0, 10);
  for (std::uint64_t trial = 0; trial < 30; ++trial) {
    std::vector<std::optional<MrfRecord>> slots(1500);
    for_each_tree_replica(OffspringLaw::poisson(2.0), 3, 16, slots.size(), bounded_tanh(1.0), identity_diffusion(),
                          uniform_initial(-1, 1), grid, 100 + trial, 0,
                          [&](std::size_t r, const SampledTree& t, const PathBundle& paths) {
                            slots[r] = extract_mrf_record(t, paths, 1, 10);
                          });
    std::vector<MrfRecord> records;
    for (auto& s : slots)
      if (s) records.push_back(*s);
    MrfOptions opt;
    opt.bins_per_axis = 3;
    opt.permutations = 99;
    opt.seed = trial;
    p.push_back(mrf2_test(records, opt).p_value);
  }
  // Permutation p-values live on the grid k / 100.
  EXPECT_GT(one_sample_ks(p, [](double u) { return std::clamp(u, 0.0, 1.0); }).p_value, 0.01);
}

TEST(TestReport, JsonHasAllFields) {
  TestReport r;
  r.name = "x";
  r.numbers = {{"n", 3}};
  const std::string j = to_json(r);
  for (const char* key : {"\"name\"", "\"statistic\"", "\"threshold\"", "\"p_value\"", "\"mc_std_error\"", "\"verdict\""})
    EXPECT_NE(j.find(key), std::string::npos) << key;
  EXPECT_NE(j.find("null"), std::string::npos);  // NaN p-value
}

}  // namespace
}  // namespace ugw
