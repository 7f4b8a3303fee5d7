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

#ifndef UGW_VERIFY_HPP_
#define UGW_VERIFY_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ugw/dynamics.hpp"
#include "ugw/knn.hpp"
#include "ugw/localeq.hpp"
#include "ugw/sample.hpp"
#include "ugw/topology.hpp"

namespace ugw {

enum class Verdict { kPass, kFail, kInconclusive };
const char* to_string(Verdict verdict);

struct TestReport {
  std::string name;
  double statistic = 0.0;
  double threshold = 0.0;
  double p_value = std::numeric_limits<double>::quiet_NaN();
  double mc_std_error = 0.0;
  Verdict verdict = Verdict::kInconclusive;
  std::vector<std::pair<std::string, double>> numbers;  // sizes, seeds, side estimates
  std::vector<std::pair<std::string, std::string>> notes;

  bool passed() const noexcept { return verdict == Verdict::kPass; }
  double number(const std::string& key) const;
};
// One JSON object; non-finite values are written as null.
std::string to_json(const TestReport& report);

// ---- distances and two-sample tests ---------------------------------------

// Exact W1 between the empirical laws of two 1-d samples of any sizes.
double wasserstein1_1d(std::span<const double> a, std::span<const double> b);
// Same with nonnegative weights (normalized internally).
double wasserstein1_1d(std::span<const double> a, std::span<const double> wa,
                       std::span<const double> b, std::span<const double> wb);
// Exact in d = 1; for d > 1 the mean of 1-d distances over 64 fixed directions.
double wasserstein1(const PointSet& a, const PointSet& b);

TestReport two_sample_ks(std::span<const double> a, std::span<const double> b, double alpha = 0.01);
// Weighted empirical CDFs; the p-value uses effective sample sizes (sum w)^2 / sum w^2.
TestReport weighted_two_sample_ks(std::span<const double> a, std::span<const double> wa,
                                  std::span<const double> b, std::span<const double> wb,
                                  double alpha = 0.01);
TestReport one_sample_ks(std::span<const double> a, const std::function<double(double)>& cdf,
                         double alpha = 0.01);

// ---- local ensemble symmetries ---------------------------------------------

// Joint laws of (Y_o, Y_i) and (Y_o, Y_i2) at time t, from disjoint halves of
// the replicas that contain both children; KS on 8 fixed projections with a
// Bonferroni correction.
TestReport exchangeability_test(const LocalEnsemble& ensemble, double t, std::size_t i, std::size_t i2,
                                double alpha = 0.01);
// Law of (Y_1, Y_o) against the law of (Y_o, Y_1) under weights |N_o|/(1+C_1),
// both on N_o nonempty and from disjoint halves of the replicas.
TestReport pair_symmetry_test(const LocalEnsemble& ensemble, double t, double alpha = 0.01);

// Mean of 1{N_o nonempty} |N_o| / (1 + C_1) over sampled first generations against 1 - rho(0).
TestReport tilt_normalization_check(const OffspringLaw& rho, std::size_t samples, std::uint64_t seed);

// ---- Markov random field test ---------------------------------------------

struct MrfRecord {
  std::vector<double> root_history;   // X_o at equally spaced grid indices up to t
  std::vector<double> child_history;  // X_k likewise
  double subtree = 0.0;     // time average of X_{ki} on [0, t], averaged over the children of k
  double complement = 0.0;  // same for the root children j != k
};

// Requires k in T, k with at least one child and a root with another child.
// Summaries use the first coordinate.
std::optional<MrfRecord> extract_mrf_record(const SampledTree& tree, const PathBundle& paths,
                                            std::uint32_t k, std::size_t step,
                                            std::size_t history_points = 8);

struct MrfOptions {
  int order = 2;  // 2: condition on (X_o, X_k); 1: on X_k only
  std::size_t bins_per_axis = 4;
  std::size_t min_per_bin = 20;
  std::size_t permutations = 199;
  double alpha = 0.01;
  std::uint64_t seed = 0;
};

// Within quantile bins of the current values, partial correlation of subtree
// and complement summaries after least squares on the history covariates.
// Statistic: mean squared Fisher z over used bins; p-value by within-bin
// permutation.
TestReport mrf2_test(std::span<const MrfRecord> records, const MrfOptions& options);

// ---- mass transport -------------------------------------------------------

struct TransportFunction {
  std::string name;
  std::size_t radius;
  double bound;
  // F(tree, marks, step, o, o2); must vanish beyond `radius`.
  std::function<double(const SampledTree&, const PathBundle&, std::size_t, std::size_t, std::size_t)> f;
};

std::size_t tree_distance(const SampledTree& tree, std::size_t a, std::size_t b);
// 1{o=o2}; 1{o2 in N_o}; 1{o2 in N_o} phi(x_o); 1{o2 in N_o} phi(x_o2)/|N_o|;
// 1{d(o,o2)=2} phi(x_o) psi(x_o2), with phi = 1/(1+x^2) and psi = (1+tanh x)/2.
std::vector<TransportFunction> default_transport_functions();

struct MarkedTreeModel {
  DriftSpec drift;
  DiffusionSpec diffusion;
  InitialLaw init;
  TimeGrid grid;
  std::size_t depth_cap = 6;
  std::size_t width_cap = 64;
  std::size_t threads = 0;
};

// Per function, paired differences sum_o2 F(o, o2) - sum_o2 F(o2, o) at the
// root with marks at the final grid time. Statistic: largest |mean| / std error.
TestReport mass_transport_check(const OffspringLaw& rho, std::span<const TransportFunction> functions,
                                std::size_t reps, std::uint64_t seed, const MarkedTreeModel& model,
                                double sigmas = 3.0);

// ---- exact reweighting identity -------------------------------------------

// E[h(1+C_1) 1{N nonempty}], E[|N|/(1+C_1) h(|N|) 1{N nonempty}] and
// (1 - rho(0)) sum_k h(k+1) hat-rho(k), by exact summation.
TestReport reweight_identity_check(const OffspringLaw& rho, const std::function<double(std::size_t)>& h,
                                   double tolerance = 1e-12);

// ---- Girsanov weights -----------------------------------------------------

struct PathWeight {
  std::vector<double> log_weight;  // per vertex; zero for non-members
  double total = 0.0;
};

// log-weight = sum_j (sigma sigma^T)^{-1} b . dX_j - 1/2 sum_j |sigma^{-1} b|^2 h
// of the law with drift b against the driftless law, on the given paths.
PathWeight girsanov_weight(const PathBundle& paths, const DriftSpec& drift, const DiffusionSpec& diffusion);

// Independent single particles under b1; compares E[log dP1/dP2] with
// 1/2 E sum_j |sigma^{-1}(b1 - b2)|^2 h through paired per-path differences.
TestReport relative_entropy_check(const DriftSpec& b1, const DriftSpec& b2, const DiffusionSpec& diffusion,
                                  const InitialLaw& init, const TimeGrid& grid, std::size_t paths,
                                  std::uint64_t seed, double sigmas = 3.0);

// ---- finite systems against the local equation ----------------------------

struct GraphModel {
  enum class Kind { kErdosRenyi, kRegular, kConfiguration };
  Kind kind = Kind::kErdosRenyi;
  double mean_degree = 2.0;         // ER: p = mean_degree / n
  std::size_t kappa = 3;            // regular
  std::optional<OffspringLaw> degree_law;  // configuration model: i.i.d. degrees, parity fixed
  FiniteGraph sample(std::size_t n, std::uint64_t seed) const;
  std::string describe() const;
};

struct LocalLimitOptions {
  std::size_t n_small = 250;
  std::size_t n_large = 2000;
  std::size_t trials = 20;
  double tolerance = 0.08;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
};

// W1 at the final time between the finite-system empirical measure and the
// local root marginal, for two sizes over paired seeds. Passes when the mean
// large-n distance is below `tolerance` and the sign test for a decrease has
// p < alpha.
TestReport local_limit_experiment(const GraphModel& model, const DriftSpec& drift,
                                  const DiffusionSpec& diffusion, const InitialLaw& init,
                                  const TimeGrid& grid, const LocalEnsemble& local,
                                  const LocalLimitOptions& options);

// ---- rerooting ------------------------------------------------------------

using RerootFunction = std::function<double(std::span<const double> center, std::span<const double> other,
                                            std::span<const std::span<const double>> neighbors)>;

struct RerootRecord {
  std::vector<double> root, child;  // X_o(t), X_1(t)
  double h_root = 0.0;   // h(X_o, X_1, X_{N_o})
  double h_child = 0.0;  // h(X_1, X_o, X_{N_1})
  double degree_root = 0.0, degree_child = 0.0;
};

std::optional<RerootRecord> extract_reroot_record(const SampledTree& tree, const PathBundle& paths,
                                                  std::size_t step, const RerootFunction& h);

struct RerootOptions {
  GammaEstimatorConfig estimator = [] {
    GammaEstimatorConfig c;
    c.dyadic_lags = false;
    return c;
  }();
  std::size_t bootstrap = 50;
  double sigmas = 3.0;
  std::vector<double> panel_quantiles = {0.25, 0.5, 0.75};
  std::uint64_t seed = 0;
};

// Compares the root regression of h_root under weights |N_o|/|N_1| with the
// unweighted regression of h_child, both at queries (u, v) = (center, other),
// on a quantile panel. Statistic: sup difference; threshold: sigmas times the
// pooled bootstrap standard error.
TestReport reroot_gamma_check(std::span<const RerootRecord> records, const RerootOptions& options);

}  // namespace ugw

#endif  // UGW_VERIFY_HPP_
