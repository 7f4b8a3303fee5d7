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

#ifndef UGW_LOCALEQ_HPP_
#define UGW_LOCALEQ_HPP_

// Ensemble solvers for the root-neighborhood equations on the regular tree
// and on UGW(rho) trees. Each replica carries the root path Y_o and child
// paths Y_1..Y_c; the drift of child k is a regression over the ensemble of
// the root drift given (Y_o, Y_1), evaluated at (Y_k, Y_o).

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ugw/dynamics.hpp"
#include "ugw/knn.hpp"
#include "ugw/topology.hpp"

namespace ugw {

struct GammaDiagnostic {
  std::size_t step;
  std::size_t replica;
  std::size_t child;
  std::vector<double> query;  // (Y_k(t), Y_o(t))
  std::vector<double> estimate;
  std::size_t stratum_size;
  bool kernel_fallback;
};

// Root degree and auxiliary count per replica.
struct FirstGeneration {
  std::vector<std::uint32_t> degree;  // |N_o(T_1)|
  std::vector<std::uint32_t> aux;     // C_1 ~ hat-rho
};

// Draws M i.i.d. pairs (degree ~ rho, aux ~ hat-rho). When rho(0) = 1 the aux
// count is 0.
FirstGeneration sample_first_generation(const OffspringLaw& rho, std::size_t replicas,
                                        std::uint64_t seed);

class LocalEnsemble {
 public:
  LocalEnsemble(TimeGrid grid, std::size_t dim, FirstGeneration structure);

  const TimeGrid& grid() const noexcept { return grid_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t replicas() const noexcept { return degree_.size(); }
  std::uint32_t degree(std::size_t m) const { return degree_[m]; }
  std::uint32_t aux(std::size_t m) const { return aux_[m]; }
  // Slot 0 is the root; slots 1..slots(m)-1 are children. Child 1 always has
  // a slot and stays frozen when the root has degree 0.
  std::size_t slots(std::size_t m) const { return offset_[m + 1] - offset_[m]; }
  bool member(std::size_t m, std::size_t slot) const { return slot == 0 || slot <= degree_[m]; }
  // |N_o| / (1 + C_1); zero when the root is isolated.
  double tilt_weight(std::size_t m) const {
    return static_cast<double>(degree_[m]) / (1.0 + static_cast<double>(aux_[m]));
  }
  static std::uint64_t stream(std::size_t m, std::size_t slot);

  std::span<const double> state(std::size_t m, std::size_t slot, std::size_t j) const {
    return {states_.data() + index(m, slot, j), dim_};
  }
  std::span<double> state(std::size_t m, std::size_t slot, std::size_t j) {
    return {states_.data() + index(m, slot, j), dim_};
  }
  PathView path(std::size_t m, std::size_t slot, std::size_t j) const {
    return {states_.data() + index(m, slot, 0), j + 1, dim_};
  }

  // Root states at time t (on the grid).
  PointSet root_marginal(double t) const;
  // (Y_o(t), Y_k(t)) for replicas with k a member.
  PointSet pair_marginal(double t, std::size_t k) const;
  // Y_k(t) for replicas with k a member.
  PointSet child_marginal(double t, std::size_t k) const;

  // Coefficient names and solver settings for comparisons against finite systems.
  struct Provenance {
    std::string mode;  // regular | ugw | driftless
    std::string drift, diffusion, init;
    std::string rho;
    std::uint64_t seed = 0;
  };
  Provenance& provenance() { return provenance_; }
  const Provenance& provenance() const { return provenance_; }
  std::vector<GammaDiagnostic>& diagnostics() { return diagnostics_; }
  const std::vector<GammaDiagnostic>& diagnostics() const { return diagnostics_; }

  bool operator==(const LocalEnsemble& other) const;

 private:
  std::size_t index(std::size_t m, std::size_t slot, std::size_t j) const {
    return ((offset_[m] + slot) * (grid_.steps() + 1) + j) * dim_;
  }

  TimeGrid grid_;
  std::size_t dim_;
  std::vector<std::uint32_t> degree_, aux_;
  std::vector<std::size_t> offset_;
  std::vector<double> states_;
  Provenance provenance_;
  std::vector<GammaDiagnostic> diagnostics_;
};

struct LocalSolveOptions {
  std::size_t threads = 0;
};

// Regular tree: every replica has degree kappa and C_1 = kappa - 1.
LocalEnsemble solve_local_regular(std::size_t kappa, const DriftSpec& drift,
                                  const DiffusionSpec& diffusion, const InitialLaw& init,
                                  std::size_t replicas, const TimeGrid& grid,
                                  const GammaEstimatorConfig& config, std::uint64_t seed,
                                  const LocalSolveOptions& options = {});

LocalEnsemble solve_local_ugw(const OffspringLaw& rho, const DriftSpec& drift,
                              const DiffusionSpec& diffusion, const InitialLaw& init,
                              std::size_t replicas, const TimeGrid& grid,
                              const GammaEstimatorConfig& config, std::uint64_t seed,
                              const LocalSolveOptions& options = {});

// Same replica structure and noise as the solvers above with every drift set to zero.
LocalEnsemble solve_local_driftless(const FirstGeneration& structure, const DiffusionSpec& diffusion,
                                    const InitialLaw& init, const TimeGrid& grid, std::uint64_t seed,
                                    const LocalSolveOptions& options = {});

// Regression state rebuilt from a solved ensemble at step j: design points
// are replicas with 1 in T_1, features embed(Y_o) ++ embed(Y_1), responses
// b(t_j, Y_o, Y_{N_o}), weights 1 (regular) or |N_o| / (1 + C_1) (ugw).
GammaEstimator build_gamma_estimator(const LocalEnsemble& ensemble, const DriftSpec& drift,
                                     std::size_t step, const GammaEstimatorConfig& config,
                                     bool tilted);

// gamma-hat(y, y') at step j, where y and y' are path prefixes through step j.
std::vector<double> estimate_gamma_regular(const LocalEnsemble& ensemble, const DriftSpec& drift,
                                           std::size_t step, const PathView& y, const PathView& y_partner,
                                           const GammaEstimatorConfig& config);
// A frozen partner (or an ensemble without any non-isolated root) gives b(t_j, y, empty).
std::vector<double> estimate_gamma_ugw(const LocalEnsemble& ensemble, const DriftSpec& drift,
                                       std::size_t step, const PathView& y, const PathView& y_partner,
                                       const GammaEstimatorConfig& config, bool partner_member = true);

// Ensemble CSV in the path schema with a leading replica column; child
// labels are "1".."c", the root is "o".
void write_local_csv(std::ostream& out, const LocalEnsemble& ensemble);
void write_gamma_diagnostics(std::ostream& out, const LocalEnsemble& ensemble);

}  // namespace ugw

#endif  // UGW_LOCALEQ_HPP_
