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

#ifndef UGW_DYNAMICS_HPP_
#define UGW_DYNAMICS_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ugw/error.hpp"
#include "ugw/sample.hpp"
#include "ugw/topology.hpp"

namespace ugw {

// Uniform grid t_j = j * T / K on [0, T]; t_K is exactly T.
class TimeGrid {
 public:
  TimeGrid(double horizon, std::size_t steps);

  double horizon() const noexcept { return horizon_; }
  std::size_t steps() const noexcept { return steps_; }
  double step_size() const noexcept { return horizon_ / static_cast<double>(steps_); }
  double time(std::size_t j) const noexcept {
    return j == steps_ ? horizon_ : static_cast<double>(j) * step_size();
  }
  // Grid index of t, if t lies on the grid (relative tolerance 1e-9).
  std::optional<std::size_t> index_of(double t) const noexcept;

  bool operator==(const TimeGrid&) const = default;

 private:
  double horizon_;
  std::size_t steps_;
};

// Read-only path prefix x(t_0), ..., x(t_j). Values after t_j are not
// reachable through the view, which makes drifts built on it non-anticipative.
class PathView {
 public:
  PathView() = default;
  PathView(const double* data, std::size_t length, std::size_t dim)
      : data_(data), length_(length), dim_(dim) {}

  std::size_t length() const noexcept { return length_; }
  std::size_t last() const noexcept { return length_ - 1; }
  std::size_t dim() const noexcept { return dim_; }
  std::span<const double> at(std::size_t i) const {
    require(i < length_, ErrorKind::kInvalidArgument, "path access beyond the current time");
    return {data_ + i * dim_, dim_};
  }
  std::span<const double> current() const noexcept { return {data_ + (length_ - 1) * dim_, dim_}; }
  const double* data() const noexcept { return data_; }

 private:
  const double* data_ = nullptr;
  std::size_t length_ = 0;
  std::size_t dim_ = 0;
};

struct DriftQuery {
  std::size_t step;
  double time;
  PathView self;
  std::span<const PathView> neighbors;  // unordered; empty means the isolated branch
};

// Interaction drift b(t, x, (x_v)_{v in A}). The isolated branch handles A empty.
class DriftSpec {
 public:
  using Interacting = std::function<void(const DriftQuery&, std::span<double>)>;
  using Isolated = std::function<void(std::size_t, double, PathView, std::span<double>)>;

  DriftSpec(std::string name, std::size_t dim, Interacting interacting, Isolated isolated,
            double growth_const);

  void evaluate(const DriftQuery& query, std::span<double> out) const {
    if (query.neighbors.empty())
      isolated_(query.step, query.time, query.self, out);
    else
      interacting_(query, out);
  }

  const std::string& name() const noexcept { return name_; }
  std::size_t dim() const noexcept { return dim_; }
  // C_T in |b| <= C_T (1 + ||x||_* + avg ||x_v||_*).
  double growth_const() const noexcept { return growth_const_; }
  bool is_zero() const noexcept { return zero_; }
  DriftSpec& mark_zero() {
    zero_ = true;
    return *this;
  }

 private:
  std::string name_;
  std::size_t dim_;
  Interacting interacting_;
  Isolated isolated_;
  double growth_const_;
  bool zero_ = false;
};

// sigma(t, x): invertible d x d matrix, written row-major.
class DiffusionSpec {
 public:
  using Matrix = std::function<void(std::size_t, double, PathView, std::span<double>)>;

  DiffusionSpec(std::string name, std::size_t dim, Matrix matrix, double sigma_max,
                double sigma_inv_max);

  void evaluate(std::size_t step, double time, PathView self, std::span<double> out) const {
    matrix_(step, time, self, out);
  }
  const std::string& name() const noexcept { return name_; }
  std::size_t dim() const noexcept { return dim_; }
  double sigma_max() const noexcept { return sigma_max_; }
  double sigma_inv_max() const noexcept { return sigma_inv_max_; }

 private:
  std::string name_;
  std::size_t dim_;
  Matrix matrix_;
  double sigma_max_;
  double sigma_inv_max_;
};

// lambda_0: i.i.d. initial states, each drawn from its own counter stream.
struct InitialLaw {
  std::string name;
  std::size_t dim = 1;
  std::function<void(std::uint64_t seed, std::uint64_t stream, std::span<double>)> sample;
  double second_moment = 0.0;
  bool bounded_support = false;
};

// Vertex set, neighborhoods, tree membership and RNG stream of each vertex.
struct SimTopology {
  Adjacency adjacency;
  std::vector<std::uint8_t> member;
  std::vector<std::uint64_t> streams;
  std::vector<std::string> labels;

  std::size_t size() const noexcept { return member.size(); }

  static SimTopology from_graph(const FiniteGraph& graph);
  // Tree vertices are members. `frozen_padding` appends, for every member v
  // below the depth cap, that many non-member labels v(c_v+1), v(c_v+2), ...
  static SimTopology from_tree(const SampledTree& tree, std::size_t frozen_padding = 0);
};

// Discretized trajectories of every vertex on a grid.
class PathBundle {
 public:
  PathBundle(TimeGrid grid, std::size_t dim, std::size_t vertices);

  const TimeGrid& grid() const noexcept { return grid_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t vertex_count() const noexcept { return member_.size(); }

  std::span<const double> state(std::size_t v, std::size_t j) const {
    return {states_.data() + offset(v, j), dim_};
  }
  std::span<double> state(std::size_t v, std::size_t j) { return {states_.data() + offset(v, j), dim_}; }
  // Prefix of vertex v up to and including step j.
  PathView path(std::size_t v, std::size_t j) const { return {states_.data() + offset(v, 0), j + 1, dim_}; }

  bool member(std::size_t v) const { return member_[v] != 0; }
  const std::string& label(std::size_t v) const { return labels_[v]; }
  const Adjacency& adjacency() const noexcept { return adjacency_; }
  std::span<const double> raw() const noexcept { return states_; }

  std::vector<std::uint8_t>& members() { return member_; }
  std::vector<std::string>& labels() { return labels_; }
  Adjacency& adjacency() { return adjacency_; }

  bool operator==(const PathBundle& other) const;

 private:
  std::size_t offset(std::size_t v, std::size_t j) const { return (v * (grid_.steps() + 1) + j) * dim_; }

  TimeGrid grid_;
  std::size_t dim_;
  std::vector<double> states_;
  std::vector<std::uint8_t> member_;
  std::vector<std::string> labels_;
  Adjacency adjacency_;
};

struct SimulationOptions {
  std::size_t threads = 0;  // 0: UGW_THREADS or all cores
  // Runtime checks of the coefficient contracts: linear growth, neighbor
  // symmetry, sigma bounds and invertibility.
  bool check_contracts = false;
};

// States beyond this magnitude abort a run as diverged.
inline constexpr double kDivergenceBound = 1e10;

// Euler-Maruyama for dX_v = 1{v in T}(b dt + sigma dW_v) with the drift at
// the left endpoint. Noise for (v, j) comes from (seed, stream_v, j).
PathBundle simulate_system(const SimTopology& topology, const DriftSpec& drift,
                           const DiffusionSpec& diffusion, const InitialLaw& init,
                           const TimeGrid& grid, std::uint64_t seed,
                           const SimulationOptions& options = {});

// Same as simulate_system with b identically zero.
PathBundle simulate_driftless(const SimTopology& topology, const DiffusionSpec& diffusion,
                              const InitialLaw& init, const TimeGrid& grid, std::uint64_t seed,
                              const SimulationOptions& options = {});

// States of all vertices at grid time t (uniform weights).
PointSet empirical_measure(const PathBundle& bundle, double t);
// Path prefixes up to t, flattened to points in R^{d (j+1)}.
PointSet empirical_path_measure(const PathBundle& bundle, double t);

struct MomentReport {
  std::vector<double> per_vertex;   // E ||X_v||^2_{*,T}
  double sup = 0.0;                 // over vertices
  std::vector<double> horizons;     // T/4, T/2, T (snapped to the grid)
  std::vector<double> sup_by_horizon;
  bool unbounded_growth = false;
};

// Monte Carlo estimate of sup_v E ||X_v||^2_{*,T} from >= 100 bundles sharing
// a vertex layout. Growth is flagged when the estimate is non-finite or grows
// by more than `growth_factor` between consecutive horizons.
MomentReport moment_bound_check(std::span<const PathBundle> ensemble, double horizon,
                                double growth_factor = 16.0);

// CSV with header vertex_label,time,coord_0..coord_{d-1},member; a leading
// `replica` column is added when `replica` is given.
void write_paths_csv(std::ostream& out, const PathBundle& bundle,
                     std::optional<std::size_t> replica = std::nullopt, bool header = true);

// Little-endian binary layout:
//   "PBND1" | u32 dim | u64 vertices | u64 steps | f64 horizon
//   per vertex: u8 member | u32 label length | label bytes
//   f64 states, vertex-major then time then coordinate
void write_paths_binary(std::ostream& out, const PathBundle& bundle);
PathBundle read_paths_binary(std::istream& in);

// Simulates `replicas` independent UGW(rho) trees (truncated at the caps) and
// calls visit(r, tree, paths) for each, possibly from several threads at once.
void for_each_tree_replica(const OffspringLaw& rho, std::size_t depth_cap, std::size_t width_cap,
                           std::size_t replicas, const DriftSpec& drift,
                           const DiffusionSpec& diffusion, const InitialLaw& init,
                           const TimeGrid& grid, std::uint64_t seed, std::size_t threads,
                           const std::function<void(std::size_t, const SampledTree&,
                                                    const PathBundle&)>& visit);

}  // namespace ugw

#endif  // UGW_DYNAMICS_HPP_
