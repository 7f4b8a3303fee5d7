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

#include "ugw/dynamics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <istream>
#include <ostream>

#include "ugw/parallel.hpp"
#include "ugw/rng.hpp"

namespace ugw {
namespace {

void check_sigma(const DiffusionSpec& diffusion, std::span<const double> sigma, std::size_t d,
                 std::size_t step) {
  Eigen::MatrixXd m(d, d);
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t c = 0; c < d; ++c) m(r, c) = sigma[r * d + c];
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  const double smax = s(0), smin = s(d - 1);
  if (!(smin > 0.0) || !std::isfinite(smax))
    throw Error(ErrorKind::kSingularDiffusion, diffusion.name() + ": sigma is not invertible", step);
  if (smax > diffusion.sigma_max() * (1 + 1e-12) || 1.0 / smin > diffusion.sigma_inv_max() * (1 + 1e-12))
    throw Error(ErrorKind::kInvalidArgument, diffusion.name() + ": sigma bounds violated", step);
}

double norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(bytes, 8);
}
void put_u32(std::ostream& out, std::uint32_t v) {
  char bytes[4];
  for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(bytes, 4);
}
std::uint64_t get_u64(std::istream& in) {
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), 8);
  require(in.good(), ErrorKind::kIo, "truncated PBND1 stream");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | bytes[i];
  return v;
}
std::uint32_t get_u32(std::istream& in) {
  unsigned char bytes[4];
  in.read(reinterpret_cast<char*>(bytes), 4);
  require(in.good(), ErrorKind::kIo, "truncated PBND1 stream");
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | bytes[i];
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------

TimeGrid::TimeGrid(double horizon, std::size_t steps) : horizon_(horizon), steps_(steps) {
  require(steps >= 1, ErrorKind::kInvalidArgument, "time grid needs at least one step");
  require(std::isfinite(horizon) && horizon > 0.0, ErrorKind::kInvalidArgument,
          "time horizon must be positive");
}

std::optional<std::size_t> TimeGrid::index_of(double t) const noexcept {
  if (!(t >= 0.0) || t > horizon_ * (1 + 1e-9)) return std::nullopt;
  const double position = t / step_size();
  const double nearest = std::round(position);
  if (std::abs(position - nearest) > 1e-9 * std::max(1.0, position)) return std::nullopt;
  return static_cast<std::size_t>(nearest);
}

DriftSpec::DriftSpec(std::string name, std::size_t dim, Interacting interacting, Isolated isolated,
                     double growth_const)
    : name_(std::move(name)),
      dim_(dim),
      interacting_(std::move(interacting)),
      isolated_(std::move(isolated)),
      growth_const_(growth_const) {
  require(dim_ >= 1, ErrorKind::kInvalidArgument, "drift dimension must be >= 1");
  require(static_cast<bool>(interacting_) && static_cast<bool>(isolated_), ErrorKind::kInvalidArgument,
          "drift '" + name_ + "' needs both the interacting and the isolated branch");
}

DiffusionSpec::DiffusionSpec(std::string name, std::size_t dim, Matrix matrix, double sigma_max,
                             double sigma_inv_max)
    : name_(std::move(name)),
      dim_(dim),
      matrix_(std::move(matrix)),
      sigma_max_(sigma_max),
      sigma_inv_max_(sigma_inv_max) {
  require(dim_ >= 1 && static_cast<bool>(matrix_), ErrorKind::kInvalidArgument, "invalid diffusion");
  require(sigma_max_ > 0.0 && sigma_inv_max_ > 0.0, ErrorKind::kInvalidArgument,
          "diffusion bounds must be positive");
}

SimTopology SimTopology::from_graph(const FiniteGraph& graph) {
  SimTopology topo;
  topo.adjacency = graph.adjacency();
  topo.member.assign(graph.size(), 1);
  topo.streams.resize(graph.size());
  topo.labels.resize(graph.size());
  for (std::size_t v = 0; v < graph.size(); ++v) {
    topo.streams[v] = v;
    topo.labels[v] = std::to_string(v);
  }
  return topo;
}

SimTopology SimTopology::from_tree(const SampledTree& tree, std::size_t frozen_padding) {
  SimTopology topo;
  topo.adjacency = tree.adjacency();
  for (std::size_t v = 0; v < tree.size(); ++v) {
    topo.member.push_back(1);
    topo.streams.push_back(tree.label(v).hash());
    topo.labels.push_back(tree.label(v).str());
  }
  if (frozen_padding > 0) {
    for (std::size_t v = 0; v < tree.size(); ++v) {
      if (tree.depth(v) >= tree.depth_cap()) continue;
      for (std::size_t i = 1; i <= frozen_padding; ++i) {
        const UhnLabel label = tree.label(v).child(static_cast<std::uint32_t>(tree.offspring(v) + i));
        topo.member.push_back(0);
        topo.streams.push_back(label.hash());
        topo.labels.push_back(label.str());
        topo.adjacency.offsets.push_back(topo.adjacency.targets.size());
      }
    }
  }
  return topo;
}

PathBundle::PathBundle(TimeGrid grid, std::size_t dim, std::size_t vertices)
    : grid_(grid),
      dim_(dim),
      states_(vertices * (grid.steps() + 1) * dim, 0.0),
      member_(vertices, 1),
      labels_(vertices) {
  for (std::size_t v = 0; v < vertices; ++v) labels_[v] = std::to_string(v);
  adjacency_.offsets.assign(vertices + 1, 0);
}

bool PathBundle::operator==(const PathBundle& other) const {
  return grid_ == other.grid_ && dim_ == other.dim_ && member_ == other.member_ &&
         labels_ == other.labels_ && states_.size() == other.states_.size() &&
         std::memcmp(states_.data(), other.states_.data(), states_.size() * sizeof(double)) == 0;
}

// ---------------------------------------------------------------------------

PathBundle simulate_system(const SimTopology& topology, const DriftSpec& drift,
                           const DiffusionSpec& diffusion, const InitialLaw& init,
                           const TimeGrid& grid, std::uint64_t seed,
                           const SimulationOptions& options) {
  const std::size_t d = drift.dim();
  require(diffusion.dim() == d && init.dim == d, ErrorKind::kInvalidArgument,
          "drift, diffusion and initial law must share the state dimension");
  const std::size_t n = topology.size();
  require(topology.adjacency.size() == n && topology.streams.size() == n &&
              topology.labels.size() == n,
          ErrorKind::kInvalidArgument, "inconsistent topology");

  PathBundle bundle(grid, d, n);
  bundle.members() = topology.member;
  bundle.labels() = topology.labels;
  bundle.adjacency() = topology.adjacency;

  parallel_for(n, options.threads, [&](std::size_t v) {
    init.sample(seed, topology.streams[v], bundle.state(v, 0));
  });
  for (std::size_t v = 0; v < n; ++v)
    for (double x : bundle.state(v, 0))
      require(std::isfinite(x), ErrorKind::kInvalidArgument, "non-finite initial state");

  const double h = grid.step_size();
  const double sqrt_h = std::sqrt(h);
  std::vector<double> running_sup;
  if (options.check_contracts) {
    running_sup.resize(n);
    for (std::size_t v = 0; v < n; ++v) running_sup[v] = norm(bundle.state(v, 0));
  }

  for (std::size_t j = 0; j < grid.steps(); ++j) {
    const double t = grid.time(j);
    parallel_chunks(n, options.threads, [&](std::size_t begin, std::size_t end) {
      std::vector<PathView> neighbors;
      std::vector<double> b(d), b_swapped(d), sigma(d * d), xi(d);
      for (std::size_t v = begin; v < end; ++v) {
        const auto cur = bundle.state(v, j);
        auto next = bundle.state(v, j + 1);
        if (!topology.member[v]) {
          std::copy(cur.begin(), cur.end(), next.begin());
          continue;
        }
        neighbors.clear();
        for (auto u : topology.adjacency.neighbors(v))
          if (topology.member[u]) neighbors.push_back(bundle.path(u, j));
        const PathView self = bundle.path(v, j);
        drift.evaluate({j, t, self, neighbors}, b);
        diffusion.evaluate(j, t, self, sigma);
        if (options.check_contracts) {
          double avg = 0.0;
          for (auto u : topology.adjacency.neighbors(v))
            if (topology.member[u]) avg += running_sup[u];
          if (!neighbors.empty()) avg /= static_cast<double>(neighbors.size());
          const double bound = drift.growth_const() * (1.0 + running_sup[v] + avg);
          if (norm(b) > bound * (1 + 1e-12) + 1e-12)
            throw Error(ErrorKind::kInvalidArgument, drift.name() + ": linear growth bound violated", j);
          if (neighbors.size() >= 2) {
            std::vector<PathView> reversed(neighbors.rbegin(), neighbors.rend());
            drift.evaluate({j, t, self, reversed}, b_swapped);
            for (std::size_t c = 0; c < d; ++c)
              if (std::abs(b[c] - b_swapped[c]) > 1e-9 * (1.0 + std::abs(b[c])))
                throw Error(ErrorKind::kInvalidArgument,
                            drift.name() + ": drift depends on the order of neighbors", j);
          }
          check_sigma(diffusion, sigma, d, j);
        }
        rng::gaussians(seed, topology.streams[v], rng::Domain::kNoise, j, xi);
        for (std::size_t c = 0; c < d; ++c) {
          double noise = 0.0;
          for (std::size_t k = 0; k < d; ++k) noise += sigma[c * d + k] * xi[k];
          next[c] = cur[c] + (b[c] * h + noise * sqrt_h);
        }
      }
    });
    for (std::size_t v = 0; v < n; ++v) {
      for (double x : bundle.state(v, j + 1))
        if (!std::isfinite(x) || std::abs(x) > kDivergenceBound)
          throw Error(ErrorKind::kDiverged,
                      "state of vertex " + topology.labels[v] + " diverged at step " +
                          std::to_string(j + 1),
                      j + 1);
      if (options.check_contracts) running_sup[v] = std::max(running_sup[v], norm(bundle.state(v, j + 1)));
    }
  }
  return bundle;
}

PathBundle simulate_driftless(const SimTopology& topology, const DiffusionSpec& diffusion,
                              const InitialLaw& init, const TimeGrid& grid, std::uint64_t seed,
                              const SimulationOptions& options) {
  const std::size_t d = diffusion.dim();
  auto zero = [d](std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); };
  DriftSpec none(
      "zero", d, [zero](const DriftQuery&, std::span<double> out) { zero(out); },
      [zero](std::size_t, double, PathView, std::span<double> out) { zero(out); }, 1.0);
  none.mark_zero();
  return simulate_system(topology, none, diffusion, init, grid, seed, options);
}

PointSet empirical_measure(const PathBundle& bundle, double t) {
  const auto j = bundle.grid().index_of(t);
  require(j.has_value(), ErrorKind::kInvalidArgument, "time is not on the grid");
  PointSet points(bundle.dim());
  for (std::size_t v = 0; v < bundle.vertex_count(); ++v) points.push_back(bundle.state(v, *j));
  return points;
}

PointSet empirical_path_measure(const PathBundle& bundle, double t) {
  const auto j = bundle.grid().index_of(t);
  require(j.has_value(), ErrorKind::kInvalidArgument, "time is not on the grid");
  PointSet points(bundle.dim() * (*j + 1));
  for (std::size_t v = 0; v < bundle.vertex_count(); ++v) {
    const PathView p = bundle.path(v, *j);
    points.push_back({p.data(), bundle.dim() * (*j + 1)});
  }
  return points;
}

MomentReport moment_bound_check(std::span<const PathBundle> ensemble, double horizon,
                                double growth_factor) {
  require(ensemble.size() >= 100, ErrorKind::kInvalidArgument,
          "moment bound check needs at least 100 bundles");
  const PathBundle& first = ensemble.front();
  for (const auto& b : ensemble)
    require(b.vertex_count() == first.vertex_count() && b.grid() == first.grid() &&
                b.dim() == first.dim(),
            ErrorKind::kInvalidArgument, "bundles must share grid and vertex layout");
  const TimeGrid& grid = first.grid();
  require(horizon > 0.0 && horizon <= grid.horizon() * (1 + 1e-12), ErrorKind::kInvalidArgument,
          "horizon outside the simulated interval");
  const auto snap = [&](double t) {
    return std::min<std::size_t>(grid.steps(),
                                 static_cast<std::size_t>(std::floor(t / grid.step_size() + 1e-9)));
  };
  MomentReport report;
  const std::vector<std::size_t> idx = {snap(horizon / 4), snap(horizon / 2), snap(horizon)};
  const std::size_t n = first.vertex_count();
  std::vector<std::vector<double>> sums(idx.size(), std::vector<double>(n, 0.0));
  for (const auto& b : ensemble) {
    for (std::size_t v = 0; v < n; ++v) {
      double running = 0.0;
      std::size_t next = 0;
      for (std::size_t j = 0; j <= idx.back(); ++j) {
        double sq = 0.0;
        for (double x : b.state(v, j)) sq += x * x;
        running = std::max(running, sq);
        while (next < idx.size() && idx[next] == j) sums[next++][v] += running;
      }
    }
  }
  const double count = static_cast<double>(ensemble.size());
  for (std::size_t h = 0; h < idx.size(); ++h) {
    double sup = 0.0;
    for (std::size_t v = 0; v < n; ++v) sup = std::max(sup, sums[h][v] / count);
    report.horizons.push_back(grid.time(idx[h]));
    report.sup_by_horizon.push_back(sup);
  }
  report.per_vertex.resize(n);
  for (std::size_t v = 0; v < n; ++v) report.per_vertex[v] = sums.back()[v] / count;
  report.sup = report.sup_by_horizon.back();
  for (std::size_t h = 0; h < idx.size(); ++h) {
    if (!std::isfinite(report.sup_by_horizon[h])) report.unbounded_growth = true;
    if (h > 0 && report.sup_by_horizon[h - 1] > 0.0 &&
        report.sup_by_horizon[h] > growth_factor * report.sup_by_horizon[h - 1])
      report.unbounded_growth = true;
  }
  return report;
}

void write_paths_csv(std::ostream& out, const PathBundle& bundle, std::optional<std::size_t> replica,
                     bool header) {
  const std::size_t d = bundle.dim();
  if (header) {
    if (replica) out << "replica,";
    out << "vertex_label,time";
    for (std::size_t c = 0; c < d; ++c) out << ",coord_" << c;
    out << ",member\n";
  }
  char buf[64];
  for (std::size_t v = 0; v < bundle.vertex_count(); ++v) {
    for (std::size_t j = 0; j <= bundle.grid().steps(); ++j) {
      if (replica) out << *replica << ',';
      out << bundle.label(v);
      std::snprintf(buf, sizeof buf, ",%.17g", bundle.grid().time(j));
      out << buf;
      for (double x : bundle.state(v, j)) {
        std::snprintf(buf, sizeof buf, ",%.17g", x);
        out << buf;
      }
      out << ',' << (bundle.member(v) ? 1 : 0) << '\n';
    }
  }
}

void write_paths_binary(std::ostream& out, const PathBundle& bundle) {
  out.write("PBND1", 5);
  put_u32(out, static_cast<std::uint32_t>(bundle.dim()));
  put_u64(out, bundle.vertex_count());
  put_u64(out, bundle.grid().steps());
  put_u64(out, std::bit_cast<std::uint64_t>(bundle.grid().horizon()));
  for (std::size_t v = 0; v < bundle.vertex_count(); ++v) {
    out.put(bundle.member(v) ? 1 : 0);
    put_u32(out, static_cast<std::uint32_t>(bundle.label(v).size()));
    out.write(bundle.label(v).data(), static_cast<std::streamsize>(bundle.label(v).size()));
  }
  for (double x : bundle.raw()) put_u64(out, std::bit_cast<std::uint64_t>(x));
}

PathBundle read_paths_binary(std::istream& in) {
  char magic[5];
  in.read(magic, 5);
  require(in.good() && std::memcmp(magic, "PBND1", 5) == 0, ErrorKind::kIo, "missing PBND1 header");
  const std::size_t dim = get_u32(in);
  const std::size_t n = get_u64(in);
  const std::size_t steps = get_u64(in);
  const double horizon = std::bit_cast<double>(get_u64(in));
  PathBundle bundle(TimeGrid(horizon, steps), dim, n);
  for (std::size_t v = 0; v < n; ++v) {
    const int member = in.get();
    require(member == 0 || member == 1, ErrorKind::kIo, "bad membership byte");
    bundle.members()[v] = static_cast<std::uint8_t>(member);
    std::string label(get_u32(in), '\0');
    in.read(label.data(), static_cast<std::streamsize>(label.size()));
    bundle.labels()[v] = std::move(label);
  }
  for (std::size_t v = 0; v < n; ++v)
    for (std::size_t j = 0; j <= steps; ++j)
      for (auto& x : bundle.state(v, j)) x = std::bit_cast<double>(get_u64(in));
  return bundle;
}

void for_each_tree_replica(const OffspringLaw& rho, std::size_t depth_cap, std::size_t width_cap,
                           std::size_t replicas, const DriftSpec& drift,
                           const DiffusionSpec& diffusion, const InitialLaw& init,
                           const TimeGrid& grid, std::uint64_t seed, std::size_t threads,
                           const std::function<void(std::size_t, const SampledTree&,
                                                    const PathBundle&)>& visit) {
  SimulationOptions serial;
  serial.threads = 1;
  parallel_for(replicas, threads, [&](std::size_t r) {
    const SampledTree tree = sample_ugw(rho, depth_cap, width_cap, rng::mix(seed, 2 * r));
    const PathBundle paths = simulate_system(SimTopology::from_tree(tree), drift, diffusion, init,
                                             grid, rng::mix(seed, 2 * r + 1), serial);
    visit(r, tree, paths);
  });
}

}  // namespace ugw
