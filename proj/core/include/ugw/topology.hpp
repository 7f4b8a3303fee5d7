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

#ifndef UGW_TOPOLOGY_HPP_
#define UGW_TOPOLOGY_HPP_

#include <compare>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ugw {

// Ulam-Harris-Neveu label: a finite sequence of positive integers. The empty
// sequence is the root. Text form is "o" for the root and dotted digits
// otherwise ("1", "2.1", "1.3.2").
class UhnLabel {
 public:
  UhnLabel() = default;
  explicit UhnLabel(std::vector<std::uint32_t> digits);

  static UhnLabel root() { return UhnLabel(); }
  static UhnLabel parse(std::string_view text);

  bool is_root() const noexcept { return digits_.empty(); }
  std::size_t depth() const noexcept { return digits_.size(); }
  std::span<const std::uint32_t> digits() const noexcept { return digits_; }

  UhnLabel child(std::uint32_t k) const;
  // Throws invalid-argument on the root.
  UhnLabel parent() const;
  UhnLabel concat(const UhnLabel& suffix) const;
  // u <= v in the prefix order.
  bool is_prefix_of(const UhnLabel& other) const noexcept;

  std::string str() const;
  std::uint64_t hash() const noexcept;

  auto operator<=>(const UhnLabel&) const = default;

 private:
  std::vector<std::uint32_t> digits_;
};

// Offspring distribution on {0, ..., cap}. Construction renormalizes and
// records how much mass was moved so truncation bias can be reported.
class OffspringLaw {
 public:
  static constexpr std::size_t kDefaultCap = 64;

  // Masses beyond `cap` are dropped. Negative or non-finite masses, or a zero
  // total, are invalid-law errors.
  static OffspringLaw from_pmf(std::vector<double> masses, std::size_t cap = kDefaultCap);
  static OffspringLaw dirac(std::size_t k);
  static OffspringLaw poisson(double mean, std::size_t cap = kDefaultCap);

  double operator()(std::size_t k) const noexcept { return k < pmf_.size() ? pmf_[k] : 0.0; }
  std::span<const double> pmf() const noexcept { return pmf_; }
  std::size_t cap() const noexcept { return pmf_.empty() ? 0 : pmf_.size() - 1; }
  double mean() const noexcept;
  double second_moment() const noexcept;
  // |1 - original total| before renormalization.
  double renormalized_mass() const noexcept { return renormalized_mass_; }
  // Inverse-CDF draw from a uniform in (0, 1).
  std::size_t quantile(double u) const noexcept;

 private:
  std::vector<double> pmf_;
  std::vector<double> cdf_;
  double renormalized_mass_ = 0.0;
};

// hat-rho(k) = (k + 1) rho(k + 1) / sum_n n rho(n). Zero first moment is an
// invalid-law error.
OffspringLaw size_biased(const OffspringLaw& rho);

// Compressed adjacency lists; neighbors of each vertex are sorted ascending.
struct Adjacency {
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> targets;

  std::size_t size() const noexcept { return offsets.size() - 1; }
  std::span<const std::size_t> neighbors(std::size_t v) const noexcept {
    return {targets.data() + offsets[v], offsets[v + 1] - offsets[v]};
  }
  std::size_t degree(std::size_t v) const noexcept { return offsets[v + 1] - offsets[v]; }
  std::size_t edge_count() const noexcept { return targets.size() / 2; }

  static Adjacency from_lists(const std::vector<std::vector<std::size_t>>& lists);
};

// Prefix-closed set of labels, stored in breadth-first order so that the
// children of each vertex are contiguous and follow their parent.
class SampledTree {
 public:
  static constexpr std::size_t kNoParent = static_cast<std::size_t>(-1);

  // Builds a tree from breadth-first offspring counts: counts[i] is the number
  // of children of the i-th vertex in BFS order.
  static SampledTree from_offspring_counts(std::span<const std::uint32_t> counts,
                                           std::size_t depth_cap, std::size_t width_cap);

  std::size_t size() const noexcept { return labels_.size(); }
  const UhnLabel& label(std::size_t v) const { return labels_[v]; }
  std::size_t parent(std::size_t v) const { return parent_[v]; }
  std::uint32_t offspring(std::size_t v) const { return offspring_[v]; }
  std::size_t first_child(std::size_t v) const { return first_child_[v]; }
  std::size_t depth(std::size_t v) const { return labels_[v].depth(); }
  std::size_t depth_cap() const noexcept { return depth_cap_; }
  std::size_t width_cap() const noexcept { return width_cap_; }

  std::optional<std::size_t> find(const UhnLabel& label) const;
  bool contains(const UhnLabel& label) const { return find(label).has_value(); }
  // Undirected adjacency: parent (if any) followed by children.
  Adjacency adjacency() const;
  std::size_t degree(std::size_t v) const {
    return offspring_[v] + (parent_[v] == kNoParent ? 0 : 1);
  }

 private:
  std::vector<UhnLabel> labels_;
  std::vector<std::size_t> parent_;
  std::vector<std::uint32_t> offspring_;
  std::vector<std::size_t> first_child_;
  std::size_t depth_cap_ = 0;
  std::size_t width_cap_ = 0;
};

// UGW(rho): root offspring from rho, every later vertex from hat-rho, counts
// clamped at width_cap, vertices at depth_cap get no children.
SampledTree sample_ugw(const OffspringLaw& rho, std::size_t depth_cap, std::size_t width_cap,
                       std::uint64_t seed);

// Simple undirected graph on {0, ..., n-1}.
class FiniteGraph {
 public:
  FiniteGraph() = default;
  // Rejects self-loops, duplicate edges and out-of-range endpoints.
  static FiniteGraph from_edges(std::size_t n,
                                std::span<const std::pair<std::size_t, std::size_t>> edges);
  static FiniteGraph complete(std::size_t n);
  static FiniteGraph path(std::size_t n);
  static FiniteGraph empty(std::size_t n);

  std::size_t size() const noexcept { return adjacency_.size(); }
  std::size_t edge_count() const noexcept { return adjacency_.edge_count(); }
  std::span<const std::size_t> neighbors(std::size_t v) const { return adjacency_.neighbors(v); }
  std::size_t degree(std::size_t v) const { return adjacency_.degree(v); }
  bool has_edge(std::size_t u, std::size_t v) const;
  const Adjacency& adjacency() const noexcept { return adjacency_; }

  bool operator==(const FiniteGraph& other) const {
    return adjacency_.offsets == other.adjacency_.offsets &&
           adjacency_.targets == other.adjacency_.targets;
  }

 private:
  explicit FiniteGraph(Adjacency adjacency) : adjacency_(std::move(adjacency)) {}
  Adjacency adjacency_;
};

FiniteGraph sample_erdos_renyi(std::size_t n, double p, std::uint64_t seed);

// Pairing model with rejection of loops and multi-edges. After 100 rejected
// full pairings it switches to sequential stub matching with restarts.
FiniteGraph sample_regular(std::size_t n, std::size_t kappa, std::uint64_t seed);

struct ConfigurationModelStats {
  std::size_t stubs = 0;
  std::size_t erased_stubs = 0;  // stubs lost to self-loops and duplicate edges
};

// Erased configuration model: uniform stub pairing, loops and repeated edges dropped.
FiniteGraph sample_configuration_model(std::size_t n, std::span<const std::size_t> degrees,
                                       std::uint64_t seed,
                                       ConfigurationModelStats* stats = nullptr);

// Vertices at distance exactly 1 (order 1) or 1..2 (order 2) from `vertices`.
std::vector<std::size_t> boundary(const Adjacency& graph, std::span<const std::size_t> vertices,
                                  int order);

// Line-oriented text formats:
//   trees:  "<label>\t<offspring_count>" per vertex, BFS order
//   graphs: "<vertex>\t<n1>,<n2>,..." per vertex (empty list allowed)
void write_tree(std::ostream& out, const SampledTree& tree);
SampledTree read_tree(std::istream& in);
void write_graph(std::ostream& out, const FiniteGraph& graph);
FiniteGraph read_graph(std::istream& in);

}  // namespace ugw

#endif  // UGW_TOPOLOGY_HPP_
