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

#include "ugw/topology.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <set>
#include <unordered_set>

#include "ugw/error.hpp"
#include "ugw/rng.hpp"

namespace ugw {
namespace {

constexpr std::uint64_t kUgwStream = 0x5547575452454531ULL;
constexpr std::uint64_t kErStream = 0x4552444f53524e59ULL;
constexpr std::uint64_t kRegularStream = 0x5245475041495253ULL;
constexpr std::uint64_t kConfigStream = 0x434f4e4649474d44ULL;
constexpr int kFullPairingAttempts = 100;
constexpr int kSequentialRestarts = 1000;

std::uint64_t edge_key(std::size_t u, std::size_t v) {
  if (u > v) std::swap(u, v);
  return (static_cast<std::uint64_t>(u) << 32) | static_cast<std::uint64_t>(v);
}

template <typename Rng>
void shuffle(std::vector<std::size_t>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = rng.below(i);
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// UhnLabel

UhnLabel::UhnLabel(std::vector<std::uint32_t> digits) : digits_(std::move(digits)) {
  for (auto d : digits_) require(d >= 1, ErrorKind::kInvalidArgument, "label digits must be >= 1");
}

UhnLabel UhnLabel::parse(std::string_view text) {
  if (text == "o") return root();
  std::vector<std::uint32_t> digits;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t dot = text.find('.', pos);
    const std::string_view part = text.substr(pos, dot == std::string_view::npos ? text.npos : dot - pos);
    require(!part.empty() && part.find_first_not_of("0123456789") == std::string_view::npos,
            ErrorKind::kInvalidArgument, "malformed label '" + std::string(text) + "'");
    digits.push_back(static_cast<std::uint32_t>(std::stoul(std::string(part))));
    if (dot == std::string_view::npos) break;
    pos = dot + 1;
  }
  return UhnLabel(std::move(digits));
}

UhnLabel UhnLabel::child(std::uint32_t k) const {
  require(k >= 1, ErrorKind::kInvalidArgument, "child index must be >= 1");
  auto digits = digits_;
  digits.push_back(k);
  return UhnLabel(std::move(digits));
}

UhnLabel UhnLabel::parent() const {
  require(!is_root(), ErrorKind::kInvalidArgument, "the root has no parent");
  return UhnLabel(std::vector<std::uint32_t>(digits_.begin(), digits_.end() - 1));
}

UhnLabel UhnLabel::concat(const UhnLabel& suffix) const {
  auto digits = digits_;
  digits.insert(digits.end(), suffix.digits_.begin(), suffix.digits_.end());
  return UhnLabel(std::move(digits));
}

bool UhnLabel::is_prefix_of(const UhnLabel& other) const noexcept {
  return digits_.size() <= other.digits_.size() &&
         std::equal(digits_.begin(), digits_.end(), other.digits_.begin());
}

std::string UhnLabel::str() const {
  if (is_root()) return "o";
  std::string out;
  for (std::size_t i = 0; i < digits_.size(); ++i) {
    if (i) out.push_back('.');
    out += std::to_string(digits_[i]);
  }
  return out;
}

std::uint64_t UhnLabel::hash() const noexcept {
  std::uint64_t h = 0x4c41424c524f4f54ULL;
  for (auto d : digits_) h = rng::mix(h, d);
  return rng::mix(h, digits_.size());
}

// ---------------------------------------------------------------------------
// OffspringLaw

OffspringLaw OffspringLaw::from_pmf(std::vector<double> masses, std::size_t cap) {
  require(!masses.empty(), ErrorKind::kInvalidLaw, "empty pmf");
  for (double m : masses)
    require(std::isfinite(m) && m >= 0.0, ErrorKind::kInvalidLaw, "pmf masses must be finite and >= 0");
  if (masses.size() > cap + 1) masses.resize(cap + 1);
  while (masses.size() > 1 && masses.back() == 0.0) masses.pop_back();
  const double total = std::accumulate(masses.begin(), masses.end(), 0.0);
  require(total > 0.0, ErrorKind::kInvalidLaw, "pmf has zero total mass");
  OffspringLaw law;
  law.renormalized_mass_ = std::abs(1.0 - total);
  law.pmf_.resize(masses.size());
  for (std::size_t k = 0; k < masses.size(); ++k) law.pmf_[k] = masses[k] / total;
  law.cdf_.resize(law.pmf_.size());
  std::partial_sum(law.pmf_.begin(), law.pmf_.end(), law.cdf_.begin());
  return law;
}

OffspringLaw OffspringLaw::dirac(std::size_t k) {
  std::vector<double> masses(k + 1, 0.0);
  masses[k] = 1.0;
  return from_pmf(std::move(masses), std::max(k, kDefaultCap));
}

OffspringLaw OffspringLaw::poisson(double mean, std::size_t cap) {
  require(std::isfinite(mean) && mean > 0.0, ErrorKind::kInvalidLaw, "Poisson mean must be positive");
  std::vector<double> masses(cap + 1);
  for (std::size_t k = 0; k <= cap; ++k)
    masses[k] = std::exp(-mean + static_cast<double>(k) * std::log(mean) -
                         std::lgamma(static_cast<double>(k) + 1.0));
  return from_pmf(std::move(masses), cap);
}

double OffspringLaw::mean() const noexcept {
  double m = 0.0;
  for (std::size_t k = 1; k < pmf_.size(); ++k) m += static_cast<double>(k) * pmf_[k];
  return m;
}

double OffspringLaw::second_moment() const noexcept {
  double m = 0.0;
  for (std::size_t k = 1; k < pmf_.size(); ++k) m += static_cast<double>(k * k) * pmf_[k];
  return m;
}

std::size_t OffspringLaw::quantile(double u) const noexcept {
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  std::size_t k = static_cast<std::size_t>(it - cdf_.begin());
  if (k >= pmf_.size()) k = pmf_.size() - 1;
  // The cdf may end a few ulps short of 1; never land on a zero-mass atom.
  while (pmf_[k] == 0.0 && k > 0) --k;
  return k;
}

OffspringLaw size_biased(const OffspringLaw& rho) {
  const double m = rho.mean();
  require(m > 0.0, ErrorKind::kInvalidLaw, "size-biasing needs a nonzero first moment");
  const auto pmf = rho.pmf();
  std::vector<double> masses(pmf.size() - 1);
  for (std::size_t k = 0; k + 1 < pmf.size(); ++k)
    masses[k] = static_cast<double>(k + 1) * pmf[k + 1] / m;
  return OffspringLaw::from_pmf(std::move(masses), std::max(rho.cap(), OffspringLaw::kDefaultCap));
}

// ---------------------------------------------------------------------------
// Adjacency / trees

Adjacency Adjacency::from_lists(const std::vector<std::vector<std::size_t>>& lists) {
  Adjacency adj;
  adj.offsets.reserve(lists.size() + 1);
  for (const auto& list : lists) {
    const std::size_t start = adj.targets.size();
    adj.targets.insert(adj.targets.end(), list.begin(), list.end());
    std::sort(adj.targets.begin() + static_cast<std::ptrdiff_t>(start), adj.targets.end());
    adj.offsets.push_back(adj.targets.size());
  }
  return adj;
}

SampledTree SampledTree::from_offspring_counts(std::span<const std::uint32_t> counts,
                                               std::size_t depth_cap, std::size_t width_cap) {
  require(!counts.empty(), ErrorKind::kInvalidArgument, "a tree has at least the root");
  SampledTree tree;
  tree.depth_cap_ = depth_cap;
  tree.width_cap_ = width_cap;
  tree.labels_.push_back(UhnLabel::root());
  tree.parent_.push_back(kNoParent);
  for (std::size_t v = 0; v < tree.labels_.size(); ++v) {
    require(v < counts.size(), ErrorKind::kInvalidArgument, "offspring counts end before the tree does");
    const std::uint32_t c = counts[v];
    require(c <= width_cap, ErrorKind::kInvalidArgument, "offspring count exceeds width cap");
    require(c == 0 || tree.labels_[v].depth() < depth_cap, ErrorKind::kInvalidArgument,
            "vertex beyond depth cap has children");
    tree.offspring_.push_back(c);
    tree.first_child_.push_back(tree.labels_.size());
    for (std::uint32_t k = 1; k <= c; ++k) {
      tree.labels_.push_back(tree.labels_[v].child(k));
      tree.parent_.push_back(v);
    }
  }
  require(counts.size() == tree.labels_.size(), ErrorKind::kInvalidArgument,
          "more offspring counts than tree vertices");
  return tree;
}

std::optional<std::size_t> SampledTree::find(const UhnLabel& label) const {
  std::size_t v = 0;
  for (auto digit : label.digits()) {
    if (digit > offspring_[v]) return std::nullopt;
    v = first_child_[v] + digit - 1;
  }
  return v;
}

Adjacency SampledTree::adjacency() const {
  Adjacency adj;
  adj.offsets.reserve(size() + 1);
  adj.targets.reserve(2 * size());
  for (std::size_t v = 0; v < size(); ++v) {
    if (parent_[v] != kNoParent) adj.targets.push_back(parent_[v]);
    for (std::uint32_t k = 0; k < offspring_[v]; ++k) adj.targets.push_back(first_child_[v] + k);
    adj.offsets.push_back(adj.targets.size());
  }
  return adj;
}

SampledTree sample_ugw(const OffspringLaw& rho, std::size_t depth_cap, std::size_t width_cap,
                       std::uint64_t seed) {
  require(depth_cap >= 1 && width_cap >= 1, ErrorKind::kInvalidArgument, "tree caps must be >= 1");
  // hat-rho is only needed once the root has children, which needs a positive mean.
  std::optional<OffspringLaw> hat;
  if (rho.mean() > 0.0) hat = size_biased(rho);

  rng::Engine engine(seed, kUgwStream);
  std::vector<std::uint32_t> counts;
  std::vector<std::size_t> depths{0};
  for (std::size_t v = 0; v < depths.size(); ++v) {
    std::size_t c = 0;
    if (depths[v] < depth_cap) {
      const double u = engine.uniform();
      c = v == 0 ? rho.quantile(u) : hat->quantile(u);
      c = std::min(c, width_cap);
    }
    counts.push_back(static_cast<std::uint32_t>(c));
    depths.insert(depths.end(), c, depths[v] + 1);
  }
  return SampledTree::from_offspring_counts(counts, depth_cap, width_cap);
}

// ---------------------------------------------------------------------------
// Finite graphs

FiniteGraph FiniteGraph::from_edges(std::size_t n,
                                    std::span<const std::pair<std::size_t, std::size_t>> edges) {
  std::vector<std::vector<std::size_t>> lists(n);
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(edges.size() * 2);
  for (auto [u, v] : edges) {
    require(u < n && v < n, ErrorKind::kInvalidArgument, "edge endpoint out of range");
    require(u != v, ErrorKind::kInvalidArgument, "self-loop");
    require(seen.insert(edge_key(u, v)).second, ErrorKind::kInvalidArgument, "duplicate edge");
    lists[u].push_back(v);
    lists[v].push_back(u);
  }
  return FiniteGraph(Adjacency::from_lists(lists));
}

FiniteGraph FiniteGraph::complete(std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v) edges.emplace_back(u, v);
  return from_edges(n, edges);
}

FiniteGraph FiniteGraph::path(std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t v = 0; v + 1 < n; ++v) edges.emplace_back(v, v + 1);
  return from_edges(n, edges);
}

FiniteGraph FiniteGraph::empty(std::size_t n) { return from_edges(n, {}); }

bool FiniteGraph::has_edge(std::size_t u, std::size_t v) const {
  const auto nb = neighbors(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

FiniteGraph sample_erdos_renyi(std::size_t n, double p, std::uint64_t seed) {
  require(p >= 0.0 && p <= 1.0, ErrorKind::kInvalidArgument, "edge probability must lie in [0, 1]");
  if (p == 0.0) return FiniteGraph::empty(n);
  if (p == 1.0) return FiniteGraph::complete(n);
  // Geometric skipping over the pairs (v, w), w < v (Batagelj and Brandes).
  rng::Engine engine(seed, kErStream);
  const double log_q = std::log1p(-p);
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::int64_t v = 1;
  std::int64_t w = -1;
  const auto nn = static_cast<std::int64_t>(n);
  while (v < nn) {
    const double skip = std::floor(std::log1p(-engine.uniform()) / log_q);
    w += 1 + static_cast<std::int64_t>(std::min(skip, 9.0e15));
    while (w >= v && v < nn) {
      w -= v;
      ++v;
    }
    if (v < nn) edges.emplace_back(static_cast<std::size_t>(w), static_cast<std::size_t>(v));
  }
  return FiniteGraph::from_edges(n, edges);
}

FiniteGraph sample_regular(std::size_t n, std::size_t kappa, std::uint64_t seed) {
  require((n * kappa) % 2 == 0, ErrorKind::kInvalidArgument, "n * kappa must be even");
  require(n >= kappa + 1, ErrorKind::kInvalidArgument, "need n >= kappa + 1");
  rng::Engine engine(seed, kRegularStream);
  std::vector<std::size_t> stubs;
  stubs.reserve(n * kappa);
  for (std::size_t v = 0; v < n; ++v) stubs.insert(stubs.end(), kappa, v);

  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::unordered_set<std::uint64_t> seen;
  for (int attempt = 0; attempt < kFullPairingAttempts; ++attempt) {
    shuffle(stubs, engine);
    edges.clear();
    seen.clear();
    bool ok = true;
    for (std::size_t i = 0; i < stubs.size() && ok; i += 2) {
      const std::size_t u = stubs[i], v = stubs[i + 1];
      ok = u != v && seen.insert(edge_key(u, v)).second;
      edges.emplace_back(u, v);
    }
    if (ok) return FiniteGraph::from_edges(n, edges);
  }

  // Sequential matching: repeatedly pair a random open stub with a random
  // admissible partner; restart from scratch when no partner exists.
  for (int restart = 0; restart < kSequentialRestarts; ++restart) {
    std::vector<std::size_t> open = stubs;
    edges.clear();
    seen.clear();
    bool stuck = false;
    while (!open.empty() && !stuck) {
      const std::size_t i = engine.below(open.size());
      std::swap(open[i], open.back());
      const std::size_t u = open.back();
      open.pop_back();
      std::vector<std::size_t> admissible;
      for (std::size_t j = 0; j < open.size(); ++j)
        if (open[j] != u && !seen.contains(edge_key(u, open[j]))) admissible.push_back(j);
      if (admissible.empty()) {
        stuck = true;
        break;
      }
      const std::size_t j = admissible[engine.below(admissible.size())];
      const std::size_t v = open[j];
      std::swap(open[j], open.back());
      open.pop_back();
      seen.insert(edge_key(u, v));
      edges.emplace_back(u, v);
    }
    if (!stuck) return FiniteGraph::from_edges(n, edges);
  }
  fail(ErrorKind::kRetryExhausted, "random regular graph: pairing budget exhausted");
}

FiniteGraph sample_configuration_model(std::size_t n, std::span<const std::size_t> degrees,
                                       std::uint64_t seed, ConfigurationModelStats* stats) {
  require(degrees.size() == n, ErrorKind::kInvalidArgument, "degree sequence length must equal n");
  const std::size_t total = std::accumulate(degrees.begin(), degrees.end(), std::size_t{0});
  require(total % 2 == 0, ErrorKind::kInvalidArgument, "degree sum must be even");
  rng::Engine engine(seed, kConfigStream);
  std::vector<std::size_t> stubs;
  stubs.reserve(total);
  for (std::size_t v = 0; v < n; ++v) stubs.insert(stubs.end(), degrees[v], v);
  shuffle(stubs, engine);
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::unordered_set<std::uint64_t> seen;
  std::size_t erased = 0;
  for (std::size_t i = 0; i < stubs.size(); i += 2) {
    const std::size_t u = stubs[i], v = stubs[i + 1];
    if (u == v || !seen.insert(edge_key(u, v)).second) {
      erased += 2;
      continue;
    }
    edges.emplace_back(u, v);
  }
  if (stats) *stats = {total, erased};
  return FiniteGraph::from_edges(n, edges);
}

std::vector<std::size_t> boundary(const Adjacency& graph, std::span<const std::size_t> vertices,
                                  int order) {
  require(order == 1 || order == 2, ErrorKind::kInvalidArgument, "boundary order must be 1 or 2");
  constexpr int kUnseen = -1;
  std::vector<int> distance(graph.size(), kUnseen);
  std::vector<std::size_t> frontier;
  for (auto v : vertices) {
    require(v < graph.size(), ErrorKind::kInvalidArgument, "vertex out of range");
    if (distance[v] == kUnseen) {
      distance[v] = 0;
      frontier.push_back(v);
    }
  }
  std::vector<std::size_t> result;
  for (int level = 1; level <= order; ++level) {
    std::vector<std::size_t> next;
    for (auto u : frontier)
      for (auto w : graph.neighbors(u))
        if (distance[w] == kUnseen) {
          distance[w] = level;
          next.push_back(w);
          result.push_back(w);
        }
    frontier = std::move(next);
  }
  std::sort(result.begin(), result.end());
  return result;
}

}  // namespace ugw
