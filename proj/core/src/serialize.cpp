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

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "ugw/error.hpp"
#include "ugw/topology.hpp"

namespace ugw {
namespace {

bool next_data_line(std::istream& in, std::string& line, std::string* header) {
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (header) *header += line.substr(1) + " ";
      continue;
    }
    return true;
  }
  return false;
}

std::size_t header_value(const std::string& header, const std::string& key, std::size_t fallback) {
  const auto pos = header.find(key + "=");
  if (pos == std::string::npos) return fallback;
  return std::stoul(header.substr(pos + key.size() + 1));
}

}  // namespace

void write_tree(std::ostream& out, const SampledTree& tree) {
  out << "# depth_cap=" << tree.depth_cap() << " width_cap=" << tree.width_cap() << "\n";
  for (std::size_t v = 0; v < tree.size(); ++v)
    out << tree.label(v).str() << '\t' << tree.offspring(v) << '\n';
}

SampledTree read_tree(std::istream& in) {
  std::string line, header;
  std::vector<UhnLabel> labels;
  std::vector<std::uint32_t> counts;
  std::size_t max_depth = 0;
  std::uint32_t max_count = 0;
  while (next_data_line(in, line, &header)) {
    const auto tab = line.find('\t');
    require(tab != std::string::npos, ErrorKind::kIo, "tree line without tab: '" + line + "'");
    labels.push_back(UhnLabel::parse(line.substr(0, tab)));
    counts.push_back(static_cast<std::uint32_t>(std::stoul(line.substr(tab + 1))));
    max_depth = std::max(max_depth, labels.back().depth());
    max_count = std::max(max_count, counts.back());
  }
  require(!labels.empty(), ErrorKind::kIo, "empty tree file");
  const std::size_t depth_cap = header_value(header, "depth_cap", std::max<std::size_t>(1, max_depth));
  const std::size_t width_cap = header_value(header, "width_cap", std::max<std::uint32_t>(1, max_count));
  SampledTree tree = SampledTree::from_offspring_counts(counts, depth_cap, width_cap);
  for (std::size_t v = 0; v < tree.size(); ++v)
    require(tree.label(v) == labels[v], ErrorKind::kIo,
            "tree file is not in breadth-first order at '" + labels[v].str() + "'");
  return tree;
}

void write_graph(std::ostream& out, const FiniteGraph& graph) {
  for (std::size_t v = 0; v < graph.size(); ++v) {
    out << v << '\t';
    const auto nb = graph.neighbors(v);
    for (std::size_t i = 0; i < nb.size(); ++i) out << (i ? "," : "") << nb[i];
    out << '\n';
  }
}

FiniteGraph read_graph(std::istream& in) {
  std::string line;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::vector<std::vector<std::size_t>> listed;
  std::size_t n = 0;
  while (next_data_line(in, line, nullptr)) {
    const auto tab = line.find('\t');
    require(tab != std::string::npos, ErrorKind::kIo, "graph line without tab: '" + line + "'");
    const std::size_t v = std::stoul(line.substr(0, tab));
    require(v == n, ErrorKind::kIo, "graph vertices must be listed 0..n-1 in order");
    ++n;
    listed.emplace_back();
    std::stringstream list(line.substr(tab + 1));
    std::string item;
    while (std::getline(list, item, ',')) {
      if (item.empty()) continue;
      const std::size_t u = std::stoul(item);
      listed.back().push_back(u);
      if (v < u) edges.emplace_back(v, u);
    }
  }
  FiniteGraph graph = FiniteGraph::from_edges(n, edges);
  for (std::size_t v = 0; v < n; ++v) {
    std::sort(listed[v].begin(), listed[v].end());
    const auto nb = graph.neighbors(v);
    require(std::equal(nb.begin(), nb.end(), listed[v].begin(), listed[v].end()), ErrorKind::kIo,
            "graph file adjacency is not symmetric at vertex " + std::to_string(v));
  }
  return graph;
}

}  // namespace ugw
