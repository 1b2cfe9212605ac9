#include "pushlearn/graph.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>

#include "pushlearn/error.hpp"

namespace pushlearn {
namespace {

bool all_reachable(int n, const std::vector<std::vector<int>>& adjacency) {
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int w : adjacency[v]) {
      if (!seen[w]) {
        seen[w] = 1;
        ++count;
        stack.push_back(w);
      }
    }
  }
  return count == n;
}

}  // namespace

DirectedGraph DirectedGraph::build(int n, std::vector<Edge> edges) {
  if (n < 2) {
    throw Error(ErrorCode::TooFewNodes, "graph needs at least 2 nodes, got " + std::to_string(n));
  }
  for (const Edge& e : edges) {
    if (e.from < 0 || e.from >= n || e.to < 0 || e.to >= n) {
      throw Error(ErrorCode::NodeOutOfRange, "edge (" + std::to_string(e.from) + ", " +
                                                 std::to_string(e.to) + ") with n=" +
                                                 std::to_string(n));
    }
    if (e.from == e.to) {
      throw Error(ErrorCode::SelfLoop, "self-loop at node " + std::to_string(e.from));
    }
  }
  std::sort(edges.begin(), edges.end());
  if (auto dup = std::adjacent_find(edges.begin(), edges.end()); dup != edges.end()) {
    throw Error(ErrorCode::DuplicateEdge, "edge (" + std::to_string(dup->from) + ", " +
                                              std::to_string(dup->to) + ") listed twice");
  }

  DirectedGraph g;
  g.n_ = n;
  g.edges_ = std::move(edges);
  g.out_.resize(n);
  g.in_.resize(n);
  g.out_edges_.resize(n);
  g.in_edges_.resize(n);
  for (std::size_t k = 0; k < g.edges_.size(); ++k) {
    const Edge& e = g.edges_[k];
    g.out_[e.from].push_back(e.to);
    g.in_[e.to].push_back(e.from);
    g.out_edges_[e.from].push_back(k);
    g.in_edges_[e.to].push_back(k);
  }
  if (!all_reachable(n, g.out_) || !all_reachable(n, g.in_)) {
    throw Error(ErrorCode::NotStronglyConnected,
                "some node cannot reach every other node along directed edges");
  }
  return g;
}

std::optional<std::size_t> DirectedGraph::edge_index(int from, int to) const {
  const Edge key{from, to};
  auto it = std::lower_bound(edges_.begin(), edges_.end(), key);
  if (it == edges_.end() || *it != key) return std::nullopt;
  return static_cast<std::size_t>(it - edges_.begin());
}

DirectedGraph DirectedGraph::reversed() const {
  std::vector<Edge> flipped;
  flipped.reserve(edges_.size());
  for (const Edge& e : edges_) flipped.push_back({e.to, e.from});
  return build(n_, std::move(flipped));
}

std::optional<Topology> parse_topology(std::string_view name) {
  if (name == "path") return Topology::Path;
  if (name == "star") return Topology::Star;
  if (name == "cycle") return Topology::Cycle;
  return std::nullopt;
}

std::string_view to_string(Topology kind) {
  switch (kind) {
    case Topology::Path: return "path";
    case Topology::Star: return "star";
    case Topology::Cycle: return "cycle";
  }
  return "unknown";
}

DirectedGraph standard_topology(Topology kind, int n) {
  if (n < 2) {
    throw Error(ErrorCode::TooFewNodes,
                std::string(to_string(kind)) + " needs n >= 2, got " + std::to_string(n));
  }
  std::vector<Edge> edges;
  switch (kind) {
    case Topology::Path:
      for (int i = 0; i + 1 < n; ++i) {
        edges.push_back({i, i + 1});
        edges.push_back({i + 1, i});
      }
      break;
    case Topology::Star:
      for (int i = 1; i < n; ++i) {
        edges.push_back({0, i});
        edges.push_back({i, 0});
      }
      break;
    case Topology::Cycle:
      for (int i = 0; i < n; ++i) edges.push_back({i, (i + 1) % n});
      break;
  }
  return DirectedGraph::build(n, std::move(edges));
}

DirectedGraph read_graph(std::istream& in) {
  std::string line;
  std::optional<int> n;
  std::vector<Edge> edges;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    if (!n) {
      if (line.compare(first, 2, "n=") != 0) {
        throw Error(ErrorCode::TraceFormat, "graph file line " + std::to_string(line_no) +
                                                ": expected n=<count>");
      }
      try {
        n = std::stoi(line.substr(first + 2));
      } catch (const std::exception&) {
        throw Error(ErrorCode::TraceFormat, "graph file: bad node count");
      }
      continue;
    }
    std::istringstream row(line);
    Edge e;
    if (!(row >> e.from >> e.to)) {
      throw Error(ErrorCode::TraceFormat,
                  "graph file line " + std::to_string(line_no) + ": expected 'i j'");
    }
    edges.push_back(e);
  }
  if (!n) throw Error(ErrorCode::TraceFormat, "graph file: missing n=<count> header");
  return DirectedGraph::build(*n, std::move(edges));
}

void write_graph(std::ostream& out, const DirectedGraph& graph) {
  out << "n=" << graph.size() << '\n';
  for (const Edge& e : graph.edges()) out << e.from << ' ' << e.to << '\n';
}

}  // namespace pushlearn
