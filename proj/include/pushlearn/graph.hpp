#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pushlearn {

/// Directed link: `from` sends to `to`.
struct Edge {
  int from = 0;
  int to = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Strongly connected digraph without self-loops. Immutable once built; edges
/// are kept sorted by (from, to) and addressed by their index in that order.
class DirectedGraph {
 public:
  /// Validates and builds. Throws Error{NodeOutOfRange, SelfLoop,
  /// DuplicateEdge, NotStronglyConnected, TooFewNodes}.
  static DirectedGraph build(int n, std::vector<Edge> edges);

  int size() const noexcept { return n_; }
  std::span<const Edge> edges() const noexcept { return edges_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }

  std::span<const int> out_neighbors(int i) const { return out_[i]; }
  std::span<const int> in_neighbors(int i) const { return in_[i]; }
  /// Indices into edges() of the links leaving / entering node i.
  std::span<const std::size_t> out_edges(int i) const { return out_edges_[i]; }
  std::span<const std::size_t> in_edges(int i) const { return in_edges_[i]; }
  int out_degree(int i) const { return static_cast<int>(out_[i].size()); }

  std::optional<std::size_t> edge_index(int from, int to) const;

  /// Same node set with every edge reversed.
  DirectedGraph reversed() const;

 private:
  DirectedGraph() = default;

  int n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> out_;
  std::vector<std::vector<int>> in_;
  std::vector<std::vector<std::size_t>> out_edges_;
  std::vector<std::vector<std::size_t>> in_edges_;
};

enum class Topology { Path, Star, Cycle };

std::optional<Topology> parse_topology(std::string_view name);
std::string_view to_string(Topology kind);

/// Path and star are bidirectional; the cycle is the directed ring
/// 0 -> 1 -> ... -> n-1 -> 0. Node 0 is the star hub.
DirectedGraph standard_topology(Topology kind, int n);

/// Graph file: a line `n=<count>` followed by one `i j` pair per line
/// (0-based). Blank lines and lines starting with '#' are ignored.
DirectedGraph read_graph(std::istream& in);
void write_graph(std::ostream& out, const DirectedGraph& graph);

}  // namespace pushlearn
