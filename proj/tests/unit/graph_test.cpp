#include <doctest.h>

#include <sstream>

#include "pushlearn/error.hpp"
#include "pushlearn/graph.hpp"

using namespace pushlearn;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::ConfigError;
}

std::vector<Edge> edges_of(const DirectedGraph& g) { return {g.edges().begin(), g.edges().end()}; }

}  // namespace

TEST_CASE("two nodes, both directions") {
  const auto g = DirectedGraph::build(2, {{0, 1}, {1, 0}});
  CHECK(g.size() == 2);
  CHECK(g.out_degree(0) == 1);
  CHECK(g.out_degree(1) == 1);
}

TEST_CASE("directed 4-cycle has unit out-degrees") {
  const auto g = DirectedGraph::build(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}});
  for (int i = 0; i < 4; ++i) CHECK(g.out_degree(i) == 1);
}

TEST_CASE("validation errors") {
  CHECK(code_of([] { DirectedGraph::build(3, {{0, 1}, {1, 2}}); }) ==
        ErrorCode::NotStronglyConnected);
  CHECK(code_of([] { DirectedGraph::build(2, {{0, 1}, {1, 0}, {1, 1}}); }) == ErrorCode::SelfLoop);
  CHECK(code_of([] { DirectedGraph::build(2, {{0, 1}, {1, 0}, {0, 1}}); }) ==
        ErrorCode::DuplicateEdge);
  CHECK(code_of([] { DirectedGraph::build(2, {{0, 2}, {1, 0}}); }) == ErrorCode::NodeOutOfRange);
  CHECK(code_of([] { standard_topology(Topology::Star, 1); }) == ErrorCode::TooFewNodes);
}

TEST_CASE("standard topologies") {
  CHECK(edges_of(standard_topology(Topology::Star, 4)) ==
        std::vector<Edge>{{0, 1}, {0, 2}, {0, 3}, {1, 0}, {2, 0}, {3, 0}});
  CHECK(edges_of(standard_topology(Topology::Cycle, 4)) ==
        std::vector<Edge>{{0, 1}, {1, 2}, {2, 3}, {3, 0}});
  CHECK(edges_of(standard_topology(Topology::Path, 2)) == std::vector<Edge>{{0, 1}, {1, 0}});
  CHECK(edges_of(standard_topology(Topology::Cycle, 2)) == std::vector<Edge>{{0, 1}, {1, 0}});
  CHECK(edges_of(standard_topology(Topology::Path, 4)) ==
        std::vector<Edge>{{0, 1}, {1, 0}, {1, 2}, {2, 1}, {2, 3}, {3, 2}});
}

TEST_CASE("every standard topology revalidates, and so does its reverse") {
  for (Topology kind : {Topology::Path, Topology::Star, Topology::Cycle}) {
    for (int n = 2; n <= 10; ++n) {
      const auto g = standard_topology(kind, n);
      const auto rebuilt = DirectedGraph::build(n, edges_of(g));
      CHECK(edges_of(rebuilt) == edges_of(g));
      const auto r = g.reversed();
      CHECK(r.edge_count() == g.edge_count());
      for (const Edge& e : g.edges()) CHECK(r.edge_index(e.to, e.from).has_value());
    }
  }
}

TEST_CASE("adjacency agrees with the edge list") {
  const auto g = standard_topology(Topology::Star, 5);
  CHECK(g.out_degree(0) == 4);
  CHECK(g.in_neighbors(0).size() == 4);
  for (std::size_t e = 0; e < g.edge_count(); ++e) {
    const Edge link = g.edges()[e];
    CHECK(g.edge_index(link.from, link.to) == e);
  }
  CHECK_FALSE(g.edge_index(1, 2).has_value());
}

TEST_CASE("topology names") {
  CHECK(parse_topology("star") == Topology::Star);
  CHECK(parse_topology("path") == Topology::Path);
  CHECK(parse_topology("cycle") == Topology::Cycle);
  CHECK_FALSE(parse_topology("ring").has_value());
  CHECK(to_string(Topology::Cycle) == "cycle");
}

TEST_CASE("graph file round trip") {
  std::istringstream in("n=3\n# ring\n0 1\n1 2\n\n2 0\n");
  const auto g = read_graph(in);
  CHECK(g.size() == 3);
  CHECK(edges_of(g) == std::vector<Edge>{{0, 1}, {1, 2}, {2, 0}});
  std::ostringstream out;
  write_graph(out, g);
  std::istringstream back(out.str());
  CHECK(edges_of(read_graph(back)) == edges_of(g));

  std::istringstream broken("n=3\n0 1\n1 2\n");
  CHECK(code_of([&] { read_graph(broken); }) == ErrorCode::NotStronglyConnected);
}
