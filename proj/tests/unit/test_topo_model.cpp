#include <doctest.h>

#include <set>

#include "helpers.hpp"
#include "toporag/error.hpp"
#include "toporag/io.hpp"
#include "toporag/synthetic.hpp"
#include "toporag/topo_model.hpp"

using namespace toporag;

namespace {

Errc error_code(const std::string& text) {
  try {
    parse_topology(text, "t");
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::InvalidArgument;
}

}  // namespace

TEST_CASE("two-router fixture parses into a single edge") {
  const TopologyDoc doc = parse_topology(read_text_file(testutil::fixtures() / "two_router.json"));
  CHECK(doc.case_id == "two_router");
  CHECK(doc.device_order() == std::vector<std::string>{"r1", "r2"});
  CHECK(doc.interfaces_of("r1") == std::vector<std::string>{"eth0"});
  const TopologyGraph g = build_graph(doc);
  CHECK(g.num_nodes() == 2);
  CHECK(g.num_edges() == 1);
  CHECK(g.max_degree() == 1);
  CHECK(g.features(0, kIsRouter) == 1.0);
  CHECK(g.features(0, kDegree) == 1.0);
  CHECK(g.features(0, kConfigCount) == 1.0);
}

TEST_CASE("routers come before switches and features follow device order") {
  const TopologyDoc doc = parse_topology(R"({"case_id":"m","routers":{"rb":{},"ra":{"x":1,"y":2}},
    "switches":{"s1":{}},"links":[{"a":"s1","a_if":"p1","b":"rb","b_if":"e0"},
    {"a":"ra","a_if":"e0","b":"rb","b_if":"e1"},{"a":"ra","a_if":"e1","b":"rb","b_if":"e2"}]})");
  CHECK(doc.device_order() == std::vector<std::string>{"ra", "rb", "s1"});
  CHECK(doc.device_rank("s1") == 2);
  CHECK(doc.device_rank("zz") == -1);
  const TopologyGraph g = build_graph(doc);
  // parallel links collapse into one edge
  CHECK(g.edges == std::vector<std::pair<int, int>>{{0, 1}, {1, 2}});
  CHECK(g.features(0, kConfigCount) == 2.0);
  CHECK(g.features(2, kIsSwitch) == 1.0);
  CHECK(g.features(1, kDegree) == 2.0);
  CHECK(g.max_degree() == 2);
}

TEST_CASE("malformed topologies are rejected with specific codes") {
  CHECK(error_code("[1,2]") == Errc::MalformedJson);
  CHECK(error_code("{not json") == Errc::MalformedJson);
  CHECK(error_code(R"({"routers":{"r1":{}},"links":[{"a":"r1","a_if":"e0","b":"r9","b_if":"e0"}]})") ==
        Errc::UnknownLinkEndpoint);
  CHECK(error_code(R"({"routers":{"r1":{},"r2":{},"r3":{}},"links":[{"a":"r1","a_if":"e0","b":"r2","b_if":"e0"},
    {"a":"r1","a_if":"e0","b":"r3","b_if":"e0"}]})") == Errc::DuplicateInterface);
  CHECK(error_code(R"({"case_id":"../x","routers":{}})") == Errc::MalformedJson);
  CHECK(error_code(R"({"routers":{"a":{}},"switches":{"a":{}}})") == Errc::MalformedJson);
}

TEST_CASE("topojson-style nested links are imported") {
  const TopologyDoc doc = parse_topology(R"({"routers":{"r1":{"links":{"lo":{},"r2":{},"s1":{}}},
    "r2":{"links":{"r1":{}}}},"switches":{"s1":{"links":{"r1":{}}}}})", "nested");
  CHECK(doc.case_id == "nested");
  REQUIRE(doc.links.size() == 2);
  const TopologyGraph g = build_graph(doc);
  CHECK(g.num_edges() == 2);
  // the nested links map is structure, not configuration
  CHECK(g.features(0, kConfigCount) == 0.0);
}

TEST_CASE("topology JSON round-trips") {
  const TopologyDoc doc = parse_topology(read_text_file(testutil::fixtures() / "corpus/q_switched/topology.json"));
  const TopologyDoc again = parse_topology(topology_to_json(doc).dump());
  CHECK(again.links == doc.links);
  CHECK(again.device_order() == doc.device_order());
}

TEST_CASE("canonical links put the lower-ranked endpoint first") {
  const TopologyDoc doc = parse_topology(R"({"case_id":"c","routers":{"r1":{},"r2":{}},"switches":{"s1":{}},
    "links":[{"a":"s1","a_if":"p","b":"r2","b_if":"e1"},{"a":"r2","a_if":"e0","b":"r1","b_if":"e0"}]})");
  const auto links = canonical_links(doc);
  REQUIRE(links.size() == 2);
  CHECK(links[0] == Link{"r1", "e0", "r2", "e0"});
  CHECK(links[1] == Link{"r2", "e1", "s1", "p"});
}

TEST_CASE("induced subgraph keeps surviving edges and recomputes degree") {
  Rng rng(3);
  const TopologyGraph g = testutil::random_graph(rng, 6, 0.6);
  const std::vector<int> kept = {0, 2, 3, 5};
  const TopologyGraph sub = induced_subgraph(g, kept, g.edges);
  CHECK(sub.num_nodes() == 4);
  for (const auto& [u, v] : sub.edges) CHECK(u < v);
  for (Eigen::Index i = 0; i < sub.features.rows(); ++i) {
    int degree = 0;
    for (const auto& [u, v] : sub.edges) degree += (u == i) + (v == i);
    CHECK(sub.features(i, kDegree) == degree);
  }
}

TEST_CASE("splits are disjoint, sized and seed-stable") {
  std::vector<std::string> ids;
  std::set<std::string> verified;
  for (int i = 0; i < 40; ++i) {
    ids.push_back("c" + std::to_string(i));
    if (i % 5 == 0) verified.insert(ids.back());
  }
  const SplitSizes sizes{5, 10, 6, 7};
  const SplitManifest m = make_splits(ids, verified, sizes, 11);
  CHECK(m.val_ids.size() == 5);
  CHECK(m.test_ids.size() == 10);
  CHECK(m.train_ids.size() == 40 - 8 - 15);
  CHECK(m.reference_ids.size() == 6);
  CHECK(m.query_ids.size() == 7);
  for (const auto& id : m.query_ids) CHECK(m.test_ids.count(id) == 1);
  for (const auto& id : m.reference_ids) CHECK(verified.count(id) == 1);
  std::set<std::string> all;
  for (const auto* s : {&m.train_ids, &m.val_ids, &m.test_ids}) {
    for (const auto& id : *s) {
      CHECK(verified.count(id) == 0);
      CHECK(all.insert(id).second);
    }
  }
  CHECK(make_splits(ids, verified, sizes, 11) == m);
  CHECK(SplitManifest::from_json(m.to_json()) == m);
  CHECK_FALSE(make_splits(ids, verified, sizes, 12) == m);

  CHECK_THROWS_AS(make_splits(ids, verified, SplitSizes{20, 20, 1, 1}, 1), Error);
  CHECK_THROWS_AS(make_splits(ids, verified, SplitSizes{1, 1, 9, 1}, 1), Error);
  CHECK_THROWS_AS(make_splits(ids, verified, SplitSizes{1, 2, 1, 3}, 1), Error);
}

TEST_CASE("synthetic families have their defining degree profile") {
  const auto corpus = make_family_corpus(30, 5);
  REQUIRE(corpus.size() == 30);
  for (const auto& c : corpus) {
    const TopologyGraph g = build_graph(c.doc);
    const auto n = static_cast<int>(g.num_nodes());
    CHECK(n >= 4);
    CHECK(n <= 12);
    switch (c.family) {
      case TopologyFamily::Ring:
        CHECK(g.num_edges() == static_cast<std::size_t>(n));
        CHECK(g.max_degree() == 2);
        break;
      case TopologyFamily::Star:
        CHECK(g.num_edges() == static_cast<std::size_t>(n - 1));
        CHECK(g.max_degree() == n - 1);
        break;
      case TopologyFamily::Chain:
        CHECK(g.num_edges() == static_cast<std::size_t>(n - 1));
        CHECK(g.max_degree() == 2);
        break;
    }
  }
  CHECK(make_family_corpus(30, 5)[7].doc.links == corpus[7].doc.links);
}
