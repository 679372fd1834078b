#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace toporag {

struct Link {
  std::string a;
  std::string a_if;
  std::string b;
  std::string b_if;

  friend bool operator==(const Link&, const Link&) = default;
  friend auto operator<=>(const Link&, const Link&) = default;
};

// Raw topology as read from a case JSON. Attribute maps keep every key the
// file carried; only "links" is treated as structural.
struct TopologyDoc {
  std::string case_id;
  std::map<std::string, nlohmann::json> routers;
  std::map<std::string, nlohmann::json> switches;
  std::vector<Link> links;

  bool has_device(std::string_view name) const;
  bool is_router(std::string_view name) const;
  const nlohmann::json& attributes(std::string_view name) const;

  // Routers first, then switches, each lexicographic.
  std::vector<std::string> device_order() const;
  // Position of a device in device_order(); -1 when absent.
  int device_rank(std::string_view name) const;
  // Interface names a device exposes through its links, sorted.
  std::vector<std::string> interfaces_of(std::string_view device) const;
  std::vector<std::string> all_interfaces() const;
};

bool is_safe_case_id(std::string_view id);

// Accepts the canonical schema ({case_id, routers, switches, links:[...]})
// and, when the top-level "links" array is absent, an FRR topojson-style
// document whose devices carry nested "links" maps. `fallback_case_id` is
// used when the document has no case_id of its own.
TopologyDoc parse_topology(std::string_view json_text, std::string_view fallback_case_id = {});

nlohmann::json topology_to_json(const TopologyDoc& doc);

// Links with endpoints ordered by device rank (then interface), sorted.
// Index i in this list owns the canonical subnet 10.0.i.0/24.
std::vector<Link> canonical_links(const TopologyDoc& doc);

inline constexpr int kFeatureDim = 4;
enum FeatureColumn : int { kIsRouter = 0, kIsSwitch = 1, kDegree = 2, kConfigCount = 3 };

struct TopologyGraph {
  std::string case_id;
  std::vector<std::string> nodes;
  std::vector<std::pair<int, int>> edges;  // u < v, sorted, unique
  Eigen::MatrixXd features;                // nodes.size() x kFeatureDim

  std::size_t num_nodes() const { return nodes.size(); }
  std::size_t num_edges() const { return edges.size(); }
  int max_degree() const;
};

TopologyGraph build_graph(const TopologyDoc& doc);

// Keeps the listed nodes (ascending original ids) and those edges whose
// endpoints both survive, then rewrites the degree column.
TopologyGraph induced_subgraph(const TopologyGraph& graph, const std::vector<int>& kept_nodes,
                               const std::vector<std::pair<int, int>>& kept_edges);

struct SplitSizes {
  std::size_t val = 136;
  std::size_t test = 250;
  std::size_t reference = 50;
  std::size_t query = 200;
};

struct SplitManifest {
  std::set<std::string> verified_ids;
  std::set<std::string> train_ids;
  std::set<std::string> val_ids;
  std::set<std::string> test_ids;
  std::set<std::string> reference_ids;
  std::set<std::string> query_ids;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static SplitManifest from_json(const nlohmann::json& j);

  friend bool operator==(const SplitManifest&, const SplitManifest&) = default;
};

SplitManifest make_splits(const std::vector<std::string>& corpus_ids,
                          const std::set<std::string>& verified_ids, const SplitSizes& sizes,
                          std::uint64_t seed);

}  // namespace toporag
