#include "toporag/topo_model.hpp"

#include <algorithm>
#include <regex>
#include <tuple>

#include "toporag/error.hpp"
#include "toporag/rng.hpp"

namespace toporag {

namespace {

using nlohmann::json;

const json& empty_object() {
  static const json kEmpty = json::object();
  return kEmpty;
}

std::map<std::string, json> read_device_map(const json& root, const char* key) {
  std::map<std::string, json> devices;
  if (!root.contains(key)) return devices;
  const json& section = root.at(key);
  if (!section.is_object()) {
    throw Error(Errc::MalformedJson, std::string("\"") + key + "\" must be an object");
  }
  for (const auto& [name, attrs] : section.items()) {
    if (name.empty()) {
      throw Error(Errc::MalformedJson, std::string("empty device name in \"") + key + "\"");
    }
    if (!attrs.is_object()) {
      throw Error(Errc::MalformedJson, "device \"" + name + "\" must map to an object");
    }
    devices.emplace(name, attrs);
  }
  return devices;
}

std::string string_field(const json& obj, const char* key) {
  if (!obj.contains(key) || !obj.at(key).is_string()) {
    throw Error(Errc::MalformedJson, std::string("link is missing string field \"") + key + "\"");
  }
  return obj.at(key).get<std::string>();
}

bool has_nested_links(const TopologyDoc& doc) {
  auto nested = [](const std::map<std::string, json>& devices) {
    return std::any_of(devices.begin(), devices.end(), [](const auto& kv) {
      return kv.second.contains("links") && kv.second.at("links").is_object();
    });
  };
  return nested(doc.routers) || nested(doc.switches);
}

// topojson keys look like "r2" or "r2-link1"; "lo" is the loopback.
std::vector<Link> import_nested_links(const TopologyDoc& doc) {
  using LinkKey = std::tuple<std::string, std::string, std::string>;
  std::set<LinkKey> keys;
  auto collect = [&](const std::map<std::string, json>& devices) {
    for (const auto& [name, attrs] : devices) {
      if (!attrs.contains("links") || !attrs.at("links").is_object()) continue;
      for (const auto& [key, value] : attrs.at("links").items()) {
        (void)value;
        if (key == "lo") continue;
        std::string peer = key;
        std::string suffix;
        const auto pos = key.rfind("-link");
        if (pos != std::string::npos && !doc.has_device(key) && doc.has_device(key.substr(0, pos))) {
          peer = key.substr(0, pos);
          suffix = key.substr(pos);
        }
        if (!doc.has_device(peer)) {
          throw Error(Errc::UnknownLinkEndpoint, peer);
        }
        keys.emplace(std::min(name, peer), std::max(name, peer), suffix);
      }
    }
  };
  collect(doc.routers);
  collect(doc.switches);

  std::map<std::string, int> next_port;
  std::vector<Link> links;
  for (const auto& [a, b, suffix] : keys) {
    (void)suffix;
    Link link;
    link.a = a;
    link.a_if = a + "-eth" + std::to_string(next_port[a]++);
    link.b = b;
    link.b_if = b + "-eth" + std::to_string(next_port[b]++);
    links.push_back(std::move(link));
  }
  return links;
}

void validate_links(const TopologyDoc& doc) {
  std::set<std::pair<std::string, std::string>> seen;
  for (const Link& link : doc.links) {
    for (const auto* endpoint : {&link.a, &link.b}) {
      if (!doc.has_device(*endpoint)) {
        throw Error(Errc::UnknownLinkEndpoint, *endpoint);
      }
    }
    if (link.a_if.empty() || link.b_if.empty()) {
      throw Error(Errc::MalformedJson, "empty interface name on link " + link.a + "-" + link.b);
    }
    if (!seen.emplace(link.a, link.a_if).second) {
      throw Error(Errc::DuplicateInterface, link.a + " " + link.a_if);
    }
    if (!seen.emplace(link.b, link.b_if).second) {
      throw Error(Errc::DuplicateInterface, link.b + " " + link.b_if);
    }
  }
}

}  // namespace

bool TopologyDoc::has_device(std::string_view name) const {
  const std::string key(name);
  return routers.count(key) > 0 || switches.count(key) > 0;
}

bool TopologyDoc::is_router(std::string_view name) const { return routers.count(std::string(name)) > 0; }

const json& TopologyDoc::attributes(std::string_view name) const {
  const std::string key(name);
  if (auto it = routers.find(key); it != routers.end()) return it->second;
  if (auto it = switches.find(key); it != switches.end()) return it->second;
  return empty_object();
}

std::vector<std::string> TopologyDoc::device_order() const {
  std::vector<std::string> order;
  order.reserve(routers.size() + switches.size());
  for (const auto& kv : routers) order.push_back(kv.first);
  for (const auto& kv : switches) order.push_back(kv.first);
  return order;
}

int TopologyDoc::device_rank(std::string_view name) const {
  const std::string key(name);
  if (auto it = routers.find(key); it != routers.end()) {
    return static_cast<int>(std::distance(routers.begin(), it));
  }
  if (auto it = switches.find(key); it != switches.end()) {
    return static_cast<int>(routers.size() + std::distance(switches.begin(), it));
  }
  return -1;
}

std::vector<std::string> TopologyDoc::interfaces_of(std::string_view device) const {
  std::vector<std::string> names;
  for (const Link& link : links) {
    if (link.a == device) names.push_back(link.a_if);
    if (link.b == device) names.push_back(link.b_if);
  }
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  return names;
}

std::vector<std::string> TopologyDoc::all_interfaces() const {
  std::vector<std::string> names;
  for (const std::string& device : device_order()) {
    for (std::string& name : interfaces_of(device)) names.push_back(std::move(name));
  }
  return names;
}

bool is_safe_case_id(std::string_view id) {
  static const std::regex kPattern("[A-Za-z0-9_.-]+");
  return std::regex_match(id.begin(), id.end(), kPattern);
}

TopologyDoc parse_topology(std::string_view json_text, std::string_view fallback_case_id) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::MalformedJson, e.what());
  }
  if (!root.is_object()) {
    throw Error(Errc::MalformedJson, "topology must be a JSON object");
  }

  TopologyDoc doc;
  if (root.contains("case_id")) {
    if (!root.at("case_id").is_string()) {
      throw Error(Errc::MalformedJson, "\"case_id\" must be a string");
    }
    doc.case_id = root.at("case_id").get<std::string>();
  } else {
    doc.case_id = std::string(fallback_case_id);
  }
  if (!is_safe_case_id(doc.case_id)) {
    throw Error(Errc::MalformedJson, "case_id \"" + doc.case_id + "\" is empty or not file-system safe");
  }

  doc.routers = read_device_map(root, "routers");
  doc.switches = read_device_map(root, "switches");
  for (const auto& kv : doc.switches) {
    if (doc.routers.count(kv.first)) {
      throw Error(Errc::MalformedJson, "device \"" + kv.first + "\" is both router and switch");
    }
  }

  if (root.contains("links")) {
    const json& links = root.at("links");
    if (!links.is_array()) {
      throw Error(Errc::MalformedJson, "\"links\" must be an array");
    }
    for (const json& entry : links) {
      if (!entry.is_object()) {
        throw Error(Errc::MalformedJson, "link entries must be objects");
      }
      doc.links.push_back(Link{string_field(entry, "a"), string_field(entry, "a_if"), string_field(entry, "b"),
                               string_field(entry, "b_if")});
    }
  } else if (has_nested_links(doc)) {
    doc.links = import_nested_links(doc);
  }

  validate_links(doc);
  return doc;
}

json topology_to_json(const TopologyDoc& doc) {
  json out = json::object();
  out["case_id"] = doc.case_id;
  out["routers"] = json::object();
  for (const auto& [name, attrs] : doc.routers) out["routers"][name] = attrs;
  out["switches"] = json::object();
  for (const auto& [name, attrs] : doc.switches) out["switches"][name] = attrs;
  out["links"] = json::array();
  for (const Link& link : doc.links) {
    out["links"].push_back({{"a", link.a}, {"a_if", link.a_if}, {"b", link.b}, {"b_if", link.b_if}});
  }
  return out;
}

std::vector<Link> canonical_links(const TopologyDoc& doc) {
  std::vector<Link> links = doc.links;
  for (Link& link : links) {
    const auto lhs = std::make_pair(doc.device_rank(link.a), link.a_if);
    const auto rhs = std::make_pair(doc.device_rank(link.b), link.b_if);
    if (rhs < lhs) {
      std::swap(link.a, link.b);
      std::swap(link.a_if, link.b_if);
    }
  }
  std::sort(links.begin(), links.end(), [&](const Link& x, const Link& y) {
    return std::make_tuple(doc.device_rank(x.a), x.a_if, doc.device_rank(x.b), x.b_if) <
           std::make_tuple(doc.device_rank(y.a), y.a_if, doc.device_rank(y.b), y.b_if);
  });
  return links;
}

int TopologyGraph::max_degree() const {
  if (features.rows() == 0) return 0;
  return static_cast<int>(features.col(kDegree).maxCoeff());
}

TopologyGraph build_graph(const TopologyDoc& doc) {
  TopologyGraph graph;
  graph.case_id = doc.case_id;
  graph.nodes = doc.device_order();

  std::map<std::string, int> index;
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) index[graph.nodes[i]] = static_cast<int>(i);

  std::set<std::pair<int, int>> edges;
  for (const Link& link : doc.links) {
    const int u = index.at(link.a);
    const int v = index.at(link.b);
    if (u == v) continue;
    edges.emplace(std::min(u, v), std::max(u, v));
  }
  graph.edges.assign(edges.begin(), edges.end());

  const auto n = static_cast<Eigen::Index>(graph.nodes.size());
  graph.features = Eigen::MatrixXd::Zero(n, kFeatureDim);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::string& name = graph.nodes[static_cast<std::size_t>(i)];
    const bool router = doc.is_router(name);
    graph.features(i, kIsRouter) = router ? 1.0 : 0.0;
    graph.features(i, kIsSwitch) = router ? 0.0 : 1.0;
    const json& attrs = doc.attributes(name);
    double config_count = 0.0;
    for (const auto& item : attrs.items()) {
      if (item.key() != "links") config_count += 1.0;
    }
    graph.features(i, kConfigCount) = config_count;
  }
  for (const auto& [u, v] : graph.edges) {
    graph.features(u, kDegree) += 1.0;
    graph.features(v, kDegree) += 1.0;
  }
  return graph;
}

TopologyGraph induced_subgraph(const TopologyGraph& graph, const std::vector<int>& kept_nodes,
                               const std::vector<std::pair<int, int>>& kept_edges) {
  std::vector<int> remap(graph.nodes.size(), -1);
  TopologyGraph out;
  out.case_id = graph.case_id;
  out.features = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(kept_nodes.size()), kFeatureDim);
  for (std::size_t i = 0; i < kept_nodes.size(); ++i) {
    const int old_id = kept_nodes[i];
    remap[static_cast<std::size_t>(old_id)] = static_cast<int>(i);
    out.nodes.push_back(graph.nodes[static_cast<std::size_t>(old_id)]);
    out.features.row(static_cast<Eigen::Index>(i)) = graph.features.row(old_id);
    out.features(static_cast<Eigen::Index>(i), kDegree) = 0.0;
  }
  for (const auto& [u, v] : kept_edges) {
    const int nu = remap[static_cast<std::size_t>(u)];
    const int nv = remap[static_cast<std::size_t>(v)];
    if (nu < 0 || nv < 0) continue;
    out.edges.emplace_back(std::min(nu, nv), std::max(nu, nv));
    out.features(nu, kDegree) += 1.0;
    out.features(nv, kDegree) += 1.0;
  }
  std::sort(out.edges.begin(), out.edges.end());
  return out;
}

json SplitManifest::to_json() const {
  auto ids = [](const std::set<std::string>& s) { return json(std::vector<std::string>(s.begin(), s.end())); };
  json out = json::object();
  out["seed"] = seed;
  out["verified_ids"] = ids(verified_ids);
  out["train_ids"] = ids(train_ids);
  out["val_ids"] = ids(val_ids);
  out["test_ids"] = ids(test_ids);
  out["reference_ids"] = ids(reference_ids);
  out["query_ids"] = ids(query_ids);
  return out;
}

SplitManifest SplitManifest::from_json(const json& j) {
  auto ids = [&](const char* key) {
    if (!j.contains(key) || !j.at(key).is_array()) {
      throw Error(Errc::MalformedJson, std::string("split manifest is missing \"") + key + "\"");
    }
    const auto list = j.at(key).get<std::vector<std::string>>();
    return std::set<std::string>(list.begin(), list.end());
  };
  SplitManifest m;
  m.seed = j.value("seed", std::uint64_t{0});
  m.verified_ids = ids("verified_ids");
  m.train_ids = ids("train_ids");
  m.val_ids = ids("val_ids");
  m.test_ids = ids("test_ids");
  m.reference_ids = ids("reference_ids");
  m.query_ids = ids("query_ids");
  return m;
}

SplitManifest make_splits(const std::vector<std::string>& corpus_ids, const std::set<std::string>& verified_ids,
                          const SplitSizes& sizes, std::uint64_t seed) {
  const std::set<std::string> corpus(corpus_ids.begin(), corpus_ids.end());
  if (corpus.size() != corpus_ids.size()) {
    throw Error(Errc::InvalidArgument, "corpus ids contain duplicates");
  }
  for (const std::string& id : verified_ids) {
    if (!corpus.count(id)) {
      throw Error(Errc::InvalidArgument, "verified id \"" + id + "\" is not in the corpus");
    }
  }

  std::vector<std::string> pool;
  for (const std::string& id : corpus) {
    if (!verified_ids.count(id)) pool.push_back(id);
  }
  if (sizes.val + sizes.test > pool.size()) {
    throw Error(Errc::InfeasibleSizes, "val+test = " + std::to_string(sizes.val + sizes.test) +
                                           " exceeds the " + std::to_string(pool.size()) + " unverified graphs");
  }
  if (sizes.reference > verified_ids.size()) {
    throw Error(Errc::InfeasibleSizes, "reference = " + std::to_string(sizes.reference) + " exceeds " +
                                           std::to_string(verified_ids.size()) + " verified cases");
  }
  if (sizes.query > sizes.test) {
    throw Error(Errc::InfeasibleSizes,
                "query = " + std::to_string(sizes.query) + " exceeds test = " + std::to_string(sizes.test));
  }

  SplitManifest m;
  m.seed = seed;
  m.verified_ids = verified_ids;

  Rng pool_rng(derive_seed(seed, 1));
  pool_rng.shuffle(pool);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (i < sizes.val) {
      m.val_ids.insert(pool[i]);
    } else if (i < sizes.val + sizes.test) {
      m.test_ids.insert(pool[i]);
    } else {
      m.train_ids.insert(pool[i]);
    }
  }

  std::vector<std::string> verified(verified_ids.begin(), verified_ids.end());
  Rng ref_rng(derive_seed(seed, 2));
  ref_rng.shuffle(verified);
  m.reference_ids.insert(verified.begin(), verified.begin() + static_cast<std::ptrdiff_t>(sizes.reference));

  std::vector<std::string> test(m.test_ids.begin(), m.test_ids.end());
  Rng query_rng(derive_seed(seed, 3));
  query_rng.shuffle(test);
  m.query_ids.insert(test.begin(), test.begin() + static_cast<std::ptrdiff_t>(sizes.query));
  return m;
}

}  // namespace toporag
