#include "toporag/synthetic.hpp"

#include <array>
#include <cstdio>
#include <map>

#include "toporag/error.hpp"

namespace toporag {

namespace {

std::string router_name(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "r%02d", i + 1);
  return buf;
}

constexpr std::array<const char*, 5> kAttributeKeys = {"hostname", "bgp", "ospf", "zebra", "staticd"};

}  // namespace

std::string_view family_name(TopologyFamily family) {
  switch (family) {
    case TopologyFamily::Ring: return "ring";
    case TopologyFamily::Star: return "star";
    case TopologyFamily::Chain: return "chain";
  }
  return "unknown";
}

TopologyDoc make_family_topology(TopologyFamily family, int n, const std::string& case_id, Rng& rng,
                                 const SyntheticOptions& options) {
  if (n < 3) {
    throw Error(Errc::InvalidArgument, "synthetic families need at least 3 nodes");
  }
  TopologyDoc doc;
  doc.case_id = case_id;
  const int case_extra = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(options.max_extra_attributes) + 1));
  for (int i = 0; i < n; ++i) {
    nlohmann::json attrs = nlohmann::json::object();
    const int extra = options.per_case_attributes
                          ? case_extra
                          : static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(options.max_extra_attributes) + 1));
    for (int k = 0; k < extra && k < static_cast<int>(kAttributeKeys.size()); ++k) {
      attrs[kAttributeKeys[static_cast<std::size_t>(k)]] = true;
    }
    doc.routers.emplace(router_name(i), std::move(attrs));
  }

  std::map<std::string, int> next_port;
  auto wire = [&](const std::string& a, const std::string& b) {
    doc.links.push_back(Link{a, a + "-eth" + std::to_string(next_port[a]++), b, b + "-eth" + std::to_string(next_port[b]++)});
  };
  int switch_count = 0;
  auto new_switch = [&]() {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "s%02d", ++switch_count);
    doc.switches.emplace(buf, nlohmann::json::object());
    return std::string(buf);
  };
  auto connect = [&](int u, int v) {
    if (options.switched_link_probability > 0.0 && rng.uniform01() < options.switched_link_probability) {
      const std::string sw = new_switch();
      wire(router_name(u), sw);
      wire(router_name(v), sw);
    } else {
      wire(router_name(u), router_name(v));
    }
  };
  switch (family) {
    case TopologyFamily::Ring:
      for (int i = 0; i < n; ++i) connect(i, (i + 1) % n);
      break;
    case TopologyFamily::Chain:
      for (int i = 0; i + 1 < n; ++i) connect(i, i + 1);
      break;
    case TopologyFamily::Star:
      for (int i = 1; i < n; ++i) connect(0, i);
      break;
  }
  const int stubs = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(options.max_stub_switches) + 1));
  for (int k = 0; k < stubs; ++k) {
    const int host = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(n)));
    wire(router_name(host), new_switch());
  }
  return doc;
}

std::vector<SyntheticCase> make_family_corpus(std::size_t count, std::uint64_t seed, const std::string& id_prefix,
                                              const SyntheticOptions& options) {
  constexpr std::array<TopologyFamily, 3> kFamilies = {TopologyFamily::Ring, TopologyFamily::Star,
                                                       TopologyFamily::Chain};
  Rng rng(seed);
  std::vector<SyntheticCase> corpus;
  corpus.reserve(count);
  const auto span = static_cast<std::uint64_t>(options.max_nodes - options.min_nodes + 1);
  for (std::size_t i = 0; i < count; ++i) {
    const TopologyFamily family = kFamilies[i % kFamilies.size()];
    const int n = options.min_nodes + static_cast<int>(rng.uniform_index(span));
    char id[64];
    std::snprintf(id, sizeof(id), "%s_%04zu_%s", id_prefix.c_str(), i, std::string(family_name(family)).c_str());
    corpus.push_back(SyntheticCase{make_family_topology(family, n, id, rng, options), family});
  }
  return corpus;
}

}  // namespace toporag
