#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "toporag/rng.hpp"
#include "toporag/topo_model.hpp"

namespace toporag {

enum class TopologyFamily { Ring, Star, Chain };

std::string_view family_name(TopologyFamily family);

struct SyntheticOptions {
  int min_nodes = 4;
  int max_nodes = 12;
  // Each router receives a uniformly drawn number of extra attribute keys
  // in [0, max_extra_attributes], which feeds the config_count feature.
  int max_extra_attributes = 0;
  // When set, one draw per case is shared by all of its routers.
  bool per_case_attributes = false;
  // Up to this many leaf switches hang off uniformly chosen routers.
  int max_stub_switches = 0;
  // Probability that a router-router link is realised through a switch.
  double switched_link_probability = 0.0;
};

// Routers named r01..rNN; star centres are routers too.
TopologyDoc make_family_topology(TopologyFamily family, int n, const std::string& case_id, Rng& rng,
                                 const SyntheticOptions& options = {});

struct SyntheticCase {
  TopologyDoc doc;
  TopologyFamily family;
};

// Families interleaved ring, star, chain, ring, ...; sizes uniform in
// [min_nodes, max_nodes].
std::vector<SyntheticCase> make_family_corpus(std::size_t count, std::uint64_t seed,
                                              const std::string& id_prefix = "syn",
                                              const SyntheticOptions& options = {});

}  // namespace toporag
