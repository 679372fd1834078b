#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "toporag/rng.hpp"
#include "toporag/topo_model.hpp"

namespace testutil {

inline std::filesystem::path fixtures() { return TOPORAG_FIXTURES; }

// Fresh, empty directory under the build tree.
inline std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::path(TOPORAG_SCRATCH) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Random connected-or-not graph with n nodes, each pair linked with
// probability p, and small integer feature values.
inline toporag::TopologyGraph random_graph(toporag::Rng& rng, int n, double p, const std::string& id = "g") {
  toporag::TopologyGraph g;
  g.case_id = id;
  for (int i = 0; i < n; ++i) g.nodes.push_back("n" + std::to_string(i));
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) {
      if (rng.uniform01() < p) g.edges.emplace_back(u, v);
    }
  }
  g.features = Eigen::MatrixXd::Zero(n, toporag::kFeatureDim);
  for (int i = 0; i < n; ++i) {
    const bool router = rng.uniform01() < 0.7;
    g.features(i, toporag::kIsRouter) = router ? 1.0 : 0.0;
    g.features(i, toporag::kIsSwitch) = router ? 0.0 : 1.0;
    g.features(i, toporag::kConfigCount) = static_cast<double>(rng.uniform_index(4));
  }
  for (const auto& [u, v] : g.edges) {
    g.features(u, toporag::kDegree) += 1.0;
    g.features(v, toporag::kDegree) += 1.0;
  }
  return g;
}

// Relabels nodes: new node perm[i] is old node i.
inline toporag::TopologyGraph permute(const toporag::TopologyGraph& g, const std::vector<int>& perm) {
  toporag::TopologyGraph out;
  out.case_id = g.case_id;
  out.nodes.resize(g.nodes.size());
  out.features = Eigen::MatrixXd::Zero(g.features.rows(), g.features.cols());
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    out.nodes[perm[i]] = g.nodes[i];
    out.features.row(perm[i]) = g.features.row(static_cast<Eigen::Index>(i));
  }
  for (const auto& [u, v] : g.edges) out.edges.emplace_back(std::min(perm[u], perm[v]), std::max(perm[u], perm[v]));
  std::sort(out.edges.begin(), out.edges.end());
  return out;
}

inline std::vector<int> random_permutation(toporag::Rng& rng, int n) {
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  rng.shuffle(perm);
  return perm;
}

}  // namespace testutil
