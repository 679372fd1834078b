#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "toporag/encoder.hpp"
#include "toporag/topo_model.hpp"

namespace toporag {

struct ReferenceCase {
  std::filesystem::path topology_path;
  std::filesystem::path driver_path;
};

struct IndexEntry {
  std::string case_id;
  Embedding embedding;
  std::filesystem::path topology_path;
  std::filesystem::path driver_path;
};

struct ReferenceIndex {
  std::vector<IndexEntry> entries;
  std::string model_fingerprint;

  const IndexEntry* find(std::string_view case_id) const;
};

ReferenceIndex build_index(const EncoderModel& model, const std::vector<ReferenceCase>& reference_cases);

// Paths are stored relative to the index file's directory.
void save_index(const ReferenceIndex& index, const std::filesystem::path& path);
ReferenceIndex load_index(const std::filesystem::path& path);

struct RetrievalHit {
  std::string case_id;
  double similarity = 0.0;
};

// Top-k by cosine similarity; equal similarities are ordered by case_id.
std::vector<RetrievalHit> retrieve(const ReferenceIndex& index, const TopologyGraph& query, const EncoderModel& model,
                                   std::size_t k);
std::vector<RetrievalHit> rank_embedding(const ReferenceIndex& index, const Embedding& query, std::size_t k);

struct TopoRagContext {
  std::string target_topology;
  std::string reference_topology;
  std::string reference_driver;
  std::string background_knowledge;
  double similarity = 0.0;
  std::string reference_id;

  // False for the target-plus-knowledge context used by the No-TopoRAG baseline.
  bool has_reference() const { return !reference_id.empty(); }

  nlohmann::json to_json() const;
  static TopoRagContext from_json(const nlohmann::json& j);
};

TopoRagContext assemble_context(const ReferenceIndex& index, const std::string& query_topology_text,
                                const RetrievalHit& best, const std::filesystem::path& knowledge_path);

// Target topology and background knowledge only.
TopoRagContext target_only_context(const std::string& query_topology_text,
                                   const std::filesystem::path& knowledge_path);

}  // namespace toporag
