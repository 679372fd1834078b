#include "toporag/retrieval.hpp"

#include <algorithm>
#include <cmath>

#include "toporag/error.hpp"
#include "toporag/io.hpp"

namespace toporag {

namespace {

std::string read_knowledge(const std::filesystem::path& knowledge_path) {
  if (!std::filesystem::is_regular_file(knowledge_path)) {
    throw Error(Errc::MissingKnowledgeFile, knowledge_path.string());
  }
  std::string text = read_text_file(knowledge_path);
  if (text.empty()) {
    throw Error(Errc::MissingKnowledgeFile, knowledge_path.string() + " is empty");
  }
  return text;
}

}  // namespace

const IndexEntry* ReferenceIndex::find(std::string_view case_id) const {
  for (const IndexEntry& entry : entries) {
    if (entry.case_id == case_id) return &entry;
  }
  return nullptr;
}

ReferenceIndex build_index(const EncoderModel& model, const std::vector<ReferenceCase>& reference_cases) {
  ReferenceIndex index;
  index.model_fingerprint = model.fingerprint();
  for (const ReferenceCase& ref : reference_cases) {
    const std::string label = ref.topology_path.string();
    TopologyDoc doc;
    try {
      doc = parse_topology(read_text_file(ref.topology_path), ref.topology_path.parent_path().filename().string());
    } catch (const Error& e) {
      throw Error(Errc::ParseFailure, label + ": " + e.what());
    }
    if (!std::filesystem::is_regular_file(ref.driver_path)) {
      throw Error(Errc::MissingDriver, doc.case_id + ": " + ref.driver_path.string());
    }
    Embedding embedding;
    try {
      embedding = encode(model, build_graph(doc));
    } catch (const Error& e) {
      throw Error(Errc::EncodeFailure, doc.case_id + ": " + e.what());
    }
    if (embedding.is_zero()) {
      throw Error(Errc::EncodeFailure, doc.case_id + ": embedding is the zero vector");
    }
    if (index.find(doc.case_id)) {
      throw Error(Errc::InvalidArgument, "duplicate reference case_id " + doc.case_id);
    }
    index.entries.push_back(IndexEntry{doc.case_id, std::move(embedding), ref.topology_path, ref.driver_path});
  }
  return index;
}

void save_index(const ReferenceIndex& index, const std::filesystem::path& path) {
  const std::filesystem::path base = std::filesystem::absolute(path).parent_path();
  nlohmann::json j;
  j["model_fingerprint"] = index.model_fingerprint;
  j["entries"] = nlohmann::json::array();
  for (const IndexEntry& entry : index.entries) {
    const auto& v = entry.embedding.vector;
    j["entries"].push_back({
        {"case_id", entry.case_id},
        {"embedding", std::vector<double>(v.data(), v.data() + v.size())},
        {"topology_path", std::filesystem::absolute(entry.topology_path).lexically_relative(base).generic_string()},
        {"driver_path", std::filesystem::absolute(entry.driver_path).lexically_relative(base).generic_string()},
    });
  }
  write_json_file(path, j);
}

ReferenceIndex load_index(const std::filesystem::path& path) {
  const nlohmann::json j = read_json_file(path);
  const std::filesystem::path base = path.parent_path();
  ReferenceIndex index;
  try {
    index.model_fingerprint = j.at("model_fingerprint").get<std::string>();
    for (const auto& e : j.at("entries")) {
      const auto values = e.at("embedding").get<std::vector<double>>();
      IndexEntry entry;
      entry.case_id = e.at("case_id").get<std::string>();
      entry.embedding = Embedding{entry.case_id, Eigen::Map<const Eigen::VectorXd>(values.data(),
                                                                                   static_cast<Eigen::Index>(values.size()))};
      entry.topology_path = base / e.at("topology_path").get<std::string>();
      entry.driver_path = base / e.at("driver_path").get<std::string>();
      if (std::abs(entry.embedding.vector.norm() - 1.0) > 1e-6) {
        throw Error(Errc::MalformedJson, "index entry " + entry.case_id + " is not unit-norm");
      }
      index.entries.push_back(std::move(entry));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::MalformedJson, path.string() + ": " + e.what());
  }
  return index;
}

std::vector<RetrievalHit> rank_embedding(const ReferenceIndex& index, const Embedding& query, std::size_t k) {
  if (index.entries.empty()) throw Error(Errc::EmptyIndex, "reference index has no entries");
  if (k == 0) throw Error(Errc::InvalidArgument, "k must be at least 1");
  std::vector<RetrievalHit> hits;
  hits.reserve(index.entries.size());
  for (const IndexEntry& entry : index.entries) {
    hits.push_back(RetrievalHit{entry.case_id, cosine_sim(query, entry.embedding)});
  }
  std::sort(hits.begin(), hits.end(), [](const RetrievalHit& x, const RetrievalHit& y) {
    if (x.similarity != y.similarity) return x.similarity > y.similarity;
    return x.case_id < y.case_id;
  });
  hits.resize(std::min(k, hits.size()));
  return hits;
}

std::vector<RetrievalHit> retrieve(const ReferenceIndex& index, const TopologyGraph& query, const EncoderModel& model,
                                   std::size_t k) {
  if (index.entries.empty()) throw Error(Errc::EmptyIndex, "reference index has no entries");
  if (model.fingerprint() != index.model_fingerprint) {
    throw Error(Errc::FingerprintMismatch, "index was built with a different encoder");
  }
  return rank_embedding(index, encode(model, query), k);
}

nlohmann::json TopoRagContext::to_json() const {
  return {{"target_topology", target_topology},
          {"reference_topology", reference_topology},
          {"reference_driver", reference_driver},
          {"background_knowledge", background_knowledge},
          {"similarity", similarity},
          {"reference_id", reference_id}};
}

TopoRagContext TopoRagContext::from_json(const nlohmann::json& j) {
  TopoRagContext c;
  c.target_topology = j.value("target_topology", "");
  c.reference_topology = j.value("reference_topology", "");
  c.reference_driver = j.value("reference_driver", "");
  c.background_knowledge = j.value("background_knowledge", "");
  c.similarity = j.value("similarity", 0.0);
  c.reference_id = j.value("reference_id", "");
  return c;
}

TopoRagContext assemble_context(const ReferenceIndex& index, const std::string& query_topology_text,
                                const RetrievalHit& best, const std::filesystem::path& knowledge_path) {
  const IndexEntry* entry = index.find(best.case_id);
  if (entry == nullptr) throw Error(Errc::UnknownReference, best.case_id);
  if (!(best.similarity >= -1.0 && best.similarity <= 1.0)) {
    throw Error(Errc::InvalidArgument, "similarity must lie in [-1, 1]");
  }
  if (query_topology_text.empty()) throw Error(Errc::InvalidArgument, "target topology text is empty");

  TopoRagContext context;
  context.target_topology = query_topology_text;
  context.reference_topology = read_text_file(entry->topology_path);
  context.reference_driver = read_text_file(entry->driver_path);
  context.background_knowledge = read_knowledge(knowledge_path);
  context.similarity = best.similarity;
  context.reference_id = best.case_id;
  if (context.reference_topology.empty() || context.reference_driver.empty()) {
    throw Error(Errc::InvalidArgument, "reference " + best.case_id + " has an empty topology or driver file");
  }
  return context;
}

TopoRagContext target_only_context(const std::string& query_topology_text,
                                   const std::filesystem::path& knowledge_path) {
  if (query_topology_text.empty()) throw Error(Errc::InvalidArgument, "target topology text is empty");
  TopoRagContext context;
  context.target_topology = query_topology_text;
  context.background_knowledge = read_knowledge(knowledge_path);
  return context;
}

}  // namespace toporag
