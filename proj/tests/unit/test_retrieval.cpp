#include <doctest.h>

#include <algorithm>

#include "helpers.hpp"
#include "toporag/error.hpp"
#include "toporag/io.hpp"
#include "toporag/retrieval.hpp"
#include "toporag/synthetic.hpp"

using namespace toporag;

namespace {

std::vector<ReferenceCase> write_references(const std::filesystem::path& dir, std::size_t count, std::uint64_t seed) {
  std::vector<ReferenceCase> refs;
  for (const auto& c : make_family_corpus(count, seed, "ref")) {
    const auto case_dir = dir / c.doc.case_id;
    write_json_file(case_dir / "topology.json", topology_to_json(c.doc));
    write_text_file(case_dir / "driver.py", "def test_ok():\n    pass\n");
    refs.push_back({case_dir / "topology.json", case_dir / "driver.py"});
  }
  return refs;
}

}  // namespace

TEST_CASE("every reference retrieves itself first and ranking matches a sort") {
  const auto dir = testutil::scratch("retrieval_self");
  const EncoderModel model = EncoderModel::glorot(9);
  const ReferenceIndex index = build_index(model, write_references(dir, 24, 2));
  REQUIRE(index.entries.size() == 24);
  for (const auto& entry : index.entries) {
    const TopologyGraph g = build_graph(parse_topology(read_text_file(entry.topology_path)));
    const auto hits = retrieve(index, g, model, index.entries.size());
    REQUIRE(hits.size() == index.entries.size());
    // identical embeddings tie at the top, so check membership in the top group
    CHECK(hits.front().similarity >= 1.0 - 1e-6);
    bool self_on_top = false;
    for (const auto& h : hits) {
      if (h.similarity < 1.0 - 1e-6) break;
      self_on_top = self_on_top || h.case_id == entry.case_id;
    }
    CHECK(self_on_top);

    std::vector<RetrievalHit> oracle;
    const Embedding q = encode(model, g);
    for (const auto& e : index.entries) oracle.push_back({e.case_id, cosine_sim(q, e.embedding)});
    std::sort(oracle.begin(), oracle.end(), [](const auto& a, const auto& b) {
      return a.similarity != b.similarity ? a.similarity > b.similarity : a.case_id < b.case_id;
    });
    for (std::size_t i = 0; i < hits.size(); ++i) {
      CHECK(hits[i].case_id == oracle[i].case_id);
      CHECK(hits[i].similarity == oracle[i].similarity);
    }
  }
}

TEST_CASE("index files round-trip with relative paths") {
  const auto dir = testutil::scratch("retrieval_io");
  const EncoderModel model = EncoderModel::glorot(3);
  const ReferenceIndex index = build_index(model, write_references(dir / "refs", 6, 5));
  save_index(index, dir / "refs.index.json");
  CHECK(read_text_file(dir / "refs.index.json").find(dir.string()) == std::string::npos);
  const ReferenceIndex back = load_index(dir / "refs.index.json");
  CHECK(back.model_fingerprint == model.fingerprint());
  REQUIRE(back.entries.size() == index.entries.size());
  for (std::size_t i = 0; i < back.entries.size(); ++i) {
    CHECK(back.entries[i].case_id == index.entries[i].case_id);
    CHECK((back.entries[i].embedding.vector - index.entries[i].embedding.vector).norm() < 1e-15);
    CHECK(std::filesystem::equivalent(back.entries[i].driver_path, index.entries[i].driver_path));
  }
}

TEST_CASE("retrieval refuses mismatched encoders, empty indexes and k = 0") {
  const auto dir = testutil::scratch("retrieval_errors");
  const EncoderModel model = EncoderModel::glorot(3);
  const ReferenceIndex index = build_index(model, write_references(dir, 3, 1));
  const TopologyGraph g = build_graph(parse_topology(read_text_file(index.entries[0].topology_path)));
  auto code = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::InvalidArgument;
  };
  CHECK(code([&] { retrieve(index, g, EncoderModel::glorot(4), 1); }) == Errc::FingerprintMismatch);
  CHECK(code([&] { retrieve(ReferenceIndex{}, g, model, 1); }) == Errc::EmptyIndex);
  CHECK_THROWS_AS(retrieve(index, g, model, 0), Error);
  CHECK(retrieve(index, g, model, 99).size() == 3);
}

TEST_CASE("missing drivers are rejected when indexing") {
  const auto dir = testutil::scratch("retrieval_driver");
  auto refs = write_references(dir, 2, 1);
  std::filesystem::remove(refs[1].driver_path);
  try {
    build_index(EncoderModel::glorot(1), refs);
    FAIL("expected MissingDriver");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::MissingDriver);
  }
}

TEST_CASE("context assembly carries the reference and the knowledge") {
  const auto dir = testutil::scratch("retrieval_context");
  const EncoderModel model = EncoderModel::glorot(3);
  const ReferenceIndex index = build_index(model, write_references(dir, 3, 1));
  const auto knowledge = testutil::fixtures() / "knowledge.txt";
  const std::string target = read_text_file(testutil::fixtures() / "two_router.json");
  const auto hit = RetrievalHit{index.entries[1].case_id, 0.5};
  const TopoRagContext ctx = assemble_context(index, target, hit, knowledge);
  CHECK(ctx.has_reference());
  CHECK(ctx.reference_id == hit.case_id);
  CHECK(ctx.reference_driver == read_text_file(index.entries[1].driver_path));
  CHECK(ctx.background_knowledge == read_text_file(knowledge));
  CHECK(TopoRagContext::from_json(ctx.to_json()).to_json() == ctx.to_json());

  const TopoRagContext bare = target_only_context(target, knowledge);
  CHECK_FALSE(bare.has_reference());
  CHECK(bare.reference_topology.empty());

  auto code = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::InvalidArgument;
  };
  CHECK(code([&] { assemble_context(index, target, RetrievalHit{"nope", 0.1}, knowledge); }) ==
        Errc::UnknownReference);
  CHECK(code([&] { target_only_context(target, dir / "absent.txt"); }) == Errc::MissingKnowledgeFile);
}
