#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "toporag/agents.hpp"
#include "toporag/backend.hpp"
#include "toporag/budget.hpp"
#include "toporag/http_backend.hpp"
#include "toporag/mock_backend.hpp"
#include "toporag/topo_model.hpp"
#include "toporag/trainer.hpp"

namespace toporag {

struct RunConfig {
  // [paths]
  std::filesystem::path corpus;
  std::filesystem::path splits;
  std::filesystem::path model;
  std::filesystem::path index;
  std::filesystem::path knowledge;
  std::filesystem::path prompts;
  std::filesystem::path out;

  // [backend]
  std::string backend = "mock";  // mock | http
  std::size_t replicas = 1;
  MockOptions mock;
  HttpBackendConfig http;

  // [budget]
  Calibration calibration;

  // [trainer]
  TrainConfig train;
  AugmentConfig augment;
  SplitSizes sizes;

  // [loop]
  LoopConfig loop;

  std::uint64_t seed = 0;
  std::size_t parallelism = 1;
};

// INI file with sections [paths], [backend], [budget], [trainer], [loop]
// and top-level seed/parallelism. Relative paths resolve against the
// file's directory. Unknown keys are errors.
void apply_config_file(RunConfig& config, const std::filesystem::path& file);

// TOPORAG_CORPUS, TOPORAG_SPLITS, TOPORAG_MODEL_PATH, TOPORAG_INDEX,
// TOPORAG_KNOWLEDGE, TOPORAG_PROMPTS, TOPORAG_OUT, TOPORAG_BACKEND,
// TOPORAG_BASE_URL, TOPORAG_SEED. The API key is never read here.
void apply_environment(RunConfig& config);

// Pool of `replicas` backends of the configured kind.
std::shared_ptr<Backend> make_backend(const RunConfig& config);

// A corpus directory holds one sub-directory per case with topology.json
// and, for verified cases, driver.py.
struct CorpusCase {
  std::string case_id;
  std::filesystem::path topology_path;
  std::optional<std::filesystem::path> driver_path;
};

std::vector<CorpusCase> scan_corpus(const std::filesystem::path& dir);

}  // namespace toporag
