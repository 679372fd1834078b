#include "toporag/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <map>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "toporag/error.hpp"

namespace toporag {

namespace {

namespace pt = boost::property_tree;

template <typename T>
T convert(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    T value{};
    if constexpr (std::is_same_v<T, double>) {
      value = std::stod(text, &used);
    } else if constexpr (std::is_same_v<T, int>) {
      value = std::stoi(text, &used);
    } else {
      if (!text.empty() && text.front() == '-') throw std::invalid_argument("negative");
      value = static_cast<T>(std::stoull(text, &used));
    }
    if (used != text.size()) throw std::invalid_argument("trailing characters");
    return value;
  } catch (const std::exception&) {
    throw Error(Errc::InvalidArgument, "config key " + key + ": cannot read \"" + text + "\"");
  }
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw Error(Errc::InvalidArgument, "config key " + key + ": expected a boolean, got \"" + text + "\"");
}

}  // namespace

void apply_config_file(RunConfig& config, const std::filesystem::path& file) {
  pt::ptree tree;
  try {
    pt::read_ini(file.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(Errc::InvalidArgument, "config file " + file.string() + ": " + e.message());
  }
  const std::filesystem::path base = file.parent_path();
  auto path = [&](std::filesystem::path& target) {
    return [&target, base](const std::string&, const std::string& v) {
      const std::filesystem::path p(v);
      target = p.is_absolute() ? p : base / p;
    };
  };
  auto text = [](std::string& target) { return [&target](const std::string&, const std::string& v) { target = v; }; };
  auto real = [](double& target) {
    return [&target](const std::string& k, const std::string& v) { target = convert<double>(k, v); };
  };
  auto integer = [](int& target) {
    return [&target](const std::string& k, const std::string& v) { target = convert<int>(k, v); };
  };
  auto size = [](std::size_t& target) {
    return [&target](const std::string& k, const std::string& v) { target = convert<std::size_t>(k, v); };
  };
  auto u64 = [](std::uint64_t& target) {
    return [&target](const std::string& k, const std::string& v) { target = convert<std::uint64_t>(k, v); };
  };
  auto flag = [](bool& target) {
    return [&target](const std::string& k, const std::string& v) { target = to_bool(k, v); };
  };

  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"seed", u64(config.seed)},
      {"parallelism", size(config.parallelism)},
      {"paths.corpus", path(config.corpus)},
      {"paths.splits", path(config.splits)},
      {"paths.model", path(config.model)},
      {"paths.index", path(config.index)},
      {"paths.knowledge", path(config.knowledge)},
      {"paths.prompts", path(config.prompts)},
      {"paths.out", path(config.out)},
      {"backend.kind", text(config.backend)},
      {"backend.replicas", size(config.replicas)},
      {"backend.fault_rate", real(config.mock.fault_rate)},
      {"backend.fault_kind",
       [&](const std::string& k, const std::string& v) {
         const auto kind = parse_fault(v);
         if (!kind) throw Error(Errc::InvalidArgument, "config key " + k + ": unknown fault kind \"" + v + "\"");
         config.mock.fault_kind = *kind;
       }},
      {"backend.requires_reference", flag(config.mock.requires_reference)},
      {"backend.expose_logits", flag(config.mock.expose_logits)},
      {"backend.base_url", text(config.http.base_url)},
      {"backend.model", text(config.http.model)},
      {"backend.timeout_s", real(config.http.timeout_s)},
      {"backend.temperature", real(config.http.temperature)},
      {"budget.w_s", real(config.calibration.w_s)},
      {"budget.w_v", real(config.calibration.w_v)},
      {"budget.w_e", real(config.calibration.w_e)},
      {"budget.w_d", real(config.calibration.w_d)},
      {"budget.v_max", real(config.calibration.v_max)},
      {"budget.e_max", real(config.calibration.e_max)},
      {"budget.d_max", real(config.calibration.d_max)},
      {"trainer.tau", real(config.train.tau)},
      {"trainer.batch_size", size(config.train.batch_size)},
      {"trainer.learning_rate", real(config.train.learning_rate)},
      {"trainer.max_epochs", integer(config.train.max_epochs)},
      {"trainer.patience", integer(config.train.patience)},
      {"trainer.p_edge", real(config.augment.p_edge)},
      {"trainer.p_node", real(config.augment.p_node)},
      {"trainer.val", size(config.sizes.val)},
      {"trainer.test", size(config.sizes.test)},
      {"trainer.reference", size(config.sizes.reference)},
      {"trainer.query", size(config.sizes.query)},
      {"loop.n_trim", size(config.loop.n_trim)},
      {"loop.constrained_decoding", flag(config.loop.constrained_decoding)},
      {"loop.greedy", flag(config.loop.greedy)},
      {"loop.contract_retries", integer(config.loop.contract_retries)},
  };

  auto apply = [&](const std::string& key, const std::string& value) {
    auto it = setters.find(key);
    if (it == setters.end()) throw Error(Errc::InvalidArgument, "config file " + file.string() + ": unknown key " + key);
    it->second(key, value);
  };
  for (const auto& [name, node] : tree) {
    if (node.empty()) {
      apply(name, node.data());
      continue;
    }
    for (const auto& [key, leaf] : node) apply(name + "." + key, leaf.data());
  }
}

void apply_environment(RunConfig& config) {
  auto env = [](const char* name) -> std::optional<std::string> {
    const char* v = std::getenv(name);
    if (v == nullptr || *v == '\0') return std::nullopt;
    return std::string(v);
  };
  if (auto v = env("TOPORAG_CORPUS")) config.corpus = *v;
  if (auto v = env("TOPORAG_SPLITS")) config.splits = *v;
  if (auto v = env("TOPORAG_MODEL_PATH")) config.model = *v;
  if (auto v = env("TOPORAG_INDEX")) config.index = *v;
  if (auto v = env("TOPORAG_KNOWLEDGE")) config.knowledge = *v;
  if (auto v = env("TOPORAG_PROMPTS")) config.prompts = *v;
  if (auto v = env("TOPORAG_OUT")) config.out = *v;
  if (auto v = env("TOPORAG_BACKEND")) config.backend = *v;
  if (auto v = env("TOPORAG_BASE_URL")) config.http.base_url = *v;
  if (auto v = env("TOPORAG_SEED")) config.seed = convert<std::uint64_t>("TOPORAG_SEED", *v);
}

std::shared_ptr<Backend> make_backend(const RunConfig& config) {
  if (config.replicas == 0) throw Error(Errc::InvalidArgument, "backend replicas must be at least 1");
  std::vector<std::shared_ptr<Backend>> replicas;
  for (std::size_t i = 0; i < config.replicas; ++i) {
    if (config.backend == "mock") {
      replicas.push_back(std::make_shared<MockBackend>(config.mock));
    } else if (config.backend == "http") {
      replicas.push_back(std::make_shared<HttpBackend>(config.http));
    } else {
      throw Error(Errc::InvalidArgument, "unknown backend kind \"" + config.backend + "\" (expected mock or http)");
    }
  }
  return std::make_shared<BackendPool>(std::move(replicas));
}

std::vector<CorpusCase> scan_corpus(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error(Errc::Io, "corpus directory " + dir.string() + " not found");
  std::vector<CorpusCase> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_directory()) continue;
    const auto topo = entry.path() / "topology.json";
    if (!std::filesystem::is_regular_file(topo)) continue;
    CorpusCase c;
    c.case_id = entry.path().filename().string();
    c.topology_path = topo;
    if (const auto driver = entry.path() / "driver.py"; std::filesystem::is_regular_file(driver)) c.driver_path = driver;
    out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.case_id < b.case_id; });
  return out;
}

}  // namespace toporag
