#include "toporag/agents.hpp"

#include <algorithm>
#include <chrono>
#include <set>
#include <sstream>

#include "toporag/error.hpp"
#include "toporag/io.hpp"
#include "toporag/rng.hpp"

namespace toporag {

namespace {

using Clock = std::chrono::steady_clock;

void check_cap(const BackendResponse& response, std::size_t cap, AgentRole role) {
  if (response.truncated || response.tokens_used > cap) {
    throw Error(Errc::TokenCapExceeded, std::string(role_name(role)) + " output exceeded the " +
                                            std::to_string(cap) + "-token cap");
  }
}

void add_context_parts(BackendRequest& request, const TopoRagContext& context) {
  request.prompt_parts.push_back({"target_topology", context.target_topology});
  if (context.has_reference()) {
    request.prompt_parts.push_back({"reference_topology", context.reference_topology});
    request.prompt_parts.push_back({"reference_driver", context.reference_driver});
  }
  request.prompt_parts.push_back({"background_knowledge", context.background_knowledge});
}

std::string failure_mode_of(Errc code) {
  switch (code) {
    case Errc::TokenCapExceeded:
    case Errc::ContractViolation:
    case Errc::MalformedJson: return "contract_violation";
    case Errc::EmptyPermittedSet:
    case Errc::EmptyConstraint: return "empty_constraint";
    default: return "backend_error";
  }
}

bool permits(const Placeholder& slot, const std::string& value, const TopologyDoc& topo, const TokenVocab& vocab) {
  const auto id = vocab.find(value);
  if (!id) return false;
  const auto allowed = permitted_for_placeholder(slot, topo, vocab);
  return std::binary_search(allowed.begin(), allowed.end(), *id);
}

// Parses {"configs": {...}} and aligns every device to its template.
std::vector<DecodedDevice> align_response(const std::string& text, const Skeleton& skeleton, std::string& driver) {
  nlohmann::json body;
  try {
    body = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception&) {
    throw Error(Errc::ContractViolation, "generation output is not JSON");
  }
  if (!body.is_object() || !body.contains("configs") || !body.at("configs").is_object()) {
    throw Error(Errc::ContractViolation, "generation output needs a \"configs\" object");
  }
  if (body.contains("driver") && body.at("driver").is_string()) driver = body.at("driver").get<std::string>();
  std::vector<DecodedDevice> out;
  for (const DeviceSkeleton& dev : skeleton.devices) {
    const auto& configs = body.at("configs");
    if (!configs.contains(dev.device) || !configs.at(dev.device).is_string()) {
      throw Error(Errc::ContractViolation, "no config for " + dev.device);
    }
    auto aligned = align_to_skeleton(dev, configs.at(dev.device).get<std::string>());
    if (!aligned) throw Error(Errc::ContractViolation, "config for " + dev.device + " does not follow its template");
    out.push_back(std::move(*aligned));
  }
  return out;
}

}  // namespace

std::string_view phase_name(Phase phase) {
  switch (phase) {
    case Phase::Plan: return "PLAN";
    case Phase::Generate: return "GENERATE";
    case Phase::Verify: return "VERIFY";
    case Phase::Repair: return "REPAIR";
    case Phase::Passed: return "PASSED";
    case Phase::Capped: return "CAPPED";
    case Phase::Failed: return "FAILED";
  }
  return "?";
}

bool is_terminal(Phase phase) { return phase == Phase::Passed || phase == Phase::Capped || phase == Phase::Failed; }

bool is_allowed_transition(Phase from, Phase to) {
  if (is_terminal(from)) return false;
  if (to == Phase::Failed) return true;
  switch (from) {
    case Phase::Plan: return to == Phase::Generate;
    case Phase::Generate: return to == Phase::Verify;
    case Phase::Verify: return to == Phase::Passed || to == Phase::Repair || to == Phase::Capped;
    case Phase::Repair: return to == Phase::Generate || to == Phase::Capped;
    default: return false;
  }
}

PromptTemplates PromptTemplates::builtin() {
  return {
      "You are the Planning agent. Read the target topology and the retrieved reference. Answer with one JSON "
      "object {\"plan\", \"templates\", \"lexicon\"}: a per-device plan, an annotated config template per router, "
      "and the literal values the templates need.",
      "You are the Generation agent. Fill every slot of the templates. Answer with one JSON object "
      "{\"configs\": {device: text}} and keep all fixed text unchanged.",
      "You are the Verify agent in repair mode. Read the failure trace and the proposed directives. Answer with a "
      "JSON array of patch directives {device, block, edit, rationale} touching only devices in the trace.",
  };
}

PromptTemplates PromptTemplates::load(const std::filesystem::path& dir) {
  return {read_text_file(dir / "planning.txt"), read_text_file(dir / "generation.txt"),
          read_text_file(dir / "verify.txt")};
}

nlohmann::json CallRecord::to_json() const {
  return {{"role", role_name(role)},     {"iteration", iteration}, {"attempt", attempt},
          {"tokens_used", tokens_used}, {"token_cap", token_cap}, {"outcome", outcome}};
}

PlanResult plan(Backend& backend, const TopoRagContext& context, const BudgetEnvelope& envelope,
                const LoopConfig& config, const std::string& case_id, std::vector<CallRecord>* calls) {
  const TopologyDoc target = parse_topology(context.target_topology, case_id);
  const auto cap = static_cast<std::size_t>(envelope.token_cap_per_call);
  std::string last_violation;

  for (int attempt = 0; attempt <= config.contract_retries; ++attempt) {
    BackendRequest request;
    request.role = AgentRole::Planning;
    request.system_prompt = config.prompts.planning;
    add_context_parts(request, context);
    if (!last_violation.empty()) request.prompt_parts.push_back({"contract_violation", last_violation});
    request.token_cap = cap;
    request.seed = derive_seed(case_seed(config.seed, case_id), 100 + static_cast<std::uint64_t>(attempt));
    request.case_id = case_id;
    request.attempt = attempt;

    const BackendResponse response = backend.complete(request);
    CallRecord record{AgentRole::Planning, 0, attempt, response.tokens_used, cap, "ok"};
    try {
      check_cap(response, cap, AgentRole::Planning);
    } catch (const Error&) {
      record.outcome = "token_cap";
      if (calls != nullptr) calls->push_back(record);
      throw;
    }

    try {
      nlohmann::json body;
      try {
        body = nlohmann::json::parse(response.text);
      } catch (const nlohmann::json::exception&) {
        throw Error(Errc::ContractViolation, "planning output is not JSON");
      }
      if (!body.is_object() || !body.contains("plan") || !body.at("plan").is_object() ||
          !body.contains("templates") || !body.at("templates").is_object()) {
        throw Error(Errc::ContractViolation, "planning output needs \"plan\" and \"templates\" objects");
      }
      PlanResult result;
      result.plan = body.at("plan");
      const auto& templates = body.at("templates");
      for (const auto& [device, text] : templates.items()) {
        if (!target.is_router(device)) throw Error(Errc::ContractViolation, "template for non-router " + device);
        if (!text.is_string()) throw Error(Errc::ContractViolation, "template for " + device + " is not text");
      }
      for (const std::string& device : target.device_order()) {
        if (!target.is_router(device)) continue;
        if (!templates.contains(device)) throw Error(Errc::ContractViolation, "no template for router " + device);
        result.skeleton.devices.push_back(parse_template(device, templates.at(device).get<std::string>()));
      }
      if (body.contains("lexicon") && body.at("lexicon").is_array()) {
        for (const auto& word : body.at("lexicon")) {
          if (word.is_string()) result.lexicon.push_back(word.get<std::string>());
        }
      }
      const auto problems = skeleton_problems(result.skeleton, target);
      if (!problems.empty()) throw Error(Errc::ContractViolation, "invalid skeleton: " + problems.front());
      if (calls != nullptr) calls->push_back(record);
      return result;
    } catch (const Error& e) {
      if (e.code() != Errc::ContractViolation) throw;
      record.outcome = "contract_violation";
      if (calls != nullptr) calls->push_back(record);
      last_violation = e.detail();
    }
  }
  throw Error(Errc::ContractViolation,
              "planning failed after " + std::to_string(config.contract_retries + 1) + " attempts: " + last_violation);
}

std::map<PlaceholderKey, std::string> forced_values(const Skeleton& skeleton, const Generation& previous,
                                                    const std::vector<PatchDirective>& patches) {
  std::map<PlaceholderKey, std::string> out;
  std::vector<char> used(patches.size(), 0);
  for (std::size_t d = 0; d < skeleton.devices.size(); ++d) {
    const std::string& name = skeleton.devices[d].device;
    auto prev = std::find_if(previous.devices.begin(), previous.devices.end(),
                             [&](const DecodedDevice& dd) { return dd.device == name; });
    if (prev == previous.devices.end()) continue;
    const std::size_t slots = skeleton.devices[d].placeholders().size();
    if (prev->values.size() != slots) continue;

    const ParsedConfig parsed = parse_config(prev->text);
    bool whole_device = false;
    std::vector<std::pair<std::size_t, std::size_t>> regenerated;
    for (const PatchDirective& p : patches) {
      if (p.device != name || p.edit != PatchDirective::Edit::RegenerateBlock) continue;
      if (p.block == "device") {
        whole_device = true;
      } else if (const ConfigBlock* block = parsed.find(p.block)) {
        regenerated.push_back({block->begin, block->end});
      } else {
        whole_device = true;
      }
    }
    if (whole_device) continue;

    for (std::size_t k = 0; k < slots; ++k) {
      const std::size_t at = prev->value_offsets[k];
      if (std::any_of(regenerated.begin(), regenerated.end(),
                      [&](const auto& r) { return at >= r.first && at < r.second; })) {
        continue;
      }
      std::string value = prev->values[k];
      for (std::size_t i = 0; i < patches.size(); ++i) {
        const PatchDirective& p = patches[i];
        if (used[i] || p.device != name || p.edit != PatchDirective::Edit::Substitute || p.from != value) continue;
        const ConfigBlock* block = parsed.find(p.block);
        if (block == nullptr || at < block->begin || at >= block->end) continue;
        value = p.to;
        used[i] = 1;
        break;
      }
      out[{d, k}] = std::move(value);
    }
  }
  return out;
}

TokenVocab build_vocab(const TopoRagContext& context, const PlanResult& plan, const std::vector<std::string>& extra) {
  TokenVocab vocab;
  vocab.add_text(context.target_topology);
  vocab.add_text(context.reference_topology);
  vocab.add_text(context.reference_driver);
  vocab.add_text(context.background_knowledge);
  for (std::size_t d = 0; d < plan.skeleton.devices.size(); ++d) vocab.add_text(plan.skeleton.render(d));
  for (const auto& word : plan.lexicon) vocab.add(word);
  for (const auto& word : extra) vocab.add(word);
  return vocab;
}

std::string render_driver(const TopologyDoc& topo) {
  std::ostringstream out;
  out << "#!/usr/bin/env python3\n"
      << "\"\"\"Topotest driver for " << topo.case_id << ".\"\"\"\n\n"
      << "import os\n\nimport pytest\n\n"
      << "from lib.topogen import Topogen, get_topogen\n\n"
      << "CWD = os.path.dirname(os.path.realpath(__file__))\n\n\n"
      << "def build_topo(tgen):\n";
  for (const auto& name : topo.device_order()) {
    out << "    tgen.add_" << (topo.is_router(name) ? "router" : "switch") << "(\"" << name << "\")\n";
  }
  for (const Link& l : canonical_links(topo)) {
    out << "    tgen.add_link(tgen.gears[\"" << l.a << "\"], tgen.gears[\"" << l.b << "\"], \"" << l.a_if
        << "\", \"" << l.b_if << "\")\n";
  }
  out << "\n\n"
      << "@pytest.fixture(scope=\"module\")\n"
      << "def tgen(request):\n"
      << "    tgen = Topogen(build_topo, request.module.__name__)\n"
      << "    tgen.start_topology()\n"
      << "    for rname, router in tgen.routers().items():\n"
      << "        router.load_frr_config(os.path.join(CWD, \"configs\", \"{}.conf\".format(rname)))\n"
      << "    tgen.start_router()\n"
      << "    yield tgen\n"
      << "    tgen.stop_topology()\n\n\n"
      << "def test_bgp_sessions(tgen):\n"
      << "    for router in tgen.routers().values():\n"
      << "        output = router.vtysh_cmd(\"show bgp summary json\", isjson=True)\n"
      << "        assert output, \"no bgp state on {}\".format(router.name)\n";
  return out.str();
}

Generation generate(Backend& backend, const TopoRagContext& context, const PlanResult& plan,
                    const BudgetEnvelope& envelope, const LoopConfig& config, std::uint64_t seed,
                    const GenerateInputs& inputs, std::vector<CallRecord>* calls) {
  const TopologyDoc target = parse_topology(context.target_topology, inputs.case_id);
  const auto cap = static_cast<std::size_t>(envelope.token_cap_per_call);
  if (const auto problems = skeleton_problems(plan.skeleton, target); !problems.empty()) {
    throw Error(Errc::InvalidArgument, "invalid skeleton: " + problems.front());
  }

  std::map<PlaceholderKey, std::string> forced;
  if (inputs.previous != nullptr) {
    static const std::vector<PatchDirective> kNone;
    forced = forced_values(plan.skeleton, *inputs.previous, inputs.patches != nullptr ? *inputs.patches : kNone);
  }
  std::vector<std::string> extra;
  for (const auto& [key, value] : forced) extra.push_back(value);
  const TokenVocab vocab = build_vocab(context, plan, extra);

  BackendRequest request;
  request.role = AgentRole::Generation;
  request.system_prompt = config.prompts.generation;
  add_context_parts(request, context);
  request.prompt_parts.push_back({"plan", plan.plan.dump()});
  request.prompt_parts.push_back({"skeleton", plan.skeleton.to_json().dump()});
  if (!forced.empty()) {
    nlohmann::json pinned = nlohmann::json::array();
    for (const auto& [key, value] : forced) {
      pinned.push_back({{"device", plan.skeleton.devices[key.first].device}, {"slot", key.second}, {"value", value}});
    }
    request.prompt_parts.push_back({"pinned_values", pinned.dump()});
  }
  request.token_cap = cap;
  request.seed = seed;
  request.case_id = inputs.case_id;
  request.iteration = inputs.iteration;

  Generation out;
  std::string driver;
  StreamRequest stream_request{request, &plan.skeleton, &target, &vocab};
  if (auto stream = backend.open_stream(stream_request)) {
    DecodeOptions options;
    options.greedy = config.greedy;
    options.constrained = config.constrained_decoding;
    options.forced = forced;
    CallRecord record{AgentRole::Generation, inputs.iteration, 0, 0, cap, "ok"};
    try {
      DecodeResult decoded = decode_with_skeleton(*stream, plan.skeleton, target, vocab, cap, seed, options);
      out.devices = std::move(decoded.devices);
      out.tokens_used = decoded.tokens_used;
      record.tokens_used = decoded.tokens_used;
    } catch (const Error& e) {
      record.tokens_used = e.code() == Errc::TokenCapExceeded ? cap : 0;
      record.outcome = e.code() == Errc::TokenCapExceeded ? "token_cap" : "error";
      if (calls != nullptr) calls->push_back(record);
      throw;
    }
    if (calls != nullptr) calls->push_back(record);
    out.streamed = true;
  } else {
    std::string last_violation;
    std::vector<DecodedDevice> aligned;
    for (int attempt = 0;; ++attempt) {
      BackendRequest retry = request;
      retry.attempt = attempt;
      if (!last_violation.empty()) retry.prompt_parts.push_back({"contract_violation", last_violation});
      const BackendResponse response = backend.complete(retry);
      CallRecord record{AgentRole::Generation, inputs.iteration, attempt, response.tokens_used, cap, "ok"};
      out.tokens_used += response.tokens_used;
      try {
        check_cap(response, cap, AgentRole::Generation);
        aligned = align_response(response.text, plan.skeleton, driver);
        if (calls != nullptr) calls->push_back(record);
        break;
      } catch (const Error& e) {
        record.outcome = e.code() == Errc::TokenCapExceeded ? "token_cap" : "contract_violation";
        if (calls != nullptr) calls->push_back(record);
        if (e.code() != Errc::ContractViolation || attempt >= config.contract_retries) throw;
        last_violation = e.detail();
      }
    }
    // Post-hoc enforcement: pinned slots win, then the model's value if it is
    // permitted, then the previous value, then the first permitted token.
    for (std::size_t d = 0; d < plan.skeleton.devices.size(); ++d) {
      const DeviceSkeleton& dev = plan.skeleton.devices[d];
      const auto slots = dev.placeholders();
      std::vector<std::string> values = aligned[d].values;
      for (std::size_t k = 0; k < slots.size(); ++k) {
        if (auto it = forced.find({d, k}); it != forced.end()) {
          values[k] = it->second;
          continue;
        }
        if (!config.constrained_decoding || permits(*slots[k], values[k], target, vocab)) continue;
        std::string fallback;
        if (inputs.previous != nullptr && d < inputs.previous->devices.size() &&
            k < inputs.previous->devices[d].values.size() &&
            permits(*slots[k], inputs.previous->devices[d].values[k], target, vocab)) {
          fallback = inputs.previous->devices[d].values[k];
        } else {
          fallback = vocab.token(permitted_for_placeholder(*slots[k], target, vocab).front());
        }
        values[k] = fallback;
      }
      out.devices.push_back(instantiate(dev, values));
    }
  }

  for (const DecodedDevice& dev : out.devices) out.artifact.configs[dev.device] = dev.text;
  out.artifact.driver = driver.empty() ? render_driver(target) : driver;
  return out;
}

std::vector<PatchDirective> repair(Backend& backend, const FailureTrace& trace, const ConfigArtifact& artifact,
                                   const TopologyDoc& topo, const BudgetEnvelope& envelope, const LoopConfig& config,
                                   std::uint64_t seed, int iteration, const std::string& case_id,
                                   std::vector<CallRecord>* calls) {
  const std::vector<PatchDirective> proposal = propose_patches(trace, artifact, topo);
  const auto cap = static_cast<std::size_t>(envelope.token_cap_per_call);
  std::set<std::string> trace_devices;
  for (const auto& v : trace.entries) trace_devices.insert(v.device);

  nlohmann::json affected = nlohmann::json::object();
  for (const auto& device : trace_devices) {
    if (auto it = artifact.configs.find(device); it != artifact.configs.end()) affected[device] = it->second;
  }

  std::string last_violation;
  for (int attempt = 0; attempt <= config.contract_retries; ++attempt) {
    BackendRequest request;
    request.role = AgentRole::Verify;
    request.system_prompt = config.prompts.verify;
    request.prompt_parts.push_back({"trace", trace.to_json().dump()});
    request.prompt_parts.push_back({"configs", affected.dump()});
    request.prompt_parts.push_back({"proposal", patches_to_json(proposal).dump()});
    if (!last_violation.empty()) request.prompt_parts.push_back({"contract_violation", last_violation});
    request.token_cap = cap;
    request.seed = derive_seed(seed, static_cast<std::uint64_t>(attempt));
    request.case_id = case_id;
    request.iteration = iteration;
    request.attempt = attempt;

    const BackendResponse response = backend.complete(request);
    CallRecord record{AgentRole::Verify, iteration, attempt, response.tokens_used, cap, "ok"};
    try {
      check_cap(response, cap, AgentRole::Verify);
    } catch (const Error&) {
      record.outcome = "token_cap";
      if (calls != nullptr) calls->push_back(record);
      throw;
    }
    try {
      std::vector<PatchDirective> patches;
      try {
        patches = patches_from_json(nlohmann::json::parse(response.text));
      } catch (const nlohmann::json::exception&) {
        throw Error(Errc::ContractViolation, "verify output is not JSON");
      } catch (const Error& e) {
        throw Error(Errc::ContractViolation, e.detail());
      }
      for (const PatchDirective& p : patches) {
        if (trace_devices.count(p.device) == 0) {
          throw Error(Errc::ContractViolation, "directive names " + p.device + ", which is not in the trace");
        }
        auto it = artifact.configs.find(p.device);
        if (p.block != "device" && (it == artifact.configs.end() || parse_config(it->second).find(p.block) == nullptr)) {
          throw Error(Errc::ContractViolation, "directive names unknown block \"" + p.block + "\" on " + p.device);
        }
        if (p.edit == PatchDirective::Edit::Substitute && p.from.empty()) {
          throw Error(Errc::ContractViolation, "substitution without a value to replace");
        }
      }
      if (calls != nullptr) calls->push_back(record);
      return patches;
    } catch (const Error& e) {
      record.outcome = "contract_violation";
      if (calls != nullptr) calls->push_back(record);
      last_violation = e.detail();
    }
  }
  if (calls != nullptr && !calls->empty()) calls->back().outcome = "fallback";
  return proposal;
}

std::uint64_t case_seed(std::uint64_t base, std::string_view case_id) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : case_id) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return derive_seed(base, h);
}

nlohmann::json CaseState::to_json() const {
  nlohmann::json hist = nlohmann::json::array();
  for (Phase p : history) hist.push_back(phase_name(p));
  nlohmann::json call_list = nlohmann::json::array();
  for (const auto& c : calls) call_list.push_back(c.to_json());
  return {{"case_id", case_id},
          {"phase", phase_name(phase)},
          {"iteration", iteration},
          {"envelope", envelope.to_json()},
          {"history", std::move(hist)},
          {"calls", std::move(call_list)},
          {"tokens_total", tokens_total},
          {"verify_runs", verify_runs},
          {"pass_iteration", pass_iteration ? nlohmann::json(*pass_iteration) : nlohmann::json()},
          {"failure_mode", failure_mode},
          {"error", error},
          {"timing", {{"wall_clock_s", wall_clock_s}, {"phase_seconds", phase_seconds}}}};
}

CaseState run_case(const std::string& case_id, const TopoRagContext& context, Backend& backend,
                   const BudgetEnvelope& envelope, const LoopConfig& config, const std::filesystem::path& out_dir) {
  if (!is_safe_case_id(case_id)) throw Error(Errc::InvalidArgument, "unsafe case id \"" + case_id + "\"");
  if (envelope.max_iterations < 1 || envelope.token_cap_per_call < 1) {
    throw Error(Errc::InvalidArgument, "envelope needs at least one iteration and one token");
  }
  const auto started = Clock::now();
  CaseState state;
  state.case_id = case_id;
  state.envelope = envelope;
  const std::filesystem::path dir = out_dir / case_id;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);

  auto phase_started = Clock::now();
  auto enter = [&](Phase next) {
    const auto now = Clock::now();
    if (!state.history.empty()) {
      state.phase_seconds[std::string(phase_name(state.phase))] +=
          std::chrono::duration<double>(now - phase_started).count();
      if (!is_allowed_transition(state.phase, next)) {
        throw Error(Errc::InvalidArgument, std::string("illegal transition ") + std::string(phase_name(state.phase)) +
                                               " -> " + std::string(phase_name(next)));
      }
    }
    phase_started = now;
    state.phase = next;
    state.history.push_back(next);
  };
  auto finish = [&]() {
    state.tokens_total = 0;
    for (const auto& c : state.calls) state.tokens_total += c.tokens_used;
    state.wall_clock_s = std::chrono::duration<double>(Clock::now() - started).count();
    write_json_file(dir / "state.json", state.to_json());
    return state;
  };
  auto fail = [&](const Error& e) {
    state.failure_mode = failure_mode_of(e.code());
    state.error = e.what();
    enter(Phase::Failed);
    return finish();
  };

  enter(Phase::Plan);
  write_json_file(dir / "context.json", context.to_json());
  const std::uint64_t seed = case_seed(config.seed, case_id);

  PlanResult planned;
  TopologyDoc target;
  try {
    target = parse_topology(context.target_topology, case_id);
    planned = plan(backend, context, envelope, config, case_id, &state.calls);
  } catch (const Error& e) {
    return fail(e);
  }
  write_json_file(dir / "plan.json", {{"plan", planned.plan}, {"lexicon", planned.lexicon}});
  write_json_file(dir / "skeleton.json", planned.skeleton.to_json());

  Generation previous;
  std::vector<PatchDirective> patches;
  for (int k = 1; k <= envelope.max_iterations; ++k) {
    state.iteration = k;
    const std::filesystem::path iter_dir = dir / ("iter_" + std::to_string(k));
    enter(Phase::Generate);
    Generation current;
    try {
      GenerateInputs inputs;
      inputs.previous = k > 1 ? &previous : nullptr;
      inputs.patches = k > 1 ? &patches : nullptr;
      inputs.iteration = k;
      inputs.case_id = case_id;
      current = generate(backend, context, planned, envelope, config, derive_seed(seed, 1000 + static_cast<std::uint64_t>(k)),
                         inputs, &state.calls);
    } catch (const Error& e) {
      return fail(e);
    }
    for (const auto& [device, text] : current.artifact.configs) {
      write_text_file(iter_dir / "configs" / (device + ".conf"), text);
    }
    write_text_file(iter_dir / "driver.py", current.artifact.driver);

    enter(Phase::Verify);
    const Verdict verdict = verify(current.artifact, target);
    ++state.verify_runs;
    write_json_file(iter_dir / "verdict.json", verdict.to_json());
    if (verdict.pass) {
      state.pass_iteration = k;
      enter(Phase::Passed);
      return finish();
    }
    const FailureTrace trace = trim(verdict, config.n_trim);
    write_json_file(iter_dir / "trace.json", trace.to_json());

    enter(Phase::Repair);
    try {
      patches = repair(backend, trace, current.artifact, target, envelope, config,
                       derive_seed(seed, 2000 + static_cast<std::uint64_t>(k)), k, case_id, &state.calls);
    } catch (const Error& e) {
      return fail(e);
    }
    write_json_file(iter_dir / "patches.json", patches_to_json(patches));
    previous = std::move(current);
  }
  state.failure_mode = "persistent_verify_fail";
  enter(Phase::Capped);
  return finish();
}

}  // namespace toporag
