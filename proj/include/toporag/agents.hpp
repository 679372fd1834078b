#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "toporag/backend.hpp"
#include "toporag/budget.hpp"
#include "toporag/decoding.hpp"
#include "toporag/retrieval.hpp"
#include "toporag/verify.hpp"

namespace toporag {

enum class Phase { Plan, Generate, Verify, Repair, Passed, Capped, Failed };

std::string_view phase_name(Phase phase);
bool is_terminal(Phase phase);
// PLAN->GENERATE->VERIFY->{PASSED | REPAIR->GENERATE}; CAPPED from VERIFY or
// REPAIR; FAILED from any non-terminal phase on a hard error.
bool is_allowed_transition(Phase from, Phase to);

struct PromptTemplates {
  std::string planning;
  std::string generation;
  std::string verify;

  static PromptTemplates builtin();
  // Reads planning.txt, generation.txt and verify.txt from `dir`.
  static PromptTemplates load(const std::filesystem::path& dir);
};

struct LoopConfig {
  std::size_t n_trim = kDefaultTrim;
  // Per-token masking on logit-exposing backends and post-hoc slot checks
  // on text backends. Off reproduces unconstrained decoding.
  bool constrained_decoding = true;
  bool greedy = true;
  std::uint64_t seed = 0;
  int contract_retries = 2;
  PromptTemplates prompts = PromptTemplates::builtin();
};

struct CallRecord {
  AgentRole role = AgentRole::Planning;
  int iteration = 0;
  int attempt = 0;
  std::size_t tokens_used = 0;
  std::size_t token_cap = 0;
  std::string outcome;  // "ok", "contract_violation" or "fallback"

  nlohmann::json to_json() const;
};

struct PlanResult {
  nlohmann::json plan;
  Skeleton skeleton;
  std::vector<std::string> lexicon;
};

// Asks the planning agent for {"plan", "templates", "lexicon"} and checks the
// templates against the target. Retries with the violation appended.
PlanResult plan(Backend& backend, const TopoRagContext& context, const BudgetEnvelope& envelope,
                const LoopConfig& config, const std::string& case_id = {}, std::vector<CallRecord>* calls = nullptr);

struct Generation {
  ConfigArtifact artifact;
  std::vector<DecodedDevice> devices;  // skeleton order
  std::size_t tokens_used = 0;
  bool streamed = false;
};

// Slot values carried over from `previous`: patched slots take the directive's
// value, slots inside regenerated blocks are left free, everything else keeps
// its previous value.
std::map<PlaceholderKey, std::string> forced_values(const Skeleton& skeleton, const Generation& previous,
                                                    const std::vector<PatchDirective>& patches);

// Word-level vocabulary over the grounding context, the rendered templates,
// the plan lexicon and any extra values.
TokenVocab build_vocab(const TopoRagContext& context, const PlanResult& plan,
                       const std::vector<std::string>& extra = {});

// Placeholder test-driver text for a target topology.
std::string render_driver(const TopologyDoc& topo);

struct GenerateInputs {
  const Generation* previous = nullptr;
  const std::vector<PatchDirective>* patches = nullptr;
  int iteration = 1;
  std::string case_id;
};

Generation generate(Backend& backend, const TopoRagContext& context, const PlanResult& plan,
                    const BudgetEnvelope& envelope, const LoopConfig& config, std::uint64_t seed,
                    const GenerateInputs& inputs = {}, std::vector<CallRecord>* calls = nullptr);

// Verify agent in repair mode. The deterministic proposal is offered to the
// backend; an answer that breaks the directive contract after all retries
// falls back to the proposal.
std::vector<PatchDirective> repair(Backend& backend, const FailureTrace& trace, const ConfigArtifact& artifact,
                                   const TopologyDoc& topo, const BudgetEnvelope& envelope, const LoopConfig& config,
                                   std::uint64_t seed, int iteration, const std::string& case_id = {},
                                   std::vector<CallRecord>* calls = nullptr);

struct CaseState {
  std::string case_id;
  Phase phase = Phase::Plan;
  int iteration = 0;
  BudgetEnvelope envelope;
  std::vector<Phase> history;  // every phase entered, in order
  std::vector<CallRecord> calls;
  std::size_t tokens_total = 0;
  int verify_runs = 0;
  std::optional<int> pass_iteration;
  std::string failure_mode;  // contract_violation, empty_constraint, persistent_verify_fail, backend_error
  std::string error;
  std::map<std::string, double> phase_seconds;
  double wall_clock_s = 0.0;

  // Wall-clock values live under "timing" only.
  nlohmann::json to_json() const;
};

// Stable 64-bit hash of a case id, used to derive per-case seeds.
std::uint64_t case_seed(std::uint64_t base, std::string_view case_id);

// Runs PLAN once, then GENERATE -> VERIFY (-> REPAIR) up to
// envelope.max_iterations, persisting every artifact under out_dir/case_id.
// Errors never escape: they end the case in FAILED with a failure mode.
CaseState run_case(const std::string& case_id, const TopoRagContext& context, Backend& backend,
                   const BudgetEnvelope& envelope, const LoopConfig& config, const std::filesystem::path& out_dir);

}  // namespace toporag
