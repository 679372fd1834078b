#include <doctest.h>

#include <set>

#include "helpers.hpp"
#include "../common/tree_digest.hpp"
#include "toporag/agents.hpp"
#include "toporag/error.hpp"
#include "toporag/io.hpp"
#include "toporag/mock_backend.hpp"

using namespace toporag;

namespace {

TopoRagContext context_for(const std::string& rel) {
  return target_only_context(read_text_file(testutil::fixtures() / rel), testutil::fixtures() / "knowledge.txt");
}

void check_history(const CaseState& s) {
  REQUIRE_FALSE(s.history.empty());
  CHECK(s.history.front() == Phase::Plan);
  for (std::size_t i = 1; i < s.history.size(); ++i) {
    CHECK_MESSAGE(is_allowed_transition(s.history[i - 1], s.history[i]),
                  phase_name(s.history[i - 1]) << " -> " << phase_name(s.history[i]));
  }
  CHECK(is_terminal(s.history.back()));
  CHECK(s.history.back() == s.phase);
}

// Devices and blocks whose text differs between two iterations.
std::set<std::string> changed_blocks(const std::filesystem::path& a, const std::filesystem::path& b) {
  std::set<std::string> out;
  for (const auto& entry : std::filesystem::directory_iterator(a / "configs")) {
    const std::string device = entry.path().stem().string();
    const ParsedConfig pa = parse_config(read_text_file(entry.path()));
    const std::string tb = read_text_file(b / "configs" / entry.path().filename());
    const std::string ta = read_text_file(entry.path());
    const ParsedConfig pb = parse_config(tb);
    REQUIRE(pa.blocks.size() == pb.blocks.size());
    for (std::size_t i = 0; i < pa.blocks.size(); ++i) {
      const auto& x = pa.blocks[i];
      const auto& y = pb.blocks[i];
      if (ta.substr(x.begin, x.end - x.begin) != tb.substr(y.begin, y.end - y.begin)) {
        out.insert(device + ":" + x.id);
      }
    }
  }
  return out;
}

}  // namespace

TEST_CASE("phase transition table") {
  CHECK(is_allowed_transition(Phase::Plan, Phase::Generate));
  CHECK(is_allowed_transition(Phase::Generate, Phase::Verify));
  CHECK(is_allowed_transition(Phase::Verify, Phase::Passed));
  CHECK(is_allowed_transition(Phase::Verify, Phase::Repair));
  CHECK(is_allowed_transition(Phase::Verify, Phase::Capped));
  CHECK(is_allowed_transition(Phase::Repair, Phase::Generate));
  CHECK(is_allowed_transition(Phase::Repair, Phase::Capped));
  CHECK(is_allowed_transition(Phase::Generate, Phase::Failed));
  CHECK_FALSE(is_allowed_transition(Phase::Plan, Phase::Verify));
  CHECK_FALSE(is_allowed_transition(Phase::Generate, Phase::Capped));
  CHECK_FALSE(is_allowed_transition(Phase::Passed, Phase::Failed));
  CHECK_FALSE(is_allowed_transition(Phase::Capped, Phase::Generate));
}

TEST_CASE("clean mock passes every fixture at the first iteration") {
  const auto out = testutil::scratch("agents_clean");
  MockBackend mock;
  LoopConfig cfg;
  for (const char* rel : {"two_router.json", "corpus/q_ring5/topology.json", "corpus/q_star5/topology.json",
                          "corpus/q_chain4/topology.json", "corpus/q_switched/topology.json"}) {
    const CaseState s = run_case(std::filesystem::path(rel).parent_path().filename().string() + "x",
                                 context_for(rel), mock, envelope(0.2), cfg, out);
    CHECK_MESSAGE(s.phase == Phase::Passed, rel);
    CHECK(s.pass_iteration == 1);
    CHECK(s.verify_runs == 1);
    check_history(s);
  }
}

TEST_CASE("text-only backends pass through the alignment path") {
  const auto out = testutil::scratch("agents_text");
  MockOptions opts;
  opts.expose_logits = false;
  MockBackend mock(opts);
  const CaseState s = run_case("t", context_for("corpus/q_ring5/topology.json"), mock, envelope(0.2), LoopConfig{}, out);
  CHECK(s.phase == Phase::Passed);
  CHECK(s.pass_iteration == 1);
}

TEST_CASE("a single scripted fault is repaired locally at the second iteration") {
  const auto out = testutil::scratch("agents_scripted");
  MockOptions opts;
  opts.scripted.push_back({"", 1, FaultKind::V4, "r2"});
  MockBackend mock(opts);
  LoopConfig cfg;
  cfg.constrained_decoding = false;
  const CaseState s = run_case("sc", context_for("corpus/q_ring5/topology.json"), mock, envelope(0.3), cfg, out);
  CHECK(s.phase == Phase::Passed);
  CHECK(s.pass_iteration == 2);
  CHECK(s.verify_runs == 2);
  check_history(s);

  const auto patches = patches_from_json(read_json_file(out / "sc/iter_1/patches.json"));
  REQUIRE_FALSE(patches.empty());
  for (const auto& p : patches) CHECK(p.device == "r2");
  const auto changed = changed_blocks(out / "sc/iter_1", out / "sc/iter_2");
  REQUIRE(changed.size() == 1);
  CHECK(*changed.begin() == "r2:" + patches.front().block);
}

TEST_CASE("scripted faults are masked away when decoding is constrained") {
  const auto out = testutil::scratch("agents_masked");
  MockOptions opts;
  opts.scripted.push_back({"", 1, FaultKind::V4, "r2"});
  MockBackend mock(opts);
  const CaseState s = run_case("m", context_for("corpus/q_ring5/topology.json"), mock, envelope(0.3), LoopConfig{}, out);
  CHECK(s.pass_iteration == 1);
}

TEST_CASE("an unrepairable fault caps exactly at the iteration budget") {
  const auto out = testutil::scratch("agents_capped");
  MockOptions opts;
  opts.fault_rate = 1.0;
  opts.fault_kind = FaultKind::V3;
  MockBackend mock(opts);
  LoopConfig cfg;
  cfg.constrained_decoding = false;
  const BudgetEnvelope env = envelope(0.25);
  const CaseState s = run_case("cap", context_for("two_router.json"), mock, env, cfg, out);
  CHECK(s.phase == Phase::Capped);
  CHECK(s.iteration == env.max_iterations);
  CHECK(s.verify_runs == env.max_iterations);
  CHECK(s.failure_mode == "persistent_verify_fail");
  CHECK_FALSE(s.pass_iteration.has_value());
  check_history(s);
  CHECK(std::filesystem::exists(out / "cap" / ("iter_" + std::to_string(env.max_iterations))));
  CHECK_FALSE(std::filesystem::exists(out / "cap" / ("iter_" + std::to_string(env.max_iterations + 1))));
}

TEST_CASE("planning contract retries and failure modes") {
  const auto out = testutil::scratch("agents_contract");
  MockOptions once;
  once.plan_garbage_attempts = 1;
  MockBackend recovering(once);
  const CaseState ok = run_case("r", context_for("two_router.json"), recovering, envelope(0.1), LoopConfig{}, out);
  CHECK(ok.phase == Phase::Passed);
  std::size_t violations = 0;
  for (const auto& c : ok.calls) violations += c.outcome == "contract_violation";
  CHECK(violations == 1);

  MockOptions always;
  always.plan_garbage_attempts = 100;
  MockBackend garbage(always);
  const CaseState bad = run_case("g", context_for("two_router.json"), garbage, envelope(0.1), LoopConfig{}, out);
  CHECK(bad.phase == Phase::Failed);
  CHECK(bad.failure_mode == "contract_violation");
  check_history(bad);

  MockOptions down;
  down.always_fail = true;
  MockBackend broken(down);
  const CaseState err = run_case("b", context_for("two_router.json"), broken, envelope(0.1), LoopConfig{}, out);
  CHECK(err.phase == Phase::Failed);
  CHECK(err.failure_mode == "backend_error");
  CHECK(std::filesystem::exists(out / "b/state.json"));
}

TEST_CASE("token caps are enforced per call") {
  const auto out = testutil::scratch("agents_tokens");
  MockBackend mock;
  BudgetEnvelope tiny = envelope(0.0);
  tiny.token_cap_per_call = 20;
  const CaseState s = run_case("tok", context_for("corpus/q_ring5/topology.json"), mock, tiny, LoopConfig{}, out);
  CHECK(s.phase == Phase::Failed);
  CHECK(s.failure_mode == "contract_violation");
  const CaseState fine = run_case("ok", context_for("two_router.json"), mock, envelope(0.0), LoopConfig{}, out);
  for (const auto& c : fine.calls) CHECK(c.tokens_used <= c.token_cap);
}

TEST_CASE("runs are reproducible apart from timing") {
  const auto a = testutil::scratch("agents_det_a");
  const auto b = testutil::scratch("agents_det_b");
  MockOptions opts;
  opts.fault_rate = 0.3;
  opts.fault_kind = FaultKind::V6;
  LoopConfig cfg;
  cfg.seed = 5;
  cfg.greedy = false;
  MockBackend m1(opts), m2(opts);
  const auto ctx = context_for("corpus/q_star5/topology.json");
  run_case("d", ctx, m1, envelope(0.6), cfg, a);
  run_case("d", ctx, m2, envelope(0.6), cfg, b);
  CHECK(testutil::tree_digest(a) == testutil::tree_digest(b));
  const auto state = read_json_file(a / "d/state.json");
  CHECK(state.contains("timing"));
}

TEST_CASE("case seeds depend on the id") {
  CHECK(case_seed(1, "a") == case_seed(1, "a"));
  CHECK(case_seed(1, "a") != case_seed(1, "b"));
  CHECK(case_seed(1, "a") != case_seed(2, "a"));
}

TEST_CASE("prompt templates load from a directory") {
  const auto p = PromptTemplates::load(std::filesystem::path(TOPORAG_SOURCE_DIR) / "prompts");
  CHECK(p.planning.find("Planning agent") != std::string::npos);
  CHECK(p.verify.find("regenerate-block") != std::string::npos);
  CHECK_THROWS_AS(PromptTemplates::load(testutil::scratch("no_prompts")), Error);
}
