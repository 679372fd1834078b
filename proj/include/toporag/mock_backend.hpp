#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "toporag/backend.hpp"

namespace toporag {

// Fault classes, named after the verifier rule they trip.
enum class FaultKind { V3, V4, V5, V6 };

std::string_view fault_name(FaultKind kind);
std::optional<FaultKind> parse_fault(std::string_view name);

// Forces one fault on a specific generation call.
struct ScriptedFault {
  std::string case_id;  // empty matches every case
  int iteration = 1;
  FaultKind kind = FaultKind::V4;
  std::string device;  // empty picks the first eligible slot
};

struct MockOptions {
  double fault_rate = 0.0;  // per eligible slot, per generation call
  FaultKind fault_kind = FaultKind::V5;
  std::vector<ScriptedFault> scripted;
  // Without a retrieved reference, plan naive addressing (every link
  // endpoint takes host .1) instead of the canonical scheme.
  bool requires_reference = false;
  // Planning attempts per case answered with non-JSON text.
  int plan_garbage_attempts = 0;
  bool expose_logits = true;
  bool always_fail = false;
};

// Per-device template for routers: one interface block per linked
// interface, then a BGP block with a neighbor per router peer.
Skeleton mock_skeleton(const TopologyDoc& topo);

// Value the mock intends for a slot.
std::string mock_slot_value(const Placeholder& slot, const TopologyDoc& topo, bool naive_addressing);

// Slot overrides injected into one generation call.
std::map<PlaceholderKey, std::string> mock_faults(const MockOptions& options, const BackendRequest& request,
                                                  const Skeleton& skeleton, const TopologyDoc& topo,
                                                  bool naive_addressing);

// Deterministic template filler standing in for a language model.
// Planning answers {"plan", "templates", "lexicon"}; generation either
// streams peaked distributions (0.9 on the intended token) or returns
// {"configs": {...}}; verify returns the proposed directives unchanged.
class MockBackend : public Backend {
 public:
  explicit MockBackend(MockOptions options = {});

  std::string name() const override { return "mock"; }
  BackendResponse complete(const BackendRequest& request) override;
  std::unique_ptr<DistributionSource> open_stream(const StreamRequest& request) override;

  const MockOptions& options() const { return options_; }

 private:
  MockOptions options_;
};

}  // namespace toporag
