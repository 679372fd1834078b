#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "toporag/decoding.hpp"
#include "toporag/topo_model.hpp"

namespace toporag {

enum class AgentRole { Planning, Generation, Verify };

std::string_view role_name(AgentRole role);

struct PromptPart {
  std::string label;
  std::string text;
};

struct BackendRequest {
  AgentRole role = AgentRole::Planning;
  std::string system_prompt;
  std::vector<PromptPart> prompt_parts;
  std::size_t token_cap = 1024;
  std::uint64_t seed = 0;
  std::string case_id;
  int iteration = 0;  // loop iteration, 0 while planning
  int attempt = 0;    // contract-violation retry index

  // Text of the first part with this label, empty when absent.
  const std::string& part(std::string_view label) const;
};

struct BackendResponse {
  std::string text;
  std::size_t tokens_used = 0;
  bool truncated = false;  // output stopped at token_cap
};

// Rough count for text responses: one token per four bytes, rounded up.
std::size_t estimate_tokens(std::string_view text);

// Everything a logit-exposing backend needs to serve per-step distributions.
struct StreamRequest {
  BackendRequest request;
  const Skeleton* skeleton = nullptr;
  const TopologyDoc* topology = nullptr;
  const TokenVocab* vocab = nullptr;
};

class Backend {
 public:
  virtual ~Backend() = default;

  virtual std::string name() const = 0;
  virtual BackendResponse complete(const BackendRequest& request) = 0;
  // Null for text-only backends.
  virtual std::unique_ptr<DistributionSource> open_stream(const StreamRequest& request);
};

// Round-robin dispatch over replicas. A failed request is retried once on
// the next replica before AllReplicasFailed is raised.
class BackendPool : public Backend {
 public:
  explicit BackendPool(std::vector<std::shared_ptr<Backend>> replicas);

  std::string name() const override;
  BackendResponse complete(const BackendRequest& request) override;
  std::unique_ptr<DistributionSource> open_stream(const StreamRequest& request) override;

  std::size_t size() const { return replicas_.size(); }
  // Requests served per replica.
  std::vector<std::size_t> served() const;
  std::vector<std::string> failure_log() const;

 private:
  std::size_t next_replica();
  void record(std::size_t replica, const std::string& failure);

  std::vector<std::shared_ptr<Backend>> replicas_;
  mutable std::mutex mutex_;
  std::size_t cursor_ = 0;
  std::vector<std::size_t> served_;
  std::vector<std::string> failures_;
};

}  // namespace toporag
