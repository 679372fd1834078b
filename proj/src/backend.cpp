#include "toporag/backend.hpp"

#include <iostream>

#include "toporag/error.hpp"

namespace toporag {

std::string_view role_name(AgentRole role) {
  switch (role) {
    case AgentRole::Planning: return "planning";
    case AgentRole::Generation: return "generation";
    case AgentRole::Verify: return "verify";
  }
  return "unknown";
}

const std::string& BackendRequest::part(std::string_view label) const {
  static const std::string kEmpty;
  for (const auto& p : prompt_parts) {
    if (p.label == label) return p.text;
  }
  return kEmpty;
}

std::size_t estimate_tokens(std::string_view text) { return (text.size() + 3) / 4; }

std::unique_ptr<DistributionSource> Backend::open_stream(const StreamRequest&) { return nullptr; }

BackendPool::BackendPool(std::vector<std::shared_ptr<Backend>> replicas) : replicas_(std::move(replicas)) {
  if (replicas_.empty()) throw Error(Errc::InvalidArgument, "backend pool needs at least one replica");
  for (const auto& r : replicas_) {
    if (!r) throw Error(Errc::InvalidArgument, "backend pool replica is null");
  }
  served_.assign(replicas_.size(), 0);
}

std::string BackendPool::name() const {
  return "pool(" + std::to_string(replicas_.size()) + "x" + replicas_.front()->name() + ")";
}

std::size_t BackendPool::next_replica() {
  std::lock_guard lock(mutex_);
  const std::size_t r = cursor_;
  cursor_ = (cursor_ + 1) % replicas_.size();
  return r;
}

void BackendPool::record(std::size_t replica, const std::string& failure) {
  std::lock_guard lock(mutex_);
  if (failure.empty()) {
    ++served_[replica];
    return;
  }
  failures_.push_back("replica " + std::to_string(replica) + ": " + failure);
  std::cerr << "backend replica " << replica << " failed: " << failure << "\n";
}

std::vector<std::size_t> BackendPool::served() const {
  std::lock_guard lock(mutex_);
  return served_;
}

std::vector<std::string> BackendPool::failure_log() const {
  std::lock_guard lock(mutex_);
  return failures_;
}

BackendResponse BackendPool::complete(const BackendRequest& request) {
  const std::size_t first = next_replica();
  std::string last_error;
  for (std::size_t t = 0; t < 2; ++t) {
    const std::size_t r = (first + t) % replicas_.size();
    try {
      BackendResponse response = replicas_[r]->complete(request);
      record(r, {});
      return response;
    } catch (const std::exception& e) {
      last_error = e.what();
      record(r, last_error);
    }
  }
  throw Error(Errc::AllReplicasFailed, last_error);
}

std::unique_ptr<DistributionSource> BackendPool::open_stream(const StreamRequest& request) {
  const std::size_t first = next_replica();
  std::string last_error;
  for (std::size_t t = 0; t < 2; ++t) {
    const std::size_t r = (first + t) % replicas_.size();
    try {
      auto stream = replicas_[r]->open_stream(request);
      record(r, {});
      return stream;
    } catch (const std::exception& e) {
      last_error = e.what();
      record(r, last_error);
    }
  }
  throw Error(Errc::AllReplicasFailed, last_error);
}

}  // namespace toporag
