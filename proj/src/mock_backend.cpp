#include "toporag/mock_backend.hpp"

#include <algorithm>
#include <set>

#include "toporag/error.hpp"
#include "toporag/rng.hpp"
#include "toporag/verify.hpp"

namespace toporag {

namespace {

std::string arg(const Placeholder& ph, const char* key) {
  if (!ph.args.contains(key) || !ph.args.at(key).is_string()) return {};
  return ph.args.at(key).get<std::string>();
}

std::string address_of(std::string_view prefix) { return std::string(prefix.substr(0, prefix.find('/'))); }

std::string link_prefix(const TopologyDoc& topo, const std::string& device, const std::string& iface, bool naive) {
  std::string prefix = canonical_prefix(topo, device, iface);
  if (naive && !prefix.empty()) {
    const auto dot = prefix.rfind('.');
    prefix = prefix.substr(0, dot) + ".1/24";
  }
  return prefix;
}

// The other end of a router-router link, or nothing.
std::optional<std::pair<std::string, std::string>> router_peer(const TopologyDoc& topo, const std::string& device,
                                                               const std::string& iface) {
  for (const Link& l : topo.links) {
    if (l.a == device && l.a_if == iface && topo.is_router(l.b)) return std::pair{l.b, l.b_if};
    if (l.b == device && l.b_if == iface && topo.is_router(l.a)) return std::pair{l.a, l.a_if};
  }
  return std::nullopt;
}

bool is_naive(const BackendRequest& request) {
  try {
    const auto plan = nlohmann::json::parse(request.part("plan"));
    return plan.value("addressing", std::string("canonical")) == "naive";
  } catch (const nlohmann::json::exception&) {
    return false;
  }
}

TopologyDoc target_of(const BackendRequest& request) {
  try {
    return parse_topology(request.part("target_topology"), request.case_id);
  } catch (const Error& e) {
    throw Error(Errc::BackendError, std::string("mock cannot read the target topology: ") + e.what());
  }
}

BackendResponse capped(std::string text, std::size_t token_cap) {
  BackendResponse out;
  out.tokens_used = estimate_tokens(text);
  if (out.tokens_used > token_cap) {
    text.resize(token_cap * 4);
    out.tokens_used = token_cap;
    out.truncated = true;
  }
  out.text = std::move(text);
  return out;
}

// Fault value for a slot, or empty when the slot cannot carry this fault.
std::string fault_value(FaultKind kind, const Placeholder& ph, const TopologyDoc& topo, bool naive) {
  const std::string device = arg(ph, "device");
  switch (kind) {
    case FaultKind::V3: return ph.marker();
    case FaultKind::V4: {
      if (ph.kind != PlaceholderKind::Iface) return {};
      const auto own = topo.interfaces_of(device);
      for (const auto& name : topo.all_interfaces()) {
        if (std::find(own.begin(), own.end(), name) == own.end()) return name;
      }
      for (int i = 0;; ++i) {
        const std::string name = "eth" + std::to_string(i);
        if (std::find(own.begin(), own.end(), name) == own.end()) return name;
      }
    }
    case FaultKind::V5: {
      if (ph.kind != PlaceholderKind::Ip4Prefix || ph.args.contains("peer")) return {};
      const auto peer = router_peer(topo, device, arg(ph, "iface"));
      if (!peer) return {};
      const std::string value = link_prefix(topo, peer->first, peer->second, naive);
      return value == mock_slot_value(ph, topo, naive) ? std::string() : value;
    }
    case FaultKind::V6: {
      if (ph.kind != PlaceholderKind::Ip4Addr || !ph.args.contains("peer")) return {};
      return address_of(link_prefix(topo, device, arg(ph, "iface"), naive));
    }
  }
  return {};
}

class MockStream : public DistributionSource {
 public:
  MockStream(const Skeleton& skeleton, const TopologyDoc& topo, const TokenVocab& vocab,
             const std::map<PlaceholderKey, std::string>& overrides, bool naive)
      : vocab_size_(vocab.size()) {
    for (std::size_t d = 0; d < skeleton.devices.size(); ++d) {
      const CompiledDevice compiled = compile_steps(skeleton.devices[d]);
      std::vector<TokenId> intended;
      for (const DecodeStep& step : compiled.steps) {
        std::string token;
        if (step.literal) {
          token = *step.literal;
        } else {
          const PlaceholderKey key{d, static_cast<std::size_t>(step.placeholder)};
          auto it = overrides.find(key);
          token = it != overrides.end()
                      ? it->second
                      : mock_slot_value(*compiled.placeholders[static_cast<std::size_t>(step.placeholder)], topo, naive);
        }
        intended.push_back(vocab.find(token).value_or(-1));
      }
      intended_.push_back(std::move(intended));
    }
  }

  std::vector<double> next(const Cursor& cursor, std::span<const TokenId>) override {
    const TokenId target = intended_.at(cursor.device).at(cursor.step);
    if (vocab_size_ == 1) return {1.0};
    if (target < 0) return std::vector<double>(vocab_size_, 1.0 / static_cast<double>(vocab_size_));
    std::vector<double> dist(vocab_size_, 0.1 / static_cast<double>(vocab_size_ - 1));
    dist[static_cast<std::size_t>(target)] = 0.9;
    return dist;
  }

 private:
  std::size_t vocab_size_;
  std::vector<std::vector<TokenId>> intended_;
};

void append_fixed(DeviceSkeleton& dev, const std::string& text) {
  if (!dev.segments.empty()) {
    if (auto* last = std::get_if<FixedText>(&dev.segments.back())) {
      last->text += text;
      return;
    }
  }
  dev.segments.emplace_back(FixedText{text});
}

void append_slot(DeviceSkeleton& dev, PlaceholderKind kind, nlohmann::json args) {
  dev.segments.emplace_back(Placeholder{kind, std::move(args)});
}

}  // namespace

std::string_view fault_name(FaultKind kind) {
  switch (kind) {
    case FaultKind::V3: return "V3";
    case FaultKind::V4: return "V4";
    case FaultKind::V5: return "V5";
    case FaultKind::V6: return "V6";
  }
  return "?";
}

std::optional<FaultKind> parse_fault(std::string_view name) {
  for (FaultKind k : {FaultKind::V3, FaultKind::V4, FaultKind::V5, FaultKind::V6}) {
    if (fault_name(k) == name) return k;
  }
  return std::nullopt;
}

Skeleton mock_skeleton(const TopologyDoc& topo) {
  Skeleton sk;
  const auto links = canonical_links(topo);
  for (const std::string& device : topo.device_order()) {
    if (!topo.is_router(device)) continue;
    DeviceSkeleton dev;
    dev.device = device;
    for (const std::string& iface : topo.interfaces_of(device)) {
      append_fixed(dev, "interface ");
      append_slot(dev, PlaceholderKind::Iface, {{"device", device}, {"iface", iface}});
      append_fixed(dev, "\n ip address ");
      append_slot(dev, PlaceholderKind::Ip4Prefix, {{"device", device}, {"iface", iface}});
      append_fixed(dev, "\n!\n");
    }
    append_fixed(dev, "router bgp ");
    append_slot(dev, PlaceholderKind::Asn, {{"device", device}});
    for (const Link& l : links) {
      const bool is_a = l.a == device;
      if (!is_a && l.b != device) continue;
      const std::string& peer = is_a ? l.b : l.a;
      if (!topo.is_router(peer)) continue;
      append_fixed(dev, "\n neighbor ");
      append_slot(dev, PlaceholderKind::Ip4Addr,
                  {{"device", device}, {"iface", is_a ? l.a_if : l.b_if}, {"peer", peer}, {"peer_iface", is_a ? l.b_if : l.a_if}});
      append_fixed(dev, " remote-as ");
      append_slot(dev, PlaceholderKind::Asn, {{"device", peer}});
    }
    append_fixed(dev, "\n!\n");
    sk.devices.push_back(std::move(dev));
  }
  return sk;
}

std::string mock_slot_value(const Placeholder& slot, const TopologyDoc& topo, bool naive_addressing) {
  const std::string device = arg(slot, "device");
  switch (slot.kind) {
    case PlaceholderKind::Iface: return arg(slot, "iface");
    case PlaceholderKind::Ip4Prefix: return link_prefix(topo, device, arg(slot, "iface"), naive_addressing);
    case PlaceholderKind::Ip4Addr:
      if (slot.args.contains("peer")) {
        return address_of(link_prefix(topo, arg(slot, "peer"), arg(slot, "peer_iface"), naive_addressing));
      }
      return address_of(link_prefix(topo, device, arg(slot, "iface"), naive_addressing));
    case PlaceholderKind::Asn: return std::to_string(canonical_asn(topo, device));
    case PlaceholderKind::Keyword:
      if (slot.args.contains("allowed") && slot.args.at("allowed").is_array() && !slot.args.at("allowed").empty()) {
        return slot.args.at("allowed").front().get<std::string>();
      }
      return {};
    case PlaceholderKind::DeviceRef: return device.empty() ? topo.device_order().front() : device;
  }
  return {};
}

std::map<PlaceholderKey, std::string> mock_faults(const MockOptions& options, const BackendRequest& request,
                                                  const Skeleton& skeleton, const TopologyDoc& topo,
                                                  bool naive_addressing) {
  std::map<PlaceholderKey, std::string> out;
  Rng rng(derive_seed(request.seed, 0xFA));
  for (std::size_t d = 0; d < skeleton.devices.size(); ++d) {
    const auto slots = skeleton.devices[d].placeholders();
    for (std::size_t k = 0; k < slots.size(); ++k) {
      if (options.fault_rate <= 0.0) break;
      const std::string value = fault_value(options.fault_kind, *slots[k], topo, naive_addressing);
      if (value.empty()) continue;
      if (rng.uniform01() < options.fault_rate) out[{d, k}] = value;
    }
  }
  for (const ScriptedFault& fault : options.scripted) {
    if (fault.iteration != request.iteration) continue;
    if (!fault.case_id.empty() && fault.case_id != request.case_id) continue;
    bool placed = false;
    for (std::size_t d = 0; d < skeleton.devices.size() && !placed; ++d) {
      if (!fault.device.empty() && skeleton.devices[d].device != fault.device) continue;
      const auto slots = skeleton.devices[d].placeholders();
      for (std::size_t k = 0; k < slots.size() && !placed; ++k) {
        const std::string value = fault_value(fault.kind, *slots[k], topo, naive_addressing);
        if (value.empty()) continue;
        out[{d, k}] = value;
        placed = true;
      }
    }
  }
  return out;
}

MockBackend::MockBackend(MockOptions options) : options_(std::move(options)) {
  if (options_.fault_rate < 0.0 || options_.fault_rate > 1.0) {
    throw Error(Errc::InvalidArgument, "fault_rate must lie in [0, 1]");
  }
}

BackendResponse MockBackend::complete(const BackendRequest& request) {
  if (options_.always_fail) throw Error(Errc::BackendError, "mock replica configured to fail");

  switch (request.role) {
    case AgentRole::Planning: {
      if (request.attempt < options_.plan_garbage_attempts) {
        return capped("Sure! Here is a plan: configure BGP on every router and connect the links.", request.token_cap);
      }
      const TopologyDoc topo = target_of(request);
      const bool naive = options_.requires_reference && request.part("reference_topology").empty();
      const Skeleton sk = mock_skeleton(topo);

      nlohmann::json devices = nlohmann::json::object();
      std::set<std::string> lexicon;
      nlohmann::json templates = nlohmann::json::object();
      for (const DeviceSkeleton& dev : sk.devices) {
        std::vector<std::string> peers;
        for (const Placeholder* ph : dev.placeholders()) {
          lexicon.insert(mock_slot_value(*ph, topo, naive));
          if (ph->kind == PlaceholderKind::Ip4Addr) peers.push_back(arg(*ph, "peer"));
        }
        devices[dev.device] = {{"asn", canonical_asn(topo, dev.device)},
                               {"interfaces", topo.interfaces_of(dev.device)},
                               {"bgp_peers", peers}};
        templates[dev.device] = to_template(dev);
      }
      nlohmann::json plan = {
          {"protocols", {"bgp"}},
          {"addressing", naive ? "naive" : "canonical"},
          {"devices", std::move(devices)},
          {"invariants",
           {"each router-router link is a /24 subnet with distinct endpoint addresses",
            "every bgp neighbor is the address of a directly linked peer interface"}},
      };
      nlohmann::json out = {{"plan", std::move(plan)},
                            {"templates", std::move(templates)},
                            {"lexicon", std::vector<std::string>(lexicon.begin(), lexicon.end())}};
      return capped(out.dump(), request.token_cap);
    }
    case AgentRole::Generation: {
      const TopologyDoc topo = target_of(request);
      Skeleton sk;
      try {
        sk = Skeleton::from_json(nlohmann::json::parse(request.part("skeleton")));
      } catch (const std::exception& e) {
        throw Error(Errc::BackendError, std::string("mock cannot read the skeleton: ") + e.what());
      }
      const bool naive = is_naive(request);
      const auto overrides = mock_faults(options_, request, sk, topo, naive);
      nlohmann::json configs = nlohmann::json::object();
      for (std::size_t d = 0; d < sk.devices.size(); ++d) {
        const auto slots = sk.devices[d].placeholders();
        std::vector<std::string> values;
        for (std::size_t k = 0; k < slots.size(); ++k) {
          auto it = overrides.find({d, k});
          values.push_back(it != overrides.end() ? it->second : mock_slot_value(*slots[k], topo, naive));
        }
        configs[sk.devices[d].device] = instantiate(sk.devices[d], values).text;
      }
      return capped(nlohmann::json{{"configs", std::move(configs)}}.dump(), request.token_cap);
    }
    case AgentRole::Verify: {
      const std::string& proposal = request.part("proposal");
      return capped(proposal.empty() ? "[]" : proposal, request.token_cap);
    }
  }
  throw Error(Errc::InvalidArgument, "unknown agent role");
}

std::unique_ptr<DistributionSource> MockBackend::open_stream(const StreamRequest& request) {
  if (options_.always_fail) throw Error(Errc::BackendError, "mock replica configured to fail");
  if (!options_.expose_logits) return nullptr;
  if (request.skeleton == nullptr || request.topology == nullptr || request.vocab == nullptr) {
    throw Error(Errc::InvalidArgument, "stream request is missing the skeleton, topology or vocabulary");
  }
  const bool naive = is_naive(request.request);
  const auto overrides = mock_faults(options_, request.request, *request.skeleton, *request.topology, naive);
  return std::make_unique<MockStream>(*request.skeleton, *request.topology, *request.vocab, overrides, naive);
}

}  // namespace toporag
