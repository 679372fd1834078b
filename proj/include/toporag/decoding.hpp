#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "toporag/topo_model.hpp"

namespace toporag {

enum class PlaceholderKind { Iface, Ip4Addr, Ip4Prefix, Asn, Keyword, DeviceRef };

std::string_view kind_name(PlaceholderKind kind);
std::optional<PlaceholderKind> parse_kind(std::string_view name);

struct FixedText {
  std::string text;
};

// `args` binds the slot to topology entities: "device", "iface", "peer",
// "peer_iface", "network", or "allowed" for keywords.
struct Placeholder {
  PlaceholderKind kind = PlaceholderKind::Keyword;
  nlohmann::json args = nlohmann::json::object();

  // Unresolved-slot marker as it appears in a rendered template.
  std::string marker() const;
};

using Segment = std::variant<FixedText, Placeholder>;

struct DeviceSkeleton {
  std::string device;
  std::vector<Segment> segments;

  std::vector<const Placeholder*> placeholders() const;
};

struct Skeleton {
  std::vector<DeviceSkeleton> devices;

  // [{"device": ..., "segments": [{"fixed": "..."} | {"ph": {"kind", "args"}}]}]
  nlohmann::json to_json() const;
  static Skeleton from_json(const nlohmann::json& j);
  // Template text with placeholders shown as markers.
  std::string render(std::size_t device_index) const;
  std::size_t device_index(std::string_view device) const;
};

// Annotated template text: fixed text with slots written as
// {{kind key=value ...}}; list-valued args use "|" ("allowed=a|b").
// Values may not contain whitespace, "=", "|" or "}".
std::string to_template(const DeviceSkeleton& device);
DeviceSkeleton parse_template(std::string device, std::string_view text);

// Empty when the skeleton is usable against `topo`.
std::vector<std::string> skeleton_problems(const Skeleton& skeleton, const TopologyDoc& topo);

using TokenId = std::int32_t;

// Word-level tokens. A word is a maximal run of [A-Za-z0-9_./-]; a
// {{name}} marker is a single token; any other non-space byte is its own
// token. Whitespace is kept as glue in front of the next token.
struct GluedToken {
  std::string glue;
  std::string token;
  std::size_t offset = 0;  // byte offset of `token` in the source text
};

struct Tokenization {
  std::vector<GluedToken> tokens;
  std::string tail;
};

Tokenization tokenize(std::string_view text);

bool is_ip4_address(std::string_view token);
bool is_ip4_prefix(std::string_view token);
bool is_integer_literal(std::string_view token);

class TokenVocab {
 public:
  static constexpr TokenId kEndOfOutput = 0;

  TokenVocab();

  TokenId add(std::string_view token);
  void add_text(std::string_view text);

  std::optional<TokenId> find(std::string_view token) const;
  TokenId id(std::string_view token) const;
  const std::string& token(TokenId id) const;
  std::size_t size() const { return tokens_.size(); }

  const std::vector<TokenId>& ip4_addresses() const { return ip4_addresses_; }
  const std::vector<TokenId>& ip4_prefixes() const { return ip4_prefixes_; }
  const std::vector<TokenId>& integers() const { return integers_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
  std::vector<TokenId> ip4_addresses_;
  std::vector<TokenId> ip4_prefixes_;
  std::vector<TokenId> integers_;
};

// One decoding position: a forced literal or a placeholder slot.
struct DecodeStep {
  std::string glue;
  std::optional<std::string> literal;
  int placeholder = -1;  // ordinal within the device's placeholders
};

struct CompiledDevice {
  std::vector<DecodeStep> steps;
  std::string tail;
  std::vector<const Placeholder*> placeholders;
};

CompiledDevice compile_steps(const DeviceSkeleton& device);

struct Cursor {
  std::size_t device = 0;
  std::size_t step = 0;
};

// Ascending ids permitted at `cursor`.
std::vector<TokenId> permitted_tokens(const Skeleton& skeleton, const Cursor& cursor, const TopologyDoc& topo,
                                      const TokenVocab& vocab);
std::vector<TokenId> permitted_for_placeholder(const Placeholder& placeholder, const TopologyDoc& topo,
                                               const TokenVocab& vocab);

// Masks `dist` to `permitted` and renormalises. Falls back to uniform over
// `permitted` when the permitted mass is below 1e-12.
std::vector<double> constrain(std::span<const double> dist, std::span<const TokenId> permitted);

// Stepwise next-token distributions, e.g. from a logit-exposing model.
class DistributionSource {
 public:
  virtual ~DistributionSource() = default;
  // Returns a distribution over the whole vocabulary. `cursor` locates the
  // step in the skeleton; `prefix` holds the tokens emitted so far.
  virtual std::vector<double> next(const Cursor& cursor, std::span<const TokenId> prefix) = 0;
};

using PlaceholderKey = std::pair<std::size_t, std::size_t>;  // (device index, placeholder ordinal)

struct DecodeOptions {
  bool greedy = true;
  // When false, placeholder slots may take any vocabulary token.
  bool constrained = true;
  // Values pinned for specific slots (patched or preserved regions).
  std::map<PlaceholderKey, std::string> forced;
};

struct DecodedDevice {
  std::string device;
  std::string text;
  std::vector<std::string> values;         // per placeholder ordinal
  std::vector<std::size_t> value_offsets;  // byte offset of each value in `text`
};

struct DecodeResult {
  std::vector<DecodedDevice> devices;
  std::size_t tokens_used = 0;
};

DecodeResult decode_with_skeleton(DistributionSource& source, const Skeleton& skeleton, const TopologyDoc& topo,
                                  const TokenVocab& vocab, std::size_t token_cap, std::uint64_t seed,
                                  const DecodeOptions& options = {});

// Renders a device from explicit placeholder values.
DecodedDevice instantiate(const DeviceSkeleton& device, const std::vector<std::string>& values);

// Matches free text against a device skeleton token by token (whitespace
// amounts are ignored). Returns the placeholder values and their offsets,
// or nullopt when the text does not follow the template.
std::optional<DecodedDevice> align_to_skeleton(const DeviceSkeleton& device, std::string_view text);

}  // namespace toporag
