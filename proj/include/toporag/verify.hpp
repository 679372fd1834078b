#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "toporag/topo_model.hpp"

namespace toporag {

// Generated configuration for one case. Only routers carry configs.
struct ConfigArtifact {
  std::map<std::string, std::string> configs;  // device -> config text
  std::string driver;

  friend bool operator==(const ConfigArtifact&, const ConfigArtifact&) = default;
};

struct ConfigLine {
  std::size_t line_no = 0;  // 1-based
  std::size_t begin = 0;    // byte range of the line, newline excluded
  std::size_t end = 0;
  std::vector<std::string> words;
};

// `id` is "interface <name>", "router bgp" or "router ospf". The byte
// range spans the header and its indented lines.
struct ConfigBlock {
  std::string id;
  std::size_t begin = 0;
  std::size_t end = 0;
  std::vector<ConfigLine> lines;  // header first
};

struct ParseProblem {
  std::size_t line_no = 0;
  std::string block;  // enclosing block id, empty at top level
  std::string message;
};

struct ParsedConfig {
  std::vector<ConfigBlock> blocks;
  std::vector<ParseProblem> problems;

  const ConfigBlock* find(std::string_view block_id) const;
  // Address configured on an interface block ("a.b.c.d/len"), or empty.
  std::string interface_address(std::string_view iface) const;
};

// Grammar:
//   interface <name>
//    ip address <a.b.c.d>/<len>
//   router bgp <asn>
//    neighbor <a.b.c.d> remote-as <asn>
//   router ospf
//    network <a.b.c.d>/<len> area <id>
// Blank lines and "!" close the current block. Value slots holding a
// {{...}} marker are accepted here and reported by the placeholder rule.
ParsedConfig parse_config(std::string_view text);

bool has_marker(std::string_view text);

struct Violation {
  std::string device;
  std::string block;  // block id, "device" for whole-device problems
  std::string rule;   // "V1" .. "V7"
  std::string message;
  std::string subject;  // offending value, when there is one

  nlohmann::json to_json() const;
  static Violation from_json(const nlohmann::json& j);
  friend bool operator==(const Violation&, const Violation&) = default;
};

struct Verdict {
  bool pass = true;
  std::vector<Violation> violations;

  nlohmann::json to_json() const;
  static Verdict from_json(const nlohmann::json& j);
};

// Rules, reported in this order:
//   V1 every router has a config (and no config names an unknown device)
//   V2 the line grammar parses
//   V3 no unresolved {{...}} markers
//   V4 configured interfaces exist on the device
//   V5 router-router link addresses share a /24-or-longer subnet and differ
//   V6 BGP neighbors point at a directly linked peer's address
//   V7 ASN and area values are well-formed integers
Verdict verify(const ConfigArtifact& artifact, const TopologyDoc& topo);

inline constexpr std::size_t kDefaultTrim = 10;
inline constexpr std::size_t kMaxTraceMessage = 200;

struct FailureTrace {
  std::vector<Violation> entries;
  std::size_t total_violations = 0;

  nlohmann::json to_json() const;
  static FailureTrace from_json(const nlohmann::json& j);
};

// First n_trim violations, messages cut to 200 characters ending in "...".
FailureTrace trim(const Verdict& verdict, std::size_t n_trim = kDefaultTrim);

struct PatchDirective {
  enum class Edit { Substitute, RegenerateBlock };

  std::string device;
  std::string block;
  Edit edit = Edit::RegenerateBlock;
  std::string from;  // Substitute only: value to replace inside the block
  std::string to;
  std::string rationale;

  nlohmann::json to_json() const;
  static PatchDirective from_json(const nlohmann::json& j);
  friend bool operator==(const PatchDirective&, const PatchDirective&) = default;
};

nlohmann::json patches_to_json(const std::vector<PatchDirective>& patches);
std::vector<PatchDirective> patches_from_json(const nlohmann::json& j);

// Canonical addressing: link i of canonical_links() owns 10.0.i.0/24, the
// lower-ranked endpoint takes .1 and the other .2. Router k in device
// order speaks ASN 65001 + k.
std::string canonical_prefix(const TopologyDoc& topo, std::string_view device, std::string_view iface);
long long canonical_asn(const TopologyDoc& topo, std::string_view device);

std::size_t levenshtein(std::string_view a, std::string_view b);

// V4, V5 and V6 get value substitutions; everything else asks for the
// block to be regenerated. Directives only name devices from the trace.
std::vector<PatchDirective> propose_patches(const FailureTrace& trace, const ConfigArtifact& artifact,
                                            const TopologyDoc& topo);

// Applies substitutions in order, each to the first not yet edited
// occurrence of `from` inside its block. Regeneration requests are left
// to the generator.
ConfigArtifact apply_patches(const ConfigArtifact& artifact, const std::vector<PatchDirective>& patches);

// Adapter for a real harness: runs `command` inside `case_dir`, capturing
// output to `log_name`. Exit status 0 is a pass; otherwise the log tail
// becomes a single violation.
Verdict verify_external(const std::filesystem::path& case_dir, const std::string& command,
                        const std::string& log_name = "harness.log");

}  // namespace toporag
