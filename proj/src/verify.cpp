#include "toporag/verify.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <set>
#include <sstream>

#include "toporag/decoding.hpp"
#include "toporag/error.hpp"
#include "toporag/io.hpp"

namespace toporag {

namespace {

struct Ip4Prefix {
  std::uint32_t address = 0;
  int length = 0;
};

std::uint32_t parse_address(std::string_view s) {
  std::uint32_t out = 0;
  std::size_t start = 0;
  for (int part = 0; part < 4; ++part) {
    const std::size_t dot = part < 3 ? s.find('.', start) : s.size();
    out = (out << 8) | static_cast<std::uint32_t>(std::stoul(std::string(s.substr(start, dot - start))));
    start = dot + 1;
  }
  return out;
}

std::optional<Ip4Prefix> parse_prefix(std::string_view s) {
  if (!is_ip4_prefix(s)) return std::nullopt;
  const auto slash = s.find('/');
  return Ip4Prefix{parse_address(s.substr(0, slash)), std::stoi(std::string(s.substr(slash + 1)))};
}

std::string address_part(std::string_view prefix) { return std::string(prefix.substr(0, prefix.find('/'))); }

bool is_value_or_marker(std::string_view word, bool (*lexical)(std::string_view)) {
  return has_marker(word) || lexical(word);
}

bool is_any(std::string_view) { return true; }

bool is_asn(std::string_view s) {
  if (!is_integer_literal(s) || s.size() > 10) return false;
  const unsigned long long v = std::stoull(std::string(s));
  return v >= 1 && v <= 4294967295ULL;
}

bool is_area(std::string_view s) { return is_integer_literal(s) && s.size() <= 10 && std::stoull(std::string(s)) <= 4294967295ULL; }

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

std::string string_field(const nlohmann::json& j, const char* key) {
  if (!j.is_object() || !j.contains(key) || !j.at(key).is_string()) {
    throw Error(Errc::MalformedJson, std::string("missing string field \"") + key + "\"");
  }
  return j.at(key).get<std::string>();
}

// Router-router links with their canonical index.
struct RoutedLink {
  std::size_t index = 0;
  Link link;
};

std::vector<RoutedLink> router_links(const TopologyDoc& topo) {
  std::vector<RoutedLink> out;
  const auto links = canonical_links(topo);
  for (std::size_t i = 0; i < links.size(); ++i) {
    if (topo.is_router(links[i].a) && topo.is_router(links[i].b)) out.push_back({i, links[i]});
  }
  return out;
}

}  // namespace

bool has_marker(std::string_view text) {
  const auto open = text.find("{{");
  return open != std::string_view::npos && text.find("}}", open + 2) != std::string_view::npos;
}

const ConfigBlock* ParsedConfig::find(std::string_view block_id) const {
  for (const auto& block : blocks) {
    if (block.id == block_id) return &block;
  }
  return nullptr;
}

std::string ParsedConfig::interface_address(std::string_view iface) const {
  const ConfigBlock* block = find("interface " + std::string(iface));
  if (block == nullptr) return {};
  for (std::size_t i = 1; i < block->lines.size(); ++i) {
    const auto& w = block->lines[i].words;
    if (w.size() == 3 && w[0] == "ip" && w[1] == "address") return w[2];
  }
  return {};
}

ParsedConfig parse_config(std::string_view text) {
  ParsedConfig out;
  ConfigBlock* current = nullptr;
  enum class Kind { None, Interface, Bgp, Ospf } kind = Kind::None;

  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    ++line_no;
    const std::string_view raw = text.substr(pos, eol - pos);
    ConfigLine line{line_no, pos, eol, {}};
    {
      std::istringstream words{std::string(raw)};
      for (std::string w; words >> w;) line.words.push_back(w);
    }
    const bool indented = !raw.empty() && std::isspace(static_cast<unsigned char>(raw.front()));
    const auto& w = line.words;
    auto problem = [&](const std::string& message) {
      out.problems.push_back({line_no, current != nullptr ? current->id : std::string(), message});
    };

    if (w.empty() || (w.size() == 1 && w[0] == "!")) {
      current = nullptr;
      kind = Kind::None;
    } else if (!indented) {
      current = nullptr;
      kind = Kind::None;
      std::string id;
      if (w[0] == "interface" && w.size() == 2) {
        id = "interface " + w[1];
        kind = Kind::Interface;
      } else if (w.size() == 3 && w[0] == "router" && w[1] == "bgp") {
        id = "router bgp";
        kind = Kind::Bgp;
      } else if (w.size() == 2 && w[0] == "router" && w[1] == "ospf") {
        id = "router ospf";
        kind = Kind::Ospf;
      }
      if (kind == Kind::None) {
        problem("unrecognized statement \"" + join(w) + "\"");
      } else {
        out.blocks.push_back(ConfigBlock{id, line.begin, line.end, {line}});
        current = &out.blocks.back();
      }
    } else {
      bool ok = false;
      switch (kind) {
        case Kind::Interface:
          ok = w.size() == 3 && w[0] == "ip" && w[1] == "address" && is_value_or_marker(w[2], is_ip4_prefix);
          break;
        case Kind::Bgp:
          ok = w.size() == 4 && w[0] == "neighbor" && w[2] == "remote-as" && is_value_or_marker(w[1], is_ip4_address);
          break;
        case Kind::Ospf:
          ok = w.size() == 4 && w[0] == "network" && w[2] == "area" && is_value_or_marker(w[1], is_ip4_prefix);
          break;
        case Kind::None: break;
      }
      if (!ok) {
        problem(current == nullptr ? "indented line outside any block: \"" + join(w) + "\""
                                   : "unexpected line in " + current->id + ": \"" + join(w) + "\"");
      } else {
        current->lines.push_back(line);
        current->end = line.end;
      }
    }
    if (eol == text.size()) break;
    pos = eol + 1;
  }
  return out;
}

nlohmann::json Violation::to_json() const {
  return {{"device", device}, {"block", block}, {"rule", rule}, {"message", message}, {"subject", subject}};
}

Violation Violation::from_json(const nlohmann::json& j) {
  Violation v{string_field(j, "device"), string_field(j, "block"), string_field(j, "rule"),
              string_field(j, "message"), {}};
  if (j.contains("subject") && j.at("subject").is_string()) v.subject = j.at("subject").get<std::string>();
  return v;
}

nlohmann::json Verdict::to_json() const {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& v : violations) list.push_back(v.to_json());
  return {{"pass", pass}, {"violations", std::move(list)}};
}

Verdict Verdict::from_json(const nlohmann::json& j) {
  Verdict v;
  if (!j.is_object() || !j.contains("violations") || !j.at("violations").is_array()) {
    throw Error(Errc::MalformedJson, "verdict needs a violations array");
  }
  for (const auto& item : j.at("violations")) v.violations.push_back(Violation::from_json(item));
  v.pass = v.violations.empty();
  return v;
}

Verdict verify(const ConfigArtifact& artifact, const TopologyDoc& topo) {
  std::vector<Violation> out;
  std::map<std::string, ParsedConfig> parsed;
  std::vector<std::string> routers;
  for (const auto& name : topo.device_order()) {
    if (topo.is_router(name)) routers.push_back(name);
  }

  // V1
  for (const auto& r : routers) {
    auto it = artifact.configs.find(r);
    if (it == artifact.configs.end() || std::all_of(it->second.begin(), it->second.end(), [](char c) {
          return std::isspace(static_cast<unsigned char>(c));
        })) {
      out.push_back({r, "device", "V1", "no configuration for router " + r, {}});
    } else {
      parsed.emplace(r, parse_config(it->second));
    }
  }
  for (const auto& [device, text] : artifact.configs) {
    if (!topo.has_device(device)) {
      out.push_back({device, "device", "V1", "configuration for " + device + " which is not in the topology", {}});
    }
  }

  // V2
  for (const auto& r : routers) {
    auto it = parsed.find(r);
    if (it == parsed.end()) continue;
    for (const auto& p : it->second.problems) {
      out.push_back({r, p.block.empty() ? "device" : p.block, "V2",
                     r + " line " + std::to_string(p.line_no) + ": " + p.message, {}});
    }
  }

  // V3
  for (const auto& r : routers) {
    auto it = parsed.find(r);
    if (it == parsed.end()) continue;
    for (const auto& block : it->second.blocks) {
      for (const auto& line : block.lines) {
        for (const auto& word : line.words) {
          if (has_marker(word)) {
            out.push_back({r, block.id, "V3",
                           r + " line " + std::to_string(line.line_no) + ": unresolved placeholder " + word, word});
          }
        }
      }
    }
  }

  // V4
  for (const auto& r : routers) {
    auto it = parsed.find(r);
    if (it == parsed.end()) continue;
    const auto ifaces = topo.interfaces_of(r);
    for (const auto& block : it->second.blocks) {
      if (block.id.rfind("interface ", 0) != 0) continue;
      const std::string name = block.lines.front().words[1];
      if (has_marker(name)) continue;
      if (!std::binary_search(ifaces.begin(), ifaces.end(), name)) {
        out.push_back({r, block.id, "V4", "interface " + name + " does not exist on " + r, name});
      }
    }
  }

  // V5
  const auto rlinks = router_links(topo);
  for (const auto& [index, link] : rlinks) {
    auto pa = parsed.find(link.a);
    auto pb = parsed.find(link.b);
    if (pa == parsed.end() || pb == parsed.end()) continue;
    const std::string addr_a = pa->second.interface_address(link.a_if);
    const std::string addr_b = pb->second.interface_address(link.b_if);
    if (has_marker(addr_a) || has_marker(addr_b)) continue;
    const std::string where = link.a + ":" + link.a_if + " (" + (addr_a.empty() ? "none" : addr_a) + ") and " +
                              link.b + ":" + link.b_if + " (" + (addr_b.empty() ? "none" : addr_b) + ")";
    std::string problem;
    const auto a = parse_prefix(addr_a);
    const auto b = parse_prefix(addr_b);
    if (!a || !b) {
      problem = "missing address on link " + where;
    } else if (a->length < 24 || b->length < 24) {
      problem = "link " + where + " uses a subnet shorter than /24";
    } else if (a->length != b->length) {
      problem = "link " + where + " has mismatched prefix lengths";
    } else {
      const std::uint32_t mask = a->length == 32 ? 0xFFFFFFFFu : ~(0xFFFFFFFFu >> a->length);
      if ((a->address & mask) != (b->address & mask)) {
        problem = "subnet mismatch on link " + where;
      } else if (a->address == b->address) {
        problem = "duplicate address on link " + where;
      }
    }
    if (problem.empty()) continue;
    out.push_back({link.a, "interface " + link.a_if, "V5", problem, addr_a});
    out.push_back({link.b, "interface " + link.b_if, "V5", problem, addr_b});
  }

  // V6
  for (const auto& r : routers) {
    auto it = parsed.find(r);
    if (it == parsed.end()) continue;
    const ConfigBlock* bgp = it->second.find("router bgp");
    if (bgp == nullptr) continue;
    std::set<std::string> peer_addresses;
    for (const auto& [index, link] : rlinks) {
      const bool is_a = link.a == r;
      if (!is_a && link.b != r) continue;
      auto peer = parsed.find(is_a ? link.b : link.a);
      if (peer == parsed.end()) continue;
      const std::string addr = peer->second.interface_address(is_a ? link.b_if : link.a_if);
      if (is_ip4_prefix(addr)) peer_addresses.insert(address_part(addr));
    }
    for (std::size_t i = 1; i < bgp->lines.size(); ++i) {
      const std::string& neighbor = bgp->lines[i].words[1];
      if (has_marker(neighbor) || peer_addresses.count(neighbor) != 0) continue;
      out.push_back({r, bgp->id, "V6", "neighbor " + neighbor + " on " + r + " is not a directly linked peer address",
                     neighbor});
    }
  }

  // V7
  for (const auto& r : routers) {
    auto it = parsed.find(r);
    if (it == parsed.end()) continue;
    for (const auto& block : it->second.blocks) {
      for (const auto& line : block.lines) {
        const auto& w = line.words;
        std::string value;
        const char* what = "";
        bool (*check)(std::string_view) = is_any;
        if (w.size() == 3 && w[0] == "router" && w[1] == "bgp") {
          value = w[2], what = "ASN", check = is_asn;
        } else if (w.size() == 4 && w[0] == "neighbor") {
          value = w[3], what = "remote ASN", check = is_asn;
        } else if (w.size() == 4 && w[0] == "network") {
          value = w[3], what = "area", check = is_area;
        }
        if (value.empty() || has_marker(value) || check(value)) continue;
        out.push_back({r, block.id, "V7", std::string(what) + " \"" + value + "\" on " + r + " is not a valid integer",
                       value});
      }
    }
  }

  Verdict verdict;
  verdict.violations = std::move(out);
  verdict.pass = verdict.violations.empty();
  return verdict;
}

nlohmann::json FailureTrace::to_json() const {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& v : entries) list.push_back(v.to_json());
  return {{"entries", std::move(list)}, {"total_violations", total_violations}};
}

FailureTrace FailureTrace::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("entries") || !j.at("entries").is_array()) {
    throw Error(Errc::MalformedJson, "trace needs an entries array");
  }
  FailureTrace t;
  for (const auto& item : j.at("entries")) t.entries.push_back(Violation::from_json(item));
  t.total_violations = j.value("total_violations", t.entries.size());
  return t;
}

FailureTrace trim(const Verdict& verdict, std::size_t n_trim) {
  if (verdict.violations.empty()) throw Error(Errc::CalledOnPass, "cannot trim a passing verdict");
  if (n_trim == 0) throw Error(Errc::InvalidArgument, "n_trim must be at least 1");
  FailureTrace trace;
  trace.total_violations = verdict.violations.size();
  const std::size_t n = std::min(n_trim, verdict.violations.size());
  for (std::size_t i = 0; i < n; ++i) {
    Violation v = verdict.violations[i];
    if (v.message.size() > kMaxTraceMessage) v.message = v.message.substr(0, kMaxTraceMessage - 3) + "...";
    trace.entries.push_back(std::move(v));
  }
  return trace;
}

nlohmann::json PatchDirective::to_json() const {
  nlohmann::json out = {{"device", device}, {"block", block}, {"rationale", rationale}};
  if (edit == Edit::RegenerateBlock) {
    out["edit"] = "regenerate-block";
  } else {
    out["edit"] = {{"replace", from}, {"with", to}};
  }
  return out;
}

PatchDirective PatchDirective::from_json(const nlohmann::json& j) {
  PatchDirective p;
  p.device = string_field(j, "device");
  p.block = string_field(j, "block");
  if (j.contains("rationale") && j.at("rationale").is_string()) p.rationale = j.at("rationale").get<std::string>();
  if (!j.contains("edit")) throw Error(Errc::MalformedJson, "patch directive needs an edit");
  const auto& edit = j.at("edit");
  if (edit.is_string() && edit.get<std::string>() == "regenerate-block") {
    p.edit = Edit::RegenerateBlock;
  } else if (edit.is_object()) {
    p.edit = Edit::Substitute;
    p.from = string_field(edit, "replace");
    p.to = string_field(edit, "with");
  } else {
    throw Error(Errc::MalformedJson, "edit must be \"regenerate-block\" or {replace, with}");
  }
  return p;
}

nlohmann::json patches_to_json(const std::vector<PatchDirective>& patches) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& p : patches) out.push_back(p.to_json());
  return out;
}

std::vector<PatchDirective> patches_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw Error(Errc::MalformedJson, "patch list must be an array");
  std::vector<PatchDirective> out;
  for (const auto& item : j) out.push_back(PatchDirective::from_json(item));
  return out;
}

std::string canonical_prefix(const TopologyDoc& topo, std::string_view device, std::string_view iface) {
  const auto links = canonical_links(topo);
  for (std::size_t i = 0; i < links.size(); ++i) {
    int host = 0;
    if (links[i].a == device && links[i].a_if == iface) host = 1;
    if (links[i].b == device && links[i].b_if == iface) host = 2;
    if (host == 0) continue;
    return "10." + std::to_string(i >> 8) + "." + std::to_string(i & 0xFF) + "." + std::to_string(host) + "/24";
  }
  return {};
}

long long canonical_asn(const TopologyDoc& topo, std::string_view device) {
  if (!topo.is_router(device)) return -1;
  return 65001 + topo.device_rank(device);
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

std::vector<PatchDirective> propose_patches(const FailureTrace& trace, const ConfigArtifact& artifact,
                                            const TopologyDoc& topo) {
  if (trace.entries.empty()) throw Error(Errc::EmptyTrace, "no violations to repair");
  std::map<std::string, ParsedConfig> parsed;
  for (const auto& [device, text] : artifact.configs) parsed.emplace(device, parse_config(text));

  std::vector<PatchDirective> out;
  std::set<std::pair<std::string, std::string>> regenerate;
  // Values already claimed by a substitution, per device.
  std::map<std::string, std::set<std::string>> claimed;

  auto regenerate_block = [&](const Violation& v, std::string rationale) {
    std::string block = v.block;
    const auto it = parsed.find(v.device);
    if (it == parsed.end() || (block != "device" && it->second.find(block) == nullptr)) block = "device";
    if (!regenerate.insert({v.device, block}).second) return;
    PatchDirective p;
    p.device = v.device;
    p.block = block;
    p.edit = PatchDirective::Edit::RegenerateBlock;
    p.rationale = std::move(rationale);
    out.push_back(std::move(p));
  };
  auto substitute = [&](const Violation& v, const std::string& from, const std::string& to, std::string rationale) {
    PatchDirective p;
    p.device = v.device;
    p.block = v.block;
    p.edit = PatchDirective::Edit::Substitute;
    p.from = from;
    p.to = to;
    p.rationale = std::move(rationale);
    claimed[v.device].insert(to);
    out.push_back(std::move(p));
  };

  for (const Violation& v : trace.entries) {
    const auto pit = parsed.find(v.device);
    const ParsedConfig* config = pit == parsed.end() ? nullptr : &pit->second;
    const bool block_present = config != nullptr && config->find(v.block) != nullptr;

    if (v.rule == "V4" && block_present && !v.subject.empty()) {
      std::set<std::string> used;
      for (const auto& block : config->blocks) {
        if (block.id.rfind("interface ", 0) == 0) used.insert(block.lines.front().words[1]);
      }
      used.insert(claimed[v.device].begin(), claimed[v.device].end());
      const auto ifaces = topo.interfaces_of(v.device);
      std::vector<std::string> candidates;
      for (const auto& name : ifaces) {
        if (used.count(name) == 0) candidates.push_back(name);
      }
      if (candidates.empty()) candidates = ifaces;
      if (candidates.empty()) {
        regenerate_block(v, "no interface available on " + v.device);
        continue;
      }
      const auto best = std::min_element(candidates.begin(), candidates.end(), [&](const auto& x, const auto& y) {
        const auto dx = levenshtein(v.subject, x);
        const auto dy = levenshtein(v.subject, y);
        return dx != dy ? dx < dy : x < y;
      });
      substitute(v, v.subject, *best, "use existing interface " + *best + " instead of " + v.subject);
    } else if (v.rule == "V5" && block_present) {
      const std::string iface = v.block.substr(std::string("interface ").size());
      const std::string target = canonical_prefix(topo, v.device, iface);
      const std::string current = config->interface_address(iface);
      if (target.empty() || current.empty()) {
        regenerate_block(v, "interface block has no address to correct");
      } else if (current != target) {
        substitute(v, current, target, "canonical link address for " + v.device + ":" + iface);
      }
    } else if (v.rule == "V6" && block_present && !v.subject.empty()) {
      const ConfigBlock* bgp = config->find(v.block);
      std::string remote_as;
      std::set<std::string> used(claimed[v.device].begin(), claimed[v.device].end());
      for (std::size_t i = 1; i < bgp->lines.size(); ++i) {
        const auto& w = bgp->lines[i].words;
        if (w[1] != v.subject) {
          used.insert(w[1]);
        } else if (remote_as.empty()) {
          remote_as = w[3];
        }
      }
      std::string by_asn;
      std::string first_free;
      for (const auto& [index, link] : router_links(topo)) {
        const bool is_a = link.a == v.device;
        if (!is_a && link.b != v.device) continue;
        const std::string& peer = is_a ? link.b : link.a;
        const std::string addr = address_part(canonical_prefix(topo, peer, is_a ? link.b_if : link.a_if));
        if (used.count(addr) != 0) continue;
        if (first_free.empty()) first_free = addr;
        if (by_asn.empty() && remote_as == std::to_string(canonical_asn(topo, peer))) by_asn = addr;
      }
      const std::string target = by_asn.empty() ? first_free : by_asn;
      if (target.empty()) {
        regenerate_block(v, "no unused peer address on " + v.device);
      } else if (target != v.subject) {
        substitute(v, v.subject, target, "point neighbor at linked peer address " + target);
      }
    } else {
      regenerate_block(v, v.rule + " has no deterministic fix");
    }
  }
  return out;
}

ConfigArtifact apply_patches(const ConfigArtifact& artifact, const std::vector<PatchDirective>& patches) {
  ConfigArtifact out = artifact;
  // Edited word ranges per device, kept so later directives skip them.
  std::map<std::string, std::vector<std::pair<std::size_t, std::size_t>>> edited;
  for (const PatchDirective& p : patches) {
    if (p.edit != PatchDirective::Edit::Substitute) continue;
    auto it = out.configs.find(p.device);
    if (it == out.configs.end()) continue;
    std::string& text = it->second;
    const ParsedConfig parsed = parse_config(text);
    const ConfigBlock* block = parsed.find(p.block);
    if (block == nullptr) continue;
    auto& done = edited[p.device];
    const Tokenization tokens = tokenize(std::string_view(text).substr(block->begin, block->end - block->begin));
    for (const GluedToken& t : tokens.tokens) {
      const std::size_t at = block->begin + t.offset;
      if (t.token != p.from) continue;
      if (std::any_of(done.begin(), done.end(), [&](const auto& r) { return r.first == at; })) continue;
      text.replace(at, p.from.size(), p.to);
      const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(p.to.size()) - static_cast<std::ptrdiff_t>(p.from.size());
      for (auto& r : done) {
        if (r.first > at) r.first = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(r.first) + shift);
      }
      done.push_back({at, p.to.size()});
      break;
    }
  }
  return out;
}

Verdict verify_external(const std::filesystem::path& case_dir, const std::string& command,
                        const std::string& log_name) {
  if (!std::filesystem::is_directory(case_dir)) {
    throw Error(Errc::Io, "case directory " + case_dir.string() + " does not exist");
  }
  auto quote = [](const std::string& s) {
    std::string q = "'";
    for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
    return q + "'";
  };
  const std::filesystem::path log = case_dir / log_name;
  const std::string shell = "cd " + quote(case_dir.string()) + " && (" + command + ") > " + quote(log.string()) + " 2>&1";
  const int status = std::system(shell.c_str());

  Verdict verdict;
  if (status == 0) return verdict;
  std::string tail;
  if (std::filesystem::exists(log)) {
    tail = read_text_file(log);
    if (tail.size() > kMaxTraceMessage) tail = tail.substr(tail.size() - kMaxTraceMessage);
  }
  verdict.pass = false;
  verdict.violations.push_back({"*", "harness", "external", "harness exited with status " + std::to_string(status) +
                                                                (tail.empty() ? "" : ": " + tail),
                                {}});
  return verdict;
}

}  // namespace toporag
