#include "toporag/decoding.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "toporag/error.hpp"
#include "toporag/rng.hpp"

namespace toporag {

namespace {

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '/' || c == '-';
}

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

// Length of a {{name}} marker starting at text[pos], or 0.
std::size_t marker_length(std::string_view text, std::size_t pos) {
  if (text.compare(pos, 2, "{{") != 0) return 0;
  std::size_t i = pos + 2;
  while (i < text.size() && (std::isalnum(static_cast<unsigned char>(text[i])) || text[i] == '_')) ++i;
  if (i == pos + 2 || text.compare(i, 2, "}}") != 0) return 0;
  return i + 2 - pos;
}

bool parse_octets(std::string_view s) {
  int parts = 0;
  std::size_t i = 0;
  while (true) {
    std::size_t start = i;
    int value = 0;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
      value = value * 10 + (s[i] - '0');
      if (i - start >= 3 || value > 255) return false;
      ++i;
    }
    if (i == start) return false;
    ++parts;
    if (i == s.size()) break;
    if (s[i] != '.' || parts == 4) return false;
    ++i;
  }
  return parts == 4;
}

std::string string_arg(const Placeholder& ph, const char* key) {
  if (!ph.args.is_object() || !ph.args.contains(key) || !ph.args.at(key).is_string()) return {};
  return ph.args.at(key).get<std::string>();
}

const std::pair<std::string_view, PlaceholderKind> kKindNames[] = {
    {"iface", PlaceholderKind::Iface},     {"ip4_addr", PlaceholderKind::Ip4Addr},
    {"ip4_prefix", PlaceholderKind::Ip4Prefix}, {"asn", PlaceholderKind::Asn},
    {"keyword", PlaceholderKind::Keyword}, {"device_ref", PlaceholderKind::DeviceRef},
};

std::vector<TokenId> permitted_for_step(const CompiledDevice& compiled, std::size_t step, const TopologyDoc& topo,
                                        const TokenVocab& vocab) {
  const DecodeStep& s = compiled.steps[step];
  if (s.literal) {
    auto id = vocab.find(*s.literal);
    if (!id) throw Error(Errc::EmptyPermittedSet, "literal \"" + *s.literal + "\" is not in the vocabulary");
    return {*id};
  }
  return permitted_for_placeholder(*compiled.placeholders[static_cast<std::size_t>(s.placeholder)], topo, vocab);
}

}  // namespace

std::string_view kind_name(PlaceholderKind kind) {
  for (const auto& [name, k] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

std::optional<PlaceholderKind> parse_kind(std::string_view name) {
  for (const auto& [n, k] : kKindNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

std::string Placeholder::marker() const { return "{{" + std::string(kind_name(kind)) + "}}"; }

std::vector<const Placeholder*> DeviceSkeleton::placeholders() const {
  std::vector<const Placeholder*> out;
  for (const Segment& seg : segments) {
    if (const auto* ph = std::get_if<Placeholder>(&seg)) out.push_back(ph);
  }
  return out;
}

nlohmann::json Skeleton::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const DeviceSkeleton& dev : devices) {
    nlohmann::json segs = nlohmann::json::array();
    for (const Segment& seg : dev.segments) {
      if (const auto* fixed = std::get_if<FixedText>(&seg)) {
        segs.push_back({{"fixed", fixed->text}});
      } else {
        const auto& ph = std::get<Placeholder>(seg);
        segs.push_back({{"ph", {{"kind", kind_name(ph.kind)}, {"args", ph.args}}}});
      }
    }
    out.push_back({{"device", dev.device}, {"segments", std::move(segs)}});
  }
  return out;
}

Skeleton Skeleton::from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw Error(Errc::MalformedJson, "skeleton must be an array of devices");
  Skeleton sk;
  for (const auto& dev : j) {
    if (!dev.is_object() || !dev.contains("device") || !dev.at("device").is_string() || !dev.contains("segments") ||
        !dev.at("segments").is_array()) {
      throw Error(Errc::MalformedJson, "skeleton device entries need \"device\" and \"segments\"");
    }
    DeviceSkeleton ds;
    ds.device = dev.at("device").get<std::string>();
    for (const auto& seg : dev.at("segments")) {
      if (seg.is_object() && seg.contains("fixed") && seg.at("fixed").is_string()) {
        ds.segments.emplace_back(FixedText{seg.at("fixed").get<std::string>()});
      } else if (seg.is_object() && seg.contains("ph") && seg.at("ph").is_object()) {
        const auto& ph = seg.at("ph");
        const auto kind = parse_kind(ph.value("kind", ""));
        if (!kind) throw Error(Errc::MalformedJson, "unknown placeholder kind " + ph.value("kind", std::string("?")));
        Placeholder p;
        p.kind = *kind;
        p.args = ph.value("args", nlohmann::json::object());
        if (!p.args.is_object()) throw Error(Errc::MalformedJson, "placeholder args must be an object");
        ds.segments.emplace_back(std::move(p));
      } else {
        throw Error(Errc::MalformedJson, "segment must be {\"fixed\": ...} or {\"ph\": {...}}");
      }
    }
    sk.devices.push_back(std::move(ds));
  }
  return sk;
}

std::string Skeleton::render(std::size_t device_index) const {
  std::string out;
  for (const Segment& seg : devices.at(device_index).segments) {
    if (const auto* fixed = std::get_if<FixedText>(&seg)) {
      out += fixed->text;
    } else {
      out += std::get<Placeholder>(seg).marker();
    }
  }
  return out;
}

std::size_t Skeleton::device_index(std::string_view device) const {
  for (std::size_t i = 0; i < devices.size(); ++i) {
    if (devices[i].device == device) return i;
  }
  return devices.size();
}

std::string to_template(const DeviceSkeleton& device) {
  std::string out;
  for (const Segment& seg : device.segments) {
    if (const auto* fixed = std::get_if<FixedText>(&seg)) {
      out += fixed->text;
      continue;
    }
    const auto& ph = std::get<Placeholder>(seg);
    out += "{{";
    out += kind_name(ph.kind);
    for (const auto& [key, value] : ph.args.items()) {
      out += " " + key + "=";
      if (value.is_array()) {
        for (std::size_t i = 0; i < value.size(); ++i) {
          if (i > 0) out += "|";
          out += value[i].is_string() ? value[i].get<std::string>() : value[i].dump();
        }
      } else {
        out += value.is_string() ? value.get<std::string>() : value.dump();
      }
    }
    out += "}}";
  }
  return out;
}

DeviceSkeleton parse_template(std::string device, std::string_view text) {
  DeviceSkeleton out;
  out.device = std::move(device);
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t open = text.find("{{", pos);
    if (open != pos) {
      const std::size_t stop = open == std::string_view::npos ? text.size() : open;
      out.segments.emplace_back(FixedText{std::string(text.substr(pos, stop - pos))});
      pos = stop;
      continue;
    }
    const std::size_t close = text.find("}}", open);
    if (close == std::string_view::npos) {
      throw Error(Errc::ContractViolation, "unterminated slot in template for " + out.device);
    }
    std::istringstream fields{std::string(text.substr(open + 2, close - open - 2))};
    std::string kind_text;
    fields >> kind_text;
    const auto kind = parse_kind(kind_text);
    if (!kind) throw Error(Errc::ContractViolation, "unknown slot kind \"" + kind_text + "\" in template for " + out.device);
    Placeholder ph;
    ph.kind = *kind;
    for (std::string field; fields >> field;) {
      const auto eq = field.find('=');
      if (eq == std::string::npos || eq == 0) {
        throw Error(Errc::ContractViolation, "malformed slot argument \"" + field + "\" in template for " + out.device);
      }
      const std::string key = field.substr(0, eq);
      const std::string value = field.substr(eq + 1);
      if (key == "allowed") {
        nlohmann::json list = nlohmann::json::array();
        std::size_t start = 0;
        while (true) {
          const std::size_t bar = value.find('|', start);
          list.push_back(value.substr(start, bar == std::string::npos ? std::string::npos : bar - start));
          if (bar == std::string::npos) break;
          start = bar + 1;
        }
        ph.args[key] = std::move(list);
      } else {
        ph.args[key] = value;
      }
    }
    out.segments.emplace_back(std::move(ph));
    pos = close + 2;
  }
  return out;
}

std::vector<std::string> skeleton_problems(const Skeleton& skeleton, const TopologyDoc& topo) {
  std::vector<std::string> problems;
  std::set<std::string> seen;
  for (const DeviceSkeleton& dev : skeleton.devices) {
    const std::string where = "device " + dev.device + ": ";
    if (!topo.has_device(dev.device)) problems.push_back(where + "not in the target topology");
    if (!seen.insert(dev.device).second) problems.push_back(where + "listed twice");
    if (dev.segments.empty()) problems.push_back(where + "has no segments");
    for (std::size_t i = 0; i < dev.segments.size(); ++i) {
      const Segment& seg = dev.segments[i];
      if (const auto* fixed = std::get_if<FixedText>(&seg)) {
        if (fixed->text.empty()) problems.push_back(where + "empty fixed segment");
        if (fixed->text.find("{{") != std::string::npos) problems.push_back(where + "fixed text contains a marker");
        continue;
      }
      const auto& ph = std::get<Placeholder>(seg);
      if (i > 0) {
        const auto* prev = std::get_if<FixedText>(&dev.segments[i - 1]);
        if (prev == nullptr) {
          problems.push_back(where + "adjacent placeholders");
        } else if (!prev->text.empty() && !is_space(prev->text.back())) {
          problems.push_back(where + "placeholder must follow whitespace");
        }
      }
      if (i + 1 < dev.segments.size()) {
        const auto* next = std::get_if<FixedText>(&dev.segments[i + 1]);
        if (next != nullptr && !next->text.empty() && !is_space(next->text.front())) {
          problems.push_back(where + "placeholder must be followed by whitespace");
        }
      }
      for (const char* key : {"device", "peer"}) {
        const std::string name = string_arg(ph, key);
        if (ph.args.contains(key) && !topo.has_device(name)) {
          problems.push_back(where + "placeholder binds unknown " + key + " \"" + name + "\"");
        }
      }
      const std::pair<const char*, const char*> iface_bindings[] = {{"iface", "device"}, {"peer_iface", "peer"}};
      for (const auto& [iface_key, owner_key] : iface_bindings) {
        if (!ph.args.contains(iface_key)) continue;
        const auto ifaces = topo.interfaces_of(string_arg(ph, owner_key));
        const std::string name = string_arg(ph, iface_key);
        if (std::find(ifaces.begin(), ifaces.end(), name) == ifaces.end()) {
          problems.push_back(where + "placeholder binds unknown interface \"" + name + "\"");
        }
      }
      if (ph.kind == PlaceholderKind::Iface && !ph.args.contains("device")) {
        problems.push_back(where + "iface placeholder without a device binding");
      }
      if (ph.kind == PlaceholderKind::Keyword &&
          (!ph.args.contains("allowed") || !ph.args.at("allowed").is_array() || ph.args.at("allowed").empty())) {
        problems.push_back(where + "keyword placeholder without an allowed list");
      }
    }
  }
  return problems;
}

Tokenization tokenize(std::string_view text) {
  Tokenization out;
  std::string glue;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (is_space(c)) {
      glue += c;
      ++i;
      continue;
    }
    std::size_t len = marker_length(text, i);
    if (len == 0) {
      len = 1;
      if (is_word_char(c)) {
        while (i + len < text.size() && is_word_char(text[i + len])) ++len;
      }
    }
    out.tokens.push_back(GluedToken{std::move(glue), std::string(text.substr(i, len)), i});
    glue.clear();
    i += len;
  }
  out.tail = std::move(glue);
  return out;
}

bool is_ip4_address(std::string_view token) { return parse_octets(token); }

bool is_ip4_prefix(std::string_view token) {
  const auto slash = token.find('/');
  if (slash == std::string_view::npos) return false;
  const std::string_view len = token.substr(slash + 1);
  if (len.empty() || len.size() > 2 || !is_integer_literal(len)) return false;
  int value = 0;
  for (char c : len) value = value * 10 + (c - '0');
  return value <= 32 && parse_octets(token.substr(0, slash));
}

bool is_integer_literal(std::string_view token) {
  return !token.empty() &&
         std::all_of(token.begin(), token.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

TokenVocab::TokenVocab() { add("<eos>"); }

TokenId TokenVocab::add(std::string_view token) {
  const std::string key(token);
  if (auto it = ids_.find(key); it != ids_.end()) return it->second;
  const auto id = static_cast<TokenId>(tokens_.size());
  tokens_.push_back(key);
  ids_.emplace(key, id);
  if (is_ip4_address(key)) ip4_addresses_.push_back(id);
  if (is_ip4_prefix(key)) ip4_prefixes_.push_back(id);
  if (is_integer_literal(key)) integers_.push_back(id);
  return id;
}

void TokenVocab::add_text(std::string_view text) {
  for (const GluedToken& t : tokenize(text).tokens) add(t.token);
}

std::optional<TokenId> TokenVocab::find(std::string_view token) const {
  if (auto it = ids_.find(std::string(token)); it != ids_.end()) return it->second;
  return std::nullopt;
}

TokenId TokenVocab::id(std::string_view token) const {
  if (auto found = find(token)) return *found;
  throw Error(Errc::InvalidArgument, "token \"" + std::string(token) + "\" is not in the vocabulary");
}

const std::string& TokenVocab::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw Error(Errc::InvalidArgument, "token id out of range");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

CompiledDevice compile_steps(const DeviceSkeleton& device) {
  CompiledDevice out;
  std::string pending;
  int ordinal = 0;
  for (const Segment& seg : device.segments) {
    if (const auto* fixed = std::get_if<FixedText>(&seg)) {
      Tokenization t = tokenize(fixed->text);
      for (GluedToken& gt : t.tokens) {
        out.steps.push_back(DecodeStep{pending + gt.glue, std::move(gt.token), -1});
        pending.clear();
      }
      pending += t.tail;
    } else {
      out.placeholders.push_back(&std::get<Placeholder>(seg));
      out.steps.push_back(DecodeStep{std::move(pending), std::nullopt, ordinal++});
      pending.clear();
    }
  }
  out.tail = std::move(pending);
  return out;
}

std::vector<TokenId> permitted_for_placeholder(const Placeholder& placeholder, const TopologyDoc& topo,
                                               const TokenVocab& vocab) {
  std::vector<TokenId> ids;
  auto add_known = [&](const std::string& token) {
    if (auto id = vocab.find(token)) ids.push_back(*id);
  };
  switch (placeholder.kind) {
    case PlaceholderKind::Iface: {
      const std::string device = string_arg(placeholder, "device");
      if (!topo.has_device(device)) {
        throw Error(Errc::EmptyPermittedSet, "iface placeholder bound to unknown device \"" + device + "\"");
      }
      for (const std::string& name : topo.interfaces_of(device)) add_known(name);
      break;
    }
    case PlaceholderKind::Ip4Addr: ids = vocab.ip4_addresses(); break;
    case PlaceholderKind::Ip4Prefix: ids = vocab.ip4_prefixes(); break;
    case PlaceholderKind::Asn: ids = vocab.integers(); break;
    case PlaceholderKind::Keyword:
      if (placeholder.args.contains("allowed") && placeholder.args.at("allowed").is_array()) {
        for (const auto& word : placeholder.args.at("allowed")) {
          if (word.is_string()) add_known(word.get<std::string>());
        }
      }
      break;
    case PlaceholderKind::DeviceRef:
      for (const std::string& name : topo.device_order()) add_known(name);
      break;
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (ids.empty()) {
    throw Error(Errc::EmptyPermittedSet, std::string(kind_name(placeholder.kind)) + " placeholder has no candidates");
  }
  return ids;
}

std::vector<TokenId> permitted_tokens(const Skeleton& skeleton, const Cursor& cursor, const TopologyDoc& topo,
                                      const TokenVocab& vocab) {
  if (cursor.device >= skeleton.devices.size()) {
    throw Error(Errc::CursorOutOfRange, "device index " + std::to_string(cursor.device));
  }
  const CompiledDevice compiled = compile_steps(skeleton.devices[cursor.device]);
  if (cursor.step >= compiled.steps.size()) {
    throw Error(Errc::CursorOutOfRange, "step " + std::to_string(cursor.step) + " of device " +
                                            skeleton.devices[cursor.device].device);
  }
  return permitted_for_step(compiled, cursor.step, topo, vocab);
}

std::vector<double> constrain(std::span<const double> dist, std::span<const TokenId> permitted) {
  if (permitted.empty()) throw Error(Errc::EmptyConstraint, "permitted set is empty");
  const double total = std::accumulate(dist.begin(), dist.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9) {
    throw Error(Errc::InvalidArgument, "distribution does not sum to 1");
  }
  std::vector<char> allowed(dist.size(), 0);
  for (TokenId id : permitted) {
    if (id < 0 || static_cast<std::size_t>(id) >= dist.size()) {
      throw Error(Errc::InvalidArgument, "permitted token id out of range");
    }
    allowed[static_cast<std::size_t>(id)] = 1;
  }

  bool covers_support = true;
  double mass = 0.0;
  for (std::size_t v = 0; v < dist.size(); ++v) {
    if (allowed[v]) {
      mass += dist[v];
    } else if (dist[v] != 0.0) {
      covers_support = false;
    }
  }
  // Every nonzero entry survives the mask, so the renormaliser is exactly
  // one and the input is returned unchanged.
  if (covers_support) return std::vector<double>(dist.begin(), dist.end());

  std::vector<double> out(dist.size(), 0.0);
  const std::size_t count = static_cast<std::size_t>(std::count(allowed.begin(), allowed.end(), 1));
  for (std::size_t v = 0; v < dist.size(); ++v) {
    if (!allowed[v]) continue;
    out[v] = mass < 1e-12 ? 1.0 / static_cast<double>(count) : dist[v] / mass;
  }
  return out;
}

DecodeResult decode_with_skeleton(DistributionSource& source, const Skeleton& skeleton, const TopologyDoc& topo,
                                  const TokenVocab& vocab, std::size_t token_cap, std::uint64_t seed,
                                  const DecodeOptions& options) {
  if (token_cap == 0) throw Error(Errc::InvalidArgument, "token_cap must be at least 1");
  Rng rng(seed);
  std::vector<TokenId> free_choice(vocab.size() - 1);
  std::iota(free_choice.begin(), free_choice.end(), 1);

  DecodeResult result;
  std::vector<TokenId> prefix;
  for (std::size_t d = 0; d < skeleton.devices.size(); ++d) {
    const CompiledDevice compiled = compile_steps(skeleton.devices[d]);
    DecodedDevice out;
    out.device = skeleton.devices[d].device;
    out.values.resize(compiled.placeholders.size());
    out.value_offsets.resize(compiled.placeholders.size());

    for (std::size_t s = 0; s < compiled.steps.size(); ++s) {
      if (result.tokens_used >= token_cap) {
        throw Error(Errc::TokenCapExceeded, "skeleton unfinished after " + std::to_string(token_cap) + " tokens");
      }
      const DecodeStep& step = compiled.steps[s];
      std::vector<TokenId> allowed;
      if (step.placeholder >= 0) {
        const PlaceholderKey key{d, static_cast<std::size_t>(step.placeholder)};
        if (auto it = options.forced.find(key); it != options.forced.end()) {
          allowed = {vocab.id(it->second)};
        } else if (options.constrained) {
          allowed = permitted_for_step(compiled, s, topo, vocab);
        } else {
          allowed = free_choice;
        }
      } else {
        allowed = permitted_for_step(compiled, s, topo, vocab);
      }

      const std::vector<double> dist = source.next(Cursor{d, s}, prefix);
      if (dist.size() != vocab.size()) {
        throw Error(Errc::BackendError, "distribution size does not match the vocabulary");
      }
      const std::vector<double> p = constrain(dist, allowed);

      TokenId chosen = allowed.front();
      if (options.greedy) {
        for (TokenId id : allowed) {
          if (p[static_cast<std::size_t>(id)] > p[static_cast<std::size_t>(chosen)]) chosen = id;
        }
      } else {
        const double u = rng.uniform01();
        double acc = 0.0;
        for (TokenId id : allowed) {
          acc += p[static_cast<std::size_t>(id)];
          chosen = id;
          if (u < acc) break;
        }
      }

      const std::string& token = vocab.token(chosen);
      out.text += step.glue;
      if (step.placeholder >= 0) {
        out.values[static_cast<std::size_t>(step.placeholder)] = token;
        out.value_offsets[static_cast<std::size_t>(step.placeholder)] = out.text.size();
      }
      out.text += token;
      prefix.push_back(chosen);
      ++result.tokens_used;
    }
    out.text += compiled.tail;
    result.devices.push_back(std::move(out));
  }
  return result;
}

DecodedDevice instantiate(const DeviceSkeleton& device, const std::vector<std::string>& values) {
  const CompiledDevice compiled = compile_steps(device);
  if (values.size() != compiled.placeholders.size()) {
    throw Error(Errc::InvalidArgument, "expected " + std::to_string(compiled.placeholders.size()) +
                                           " placeholder values for " + device.device);
  }
  DecodedDevice out;
  out.device = device.device;
  out.values = values;
  out.value_offsets.resize(values.size());
  for (const DecodeStep& step : compiled.steps) {
    out.text += step.glue;
    if (step.literal) {
      out.text += *step.literal;
    } else {
      out.value_offsets[static_cast<std::size_t>(step.placeholder)] = out.text.size();
      out.text += values[static_cast<std::size_t>(step.placeholder)];
    }
  }
  out.text += compiled.tail;
  return out;
}

std::optional<DecodedDevice> align_to_skeleton(const DeviceSkeleton& device, std::string_view text) {
  const CompiledDevice compiled = compile_steps(device);
  const Tokenization t = tokenize(text);
  if (t.tokens.size() != compiled.steps.size()) return std::nullopt;
  DecodedDevice out;
  out.device = device.device;
  out.text = std::string(text);
  out.values.resize(compiled.placeholders.size());
  out.value_offsets.resize(compiled.placeholders.size());
  for (std::size_t i = 0; i < compiled.steps.size(); ++i) {
    const DecodeStep& step = compiled.steps[i];
    if (step.literal) {
      if (*step.literal != t.tokens[i].token) return std::nullopt;
    } else {
      out.values[static_cast<std::size_t>(step.placeholder)] = t.tokens[i].token;
      out.value_offsets[static_cast<std::size_t>(step.placeholder)] = t.tokens[i].offset;
    }
  }
  return out;
}

}  // namespace toporag
