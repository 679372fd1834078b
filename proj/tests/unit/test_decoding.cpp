#include <doctest.h>

#include <numeric>

#include "helpers.hpp"
#include "toporag/decoding.hpp"
#include "toporag/error.hpp"
#include "toporag/io.hpp"
#include "toporag/mock_backend.hpp"

using namespace toporag;

namespace {

TopologyDoc two_router() { return parse_topology(read_text_file(testutil::fixtures() / "two_router.json")); }

// Puts all mass on one chosen token at every step.
class PeakSource : public DistributionSource {
 public:
  PeakSource(std::size_t vocab_size, TokenId peak) : size_(vocab_size), peak_(peak) {}
  std::vector<double> next(const Cursor&, std::span<const TokenId>) override {
    std::vector<double> d(size_, 0.0);
    d[static_cast<std::size_t>(peak_)] = 1.0;
    return d;
  }

 private:
  std::size_t size_;
  TokenId peak_;
};

class UniformSource : public DistributionSource {
 public:
  explicit UniformSource(std::size_t vocab_size) : size_(vocab_size) {}
  std::vector<double> next(const Cursor&, std::span<const TokenId>) override {
    return std::vector<double>(size_, 1.0 / static_cast<double>(size_));
  }

 private:
  std::size_t size_;
};

std::vector<double> random_distribution(Rng& rng, std::size_t n, double zero_share) {
  std::vector<double> d(n);
  for (auto& v : d) v = rng.uniform01() < zero_share ? 0.0 : rng.uniform01();
  double total = std::accumulate(d.begin(), d.end(), 0.0);
  if (total == 0.0) {
    d[0] = 1.0;
    total = 1.0;
  }
  for (auto& v : d) v /= total;
  return d;
}

}  // namespace

TEST_CASE("tokenizer keeps words, markers and glue") {
  const Tokenization t = tokenize("interface {{iface}}\n ip address 10.0.0.1/24\n!\n");
  std::vector<std::string> words;
  for (const auto& g : t.tokens) words.push_back(g.token);
  CHECK(words == std::vector<std::string>{"interface", "{{iface}}", "ip", "address", "10.0.0.1/24", "!"});
  CHECK(t.tokens[1].glue == " ");
  CHECK(t.tokens[2].glue == "\n ");
  CHECK(t.tokens[4].offset == std::string("interface {{iface}}\n ip address ").size());
  CHECK(t.tail == "\n");

  std::string rebuilt;
  for (const auto& g : t.tokens) rebuilt += g.glue + g.token;
  CHECK(rebuilt + t.tail == "interface {{iface}}\n ip address 10.0.0.1/24\n!\n");
}

TEST_CASE("token classes") {
  CHECK(is_ip4_address("10.0.0.1"));
  CHECK_FALSE(is_ip4_address("10.0.0.256"));
  CHECK_FALSE(is_ip4_address("10.0.0"));
  CHECK(is_ip4_prefix("10.0.0.0/24"));
  CHECK_FALSE(is_ip4_prefix("10.0.0.0/33"));
  CHECK_FALSE(is_ip4_prefix("10.0.0.0"));
  CHECK(is_integer_literal("65001"));
  CHECK_FALSE(is_integer_literal("65a"));
  CHECK_FALSE(is_integer_literal(""));
}

TEST_CASE("vocabulary reserves id 0 and classifies tokens") {
  TokenVocab v;
  CHECK(v.size() == 1);
  CHECK(v.token(TokenVocab::kEndOfOutput) == "<eos>");
  const TokenId a = v.add("10.0.0.1");
  CHECK(v.add("10.0.0.1") == a);
  v.add_text("neighbor 10.0.0.2 remote-as 65002\n");
  CHECK(v.find("remote-as").has_value());
  CHECK(v.ip4_addresses().size() == 2);
  CHECK(v.integers() == std::vector<TokenId>{v.id("65002")});
  CHECK_FALSE(v.find("absent").has_value());
  CHECK_THROWS_AS(v.id("absent"), Error);
}

TEST_CASE("compile_steps splits literals and slots") {
  const DeviceSkeleton dev = parse_template("r1", "router bgp {{asn device=r1}}\n neighbor {{ip4_addr device=r1}}\n");
  const CompiledDevice c = compile_steps(dev);
  REQUIRE(c.steps.size() == 5);
  CHECK(c.steps[0].literal == "router");
  CHECK(c.steps[1].glue == " ");
  CHECK(c.steps[2].placeholder == 0);
  CHECK(c.steps[3].literal == "neighbor");
  CHECK(c.steps[3].glue == "\n ");
  CHECK(c.steps[4].placeholder == 1);
  CHECK(c.tail == "\n");
  CHECK(c.placeholders[0]->kind == PlaceholderKind::Asn);
}

TEST_CASE("annotated templates round-trip") {
  const Skeleton sk = mock_skeleton(parse_topology(read_text_file(testutil::fixtures() / "corpus/q_star5/topology.json")));
  for (const auto& dev : sk.devices) {
    const std::string text = to_template(dev);
    const DeviceSkeleton back = parse_template(dev.device, text);
    CHECK(to_template(back) == text);
    Skeleton one{{back}};
    CHECK(one.to_json() == Skeleton{{dev}}.to_json());
  }
  CHECK(Skeleton::from_json(sk.to_json()).to_json() == sk.to_json());
  const DeviceSkeleton kw = parse_template("r1", "redistribute {{keyword allowed=connected|static}}\n");
  CHECK(kw.placeholders()[0]->args.at("allowed") == nlohmann::json::array({"connected", "static"}));
}

TEST_CASE("skeleton problems are reported") {
  const TopologyDoc topo = two_router();
  CHECK(skeleton_problems(mock_skeleton(topo), topo).empty());
  Skeleton bad{{parse_template("r9", "router bgp {{asn device=r9}}\n")}};
  CHECK_FALSE(skeleton_problems(bad, topo).empty());
  Skeleton glued{{parse_template("r1", "x{{asn device=r1}}\n")}};
  CHECK_FALSE(skeleton_problems(glued, topo).empty());
  Skeleton wrong_if{{parse_template("r1", "interface {{iface device=r1 iface=eth7}}\n")}};
  CHECK_FALSE(skeleton_problems(wrong_if, topo).empty());
}

TEST_CASE("constrain matches masked renormalisation") {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(40);
    const auto dist = random_distribution(rng, n, 0.3);
    std::vector<TokenId> permitted;
    for (std::size_t v = 0; v < n; ++v) {
      if (rng.uniform01() < 0.4) permitted.push_back(static_cast<TokenId>(v));
    }
    if (permitted.empty()) permitted.push_back(static_cast<TokenId>(rng.uniform_index(n)));
    const auto out = constrain(dist, permitted);
    double mass = 0.0;
    for (TokenId id : permitted) mass += dist[static_cast<std::size_t>(id)];
    std::vector<char> in(n, 0);
    for (TokenId id : permitted) in[static_cast<std::size_t>(id)] = 1;
    CHECK(std::abs(std::accumulate(out.begin(), out.end(), 0.0) - 1.0) < 1e-9);
    for (std::size_t v = 0; v < n; ++v) {
      const double expected =
          !in[v] ? 0.0 : (mass < 1e-12 ? 1.0 / static_cast<double>(permitted.size()) : dist[v] / mass);
      CHECK(std::abs(out[v] - expected) < 1e-9);
      if (!in[v]) CHECK(out[v] == 0.0);
    }
  }
}

TEST_CASE("a full-vocabulary mask is the identity") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(30);
    const auto dist = random_distribution(rng, n, 0.2);
    std::vector<TokenId> all(n);
    std::iota(all.begin(), all.end(), 0);
    CHECK(constrain(dist, all) == dist);
  }
}

TEST_CASE("constrain edge cases") {
  const std::vector<double> d = {0.0, 1.0, 0.0};
  const std::vector<TokenId> none;
  try {
    constrain(d, none);
    FAIL("expected EmptyConstraint");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::EmptyConstraint);
  }
  const std::vector<TokenId> zero_mass = {0, 2};
  CHECK(constrain(d, zero_mass) == std::vector<double>{0.5, 0.0, 0.5});
  const std::vector<double> off = {0.5, 0.6};
  const std::vector<TokenId> one = {0};
  CHECK_THROWS_AS(constrain(off, one), Error);
  const std::vector<TokenId> out_of_range = {7};
  CHECK_THROWS_AS(constrain(d, out_of_range), Error);
}

TEST_CASE("constrained decoding only emits permitted slot values") {
  const TopologyDoc topo = two_router();
  const Skeleton sk = mock_skeleton(topo);
  TokenVocab vocab;
  for (const auto& dev : sk.devices) vocab.add_text(sk.render(sk.device_index(dev.device)));
  for (const char* t : {"eth0", "10.0.0.1/24", "10.0.0.2/24", "10.0.0.1", "10.0.0.2", "65001", "65002", "bogus"}) {
    vocab.add(t);
  }
  PeakSource wrong(vocab.size(), vocab.id("bogus"));
  const DecodeResult r = decode_with_skeleton(wrong, sk, topo, vocab, 1000, 1);
  REQUIRE(r.devices.size() == 2);
  for (const auto& dev : r.devices) {
    CHECK(dev.text.find("bogus") == std::string::npos);
    CHECK(dev.values[0] == "eth0");
    for (std::size_t i = 0; i < dev.values.size(); ++i) {
      CHECK(dev.text.compare(dev.value_offsets[i], dev.values[i].size(), dev.values[i]) == 0);
    }
  }

  DecodeOptions loose;
  loose.constrained = false;
  const DecodeResult u = decode_with_skeleton(wrong, sk, topo, vocab, 1000, 1, loose);
  CHECK(u.devices[0].values[0] == "bogus");
  CHECK(u.tokens_used == r.tokens_used);

  DecodeOptions pinned;
  pinned.forced[{0, 1}] = "10.0.0.2/24";
  const DecodeResult f = decode_with_skeleton(wrong, sk, topo, vocab, 1000, 1, pinned);
  CHECK(f.devices[0].values[1] == "10.0.0.2/24");
}

TEST_CASE("decoding enforces the token cap and the vocabulary size") {
  const TopologyDoc topo = two_router();
  const Skeleton sk = mock_skeleton(topo);
  TokenVocab vocab;
  for (std::size_t d = 0; d < sk.devices.size(); ++d) vocab.add_text(sk.render(d));
  for (const char* t : {"eth0", "10.0.0.1/24", "10.0.0.2", "65001", "65002"}) vocab.add(t);
  UniformSource source(vocab.size());
  try {
    decode_with_skeleton(source, sk, topo, vocab, 3, 1);
    FAIL("expected TokenCapExceeded");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::TokenCapExceeded);
  }
  UniformSource short_source(vocab.size() - 1);
  try {
    decode_with_skeleton(short_source, sk, topo, vocab, 1000, 1);
    FAIL("expected BackendError");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::BackendError);
  }
}

TEST_CASE("sampling is seed-deterministic") {
  const TopologyDoc topo = two_router();
  const Skeleton sk = mock_skeleton(topo);
  TokenVocab vocab;
  for (std::size_t d = 0; d < sk.devices.size(); ++d) vocab.add_text(sk.render(d));
  for (const char* t : {"eth0", "10.0.0.1/24", "10.0.0.2/24", "10.0.0.1", "10.0.0.2", "65001", "65002"}) vocab.add(t);
  UniformSource source(vocab.size());
  DecodeOptions opts;
  opts.greedy = false;
  const auto a = decode_with_skeleton(source, sk, topo, vocab, 1000, 42, opts);
  const auto b = decode_with_skeleton(source, sk, topo, vocab, 1000, 42, opts);
  for (std::size_t d = 0; d < a.devices.size(); ++d) CHECK(a.devices[d].text == b.devices[d].text);
}

TEST_CASE("free text aligns to its template") {
  const DeviceSkeleton dev = parse_template("r1", "router bgp {{asn device=r1}}\n neighbor {{ip4_addr device=r1}} x\n");
  const auto ok = align_to_skeleton(dev, "router  bgp 65001\n neighbor 10.0.0.2 x\n");
  REQUIRE(ok.has_value());
  CHECK(ok->values == std::vector<std::string>{"65001", "10.0.0.2"});
  CHECK_FALSE(align_to_skeleton(dev, "router ospf 1\n neighbor 10.0.0.2 x\n").has_value());
  CHECK_FALSE(align_to_skeleton(dev, "router bgp 65001\n").has_value());
  const DecodedDevice inst = instantiate(dev, {"65001", "10.0.0.2"});
  CHECK(inst.text == "router bgp 65001\n neighbor 10.0.0.2 x\n");
}

TEST_CASE("permitted sets follow the topology") {
  const TopologyDoc topo = two_router();
  TokenVocab vocab;
  for (const char* t : {"eth0", "eth1", "r1", "r2", "10.0.0.1"}) vocab.add(t);
  Placeholder iface{PlaceholderKind::Iface, {{"device", "r1"}}};
  CHECK(permitted_for_placeholder(iface, topo, vocab) == std::vector<TokenId>{vocab.id("eth0")});
  Placeholder dev{PlaceholderKind::DeviceRef, nlohmann::json::object()};
  CHECK(permitted_for_placeholder(dev, topo, vocab).size() == 2);
  Placeholder asn{PlaceholderKind::Asn, nlohmann::json::object()};
  try {
    permitted_for_placeholder(asn, topo, vocab);
    FAIL("expected EmptyPermittedSet");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::EmptyPermittedSet);
  }
  const Skeleton sk{{parse_template("r1", "interface {{iface device=r1}}\n")}};
  CHECK_THROWS_AS(permitted_tokens(sk, Cursor{0, 9}, topo, vocab), Error);
  CHECK_THROWS_AS(permitted_tokens(sk, Cursor{3, 0}, topo, vocab), Error);
}
