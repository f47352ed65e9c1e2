#include <gtest/gtest.h>

#include <algorithm>
#include <string>

#include "sentinel/scenario.hpp"

using namespace sentinel;
using namespace sentinel::sim;

namespace {

const char* kSmall = R"(name = small
seed = 5

[radio]
preset = free_space
rx_sensitivity_mw = 4e-7

[nodes]
sink = S
S = 0, 0
a = 10, 0    # trailing comment
b = 20, 0
b.rx_sensitivity_mw = 1e-6

[keys]
degree = 2
group = a b
temp.a = 2
org.a = 6
auth_mode = nonce-free

[adversary]
Z = 15, 5
Z.class = laptop

[events]
0 = DEPLOY
1 = PROVISION a b
2 = VERIFY a b
3 = JOIN_GROUP b under=k1
4 = SEND_INTEREST | type,temperature,EQ; x,20,LE
5 = SEND_DATA a 21 | type,temperature,IS; x,10,IS
6 = COMPROMISE_NODE Z b
6 = ADVERSARY_REPLAY Z a
7 = LEAVE_GROUP a
8 = ROTATE
)";

bool mentions(const std::vector<std::string>& v, const std::string& needle) {
  return std::any_of(v.begin(), v.end(), [&](const auto& s) { return s.find(needle) != std::string::npos; });
}

std::string with_events(const std::string& events) {
  return "[nodes]\nsink = S\nS = 0, 0\na = 10, 0\nb = 20, 0\n[adversary]\nZ = 5, 5\n[events]\n" + events;
}

} // namespace

TEST(Parse, EverySection) {
  const auto s = parse_scenario(kSmall);
  EXPECT_TRUE(s.parse_errors.empty());
  EXPECT_EQ(s.name, "small");
  EXPECT_EQ(s.seed, 5U);
  EXPECT_DOUBLE_EQ(s.radio.rx_sensitivity_mw, 4e-7);
  EXPECT_EQ(s.sink, "S");
  ASSERT_EQ(s.nodes.size(), 3U);
  EXPECT_EQ(s.nodes[1].node_id, "a");
  EXPECT_DOUBLE_EQ(s.nodes[2].x_m, 20.0);
  EXPECT_DOUBLE_EQ(s.rx_overrides.at("b"), 1e-6);
  EXPECT_EQ(s.keys.degree, 2U);
  EXPECT_EQ(s.keys.group_members, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(s.keys.schedule.temp_labels.at("a"), "2");
  EXPECT_EQ(s.keys.schedule.original_labels.at("a"), "6");
  EXPECT_EQ(s.keys.auth_mode, exchange::AuthMode::NONCE_FREE);
  ASSERT_EQ(s.adversaries.size(), 1U);
  EXPECT_EQ(s.adversaries[0].cls, AdversaryClass::LAPTOP);
  EXPECT_TRUE(validate(s).empty());
}

TEST(Parse, EventArguments) {
  const auto s = parse_scenario(kSmall);
  ASSERT_EQ(s.events.size(), 10U);
  EXPECT_EQ(s.events[0].kind, EventKind::DEPLOY);
  EXPECT_TRUE(s.events[0].nodes.empty());
  EXPECT_EQ(s.events[2].nodes, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(s.events[3].under, std::optional<std::string>("k1"));
  EXPECT_EQ(s.events[4].attributes.attributes.size(), 2U);
  EXPECT_EQ(s.events[5].value, 21U);
  EXPECT_EQ(s.events[5].nodes, std::vector<std::string>{"a"});
  EXPECT_EQ(s.events[6].adversary, "Z");
  EXPECT_EQ(s.events[6].nodes, std::vector<std::string>{"b"});
  EXPECT_EQ(s.events[9].kind, EventKind::ROTATE);
  EXPECT_EQ(s.events[9].tick, 8);
}

TEST(Parse, ShapedGroup) {
  const auto s = parse_scenario("[keys]\ngroup = ((M1 M2 M3)(M4 M5))\n");
  EXPECT_EQ(s.keys.group_shape, std::optional<std::string>("((M1 M2 M3)(M4 M5))"));
}

TEST(Parse, EventKindNamesRoundTrip) {
  for (auto k : kAllEventKinds) EXPECT_EQ(event_kind_from_string(to_string(k)), k);
  EXPECT_FALSE(event_kind_from_string("EXPLODE"));
}

TEST(Parse, ErrorsCarryLineNumbers) {
  const auto s = parse_scenario("[nodes]\nS = 0\n[bogus]\n[events]\n1 = SEND_DATA a x\n-2 = ROTATE\n3 = FLY\n");
  EXPECT_EQ(s.parse_errors.size(), 5U);
  EXPECT_TRUE(mentions(s.parse_errors, "line 2: node S needs"));
  EXPECT_TRUE(mentions(s.parse_errors, "line 3: unknown section [bogus]"));
  EXPECT_TRUE(mentions(s.parse_errors, "line 5: SEND_DATA value"));
  EXPECT_TRUE(mentions(s.parse_errors, "line 6: event tick"));
  EXPECT_TRUE(mentions(s.parse_errors, "line 7: unknown event kind 'FLY'"));
}

TEST(Parse, ArityChecked) {
  const auto s = parse_scenario(with_events("1 = VERIFY a\n2 = ROTATE a\n3 = COMPROMISE_NODE a\n"));
  EXPECT_EQ(s.parse_errors.size(), 3U);
  EXPECT_TRUE(s.events.empty());
}

TEST(Validate, WellFormedIsEmpty) {
  EXPECT_EQ(validate(parse_scenario(with_events("0 = DEPLOY\n1 = PROVISION\n"))), std::vector<std::string>{});
}

TEST(Validate, UndeclaredNodeNamed) {
  const auto v = validate(parse_scenario(with_events("0 = DEPLOY a ghost\n")));
  ASSERT_EQ(v.size(), 1U);
  EXPECT_NE(v[0].find("ghost"), std::string::npos);
}

TEST(Validate, DecreasingTicksNamesBoth) {
  const auto v = validate(parse_scenario(with_events("5 = DEPLOY\n3 = PROVISION\n")));
  ASSERT_EQ(v.size(), 1U);
  EXPECT_NE(v[0].find("tick 3"), std::string::npos);
  EXPECT_NE(v[0].find("tick 5"), std::string::npos);
}

TEST(Validate, EqualTicksAreFine) {
  EXPECT_TRUE(validate(parse_scenario(with_events("2 = DEPLOY a\n2 = DEPLOY b\n"))).empty());
}

TEST(Validate, EveryViolationListed) {
  const std::string text = R"([radio]
rx_sensitivity_mw = -1
[nodes]
sink = C
a = 0, 0
ghost.rx_sensitivity_mw = 1e-6
[keys]
degree = 1
group = a nobody
temp.a = 2
org.a = 2
[adversary]
a = 1, 1
[events]
4 = DEPLOY a
2 = COMPROMISE_NODE Y a
)";
  const auto v = validate(parse_scenario(text));
  for (const char* needle : {"radio: ", "sink C has no position", "undeclared node ghost", "degree must be",
                             "group member nobody", "label 2 scripted twice", "adversary a reuses",
                             "tick 2 comes after tick 4", "undeclared adversary Y"}) {
    EXPECT_TRUE(mentions(v, needle)) << needle;
  }
  EXPECT_GE(v.size(), 9U);
}

TEST(Validate, SinkCannotBeSubject) {
  const auto v = validate(parse_scenario(with_events("1 = SEND_DATA S 4\n")));
  ASSERT_EQ(v.size(), 1U);
  EXPECT_NE(v[0].find("sink S"), std::string::npos);
}

TEST(Validate, EmptyScenario) {
  const auto v = validate(parse_scenario(""));
  EXPECT_TRUE(mentions(v, "no nodes"));
  EXPECT_TRUE(mentions(v, "no sink"));
}

TEST(Load, MissingFileIsIoError) { EXPECT_THROW(load_scenario("/nonexistent/dir/x.scn"), IoError); }

TEST(Load, ShippedScenariosValidate) {
  for (const char* name : {"paper_rekey.scn", "paper_exchange.scn", "grid30.scn"}) {
    const auto s = load_scenario(std::string(SENTINEL_SOURCE_DIR) + "/scenarios/" + name);
    EXPECT_EQ(validate(s), std::vector<std::string>{}) << name;
  }
}

TEST(Config, ExchangeConfigFollowsKeys) {
  auto s = parse_scenario("[keys]\nkey_bits = 32\ncode_bits = 8\nmodulus = 1000\nmax_group_size = 10\n");
  const auto c = exchange_config(s);
  EXPECT_EQ(c.key_bits, 32U);
  EXPECT_EQ(c.code_box.outputs(), 8U);
  EXPECT_EQ(c.value_limit(), 100U);
}
