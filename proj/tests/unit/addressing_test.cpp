#include <gtest/gtest.h>

#include "generators.hpp"
#include "sentinel/addressing.hpp"
#include "test_oracles.hpp"

using namespace sentinel;
using namespace sentinel::addressing;

namespace {

radio::Topology clique(int n) {
  std::vector<radio::NodePosition> pos;
  for (int i = 0; i < n; ++i) pos.push_back({"c" + std::to_string(i), i * 2.0, 0});
  return radio::build_topology({}, pos);
}

AttributeSet paper_interest() {
  return parse_attribute_set("type, temperature, EQ\n"
                             "x-coordinate, 20, LE\n"
                             "x-coordinate, 0, GE\n"
                             "y-coordinate, 20, LE\n"
                             "y-coordinate, 0, GE\n"
                             "threshold-from-below, 20, IS\n"
                             "interval, 0.05, IS\n"
                             "duration, 10, IS\n"
                             "class, interest, IS\n");
}

AttributeSet paper_data() {
  return parse_attribute_set("<type ,temperature ,IS>\n<x-coordinate ,10 ,IS>\n<y-coordinate ,10 ,IS>\n");
}

} // namespace

TEST(Assign, FirstNodeGetsZero) {
  AddressTable t;
  EXPECT_EQ(assign_address("c0", clique(3), t).value, 0U);
}

TEST(Assign, CliqueIsSequential) {
  auto topo = clique(3);
  AddressTable t;
  EXPECT_EQ(assign_address("c0", topo, t).value, 0U);
  EXPECT_EQ(assign_address("c1", topo, t).value, 1U);
  EXPECT_EQ(assign_address("c2", topo, t).value, 2U);
  EXPECT_EQ(t.order, (std::vector<std::string>{"c0", "c1", "c2"}));
}

TEST(Assign, UnlinkedBothZero) {
  auto topo = radio::build_topology({}, {{"a", 0, 0}, {"b", 500, 0}});
  auto t = assign_all(topo);
  EXPECT_EQ(t.assignments.at("a").value, 0U);
  EXPECT_EQ(t.assignments.at("b").value, 0U);
}

TEST(Assign, HiddenReceiversConflict) {
  // a and c cannot hear each other but both hear b.
  radio::RadioParams p;
  p.rx_sensitivity_mw = 5e-7;
  auto topo = radio::build_topology(p, {{"a", 0, 0}, {"b", 10, 0}, {"c", 20, 0}});
  EXPECT_EQ(conflict_neighborhood(topo, "a"), (std::set<std::string>{"b", "c"}));
  auto t = assign_all(topo);
  EXPECT_NE(t.assignments.at("a"), t.assignments.at("c"));
}

TEST(Assign, UnknownNodeIsError) {
  AddressTable t;
  EXPECT_THROW(assign_address("zz", clique(2), t), DomainError);
}

TEST(Assign, ConflictFreedomAndMinimality) {
  gen::Engine e(10);
  for (int trial = 0; trial < 100; ++trial) {
    auto topo = gen::random_topology(e, 20);
    AddressTable table;
    for (const auto& p : topo.positions()) {
      const auto conflicts = oracle::conflict_set(topo, p.node_id);
      EXPECT_EQ(conflict_neighborhood(topo, p.node_id), conflicts);
      std::set<std::uint32_t> before;
      for (const auto& c : conflicts)
        if (auto a = table.find(c)) before.insert(a->value);
      const auto got = assign_address(p.node_id, topo, table).value;
      for (std::uint32_t v = 0; v < got; ++v) EXPECT_TRUE(before.count(v));
      EXPECT_FALSE(before.count(got));
    }
    for (const auto& [n, a] : table.assignments)
      for (const auto& c : oracle::conflict_set(topo, n)) EXPECT_NE(table.assignments.at(c), a);
  }
}

TEST(Histogram, SingleTable) {
  AddressTable t;
  t.assignments["n1"] = Address{0};
  auto h = address_frequency_histogram({t});
  EXPECT_EQ(h.size(), 1U);
  EXPECT_DOUBLE_EQ(h.at(Address{0}), 1.0);
}

TEST(Histogram, IsolatedNodesAllZero) {
  std::vector<radio::NodePosition> pos;
  for (int i = 0; i < 6; ++i) pos.push_back({"n" + std::to_string(i), i * 1000.0, 0});
  auto h = address_frequency_histogram({assign_all(radio::build_topology({}, pos))});
  EXPECT_EQ(h.size(), 1U);
  EXPECT_DOUBLE_EQ(h.at(Address{0}), 1.0);
}

TEST(Histogram, EmptyInputIsError) { EXPECT_THROW(address_frequency_histogram({}), DomainError); }

TEST(Histogram, LowAddressesDominate) {
  gen::Engine e(11);
  std::vector<AddressTable> tables;
  for (int i = 0; i < 100; ++i) tables.push_back(assign_all(gen::random_topology(e, 20)));
  auto h = address_frequency_histogram(tables);
  double sum = 0;
  for (const auto& [a, f] : h) sum += f;
  EXPECT_NEAR(sum, 1.0, 1e-12);
  EXPECT_GT(h[Address{0}], h[Address{1}]);
  EXPECT_GT(h[Address{1}], h[Address{2}]);
}

TEST(Match, PaperTemperatureExample) { EXPECT_TRUE(match(paper_interest(), paper_data())); }

TEST(Match, EmptyInterestMatchesAnything) {
  EXPECT_TRUE(match({}, paper_data()));
  EXPECT_TRUE(match({}, {}));
}

TEST(Match, WrongTypeFails) {
  AttributeSet interest;
  interest.add("type", "humidity", Op::EQ);
  EXPECT_FALSE(match(interest, paper_data()));
}

TEST(Match, OutsideRangeFails) {
  auto data = parse_attribute_set("type,temperature,IS\nx-coordinate,25,IS\ny-coordinate,10,IS");
  EXPECT_FALSE(match(paper_interest(), data));
}

TEST(Match, OneSided) {
  // The interest's actual attributes are ignored; the data's formal ones too.
  AttributeSet a;
  a.add("type", "temperature", Op::IS);
  AttributeSet b;
  b.add("type", "humidity", Op::EQ);
  EXPECT_TRUE(match(a, b));
  EXPECT_FALSE(match(b, a));
}

TEST(Match, DataFormalsDoNotSatisfy) {
  AttributeSet interest;
  interest.add("x", "5", Op::LT);
  AttributeSet data;
  data.add("x", "1", Op::LT);
  EXPECT_FALSE(match(interest, data));
}

TEST(Match, TypeMismatchNeverMatches) {
  AttributeSet interest;
  interest.add("x", "20", Op::LE);
  AttributeSet data;
  data.add("x", "ten", Op::IS);
  EXPECT_FALSE(match(interest, data));
  EXPECT_FALSE(eval_operator(Op::NE, Scalar("ten"), Scalar("20")));
  EXPECT_FALSE(eval_operator(Op::LT, Scalar("a"), Scalar("b")));
  EXPECT_TRUE(eval_operator(Op::EQ, Scalar("a"), Scalar("a")));
  EXPECT_TRUE(eval_operator(Op::NE, Scalar("a"), Scalar("b")));
}

TEST(Match, MonotoneNarrowing) {
  gen::Engine e(12);
  for (int i = 0; i < 1000; ++i) {
    auto interest = gen::random_attribute_set(e, 4, false);
    auto data = gen::random_attribute_set(e, 5, true);
    const bool before = match(interest, data);
    auto narrower = interest;
    narrower.add("x", std::to_string(static_cast<int>(gen::below(e, 7)) - 3), gen::random_formal_op(e));
    EXPECT_TRUE(before || !match(narrower, data));
  }
}

TEST(Operators, PaperExamples) {
  EXPECT_TRUE(eval_operator(Op::LE, 10, 20));
  EXPECT_TRUE(eval_operator(Op::GE, 0, 0));
  EXPECT_THROW(eval_operator(Op::IS, 1, 1), DomainError);
}

TEST(Operators, TruthTable) {
  // Rows: EQ NE LT GT LE GE. Columns: (actual, formal) over
  // (-1,-1) (-1,0) (-1,1) (0,-1) (0,0) (0,1) (1,-1) (1,0) (1,1).
  const Op ops[] = {Op::EQ, Op::NE, Op::LT, Op::GT, Op::LE, Op::GE};
  const int table[6][9] = {
      {1, 0, 0, 0, 1, 0, 0, 0, 1}, // EQ
      {0, 1, 1, 1, 0, 1, 1, 1, 0}, // NE
      {0, 1, 1, 0, 0, 1, 0, 0, 0}, // LT
      {0, 0, 0, 1, 0, 0, 1, 1, 0}, // GT
      {1, 1, 1, 0, 1, 1, 0, 0, 1}, // LE
      {1, 0, 0, 1, 1, 0, 1, 1, 1}, // GE
  };
  for (int r = 0; r < 6; ++r) {
    int c = 0;
    for (int a = -1; a <= 1; ++a) {
      for (int f = -1; f <= 1; ++f, ++c) {
        EXPECT_EQ(eval_operator(ops[r], a, f), table[r][c] == 1) << to_string(ops[r]) << " " << a << " " << f;
      }
    }
  }
}

TEST(Operators, ComplementaryPairs) {
  gen::Engine e(13);
  for (int i = 0; i < 500; ++i) {
    const double a = gen::uniform(e, -5, 5);
    const double f = (i % 3 == 0) ? a : gen::uniform(e, -5, 5);
    EXPECT_NE(eval_operator(Op::EQ, a, f), eval_operator(Op::NE, a, f));
    EXPECT_NE(eval_operator(Op::LT, a, f), eval_operator(Op::GE, a, f));
    EXPECT_NE(eval_operator(Op::GT, a, f), eval_operator(Op::LE, a, f));
  }
}

TEST(Serialization, RoundTripAndTolerance) {
  auto a = parse_attribute("  < x-coordinate , 20 , LE >  ");
  EXPECT_EQ(a.name, "x-coordinate");
  EXPECT_EQ(a.value.text(), "20");
  EXPECT_EQ(a.op, Op::LE);
  EXPECT_EQ(format_attribute(a), "x-coordinate,20,LE");
  auto set = paper_interest();
  EXPECT_EQ(parse_attribute_set(format_attribute_set(set)), set);
  EXPECT_TRUE(set.attributes[0].formal());
  EXPECT_FALSE(set.attributes[5].formal());
}

TEST(Serialization, Errors) {
  EXPECT_THROW(parse_attribute("type,temperature"), DomainError);
  EXPECT_THROW(parse_attribute("type,temperature,ABOUT"), DomainError);
  EXPECT_THROW(parse_attribute(",1,IS"), DomainError);
}
