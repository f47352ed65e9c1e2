#pragma once

// Greedy lowest-free address assignment and content-based attribute matching.

#include <charconv>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sentinel/errors.hpp"
#include "sentinel/radio.hpp"

namespace sentinel::addressing {

struct Address {
  std::uint32_t value = 0;
  auto operator<=>(const Address&) const = default;
};

struct AddressTable {
  std::map<std::string, Address> assignments;
  std::vector<std::string> order;

  std::optional<Address> find(std::string_view node) const {
    auto it = assignments.find(std::string(node));
    if (it == assignments.end()) return std::nullopt;
    return it->second;
  }
};

// Nodes that must not share an address with `node`: direct neighbours in
// either link direction, plus every node that hears a common sender.
inline std::set<std::string> conflict_neighborhood(const radio::Topology& topology, std::string_view node) {
  if (!topology.contains(node)) throw DomainError("unknown node: " + std::string(node));
  std::set<std::string> out;
  for (const auto& m : topology.out_neighbors(node)) out.insert(m);
  for (const auto& m : topology.in_neighbors(node)) {
    out.insert(m);
    for (const auto& sibling : topology.out_neighbors(m)) out.insert(sibling);
  }
  out.erase(std::string(node));
  return out;
}

inline Address assign_address(std::string_view node, const radio::Topology& topology, AddressTable& table) {
  const auto conflicts = conflict_neighborhood(topology, node);
  std::set<std::uint32_t> taken;
  for (const auto& m : conflicts) {
    if (auto a = table.find(m)) taken.insert(a->value);
  }
  std::uint32_t candidate = 0;
  while (taken.count(candidate)) ++candidate;

  const std::string id(node);
  if (!table.assignments.count(id)) table.order.push_back(id);
  table.assignments[id] = Address{candidate};
  return Address{candidate};
}

// Assigns every node of the topology, in position order.
inline AddressTable assign_all(const radio::Topology& topology) {
  AddressTable table;
  for (const auto& p : topology.positions()) assign_address(p.node_id, topology, table);
  return table;
}

inline std::map<Address, double> address_frequency_histogram(const std::vector<AddressTable>& tables) {
  if (tables.empty()) throw DomainError("histogram needs at least one address table");
  std::map<Address, std::size_t> counts;
  std::size_t total = 0;
  for (const auto& t : tables) {
    for (const auto& [node, addr] : t.assignments) {
      ++counts[addr];
      ++total;
    }
  }
  std::map<Address, double> out;
  if (total == 0) return out;
  for (const auto& [addr, c] : counts) out[addr] = static_cast<double>(c) / static_cast<double>(total);
  return out;
}

// ---------------------------------------------------------------------------
// Attribute matching

enum class Op { EQ, NE, LT, GT, LE, GE, IS };

inline std::string_view to_string(Op op) {
  switch (op) {
  case Op::EQ: return "EQ";
  case Op::NE: return "NE";
  case Op::LT: return "LT";
  case Op::GT: return "GT";
  case Op::LE: return "LE";
  case Op::GE: return "GE";
  case Op::IS: return "IS";
  }
  return "?";
}

inline Op op_from_string(std::string_view s) {
  for (Op op : {Op::EQ, Op::NE, Op::LT, Op::GT, Op::LE, Op::GE, Op::IS}) {
    if (to_string(op) == s) return op;
  }
  throw DomainError("unknown attribute operator: " + std::string(s));
}

inline bool is_formal(Op op) { return op != Op::IS; }

// A value that is numeric when its text parses completely as a number.
class Scalar {
public:
  Scalar() = default;
  explicit Scalar(std::string text) : text_(std::move(text)) {
    double v = 0;
    const char* first = text_.data();
    const char* last = first + text_.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (!text_.empty() && ec == std::errc() && ptr == last) number_ = v;
  }
  explicit Scalar(double v) : Scalar(format(v)) {}

  const std::string& text() const { return text_; }
  std::optional<double> number() const { return number_; }
  bool is_number() const { return number_.has_value(); }

  bool operator==(const Scalar& o) const { return text_ == o.text_; }

private:
  static std::string format(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
  }

  std::string text_;
  std::optional<double> number_;
};

struct Attribute {
  std::string name;
  Op op = Op::IS;
  Scalar value;

  bool formal() const { return is_formal(op); }
  bool operator==(const Attribute&) const = default;
};

struct AttributeSet {
  std::vector<Attribute> attributes;

  AttributeSet& add(std::string name, std::string value, Op op) {
    attributes.push_back({std::move(name), op, Scalar(std::move(value))});
    return *this;
  }
  bool operator==(const AttributeSet&) const = default;
};

// Numbers compare numerically; two non-numbers support only EQ/NE; mixed
// kinds never match.
inline bool eval_operator(Op op, const Scalar& actual, const Scalar& formal) {
  if (op == Op::IS) throw DomainError("IS is an actual value, not a comparison");
  if (actual.is_number() && formal.is_number()) {
    const double a = *actual.number();
    const double f = *formal.number();
    switch (op) {
    case Op::EQ: return a == f;
    case Op::NE: return a != f;
    case Op::LT: return a < f;
    case Op::GT: return a > f;
    case Op::LE: return a <= f;
    case Op::GE: return a >= f;
    case Op::IS: break;
    }
    return false;
  }
  if (actual.is_number() || formal.is_number()) return false;
  if (op == Op::EQ) return actual.text() == formal.text();
  if (op == Op::NE) return actual.text() != formal.text();
  return false;
}

inline bool eval_operator(Op op, double actual, double formal) {
  return eval_operator(op, Scalar(actual), Scalar(formal));
}

// One-way match: every formal attribute of the interest must be satisfied by
// some actual attribute of the data message with the same name.
inline bool match(const AttributeSet& interest, const AttributeSet& data) {
  for (const auto& a : interest.attributes) {
    if (!a.formal()) continue;
    bool matched = false;
    for (const auto& b : data.attributes) {
      if (a.name == b.name && !b.formal() && eval_operator(a.op, b.value, a.value)) {
        matched = true;
        break;
      }
    }
    if (!matched) return false;
  }
  return true;
}

namespace detail {
inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}
} // namespace detail

// Parses "name,value,OP"; surrounding angle brackets and whitespace are ignored.
inline Attribute parse_attribute(std::string_view line) {
  auto s = detail::trim(line);
  if (!s.empty() && s.front() == '<') s.remove_prefix(1);
  if (!s.empty() && s.back() == '>') s.remove_suffix(1);
  const auto c1 = s.find(',');
  const auto c2 = s.rfind(',');
  if (c1 == std::string_view::npos || c1 == c2) {
    throw DomainError("attribute must have the form name,value,OP: '" + std::string(line) + "'");
  }
  Attribute a;
  a.name = std::string(detail::trim(s.substr(0, c1)));
  a.value = Scalar(std::string(detail::trim(s.substr(c1 + 1, c2 - c1 - 1))));
  a.op = op_from_string(detail::trim(s.substr(c2 + 1)));
  if (a.name.empty()) throw DomainError("attribute name is empty: '" + std::string(line) + "'");
  return a;
}

inline std::string format_attribute(const Attribute& a) {
  return a.name + "," + a.value.text() + "," + std::string(to_string(a.op));
}

// One attribute per line; blank lines are skipped.
inline AttributeSet parse_attribute_set(std::string_view text) {
  AttributeSet out;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = detail::trim(text.substr(start, end - start));
    if (!line.empty()) out.attributes.push_back(parse_attribute(line));
    start = end + 1;
  }
  return out;
}

inline std::string format_attribute_set(const AttributeSet& set) {
  std::string out;
  for (const auto& a : set.attributes) out += format_attribute(a) + "\n";
  return out;
}

} // namespace sentinel::addressing
