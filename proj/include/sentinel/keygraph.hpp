#pragma once

// Key graphs for group rekeying.
//
// A KeyGraph is a rooted tree: each member owns a leaf (its individual key,
// shared only with the controller), internal nodes carry subgroup keys and the
// root carries the group key. A member holds exactly the keys on its
// leaf-to-root path. join() and leave() replace every key on the affected path
// and emit the rekey messages needed to deliver the replacements, each
// encrypted under a key its recipients already hold.
//
// Key labels follow the member tags ("M7" -> "7"): leaves are "k7", subgroups
// concatenate their members' tags ("k789") and the group key spans the first
// and last member ("k1-9"). A label reused after a membership change gets the
// next version number.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "sentinel/bits.hpp"
#include "sentinel/closure.hpp"
#include "sentinel/crypto.hpp"
#include "sentinel/errors.hpp"
#include "sentinel/key.hpp"
#include "sentinel/seal.hpp"

namespace sentinel::keygraph {

struct RekeyMessage {
  std::vector<std::string> recipients;
  std::vector<Key> payload;
  Key encrypting_key;
  Bits ciphertext;

  std::vector<std::string> payload_labels() const {
    std::vector<std::string> out;
    for (const auto& k : payload) out.push_back(k.id);
    return out;
  }
};

// Recovers payload key material with the given key; garbage if it is the wrong key.
inline std::vector<Bits> open_payload(const RekeyMessage& msg, const Key& key) {
  std::vector<Bits> out;
  for (auto& k : open_keys(msg.ciphertext, msg.payload, key)) out.push_back(std::move(k.material));
  return out;
}

// Explicit tree shape: a leaf names a member, an internal node lists children.
struct ShapeNode {
  std::string member;
  std::vector<ShapeNode> children;

  bool is_leaf() const { return !member.empty(); }
};

// Parses "((M1 M2 M3)(M4 M5 M6)(M7 M8))".
inline ShapeNode parse_shape(std::string_view text) {
  std::size_t pos = 0;
  auto skip_ws = [&] {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  };
  auto parse_node = [&](auto&& self) -> ShapeNode {
    skip_ws();
    if (pos >= text.size()) throw DomainError("unexpected end of group shape");
    if (text[pos] == '(') {
      ++pos;
      ShapeNode node;
      while (true) {
        skip_ws();
        if (pos >= text.size()) throw DomainError("unbalanced '(' in group shape");
        if (text[pos] == ')') {
          ++pos;
          break;
        }
        node.children.push_back(self(self));
      }
      if (node.children.empty()) throw DomainError("empty subgroup in group shape");
      return node;
    }
    std::size_t start = pos;
    while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos])) && text[pos] != '(' &&
           text[pos] != ')')
      ++pos;
    if (start == pos) throw DomainError("unexpected ')' in group shape");
    return ShapeNode{std::string(text.substr(start, pos - start)), {}};
  };
  ShapeNode root = parse_node(parse_node);
  skip_ws();
  if (pos != text.size()) throw DomainError("trailing characters after group shape");
  if (root.is_leaf()) throw DomainError("group shape root must be a subgroup");
  return root;
}

// Short tag of a member id: the digits of "M12" or "n12", otherwise the id.
inline std::string member_tag(std::string_view member) {
  std::size_t i = 0;
  while (i < member.size() && std::isalpha(static_cast<unsigned char>(member[i]))) ++i;
  if (i > 0 && i < member.size() &&
      std::all_of(member.begin() + static_cast<std::ptrdiff_t>(i), member.end(),
                  [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
    return std::string(member.substr(i));
  return std::string(member);
}

// General member-key relation (M, N, R), not necessarily a tree.
class KeyRelation {
public:
  void add(const std::string& member, const std::string& key_id) {
    by_member_[member].insert(key_id);
    by_key_[key_id].insert(member);
  }

  std::set<std::string> keyset(const std::string& member) const {
    auto it = by_member_.find(member);
    if (it == by_member_.end()) throw DomainError("unknown member: " + member);
    return it->second;
  }

  // Union over a set of members; the empty set holds no keys.
  std::set<std::string> keyset(const std::set<std::string>& members) const {
    std::set<std::string> out;
    for (const auto& m : members) {
      auto ks = keyset(m);
      out.insert(ks.begin(), ks.end());
    }
    return out;
  }

  std::set<std::string> userset(const std::string& key_id) const {
    auto it = by_key_.find(key_id);
    if (it == by_key_.end()) throw DomainError("unknown key: " + key_id);
    return it->second;
  }

  std::set<std::string> members() const {
    std::set<std::string> out;
    for (const auto& [m, _] : by_member_) out.insert(m);
    return out;
  }

  std::set<std::string> keys() const {
    std::set<std::string> out;
    for (const auto& [k, _] : by_key_) out.insert(k);
    return out;
  }

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& [_, ks] : by_member_) n += ks.size();
    return n;
  }

private:
  std::map<std::string, std::set<std::string>> by_member_;
  std::map<std::string, std::set<std::string>> by_key_;
};

class KeyGraph {
public:
  struct Options {
    std::size_t degree = 3;
    std::size_t key_bits = kDefaultKeyBits;
    std::uint64_t seed = 0x5E17A1ULL;
  };

  // Balanced tree: members are split into `degree` contiguous chunks (earlier
  // chunks one larger when uneven) until each chunk is a single member.
  static KeyGraph build(const std::vector<std::string>& members, Options options) {
    check_members(members);
    check_degree(options.degree);
    KeyGraph g(options);
    g.root_ = g.new_node(-1, "");
    if (members.size() == 1) {
      g.add_leaf(g.root_, members.front());
    } else {
      g.build_chunks(g.root_, members, 0, members.size());
    }
    g.rekey_subtree(g.root_);
    return g;
  }

  static KeyGraph build(const std::vector<std::string>& members, std::size_t degree) {
    Options o;
    o.degree = degree;
    return build(members, o);
  }

  static KeyGraph from_shape(const ShapeNode& shape, Options options) {
    check_degree(options.degree);
    if (shape.is_leaf()) throw DomainError("group shape root must be a subgroup");
    std::vector<std::string> members;
    collect_members(shape, members);
    check_members(members);
    KeyGraph g(options);
    g.root_ = g.new_node(-1, "");
    g.build_shape(g.root_, shape, true);
    g.rekey_subtree(g.root_);
    return g;
  }

  std::size_t degree() const { return options_.degree; }
  std::size_t key_bits() const { return options_.key_bits; }

  // Members in left-to-right leaf order.
  std::vector<std::string> members() const { return members_under(root_); }

  bool contains(std::string_view member) const { return leaf_of_.count(std::string(member)) > 0; }

  const Key& group_key() const { return nodes_.at(root_).key; }

  const Key& key(std::string_view label) const { return nodes_.at(node_of_label(label)).key; }

  bool has_key(std::string_view label) const { return label_of_.count(std::string(label)) > 0; }

  // Keys on the member's path, leaf first.
  std::vector<Key> path_keys(std::string_view member) const {
    std::vector<Key> out;
    for (int n = leaf(member); n != -1; n = nodes_.at(n).parent) out.push_back(nodes_.at(n).key);
    return out;
  }

  std::set<std::string> keyset(std::string_view member) const {
    std::set<std::string> out;
    for (const auto& k : path_keys(member)) out.insert(k.id);
    return out;
  }

  std::set<KeyRef> keyset_refs(std::string_view member) const {
    std::set<KeyRef> out;
    for (const auto& k : path_keys(member)) out.insert(k.ref());
    return out;
  }

  std::set<std::string> userset(std::string_view key_label) const {
    const auto ms = members_under(node_of_label(key_label));
    return {ms.begin(), ms.end()};
  }

  // Depth of the member's leaf below the root.
  std::size_t depth(std::string_view member) const { return path_keys(member).size() - 1; }

  std::vector<Key> keys() const {
    std::vector<Key> out;
    for (const auto& [id, node] : nodes_) out.push_back(node.key);
    return out;
  }

  KeyRelation relation() const {
    KeyRelation r;
    for (const auto& m : members())
      for (const auto& k : path_keys(m)) r.add(m, k.id);
    return r;
  }

  // Label of the subgroup a new member would join without an explicit choice:
  // the shallowest internal node with spare capacity (left-most on ties), or
  // failing that the shallowest leaf, which is split.
  std::string default_attach_point() const {
    std::deque<int> queue{root_};
    std::optional<int> first_leaf;
    while (!queue.empty()) {
      int n = queue.front();
      queue.pop_front();
      const Node& node = nodes_.at(n);
      if (node.is_leaf()) {
        if (!first_leaf) first_leaf = n;
        continue;
      }
      if (node.children.size() < options_.degree) return node.key.id;
      for (int c : node.children) queue.push_back(c);
    }
    return nodes_.at(*first_leaf).key.id;
  }

  std::vector<RekeyMessage> join_in_place(const std::string& member,
                                          const std::optional<std::string>& attach_under = std::nullopt) {
    if (member.empty()) throw DomainError("member id is empty");
    if (contains(member)) throw DomainError("member already in group: " + member);
    const std::string attach_label = attach_under.value_or(default_attach_point());
    const int attach = node_of_label(attach_label);

    std::vector<int> path;
    std::vector<Key> old_keys;
    int joiner_leaf = -1;
    if (nodes_.at(attach).is_leaf()) {
      // Split: a fresh subgroup takes the incumbent leaf's place.
      const int incumbent = attach;
      const int parent = nodes_.at(incumbent).parent;
      const int split = new_node(parent, "");
      auto& siblings = nodes_.at(parent).children;
      *std::find(siblings.begin(), siblings.end(), incumbent) = split;
      nodes_.at(incumbent).parent = split;
      nodes_.at(split).children.push_back(incumbent);
      joiner_leaf = add_leaf(split, member);
      path.push_back(split);
      old_keys.push_back(nodes_.at(incumbent).key);
      for (int n = parent; n != -1; n = nodes_.at(n).parent) {
        path.push_back(n);
        old_keys.push_back(nodes_.at(n).key);
      }
    } else {
      if (nodes_.at(attach).children.size() >= options_.degree) {
        throw DomainError("subgroup " + attach_label + " has no capacity under degree " +
                          std::to_string(options_.degree));
      }
      for (int n = attach; n != -1; n = nodes_.at(n).parent) {
        path.push_back(n);
        old_keys.push_back(nodes_.at(n).key);
      }
      joiner_leaf = add_leaf(attach, member);
    }

    assign_key(joiner_leaf);
    for (int n : path) retire_label(n);
    for (int n : path) assign_key(n);

    std::vector<RekeyMessage> out;
    for (std::size_t i = path.size(); i-- > 0;) {
      std::set<std::string> below;
      if (i > 0) {
        const auto b = members_under(path[i - 1]);
        below.insert(b.begin(), b.end());
      }
      std::vector<std::string> recipients;
      for (const auto& m : members_under(path[i]))
        if (m != member && !below.count(m)) recipients.push_back(m);
      if (recipients.empty()) continue;
      out.push_back(make_message(std::move(recipients), new_keys_from_root(path, i), old_keys[i]));
    }
    out.push_back(make_message({member}, new_keys_from_root(path, 0), nodes_.at(joiner_leaf).key));
    return out;
  }

  std::vector<RekeyMessage> leave_in_place(const std::string& member) {
    const int gone = leaf(member);
    if (leaf_of_.size() == 1) throw DomainError("the last member cannot leave the group");

    int p = nodes_.at(gone).parent;
    auto& siblings = nodes_.at(p).children;
    siblings.erase(std::find(siblings.begin(), siblings.end(), gone));
    label_of_.erase(nodes_.at(gone).key.id);
    nodes_.erase(gone);
    leaf_of_.erase(member);

    if (p != root_ && nodes_.at(p).children.size() == 1) {
      // Collapse the single-child subgroup into its parent.
      const int only = nodes_.at(p).children.front();
      const int pp = nodes_.at(p).parent;
      auto& up = nodes_.at(pp).children;
      *std::find(up.begin(), up.end(), p) = only;
      nodes_.at(only).parent = pp;
      label_of_.erase(nodes_.at(p).key.id);
      nodes_.erase(p);
      p = pp;
    }

    std::vector<int> path;
    for (int n = p; n != -1; n = nodes_.at(n).parent) path.push_back(n);
    for (int n : path) retire_label(n);
    for (int n : path) assign_key(n);

    std::vector<RekeyMessage> out;
    for (std::size_t i = path.size(); i-- > 0;) {
      const int on_path = i > 0 ? path[i - 1] : -1;
      for (int c : nodes_.at(path[i]).children) {
        if (c == on_path) continue;
        out.push_back(make_message(members_under(c), new_keys_from_root(path, i), nodes_.at(c).key));
      }
    }
    return out;
  }

private:
  struct Node {
    std::string member; // non-empty for leaves
    Key key;
    int parent = -1;
    std::vector<int> children;

    bool is_leaf() const { return !member.empty(); }
  };

  explicit KeyGraph(Options options) : options_(options), rng_(options.seed) {}

  static void check_degree(std::size_t degree) {
    if (degree < 2) throw DomainError("key tree degree must be >= 2");
  }

  static void check_members(const std::vector<std::string>& members) {
    if (members.empty()) throw DomainError("group needs at least one member");
    std::set<std::string> seen;
    for (const auto& m : members) {
      if (m.empty()) throw DomainError("member id is empty");
      if (!seen.insert(m).second) throw DomainError("duplicate member id: " + m);
    }
  }

  static void collect_members(const ShapeNode& s, std::vector<std::string>& out) {
    if (s.is_leaf()) {
      out.push_back(s.member);
      return;
    }
    for (const auto& c : s.children) collect_members(c, out);
  }

  int new_node(int parent, std::string member) {
    const int id = next_id_++;
    Node n;
    n.member = std::move(member);
    n.parent = parent;
    nodes_.emplace(id, std::move(n));
    return id;
  }

  int add_leaf(int parent, const std::string& member) {
    const int id = new_node(parent, member);
    nodes_.at(parent).children.push_back(id);
    leaf_of_[member] = id;
    return id;
  }

  void build_chunks(int parent, const std::vector<std::string>& members, std::size_t lo, std::size_t hi) {
    const std::size_t n = hi - lo;
    const std::size_t parts = std::min(options_.degree, n);
    const std::size_t base = n / parts;
    const std::size_t extra = n % parts;
    std::size_t at = lo;
    for (std::size_t i = 0; i < parts; ++i) {
      const std::size_t len = base + (i < extra ? 1 : 0);
      if (len == 1) {
        add_leaf(parent, members[at]);
      } else {
        const int sub = new_node(parent, "");
        nodes_.at(parent).children.push_back(sub);
        build_chunks(sub, members, at, at + len);
      }
      at += len;
    }
  }

  void build_shape(int node, const ShapeNode& shape, bool is_root) {
    if (shape.children.size() > options_.degree) {
      throw DomainError("subgroup has more children than the tree degree allows");
    }
    if (!is_root && shape.children.size() < 2) throw DomainError("non-root subgroup needs at least two children");
    for (const auto& c : shape.children) {
      if (c.is_leaf()) {
        add_leaf(node, c.member);
      } else {
        const int sub = new_node(node, "");
        nodes_.at(node).children.push_back(sub);
        build_shape(sub, c, false);
      }
    }
  }

  // Depth-first, children before parents.
  void rekey_subtree(int n) {
    for (int c : nodes_.at(n).children) rekey_subtree(c);
    assign_key(n);
  }

  std::vector<std::string> members_under(int n) const {
    std::vector<std::string> out;
    collect(n, out);
    return out;
  }

  void collect(int n, std::vector<std::string>& out) const {
    const Node& node = nodes_.at(n);
    if (node.is_leaf()) {
      out.push_back(node.member);
      return;
    }
    for (int c : node.children) collect(c, out);
  }

  bool multi_char_tags() const {
    for (const auto& [m, _] : leaf_of_)
      if (member_tag(m).size() > 1) return true;
    return false;
  }

  std::string label_for(int n) const {
    const Node& node = nodes_.at(n);
    if (node.is_leaf()) return "k" + member_tag(node.member);
    const auto ms = members_under(n);
    if (n == root_) {
      // Range from the lowest to the highest tag; digit tags compare numerically.
      std::vector<std::string> tags;
      for (const auto& m : ms) tags.push_back(member_tag(m));
      auto by_value = [](const std::string& a, const std::string& b) {
        return std::pair(a.size(), a) < std::pair(b.size(), b);
      };
      const auto [lo, hi] = std::minmax_element(tags.begin(), tags.end(), by_value);
      return "k" + *lo + "-" + *hi;
    }
    const bool dotted = multi_char_tags();
    std::string label = "k";
    for (std::size_t i = 0; i < ms.size(); ++i) {
      if (dotted && i > 0) label += '.';
      label += member_tag(ms[i]);
    }
    return label;
  }

  void retire_label(int n) {
    auto it = label_of_.find(nodes_.at(n).key.id);
    if (it != label_of_.end() && it->second == n) label_of_.erase(it);
  }

  void assign_key(int n) {
    std::string label = label_for(n);
    if (label_of_.count(label)) label += "#" + std::to_string(n);
    const int version = next_version_[label]++;
    nodes_.at(n).key = make_key(label, version, rng_, options_.key_bits);
    label_of_[label] = n;
  }

  int node_of_label(std::string_view label) const {
    auto it = label_of_.find(std::string(label));
    if (it == label_of_.end()) throw DomainError("unknown key: " + std::string(label));
    return it->second;
  }

  int leaf(std::string_view member) const {
    auto it = leaf_of_.find(std::string(member));
    if (it == leaf_of_.end()) throw DomainError("unknown member: " + std::string(member));
    return it->second;
  }

  // Current keys of path[i..], root first.
  std::vector<Key> new_keys_from_root(const std::vector<int>& path, std::size_t i) const {
    std::vector<Key> out;
    for (std::size_t j = path.size(); j-- > i;) out.push_back(nodes_.at(path[j]).key);
    return out;
  }

  static RekeyMessage make_message(std::vector<std::string> recipients, std::vector<Key> payload, Key enc) {
    RekeyMessage m;
    m.recipients = std::move(recipients);
    m.ciphertext = seal_keys(enc, payload);
    m.payload = std::move(payload);
    m.encrypting_key = std::move(enc);
    return m;
  }

  Options options_;
  Rng rng_;
  std::map<int, Node> nodes_;
  int root_ = -1;
  int next_id_ = 0;
  std::map<std::string, int> leaf_of_;
  std::map<std::string, int> label_of_;
  std::map<std::string, int> next_version_;
};

struct RekeyResult {
  KeyGraph graph;
  std::vector<RekeyMessage> messages;
};

inline KeyGraph build_group(const std::vector<std::string>& member_ids, std::size_t degree) {
  return KeyGraph::build(member_ids, degree);
}

inline RekeyResult join(const KeyGraph& graph, const std::string& new_member,
                        const std::optional<std::string>& attach_under = std::nullopt) {
  KeyGraph next = graph;
  auto msgs = next.join_in_place(new_member, attach_under);
  return {std::move(next), std::move(msgs)};
}

inline RekeyResult leave(const KeyGraph& graph, const std::string& departing_member) {
  KeyGraph next = graph;
  auto msgs = next.leave_in_place(departing_member);
  return {std::move(next), std::move(msgs)};
}

inline std::set<std::string> keyset(const KeyGraph& g, std::string_view member) { return g.keyset(member); }
inline std::set<std::string> userset(const KeyGraph& g, std::string_view key) { return g.userset(key); }
inline std::set<std::string> keyset(const KeyRelation& r, const std::string& member) { return r.keyset(member); }
inline std::set<std::string> userset(const KeyRelation& r, const std::string& key) { return r.userset(key); }

struct MemberView {
  std::string member_id;
  std::set<KeyRef> known_keys;
  std::vector<RekeyMessage> transcript;
};

inline std::set<KeyRef> member_closure(const MemberView& view) {
  return key_closure(view.known_keys, view.transcript);
}

// ---------------------------------------------------------------------------
// Text trace: "C -> {M7,M8} : {k1-9,k789} k78", one message per line.

struct TraceLine {
  std::string sender;
  std::vector<std::string> recipients;
  std::vector<std::string> payload;
  std::string key;

  bool operator==(const TraceLine&) const = default;
};

inline std::string join_list(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ',';
    out += items[i];
  }
  return out;
}

inline std::string format_trace_line(const TraceLine& line) {
  std::string to = line.recipients.size() == 1 ? line.recipients.front() : "{" + join_list(line.recipients) + "}";
  return line.sender + " -> " + to + " : {" + join_list(line.payload) + "} " + line.key;
}

inline TraceLine to_trace_line(const RekeyMessage& m, const std::string& sender = "C") {
  return {sender, m.recipients, m.payload_labels(), m.encrypting_key.id};
}

inline std::string format_trace(const std::vector<RekeyMessage>& messages, const std::string& sender = "C") {
  std::string out;
  for (const auto& m : messages) out += format_trace_line(to_trace_line(m, sender)) + "\n";
  return out;
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  if (s.empty()) return out;
  std::size_t start = 0;
  while (true) {
    auto c = s.find(',', start);
    out.emplace_back(s.substr(start, c == std::string_view::npos ? std::string_view::npos : c - start));
    if (out.back().empty()) throw DomainError("empty item in trace list");
    if (c == std::string_view::npos) break;
    start = c + 1;
  }
  return out;
}

inline TraceLine parse_trace_line(std::string_view raw) {
  std::string s;
  for (char c : raw)
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  const auto bad = [&](const char* why) { return DomainError(std::string(why) + ": '" + std::string(raw) + "'"); };

  const auto arrow = s.find("->");
  if (arrow == std::string::npos || arrow == 0) throw bad("trace line lacks 'sender ->'");
  TraceLine line;
  line.sender = s.substr(0, arrow);
  std::string_view rest(s);
  rest.remove_prefix(arrow + 2);
  const auto colon = rest.find(':');
  if (colon == std::string_view::npos) throw bad("trace line lacks ':'");
  auto to = rest.substr(0, colon);
  if (!to.empty() && to.front() == '{') {
    if (to.back() != '}') throw bad("unbalanced recipient braces");
    line.recipients = split_list(to.substr(1, to.size() - 2));
  } else {
    if (to.empty()) throw bad("missing recipients");
    line.recipients = {std::string(to)};
  }
  rest.remove_prefix(colon + 1);
  if (rest.empty() || rest.front() != '{') throw bad("payload must be braced");
  const auto close = rest.find('}');
  if (close == std::string_view::npos) throw bad("unbalanced payload braces");
  line.payload = split_list(rest.substr(1, close - 1));
  line.key = std::string(rest.substr(close + 1));
  if (line.key.empty()) throw bad("missing encrypting key");
  return line;
}

inline std::vector<TraceLine> parse_trace(std::string_view text) {
  std::vector<TraceLine> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(parse_trace_line(line));
  }
  return out;
}

} // namespace sentinel::keygraph
