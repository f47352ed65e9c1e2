#pragma once

// Scenario files: a flat, sectioned text format.
//
//   name = paper-rekey            (preamble, before any section)
//   seed = 42
//
//   [radio]
//   preset = free_space           (or indoor; later keys override it)
//   rx_sensitivity_mw = 4e-7
//
//   [nodes]
//   sink = S
//   S = 0, 0
//   n1 = 10, 0
//   n1.rx_sensitivity_mw = 1e-6
//
//   [keys]
//   degree = 3
//   group = ((M1 M2 M3)(M4 M5 M6)(M7 M8))   or   group = n1 n2 n3
//   temp.x1 = 2
//   org.x1 = 6
//   auth_mode = nonce             (or nonce-free)
//
//   [adversary]
//   Z = 15, 5
//   Z.class = laptop              (or mote)
//
//   [events]
//   0 = DEPLOY
//   1 = SEND_INTEREST | type,temperature,EQ; x,20,LE
//   2 = SEND_DATA n1 21 | type,temperature,IS; x,10,IS
//
// '#' starts a comment. Problems are collected, never thrown, so validation
// can report all of them at once.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "sentinel/addressing.hpp"
#include "sentinel/errors.hpp"
#include "sentinel/exchange.hpp"
#include "sentinel/keygraph.hpp"
#include "sentinel/pbox.hpp"
#include "sentinel/radio.hpp"

namespace sentinel::sim {

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class EventKind {
  DEPLOY,
  PROVISION,
  VERIFY,
  ROTATE,
  JOIN_GROUP,
  LEAVE_GROUP,
  SEND_INTEREST,
  SEND_DATA,
  COMPROMISE_NODE,
  ADVERSARY_REPLAY
};

inline constexpr EventKind kAllEventKinds[] = {
    EventKind::DEPLOY,          EventKind::PROVISION,   EventKind::VERIFY,        EventKind::ROTATE,
    EventKind::JOIN_GROUP,      EventKind::LEAVE_GROUP, EventKind::SEND_INTEREST, EventKind::SEND_DATA,
    EventKind::COMPROMISE_NODE, EventKind::ADVERSARY_REPLAY};

inline std::string_view to_string(EventKind k) {
  switch (k) {
  case EventKind::DEPLOY: return "DEPLOY";
  case EventKind::PROVISION: return "PROVISION";
  case EventKind::VERIFY: return "VERIFY";
  case EventKind::ROTATE: return "ROTATE";
  case EventKind::JOIN_GROUP: return "JOIN_GROUP";
  case EventKind::LEAVE_GROUP: return "LEAVE_GROUP";
  case EventKind::SEND_INTEREST: return "SEND_INTEREST";
  case EventKind::SEND_DATA: return "SEND_DATA";
  case EventKind::COMPROMISE_NODE: return "COMPROMISE_NODE";
  case EventKind::ADVERSARY_REPLAY: return "ADVERSARY_REPLAY";
  }
  return "?";
}

inline std::optional<EventKind> event_kind_from_string(std::string_view s) {
  for (auto k : kAllEventKinds)
    if (to_string(k) == s) return k;
  return std::nullopt;
}

struct ScenarioEvent {
  std::int64_t tick = 0;
  EventKind kind = EventKind::DEPLOY;
  std::vector<std::string> nodes; // node ids named by the event, in order
  std::string adversary;          // COMPROMISE_NODE, ADVERSARY_REPLAY
  std::optional<std::string> under; // JOIN_GROUP attach point
  std::uint64_t value = 0;          // SEND_DATA reading
  addressing::AttributeSet attributes;
  std::size_t line = 0;
  std::string text;
};

enum class AdversaryClass { MOTE, LAPTOP };

inline std::string_view to_string(AdversaryClass c) { return c == AdversaryClass::MOTE ? "mote" : "laptop"; }

// A laptop-class receiver hears this much weaker signals than a mote.
constexpr double kLaptopSensitivityGain = 100.0;

struct AdversaryConfig {
  std::string id;
  double x_m = 0;
  double y_m = 0;
  AdversaryClass cls = AdversaryClass::MOTE;
  std::optional<double> rx_sensitivity_mw;
};

struct KeyConfig {
  std::size_t degree = 3;
  std::size_t key_bits = kDefaultKeyBits;
  std::size_t code_bits = pbox::kDefaultCodeBits;
  std::size_t nonce_bits = 32;
  exchange::AuthMode auth_mode = exchange::AuthMode::NONCE;
  std::uint64_t modulus = std::uint64_t{1} << 32;
  std::uint64_t max_group_size = std::uint64_t{1} << 16;
  std::optional<std::string> group_shape; // parenthesized shape
  std::vector<std::string> group_members; // flat list, balanced build
  exchange::KeySchedule schedule;
};

struct Scenario {
  std::string name = "scenario";
  std::uint64_t seed = 1;
  radio::RadioParams radio;
  std::string sink;
  std::vector<radio::NodePosition> nodes;
  std::map<std::string, double> rx_overrides;
  KeyConfig keys;
  std::vector<AdversaryConfig> adversaries;
  std::vector<ScenarioEvent> events;
  std::vector<std::string> parse_errors;

  bool has_node(std::string_view id) const {
    return std::any_of(nodes.begin(), nodes.end(), [&](const auto& n) { return n.node_id == id; });
  }
  const AdversaryConfig* adversary(std::string_view id) const {
    for (const auto& a : adversaries)
      if (a.id == id) return &a;
    return nullptr;
  }
};

namespace detail {

inline std::string_view strip(std::string_view s) { return addressing::detail::trim(s); }

inline std::vector<std::string> words(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

template <class T>
std::optional<T> number(std::string_view s) {
  s = strip(s);
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<std::pair<double, double>> coordinates(std::string_view s) {
  const auto comma = s.find(',');
  if (comma == std::string_view::npos) return std::nullopt;
  auto x = number<double>(s.substr(0, comma));
  auto y = number<double>(s.substr(comma + 1));
  if (!x || !y) return std::nullopt;
  return std::pair{*x, *y};
}

inline addressing::AttributeSet attribute_list(std::string_view s) {
  addressing::AttributeSet out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto end = s.find(';', start);
    if (end == std::string_view::npos) end = s.size();
    auto item = strip(s.substr(start, end - start));
    if (!item.empty()) out.attributes.push_back(addressing::parse_attribute(item));
    start = end + 1;
  }
  return out;
}

class Parser {
public:
  explicit Parser(Scenario& s) : s_(s) {}

  void line(std::size_t no, std::string_view raw) {
    no_ = no;
    auto text = raw.substr(0, raw.find('#'));
    text = strip(text);
    if (text.empty()) return;
    if (text.front() == '[') {
      if (text.back() != ']') return error("unterminated section header");
      section_ = std::string(strip(text.substr(1, text.size() - 2)));
      static const std::set<std::string> known{"radio", "nodes", "keys", "adversary", "events"};
      if (!known.count(section_)) error("unknown section [" + section_ + "]");
      return;
    }
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) return error("expected 'key = value'");
    const std::string key(strip(text.substr(0, eq)));
    const std::string_view value = strip(text.substr(eq + 1));
    if (key.empty()) return error("empty key");
    if (section_.empty()) return on_preamble(key, value);
    if (section_ == "radio") return on_radio(key, value);
    if (section_ == "nodes") return on_nodes(key, value);
    if (section_ == "keys") return on_keys(key, value);
    if (section_ == "adversary") return on_adversary(key, value);
    if (section_ == "events") return on_event(key, value, text);
  }

private:
  void error(const std::string& what) { s_.parse_errors.push_back("line " + std::to_string(no_) + ": " + what); }

  template <class T>
  bool set_number(T& field, std::string_view key, std::string_view value) {
    auto v = number<T>(value);
    if (!v) {
      error(std::string(key) + " is not a number: '" + std::string(value) + "'");
      return false;
    }
    field = *v;
    return true;
  }

  void on_preamble(const std::string& key, std::string_view value) {
    if (key == "name") {
      s_.name = std::string(value);
    } else if (key == "seed") {
      set_number(s_.seed, key, value);
    } else {
      error("unknown setting '" + key + "' before any section");
    }
  }

  void on_radio(const std::string& key, std::string_view value) {
    auto& r = s_.radio;
    if (key == "preset") {
      if (value == "free_space") {
        r = radio::free_space_preset();
      } else if (value == "indoor") {
        r = radio::indoor_preset();
      } else {
        error("unknown radio preset '" + std::string(value) + "'");
      }
      return;
    }
    const std::map<std::string, double*> fields{
        {"tx_power_mw", &r.tx_power_mw},       {"gain_tx", &r.gain_tx},
        {"gain_rx", &r.gain_rx},               {"wavelength_m", &r.wavelength_m},
        {"system_loss", &r.system_loss},       {"far_field_m", &r.far_field_m},
        {"path_loss_exponent", &r.path_loss_exponent}, {"rx_sensitivity_mw", &r.rx_sensitivity_mw}};
    auto it = fields.find(key);
    if (it == fields.end()) return error("unknown radio parameter '" + key + "'");
    set_number(*it->second, key, value);
  }

  void on_nodes(const std::string& key, std::string_view value) {
    if (key == "sink") {
      s_.sink = std::string(value);
      return;
    }
    if (auto dot = key.find('.'); dot != std::string::npos) {
      const auto id = key.substr(0, dot);
      if (key.substr(dot + 1) != "rx_sensitivity_mw") return error("unknown node property '" + key + "'");
      double v = 0;
      if (set_number(v, key, value)) s_.rx_overrides[id] = v;
      return;
    }
    auto xy = coordinates(value);
    if (!xy) return error("node " + key + " needs 'x, y' coordinates");
    if (s_.has_node(key)) return error("duplicate node id " + key);
    s_.nodes.push_back({key, xy->first, xy->second});
  }

  void on_keys(const std::string& key, std::string_view value) {
    auto& k = s_.keys;
    if (key.rfind("temp.", 0) == 0) {
      k.schedule.temp_labels[key.substr(5)] = std::string(value);
    } else if (key.rfind("org.", 0) == 0) {
      k.schedule.original_labels[key.substr(4)] = std::string(value);
    } else if (key == "group") {
      if (!value.empty() && value.front() == '(') {
        k.group_shape = std::string(value);
      } else {
        k.group_members = words(value);
      }
    } else if (key == "auth_mode") {
      if (value == "nonce") {
        k.auth_mode = exchange::AuthMode::NONCE;
      } else if (value == "nonce-free") {
        k.auth_mode = exchange::AuthMode::NONCE_FREE;
      } else {
        error("auth_mode must be nonce or nonce-free");
      }
    } else if (key == "degree") {
      set_number(k.degree, key, value);
    } else if (key == "key_bits") {
      set_number(k.key_bits, key, value);
    } else if (key == "code_bits") {
      set_number(k.code_bits, key, value);
    } else if (key == "nonce_bits") {
      set_number(k.nonce_bits, key, value);
    } else if (key == "modulus") {
      set_number(k.modulus, key, value);
    } else if (key == "max_group_size") {
      set_number(k.max_group_size, key, value);
    } else {
      error("unknown key setting '" + key + "'");
    }
  }

  AdversaryConfig* find_adversary(const std::string& id) {
    for (auto& a : s_.adversaries)
      if (a.id == id) return &a;
    return nullptr;
  }

  void on_adversary(const std::string& key, std::string_view value) {
    if (auto dot = key.find('.'); dot != std::string::npos) {
      auto* a = find_adversary(key.substr(0, dot));
      if (!a) return error("property for undeclared adversary " + key.substr(0, dot));
      const auto prop = key.substr(dot + 1);
      if (prop == "class") {
        if (value == "mote") {
          a->cls = AdversaryClass::MOTE;
        } else if (value == "laptop") {
          a->cls = AdversaryClass::LAPTOP;
        } else {
          error("adversary class must be mote or laptop");
        }
      } else if (prop == "rx_sensitivity_mw") {
        double v = 0;
        if (set_number(v, key, value)) a->rx_sensitivity_mw = v;
      } else {
        error("unknown adversary property '" + key + "'");
      }
      return;
    }
    auto xy = coordinates(value);
    if (!xy) return error("adversary " + key + " needs 'x, y' coordinates");
    if (find_adversary(key)) return error("duplicate adversary id " + key);
    s_.adversaries.push_back({key, xy->first, xy->second, AdversaryClass::MOTE, std::nullopt});
  }

  void on_event(const std::string& key, std::string_view value, std::string_view text) {
    ScenarioEvent ev;
    ev.line = no_;
    ev.text = std::string(text);
    auto tick = number<std::int64_t>(key);
    if (!tick || *tick < 0) return error("event tick must be a non-negative integer, got '" + key + "'");
    ev.tick = *tick;

    std::string_view head = value;
    if (auto bar = value.find('|'); bar != std::string_view::npos) {
      head = strip(value.substr(0, bar));
      try {
        ev.attributes = attribute_list(value.substr(bar + 1));
      } catch (const DomainError& e) {
        return error(e.what());
      }
    }
    auto w = words(head);
    if (w.empty()) return error("event has no kind");
    auto kind = event_kind_from_string(w[0]);
    if (!kind) return error("unknown event kind '" + w[0] + "'");
    ev.kind = *kind;
    std::vector<std::string> args(w.begin() + 1, w.end());
    const auto name = std::string(to_string(ev.kind));
    auto arity = [&](std::size_t n) {
      if (args.size() == n) return true;
      error(name + " takes " + std::to_string(n) + " argument(s), got " + std::to_string(args.size()));
      return false;
    };

    switch (ev.kind) {
    case EventKind::DEPLOY:
    case EventKind::PROVISION:
      ev.nodes = args;
      break;
    case EventKind::ROTATE:
    case EventKind::SEND_INTEREST:
      if (!arity(0)) return;
      break;
    case EventKind::VERIFY:
      if (!arity(2)) return;
      ev.nodes = args;
      break;
    case EventKind::JOIN_GROUP:
      if (args.size() == 2 && args[1].rfind("under=", 0) == 0) {
        ev.under = args[1].substr(6);
        args.pop_back();
      }
      if (!arity(1)) return;
      ev.nodes = args;
      break;
    case EventKind::LEAVE_GROUP:
      if (!arity(1)) return;
      ev.nodes = args;
      break;
    case EventKind::SEND_DATA: {
      if (!arity(2)) return;
      auto v = number<std::uint64_t>(args[1]);
      if (!v) return error("SEND_DATA value must be a non-negative integer, got '" + args[1] + "'");
      ev.nodes = {args[0]};
      ev.value = *v;
      break;
    }
    case EventKind::COMPROMISE_NODE:
    case EventKind::ADVERSARY_REPLAY:
      if (!arity(2)) return;
      ev.adversary = args[0];
      ev.nodes = {args[1]};
      break;
    }
    s_.events.push_back(std::move(ev));
  }

  Scenario& s_;
  std::string section_;
  std::size_t no_ = 0;
};

} // namespace detail

inline Scenario parse_scenario(std::string_view text) {
  Scenario s;
  detail::Parser parser(s);
  std::size_t start = 0;
  std::size_t no = 1;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    parser.line(no++, text.substr(start, end - start));
    start = end + 1;
  }
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read scenario file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

inline exchange::ExchangeConfig exchange_config(const Scenario& s) {
  exchange::ExchangeConfig c;
  c.key_bits = s.keys.key_bits;
  c.nonce_bits = s.keys.nonce_bits;
  c.auth_mode = s.keys.auth_mode;
  c.modulus = s.keys.modulus;
  c.max_group_size = s.keys.max_group_size;
  c.code_box = pbox::CompressionPBox::drop_inputs(s.keys.key_bits, s.keys.code_bits);
  return c;
}

// Every violated invariant, parse problems first. Empty means runnable.
inline std::vector<std::string> validate(const Scenario& s) {
  std::vector<std::string> out = s.parse_errors;
  for (const auto& v : s.radio.violations()) out.push_back("radio: " + v);

  if (s.nodes.empty()) out.push_back("no nodes declared");
  if (s.sink.empty()) {
    out.push_back("no sink declared");
  } else if (!s.has_node(s.sink)) {
    out.push_back("sink " + s.sink + " has no position in [nodes]");
  }
  for (const auto& [id, v] : s.rx_overrides) {
    if (!s.has_node(id)) out.push_back("rx_sensitivity_mw set for undeclared node " + id);
    if (!(v > 0)) out.push_back("rx_sensitivity_mw of " + id + " must be > 0");
  }
  for (const auto& a : s.adversaries) {
    if (s.has_node(a.id)) out.push_back("adversary " + a.id + " reuses a node id");
    if (a.rx_sensitivity_mw && !(*a.rx_sensitivity_mw > 0)) {
      out.push_back("rx_sensitivity_mw of adversary " + a.id + " must be > 0");
    }
  }

  const auto& k = s.keys;
  if (k.degree < 2) out.push_back("keys: degree must be >= 2");
  if (k.code_bits == 0 || k.code_bits >= k.key_bits) out.push_back("keys: code_bits must be in [1, key_bits)");
  if (k.nonce_bits == 0) out.push_back("keys: nonce_bits must be > 0");
  if (k.modulus < 2 || k.modulus > (std::uint64_t{1} << 32)) out.push_back("keys: modulus must be in [2, 2^32]");
  if (k.max_group_size < 1 || k.max_group_size > k.modulus) {
    out.push_back("keys: max_group_size must be in [1, modulus]");
  }
  std::vector<std::string> members = k.group_members;
  if (k.group_shape) {
    try {
      keygraph::KeyGraph::Options o;
      o.degree = std::max<std::size_t>(k.degree, 2);
      members = keygraph::KeyGraph::from_shape(keygraph::parse_shape(*k.group_shape), o).members();
    } catch (const std::exception& e) {
      out.push_back(std::string("keys: group shape: ") + e.what());
    }
  }
  for (const auto& m : members) {
    if (!s.has_node(m)) out.push_back("keys: group member " + m + " is not a declared node");
    if (m == s.sink) out.push_back("keys: the sink cannot be a group member");
  }
  std::set<std::string> labels;
  for (const auto* table : {&k.schedule.temp_labels, &k.schedule.original_labels}) {
    for (const auto& [node, label] : *table) {
      if (!s.has_node(node)) out.push_back("keys: label scripted for undeclared node " + node);
      if (!labels.insert(label).second) out.push_back("keys: key label " + label + " scripted twice");
    }
  }

  std::optional<std::int64_t> last;
  for (const auto& ev : s.events) {
    const std::string where = "event at line " + std::to_string(ev.line) + " (" + std::string(to_string(ev.kind)) + ")";
    if (last && ev.tick < *last) {
      out.push_back(where + ": tick " + std::to_string(ev.tick) + " comes after tick " + std::to_string(*last));
    }
    last = last ? std::max(*last, ev.tick) : ev.tick;
    for (const auto& n : ev.nodes) {
      if (!s.has_node(n)) out.push_back(where + ": undeclared node " + n);
    }
    if (!ev.adversary.empty() && !s.adversary(ev.adversary)) {
      out.push_back(where + ": undeclared adversary " + ev.adversary);
    }
    if (!s.sink.empty() && std::find(ev.nodes.begin(), ev.nodes.end(), s.sink) != ev.nodes.end()) {
      out.push_back(where + ": the sink " + s.sink + " cannot be the subject of " + std::string(to_string(ev.kind)));
    }
  }
  return out;
}

} // namespace sentinel::sim
