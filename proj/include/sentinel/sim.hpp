#pragma once

// Deterministic event-driven harness. A run is a pure function of the
// scenario and the seed: every random draw comes from engines seeded from it
// and every iteration order is by identifier.
//
// Harness model:
//   - key frames (provision, rotate) travel hop by hop from the sink along
//     the minimum-hop route; challenge and response frames do the same
//   - group rekey messages and interests are flooded, so every adversary
//     records every rekey message
//   - an adversary records a frame when it hears any transmitter on the
//     frame's route, or when a node it compromised is on the route
//   - data whose route relays through a compromised node is intercepted

#include <algorithm>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "sentinel/addressing.hpp"
#include "sentinel/closure.hpp"
#include "sentinel/crypto.hpp"
#include "sentinel/errors.hpp"
#include "sentinel/exchange.hpp"
#include "sentinel/keygraph.hpp"
#include "sentinel/radio.hpp"
#include "sentinel/scenario.hpp"
#include "sentinel/seal.hpp"

namespace sentinel::sim {

using Path = std::vector<std::string>;

// Minimum-hop directed path. Among next hops that stay on a shortest path the
// one with the smallest (address, id) wins; without a table, smallest id.
inline std::optional<Path> route(const radio::Topology& topology, std::string_view from, std::string_view to,
                                 const addressing::AddressTable* addresses = nullptr) {
  for (auto id : {from, to}) {
    if (!topology.contains(id)) throw DomainError("unknown node: " + std::string(id));
  }
  std::map<std::string, std::size_t> hops_to_target{{std::string(to), 0}};
  std::deque<std::string> queue{std::string(to)};
  while (!queue.empty()) {
    const auto u = queue.front();
    queue.pop_front();
    for (const auto& v : topology.in_neighbors(u)) {
      if (hops_to_target.emplace(v, hops_to_target[u] + 1).second) queue.push_back(v);
    }
  }
  if (!hops_to_target.count(std::string(from))) return std::nullopt;

  auto address = [&](const std::string& id) -> std::uint32_t {
    if (!addresses) return 0;
    auto a = addresses->find(id);
    return a ? a->value : std::numeric_limits<std::uint32_t>::max();
  };
  Path path{std::string(from)};
  while (path.back() != to) {
    const auto& cur = path.back();
    const std::size_t want = hops_to_target.at(cur) - 1;
    std::optional<std::pair<std::uint32_t, std::string>> best;
    for (const auto& v : topology.out_neighbors(cur)) {
      auto it = hops_to_target.find(v);
      if (it == hops_to_target.end() || it->second != want) continue;
      std::pair<std::uint32_t, std::string> rank{address(v), v};
      if (!best || rank < *best) best = rank;
    }
    path.push_back(best->second);
  }
  return path;
}

struct RekeyRecord {
  std::int64_t tick = 0;
  std::string kind; // JOIN or LEAVE
  std::string member;
  std::size_t messages = 0;
};

struct VerifyRecord {
  std::int64_t tick = 0;
  std::string a;
  std::string b;
  bool ok = false;
};

struct ReplayRecord {
  std::int64_t tick = 0;
  std::string adversary;
  std::string victim;
  exchange::AuthMode mode = exchange::AuthMode::NONCE;
  bool accepted = false;
};

struct EpochAggregate {
  std::uint64_t epoch = 0;
  std::size_t readings = 0;
  std::uint64_t plaintext_sum = 0;
  std::uint64_t decrypted_sum = 0;
};

struct EventRecord {
  std::int64_t tick = 0;
  std::string kind;
  std::string text;
  std::size_t first_line = 0; // index into RunReport::transcript
  std::size_t line_count = 0;
  std::string status = "ok";
};

struct RunReport {
  std::string scenario;
  std::uint64_t seed = 0;

  std::size_t interests_sent = 0;
  std::size_t interest_deliveries = 0;
  std::size_t data_sent = 0;
  std::size_t delivered = 0;
  std::size_t dropped_no_route = 0;
  std::size_t dropped_no_match = 0;
  std::size_t intercepted = 0;
  double delivery_ratio = 0;

  std::vector<RekeyRecord> rekeys;
  std::size_t compromised_reads = 0;
  std::map<std::string, std::uint32_t> addresses;
  std::map<std::uint32_t, std::size_t> address_histogram;
  std::vector<EpochAggregate> aggregates;
  std::vector<VerifyRecord> verifications;
  std::vector<ReplayRecord> replays;
  std::map<std::string, std::string> node_states;
  std::map<std::string, std::string> compromised; // node -> adversary
  std::map<std::string, std::set<std::string>> adversary_neighbors;
  std::vector<radio::Link> links;
  std::vector<std::string> errors;
  std::vector<std::string> transcript;
  std::vector<EventRecord> events;

  // Every sent data message lands in exactly one bucket.
  bool conserved() const { return delivered + dropped_no_route + dropped_no_match + intercepted == data_sent; }
};

class Simulator {
public:
  explicit Simulator(Scenario scenario, std::optional<std::uint64_t> seed = std::nullopt)
      : scenario_(std::move(scenario)), seed_(seed.value_or(scenario_.seed)) {
    if (auto v = validate(scenario_); !v.empty()) {
      std::string all;
      for (const auto& s : v) all += (all.empty() ? "" : "; ") + s;
      throw ConfigError("scenario is invalid: " + all);
    }
    std::vector<radio::NodePosition> everyone = scenario_.nodes;
    auto rx = scenario_.rx_overrides;
    std::set<std::string> adversary_ids;
    for (const auto& a : scenario_.adversaries) {
      everyone.push_back({a.id, a.x_m, a.y_m});
      const double base = scenario_.radio.rx_sensitivity_mw;
      rx[a.id] = a.rx_sensitivity_mw.value_or(a.cls == AdversaryClass::LAPTOP ? base / kLaptopSensitivityGain : base);
      adversary_ids.insert(a.id);
    }
    air_ = radio::build_topology(scenario_.radio, everyone, rx);
    net_ = air_.without(adversary_ids);
  }

  const Scenario& scenario() const { return scenario_; }
  std::uint64_t seed() const { return seed_; }
  const radio::Topology& network() const { return net_; }
  const radio::Topology& air() const { return air_; }

  RunReport run() {
    reset();
    RunReport r;
    r.scenario = scenario_.name;
    r.seed = seed_;
    for (const auto& [id, a] : addresses_.assignments) {
      r.addresses[id] = a.value;
      ++r.address_histogram[a.value];
    }

    auto events = scenario_.events;
    std::stable_sort(events.begin(), events.end(), [](const auto& a, const auto& b) { return a.tick < b.tick; });
    for (const auto& ev : events) {
      EventRecord rec{ev.tick, std::string(to_string(ev.kind)), ev.text, r.transcript.size(), 0, "ok"};
      current_ = &rec;
      report_ = &r;
      try {
        dispatch(ev);
      } catch (const std::exception& e) {
        fail(e.what());
      }
      rec.line_count = r.transcript.size() - rec.first_line;
      r.events.push_back(std::move(rec));
    }
    current_ = nullptr;
    finish(r);
    report_ = nullptr;
    return r;
  }

  // Every key version `party` can derive: its own keys plus whatever the
  // traffic it observed opens. The sink knows everything it issued.
  std::set<KeyRef> closure_of(std::string_view party) const {
    const std::string id(party);
    if (id == scenario_.sink) {
      std::set<KeyRef> all{sink_.own_key().ref()};
      for (const auto& m : key_messages_) {
        all.insert(m.encrypting_key.ref());
        for (const auto& k : m.payload) all.insert(k.ref());
      }
      for (const auto& [node, ident] : sink_.registry()) all.insert(ident.temp_key.ref());
      for (const auto& [node, keys] : initial_keys_) all.insert(keys.begin(), keys.end());
      return all;
    }
    if (scenario_.adversary(id)) {
      std::vector<exchange::ProtocolMessage> seen;
      if (auto it = overheard_.find(id); it != overheard_.end())
        for (auto idx : it->second) seen.push_back(key_messages_[idx]);
      auto base = stolen_.count(id) ? stolen_.at(id) : std::set<KeyRef>{};
      return key_closure(std::move(base), seen);
    }
    if (!scenario_.has_node(id)) throw DomainError("unknown party: " + id);
    auto base = initial_keys_.count(id) ? initial_keys_.at(id) : std::set<KeyRef>{};
    return key_closure(std::move(base), key_messages_);
  }

  // Every key-carrying frame of the last run, in emission order.
  const std::vector<exchange::ProtocolMessage>& key_messages() const { return key_messages_; }
  // Indices into key_messages() recorded by each adversary.
  const std::map<std::string, std::vector<std::size_t>>& overheard() const { return overheard_; }
  const std::map<std::string, std::set<KeyRef>>& stolen_keys() const { return stolen_; }
  const std::map<std::string, std::set<KeyRef>>& initial_keys() const { return initial_keys_; }
  const std::optional<keygraph::KeyGraph>& group() const { return group_; }
  const exchange::SinkState& sink() const { return sink_; }

  struct DataFrame {
    std::string producer;
    KeyRef key;
    std::set<std::string> heard_by;
  };
  const std::vector<DataFrame>& data_frames() const { return data_frames_; }

private:
  struct DeliveredReading {
    exchange::EncryptedReading reading;
    std::uint64_t value = 0;
  };

  void reset() {
    const auto cfg = exchange_config(scenario_);
    sink_ = exchange::SinkState(scenario_.sink, cfg, crypto::splitmix64(seed_ ^ 0x51A4ULL), scenario_.keys.schedule);
    replay_rng_ = Rng(crypto::splitmix64(seed_ ^ 0x2E91A7ULL));
    nodes_.clear();
    interests_.clear();
    key_messages_.clear();
    overheard_.clear();
    auth_heard_.clear();
    stolen_.clear();
    compromised_.clear();
    initial_keys_.clear();
    data_frames_.clear();
    delivered_.clear();
    group_.reset();
    addresses_ = addressing::assign_all(net_);

    keygraph::KeyGraph::Options opts;
    opts.degree = scenario_.keys.degree;
    opts.key_bits = scenario_.keys.key_bits;
    opts.seed = crypto::splitmix64(seed_ ^ 0x6B67ULL);
    if (scenario_.keys.group_shape) {
      group_ = keygraph::KeyGraph::from_shape(keygraph::parse_shape(*scenario_.keys.group_shape), opts);
    } else if (!scenario_.keys.group_members.empty()) {
      group_ = keygraph::KeyGraph::build(scenario_.keys.group_members, opts);
    }
    // Initial group keys are installed before deployment.
    if (group_) {
      for (const auto& m : group_->members()) {
        auto refs = group_->keyset_refs(m);
        initial_keys_[m].insert(refs.begin(), refs.end());
      }
    }
  }

  void fail(const std::string& what) {
    const std::string msg = "tick " + std::to_string(current_->tick) + " " + current_->kind + ": " + what;
    report_->errors.push_back(msg);
    current_->status = current_->status == "ok" ? "error: " + what : current_->status + "; " + what;
  }

  std::uint64_t epoch() const { return sink_.rotation_epoch(); }

  void line(const std::string& from, const std::string& to, const std::string& kind,
            std::vector<std::string> payload = {}, std::string key = "-") {
    report_->transcript.push_back(
        exchange::format_line({epoch(), from, to, kind, std::move(payload), std::move(key)}));
  }

  // Adversaries that record a frame sent along `path`, up to `hops` links.
  std::set<std::string> overhearers(const Path& path, std::size_t hops) const {
    std::set<std::string> out;
    for (std::size_t i = 0; i < hops && i + 1 < path.size(); ++i) {
      for (const auto& a : scenario_.adversaries)
        if (air_.has_link(path[i], a.id)) out.insert(a.id);
    }
    for (std::size_t i = 0; i <= hops && i < path.size(); ++i) {
      if (auto it = compromised_.find(path[i]); it != compromised_.end()) out.insert(it->second);
    }
    return out;
  }

  Path require_route(const std::string& from, const std::string& to) const {
    auto p = route(net_, from, to, &addresses_);
    if (!p) throw UnreachableError("no route from " + from + " to " + to);
    return *p;
  }

  void emit_key_message(const exchange::ProtocolMessage& m, const std::set<std::string>& recorders) {
    const std::size_t idx = key_messages_.size();
    key_messages_.push_back(m);
    for (const auto& a : recorders) overheard_[a].push_back(idx);
    auto l = exchange::to_line(m);
    line(l.from, l.to, l.kind, l.payload, l.key);
  }

  void send_to_node(const exchange::ProtocolMessage& m) {
    const auto path = require_route(scenario_.sink, m.to);
    nodes_.at(m.to).receive(m);
    emit_key_message(m, overhearers(path, path.size() - 1));
  }

  std::set<std::string> all_adversaries() const {
    std::set<std::string> out;
    for (const auto& a : scenario_.adversaries) out.insert(a.id);
    return out;
  }

  void dispatch(const ScenarioEvent& ev) {
    switch (ev.kind) {
    case EventKind::DEPLOY: return on_deploy(ev);
    case EventKind::PROVISION: return on_provision(ev);
    case EventKind::VERIFY: return on_verify(ev);
    case EventKind::ROTATE: return on_rotate();
    case EventKind::JOIN_GROUP: return on_join(ev);
    case EventKind::LEAVE_GROUP: return on_leave(ev);
    case EventKind::SEND_INTEREST: return on_interest(ev);
    case EventKind::SEND_DATA: return on_data(ev);
    case EventKind::COMPROMISE_NODE: return on_compromise(ev);
    case EventKind::ADVERSARY_REPLAY: return on_replay(ev);
    }
  }

  void on_deploy(const ScenarioEvent& ev) {
    std::vector<std::string> ids = ev.nodes;
    if (ids.empty()) {
      for (const auto& n : scenario_.nodes)
        if (n.node_id != scenario_.sink && !sink_.deployed(n.node_id)) ids.push_back(n.node_id);
    }
    for (auto& node : exchange::deploy(sink_, ids)) {
      initial_keys_[node.id()].insert(node.temp_key().ref());
      const std::string id = node.id();
      nodes_.emplace(id, std::move(node));
    }
  }

  void on_provision(const ScenarioEvent& ev) {
    std::vector<std::string> ids = ev.nodes;
    if (ids.empty()) {
      for (const auto& id : sink_.roster())
        if (sink_.identity(id).state == exchange::NodeState::TEMP_KEYED) ids.push_back(id);
    }
    for (const auto& id : ids) {
      try {
        require_route(scenario_.sink, id);
        send_to_node(exchange::provision(sink_, id));
      } catch (const std::exception& e) {
        fail(e.what());
      }
    }
  }

  void on_verify(const ScenarioEvent& ev) {
    const auto& a = ev.nodes[0];
    const auto& b = ev.nodes[1];
    std::map<std::string, std::pair<Path, Path>> legs;
    for (const auto& n : {a, b}) legs[n] = {require_route(scenario_.sink, n), require_route(n, scenario_.sink)};

    const auto& cfg = sink_.config();
    auto responder = [&](const std::string& id) -> exchange::Responder {
      auto it = nodes_.find(id);
      if (it == nodes_.end()) throw ProtocolError(id + " is not deployed");
      return exchange::honest_responder(it->second, cfg);
    };
    const std::size_t before = sink_.auth_log().size();
    const bool ok = exchange::verify_pair(sink_, a, b, responder(a), responder(b));
    for (std::size_t i = before; i < sink_.auth_log().size(); ++i) {
      const auto& t = sink_.auth_log()[i];
      const auto& [down, up] = legs.at(t.responder);
      line(scenario_.sink, t.responder, "CHALLENGE");
      line(t.responder, scenario_.sink, "RESPONSE");
      auto heard = overhearers(down, down.size() - 1);
      auto heard_up = overhearers(up, up.size() - 1);
      heard.insert(heard_up.begin(), heard_up.end());
      for (const auto& z : heard) auth_heard_[z].push_back(t);
    }
    report_->verifications.push_back({current_->tick, a, b, ok});
    if (!ok) fail("verification of " + a + " and " + b + " failed");
  }

  void on_rotate() {
    for (const auto& m : exchange::rotate_keys(sink_)) {
      try {
        send_to_node(m);
      } catch (const std::exception& e) {
        fail(e.what());
      }
    }
  }

  void emit_rekeys(const std::vector<keygraph::RekeyMessage>& msgs) {
    const auto everyone = all_adversaries();
    for (const auto& r : msgs) {
      exchange::ProtocolMessage m;
      m.epoch = epoch();
      m.from = scenario_.sink;
      m.to = r.recipients.size() == 1 ? r.recipients.front() : "{" + keygraph::join_list(r.recipients) + "}";
      m.kind = "REKEY";
      m.payload = r.payload;
      m.encrypting_key = r.encrypting_key;
      m.ciphertext = r.ciphertext;
      emit_key_message(m, everyone);
    }
  }

  void on_join(const ScenarioEvent& ev) {
    const auto& m = ev.nodes[0];
    std::vector<keygraph::RekeyMessage> msgs;
    if (!group_) {
      keygraph::KeyGraph::Options opts;
      opts.degree = scenario_.keys.degree;
      opts.key_bits = scenario_.keys.key_bits;
      opts.seed = crypto::splitmix64(seed_ ^ 0x6B67ULL);
      group_ = keygraph::KeyGraph::build({m}, opts);
      const auto path = group_->path_keys(m);
      keygraph::RekeyMessage first;
      first.recipients = {m};
      first.payload = {path.back()};
      first.encrypting_key = path.front();
      first.ciphertext = seal_keys(path.front(), first.payload);
      msgs.push_back(std::move(first));
    } else {
      msgs = group_->join_in_place(m, ev.under);
    }
    initial_keys_[m].insert(group_->path_keys(m).front().ref());
    emit_rekeys(msgs);
    report_->rekeys.push_back({current_->tick, "JOIN", m, msgs.size()});
  }

  void on_leave(const ScenarioEvent& ev) {
    if (!group_) throw ProtocolError("no group to leave");
    const auto msgs = group_->leave_in_place(ev.nodes[0]);
    emit_rekeys(msgs);
    report_->rekeys.push_back({current_->tick, "LEAVE", ev.nodes[0], msgs.size()});
  }

  void on_interest(const ScenarioEvent& ev) {
    ++report_->interests_sent;
    std::set<std::string> reached{scenario_.sink};
    std::deque<std::string> queue{scenario_.sink};
    while (!queue.empty()) {
      const auto u = queue.front();
      queue.pop_front();
      for (const auto& v : net_.out_neighbors(u))
        if (reached.insert(v).second) queue.push_back(v);
    }
    reached.erase(scenario_.sink);
    for (const auto& n : reached) interests_[n].push_back(ev.attributes);
    report_->interest_deliveries += reached.size();
    line(scenario_.sink, "*", "INTEREST");
  }

  void on_data(const ScenarioEvent& ev) {
    const auto& id = ev.nodes[0];
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw ProtocolError(id + " is not deployed");
    if (!it->second.original_key()) throw ProtocolError(id + " has no original key to seal data with");
    const auto reading = exchange::encrypt_reading(it->second, ev.value, epoch(), sink_.config());
    const KeyRef key = it->second.original_key()->ref();
    ++report_->data_sent;
    line(id, scenario_.sink, "DATA", {}, display(key));

    const auto& held = interests_[id];
    const bool wanted =
        std::any_of(held.begin(), held.end(), [&](const auto& interest) { return addressing::match(interest, ev.attributes); });
    if (!wanted) {
      ++report_->dropped_no_match;
      current_->status = "no matching interest";
      return;
    }
    auto path = route(net_, id, scenario_.sink, &addresses_);
    if (!path) {
      ++report_->dropped_no_route;
      current_->status = "no route";
      return;
    }
    std::size_t hops = path->size() - 1;
    for (std::size_t i = 1; i + 1 < path->size(); ++i) {
      if (compromised_.count((*path)[i])) {
        hops = i;
        break;
      }
    }
    data_frames_.push_back({id, key, overhearers(*path, hops)});
    if (hops < path->size() - 1) {
      ++report_->intercepted;
      current_->status = "intercepted at " + (*path)[hops];
      return;
    }
    ++report_->delivered;
    delivered_[reading.epoch].push_back({reading, ev.value});
  }

  void on_compromise(const ScenarioEvent& ev) {
    const auto& id = ev.nodes[0];
    auto& loot = stolen_[ev.adversary];
    if (auto it = nodes_.find(id); it != nodes_.end()) {
      auto held = it->second.held_keys();
      loot.insert(held.begin(), held.end());
    }
    if (group_ && group_->contains(id)) {
      auto refs = group_->keyset_refs(id);
      loot.insert(refs.begin(), refs.end());
    }
    compromised_[id] = ev.adversary;
  }

  void on_replay(const ScenarioEvent& ev) {
    const auto& victim = ev.nodes[0];
    const auto& ident = sink_.identity(victim);
    if (!ident.original_key) throw ProtocolError(victim + " has no original key to impersonate");
    const auto& cfg = sink_.config();
    exchange::AuthOptions opts{cfg.auth_mode, epoch(), cfg.nonce_bits, cfg.code_box};
    line(ev.adversary, scenario_.sink, "REPLAY", {}, "-");
    const auto& recorded = auth_heard_[ev.adversary];
    const bool accepted = exchange::impersonate(ev.adversary, victim, recorded, *ident.original_key, opts, replay_rng_);
    report_->replays.push_back({current_->tick, ev.adversary, victim, cfg.auth_mode, accepted});
    if (accepted) current_->status = "impersonation accepted";
  }

  void finish(RunReport& r) {
    const std::size_t matched = r.data_sent - r.dropped_no_match;
    r.delivery_ratio = matched ? static_cast<double>(r.delivered) / static_cast<double>(matched) : 0.0;

    std::map<std::string, std::set<KeyRef>> closures;
    for (const auto& a : scenario_.adversaries) closures[a.id] = closure_of(a.id);
    for (const auto& f : data_frames_) {
      const bool readable =
          std::any_of(f.heard_by.begin(), f.heard_by.end(), [&](const auto& a) { return closures[a].count(f.key) > 0; });
      r.compromised_reads += readable;
    }

    for (const auto& [ep, readings] : delivered_) {
      EpochAggregate agg{ep, readings.size(), 0, 0};
      std::vector<exchange::EncryptedReading> cts;
      std::vector<std::string> who;
      for (const auto& d : readings) {
        agg.plaintext_sum += d.value;
        cts.push_back(d.reading);
        who.push_back(d.reading.producer);
      }
      try {
        agg.decrypted_sum = exchange::sink_decrypt_sum(sink_, exchange::aggregate(cts, sink_.config()), who);
      } catch (const std::exception& e) {
        r.errors.push_back("aggregate for epoch " + std::to_string(ep) + ": " + e.what());
      }
      r.aggregates.push_back(agg);
    }

    for (const auto& n : scenario_.nodes) {
      if (n.node_id == scenario_.sink) continue;
      r.node_states[n.node_id] =
          sink_.deployed(n.node_id) ? std::string(exchange::to_string(sink_.identity(n.node_id).state)) : "UNDEPLOYED";
    }
    r.compromised = compromised_;
    for (const auto& a : scenario_.adversaries) {
      auto& heard = r.adversary_neighbors[a.id];
      for (const auto& n : air_.in_neighbors(a.id))
        if (net_.contains(n)) heard.insert(n);
    }
    r.links = net_.links();
  }

  Scenario scenario_;
  std::uint64_t seed_;
  radio::Topology air_;
  radio::Topology net_;
  addressing::AddressTable addresses_;

  exchange::SinkState sink_;
  Rng replay_rng_;
  std::map<std::string, exchange::SensorNode> nodes_;
  std::map<std::string, std::vector<addressing::AttributeSet>> interests_;
  std::optional<keygraph::KeyGraph> group_;

  std::vector<exchange::ProtocolMessage> key_messages_;
  std::map<std::string, std::vector<std::size_t>> overheard_;
  std::map<std::string, std::vector<exchange::AuthTranscript>> auth_heard_;
  std::map<std::string, std::set<KeyRef>> stolen_;
  std::map<std::string, std::string> compromised_;
  std::map<std::string, std::set<KeyRef>> initial_keys_;
  std::vector<DataFrame> data_frames_;
  std::map<std::uint64_t, std::vector<DeliveredReading>> delivered_;

  RunReport* report_ = nullptr;
  EventRecord* current_ = nullptr;
};

// Validates, runs once, and returns the report.
inline RunReport run(const Scenario& scenario, std::optional<std::uint64_t> seed = std::nullopt) {
  Simulator sim(scenario, seed);
  return sim.run();
}

} // namespace sentinel::sim
