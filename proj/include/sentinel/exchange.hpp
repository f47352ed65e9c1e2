#pragma once

// Sink-mediated key exchange, challenge-response authentication and additive
// masked aggregation of sensor readings.
//
// Lifecycle of a sensor, driven by the sink:
//   deploy     sink issues a temporary key (loaded before deployment)
//   provision  sink sends the original key sealed under the temporary key
//   verify     sink challenges the node; the node answers with a key code
//   rotate     sink replaces temporary and original keys under the current
//              original key
//
// Readings are masked with a keyed value per (original key, epoch) so any
// node can add ciphertexts and only the sink can remove the masks.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sentinel/bits.hpp"
#include "sentinel/crypto.hpp"
#include "sentinel/errors.hpp"
#include "sentinel/key.hpp"
#include "sentinel/pbox.hpp"
#include "sentinel/radio.hpp"
#include "sentinel/seal.hpp"

namespace sentinel::exchange {

enum class NodeState { DEPLOYED, TEMP_KEYED, PROVISIONED, VERIFIED };

inline std::string_view to_string(NodeState s) {
  switch (s) {
  case NodeState::DEPLOYED: return "DEPLOYED";
  case NodeState::TEMP_KEYED: return "TEMP_KEYED";
  case NodeState::PROVISIONED: return "PROVISIONED";
  case NodeState::VERIFIED: return "VERIFIED";
  }
  return "?";
}

// NONCE binds every response to a fresh challenge. NONCE_FREE answers with the
// bare key code, which a recorder can replay.
enum class AuthMode { NONCE, NONCE_FREE };

inline std::string_view to_string(AuthMode m) { return m == AuthMode::NONCE ? "nonce" : "nonce-free"; }

struct ExchangeConfig {
  std::size_t key_bits = kDefaultKeyBits;
  std::size_t nonce_bits = 32;
  pbox::CompressionPBox code_box = pbox::CompressionPBox::default_key_code();
  AuthMode auth_mode = AuthMode::NONCE;
  std::uint64_t modulus = std::uint64_t{1} << 32;
  std::uint64_t max_group_size = std::uint64_t{1} << 16;

  void validate() const {
    if (code_box.inputs() != key_bits) throw ConfigError("key-code box inputs must equal the key size");
    if (modulus < 2 || modulus > (std::uint64_t{1} << 32)) throw ConfigError("modulus must be in [2, 2^32]");
    if (max_group_size < 1 || max_group_size > modulus) throw ConfigError("max_group_size must be in [1, modulus]");
    if (nonce_bits == 0) throw ConfigError("nonce_bits must be > 0");
  }

  // Largest reading value (exclusive) that cannot wrap when max_group_size are summed.
  std::uint64_t value_limit() const { return modulus / max_group_size; }
};

// Scripted key labels, e.g. temp x1 -> "2", original x1 -> "6". Unscripted
// nodes get "t.<id>" and "o.<id>".
struct KeySchedule {
  std::map<std::string, std::string> temp_labels;
  std::map<std::string, std::string> original_labels;
};

struct SensorIdentity {
  std::string node_id;
  Key temp_key;
  std::optional<Key> original_key;
  NodeState state = NodeState::DEPLOYED;
};

// A key-carrying frame. Payload labels travel in the clear, material sealed.
struct ProtocolMessage {
  std::uint64_t epoch = 0;
  std::string from;
  std::string to;
  std::string kind;
  std::vector<Key> payload;
  Key encrypting_key;
  Bits ciphertext;
};

struct Challenge {
  Bits nonce;
  std::uint64_t epoch = 0;
};

enum class AuthOutcome { MUTUAL_OK, FAIL_A, FAIL_B };

inline std::string_view to_string(AuthOutcome o) {
  switch (o) {
  case AuthOutcome::MUTUAL_OK: return "MUTUAL_OK";
  case AuthOutcome::FAIL_A: return "FAIL_A";
  case AuthOutcome::FAIL_B: return "FAIL_B";
  }
  return "?";
}

// a challenges b (challenge_a, answered by response_b), then b challenges a
// (challenge_b, answered by response_a). One-way checks leave the second
// round empty.
struct AuthTranscript {
  std::string initiator;
  std::string responder;
  Challenge challenge_a;
  Challenge challenge_b;
  Bits response_a;
  Bits response_b;
  AuthOutcome outcome = AuthOutcome::FAIL_B;
  AuthMode mode = AuthMode::NONCE;
};

inline Bits key_code(const Key& key, const Challenge& challenge, AuthMode mode, const pbox::CompressionPBox& box) {
  if (mode == AuthMode::NONCE_FREE) return pbox::derive_key_code(key, box);
  return pbox::derive_challenge_code(key, challenge.nonce, challenge.epoch, box);
}

// Node-side key store. Keys arrive only through sealed messages.
class SensorNode {
public:
  SensorNode(std::string id, Key temp_key) : id_(std::move(id)), temp_key_(std::move(temp_key)) {}

  const std::string& id() const { return id_; }
  const Key& temp_key() const { return temp_key_; }
  const std::optional<Key>& original_key() const { return original_key_; }

  std::set<KeyRef> held_keys() const {
    std::set<KeyRef> out{temp_key_.ref()};
    if (original_key_) out.insert(original_key_->ref());
    return out;
  }

  // Opens a PROVISION or ROTATE message with whichever held key sealed it.
  void receive(const ProtocolMessage& msg) {
    if (msg.to != id_) throw ProtocolError("message for " + msg.to + " delivered to " + id_);
    const Key* opener = nullptr;
    if (msg.encrypting_key.ref() == temp_key_.ref()) opener = &temp_key_;
    if (original_key_ && msg.encrypting_key.ref() == original_key_->ref()) opener = &*original_key_;
    if (!opener) throw ProtocolError(id_ + " does not hold " + display(msg.encrypting_key.ref()));
    auto keys = open_keys(msg.ciphertext, msg.payload, *opener);
    if (msg.kind == "PROVISION" && keys.size() == 1) {
      original_key_ = keys[0];
    } else if (msg.kind == "ROTATE" && keys.size() == 2) {
      original_key_ = keys[0];
      temp_key_ = keys[1];
    } else {
      throw ProtocolError("unexpected key message kind " + msg.kind);
    }
  }

  Bits respond(const Challenge& challenge, AuthMode mode, const pbox::CompressionPBox& box) const {
    if (!original_key_) throw ProtocolError(id_ + " has no original key to answer with");
    return key_code(*original_key_, challenge, mode, box);
  }

private:
  std::string id_;
  Key temp_key_;
  std::optional<Key> original_key_;
};

class SinkState {
public:
  explicit SinkState(std::string id = "S", ExchangeConfig config = {}, std::uint64_t seed = 1,
                     KeySchedule schedule = {})
      : id_(std::move(id)), config_(std::move(config)), schedule_(std::move(schedule)), rng_(seed) {
    config_.validate();
    own_key_ = make_key("s." + id_, 0, rng_, config_.key_bits);
    used_labels_.insert(own_key_.id);
  }

  const std::string& id() const { return id_; }
  const ExchangeConfig& config() const { return config_; }
  const Key& own_key() const { return own_key_; }
  std::uint64_t rotation_epoch() const { return epoch_; }
  const std::map<std::string, SensorIdentity>& registry() const { return registry_; }
  const std::vector<std::string>& roster() const { return roster_; }
  const std::vector<AuthTranscript>& auth_log() const { return auth_log_; }
  Rng& rng() { return rng_; }

  const SensorIdentity& identity(std::string_view node) const {
    auto it = registry_.find(std::string(node));
    if (it == registry_.end()) throw DomainError("node not deployed: " + std::string(node));
    return it->second;
  }

  bool deployed(std::string_view node) const { return registry_.count(std::string(node)) > 0; }

  // Original key in force at `epoch` (the latest version issued at or before it).
  const Key& original_key_at(std::string_view node, std::uint64_t epoch) const {
    auto it = history_.find(std::string(node));
    if (it != history_.end()) {
      for (auto h = it->second.rbegin(); h != it->second.rend(); ++h)
        if (h->first <= epoch) return h->second;
    }
    throw DomainError("sink holds no original key for " + std::string(node) + " at epoch " + std::to_string(epoch));
  }

private:
  friend std::vector<SensorNode> deploy(SinkState&, const std::vector<std::string>&);
  friend ProtocolMessage provision(SinkState&, std::string_view);
  friend bool verify_pair(SinkState&, std::string_view, std::string_view,
                          const std::function<Bits(const Challenge&)>&, const std::function<Bits(const Challenge&)>&);
  friend std::vector<ProtocolMessage> rotate_keys(SinkState&);

  SensorIdentity& mutable_identity(std::string_view node) {
    auto it = registry_.find(std::string(node));
    if (it == registry_.end()) throw DomainError("node not deployed: " + std::string(node));
    return it->second;
  }

  std::string claim_label(const std::map<std::string, std::string>& scripted, const std::string& node,
                          const std::string& prefix) {
    auto it = scripted.find(node);
    std::string label = it != scripted.end() ? it->second : prefix + node;
    if (!used_labels_.insert(label).second) throw DomainError("key label already in use: " + label);
    return label;
  }

  std::string id_;
  ExchangeConfig config_;
  KeySchedule schedule_;
  Rng rng_;
  Key own_key_;
  std::uint64_t epoch_ = 0;
  std::map<std::string, SensorIdentity> registry_;
  std::vector<std::string> roster_;
  std::set<std::string> used_labels_;
  std::map<std::string, std::vector<std::pair<std::uint64_t, Key>>> history_;
  std::vector<AuthTranscript> auth_log_;
};

// Issues a temporary key to each node and records the roster. Returns the
// node-side stores, each holding only its temporary key.
inline std::vector<SensorNode> deploy(SinkState& sink, const std::vector<std::string>& node_ids) {
  std::set<std::string> batch;
  for (const auto& id : node_ids) {
    if (id.empty()) throw DomainError("node id is empty");
    if (!batch.insert(id).second || sink.deployed(id)) throw DomainError("node deployed twice: " + id);
    if (id == sink.id()) throw DomainError("the sink cannot deploy itself");
  }
  std::vector<SensorNode> out;
  for (const auto& id : node_ids) {
    Key temp = make_key(sink.claim_label(sink.schedule_.temp_labels, id, "t."), 0, sink.rng_, sink.config_.key_bits);
    sink.registry_[id] = SensorIdentity{id, temp, std::nullopt, NodeState::TEMP_KEYED};
    sink.roster_.push_back(id);
    out.emplace_back(id, std::move(temp));
  }
  return out;
}

inline ProtocolMessage provision(SinkState& sink, std::string_view node_id) {
  auto& ident = sink.mutable_identity(node_id);
  if (ident.state != NodeState::TEMP_KEYED) {
    throw ProtocolError("provision requires TEMP_KEYED, " + ident.node_id + " is " +
                        std::string(to_string(ident.state)));
  }
  Key original = make_key(sink.claim_label(sink.schedule_.original_labels, ident.node_id, "o."), 0, sink.rng_,
                          sink.config_.key_bits);
  ident.original_key = original;
  ident.state = NodeState::PROVISIONED;
  sink.history_[ident.node_id].emplace_back(sink.epoch_, original);

  ProtocolMessage msg;
  msg.epoch = sink.epoch_;
  msg.from = sink.id_;
  msg.to = ident.node_id;
  msg.kind = "PROVISION";
  msg.payload = {original};
  msg.encrypting_key = ident.temp_key;
  msg.ciphertext = seal_keys(ident.temp_key, msg.payload);
  return msg;
}

using Responder = std::function<Bits(const Challenge&)>;

inline Responder honest_responder(const SensorNode& node, const ExchangeConfig& config) {
  return [&node, &config](const Challenge& c) { return node.respond(c, config.auth_mode, config.code_box); };
}

// The sink challenges both nodes; both become VERIFIED iff both codes check.
inline bool verify_pair(SinkState& sink, std::string_view a, std::string_view b, const Responder& respond_a,
                        const Responder& respond_b) {
  if (a == b) throw DomainError("verify_pair needs two distinct nodes");
  auto& ia = sink.mutable_identity(a);
  auto& ib = sink.mutable_identity(b);
  for (const auto* ident : {&ia, &ib}) {
    if (ident->state != NodeState::PROVISIONED) {
      throw ProtocolError("verify requires PROVISIONED, " + ident->node_id + " is " +
                          std::string(to_string(ident->state)));
    }
  }
  const auto& cfg = sink.config_;
  auto check = [&](SensorIdentity& ident, const Responder& respond) {
    AuthTranscript t;
    t.initiator = sink.id_;
    t.responder = ident.node_id;
    t.mode = cfg.auth_mode;
    t.challenge_a.epoch = sink.epoch_;
    if (cfg.auth_mode == AuthMode::NONCE) t.challenge_a.nonce = random_bits(sink.rng_, cfg.nonce_bits);
    t.response_b = respond(t.challenge_a);
    const bool ok = t.response_b == key_code(*ident.original_key, t.challenge_a, cfg.auth_mode, cfg.code_box);
    t.outcome = ok ? AuthOutcome::MUTUAL_OK : AuthOutcome::FAIL_B;
    sink.auth_log_.push_back(t);
    return ok;
  };
  const bool ok_a = check(ia, respond_a);
  const bool ok_b = check(ib, respond_b);
  if (ok_a && ok_b) {
    ia.state = NodeState::VERIFIED;
    ib.state = NodeState::VERIFIED;
  }
  return ok_a && ok_b;
}

inline bool verify_pair(SinkState& sink, const SensorNode& a, const SensorNode& b) {
  return verify_pair(sink, a.id(), b.id(), honest_responder(a, sink.config()), honest_responder(b, sink.config()));
}

// Advances the epoch and sends every VERIFIED node a fresh original and
// temporary key sealed under its current original key. No-op when no node is
// verified.
inline std::vector<ProtocolMessage> rotate_keys(SinkState& sink) {
  std::vector<SensorIdentity*> verified;
  for (auto& [id, ident] : sink.registry_)
    if (ident.state == NodeState::VERIFIED) verified.push_back(&ident);
  if (verified.empty()) return {};

  ++sink.epoch_;
  std::vector<ProtocolMessage> out;
  for (auto* ident : verified) {
    const Key old = *ident->original_key;
    Key fresh_original = make_key(old.id, old.version + 1, sink.rng_, sink.config_.key_bits);
    Key fresh_temp = make_key(ident->temp_key.id, ident->temp_key.version + 1, sink.rng_, sink.config_.key_bits);
    ident->original_key = fresh_original;
    ident->temp_key = fresh_temp;
    sink.history_[ident->node_id].emplace_back(sink.epoch_, fresh_original);

    ProtocolMessage msg;
    msg.epoch = sink.epoch_;
    msg.from = sink.id_;
    msg.to = ident->node_id;
    msg.kind = "ROTATE";
    msg.payload = {fresh_original, fresh_temp};
    msg.encrypting_key = old;
    msg.ciphertext = seal_keys(old, msg.payload);
    out.push_back(std::move(msg));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Peer authentication

struct AuthParty {
  std::string id;
  Key key;
};

struct AuthOptions {
  AuthMode mode = AuthMode::NONCE;
  std::uint64_t epoch = 0;
  std::size_t nonce_bits = 32;
  pbox::CompressionPBox code_box = pbox::CompressionPBox::default_key_code();
};

// Two challenge-response rounds: a authenticates b, then b authenticates a.
// Each side checks the answer against its own copy of the key.
inline AuthTranscript mutual_authenticate(const radio::Topology& topology, const AuthParty& a, const AuthParty& b,
                                          const AuthOptions& options, Rng& rng) {
  if (!topology.has_link(a.id, b.id) || !topology.has_link(b.id, a.id)) {
    throw UnreachableError(a.id + " and " + b.id + " are not linked in both directions");
  }
  AuthTranscript t;
  t.initiator = a.id;
  t.responder = b.id;
  t.mode = options.mode;
  auto challenge = [&] {
    Challenge c;
    c.epoch = options.epoch;
    if (options.mode == AuthMode::NONCE) c.nonce = random_bits(rng, options.nonce_bits);
    return c;
  };

  t.challenge_a = challenge();
  t.response_b = key_code(b.key, t.challenge_a, options.mode, options.code_box);
  if (t.response_b != key_code(a.key, t.challenge_a, options.mode, options.code_box)) {
    t.outcome = AuthOutcome::FAIL_B;
    return t;
  }
  t.challenge_b = challenge();
  t.response_a = key_code(a.key, t.challenge_b, options.mode, options.code_box);
  if (t.response_a != key_code(b.key, t.challenge_b, options.mode, options.code_box)) {
    t.outcome = AuthOutcome::FAIL_A;
    return t;
  }
  t.outcome = AuthOutcome::MUTUAL_OK;
  return t;
}

// Data sealed between two authenticated peers.
inline Bits seal_data(const Key& key, std::uint64_t counter, const Bits& plaintext) {
  return crypto::encrypt(key.material, crypto::splitmix64(seal_tweak(key.ref()) ^ counter), plaintext);
}

inline Bits open_data(const Key& key, std::uint64_t counter, const Bits& ciphertext) {
  return seal_data(key, counter, ciphertext);
}

// The victim's successful answers found in a recording, newest last.
inline std::vector<Bits> recorded_answers(std::string_view victim, std::span<const AuthTranscript> recorded) {
  std::vector<Bits> out;
  for (const auto& t : recorded) {
    if (t.outcome != AuthOutcome::MUTUAL_OK) continue;
    if (t.responder == victim && !t.response_b.empty()) out.push_back(t.response_b);
    if (t.initiator == victim && !t.response_a.empty()) out.push_back(t.response_a);
  }
  return out;
}

// Adversary z answers a fresh challenge from a verifier holding
// `verifier_key` by replaying the victim's most recent recorded answer.
// Returns whether the verifier accepts.
inline bool impersonate(std::string_view z, std::string_view victim, std::span<const AuthTranscript> recorded,
                        const Key& verifier_key, const AuthOptions& options, Rng& rng) {
  if (recorded.empty()) throw DomainError(std::string(z) + " has no recorded transcripts");
  const auto answers = recorded_answers(victim, recorded);
  if (answers.empty()) {
    throw DomainError(std::string(z) + " recorded no successful exchange of " + std::string(victim));
  }
  Challenge fresh;
  fresh.epoch = options.epoch;
  if (options.mode == AuthMode::NONCE) fresh.nonce = random_bits(rng, options.nonce_bits);
  return answers.back() == key_code(verifier_key, fresh, options.mode, options.code_box);
}

// ---------------------------------------------------------------------------
// Additively masked readings

struct EncryptedReading {
  std::string producer;
  std::uint64_t ciphertext = 0;
  std::uint64_t epoch = 0;
  std::uint64_t count = 1; // readings folded into this ciphertext

  bool operator==(const EncryptedReading&) const = default;
};

inline std::uint64_t reading_mask(const Key& original_key, std::uint64_t epoch, std::uint64_t modulus) {
  return crypto::prf_u64(original_key.material, crypto::splitmix64(epoch ^ 0x4D41534BULL)) % modulus;
}

inline EncryptedReading encrypt_reading(std::string_view node_id, const Key& original_key, std::uint64_t value,
                                        std::uint64_t epoch, const ExchangeConfig& config) {
  if (value >= config.value_limit()) {
    throw DomainError("reading " + std::to_string(value) + " outside [0, " + std::to_string(config.value_limit()) +
                      ")");
  }
  const std::uint64_t mask = reading_mask(original_key, epoch, config.modulus);
  return {std::string(node_id), (value + mask) % config.modulus, epoch, 1};
}

inline EncryptedReading encrypt_reading(const SensorNode& node, std::uint64_t value, std::uint64_t epoch,
                                        const ExchangeConfig& config) {
  if (!node.original_key()) throw ProtocolError(node.id() + " has no original key");
  return encrypt_reading(node.id(), *node.original_key(), value, epoch, config);
}

// Sums ciphertexts; touches no key material.
inline EncryptedReading aggregate(std::span<const EncryptedReading> readings, const ExchangeConfig& config) {
  if (readings.empty()) throw DomainError("nothing to aggregate");
  if (readings.size() == 1) return readings.front();
  EncryptedReading out{"aggregate", 0, readings.front().epoch, 0};
  for (const auto& r : readings) {
    if (r.epoch != out.epoch) throw DomainError("cannot aggregate readings from different epochs");
    out.ciphertext = (out.ciphertext + r.ciphertext) % config.modulus;
    out.count += r.count;
  }
  if (out.count > config.max_group_size) throw DomainError("aggregate exceeds max_group_size readings");
  return out;
}

inline EncryptedReading aggregate(const std::vector<EncryptedReading>& readings, const ExchangeConfig& config) {
  return aggregate(std::span<const EncryptedReading>(readings), config);
}

// Removes one mask per contributor entry (repeat an id for repeated readings).
inline std::uint64_t sink_decrypt_sum(const SinkState& sink, const EncryptedReading& agg,
                                      const std::vector<std::string>& contributors) {
  const std::uint64_t m = sink.config().modulus;
  std::uint64_t value = agg.ciphertext % m;
  for (const auto& c : contributors) {
    const std::uint64_t mask = reading_mask(sink.original_key_at(c, agg.epoch), agg.epoch, m);
    value = (value + m - mask) % m;
  }
  return value;
}

// ---------------------------------------------------------------------------
// Transcript lines: "<epoch> <from> -> <to> : <kind> {<labels>} <key>"

struct TranscriptLine {
  std::uint64_t epoch = 0;
  std::string from;
  std::string to;
  std::string kind;
  std::vector<std::string> payload;
  std::string key = "-";
};

inline std::string format_line(const TranscriptLine& l) {
  std::string labels;
  for (std::size_t i = 0; i < l.payload.size(); ++i) {
    if (i) labels += ',';
    labels += l.payload[i];
  }
  return std::to_string(l.epoch) + " " + l.from + " -> " + l.to + " : " + l.kind + " {" + labels + "} " + l.key;
}

inline TranscriptLine to_line(const ProtocolMessage& m) {
  TranscriptLine l{m.epoch, m.from, m.to, m.kind, {}, display(m.encrypting_key.ref())};
  for (const auto& k : m.payload) l.payload.push_back(display(k.ref()));
  return l;
}

} // namespace sentinel::exchange
