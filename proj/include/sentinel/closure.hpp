#pragma once

// Derivable-key closure: starting from the keys a party holds, repeatedly open
// every observed message whose encrypting key is already known. The result is
// exactly the set of key versions the party can ever learn from the traffic.

#include <concepts>
#include <cstddef>
#include <deque>
#include <map>
#include <set>
#include <span>
#include <vector>

#include "sentinel/key.hpp"

namespace sentinel {

template <class M>
concept KeyEnvelope = requires(const M& m) {
  { m.encrypting_key.ref() } -> std::convertible_to<KeyRef>;
  { m.payload.begin()->ref() } -> std::convertible_to<KeyRef>;
};

template <KeyEnvelope Message>
std::set<KeyRef> key_closure(std::set<KeyRef> known, std::span<const Message> transcript) {
  std::map<KeyRef, std::vector<std::size_t>> by_key;
  for (std::size_t i = 0; i < transcript.size(); ++i) by_key[transcript[i].encrypting_key.ref()].push_back(i);

  std::vector<bool> opened(transcript.size(), false);
  std::deque<KeyRef> pending(known.begin(), known.end());
  while (!pending.empty()) {
    const KeyRef k = pending.front();
    pending.pop_front();
    auto it = by_key.find(k);
    if (it == by_key.end()) continue;
    for (std::size_t idx : it->second) {
      if (opened[idx]) continue;
      opened[idx] = true;
      for (const auto& p : transcript[idx].payload) {
        if (known.insert(p.ref()).second) pending.push_back(p.ref());
      }
    }
  }
  return known;
}

template <KeyEnvelope Message>
std::set<KeyRef> key_closure(std::set<KeyRef> known, const std::vector<Message>& transcript) {
  return key_closure(std::move(known), std::span<const Message>(transcript));
}

} // namespace sentinel
