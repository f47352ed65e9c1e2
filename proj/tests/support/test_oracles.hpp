#pragma once

// Independent reference computations used only by the test suites. None of
// these call into the code paths they are used to check.

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sentinel/key.hpp"
#include "sentinel/radio.hpp"

namespace oracle {

// Full rescans until nothing changes.
template <class Message>
std::set<sentinel::KeyRef> naive_closure(std::set<sentinel::KeyRef> known, const std::vector<Message>& msgs) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& m : msgs) {
      if (!known.count(m.encrypting_key.ref())) continue;
      for (const auto& p : m.payload) changed |= known.insert(p.ref()).second;
    }
  }
  return known;
}

// Hop distance over an adjacency list; nullopt when unreachable.
inline std::optional<std::size_t> bfs_distance(const std::map<std::string, std::set<std::string>>& adj,
                                               const std::string& from, const std::string& to) {
  std::map<std::string, std::size_t> dist{{from, 0}};
  std::deque<std::string> q{from};
  while (!q.empty()) {
    auto u = q.front();
    q.pop_front();
    if (u == to) return dist[u];
    auto it = adj.find(u);
    if (it == adj.end()) continue;
    for (const auto& v : it->second) {
      if (dist.emplace(v, dist[u] + 1).second) q.push_back(v);
    }
  }
  return std::nullopt;
}

// Counts inputs x in {0,1}^n whose wired bits equal `output`, by enumerating
// all 2^n inputs. Bit i of x is input position i.
inline std::uint64_t count_preimages(const std::vector<std::size_t>& wiring, std::size_t n, std::uint64_t output) {
  std::uint64_t count = 0;
  for (std::uint64_t x = 0; x < (std::uint64_t{1} << n); ++x) {
    bool ok = true;
    for (std::size_t i = 0; i < wiring.size() && ok; ++i) ok = (((x >> wiring[i]) & 1U) == ((output >> i) & 1U));
    count += ok;
  }
  return count;
}

// Conflict set rebuilt from the raw link list: direct neighbours either way
// plus nodes sharing a transmitter with n.
inline std::set<std::string> conflict_set(const sentinel::radio::Topology& t, const std::string& n) {
  std::set<std::string> out;
  for (const auto& l : t.links()) {
    if (l.from == n) out.insert(l.to);
    if (l.to == n) out.insert(l.from);
  }
  for (const auto& l1 : t.links()) {
    if (l1.to != n) continue;
    for (const auto& l2 : t.links())
      if (l2.from == l1.from) out.insert(l2.to);
  }
  out.erase(n);
  return out;
}

} // namespace oracle
