#pragma once

// Straight and compression permutation boxes over bit vectors.
//
// Wiring is output-major: entry i names the input bit that feeds output i.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sentinel/bits.hpp"
#include "sentinel/crypto.hpp"
#include "sentinel/errors.hpp"
#include "sentinel/key.hpp"

namespace sentinel::pbox {

constexpr std::size_t kDefaultCodeBits = 16;
constexpr std::size_t kMaxEnumerableWidth = 8;

class StraightPBox {
public:
  explicit StraightPBox(std::vector<std::size_t> permutation) : permutation_(std::move(permutation)) {
    std::vector<bool> seen(permutation_.size(), false);
    for (auto p : permutation_) {
      if (p >= permutation_.size() || seen[p]) throw DomainError("straight P-box wiring must be a permutation");
      seen[p] = true;
    }
  }

  static StraightPBox identity(std::size_t n) {
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), std::size_t{0});
    return StraightPBox(std::move(p));
  }

  std::size_t width() const { return permutation_.size(); }
  const std::vector<std::size_t>& permutation() const { return permutation_; }

  StraightPBox inverse() const {
    std::vector<std::size_t> inv(permutation_.size());
    for (std::size_t i = 0; i < permutation_.size(); ++i) inv[permutation_[i]] = i;
    return StraightPBox(std::move(inv));
  }

  bool operator==(const StraightPBox&) const = default;

private:
  std::vector<std::size_t> permutation_;
};

class CompressionPBox {
public:
  CompressionPBox(std::vector<std::size_t> wiring, std::size_t n_inputs)
      : wiring_(std::move(wiring)), n_inputs_(n_inputs) {
    if (wiring_.empty()) throw DomainError("compression P-box needs at least one output");
    if (wiring_.size() >= n_inputs_) throw DomainError("compression P-box must have fewer outputs than inputs");
    for (auto w : wiring_) {
      if (w >= n_inputs_) throw DomainError("compression P-box wiring entry out of range");
    }
  }

  // Keeps every (n/m)-th input; entries are distinct.
  static CompressionPBox drop_inputs(std::size_t n_inputs, std::size_t m_outputs) {
    if (m_outputs == 0 || m_outputs >= n_inputs) throw DomainError("drop_inputs requires 0 < m < n");
    std::vector<std::size_t> w(m_outputs);
    for (std::size_t i = 0; i < m_outputs; ++i) w[i] = i * n_inputs / m_outputs;
    return CompressionPBox(std::move(w), n_inputs);
  }

  // Key-code box used by authentication unless a scenario names another.
  static CompressionPBox default_key_code() { return drop_inputs(kDefaultKeyBits, kDefaultCodeBits); }

  std::size_t inputs() const { return n_inputs_; }
  std::size_t outputs() const { return wiring_.size(); }
  const std::vector<std::size_t>& wiring() const { return wiring_; }

  bool distinct_wiring() const {
    auto sorted = wiring_;
    std::sort(sorted.begin(), sorted.end());
    return std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end();
  }

  // Input positions that feed no output.
  std::vector<std::size_t> dropped_inputs() const {
    std::vector<bool> used(n_inputs_, false);
    for (auto w : wiring_) used[w] = true;
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < n_inputs_; ++i)
      if (!used[i]) out.push_back(i);
    return out;
  }

  bool operator==(const CompressionPBox&) const = default;

private:
  std::vector<std::size_t> wiring_;
  std::size_t n_inputs_;
};

inline Bits apply_straight(const StraightPBox& box, const Bits& bits) {
  if (bits.size() != box.width()) throw DomainError("input length does not match straight P-box width");
  Bits out(bits.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = bits[box.permutation()[i]];
  return out;
}

inline std::vector<StraightPBox> enumerate_straight(std::size_t n) {
  if (n < 1 || n > kMaxEnumerableWidth) throw DomainError("enumerate_straight supports 1 <= n <= 8");
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  std::vector<StraightPBox> out;
  do {
    out.emplace_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

inline Bits apply_compression(const CompressionPBox& box, const Bits& bits) {
  if (bits.size() != box.inputs()) throw DomainError("input length does not match compression P-box inputs");
  Bits out(box.outputs());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = bits[box.wiring()[i]];
  return out;
}

// Two distinct inputs with the same output. At most m < n inputs are wired,
// so some input is always dropped.
inline std::pair<Bits, Bits> collision_pair(const CompressionPBox& box) {
  Bits a(box.inputs(), false);
  Bits b = a;
  b[box.dropped_inputs().front()] = true;
  return {a, b};
}

// Deterministic compression of the key bits.
inline Bits derive_key_code(const Key& key, const CompressionPBox& box) {
  if (key.material.size() != box.inputs()) throw DomainError("key length does not match P-box inputs");
  return apply_compression(box, key.material);
}

// Response to a challenge: the key, nonce and epoch are mixed through the
// keyed transform to the box's input width, then compressed. Every key bit
// influences the code.
inline Bits derive_challenge_code(const Key& key, const Bits& nonce, std::uint64_t epoch,
                                  const CompressionPBox& box) {
  Bits input = concat(key.material, nonce);
  input = concat(input, bits_from_u64(epoch, 64));
  return apply_compression(box, crypto::prf_bits(input, box.inputs()));
}

inline std::string format_wiring(const std::vector<std::size_t>& wiring) {
  std::string out;
  for (std::size_t i = 0; i < wiring.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(wiring[i]);
  }
  return out;
}

inline std::vector<std::size_t> parse_wiring(std::string_view text) {
  std::vector<std::size_t> out;
  std::string item;
  std::istringstream in{std::string(text)};
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw DomainError("empty entry in P-box wiring list");
    const auto token = item.substr(b, e - b + 1);
    std::size_t value = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
      throw DomainError("P-box wiring entry is not an index: " + token);
    }
    out.push_back(value);
  }
  return out;
}

} // namespace sentinel::pbox
