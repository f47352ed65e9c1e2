#pragma once

// Path-loss link budget, connectivity derivation and ON-OFF keying.
//
// Power is linear milliwatts everywhere; to_dbm() exists only for reporting.

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "sentinel/bits.hpp"
#include "sentinel/errors.hpp"

namespace sentinel::radio {

struct RadioParams {
  double tx_power_mw = 1.0;
  double gain_tx = 1.0;
  double gain_rx = 1.0;
  double wavelength_m = 0.125; // 2.4 GHz
  double system_loss = 1.0;
  double far_field_m = 1.0;
  double path_loss_exponent = 2.0;
  double rx_sensitivity_mw = 1e-6;

  // Returns a description of every violated invariant; empty when valid.
  std::vector<std::string> violations() const {
    std::vector<std::string> out;
    if (!(tx_power_mw > 0)) out.emplace_back("tx_power_mw must be > 0");
    if (!(gain_tx > 0)) out.emplace_back("gain_tx must be > 0");
    if (!(gain_rx > 0)) out.emplace_back("gain_rx must be > 0");
    if (!(wavelength_m > 0)) out.emplace_back("wavelength_m must be > 0");
    if (!(system_loss >= 1)) out.emplace_back("system_loss must be >= 1");
    if (!(far_field_m > 0)) out.emplace_back("far_field_m must be > 0");
    if (!(path_loss_exponent > 0)) out.emplace_back("path_loss_exponent must be > 0");
    if (!(rx_sensitivity_mw > 0)) out.emplace_back("rx_sensitivity_mw must be > 0");
    return out;
  }

  void validate() const {
    if (auto v = violations(); !v.empty()) throw ConfigError("radio params: " + v.front());
  }
};

// Free space at 2.4 GHz with a 1 m far field.
inline RadioParams free_space_preset() { return RadioParams{}; }

// Cluttered indoor propagation; same link budget, steeper decay.
inline RadioParams indoor_preset() {
  RadioParams p;
  p.path_loss_exponent = 3.0;
  p.rx_sensitivity_mw = 1e-8;
  return p;
}

inline double to_dbm(double power_mw) { return 10.0 * std::log10(power_mw); }

inline void require_far_field(const RadioParams& params, double distance_m) {
  if (!(distance_m >= params.far_field_m)) {
    throw DomainError("distance_m must be >= far_field_m (d >= d0); got " + std::to_string(distance_m) +
                      " < " + std::to_string(params.far_field_m));
  }
}

inline double friis_received_power(const RadioParams& params, double distance_m) {
  require_far_field(params, distance_m);
  const double four_pi = 4.0 * std::numbers::pi;
  return params.tx_power_mw * params.gain_tx * params.gain_rx * params.wavelength_m * params.wavelength_m /
         (four_pi * four_pi * distance_m * distance_m * params.system_loss);
}

inline double log_distance_received_power(const RadioParams& params, double distance_m) {
  require_far_field(params, distance_m);
  const double at_far_field = friis_received_power(params, params.far_field_m);
  return at_far_field * std::pow(params.far_field_m / distance_m, params.path_loss_exponent);
}

struct NodePosition {
  std::string node_id;
  double x_m = 0;
  double y_m = 0;
};

inline double distance(const NodePosition& a, const NodePosition& b) {
  return std::hypot(a.x_m - b.x_m, a.y_m - b.y_m);
}

struct Link {
  std::string from;
  std::string to;
  double power_mw = 0;
};

// Directed connectivity graph. Node order is the order positions were given.
class Topology {
public:
  Topology() = default;

  Topology(std::vector<NodePosition> positions, std::vector<Link> links)
      : positions_(std::move(positions)), links_(std::move(links)) {
    for (std::size_t i = 0; i < positions_.size(); ++i) index_.emplace(positions_[i].node_id, i);
    std::sort(links_.begin(), links_.end(), [](const Link& a, const Link& b) {
      return std::tie(a.from, a.to) < std::tie(b.from, b.to);
    });
    for (const auto& l : links_) {
      out_[l.from].insert(l.to);
      in_[l.to].insert(l.from);
    }
  }

  const std::vector<NodePosition>& positions() const { return positions_; }
  const std::vector<Link>& links() const { return links_; }

  bool contains(std::string_view id) const { return index_.find(std::string(id)) != index_.end(); }

  const NodePosition& position(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) throw DomainError("unknown node: " + std::string(id));
    return positions_[it->second];
  }

  bool has_link(std::string_view from, std::string_view to) const {
    auto it = out_.find(std::string(from));
    return it != out_.end() && it->second.count(std::string(to)) > 0;
  }

  std::optional<double> link_power(std::string_view from, std::string_view to) const {
    auto it = std::find_if(links_.begin(), links_.end(),
                           [&](const Link& l) { return l.from == from && l.to == to; });
    if (it != links_.end()) return it->power_mw;
    return std::nullopt;
  }

  const std::set<std::string>& out_neighbors(std::string_view id) const { return lookup(out_, id); }
  const std::set<std::string>& in_neighbors(std::string_view id) const { return lookup(in_, id); }

  // Copy with the given nodes and every link touching them removed.
  Topology without(const std::set<std::string>& excluded) const {
    std::vector<NodePosition> pos;
    std::vector<Link> links;
    for (const auto& p : positions_)
      if (!excluded.count(p.node_id)) pos.push_back(p);
    for (const auto& l : links_)
      if (!excluded.count(l.from) && !excluded.count(l.to)) links.push_back(l);
    return Topology(std::move(pos), std::move(links));
  }

  bool operator==(const Topology& other) const {
    if (links_.size() != other.links_.size()) return false;
    for (std::size_t i = 0; i < links_.size(); ++i) {
      const auto& a = links_[i];
      const auto& b = other.links_[i];
      if (a.from != b.from || a.to != b.to || a.power_mw != b.power_mw) return false;
    }
    return true;
  }

private:
  static const std::set<std::string>& lookup(const std::map<std::string, std::set<std::string>>& m,
                                             std::string_view id) {
    static const std::set<std::string> empty;
    auto it = m.find(std::string(id));
    return it == m.end() ? empty : it->second;
  }

  std::vector<NodePosition> positions_;
  std::vector<Link> links_;
  std::map<std::string, std::size_t> index_;
  std::map<std::string, std::set<std::string>> out_;
  std::map<std::string, std::set<std::string>> in_;
};

// Link a->b exists iff the power received at b meets b's sensitivity. Pairs
// closer than the far-field distance are always linked, annotated with the
// power at the far-field distance.
inline Topology build_topology(const RadioParams& params, const std::vector<NodePosition>& positions,
                               const std::map<std::string, double>& rx_sensitivity_overrides = {}) {
  params.validate();
  if (positions.empty()) throw ConfigError("topology needs at least one node");
  std::set<std::string> seen;
  for (const auto& p : positions) {
    if (!seen.insert(p.node_id).second) throw ConfigError("duplicate node id: " + p.node_id);
  }
  for (const auto& [id, s] : rx_sensitivity_overrides) {
    if (!seen.count(id)) throw ConfigError("sensitivity override for unknown node: " + id);
    if (!(s > 0)) throw ConfigError("rx sensitivity must be > 0 for node " + id);
  }

  std::vector<Link> links;
  for (const auto& a : positions) {
    for (const auto& b : positions) {
      if (a.node_id == b.node_id) continue;
      const double d = distance(a, b);
      if (d < params.far_field_m) {
        links.push_back({a.node_id, b.node_id, log_distance_received_power(params, params.far_field_m)});
        continue;
      }
      const double power = log_distance_received_power(params, d);
      auto ov = rx_sensitivity_overrides.find(b.node_id);
      const double threshold = ov == rx_sensitivity_overrides.end() ? params.rx_sensitivity_mw : ov->second;
      if (power >= threshold) links.push_back({a.node_id, b.node_id, power});
    }
  }
  return Topology(positions, std::move(links));
}

struct OokWaveform {
  std::vector<double> symbol_energies;
  bool operator==(const OokWaveform&) const = default;
};

inline void require_energy_levels(double e0, double e1) {
  if (!(e0 < e1)) throw DomainError("OOK requires e0 < e1");
}

inline OokWaveform ook_modulate(const Bits& bits, double e0 = 0.0, double e1 = 1.0) {
  require_energy_levels(e0, e1);
  if (bits.empty()) throw DomainError("cannot modulate an empty bit string");
  OokWaveform wave;
  wave.symbol_energies.reserve(bits.size());
  for (bool b : bits) wave.symbol_energies.push_back(b ? e1 : e0);
  return wave;
}

inline OokWaveform ook_modulate(std::string_view bits, double e0 = 0.0, double e1 = 1.0) {
  return ook_modulate(bits_from_string(bits), e0, e1);
}

inline Bits ook_demodulate(const OokWaveform& wave, double e0 = 0.0, double e1 = 1.0) {
  require_energy_levels(e0, e1);
  Bits out;
  out.reserve(wave.symbol_energies.size());
  for (std::size_t i = 0; i < wave.symbol_energies.size(); ++i) {
    const double e = wave.symbol_energies[i];
    if (e == e1) {
      out.push_back(true);
    } else if (e == e0) {
      out.push_back(false);
    } else {
      throw DemodulationError("symbol " + std::to_string(i) + " has energy " + std::to_string(e) +
                              ", which is neither E0 nor E1");
    }
  }
  return out;
}

} // namespace sentinel::radio
