#pragma once

// RunReport serialization. All three formats are byte-stable for a given
// report: maps iterate in key order and numbers use fixed printf formats.

#include <cstdio>
#include <sstream>
#include <string>
#include <string_view>

#include "json.hpp"
#include "sentinel/radio.hpp"
#include "sentinel/sim.hpp"

namespace sentinel::sim {

enum class ReportFormat { TEXT, CSV, JSON };

inline ReportFormat report_format_from_string(std::string_view s) {
  if (s == "text") return ReportFormat::TEXT;
  if (s == "csv") return ReportFormat::CSV;
  if (s == "json") return ReportFormat::JSON;
  throw DomainError("unknown report format '" + std::string(s) + "' (text, csv or json)");
}

namespace detail {

inline std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// Six significant digits, as powers are reported.
inline std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.5e", v);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string yes_no(bool b) { return b ? "yes" : "no"; }

} // namespace detail

inline std::string format_text(const RunReport& r) {
  using detail::fixed;
  std::ostringstream o;
  o << "scenario " << r.scenario << "  seed " << r.seed << "\n\n";
  o << "data\n";
  o << "  sent              " << r.data_sent << "\n";
  o << "  delivered         " << r.delivered << "\n";
  o << "  dropped_no_route  " << r.dropped_no_route << "\n";
  o << "  dropped_no_match  " << r.dropped_no_match << "\n";
  o << "  intercepted       " << r.intercepted << "\n";
  o << "  delivery_ratio    " << fixed(r.delivery_ratio) << "\n";
  o << "  interests_sent    " << r.interests_sent << " (" << r.interest_deliveries << " node deliveries)\n";
  o << "  compromised_reads " << r.compromised_reads << "\n\n";

  o << "rekeying\n";
  if (r.rekeys.empty()) o << "  none\n";
  for (const auto& k : r.rekeys) o << "  t=" << k.tick << " " << k.kind << " " << k.member << ": " << k.messages << " messages\n";
  o << "\nverification\n";
  if (r.verifications.empty()) o << "  none\n";
  for (const auto& v : r.verifications) o << "  t=" << v.tick << " " << v.a << " " << v.b << ": " << (v.ok ? "ok" : "failed") << "\n";
  o << "\nreplays\n";
  if (r.replays.empty()) o << "  none\n";
  for (const auto& p : r.replays) {
    o << "  t=" << p.tick << " " << p.adversary << " as " << p.victim << " (" << exchange::to_string(p.mode)
      << "): " << (p.accepted ? "accepted" : "rejected") << "\n";
  }
  o << "\naggregates\n";
  if (r.aggregates.empty()) o << "  none\n";
  for (const auto& a : r.aggregates) {
    o << "  epoch " << a.epoch << ": " << a.readings << " readings, plaintext " << a.plaintext_sum << ", decrypted "
      << a.decrypted_sum << "\n";
  }

  o << "\naddresses\n";
  for (const auto& [addr, count] : r.address_histogram) o << "  " << addr << ": " << count << " nodes\n";
  for (const auto& [node, addr] : r.addresses) o << "  " << node << " = " << addr << "\n";

  o << "\nnodes\n";
  for (const auto& [node, state] : r.node_states) {
    o << "  " << node << " " << state;
    if (auto it = r.compromised.find(node); it != r.compromised.end()) o << " (compromised by " << it->second << ")";
    o << "\n";
  }
  for (const auto& [adv, heard] : r.adversary_neighbors) {
    o << "  adversary " << adv << " hears " << heard.size() << " nodes\n";
  }

  o << "\nlinks\n";
  for (const auto& l : r.links) {
    o << "  " << l.from << " -> " << l.to << "  " << detail::sci(l.power_mw) << " mW  "
      << fixed(radio::to_dbm(l.power_mw), 2) << " dBm\n";
  }

  o << "\nevents\n";
  for (const auto& e : r.events) {
    o << "  t=" << e.tick << " " << e.kind << " lines " << e.first_line << "+" << e.line_count << " " << e.status << "\n";
  }
  o << "\ntranscript\n";
  for (const auto& l : r.transcript) o << "  " << l << "\n";
  o << "\nerrors\n";
  if (r.errors.empty()) o << "  none\n";
  for (const auto& e : r.errors) o << "  " << e << "\n";
  return o.str();
}

// Long format: one "section,key,value" row per fact.
inline std::string format_csv(const RunReport& r) {
  using detail::csv_field;
  std::ostringstream o;
  auto row = [&](std::string_view section, const std::string& key, const std::string& value) {
    o << section << ',' << csv_field(key) << ',' << csv_field(value) << '\n';
  };
  o << "section,key,value\n";
  row("run", "scenario", r.scenario);
  row("run", "seed", std::to_string(r.seed));
  row("data", "sent", std::to_string(r.data_sent));
  row("data", "delivered", std::to_string(r.delivered));
  row("data", "dropped_no_route", std::to_string(r.dropped_no_route));
  row("data", "dropped_no_match", std::to_string(r.dropped_no_match));
  row("data", "intercepted", std::to_string(r.intercepted));
  row("data", "delivery_ratio", detail::fixed(r.delivery_ratio));
  row("data", "interests_sent", std::to_string(r.interests_sent));
  row("data", "interest_deliveries", std::to_string(r.interest_deliveries));
  row("data", "compromised_reads", std::to_string(r.compromised_reads));
  for (const auto& k : r.rekeys) {
    row("rekey", std::to_string(k.tick) + " " + k.kind + " " + k.member, std::to_string(k.messages));
  }
  for (const auto& v : r.verifications) row("verify", std::to_string(v.tick) + " " + v.a + " " + v.b, detail::yes_no(v.ok));
  for (const auto& p : r.replays) {
    row("replay", std::to_string(p.tick) + " " + p.adversary + " " + p.victim + " " + std::string(exchange::to_string(p.mode)),
        p.accepted ? "accepted" : "rejected");
  }
  for (const auto& a : r.aggregates) {
    row("aggregate", "epoch " + std::to_string(a.epoch),
        std::to_string(a.readings) + " " + std::to_string(a.plaintext_sum) + " " + std::to_string(a.decrypted_sum));
  }
  for (const auto& [addr, count] : r.address_histogram) row("address_histogram", std::to_string(addr), std::to_string(count));
  for (const auto& [node, addr] : r.addresses) row("address", node, std::to_string(addr));
  for (const auto& [node, state] : r.node_states) row("node", node, state);
  for (const auto& [node, adv] : r.compromised) row("compromised", node, adv);
  for (const auto& l : r.links) {
    row("link", l.from + " -> " + l.to, detail::sci(l.power_mw) + " mW " + detail::fixed(radio::to_dbm(l.power_mw), 2) + " dBm");
  }
  for (const auto& e : r.events) {
    row("event", std::to_string(e.tick) + " " + e.kind,
        std::to_string(e.first_line) + "+" + std::to_string(e.line_count) + " " + e.status);
  }
  for (std::size_t i = 0; i < r.transcript.size(); ++i) row("transcript", std::to_string(i), r.transcript[i]);
  for (std::size_t i = 0; i < r.errors.size(); ++i) row("error", std::to_string(i), r.errors[i]);
  return o.str();
}

inline nlohmann::ordered_json to_json(const RunReport& r) {
  nlohmann::ordered_json j;
  j["scenario"] = r.scenario;
  j["seed"] = r.seed;
  j["data"] = {{"sent", r.data_sent},
               {"delivered", r.delivered},
               {"dropped_no_route", r.dropped_no_route},
               {"dropped_no_match", r.dropped_no_match},
               {"intercepted", r.intercepted},
               {"delivery_ratio", r.delivery_ratio},
               {"interests_sent", r.interests_sent},
               {"interest_deliveries", r.interest_deliveries},
               {"compromised_reads", r.compromised_reads}};
  j["rekeys"] = nlohmann::ordered_json::array();
  for (const auto& k : r.rekeys) {
    j["rekeys"].push_back({{"tick", k.tick}, {"kind", k.kind}, {"member", k.member}, {"messages", k.messages}});
  }
  j["verifications"] = nlohmann::ordered_json::array();
  for (const auto& v : r.verifications) j["verifications"].push_back({{"tick", v.tick}, {"a", v.a}, {"b", v.b}, {"ok", v.ok}});
  j["replays"] = nlohmann::ordered_json::array();
  for (const auto& p : r.replays) {
    j["replays"].push_back({{"tick", p.tick},
                            {"adversary", p.adversary},
                            {"victim", p.victim},
                            {"mode", std::string(exchange::to_string(p.mode))},
                            {"accepted", p.accepted}});
  }
  j["aggregates"] = nlohmann::ordered_json::array();
  for (const auto& a : r.aggregates) {
    j["aggregates"].push_back({{"epoch", a.epoch},
                               {"readings", a.readings},
                               {"plaintext_sum", a.plaintext_sum},
                               {"decrypted_sum", a.decrypted_sum}});
  }
  j["address_histogram"] = nlohmann::ordered_json::object();
  for (const auto& [addr, count] : r.address_histogram) j["address_histogram"][std::to_string(addr)] = count;
  j["addresses"] = r.addresses;
  j["node_states"] = r.node_states;
  j["compromised"] = r.compromised;
  j["adversary_neighbors"] = nlohmann::ordered_json::object();
  for (const auto& [adv, heard] : r.adversary_neighbors) j["adversary_neighbors"][adv] = heard;
  j["links"] = nlohmann::ordered_json::array();
  for (const auto& l : r.links) {
    j["links"].push_back({{"from", l.from},
                          {"to", l.to},
                          {"power_mw", detail::sci(l.power_mw)},
                          {"power_dbm", detail::fixed(radio::to_dbm(l.power_mw), 2)}});
  }
  j["events"] = nlohmann::ordered_json::array();
  for (const auto& e : r.events) {
    j["events"].push_back({{"tick", e.tick},
                           {"kind", e.kind},
                           {"text", e.text},
                           {"first_line", e.first_line},
                           {"line_count", e.line_count},
                           {"status", e.status}});
  }
  j["transcript"] = r.transcript;
  j["errors"] = r.errors;
  return j;
}

inline std::string format_json(const RunReport& r) { return to_json(r).dump(2) + "\n"; }

inline std::string format_report(const RunReport& r, ReportFormat f) {
  switch (f) {
  case ReportFormat::TEXT: return format_text(r);
  case ReportFormat::CSV: return format_csv(r);
  case ReportFormat::JSON: return format_json(r);
  }
  return {};
}

} // namespace sentinel::sim
