// sentinel-mesh: run, validate or trace a scenario file.
//
// Exit codes: 0 success, 1 invalid scenario or arguments, 2 I/O error.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "sentinel/report.hpp"
#include "sentinel/scenario.hpp"
#include "sentinel/sim.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kIoError = 2;

using sentinel::sim::Scenario;

// Loads and validates; prints every violation to stderr.
std::optional<Scenario> load_valid(const std::string& path, int& code) {
  Scenario s;
  try {
    s = sentinel::sim::load_scenario(path);
  } catch (const sentinel::sim::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    code = kIoError;
    return std::nullopt;
  }
  const auto violations = sentinel::sim::validate(s);
  if (!violations.empty()) {
    for (const auto& v : violations) std::cerr << path << ": " << v << "\n";
    code = kInvalid;
    return std::nullopt;
  }
  return s;
}

int write_output(const std::string& text, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << text;
    return std::cout ? kOk : kIoError;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f) {
    std::cerr << "error: cannot write " << out << "\n";
    return kIoError;
  }
  f << text;
  f.close();
  if (!f) {
    std::cerr << "error: cannot write " << out << "\n";
    return kIoError;
  }
  return kOk;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Secure sensor-network simulator"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::optional<std::uint64_t> seed;
  std::string format = "text";
  std::string out;

  auto* run = app.add_subcommand("run", "Run a scenario and write the metrics report");
  run->add_option("--scenario", scenario_path, "Scenario file")->required();
  run->add_option("--seed", seed, "Seed (defaults to the scenario's)");
  run->add_option("--format", format, "Report format")->check(CLI::IsMember({"text", "csv", "json"}));
  run->add_option("--out", out, "Output path (stdout when omitted)");

  auto* validate = app.add_subcommand("validate", "List every problem in a scenario");
  validate->add_option("--scenario", scenario_path, "Scenario file")->required();

  auto* trace = app.add_subcommand("trace", "Print the protocol transcript of a run");
  trace->add_option("--scenario", scenario_path, "Scenario file")->required();
  trace->add_option("--seed", seed, "Seed (defaults to the scenario's)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInvalid;
  }

  int code = kOk;
  auto scenario = load_valid(scenario_path, code);
  if (!scenario) return code;

  if (validate->parsed()) {
    std::cout << scenario_path << ": ok (" << scenario->nodes.size() << " nodes, " << scenario->events.size()
              << " events)\n";
    return kOk;
  }

  const auto report = sentinel::sim::run(*scenario, seed);
  if (trace->parsed()) {
    std::string text;
    for (const auto& l : report.transcript) text += l + "\n";
    return write_output(text, "");
  }
  return write_output(
      sentinel::sim::format_report(report, sentinel::sim::report_format_from_string(format)), out);
}
