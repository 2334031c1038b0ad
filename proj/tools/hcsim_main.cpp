// hcsim command line: run scenarios, list built-ins, audit traces with an
// adversary model, verify trace integrity and metrics.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "hcsim/scenario_text.hpp"
#include "hcsim/scenarios.hpp"

namespace {

using namespace hcsim;

std::string short_hash(const std::string& text) {
  const auto digest = sha512(to_bytes(text));
  return hex_encode(digest).substr(0, 16);
}

Result<std::string> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return make_error(Errc::malformed_trace, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

bool write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) return false;
  out << content;
  return static_cast<bool>(out);
}

Result<Scenario> load_scenario(const std::string& ref) {
  if (std::filesystem::exists(ref)) {
    auto text = read_file(ref);
    if (!text.ok()) return text.error();
    return parse_scenario(text.value());
  }
  if (auto builtin = find_builtin(ref)) return *builtin;
  return make_error(Errc::scenario_invalid,
                    "'" + ref + "' is neither a scenario file nor a built-in (try 'list')");
}

int cmd_list() {
  for (const auto& s : builtin_scenarios()) {
    std::cout << s.name << "  (nodes=" << s.nodes.size() << " services=" << s.services.size()
              << " actions=" << s.actions.size() << ")\n";
  }
  return 0;
}

int cmd_run(const std::string& ref, std::uint64_t seed, const std::string& trace_path,
            const std::string& metrics_path) {
  auto scenario = load_scenario(ref);
  if (!scenario.ok()) {
    std::cerr << "run: scenario: " << scenario.error().message << "\n";
    return 1;
  }
  auto result = run_scenario(scenario.value(), seed);
  if (!result.ok()) {
    std::cerr << "run: " << errc_name(result.error().code) << ": " << result.error().message
              << "\n";
    return 1;
  }
  const RunResult& run = result.value();
  if (!trace_path.empty() && !write_file(trace_path, run.trace_text)) {
    std::cerr << "run: cannot write trace to " << trace_path << "\n";
    return 1;
  }
  const std::string metrics_text = serialize_metrics(run.metrics);
  if (!metrics_path.empty() && !write_file(metrics_path, metrics_text)) {
    std::cerr << "run: cannot write metrics to " << metrics_path << "\n";
    return 1;
  }
  std::cout << "scenario " << scenario.value().name << " seed " << seed << ": "
            << run.records.size() << " trace records, hash " << short_hash(run.trace_text)
            << "\n";
  std::cout << metrics_text;
  return 0;
}

int cmd_audit(const std::string& trace_path, const std::string& adversary_name, std::int64_t dt_ms,
              double dd_m) {
  auto text = read_file(trace_path);
  if (!text.ok()) {
    std::cerr << "audit: " << text.error().message << "\n";
    return 1;
  }
  auto records = parse_trace(text.value());
  if (!records.ok()) {
    std::cerr << "audit: " << records.error().message << "\n";
    return 1;
  }
  std::vector<Observation> observations;
  PseudonymGroundTruth truth;
  for (const auto& r : records.value()) {
    if (r.event == "send") {
      const auto* pseudonym = r.find("pseudonym");
      const auto* service = r.find("service");
      const auto* x = r.find("x");
      const auto* y = r.find("y");
      if (!pseudonym || !service || !x || !y) continue;
      const auto raw = hex_decode(*pseudonym);
      const auto px = parse_double(*x);
      const auto py = parse_double(*y);
      if (!raw || raw->size() != 16 || !px || !py) continue;
      PseudonymId pid;
      std::copy(raw->begin(), raw->end(), pid.bytes.begin());
      observations.push_back({pid, *service, GeoPosition{*px, *py}, r.at});
    } else if (r.event == "issue") {
      const auto* node = r.find("node");
      const auto* pseudonym = r.find("pseudonym");
      if (!node || !pseudonym) continue;
      const auto id = node_id_from_string(*node);
      const auto raw = hex_decode(*pseudonym);
      if (!id || !raw || raw->size() != 16) continue;
      PseudonymId pid;
      std::copy(raw->begin(), raw->end(), pid.bytes.begin());
      truth[pid] = *id;
    }
  }

  Adversary adversary = IdentifierEqualityAdversary{};
  if (adversary_name == "spatio_temporal") {
    adversary = SpatioTemporalAdversary{dt_ms, dd_m};
  } else if (adversary_name != "identifier_equality") {
    std::cerr << "audit: unknown adversary '" << adversary_name
              << "' (identifier_equality | spatio_temporal)\n";
    return 1;
  }
  auto report = analyze_linkability(observations, adversary, truth);
  if (!report.ok()) {
    std::cerr << "audit: " << errc_name(report.error().code) << ": " << report.error().message
              << "\n";
    return 1;
  }
  const LinkabilityReport& lr = report.value();
  std::cout << "adversary " << lr.adversary << "\n"
            << "observations " << observations.size() << "\n"
            << "true_links " << lr.true_link_count << "\n"
            << "candidates " << lr.candidate_count << "\n"
            << "correct " << lr.correct_count << "\n"
            << "precision " << format_double(lr.precision) << "\n"
            << "recall " << format_double(lr.recall) << "\n";
  for (const auto& [a, b] : lr.candidate_links) {
    std::cout << "link " << a.hex() << " " << b.hex() << "\n";
  }
  return 0;
}

int cmd_verify(const std::string& trace_path, const std::string& metrics_path) {
  auto text = read_file(trace_path);
  if (!text.ok()) {
    std::cerr << "verify: parse: " << text.error().message << "\n";
    return 1;
  }
  auto records = parse_trace(text.value());
  if (!records.ok()) {
    std::cerr << "verify: parse: " << records.error().message << "\n";
    return 1;
  }
  std::cout << "ok parse (" << records.value().size() << " records)\n";

  if (const auto structure = verify_trace_structure(records.value()); !structure.ok()) {
    std::cerr << "verify: structure: " << structure.error().message << "\n";
    return 1;
  }
  std::cout << "ok structure\n";

  auto recomputed = recompute_metrics(records.value());
  if (!recomputed.ok()) {
    std::cerr << "verify: metrics: " << recomputed.error().message << "\n";
    return 1;
  }
  const auto transparency = recomputed.value().protection_goals.find("transparency");
  if (transparency == recomputed.value().protection_goals.end() || !transparency->second) {
    std::cerr << "verify: chains: a transparency log chain does not verify\n";
    return 1;
  }
  std::cout << "ok chains\n";
  std::cout << "ok metrics recomputation\n";

  if (!metrics_path.empty()) {
    auto metrics_text = read_file(metrics_path);
    if (!metrics_text.ok()) {
      std::cerr << "verify: metrics-file: " << metrics_text.error().message << "\n";
      return 1;
    }
    auto expected = parse_metrics(metrics_text.value());
    if (!expected.ok()) {
      std::cerr << "verify: metrics-file: " << expected.error().message << "\n";
      return 1;
    }
    if (!(expected.value() == recomputed.value())) {
      std::cerr << "verify: metrics-match: emitted metrics differ from trace recomputation\n";
      return 1;
    }
    std::cout << "ok metrics match\n";
  }
  std::cout << "trace verified, hash " << short_hash(text.value()) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hcsim - deterministic hybrid C-ITS communication simulator"};
  app.require_subcommand(1);

  auto* list = app.add_subcommand("list", "list built-in scenarios");

  std::string scenario_ref;
  std::uint64_t seed = 1;
  std::string trace_path;
  std::string metrics_path;
  auto* run = app.add_subcommand("run", "run a scenario (file path or built-in name)");
  run->add_option("scenario", scenario_ref, "scenario file or built-in name")->required();
  run->add_option("--seed", seed, "platform randomness seed (default 1)");
  run->add_option("--trace", trace_path, "write the trace to this file");
  run->add_option("--metrics", metrics_path, "write metrics to this file");

  std::string audit_trace;
  std::string adversary = "identifier_equality";
  std::int64_t dt_ms = 5'000;
  double dd_m = 50.0;
  auto* audit = app.add_subcommand("audit", "run a linkability adversary over a trace");
  audit->add_option("trace", audit_trace, "trace file")->required();
  audit->add_option("--adversary", adversary, "identifier_equality | spatio_temporal");
  audit->add_option("--dt", dt_ms, "spatio-temporal time threshold (ms)");
  audit->add_option("--dd", dd_m, "spatio-temporal distance threshold (m)");

  std::string verify_trace;
  std::string verify_metrics;
  auto* verify = app.add_subcommand("verify", "check trace structure, chains and metrics");
  verify->add_option("trace", verify_trace, "trace file")->required();
  verify->add_option("--metrics", verify_metrics, "compare against this metrics file");

  CLI11_PARSE(app, argc, argv);

  if (list->parsed()) return cmd_list();
  if (run->parsed()) return cmd_run(scenario_ref, seed, trace_path, metrics_path);
  if (audit->parsed()) return cmd_audit(audit_trace, adversary, dt_ms, dd_m);
  if (verify->parsed()) return cmd_verify(verify_trace, verify_metrics);
  return 1;
}
