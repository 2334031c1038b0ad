#pragma once

// Trace stream and metrics. A trace is line-delimited: one record per line,
//
//   seq=<n> t=<ms> ev=<event> key=value key=value ...
//
// with fixed key order per event type and percent-escaped values, so a trace
// hashes stably and byte-identical reruns are a meaningful check. Metrics
// are fully recomputable from the trace; recompute_metrics() is the
// independent aggregation used to cross-check the engine's own counters.

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "hcsim/privacy.hpp"
#include "hcsim/result.hpp"
#include "hcsim/transparency.hpp"
#include "hcsim/types.hpp"

namespace hcsim {

struct TraceRecord {
  std::uint64_t sequence{0};
  SimTime at;
  std::string event;
  std::vector<std::pair<std::string, std::string>> fields;  // ordered

  const std::string* find(std::string_view key) const {
    for (const auto& [k, v] : fields) {
      if (k == key) return &v;
    }
    return nullptr;
  }
};

inline std::string serialize_record(const TraceRecord& r) {
  std::string line = "seq=" + std::to_string(r.sequence) + " t=" + std::to_string(r.at.ms) +
                     " ev=" + r.event;
  for (const auto& [k, v] : r.fields) {
    line += " " + k + "=" + escape_token(v);
  }
  return line;
}

inline std::string serialize_trace(const std::vector<TraceRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += serialize_record(r);
    out += '\n';
  }
  return out;
}

inline Result<std::vector<TraceRecord>> parse_trace(std::string_view text) {
  std::vector<TraceRecord> records;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.empty()) continue;
    TraceRecord r;
    bool have_seq = false, have_t = false, have_ev = false;
    std::size_t tok_pos = 0;
    while (tok_pos < line.size()) {
      auto sp = line.find(' ', tok_pos);
      if (sp == std::string_view::npos) sp = line.size();
      const std::string_view token = line.substr(tok_pos, sp - tok_pos);
      tok_pos = sp + 1;
      if (token.empty()) continue;
      const auto eq = token.find('=');
      if (eq == std::string_view::npos) {
        return make_error(Errc::malformed_trace,
                          "line " + std::to_string(line_no) + ": token without '='");
      }
      const std::string_view key = token.substr(0, eq);
      const auto value = unescape_token(token.substr(eq + 1));
      if (!value) {
        return make_error(Errc::malformed_trace,
                          "line " + std::to_string(line_no) + ": bad escape");
      }
      if (key == "seq") {
        const auto v = parse_u64(*value);
        if (!v) return make_error(Errc::malformed_trace, "line " + std::to_string(line_no) + ": bad seq");
        r.sequence = *v;
        have_seq = true;
      } else if (key == "t") {
        const auto v = parse_i64(*value);
        if (!v) return make_error(Errc::malformed_trace, "line " + std::to_string(line_no) + ": bad t");
        r.at = SimTime{*v};
        have_t = true;
      } else if (key == "ev") {
        r.event = *value;
        have_ev = true;
      } else {
        r.fields.emplace_back(std::string(key), *value);
      }
    }
    if (!have_seq || !have_t || !have_ev) {
      return make_error(Errc::malformed_trace,
                        "line " + std::to_string(line_no) + ": missing seq/t/ev");
    }
    records.push_back(std::move(r));
  }
  return records;
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

struct ChannelStats {
  std::uint64_t delivered{0};
  std::uint64_t dropped{0};
  std::uint64_t latency_sum_ms{0};

  auto operator<=>(const ChannelStats&) const = default;

  double mean_latency_ms() const {
    return delivered == 0 ? 0.0
                          : static_cast<double>(latency_sum_ms) / static_cast<double>(delivered);
  }
};

struct AdversaryStats {
  std::uint64_t true_links{0};
  std::uint64_t candidates{0};
  std::uint64_t correct{0};

  auto operator<=>(const AdversaryStats&) const = default;

  double precision() const {
    return candidates == 0 ? 1.0 : static_cast<double>(correct) / static_cast<double>(candidates);
  }
  double recall() const {
    return true_links == 0 ? 1.0 : static_cast<double>(correct) / static_cast<double>(true_links);
  }
};

struct Metrics {
  std::map<std::string, ChannelStats> channels;       // channel name -> stats
  std::uint64_t minimization_violations{0};           // violating (record, field) pairs
  std::map<std::string, AdversaryStats> linkability;  // adversary name -> stats
  std::map<std::string, bool> protection_goals;       // goal name -> pass

  bool operator==(const Metrics&) const = default;
};

inline std::string serialize_metrics(const Metrics& m) {
  std::string out = "metrics v1\n";
  for (const auto& [name, s] : m.channels) {
    out += "channel " + name + " delivered=" + std::to_string(s.delivered) +
           " dropped=" + std::to_string(s.dropped) +
           " latency_sum_ms=" + std::to_string(s.latency_sum_ms) +
           " mean_latency_ms=" + format_double(s.mean_latency_ms()) + "\n";
  }
  out += "minimization violations=" + std::to_string(m.minimization_violations) + "\n";
  for (const auto& [name, s] : m.linkability) {
    out += "linkability " + name + " true_links=" + std::to_string(s.true_links) +
           " candidates=" + std::to_string(s.candidates) +
           " correct=" + std::to_string(s.correct) +
           " precision=" + format_double(s.precision()) +
           " recall=" + format_double(s.recall()) + "\n";
  }
  for (const auto& [name, pass] : m.protection_goals) {
    out += "goal " + name + " pass=" + (pass ? std::string("1") : std::string("0")) + "\n";
  }
  return out;
}

inline Result<Metrics> parse_metrics(std::string_view text) {
  Metrics m;
  std::size_t pos = 0;
  bool first = true;
  const auto fail = [](const std::string& why) {
    return make_error(Errc::malformed_trace, "metrics: " + why);
  };
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (line.empty()) continue;
    std::vector<std::string_view> tokens;
    std::size_t tp = 0;
    while (tp < line.size()) {
      auto sp = line.find(' ', tp);
      if (sp == std::string_view::npos) sp = line.size();
      if (sp > tp) tokens.push_back(line.substr(tp, sp - tp));
      tp = sp + 1;
    }
    if (first) {
      if (line != "metrics v1") return fail("missing version tag");
      first = false;
      continue;
    }
    const auto kv = [&tokens](std::string_view key) -> std::optional<std::string_view> {
      const std::string prefix = std::string(key) + "=";
      for (const auto& t : tokens) {
        if (t.starts_with(prefix)) return t.substr(prefix.size());
      }
      return std::nullopt;
    };
    if (tokens.empty()) continue;
    if (tokens[0] == "channel" && tokens.size() >= 2) {
      ChannelStats s;
      const auto d = kv("delivered");
      const auto dr = kv("dropped");
      const auto ls = kv("latency_sum_ms");
      if (!d || !dr || !ls) return fail("bad channel line");
      const auto dv = parse_u64(*d);
      const auto drv = parse_u64(*dr);
      const auto lsv = parse_u64(*ls);
      if (!dv || !drv || !lsv) return fail("bad channel numbers");
      s.delivered = *dv;
      s.dropped = *drv;
      s.latency_sum_ms = *lsv;
      m.channels[std::string(tokens[1])] = s;
    } else if (tokens[0] == "minimization") {
      const auto v = kv("violations");
      if (!v) return fail("bad minimization line");
      const auto n = parse_u64(*v);
      if (!n) return fail("bad violation count");
      m.minimization_violations = *n;
    } else if (tokens[0] == "linkability" && tokens.size() >= 2) {
      AdversaryStats s;
      const auto t = kv("true_links");
      const auto c = kv("candidates");
      const auto ok = kv("correct");
      if (!t || !c || !ok) return fail("bad linkability line");
      const auto tv = parse_u64(*t);
      const auto cv = parse_u64(*c);
      const auto ov = parse_u64(*ok);
      if (!tv || !cv || !ov) return fail("bad linkability numbers");
      s.true_links = *tv;
      s.candidates = *cv;
      s.correct = *ov;
      m.linkability[std::string(tokens[1])] = s;
    } else if (tokens[0] == "goal" && tokens.size() >= 3) {
      const auto p = kv("pass");
      if (!p) return fail("bad goal line");
      m.protection_goals[std::string(tokens[1])] = (*p == "1");
    } else {
      return fail("unrecognized line");
    }
  }
  if (first) return fail("empty input");
  return m;
}

// ---------------------------------------------------------------------------
// Independent re-aggregation
// ---------------------------------------------------------------------------

namespace detail {

inline std::optional<PseudonymId> pseudonym_from_hex(std::string_view hex) {
  const auto raw = hex_decode(hex);
  if (!raw || raw->size() != 16) return std::nullopt;
  PseudonymId p;
  std::copy(raw->begin(), raw->end(), p.bytes.begin());
  return p;
}

}  // namespace detail

// Rebuilds the metrics purely from trace records. Used as the oracle against
// the engine's emitted metrics and by the `verify` CLI command.
inline Result<Metrics> recompute_metrics(const std::vector<TraceRecord>& records) {
  Metrics m;
  const auto fail = [](const std::string& why) {
    return make_error(Errc::malformed_trace, why);
  };

  // Channel stats and the protection-goal evidence.
  std::map<std::uint64_t, const TraceRecord*> sends;  // msg id -> send record
  for (const auto& r : records) {
    if (r.event != "send") continue;
    const auto* msg = r.find("msg");
    if (!msg) return fail("send without msg id");
    const auto id = parse_u64(*msg);
    if (!id) return fail("bad msg id");
    sends[*id] = &r;
  }

  bool confidentiality = true;
  bool integrity = true;
  bool availability = true;
  bool intervenability = true;

  std::vector<Observation> observations;
  PseudonymGroundTruth truth;

  for (const auto& r : records) {
    if (r.event == "send") {
      const auto* channel = r.find("channel");
      const auto* encrypted = r.find("encrypted");
      const auto* personal = r.find("personal");
      const auto* address = r.find("address");
      const auto* pseudonym = r.find("pseudonym");
      const auto* service = r.find("service");
      const auto* x = r.find("x");
      const auto* y = r.find("y");
      if (!channel || !encrypted || !personal || !address || !pseudonym || !service || !x || !y) {
        return fail("send record missing fields");
      }
      if (address->starts_with("unicast:") && *personal == "1" && *encrypted != "1") {
        confidentiality = false;
      }
      const auto pid = detail::pseudonym_from_hex(*pseudonym);
      const auto px = parse_double(*x);
      const auto py = parse_double(*y);
      if (!pid || !px || !py) return fail("send record malformed");
      observations.push_back({*pid, *service, GeoPosition{*px, *py}, r.at});
    } else if (r.event == "deliver") {
      const auto* channel = r.find("channel");
      const auto* msg = r.find("msg");
      if (!channel || !msg) return fail("deliver record missing fields");
      auto& stats = m.channels[*channel];
      stats.delivered += 1;
      const auto id = parse_u64(*msg);
      if (!id) return fail("bad msg id");
      const auto send_it = sends.find(*id);
      if (send_it == sends.end()) return fail("deliver without matching send");
      stats.latency_sum_ms += static_cast<std::uint64_t>(r.at.ms - send_it->second->at.ms);
      if (const auto* tamper = send_it->second->find("tamper"); tamper && *tamper == "1") {
        integrity = false;  // a tampered message must never be delivered
      }
    } else if (r.event == "drop") {
      const auto* channel = r.find("channel");
      if (!channel) return fail("drop record missing channel");
      m.channels[*channel].dropped += 1;
    } else if (r.event == "violation") {
      const auto* fields = r.find("fields");
      if (!fields) return fail("violation record missing fields");
      // comma-separated list of offending field names
      std::size_t count = fields->empty() ? 0 : 1;
      for (const char c : *fields) {
        if (c == ',') ++count;
      }
      m.minimization_violations += count;
    } else if (r.event == "issue") {
      const auto* node = r.find("node");
      const auto* pseudonym = r.find("pseudonym");
      if (!node || !pseudonym) return fail("issue record missing fields");
      const auto id = node_id_from_string(*node);
      const auto pid = detail::pseudonym_from_hex(*pseudonym);
      if (!id || !pid) return fail("issue record malformed");
      truth[*pid] = *id;
    } else if (r.event == "error") {
      const auto* reason = r.find("reason");
      if (reason && *reason == errc_name(Errc::no_viable_channel)) availability = false;
    } else if (r.event == "subject_request" || r.event == "transfer" || r.event == "mediate") {
      const auto* outcome = r.find("outcome");
      if (!outcome) return fail(r.event + " record missing outcome");
      if (*outcome != "ok") intervenability = false;
      if (r.event == "mediate") {
        if (const auto* errors = r.find("errors"); errors && *errors != "0") {
          intervenability = false;
        }
      }
    }
  }

  // Transparency: group embedded log entries by log id and re-verify every
  // hash chain from genesis.
  bool transparency = true;
  std::map<std::string, std::vector<TransparencyLogEntry>> logs;
  for (const auto& r : records) {
    if (r.event != "log") continue;
    const auto* log_id = r.find("log");
    const auto* seq = r.find("entry");
    const auto* actor = r.find("actor");
    const auto* subject = r.find("subject");
    const auto* op = r.find("op");
    const auto* purpose = r.find("purpose");
    const auto* hash = r.find("hash");
    if (!log_id || !seq || !actor || !subject || !op || !purpose || !hash) {
      return fail("log record missing fields");
    }
    TransparencyLogEntry e;
    const auto seq_v = parse_u64(*seq);
    if (!seq_v) return fail("bad log entry seq");
    e.sequence = *seq_v;
    e.actor = *actor;
    const auto subject_id = detail::pseudonym_from_hex(*subject);
    if (!subject_id) return fail("bad log subject");
    e.subject = *subject_id;
    e.operation = *op;
    e.purpose = PurposeTag{*purpose};
    e.at = r.at;
    const auto hash_raw = hex_decode(*hash);
    if (!hash_raw || hash_raw->size() != 64) return fail("bad log hash");
    std::copy(hash_raw->begin(), hash_raw->end(), e.chain_hash.begin());
    logs[*log_id].push_back(std::move(e));
  }
  for (auto& [id, entries] : logs) {
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.sequence < b.sequence; });
    if (!verify_chain(entries)) transparency = false;
  }

  // Linkability, from the air-interface observations embedded in the trace.
  bool unlinkability = true;
  if (!observations.empty()) {
    for (const Adversary adversary :
         {Adversary{IdentifierEqualityAdversary{}}, Adversary{SpatioTemporalAdversary{}}}) {
      auto report = analyze_linkability(observations, adversary, truth);
      if (!report.ok()) return report.error();
      AdversaryStats s;
      s.true_links = report.value().true_link_count;
      s.candidates = report.value().candidate_count;
      s.correct = report.value().correct_count;
      m.linkability[report.value().adversary] = s;
    }
    unlinkability = m.linkability["identifier_equality"].correct == 0;
  }

  m.protection_goals[std::string(protection_goal_name(ProtectionGoal::Confidentiality))] =
      confidentiality;
  m.protection_goals[std::string(protection_goal_name(ProtectionGoal::Integrity))] = integrity;
  m.protection_goals[std::string(protection_goal_name(ProtectionGoal::Availability))] =
      availability;
  m.protection_goals[std::string(protection_goal_name(ProtectionGoal::Unlinkability))] =
      unlinkability;
  m.protection_goals[std::string(protection_goal_name(ProtectionGoal::Transparency))] =
      transparency;
  m.protection_goals[std::string(protection_goal_name(ProtectionGoal::Intervenability))] =
      intervenability;
  return m;
}

// Structural trace checks used by the `verify` command: strictly increasing
// sequence numbers and causal ordering (no deliver/drop before its send).
inline Result<void> verify_trace_structure(const std::vector<TraceRecord>& records) {
  std::optional<std::uint64_t> last_seq;
  std::map<std::uint64_t, SimTime> send_times;
  for (const auto& r : records) {
    if (last_seq && r.sequence <= *last_seq) {
      return make_error(Errc::malformed_trace,
                        "sequence not strictly increasing at seq=" + std::to_string(r.sequence));
    }
    last_seq = r.sequence;
    if (r.event == "send") {
      if (const auto* msg = r.find("msg")) {
        if (const auto id = parse_u64(*msg)) send_times[*id] = r.at;
      }
    } else if (r.event == "deliver" || r.event == "drop") {
      if (const auto* msg = r.find("msg")) {
        if (const auto id = parse_u64(*msg)) {
          const auto it = send_times.find(*id);
          if (it == send_times.end()) {
            return make_error(Errc::malformed_trace,
                              r.event + " before send for msg " + *msg);
          }
          if (r.at < it->second) {
            return make_error(Errc::malformed_trace,
                              r.event + " precedes its send for msg " + *msg);
          }
        }
      }
    }
  }
  return {};
}

}  // namespace hcsim
