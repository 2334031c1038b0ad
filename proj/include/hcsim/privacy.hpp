#pragma once

// Privacy layer: the six protection goals made operational. Data
// minimization checks against declared schemas, provider-side stores with
// full subject rights (review / correct / delete / export), portability
// bundles, a stateless single-point-of-contact mediator, and the adversarial
// linkability analyzer used to audit pseudonym policies.

#include <cstdlib>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "hcsim/result.hpp"
#include "hcsim/transparency.hpp"
#include "hcsim/types.hpp"

namespace hcsim {

// ---------------------------------------------------------------------------
// Protection goals
// ---------------------------------------------------------------------------

enum class ProtectionGoal : std::uint8_t {
  Confidentiality,
  Integrity,
  Availability,
  Unlinkability,
  Transparency,
  Intervenability,
};

constexpr std::array<ProtectionGoal, 6> all_protection_goals = {
    ProtectionGoal::Confidentiality, ProtectionGoal::Integrity,    ProtectionGoal::Availability,
    ProtectionGoal::Unlinkability,   ProtectionGoal::Transparency, ProtectionGoal::Intervenability,
};

inline std::string_view protection_goal_name(ProtectionGoal g) {
  switch (g) {
    case ProtectionGoal::Confidentiality: return "confidentiality";
    case ProtectionGoal::Integrity: return "integrity";
    case ProtectionGoal::Availability: return "availability";
    case ProtectionGoal::Unlinkability: return "unlinkability";
    case ProtectionGoal::Transparency: return "transparency";
    case ProtectionGoal::Intervenability: return "intervenability";
  }
  return "?";
}

inline std::optional<ProtectionGoal> protection_goal_from_name(std::string_view s) {
  for (const auto g : all_protection_goals) {
    if (protection_goal_name(g) == s) return g;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Schemas, records, minimization
// ---------------------------------------------------------------------------

// What a service is allowed to collect, and for which declared purpose.
struct DataSchema {
  PurposeTag purpose;
  std::set<std::string> allowed_fields;  // non-empty

  auto operator<=>(const DataSchema&) const = default;

  Result<void> validate() const {
    if (purpose.value.empty()) return make_error(Errc::scenario_invalid, "schema purpose empty");
    if (allowed_fields.empty()) {
      return make_error(Errc::scenario_invalid, "schema must allow at least one field");
    }
    return {};
  }

  // A service whose schema admits any field handles personal data.
  bool personal() const { return !allowed_fields.empty(); }
};

struct PersonalDataRecord {
  std::uint64_t record_id{0};
  PseudonymId subject;
  ServiceId service;
  PurposeTag purpose;
  std::map<std::string, std::string> fields;
  SimTime stored_at;

  auto operator<=>(const PersonalDataRecord&) const = default;
};

struct MinimizationCheck {
  std::vector<std::string> violations;  // field names outside the allowed set
  bool compliant() const { return violations.empty(); }
};

// Lists exactly the record fields outside the schema's allowed set.
// Purposes must match; a record collected for a different purpose cannot be
// judged against this schema.
inline Result<MinimizationCheck> check_minimization(const PersonalDataRecord& record,
                                                    const DataSchema& schema) {
  if (record.purpose != schema.purpose) {
    return make_error(Errc::purpose_mismatch,
                      "record purpose '" + record.purpose.value + "' does not match schema '" +
                          schema.purpose.value + "'");
  }
  MinimizationCheck check;
  for (const auto& [name, value] : record.fields) {
    if (!schema.allowed_fields.contains(name)) check.violations.push_back(name);
  }
  return check;
}

// ---------------------------------------------------------------------------
// Portability bundle
// ---------------------------------------------------------------------------

// Self-contained export of a subject's records and settings, suitable for
// transfer to another provider. Serialized as a versioned line format:
//
//   portability-bundle v1
//   source-service: <id>
//   exported-at: <ms>
//   setting <name>=<value>
//   record id=<n> purpose=<tag> stored-at=<ms> <field>=<value> ...
//
// Tokens are percent-escaped (see bytes.hpp), one statement per line.
struct PortabilityBundle {
  std::vector<PersonalDataRecord> records;
  std::map<std::string, std::string> settings;
  ServiceId source_service;
  SimTime exported_at;
};

inline std::string serialize_bundle(const PortabilityBundle& b) {
  std::string out = "portability-bundle v1\n";
  out += "source-service: " + escape_token(b.source_service) + "\n";
  out += "exported-at: " + std::to_string(b.exported_at.ms) + "\n";
  for (const auto& [name, value] : b.settings) {
    out += "setting " + escape_token(name) + "=" + escape_token(value) + "\n";
  }
  for (const auto& r : b.records) {
    out += "record id=" + std::to_string(r.record_id) +
           " subject=" + r.subject.hex() +
           " purpose=" + escape_token(r.purpose.value) +
           " stored-at=" + std::to_string(r.stored_at.ms);
    for (const auto& [name, value] : r.fields) {
      out += " " + escape_token(name) + "=" + escape_token(value);
    }
    out += "\n";
  }
  return out;
}

Result<PortabilityBundle> parse_bundle(std::string_view text);  // defined below

// ---------------------------------------------------------------------------
// Provider store and subject rights
// ---------------------------------------------------------------------------

struct ReviewRequest {};
struct CorrectRequest {
  std::uint64_t record_id{0};
  std::string field;
  std::string value;
};
struct DeleteRequest {};
struct ExportRequest {};

using SubjectRequest = std::variant<ReviewRequest, CorrectRequest, DeleteRequest, ExportRequest>;

inline std::string_view subject_request_name(const SubjectRequest& r) {
  if (std::holds_alternative<ReviewRequest>(r)) return "review";
  if (std::holds_alternative<CorrectRequest>(r)) return "correct";
  if (std::holds_alternative<DeleteRequest>(r)) return "delete";
  return "export";
}

struct SubjectOutcome {
  std::vector<PersonalDataRecord> records;      // review results
  std::optional<PortabilityBundle> bundle;      // export result
  std::size_t affected{0};                      // records touched (correct/delete/import)
};

// One service provider's data store. Owns its transparency log; every
// processing step (store, review, correct, delete, export, import) appends
// an entry. The store never sees node identities, only pseudonyms.
class ProviderStore {
 public:
  ProviderStore() : log_("provider") {}
  ProviderStore(ServiceId service, DataSchema schema)
      : service_(std::move(service)), schema_(std::move(schema)), log_("provider:" + service_) {}

  const ServiceId& service() const { return service_; }
  const DataSchema& schema() const { return schema_; }
  const TransparencyLog& log() const { return log_; }

  // Stores whatever the sender supplied, including over-collected fields;
  // minimization is audited, not silently enforced.
  std::uint64_t store_record(PseudonymId subject, std::map<std::string, std::string> fields,
                             SimTime at) {
    PersonalDataRecord r;
    r.record_id = next_record_id_++;
    r.subject = subject;
    r.service = service_;
    r.purpose = schema_.purpose;
    r.fields = std::move(fields);
    r.stored_at = at;
    known_subjects_.insert(subject);
    records_.emplace(r.record_id, r);
    log_.append(service_, subject, "store", schema_.purpose, at);
    return r.record_id;
  }

  void set_setting(PseudonymId subject, std::string name, std::string value, SimTime at) {
    known_subjects_.insert(subject);
    settings_[subject][std::move(name)] = std::move(value);
    log_.append(service_, subject, "settings_update", schema_.purpose, at);
  }

  const std::map<std::uint64_t, PersonalDataRecord>& records() const { return records_; }

  std::vector<PersonalDataRecord> records_of(PseudonymId subject) const {
    std::vector<PersonalDataRecord> out;
    for (const auto& [id, r] : records_) {
      if (r.subject == subject) out.push_back(r);
    }
    return out;
  }

  std::map<std::string, std::string> settings_of(PseudonymId subject) const {
    const auto it = settings_.find(subject);
    return it == settings_.end() ? std::map<std::string, std::string>{} : it->second;
  }

  Result<SubjectOutcome> handle_subject_request(PseudonymId subject, const SubjectRequest& request,
                                                SimTime at) {
    if (!known_subjects_.contains(subject)) {
      return make_error(Errc::unknown_subject, "subject unknown to " + service_);
    }
    SubjectOutcome outcome;
    if (std::holds_alternative<ReviewRequest>(request)) {
      outcome.records = records_of(subject);
      log_.append(service_, subject, "review", schema_.purpose, at);
      return outcome;
    }
    if (const auto* correct = std::get_if<CorrectRequest>(&request)) {
      const auto it = records_.find(correct->record_id);
      if (it == records_.end() || it->second.subject != subject) {
        return make_error(Errc::unknown_record, "no such record for subject");
      }
      it->second.fields[correct->field] = correct->value;
      outcome.affected = 1;
      log_.append(service_, subject, "correct:" + correct->field, schema_.purpose, at);
      return outcome;
    }
    if (std::holds_alternative<DeleteRequest>(request)) {
      for (auto it = records_.begin(); it != records_.end();) {
        if (it->second.subject == subject) {
          it = records_.erase(it);
          ++outcome.affected;
        } else {
          ++it;
        }
      }
      settings_.erase(subject);
      log_.append(service_, subject, "delete", schema_.purpose, at);
      return outcome;
    }
    // Export
    PortabilityBundle bundle;
    bundle.records = records_of(subject);
    bundle.settings = settings_of(subject);
    bundle.source_service = service_;
    bundle.exported_at = at;
    log_.append(service_, subject, "export", schema_.purpose, at);
    outcome.bundle = std::move(bundle);
    return outcome;
  }

  // Imports an exported bundle for `subject`. All-or-nothing: if any record
  // carries a field outside this store's schema, nothing is stored.
  Result<void> import_bundle(PseudonymId subject, const PortabilityBundle& bundle, SimTime at) {
    for (const auto& r : bundle.records) {
      for (const auto& [name, value] : r.fields) {
        if (!schema_.allowed_fields.contains(name)) {
          return make_error(Errc::schema_mismatch,
                            "field '" + name + "' not allowed by " + service_);
        }
      }
    }
    for (const auto& r : bundle.records) {
      PersonalDataRecord copy;
      copy.record_id = next_record_id_++;
      copy.subject = subject;
      copy.service = service_;
      copy.purpose = schema_.purpose;
      copy.fields = r.fields;
      copy.stored_at = at;
      records_.emplace(copy.record_id, std::move(copy));
    }
    auto settings = bundle.settings;
    for (auto& [name, value] : settings) settings_[subject][name] = value;
    known_subjects_.insert(subject);
    log_.append(service_, subject, "import", schema_.purpose, at);
    return {};
  }

 private:
  ServiceId service_{"service"};
  DataSchema schema_;
  TransparencyLog log_;
  std::map<std::uint64_t, PersonalDataRecord> records_;
  std::map<PseudonymId, std::map<std::string, std::string>> settings_;
  std::set<PseudonymId> known_subjects_;
  std::uint64_t next_record_id_{1};
};

// ---------------------------------------------------------------------------
// Single point of contact (mediator)
// ---------------------------------------------------------------------------

struct MediatedResult {
  ServiceId service;
  Result<SubjectOutcome> outcome;
};

// Fans a subject request out to providers and aggregates per-provider
// outcomes. Stateless apart from its own transparency entries: holding
// subject data here would recreate exactly the central store the
// architecture avoids. The subject authenticates with one pseudonym per
// provider.
class DataProtectionContact {
 public:
  DataProtectionContact() : log_("mediator") {}

  const TransparencyLog& log() const { return log_; }

  std::vector<MediatedResult> mediate(
      const std::map<ServiceId, PseudonymId>& subject_credentials,
      std::map<ServiceId, ProviderStore*>& providers, const std::vector<ServiceId>& targets,
      const SubjectRequest& request, SimTime at) {
    std::vector<MediatedResult> results;
    results.reserve(targets.size());
    for (const auto& service : targets) {
      const auto provider = providers.find(service);
      const auto credential = subject_credentials.find(service);
      if (provider == providers.end() || provider->second == nullptr) {
        results.push_back({service, make_error(Errc::unknown_service,
                                               "no provider registered for " + service)});
        continue;
      }
      if (credential == subject_credentials.end()) {
        results.push_back({service, make_error(Errc::invalid_credential,
                                               "subject holds no credential for " + service)});
        continue;
      }
      results.push_back(
          {service, provider->second->handle_subject_request(credential->second, request, at)});
    }
    const PseudonymId no_subject{};  // the mediator does not learn a linkable id
    log_.append("mediator", no_subject,
                std::string("mediate:") + std::string(subject_request_name(request)),
                PurposeTag{"data_protection_contact"}, at);
    return results;
  }

 private:
  TransparencyLog log_;
};

// ---------------------------------------------------------------------------
// Linkability analysis
// ---------------------------------------------------------------------------

// One sighting of a pseudonym, from whichever vantage point the scenario
// grants the adversary (air interface or provider side).
struct Observation {
  PseudonymId pseudonym;
  ServiceId service;
  GeoPosition position;
  SimTime time;
};

struct IdentifierEqualityAdversary {};

struct SpatioTemporalAdversary {
  std::int64_t max_dt_ms{5'000};
  double max_dd_m{50.0};
};

using Adversary = std::variant<IdentifierEqualityAdversary, SpatioTemporalAdversary>;

inline std::string_view adversary_name(const Adversary& a) {
  return std::holds_alternative<IdentifierEqualityAdversary>(a) ? "identifier_equality"
                                                                : "spatio_temporal";
}

using PseudonymGroundTruth = std::map<PseudonymId, NodeId>;
using PseudonymPair = std::pair<PseudonymId, PseudonymId>;

struct LinkabilityReport {
  std::string adversary;
  std::vector<PseudonymPair> candidate_links;
  std::size_t true_link_count{0};
  std::size_t candidate_count{0};
  std::size_t correct_count{0};
  double precision{1.0};  // correct / candidates; 1.0 when nothing claimed
  double recall{1.0};     // correct / true links; 1.0 when nothing to find
};

namespace detail {

inline PseudonymPair ordered_pair(PseudonymId a, PseudonymId b) {
  return a < b ? PseudonymPair{a, b} : PseudonymPair{b, a};
}

}  // namespace detail

// Runs one adversary model over the observations and scores its candidate
// links against the simulator's true pseudonym->node mapping.
//
//  - IdentifierEquality links usages of the same pseudonym id across
//    distinct services. Truth set: cross-service usage pairs of the same
//    node.
//  - SpatioTemporal links distinct pseudonym ids sighted within the time
//    and distance thresholds. Truth set: distinct pseudonym id pairs owned
//    by the same node.
inline Result<LinkabilityReport> analyze_linkability(const std::vector<Observation>& observations,
                                                     const Adversary& adversary,
                                                     const PseudonymGroundTruth& truth) {
  if (observations.empty()) {
    return make_error(Errc::empty_trace, "no observations to analyze");
  }
  LinkabilityReport report;
  report.adversary = std::string(adversary_name(adversary));

  const auto node_of = [&truth](PseudonymId p) -> std::optional<NodeId> {
    const auto it = truth.find(p);
    if (it == truth.end()) return std::nullopt;
    return it->second;
  };

  std::set<PseudonymPair> candidates;
  std::set<PseudonymPair> truth_pairs;

  if (std::holds_alternative<IdentifierEqualityAdversary>(adversary)) {
    // Usage = a pseudonym seen at a service.
    std::set<std::pair<PseudonymId, ServiceId>> usages;
    for (const auto& o : observations) usages.insert({o.pseudonym, o.service});

    for (auto i = usages.begin(); i != usages.end(); ++i) {
      for (auto j = std::next(i); j != usages.end(); ++j) {
        if (i->second == j->second) continue;  // same service: not cross-service linkage
        const auto ni = node_of(i->first);
        const auto nj = node_of(j->first);
        if (ni && nj && *ni == *nj) truth_pairs.insert(detail::ordered_pair(i->first, j->first));
        if (i->first == j->first) candidates.insert(detail::ordered_pair(i->first, j->first));
      }
    }
  } else {
    const auto& model = std::get<SpatioTemporalAdversary>(adversary);
    for (std::size_t i = 0; i < observations.size(); ++i) {
      for (std::size_t j = i + 1; j < observations.size(); ++j) {
        const auto& a = observations[i];
        const auto& b = observations[j];
        if (a.pseudonym == b.pseudonym) continue;  // same id: nothing to defeat
        if (std::abs(a.time.ms - b.time.ms) <= model.max_dt_ms &&
            distance(a.position, b.position) <= model.max_dd_m) {
          candidates.insert(detail::ordered_pair(a.pseudonym, b.pseudonym));
        }
      }
    }
    // Truth: all distinct-id pairs of the same node among observed pseudonyms.
    std::set<PseudonymId> observed;
    for (const auto& o : observations) observed.insert(o.pseudonym);
    for (auto i = observed.begin(); i != observed.end(); ++i) {
      for (auto j = std::next(i); j != observed.end(); ++j) {
        const auto ni = node_of(*i);
        const auto nj = node_of(*j);
        if (ni && nj && *ni == *nj) truth_pairs.insert(detail::ordered_pair(*i, *j));
      }
    }
  }

  std::size_t correct = 0;
  for (const auto& c : candidates) {
    if (truth_pairs.contains(c)) ++correct;
  }
  report.candidate_links.assign(candidates.begin(), candidates.end());
  report.candidate_count = candidates.size();
  report.true_link_count = truth_pairs.size();
  report.correct_count = correct;
  report.precision = candidates.empty()
                         ? 1.0
                         : static_cast<double>(correct) / static_cast<double>(candidates.size());
  report.recall = truth_pairs.empty()
                      ? 1.0
                      : static_cast<double>(correct) / static_cast<double>(truth_pairs.size());
  return report;
}

// ---------------------------------------------------------------------------
// Bundle parsing
// ---------------------------------------------------------------------------

inline Result<PortabilityBundle> parse_bundle(std::string_view text) {
  PortabilityBundle bundle;
  std::size_t pos = 0;
  bool first = true;
  const auto fail = [](const std::string& why) {
    return make_error(Errc::malformed_trace, "portability bundle: " + why);
  };
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (line.empty()) continue;
    if (first) {
      if (line != "portability-bundle v1") return fail("missing or unsupported version tag");
      first = false;
      continue;
    }
    if (line.starts_with("source-service: ")) {
      auto v = unescape_token(line.substr(16));
      if (!v) return fail("bad source-service");
      bundle.source_service = *v;
      continue;
    }
    if (line.starts_with("exported-at: ")) {
      const auto v = parse_i64(line.substr(13));
      if (!v) return fail("bad exported-at");
      bundle.exported_at = SimTime{*v};
      continue;
    }
    if (line.starts_with("setting ")) {
      const auto body = line.substr(8);
      const auto eq = body.find('=');
      if (eq == std::string_view::npos) return fail("bad setting line");
      const auto name = unescape_token(body.substr(0, eq));
      const auto value = unescape_token(body.substr(eq + 1));
      if (!name || !value) return fail("bad setting escape");
      bundle.settings[*name] = *value;
      continue;
    }
    if (line.starts_with("record ")) {
      PersonalDataRecord r;
      std::size_t tok_pos = 7;
      while (tok_pos < line.size()) {
        auto sp = line.find(' ', tok_pos);
        if (sp == std::string_view::npos) sp = line.size();
        const std::string_view token = line.substr(tok_pos, sp - tok_pos);
        tok_pos = sp + 1;
        if (token.empty()) continue;
        const auto eq = token.find('=');
        if (eq == std::string_view::npos) return fail("bad record token");
        const std::string_view key = token.substr(0, eq);
        const auto value = unescape_token(token.substr(eq + 1));
        if (!value) return fail("bad record escape");
        if (key == "id") {
          const auto v = parse_u64(*value);
          if (!v) return fail("bad record id");
          r.record_id = *v;
        } else if (key == "subject") {
          const auto raw = hex_decode(*value);
          if (!raw || raw->size() != 16) return fail("bad record subject");
          std::copy(raw->begin(), raw->end(), r.subject.bytes.begin());
        } else if (key == "purpose") {
          r.purpose = PurposeTag{*value};
        } else if (key == "stored-at") {
          const auto v = parse_i64(*value);
          if (!v) return fail("bad stored-at");
          r.stored_at = SimTime{*v};
        } else {
          r.fields[std::string(key)] = *value;
        }
      }
      bundle.records.push_back(std::move(r));
      continue;
    }
    return fail("unrecognized line");
  }
  if (first) return fail("empty input");
  return bundle;
}

}  // namespace hcsim
