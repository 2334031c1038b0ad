#pragma once

// Deterministic discrete-event engine. A Scenario fully scripts a run:
// population, coverage, channel parameters, pseudonym policy, services and
// a timed action list. Events execute in (time, insertion order); the seed
// governs only platform randomness (keys, pseudonym ids), never geometry,
// so a fixed (scenario, seed) pair reproduces the trace byte for byte.

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "hcsim/network.hpp"
#include "hcsim/trace.hpp"

namespace hcsim {

// ---------------------------------------------------------------------------
// Scenario model
// ---------------------------------------------------------------------------

constexpr int scenario_format_version = 1;

struct NodeDecl {
  std::string name;
  NodeKind kind{NodeKind::Vehicle};
  Plane plane{Plane::Remote};
  Trajectory trajectory;
};

struct StationDecl {
  std::string node;  // a declared roadside station (or other network node)
  double range_m{300.0};
};

struct ReaderDecl {
  std::string node;
  double range_m{3.0};
};

struct ServiceDecl {
  ServiceId id;
  std::string provider;
  MessageClass message_class{MessageClass::UserSpecific};
  PurposeTag purpose;
  std::set<std::string> fields;
};

// Address with node names instead of ids; resolved against the registered
// world when the scenario is instantiated.
struct AddressDecl {
  AddressMode mode{AddressMode::Unicast};
  std::string node;      // unicast target or proximity reader
  GeoPosition center;    // geo broadcast
  double radius_m{0.0};
  RegionId region;

  static AddressDecl unicast(std::string target) {
    AddressDecl a;
    a.mode = AddressMode::Unicast;
    a.node = std::move(target);
    return a;
  }
  static AddressDecl geo(GeoPosition center, double radius_m) {
    AddressDecl a;
    a.mode = AddressMode::GeoBroadcast;
    a.center = center;
    a.radius_m = radius_m;
    return a;
  }
  static AddressDecl regional(RegionId region) {
    AddressDecl a;
    a.mode = AddressMode::RegionalBroadcast;
    a.region = std::move(region);
    return a;
  }
  static AddressDecl proximity(std::string reader) {
    AddressDecl a;
    a.mode = AddressMode::Proximity;
    a.node = std::move(reader);
    return a;
  }
};

struct DispatchAction {
  std::string sender;
  ServiceId service;
  AddressDecl to;
  std::map<std::string, std::string> payload;
  DispatchFaults faults;
};

// kind: review | correct | delete | export
struct SubjectRequestAction {
  std::string subject;
  ServiceId service;
  std::string kind;
  std::uint64_t record_index{0};  // correct: index into the subject's records
  std::string field;
  std::string value;
};

struct SetSettingAction {
  std::string subject;
  ServiceId service;
  std::string name;
  std::string value;
};

struct TransferAction {
  std::string subject;
  ServiceId from;
  ServiceId to;
};

// kind: review | delete
struct MediateAction {
  std::string subject;
  std::string kind;
};

// scope: pseudonym (service required) | enrollment
struct RevokeAction {
  std::string node;
  std::string scope;
  ServiceId service;
};

struct RfidAuthAction {
  std::string tag;
  std::string reader;
  ServiceId service;
};

using ActionBody = std::variant<DispatchAction, SubjectRequestAction, SetSettingAction,
                                TransferAction, MediateAction, RevokeAction, RfidAuthAction>;

struct ScenarioAction {
  SimTime at;
  ActionBody body;
};

struct Scenario {
  std::string name;
  int version{scenario_format_version};
  std::vector<NodeDecl> nodes;
  std::vector<CircularRegion> dead_zones;
  std::map<RegionId, CircularRegion> dab_regions;
  std::vector<StationDecl> stations;
  std::vector<ReaderDecl> readers;
  ChannelConfig channels;
  PseudonymPolicy pseudonym_policy;
  std::vector<ServiceDecl> services;
  std::vector<ScenarioAction> actions;

  Result<void> validate() const;
};

inline std::string_view action_name(const ActionBody& body) {
  if (std::holds_alternative<DispatchAction>(body)) return "dispatch";
  if (std::holds_alternative<SubjectRequestAction>(body)) return "subject_request";
  if (std::holds_alternative<SetSettingAction>(body)) return "setting";
  if (std::holds_alternative<TransferAction>(body)) return "transfer";
  if (std::holds_alternative<MediateAction>(body)) return "mediate";
  if (std::holds_alternative<RevokeAction>(body)) return "revoke";
  return "rfid_auth";
}

inline Result<void> Scenario::validate() const {
  const auto invalid = [](const std::string& where, const std::string& why) {
    return make_error(Errc::scenario_invalid, where + ": " + why);
  };
  if (name.empty()) return invalid("scenario", "name empty");
  if (version != scenario_format_version) return invalid("scenario", "unsupported version");
  if (const auto r = channels.validate(); !r.ok()) return invalid("channels", r.error().message);
  if (const auto r = pseudonym_policy.validate(); !r.ok()) {
    return invalid("pseudonyms", r.error().message);
  }

  std::set<std::string> node_names;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    const std::string where = "nodes[" + std::to_string(i) + "]";
    if (n.name.empty()) return invalid(where, "node name empty");
    if (!node_names.insert(n.name).second) return invalid(where, "duplicate name " + n.name);
    if (n.plane != legal_plane(n.kind)) {
      return invalid(where, std::string(node_kind_name(n.kind)) + " cannot live on the " +
                                std::string(plane_name(n.plane)) + " plane");
    }
    if (n.trajectory.empty()) return invalid(where, "no position or trajectory");
    for (const auto& [t, p] : n.trajectory.waypoints()) {
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
        return invalid(where, "non-finite waypoint coordinate");
      }
    }
  }
  for (const auto& z : dead_zones) {
    if (z.radius_m <= 0 || !std::isfinite(z.radius_m) || !std::isfinite(z.center.x) ||
        !std::isfinite(z.center.y)) {
      return invalid("coverage", "bad dead zone");
    }
  }
  for (const auto& [id, r] : dab_regions) {
    if (id.empty() || r.radius_m <= 0 || !std::isfinite(r.radius_m) ||
        !std::isfinite(r.center.x) || !std::isfinite(r.center.y)) {
      return invalid("coverage", "bad DAB region " + id);
    }
  }
  for (const auto& s : stations) {
    if (!node_names.contains(s.node)) return invalid("coverage", "unknown station node " + s.node);
    if (s.range_m <= 0) return invalid("coverage", "station range <= 0");
  }
  std::set<std::string> reader_nodes;
  for (const auto& r : readers) {
    if (!node_names.contains(r.node)) return invalid("coverage", "unknown reader node " + r.node);
    if (r.range_m <= 0) return invalid("coverage", "reader range <= 0");
    reader_nodes.insert(r.node);
  }

  std::set<ServiceId> service_ids;
  for (std::size_t i = 0; i < services.size(); ++i) {
    const auto& s = services[i];
    const std::string where = "services[" + std::to_string(i) + "]";
    if (s.id.empty()) return invalid(where, "service id empty");
    if (!service_ids.insert(s.id).second) return invalid(where, "duplicate service id " + s.id);
    if (!node_names.contains(s.provider)) return invalid(where, "unknown provider " + s.provider);
    if (s.purpose.value.empty()) return invalid(where, "purpose empty");
    if (s.fields.empty()) return invalid(where, "schema needs at least one field");
  }

  SimTime last{0};
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const auto& a = actions[i];
    const std::string where = "script[" + std::to_string(i) + "]";
    if (a.at < last) return invalid(where, "actions not sorted by time");
    last = a.at;
    if (a.at.ms < 0) return invalid(where, "negative time");

    const auto need_node = [&](const std::string& n) -> Result<void> {
      if (!node_names.contains(n)) return invalid(where, "unknown node " + n);
      return {};
    };
    const auto need_service = [&](const ServiceId& s) -> Result<void> {
      if (!service_ids.contains(s)) return invalid(where, "unknown service " + s);
      return {};
    };

    if (const auto* d = std::get_if<DispatchAction>(&a.body)) {
      if (const auto r = need_node(d->sender); !r.ok()) return r;
      if (const auto r = need_service(d->service); !r.ok()) return r;
      switch (d->to.mode) {
        case AddressMode::Unicast:
          if (const auto r = need_node(d->to.node); !r.ok()) return r;
          break;
        case AddressMode::GeoBroadcast:
          if (d->to.radius_m <= 0) return invalid(where, "geo radius <= 0");
          break;
        case AddressMode::RegionalBroadcast:
          if (!dab_regions.contains(d->to.region)) {
            return invalid(where, "undeclared region " + d->to.region);
          }
          break;
        case AddressMode::Proximity:
          if (const auto r = need_node(d->to.node); !r.ok()) return r;
          if (!reader_nodes.contains(d->to.node)) {
            return invalid(where, "proximity target is not a declared reader");
          }
          break;
      }
    } else if (const auto* sr = std::get_if<SubjectRequestAction>(&a.body)) {
      if (const auto r = need_node(sr->subject); !r.ok()) return r;
      if (const auto r = need_service(sr->service); !r.ok()) return r;
      if (sr->kind != "review" && sr->kind != "correct" && sr->kind != "delete" &&
          sr->kind != "export") {
        return invalid(where, "unknown request kind " + sr->kind);
      }
      if (sr->kind == "correct" && sr->field.empty()) return invalid(where, "correct needs field");
    } else if (const auto* ss = std::get_if<SetSettingAction>(&a.body)) {
      if (const auto r = need_node(ss->subject); !r.ok()) return r;
      if (const auto r = need_service(ss->service); !r.ok()) return r;
      if (ss->name.empty()) return invalid(where, "setting name empty");
    } else if (const auto* tr = std::get_if<TransferAction>(&a.body)) {
      if (const auto r = need_node(tr->subject); !r.ok()) return r;
      if (const auto r = need_service(tr->from); !r.ok()) return r;
      if (const auto r = need_service(tr->to); !r.ok()) return r;
    } else if (const auto* m = std::get_if<MediateAction>(&a.body)) {
      if (const auto r = need_node(m->subject); !r.ok()) return r;
      if (m->kind != "review" && m->kind != "delete") {
        return invalid(where, "unknown mediate kind " + m->kind);
      }
    } else if (const auto* rv = std::get_if<RevokeAction>(&a.body)) {
      if (const auto r = need_node(rv->node); !r.ok()) return r;
      if (rv->scope == "pseudonym") {
        if (const auto r = need_service(rv->service); !r.ok()) return r;
      } else if (rv->scope != "enrollment") {
        return invalid(where, "unknown revoke scope " + rv->scope);
      }
    } else if (const auto* ra = std::get_if<RfidAuthAction>(&a.body)) {
      if (const auto r = need_node(ra->tag); !r.ok()) return r;
      if (const auto r = need_node(ra->reader); !r.ok()) return r;
      if (const auto r = need_service(ra->service); !r.ok()) return r;
      if (!reader_nodes.contains(ra->reader)) {
        return invalid(where, "rfid_auth reader is not a declared reader");
      }
    }
  }
  return {};
}

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

struct RunResult {
  Metrics metrics;
  std::vector<TraceRecord> records;
  std::string trace_text;
};

namespace detail {

class Engine {
 public:
  Engine(const Scenario& scenario, std::uint64_t seed)
      : scenario_(scenario), seed_(seed), world_(seed_from_u64(seed)) {}

  Result<RunResult> run() {
    if (const auto v = scenario_.validate(); !v.ok()) return v.error();
    if (const auto s = setup(); !s.ok()) return s.error();

    for (std::size_t i = 0; i < scenario_.actions.size(); ++i) {
      schedule(scenario_.actions[i].at, QueuedAction{&scenario_.actions[i]});
    }
    while (!queue_.empty()) {
      const auto it = queue_.begin();
      const SimTime now{it->first.first};
      QueueItem item = std::move(it->second);
      queue_.erase(it);
      end_time_ = std::max(end_time_, now);
      std::visit([&](auto& payload) { handle(now, payload); }, item);
    }

    finish();
    RunResult result;
    result.metrics = std::move(metrics_);
    result.trace_text = serialize_trace(records_);
    result.records = std::move(records_);
    return result;
  }

 private:
  // ---- queue ----
  struct QueuedAction {
    const ScenarioAction* action;
  };
  struct QueuedDelivery {
    std::uint64_t msg_id;
    ChannelKind channel;
    ServiceId service;
    NodeId recipient;
    SimTime send_at;
    bool accepted{false};
    Errc reason{Errc::out_of_coverage};
    std::optional<std::map<std::string, std::string>> fields;
    PseudonymId sender_pseudonym;
    bool store_here{false};
    bool tampered{false};
  };
  struct QueuedAuth {
    NodeId reader;
    NodeId tag;
    PseudonymId pseudonym;
    ServiceId service;
    bool granted{false};
    std::string reason;  // errc name when denied
  };
  using QueueItem = std::variant<QueuedAction, QueuedDelivery, QueuedAuth>;

  void schedule(SimTime at, QueueItem item) {
    queue_.emplace(std::make_pair(at.ms, insertion_counter_++), std::move(item));
  }

  // ---- trace emission ----
  void emit(SimTime at, std::string event,
            std::vector<std::pair<std::string, std::string>> fields) {
    records_.push_back(TraceRecord{next_seq_++, at, std::move(event), std::move(fields)});
  }

  // ---- setup ----
  Result<void> setup() {
    ea_ = std::make_unique<EnrollmentAuthority>(derive_seed(world_.seed(), "authority", 1));
    pa_ = std::make_unique<PseudonymAuthority>(derive_seed(world_.seed(), "authority", 2),
                                               ea_->public_key());

    emit(SimTime{0}, "scenario",
         {{"name", scenario_.name},
          {"seed", std::to_string(seed_)},
          {"policy", pseudonym_policy_name(scenario_.pseudonym_policy)},
          {"version", std::to_string(scenario_.version)}});

    for (const auto& decl : scenario_.nodes) {
      auto id = world_.register_node(decl.kind, decl.plane, decl.trajectory);
      if (!id) return id.error();
      names_[decl.name] = id.value();
      const GeoPosition p = decl.trajectory.position_at(SimTime{0});
      emit(SimTime{0}, "node",
           {{"id", to_string(id.value())},
            {"name", decl.name},
            {"kind", std::string(node_kind_name(decl.kind))},
            {"plane", std::string(plane_name(decl.plane))},
            {"x", format_double(p.x)},
            {"y", format_double(p.y)}});
    }

    coverage_.cellular_dead_zones = scenario_.dead_zones;
    coverage_.dab_regions = scenario_.dab_regions;
    for (const auto& s : scenario_.stations) {
      const NodeId id = names_.at(s.node);
      coverage_.g5_stations.push_back(
          {id, world_.find(id)->position_at(SimTime{0}), s.range_m});
    }
    for (const auto& r : scenario_.readers) {
      const NodeId id = names_.at(r.node);
      coverage_.rfid_readers.push_back(
          {id, world_.find(id)->position_at(SimTime{0}), r.range_m});
    }
    if (const auto c = coverage_.validate(); !c.ok()) return c.error();
    config_ = scenario_.channels;
    policy_ = scenario_.pseudonym_policy;

    // Enrollment, encryption keys and initial pseudonym pools for everyone.
    for (const auto& decl : scenario_.nodes) {
      const NodeId id = names_.at(decl.name);
      keys_.provision(world_, id);
      auto enrollment = ea_->enroll(world_, id, SimTime{0});
      if (!enrollment) return enrollment.error();
      enrollments_.emplace(id, enrollment.take());
      wallets_.emplace(id, PseudonymWallet{});
      if (const auto r = refill_wallet(id, SimTime{0}); !r.ok()) return r;
    }

    for (const auto& s : scenario_.services) {
      const NodeId provider = names_.at(s.provider);
      ServiceDescriptor d;
      d.service_id = s.id;
      d.provider = provider;
      d.message_class = s.message_class;
      d.purpose = s.purpose;
      d.schema = DataSchema{s.purpose, s.fields};
      d.provider_certificate = enrollments_.at(provider).certificate;
      if (const auto r =
              registry_.register_service(d, ea_->public_key(), ea_->revocations(), SimTime{0});
          !r.ok()) {
        return r.error();
      }
      stores_.emplace(s.id, ProviderStore(s.id, d.schema));
      emit(SimTime{0}, "service",
           {{"id", s.id},
            {"provider", to_string(provider)},
            {"class", std::string(message_class_name(s.message_class))},
            {"purpose", s.purpose.value}});
    }

    world_.seal();
    return {};
  }

  Result<void> refill_wallet(NodeId node, SimTime at) {
    auto issued = pa_->issue(world_, enrollments_.at(node).certificate,
                             scenario_.pseudonym_policy.pool_size, MessageClass::UserSpecific, at,
                             ea_->revocations());
    if (!issued) return issued.error();
    for (auto& p : issued.value()) {
      truth_[p.certificate.pseudonym_id] = node;
      emit(at, "issue",
           {{"node", to_string(node)}, {"pseudonym", p.certificate.pseudonym_id.hex()}});
      wallets_.at(node).add(std::move(p));
    }
    return {};
  }

  Result<IssuedPseudonym> credential_for(NodeId node, const ServiceId& service, SimTime at) {
    auto r = wallets_.at(node).current(policy_, service, at);
    if (!r.ok() && r.code() == Errc::pool_exhausted) {
      if (const auto refill = refill_wallet(node, at); !refill.ok()) return refill.error();
      r = wallets_.at(node).current(policy_, service, at);
    }
    return r;
  }

  NetworkEnv env() {
    return NetworkEnv{world_,     registry_, coverage_,     config_,
                      selection_, policy_,   revocations_,  pa_->public_key(),
                      keys_,      wallets_,  network_log_,  next_message_id_};
  }

  // ---- handlers ----
  void handle(SimTime now, QueuedAction& qa) {
    std::visit([&](const auto& body) { act(now, body); }, qa.action->body);
  }

  void act(SimTime now, const DispatchAction& a) {
    const NodeId sender = names_.at(a.sender);
    const Address address = resolve(a.to);
    auto environment = env();

    // Keep the pool topped up so PoolExhausted only surfaces when issuance
    // itself fails.
    if (auto probe = credential_for(sender, a.service, now); !probe.ok()) {
      emit_error(now, "dispatch", a.sender, a.service, probe.error());
      return;
    }
    auto result = dispatch(environment, sender, a.service, address, a.payload, now, a.faults);
    if (!result.ok()) {
      emit_error(now, "dispatch", a.sender, a.service, result.error());
      return;
    }
    const DispatchOutcome& out = result.value();
    const ServiceDescriptor* svc = registry_.find(a.service);

    std::string fallbacks;
    for (const auto k : out.routing.fallbacks_tried) {
      if (!fallbacks.empty()) fallbacks += ",";
      fallbacks += std::string(channel_kind_name(k));
    }
    emit(now, "route",
         {{"msg", std::to_string(out.envelope.message_id)},
          {"service", a.service},
          {"chosen", std::string(channel_kind_name(out.routing.chosen))},
          {"fallbacks", fallbacks},
          {"reason", out.routing.reason}});

    emit(now, "send",
         {{"msg", std::to_string(out.envelope.message_id)},
          {"service", a.service},
          {"sender", to_string(sender)},
          {"pseudonym", out.envelope.sender_pseudonym.hex()},
          {"class", std::string(message_class_name(out.envelope.msg_class))},
          {"address", address_to_string(address)},
          {"channel", std::string(channel_kind_name(out.routing.chosen))},
          {"encrypted", out.envelope.encrypted ? "1" : "0"},
          {"personal", out.personal ? "1" : "0"},
          {"tamper", a.faults.tamper_in_transit ? "1" : "0"},
          {"wrong_purpose", a.faults.wrong_purpose ? "1" : "0"},
          {"x", format_double(out.sender_position.x)},
          {"y", format_double(out.sender_position.y)}});

    if (out.personal && std::holds_alternative<UnicastAddress>(address) &&
        !out.envelope.encrypted) {
      confidentiality_ok_ = false;
    }
    observations_.push_back(
        {out.envelope.sender_pseudonym, a.service, out.sender_position, now});

    for (const auto& r : out.recipients) {
      QueuedDelivery d;
      d.msg_id = out.envelope.message_id;
      d.channel = out.routing.chosen;
      d.service = a.service;
      d.recipient = r.node;
      d.send_at = now;
      d.accepted = r.accepted;
      d.reason = r.reason;
      d.fields = r.fields;
      d.sender_pseudonym = out.envelope.sender_pseudonym;
      d.store_here = r.accepted && svc && r.node == svc->provider && r.fields.has_value();
      d.tampered = a.faults.tamper_in_transit;
      schedule(r.arrival, std::move(d));
    }
  }

  void handle(SimTime now, QueuedDelivery& d) {
    auto& stats = metrics_.channels[std::string(channel_kind_name(d.channel))];
    if (d.accepted) {
      if (d.tampered) integrity_ok_ = false;
      stats.delivered += 1;
      stats.latency_sum_ms += static_cast<std::uint64_t>(now.ms - d.send_at.ms);
      emit(now, "deliver",
           {{"msg", std::to_string(d.msg_id)},
            {"node", to_string(d.recipient)},
            {"channel", std::string(channel_kind_name(d.channel))}});
      if (d.store_here) {
        auto& store = stores_.at(d.service);
        const auto record_id = store.store_record(d.sender_pseudonym, *d.fields, now);
        emit(now, "store",
             {{"service", d.service},
              {"subject", d.sender_pseudonym.hex()},
              {"record", std::to_string(record_id)}});
        const auto& stored = store.records().at(record_id);
        const auto check = check_minimization(stored, store.schema());
        if (check.ok() && !check.value().compliant()) {
          std::string joined;
          for (const auto& f : check.value().violations) {
            if (!joined.empty()) joined += ",";
            joined += f;
          }
          metrics_.minimization_violations += check.value().violations.size();
          emit(now, "violation",
               {{"service", d.service},
                {"record", std::to_string(record_id)},
                {"fields", joined}});
        }
      }
    } else {
      stats.dropped += 1;
      emit(now, "drop",
           {{"msg", std::to_string(d.msg_id)},
            {"node", to_string(d.recipient)},
            {"channel", std::string(channel_kind_name(d.channel))},
            {"reason", std::string(errc_name(d.reason))}});
    }
  }

  void act(SimTime now, const SubjectRequestAction& a) {
    const NodeId subject = names_.at(a.subject);
    auto credential = credential_for(subject, a.service, now);
    if (!credential.ok()) {
      emit_request_outcome(now, a, std::string(errc_name(credential.code())), 0);
      intervenability_ok_ = false;
      return;
    }
    const PseudonymId pid = credential.value().certificate.pseudonym_id;
    auto& store = stores_.at(a.service);

    SubjectRequest request = ReviewRequest{};
    if (a.kind == "correct") {
      auto records = store.records_of(pid);
      if (a.record_index >= records.size()) {
        emit_request_outcome(now, a, std::string(errc_name(Errc::unknown_record)), 0);
        intervenability_ok_ = false;
        return;
      }
      request = CorrectRequest{records[a.record_index].record_id, a.field, a.value};
    } else if (a.kind == "delete") {
      request = DeleteRequest{};
    } else if (a.kind == "export") {
      request = ExportRequest{};
    }

    auto outcome = store.handle_subject_request(pid, request, now);
    if (!outcome.ok()) {
      emit_request_outcome(now, a, std::string(errc_name(outcome.code())), 0);
      intervenability_ok_ = false;
      return;
    }
    const std::size_t count = a.kind == "review" ? outcome.value().records.size()
                                                 : outcome.value().affected;
    emit_request_outcome(now, a, "ok", count);
  }

  void emit_request_outcome(SimTime now, const SubjectRequestAction& a, const std::string& outcome,
                            std::size_t count) {
    emit(now, "subject_request",
         {{"subject", a.subject},
          {"service", a.service},
          {"kind", a.kind},
          {"outcome", outcome},
          {"records", std::to_string(count)}});
  }

  void act(SimTime now, const SetSettingAction& a) {
    const NodeId subject = names_.at(a.subject);
    auto credential = credential_for(subject, a.service, now);
    if (!credential.ok()) {
      intervenability_ok_ = false;
      return;
    }
    stores_.at(a.service).set_setting(credential.value().certificate.pseudonym_id, a.name,
                                      a.value, now);
    emit(now, "setting",
         {{"subject", a.subject}, {"service", a.service}, {"name", a.name}});
  }

  void act(SimTime now, const TransferAction& a) {
    const NodeId subject = names_.at(a.subject);
    const auto emit_transfer = [&](const std::string& outcome, std::size_t settings,
                                   std::size_t records) {
      emit(now, "transfer",
           {{"subject", a.subject},
            {"from", a.from},
            {"to", a.to},
            {"outcome", outcome},
            {"settings", std::to_string(settings)},
            {"records", std::to_string(records)}});
      if (outcome != "ok") intervenability_ok_ = false;
    };

    auto from_credential = credential_for(subject, a.from, now);
    auto to_credential = credential_for(subject, a.to, now);
    if (!from_credential.ok() || !to_credential.ok()) {
      emit_transfer("PoolExhausted", 0, 0);
      return;
    }
    auto exported = stores_.at(a.from).handle_subject_request(
        from_credential.value().certificate.pseudonym_id, ExportRequest{}, now);
    if (!exported.ok()) {
      emit_transfer(std::string(errc_name(exported.code())), 0, 0);
      return;
    }
    // The bundle travels in its documented text form.
    const std::string text = serialize_bundle(*exported.value().bundle);
    auto parsed = parse_bundle(text);
    if (!parsed.ok()) {
      emit_transfer(std::string(errc_name(parsed.code())), 0, 0);
      return;
    }
    const auto imported = stores_.at(a.to).import_bundle(
        to_credential.value().certificate.pseudonym_id, parsed.value(), now);
    if (!imported.ok()) {
      emit_transfer(std::string(errc_name(imported.code())), 0, 0);
      return;
    }
    emit_transfer("ok", parsed.value().settings.size(), parsed.value().records.size());
  }

  void act(SimTime now, const MediateAction& a) {
    const NodeId subject = names_.at(a.subject);
    std::map<ServiceId, PseudonymId> credentials;
    std::map<ServiceId, ProviderStore*> providers;
    std::vector<ServiceId> targets;
    for (auto& [id, store] : stores_) {
      auto credential = credential_for(subject, id, now);
      if (credential.ok()) {
        credentials[id] = credential.value().certificate.pseudonym_id;
      }
      providers[id] = &store;
      targets.push_back(id);
    }
    const SubjectRequest request =
        a.kind == "delete" ? SubjectRequest{DeleteRequest{}} : SubjectRequest{ReviewRequest{}};
    const auto results = contact_.mediate(credentials, providers, targets, request, now);
    std::size_t errors = 0;
    for (const auto& r : results) {
      if (!r.outcome.ok()) ++errors;
    }
    if (errors > 0) intervenability_ok_ = false;
    emit(now, "mediate",
         {{"subject", a.subject},
          {"kind", a.kind},
          {"providers", std::to_string(results.size())},
          {"errors", std::to_string(errors)}});
  }

  void act(SimTime now, const RevokeAction& a) {
    const NodeId node = names_.at(a.node);
    if (a.scope == "enrollment") {
      ea_->revoke_node(node);
      emit(now, "revoke",
           {{"node", a.node},
            {"scope", "enrollment"},
            {"version", std::to_string(ea_->revocations().version())}});
      return;
    }
    auto credential = credential_for(node, a.service, now);
    if (!credential.ok()) {
      emit_error(now, "revoke", a.node, a.service, credential.error());
      return;
    }
    revocations_.revoke(credential.value().certificate.cert_id);
    emit(now, "revoke",
         {{"node", a.node},
          {"scope", "pseudonym"},
          {"service", a.service},
          {"cert", credential.value().certificate.cert_id.hex()},
          {"version", std::to_string(revocations_.version())}});
  }

  void act(SimTime now, const RfidAuthAction& a) {
    const NodeId tag = names_.at(a.tag);
    const NodeId reader = names_.at(a.reader);
    auto credential = credential_for(tag, a.service, now);
    if (!credential.ok()) {
      emit_error(now, "rfid_auth", a.tag, a.service, credential.error());
      return;
    }
    auto result =
        rfid_proximity_auth(world_, coverage_, config_, reader, tag,
                            credential.value().certificate, pa_->public_key(), revocations_,
                            access_log_, now);
    QueuedAuth q;
    q.reader = reader;
    q.tag = tag;
    q.pseudonym = credential.value().certificate.pseudonym_id;
    q.service = a.service;
    if (result.ok()) {
      q.granted = true;
      schedule(result.value().completed_at, std::move(q));
    } else {
      q.granted = false;
      q.reason = std::string(errc_name(result.code()));
      schedule(now + config_.rfid_latency_ms, std::move(q));
    }
  }

  void handle(SimTime now, QueuedAuth& q) {
    emit(now, "auth",
         {{"reader", to_string(q.reader)},
          {"tag", to_string(q.tag)},
          {"pseudonym", q.pseudonym.hex()},
          {"service", q.service},
          {"granted", q.granted ? "1" : "0"},
          {"reason", q.granted ? "" : q.reason}});
    if (q.granted) {
      emit(now, "barrier", {{"node", to_string(q.reader)}, {"state", "open"}});
    }
  }

  void emit_error(SimTime now, const std::string& op, const std::string& who,
                  const ServiceId& service, const Error& error) {
    if (error.code == Errc::no_viable_channel) availability_ok_ = false;
    emit(now, "error",
         {{"op", op},
          {"who", who},
          {"service", service},
          {"reason", std::string(errc_name(error.code))},
          {"detail", error.message}});
  }

  // ---- end of run ----
  void finish() {
    if (!observations_.empty()) {
      for (const Adversary adversary :
           {Adversary{IdentifierEqualityAdversary{}}, Adversary{SpatioTemporalAdversary{}}}) {
        auto report = analyze_linkability(observations_, adversary, truth_);
        if (report.ok()) {
          AdversaryStats s;
          s.true_links = report.value().true_link_count;
          s.candidates = report.value().candidate_count;
          s.correct = report.value().correct_count;
          metrics_.linkability[report.value().adversary] = s;
        }
      }
    }

    bool transparency = network_log_.verify() && access_log_.verify() && contact_.log().verify();
    for (const auto& [id, store] : stores_) transparency = transparency && store.log().verify();
    const bool unlinkability =
        observations_.empty() || metrics_.linkability["identifier_equality"].correct == 0;

    auto& goals = metrics_.protection_goals;
    goals[std::string(protection_goal_name(ProtectionGoal::Confidentiality))] =
        confidentiality_ok_;
    goals[std::string(protection_goal_name(ProtectionGoal::Integrity))] = integrity_ok_;
    goals[std::string(protection_goal_name(ProtectionGoal::Availability))] = availability_ok_;
    goals[std::string(protection_goal_name(ProtectionGoal::Unlinkability))] = unlinkability;
    goals[std::string(protection_goal_name(ProtectionGoal::Transparency))] = transparency;
    goals[std::string(protection_goal_name(ProtectionGoal::Intervenability))] =
        intervenability_ok_;

    // Audit tail: every transparency log, then the revocation list.
    dump_log(network_log_);
    dump_log(access_log_);
    dump_log(contact_.log());
    for (const auto& [id, store] : stores_) dump_log(store.log());

    emit(end_time_, "revocation_list",
         {{"version", std::to_string(revocations_.version())},
          {"count", std::to_string(revocations_.size())}});
    for (const auto& cert : revocations_.entries()) {
      emit(end_time_, "revoked", {{"cert", cert.hex()}});
    }
  }

  void dump_log(const TransparencyLog& log) {
    for (const auto& e : log.entries()) {
      emit(e.at, "log",
           {{"log", log.log_id()},
            {"entry", std::to_string(e.sequence)},
            {"actor", e.actor},
            {"subject", e.subject.hex()},
            {"op", e.operation},
            {"purpose", e.purpose.value},
            {"hash", hex_encode(e.chain_hash)}});
    }
  }

  Address resolve(const AddressDecl& decl) const {
    switch (decl.mode) {
      case AddressMode::Unicast: return UnicastAddress{names_.at(decl.node)};
      case AddressMode::GeoBroadcast: return GeoBroadcastAddress{decl.center, decl.radius_m};
      case AddressMode::RegionalBroadcast: return RegionalBroadcastAddress{decl.region};
      case AddressMode::Proximity: return ProximityAddress{names_.at(decl.node)};
    }
    return UnicastAddress{};
  }

  const Scenario& scenario_;
  std::uint64_t seed_;
  World world_;
  std::map<std::string, NodeId> names_;
  std::unique_ptr<EnrollmentAuthority> ea_;
  std::unique_ptr<PseudonymAuthority> pa_;
  std::map<NodeId, Enrollment> enrollments_;
  ServiceRegistry registry_;
  CoverageModel coverage_;
  ChannelConfig config_;
  ChannelSelectionPolicy selection_ = ChannelSelectionPolicy::defaults();
  PseudonymPolicy policy_;
  RevocationList revocations_;
  KeyDirectory keys_;
  std::map<NodeId, PseudonymWallet> wallets_;
  TransparencyLog network_log_{"network"};
  TransparencyLog access_log_{"access_control"};
  DataProtectionContact contact_;
  std::map<ServiceId, ProviderStore> stores_;
  std::uint64_t next_message_id_{1};

  std::map<std::pair<std::int64_t, std::uint64_t>, QueueItem> queue_;
  std::uint64_t insertion_counter_{0};
  std::vector<TraceRecord> records_;
  std::uint64_t next_seq_{0};
  SimTime end_time_{0};

  std::vector<Observation> observations_;
  PseudonymGroundTruth truth_;
  Metrics metrics_;
  bool confidentiality_ok_{true};
  bool integrity_ok_{true};
  bool availability_ok_{true};
  bool intervenability_ok_{true};
};

}  // namespace detail

// Runs a scenario to completion. Identical (scenario, seed) pairs produce
// byte-identical traces.
inline Result<RunResult> run_scenario(const Scenario& scenario, std::uint64_t seed) {
  detail::Engine engine(scenario, seed);
  return engine.run();
}

}  // namespace hcsim
