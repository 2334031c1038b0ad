#pragma once

// The middle layer between access networks and service providers: a
// replicable service registry with a certification gate, hybrid channel
// selection, and the end-to-end secure dispatch pipeline.
//
// Dispatch order: resolve pseudonym -> build envelope -> encrypt (unicast
// personal data) -> sign -> select channel -> transmit -> per-recipient
// verification (signature, certificate, revocation, purpose) -> transparency
// entries on both sides. Recipient-side failures surface as drops with a
// reason, never as silent acceptance.

#include <map>
#include <string>
#include <vector>

#include "hcsim/channels.hpp"
#include "hcsim/credentials.hpp"
#include "hcsim/envelope.hpp"
#include "hcsim/privacy.hpp"
#include "hcsim/world.hpp"

namespace hcsim {

// ---------------------------------------------------------------------------
// Service registry
// ---------------------------------------------------------------------------

struct ServiceDescriptor {
  ServiceId service_id;
  NodeId provider;
  MessageClass message_class{MessageClass::UserSpecific};
  PurposeTag purpose;
  DataSchema schema;
  EnrollmentCertificate provider_certificate;

  auto operator<=>(const ServiceDescriptor&) const = default;
};

// Plain value type: replicas are copies with identical content, so nothing
// in the data model assumes a singleton registry. Scenarios mutate the
// registry only during setup.
class ServiceRegistry {
 public:
  Result<void> register_service(const ServiceDescriptor& descriptor, const PublicKey& ea_key,
                                const RevocationList& enrollment_revocations, SimTime at) {
    if (services_.contains(descriptor.service_id)) {
      return make_error(Errc::duplicate_service_id,
                        "service already registered: " + descriptor.service_id);
    }
    const auto& cert = descriptor.provider_certificate;
    if (!verify_certificate(cert, ea_key) || cert.node_id != descriptor.provider ||
        at < cert.valid_from || at > cert.valid_to ||
        enrollment_revocations.is_revoked(cert.cert_id)) {
      return make_error(Errc::invalid_provider_certificate,
                        "provider certificate invalid for " + descriptor.service_id);
    }
    if (const auto schema_ok = descriptor.schema.validate(); !schema_ok.ok()) {
      return schema_ok.error();
    }
    services_.emplace(descriptor.service_id, descriptor);
    return {};
  }

  const ServiceDescriptor* find(const ServiceId& id) const {
    const auto it = services_.find(id);
    return it == services_.end() ? nullptr : &it->second;
  }

  const std::map<ServiceId, ServiceDescriptor>& services() const { return services_; }
  std::size_t size() const { return services_.size(); }

  // Replication is content copying; replicas compare equal.
  ServiceRegistry replicate() const { return *this; }
  bool operator==(const ServiceRegistry&) const = default;

 private:
  std::map<ServiceId, ServiceDescriptor> services_;
};

// ---------------------------------------------------------------------------
// Channel selection
// ---------------------------------------------------------------------------

struct ChannelSelectionPolicy {
  std::map<MessageClass, std::vector<ChannelKind>> preferences;

  static ChannelSelectionPolicy defaults() {
    ChannelSelectionPolicy p;
    p.preferences[MessageClass::TimeCriticalLocal] = {ChannelKind::ItsG5, ChannelKind::Cellular};
    p.preferences[MessageClass::WideAreaPublic] = {ChannelKind::Dab, ChannelKind::Cellular};
    p.preferences[MessageClass::UserSpecific] = {ChannelKind::Cellular, ChannelKind::ItsG5};
    p.preferences[MessageClass::ProximityAuth] = {ChannelKind::Rfid};
    return p;
  }

  Result<void> validate() const {
    for (const auto cls : all_message_classes) {
      const auto it = preferences.find(cls);
      if (it == preferences.end() || it->second.empty()) {
        return make_error(Errc::scenario_invalid,
                          "selection policy missing class " +
                              std::string(message_class_name(cls)));
      }
    }
    return {};
  }
};

struct RoutingDecision {
  ChannelKind chosen{ChannelKind::Cellular};
  std::vector<ChannelKind> fallbacks_tried;  // preferences skipped, in order
  std::string reason;
};

// Whether the channel's coverage admits this transmission from `sender`.
// Pure in all inputs; the world snapshot is immutable during a run.
inline bool coverage_admits(const World& world, const CoverageModel& coverage,
                            const ChannelConfig& config, ChannelKind kind, NodeId sender,
                            const Address& address, SimTime at, std::string* why = nullptr) {
  const auto explain = [&](const char* text) {
    if (why) *why = text;
    return false;
  };
  const Node* sender_node = world.find(sender);
  if (!sender_node) return explain("sender not registered");
  const GeoPosition sender_pos = sender_node->position_at(at);

  switch (kind) {
    case ChannelKind::Cellular: {
      if (coverage.in_dead_zone(sender_pos)) return explain("sender in dead zone");
      if (const auto* u = std::get_if<UnicastAddress>(&address)) {
        const Node* target = world.find(u->target);
        if (!target) return explain("target not registered");
        if (coverage.in_dead_zone(target->position_at(at))) return explain("target in dead zone");
      } else if (const auto* r = std::get_if<RegionalBroadcastAddress>(&address)) {
        if (!coverage.region(r->region)) return explain("region not declared");
      }
      return true;
    }
    case ChannelKind::ItsG5: {
      if (std::holds_alternative<GeoBroadcastAddress>(address)) return true;  // direct radio
      const auto* u = std::get_if<UnicastAddress>(&address);
      if (!u) return explain("address mode unsupported");
      const Node* target = world.find(u->target);
      if (!target) return explain("target not registered");
      const GeoPosition target_pos = target->position_at(at);
      if (distance(sender_pos, target_pos) <= config.g5_range_m) return true;
      if (detail::g5_infrastructure_access(*sender_node, sender_pos, coverage) &&
          detail::g5_infrastructure_access(*target, target_pos, coverage)) {
        return true;
      }
      return explain("no station path to target");
    }
    case ChannelKind::Dab: {
      if (sender_node->plane == Plane::Remote) return explain("no back channel");
      const auto* r = std::get_if<RegionalBroadcastAddress>(&address);
      if (!r) return explain("address mode unsupported");
      if (!coverage.region(r->region)) return explain("region not declared");
      return true;
    }
    case ChannelKind::Rfid: {
      const auto* p = std::get_if<ProximityAddress>(&address);
      if (!p) return explain("address mode unsupported");
      if (!coverage.reader(p->reader)) return explain("reader not registered");
      return true;
    }
  }
  return false;
}

// Walks the class's preference list and picks the first technology that
// supports the address mode and whose coverage admits the sender. The
// preferences skipped on the way are recorded in order.
inline Result<RoutingDecision> select_channel(const ChannelSelectionPolicy& policy,
                                              MessageClass msg_class, const Address& address,
                                              const World& world, const CoverageModel& coverage,
                                              const ChannelConfig& config, NodeId sender,
                                              SimTime at) {
  const auto it = policy.preferences.find(msg_class);
  if (it == policy.preferences.end() || it->second.empty()) {
    return make_error(Errc::scenario_invalid,
                      "selection policy does not cover " +
                          std::string(message_class_name(msg_class)));
  }
  const AddressMode mode = address_mode(address);
  RoutingDecision decision;
  std::string notes;
  for (const ChannelKind kind : it->second) {
    std::string why;
    if (!supports_address(kind, mode)) {
      why = "address mode unsupported";
    } else if (!coverage_admits(world, coverage, config, kind, sender, address, at, &why)) {
      // why filled by coverage_admits
    } else {
      decision.chosen = kind;
      if (!notes.empty()) notes += "; ";
      notes += std::string(channel_kind_name(kind)) + ": selected";
      decision.reason = notes;
      return decision;
    }
    decision.fallbacks_tried.push_back(kind);
    if (!notes.empty()) notes += "; ";
    notes += std::string(channel_kind_name(kind)) + ": " + why;
  }
  return make_error(Errc::no_viable_channel, "no viable channel: " + notes);
}

// ---------------------------------------------------------------------------
// Key directory (uniform access point plumbing)
// ---------------------------------------------------------------------------

// Encryption keys for unicast confidentiality. The directory publishes only
// public keys; the matching handles stay usable solely on each owner's
// platform.
class KeyDirectory {
 public:
  void provision(World& world, NodeId node) {
    if (handles_.contains(node)) return;
    auto& platform = world.platform(node);
    const KeyHandle handle = platform.generate_key(KeyPurpose::Encryption);
    handles_.emplace(node, handle);
    public_keys_.emplace(node, platform.public_key(handle).value());
  }

  const PublicKey* public_key(NodeId node) const {
    const auto it = public_keys_.find(node);
    return it == public_keys_.end() ? nullptr : &it->second;
  }

  const KeyHandle* handle(NodeId node) const {
    const auto it = handles_.find(node);
    return it == handles_.end() ? nullptr : &it->second;
  }

 private:
  std::map<NodeId, PublicKey> public_keys_;
  std::map<NodeId, KeyHandle> handles_;
};

// Canonical payload encoding for structured field maps.
inline Bytes encode_payload_fields(const std::map<std::string, std::string>& fields) {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(fields.size()));
  for (const auto& [k, v] : fields) {
    w.str(k);
    w.str(v);
  }
  return w.take();
}

inline std::optional<std::map<std::string, std::string>> decode_payload_fields(
    std::span<const std::uint8_t> payload) {
  ByteReader r(payload);
  const auto count = r.u32();
  if (!count) return std::nullopt;
  std::map<std::string, std::string> fields;
  for (std::uint32_t i = 0; i < *count; ++i) {
    auto k = r.str();
    auto v = r.str();
    if (!k || !v) return std::nullopt;
    fields.emplace(std::move(*k), std::move(*v));
  }
  if (!r.at_end()) return std::nullopt;
  return fields;
}

inline Bytes encode_cipher_blob(const CipherBlob& blob) {
  ByteWriter w;
  w.fixed(blob.ephemeral_pk);
  w.bytes(blob.ciphertext);
  w.fixed(blob.tag);
  w.u8(static_cast<std::uint8_t>(blob.recipient.alg));
  w.fixed(blob.recipient.bytes);
  return w.take();
}

inline std::optional<CipherBlob> decode_cipher_blob(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  CipherBlob blob;
  const auto eph = r.fixed<32>();
  if (!eph) return std::nullopt;
  blob.ephemeral_pk = *eph;
  auto ct = r.bytes();
  if (!ct) return std::nullopt;
  blob.ciphertext = std::move(*ct);
  const auto tag = r.fixed<16>();
  if (!tag) return std::nullopt;
  blob.tag = *tag;
  const auto alg = r.u8();
  const auto pk = r.fixed<32>();
  if (!alg || !pk || !r.at_end()) return std::nullopt;
  blob.recipient.alg = static_cast<KeyAlg>(*alg);
  blob.recipient.bytes = *pk;
  return blob;
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

// Fault injection knobs for security testing. `tamper_in_transit` flips one
// payload bit after signing (an on-air attacker); `wrong_purpose` signs an
// envelope whose claimed purpose differs from the service's declared one
// (an insider misusing collected data).
struct DispatchFaults {
  bool tamper_in_transit{false};
  bool wrong_purpose{false};
};

struct RecipientOutcome {
  NodeId node;
  SimTime arrival;
  bool accepted{false};
  Errc reason{Errc::integrity_failure};  // meaningful when !accepted
  std::optional<std::map<std::string, std::string>> fields;  // decoded payload if accepted
};

struct DispatchOutcome {
  MessageEnvelope envelope;  // as transmitted
  RoutingDecision routing;
  std::vector<RecipientOutcome> recipients;
  GeoPosition sender_position;
  bool personal{false};
};

// Everything the pipeline needs, bundled once per run.
struct NetworkEnv {
  World& world;
  ServiceRegistry& registry;
  CoverageModel& coverage;
  ChannelConfig& config;
  ChannelSelectionPolicy& selection_policy;
  PseudonymPolicy& pseudonym_policy;
  RevocationList& revocations;  // pseudonym certificate revocations
  PublicKey pa_key;
  KeyDirectory& keys;
  std::map<NodeId, PseudonymWallet>& wallets;
  TransparencyLog& network_log;
  std::uint64_t& next_message_id;
};

namespace detail {

inline void flip_first_bit(Bytes& bytes) {
  if (!bytes.empty()) bytes[0] ^= 0x01;
}

}  // namespace detail

inline Result<DispatchOutcome> dispatch(NetworkEnv& env, NodeId sender, const ServiceId& service,
                                        const Address& address,
                                        const std::map<std::string, std::string>& payload_fields,
                                        SimTime at, const DispatchFaults& faults = {}) {
  const ServiceDescriptor* svc = env.registry.find(service);
  if (!svc) return make_error(Errc::unknown_service, "service not registered: " + service);
  const Node* sender_node = env.world.find(sender);
  if (!sender_node) return make_error(Errc::unknown_node, "sender not registered");

  // (1) current pseudonym for this service under the scenario policy
  auto wallet_it = env.wallets.find(sender);
  if (wallet_it == env.wallets.end()) {
    return make_error(Errc::invalid_credential, "sender holds no pseudonym wallet");
  }
  auto pseudonym = wallet_it->second.current(env.pseudonym_policy, service, at);
  if (!pseudonym) return pseudonym.error();

  // (2) envelope with the service's declared class and purpose
  DispatchOutcome outcome;
  outcome.personal = svc->schema.personal();
  MessageEnvelope& envelope = outcome.envelope;
  envelope.message_id = env.next_message_id++;
  envelope.address = address;
  envelope.msg_class = svc->message_class;
  envelope.purpose =
      faults.wrong_purpose ? PurposeTag{"misdeclared:" + svc->purpose.value} : svc->purpose;
  envelope.created_at = at;

  // (3) encrypt iff unicast personal data
  const Bytes plain = encode_payload_fields(payload_fields);
  envelope.encrypted =
      outcome.personal && std::holds_alternative<UnicastAddress>(address);
  if (envelope.encrypted) {
    const auto& target = std::get<UnicastAddress>(address).target;
    const PublicKey* target_pk = env.keys.public_key(target);
    if (!target_pk) {
      return make_error(Errc::invalid_credential,
                        "no encryption key published for " + to_string(target));
    }
    auto blob = env.world.platform(sender).encrypt(*target_pk, plain);
    if (!blob) return blob.error();
    envelope.payload = encode_cipher_blob(blob.value());
  } else {
    envelope.payload = plain;
  }

  // (4) sign with the pseudonym key
  if (auto signed_ok = sign_envelope(env.world.platform(sender), pseudonym.value(), envelope);
      !signed_ok.ok()) {
    return signed_ok.error();
  }

  // (5) hybrid channel selection
  auto routing = select_channel(env.selection_policy, envelope.msg_class, address, env.world,
                                env.coverage, env.config, sender, at);
  if (!routing) return routing.error();
  outcome.routing = routing.take();
  outcome.sender_position = sender_node->position_at(at);

  // In-transit fault: the attacker cannot touch the signature computation,
  // only the bytes on the air.
  if (faults.tamper_in_transit) detail::flip_first_bit(envelope.payload);

  // (6) transmit (RFID runs its authentication exchange instead)
  std::vector<RecipientOutcome> raw;
  if (outcome.routing.chosen == ChannelKind::Rfid) {
    const auto& reader = std::get<ProximityAddress>(address).reader;
    auto auth = rfid_proximity_auth(env.world, env.coverage, env.config, reader, sender,
                                    envelope.cert, env.pa_key, env.revocations, env.network_log,
                                    at);
    RecipientOutcome r;
    r.node = reader;
    if (auth.ok()) {
      r.arrival = auth.value().completed_at;
      r.accepted = true;
    } else {
      r.arrival = at + env.config.rfid_latency_ms;
      r.accepted = false;
      r.reason = auth.code();
    }
    raw.push_back(std::move(r));
  } else {
    auto report = transmit(env.world, env.coverage, env.config, outcome.routing.chosen, envelope,
                           sender, at);
    if (!report) return report.error();
    for (const auto& a : report.value().recipients) {
      raw.push_back({a.node, a.at, true, Errc::integrity_failure, std::nullopt});
    }
    for (const auto& d : report.value().dropped) {
      raw.push_back({d.node, at, false, d.reason, std::nullopt});
    }
  }

  // (7) recipient-side verification: signature, certificate, revocation,
  // purpose. Acceptance requires all of them.
  for (auto& r : raw) {
    if (!r.accepted) {
      outcome.recipients.push_back(std::move(r));
      continue;
    }
    if (outcome.routing.chosen != ChannelKind::Rfid) {
      if (!verify_envelope_signature(envelope)) {
        r.accepted = false;
        r.reason = Errc::integrity_failure;
      } else if (!verify_certificate(envelope.cert, env.pa_key)) {
        r.accepted = false;
        r.reason = Errc::invalid_credential;
      } else if (env.revocations.is_revoked(envelope.cert.cert_id)) {
        r.accepted = false;
        r.reason = Errc::revoked_credential;
      } else if (envelope.purpose != svc->purpose) {
        // Replicas carry identical descriptors, so the local lookup is the
        // same check every other replica would make.
        r.accepted = false;
        r.reason = Errc::purpose_mismatch;
      }
    }
    if (r.accepted) {
      // Decode (and for the unicast target, decrypt) the payload.
      if (envelope.encrypted) {
        const KeyHandle* handle = env.keys.handle(r.node);
        const auto blob = decode_cipher_blob(envelope.payload);
        if (handle && blob) {
          auto plain_bytes = env.world.platform(r.node).decrypt(*handle, *blob);
          if (plain_bytes.ok()) {
            if (auto fields = decode_payload_fields(plain_bytes.value())) {
              r.fields = std::move(*fields);
            }
          } else {
            r.accepted = false;
            r.reason = Errc::auth_failure;
          }
        } else {
          r.accepted = false;
          r.reason = Errc::auth_failure;
        }
      } else if (auto fields = decode_payload_fields(envelope.payload)) {
        r.fields = std::move(*fields);
      }
    }
    outcome.recipients.push_back(std::move(r));
  }

  // (8) transparency entries at sender and accepting recipients
  env.network_log.append(envelope.sender_pseudonym.hex(), envelope.sender_pseudonym,
                         "send:" + service, envelope.purpose, at);
  for (const auto& r : outcome.recipients) {
    if (r.accepted) {
      env.network_log.append("node:" + to_string(r.node), envelope.sender_pseudonym,
                             "receive:" + service, envelope.purpose, r.arrival);
    }
  }
  return outcome;
}

}  // namespace hcsim
