#pragma once

// Simulated channel adapters for the four technologies. Delivery is a pure
// function of scenario geometry: given the same world snapshot, coverage
// model and send time, the recipient set is always the same. No packet loss
// model; determinism is what makes the delivery oracles exact.
//
// Semantics per technology:
//   Cellular  bidirectional unicast everywhere except declared dead zones;
//             broadcast addresses are served by network-side fan-out.
//   ITS-G5    ad-hoc radio: geo-broadcast around the sender, unicast either
//             direct within radio range or relayed through a roadside
//             station into the infrastructure.
//   DAB+      one-to-many regional downlink, no back channel: only Backend
//             or Network plane senders, recipients are the Remote-plane
//             nodes inside the addressed region, independent of the sender
//             position.
//   RFID      proximity authentication only; carries no message envelopes.

#include <optional>
#include <vector>

#include "hcsim/credentials.hpp"
#include "hcsim/envelope.hpp"
#include "hcsim/result.hpp"
#include "hcsim/transparency.hpp"
#include "hcsim/types.hpp"
#include "hcsim/world.hpp"

namespace hcsim {

enum class ChannelKind : std::uint8_t { Cellular, ItsG5, Dab, Rfid };

constexpr std::array<ChannelKind, 4> all_channel_kinds = {
    ChannelKind::Cellular, ChannelKind::ItsG5, ChannelKind::Dab, ChannelKind::Rfid};

inline std::string_view channel_kind_name(ChannelKind k) {
  switch (k) {
    case ChannelKind::Cellular: return "cellular";
    case ChannelKind::ItsG5: return "its_g5";
    case ChannelKind::Dab: return "dab";
    case ChannelKind::Rfid: return "rfid";
  }
  return "?";
}

inline std::optional<ChannelKind> channel_kind_from_name(std::string_view s) {
  if (s == "cellular") return ChannelKind::Cellular;
  if (s == "its_g5") return ChannelKind::ItsG5;
  if (s == "dab") return ChannelKind::Dab;
  if (s == "rfid") return ChannelKind::Rfid;
  return std::nullopt;
}

struct ChannelCapability {
  bool bidirectional{false};
  bool back_channel{false};
  bool supports_unicast{false};
  bool supports_broadcast{false};
  std::optional<double> max_range_m;  // absent: coverage-map based
  std::int64_t fixed_latency_ms{0};
};

// Scenario-tunable channel parameters. ITS-G5 reaches a few hundred meters,
// RFID a few meters; the defaults respect those bounds and order the
// latencies by time criticality. Tests depend on the ordering and
// determinism, never on the absolute values.
struct ChannelConfig {
  double g5_range_m{300.0};    // <= 1000
  double rfid_range_m{3.0};    // <= 10
  std::int64_t cellular_latency_ms{100};
  std::int64_t g5_latency_ms{10};
  std::int64_t dab_latency_ms{1'000};  // carousel delay
  std::int64_t rfid_latency_ms{5};

  Result<void> validate() const {
    if (!(g5_range_m > 0 && g5_range_m <= 1'000)) {
      return make_error(Errc::scenario_invalid, "ITS-G5 range must be in (0, 1000] m");
    }
    if (!(rfid_range_m > 0 && rfid_range_m <= 10)) {
      return make_error(Errc::scenario_invalid, "RFID range must be in (0, 10] m");
    }
    if (cellular_latency_ms < 0 || g5_latency_ms < 0 || dab_latency_ms < 0 ||
        rfid_latency_ms < 0) {
      return make_error(Errc::scenario_invalid, "latencies must be non-negative");
    }
    return {};
  }
};

inline ChannelCapability capabilities(ChannelKind kind, const ChannelConfig& config = {}) {
  switch (kind) {
    case ChannelKind::Cellular:
      return {.bidirectional = true,
              .back_channel = true,
              .supports_unicast = true,
              .supports_broadcast = true,
              .max_range_m = std::nullopt,
              .fixed_latency_ms = config.cellular_latency_ms};
    case ChannelKind::ItsG5:
      return {.bidirectional = true,
              .back_channel = true,
              .supports_unicast = true,
              .supports_broadcast = true,
              .max_range_m = config.g5_range_m,
              .fixed_latency_ms = config.g5_latency_ms};
    case ChannelKind::Dab:
      return {.bidirectional = false,
              .back_channel = false,
              .supports_unicast = false,
              .supports_broadcast = true,
              .max_range_m = std::nullopt,
              .fixed_latency_ms = config.dab_latency_ms};
    case ChannelKind::Rfid:
      return {.bidirectional = true,
              .back_channel = true,
              .supports_unicast = false,
              .supports_broadcast = false,
              .max_range_m = config.rfid_range_m,
              .fixed_latency_ms = config.rfid_latency_ms};
  }
  return {};
}

// Which address modes a technology can carry at all.
inline bool supports_address(ChannelKind kind, AddressMode mode) {
  switch (kind) {
    case ChannelKind::Cellular:
      return mode == AddressMode::Unicast || mode == AddressMode::GeoBroadcast ||
             mode == AddressMode::RegionalBroadcast;
    case ChannelKind::ItsG5:
      return mode == AddressMode::Unicast || mode == AddressMode::GeoBroadcast;
    case ChannelKind::Dab:
      return mode == AddressMode::RegionalBroadcast;
    case ChannelKind::Rfid:
      return mode == AddressMode::Proximity;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Coverage model
// ---------------------------------------------------------------------------

struct G5Station {
  NodeId node;
  GeoPosition position;
  double range_m{300.0};
};

struct RfidReader {
  NodeId node;
  GeoPosition position;
  double range_m{3.0};
};

struct CoverageModel {
  std::vector<CircularRegion> cellular_dead_zones;  // e.g. parking garages
  std::map<RegionId, CircularRegion> dab_regions;
  std::vector<G5Station> g5_stations;
  std::vector<RfidReader> rfid_readers;

  bool in_dead_zone(GeoPosition p) const {
    for (const auto& z : cellular_dead_zones) {
      if (z.contains(p)) return true;
    }
    return false;
  }

  const CircularRegion* region(const RegionId& id) const {
    const auto it = dab_regions.find(id);
    return it == dab_regions.end() ? nullptr : &it->second;
  }

  const RfidReader* reader(NodeId node) const {
    for (const auto& r : rfid_readers) {
      if (r.node == node) return &r;
    }
    return nullptr;
  }

  bool station_covers(GeoPosition p) const {
    for (const auto& s : g5_stations) {
      if (distance(s.position, p) <= s.range_m) return true;
    }
    return false;
  }

  Result<void> validate() const {
    for (const auto& z : cellular_dead_zones) {
      if (z.radius_m <= 0) return make_error(Errc::scenario_invalid, "dead zone radius <= 0");
    }
    for (const auto& [id, r] : dab_regions) {
      if (r.radius_m <= 0) return make_error(Errc::scenario_invalid, "DAB region radius <= 0");
    }
    for (const auto& s : g5_stations) {
      if (s.range_m <= 0) return make_error(Errc::scenario_invalid, "station range <= 0");
    }
    for (const auto& r : rfid_readers) {
      if (r.range_m <= 0) return make_error(Errc::scenario_invalid, "reader range <= 0");
    }
    return {};
  }
};

// ---------------------------------------------------------------------------
// Delivery
// ---------------------------------------------------------------------------

struct Arrival {
  NodeId node;
  SimTime at;
};

struct Dropped {
  NodeId node;
  Errc reason{Errc::out_of_coverage};
};

struct DeliveryReport {
  ChannelKind channel{ChannelKind::Cellular};
  std::vector<Arrival> recipients;
  std::vector<Dropped> dropped;
};

namespace detail {

// A node can hand traffic into the ITS-G5 infrastructure if it is wired
// (Backend/Network plane) or within coverage of a roadside station.
inline bool g5_infrastructure_access(const Node& node, GeoPosition pos,
                                     const CoverageModel& coverage) {
  if (node.plane == Plane::Backend || node.plane == Plane::Network) return true;
  return coverage.station_covers(pos);
}

}  // namespace detail

// Executes one transmission at `at` and reports exactly which nodes the
// technology reaches. Arrival time is send time plus the channel's fixed
// latency. Per-recipient failures (dead zone, out of radio range) land in
// `dropped`; sender-side failures are errors.
inline Result<DeliveryReport> transmit(const World& world, const CoverageModel& coverage,
                                       const ChannelConfig& config, ChannelKind kind,
                                       const MessageEnvelope& envelope, NodeId sender,
                                       SimTime at) {
  const Node* sender_node = world.find(sender);
  if (!sender_node) return make_error(Errc::unknown_node, "sender not registered");
  const AddressMode mode = address_mode(envelope.address);
  if (!supports_address(kind, mode)) {
    if (kind == ChannelKind::Rfid) {
      return make_error(Errc::unsupported_address,
                        "RFID carries no message envelopes; use rfid_proximity_auth");
    }
    return make_error(Errc::unsupported_address,
                      std::string(address_mode_name(mode)) + " not supported over " +
                          std::string(channel_kind_name(kind)));
  }

  const GeoPosition sender_pos = sender_node->position_at(at);
  const SimTime arrival = at + capabilities(kind, config).fixed_latency_ms;
  DeliveryReport report;
  report.channel = kind;

  switch (kind) {
    case ChannelKind::Cellular: {
      if (coverage.in_dead_zone(sender_pos)) {
        return make_error(Errc::out_of_coverage, "cellular sender inside a dead zone");
      }
      if (const auto* u = std::get_if<UnicastAddress>(&envelope.address)) {
        const Node* target = world.find(u->target);
        if (!target) return make_error(Errc::unknown_node, "unicast target not registered");
        if (coverage.in_dead_zone(target->position_at(at))) {
          return make_error(Errc::out_of_coverage, "cellular target inside a dead zone");
        }
        report.recipients.push_back({u->target, arrival});
      } else if (const auto* g = std::get_if<GeoBroadcastAddress>(&envelope.address)) {
        // Network-side fan-out to every device inside the target area.
        for (const auto& [id, node] : world.nodes()) {
          if (id == sender || node.plane == Plane::Backend) continue;
          const GeoPosition pos = node.position_at(at);
          if (distance(pos, g->center) > g->radius_m) continue;
          if (coverage.in_dead_zone(pos)) {
            report.dropped.push_back({id, Errc::out_of_coverage});
          } else {
            report.recipients.push_back({id, arrival});
          }
        }
      } else if (const auto* r = std::get_if<RegionalBroadcastAddress>(&envelope.address)) {
        const CircularRegion* region = coverage.region(r->region);
        if (!region) return make_error(Errc::out_of_coverage, "region not declared: " + r->region);
        for (const auto& [id, node] : world.nodes()) {
          if (id == sender || node.plane != Plane::Remote) continue;
          const GeoPosition pos = node.position_at(at);
          if (!region->contains(pos)) continue;
          if (coverage.in_dead_zone(pos)) {
            report.dropped.push_back({id, Errc::out_of_coverage});
          } else {
            report.recipients.push_back({id, arrival});
          }
        }
      }
      return report;
    }

    case ChannelKind::ItsG5: {
      if (const auto* g = std::get_if<GeoBroadcastAddress>(&envelope.address)) {
        // Radio propagates from the sender; the address radius can only
        // shrink the radio range, never extend it.
        const double effective = std::min(g->radius_m, config.g5_range_m);
        for (const auto& [id, node] : world.nodes()) {
          if (id == sender || node.plane == Plane::Backend) continue;
          if (distance(node.position_at(at), sender_pos) <= effective) {
            report.recipients.push_back({id, arrival});
          }
        }
        return report;
      }
      const auto& u = std::get<UnicastAddress>(envelope.address);
      const Node* target = world.find(u.target);
      if (!target) return make_error(Errc::unknown_node, "unicast target not registered");
      const GeoPosition target_pos = target->position_at(at);
      const bool direct = distance(sender_pos, target_pos) <= config.g5_range_m;
      const bool relayed = detail::g5_infrastructure_access(*sender_node, sender_pos, coverage) &&
                           detail::g5_infrastructure_access(*target, target_pos, coverage);
      if (!direct && !relayed) {
        if (!detail::g5_infrastructure_access(*sender_node, sender_pos, coverage)) {
          return make_error(Errc::out_of_coverage, "no roadside station within ITS-G5 range");
        }
        report.dropped.push_back({u.target, Errc::out_of_range});
        return report;
      }
      report.recipients.push_back({u.target, arrival});
      return report;
    }

    case ChannelKind::Dab: {
      if (sender_node->plane == Plane::Remote) {
        return make_error(Errc::no_back_channel, "DAB has no back channel for remote senders");
      }
      const auto& r = std::get<RegionalBroadcastAddress>(envelope.address);
      const CircularRegion* region = coverage.region(r.region);
      if (!region) return make_error(Errc::out_of_coverage, "region not declared: " + r.region);
      // Region membership alone decides; the sender position is irrelevant.
      for (const auto& [id, node] : world.nodes()) {
        if (id == sender || node.plane != Plane::Remote) continue;
        if (region->contains(node.position_at(at))) {
          report.recipients.push_back({id, arrival});
        }
      }
      return report;
    }

    case ChannelKind::Rfid:
      return make_error(Errc::unsupported_address, "unreachable");
  }
  return make_error(Errc::unsupported_address, "unknown channel");
}

// ---------------------------------------------------------------------------
// RFID proximity authentication
// ---------------------------------------------------------------------------

struct AuthResult {
  NodeId reader;
  PseudonymId pseudonym;
  SimTime completed_at;
};

// Short-range credential check at a reader (e.g. an access barrier).
// Succeeds iff the tag holder is within the reader's range and presents a
// verifying, unrevoked credential. Every attempt, granted or denied, is
// logged to the given transparency log.
inline Result<AuthResult> rfid_proximity_auth(const World& world, const CoverageModel& coverage,
                                              const ChannelConfig& config, NodeId reader,
                                              NodeId tag_holder,
                                              const PseudonymCertificate& credential,
                                              const PublicKey& issuer_key,
                                              const RevocationList& revocations,
                                              TransparencyLog& log, SimTime at) {
  const auto deny = [&](Errc code, const std::string& why) -> Result<AuthResult> {
    log.append("reader:" + to_string(reader), credential.pseudonym_id,
               "proximity_auth:denied:" + std::string(errc_name(code)),
               PurposeTag{"access_control"}, at);
    return make_error(code, why);
  };

  const RfidReader* r = coverage.reader(reader);
  if (!r) return make_error(Errc::out_of_coverage, "reader not registered in coverage model");
  const auto holder_pos = world.position_of(tag_holder, at);
  if (!holder_pos.ok()) return holder_pos.error();

  if (distance(r->position, holder_pos.value()) > std::min(r->range_m, config.rfid_range_m)) {
    return deny(Errc::out_of_range, "tag holder outside reader range");
  }
  if (!verify_certificate(credential, issuer_key)) {
    return deny(Errc::invalid_credential, "credential does not verify");
  }
  if (revocations.is_revoked(credential.cert_id)) {
    return deny(Errc::revoked_credential, "credential revoked");
  }

  const SimTime done = at + config.rfid_latency_ms;
  log.append("reader:" + to_string(reader), credential.pseudonym_id, "proximity_auth:granted",
             PurposeTag{"access_control"}, at);
  return AuthResult{reader, credential.pseudonym_id, done};
}

}  // namespace hcsim
