#pragma once

// Shared domain vocabulary: planes, node kinds, geography, time, addressing.
// Everything here is an immutable value type.

#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "hcsim/bytes.hpp"

namespace hcsim {

// ---------------------------------------------------------------------------
// Planes and node kinds
// ---------------------------------------------------------------------------

// The architecture is split into three planes: service providers and
// governance on top, the access networks in the middle, and the field-level
// endpoints (vehicles, barriers, charging stations, ...) at the bottom.
enum class Plane : std::uint8_t { Backend, Network, Remote };

enum class NodeKind : std::uint8_t {
  Vehicle,
  Smartphone,
  ChargingStation,
  TrafficLight,
  AccessBarrier,
  RoadsideStation,
  ServiceProvider,
  NetworkOperator,
  GovernanceAuthority,
};

// Each kind lives on exactly one plane. Roadside stations are part of the
// ITS-G5 access network, so they sit on the Network plane; all other field
// devices are Remote endpoints.
inline Plane legal_plane(NodeKind kind) {
  switch (kind) {
    case NodeKind::Vehicle:
    case NodeKind::Smartphone:
    case NodeKind::ChargingStation:
    case NodeKind::TrafficLight:
    case NodeKind::AccessBarrier:
      return Plane::Remote;
    case NodeKind::RoadsideStation:
    case NodeKind::NetworkOperator:
      return Plane::Network;
    case NodeKind::ServiceProvider:
    case NodeKind::GovernanceAuthority:
      return Plane::Backend;
  }
  return Plane::Remote;
}

inline std::string_view plane_name(Plane p) {
  switch (p) {
    case Plane::Backend: return "backend";
    case Plane::Network: return "network";
    case Plane::Remote: return "remote";
  }
  return "?";
}

inline std::optional<Plane> plane_from_name(std::string_view s) {
  if (s == "backend") return Plane::Backend;
  if (s == "network") return Plane::Network;
  if (s == "remote") return Plane::Remote;
  return std::nullopt;
}

inline std::string_view node_kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::Vehicle: return "vehicle";
    case NodeKind::Smartphone: return "smartphone";
    case NodeKind::ChargingStation: return "charging_station";
    case NodeKind::TrafficLight: return "traffic_light";
    case NodeKind::AccessBarrier: return "access_barrier";
    case NodeKind::RoadsideStation: return "roadside_station";
    case NodeKind::ServiceProvider: return "service_provider";
    case NodeKind::NetworkOperator: return "network_operator";
    case NodeKind::GovernanceAuthority: return "governance_authority";
  }
  return "?";
}

inline std::optional<NodeKind> node_kind_from_name(std::string_view s) {
  if (s == "vehicle") return NodeKind::Vehicle;
  if (s == "smartphone") return NodeKind::Smartphone;
  if (s == "charging_station") return NodeKind::ChargingStation;
  if (s == "traffic_light") return NodeKind::TrafficLight;
  if (s == "access_barrier") return NodeKind::AccessBarrier;
  if (s == "roadside_station") return NodeKind::RoadsideStation;
  if (s == "service_provider") return NodeKind::ServiceProvider;
  if (s == "network_operator") return NodeKind::NetworkOperator;
  if (s == "governance_authority") return NodeKind::GovernanceAuthority;
  return std::nullopt;
}

constexpr std::array<NodeKind, 9> all_node_kinds = {
    NodeKind::Vehicle,        NodeKind::Smartphone,      NodeKind::ChargingStation,
    NodeKind::TrafficLight,   NodeKind::AccessBarrier,   NodeKind::RoadsideStation,
    NodeKind::ServiceProvider, NodeKind::NetworkOperator, NodeKind::GovernanceAuthority,
};

constexpr std::array<Plane, 3> all_planes = {Plane::Backend, Plane::Network, Plane::Remote};

// ---------------------------------------------------------------------------
// Identifiers
// ---------------------------------------------------------------------------

struct NodeId {
  std::uint32_t value{0};
  auto operator<=>(const NodeId&) const = default;
};

inline std::string to_string(NodeId id) { return "n" + std::to_string(id.value); }

inline std::optional<NodeId> node_id_from_string(std::string_view s) {
  if (s.size() < 2 || s[0] != 'n') return std::nullopt;
  auto v = parse_u64(s.substr(1));
  if (!v || *v > 0xffffffffULL) return std::nullopt;
  return NodeId{static_cast<std::uint32_t>(*v)};
}

// 128-bit random identifier drawn from a node's platform randomness.
struct PseudonymId {
  std::array<std::uint8_t, 16> bytes{};
  auto operator<=>(const PseudonymId&) const = default;
  std::string hex() const { return hex_encode(bytes); }
};

// Certificate identifier (both enrollment and pseudonym certificates).
struct CertId {
  std::array<std::uint8_t, 16> bytes{};
  auto operator<=>(const CertId&) const = default;
  std::string hex() const { return hex_encode(bytes); }
};

using ServiceId = std::string;
using RegionId = std::string;

// Declared collection purpose. Every stored record and every envelope is
// tagged with one; recipients reject messages whose purpose does not match
// the service's declared purpose.
struct PurposeTag {
  std::string value;
  auto operator<=>(const PurposeTag&) const = default;
};

// ---------------------------------------------------------------------------
// Time
// ---------------------------------------------------------------------------

// Simulation time: integer milliseconds since scenario start. Integer so a
// run is exactly reproducible; never negative.
struct SimTime {
  std::int64_t ms{0};
  auto operator<=>(const SimTime&) const = default;
};

inline SimTime operator+(SimTime t, std::int64_t delta_ms) { return SimTime{t.ms + delta_ms}; }

// ---------------------------------------------------------------------------
// Geography
// ---------------------------------------------------------------------------

// Planar coordinates in meters (east/north). Scenarios span at most tens of
// kilometers, so no geodesic math.
struct GeoPosition {
  double x{0};
  double y{0};
  auto operator<=>(const GeoPosition&) const = default;
};

inline double distance(GeoPosition a, GeoPosition b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

struct CircularRegion {
  GeoPosition center;
  double radius_m{0};

  bool contains(GeoPosition p) const { return distance(center, p) <= radius_m; }
  auto operator<=>(const CircularRegion&) const = default;
};

// ---------------------------------------------------------------------------
// Message classes and addressing
// ---------------------------------------------------------------------------

enum class MessageClass : std::uint8_t {
  TimeCriticalLocal,
  WideAreaPublic,
  UserSpecific,
  ProximityAuth,
};

constexpr std::array<MessageClass, 4> all_message_classes = {
    MessageClass::TimeCriticalLocal,
    MessageClass::WideAreaPublic,
    MessageClass::UserSpecific,
    MessageClass::ProximityAuth,
};

inline std::string_view message_class_name(MessageClass c) {
  switch (c) {
    case MessageClass::TimeCriticalLocal: return "time_critical_local";
    case MessageClass::WideAreaPublic: return "wide_area_public";
    case MessageClass::UserSpecific: return "user_specific";
    case MessageClass::ProximityAuth: return "proximity_auth";
  }
  return "?";
}

inline std::optional<MessageClass> message_class_from_name(std::string_view s) {
  if (s == "time_critical_local") return MessageClass::TimeCriticalLocal;
  if (s == "wide_area_public") return MessageClass::WideAreaPublic;
  if (s == "user_specific") return MessageClass::UserSpecific;
  if (s == "proximity_auth") return MessageClass::ProximityAuth;
  return std::nullopt;
}

struct UnicastAddress {
  NodeId target;
  auto operator<=>(const UnicastAddress&) const = default;
};

struct GeoBroadcastAddress {
  GeoPosition center;
  double radius_m{0};  // > 0
  auto operator<=>(const GeoBroadcastAddress&) const = default;
};

struct RegionalBroadcastAddress {
  RegionId region;
  auto operator<=>(const RegionalBroadcastAddress&) const = default;
};

struct ProximityAddress {
  NodeId reader;
  auto operator<=>(const ProximityAddress&) const = default;
};

using Address = std::variant<UnicastAddress, GeoBroadcastAddress, RegionalBroadcastAddress,
                             ProximityAddress>;

enum class AddressMode : std::uint8_t { Unicast, GeoBroadcast, RegionalBroadcast, Proximity };

inline AddressMode address_mode(const Address& a) {
  if (std::holds_alternative<UnicastAddress>(a)) return AddressMode::Unicast;
  if (std::holds_alternative<GeoBroadcastAddress>(a)) return AddressMode::GeoBroadcast;
  if (std::holds_alternative<RegionalBroadcastAddress>(a)) return AddressMode::RegionalBroadcast;
  return AddressMode::Proximity;
}

inline std::string_view address_mode_name(AddressMode m) {
  switch (m) {
    case AddressMode::Unicast: return "unicast";
    case AddressMode::GeoBroadcast: return "geo_broadcast";
    case AddressMode::RegionalBroadcast: return "regional_broadcast";
    case AddressMode::Proximity: return "proximity";
  }
  return "?";
}

// Canonical serialization of an address (tag byte + payload), used inside
// the signed envelope tuple.
inline void write_address(ByteWriter& w, const Address& a) {
  if (const auto* u = std::get_if<UnicastAddress>(&a)) {
    w.u8(0);
    w.u32(u->target.value);
  } else if (const auto* g = std::get_if<GeoBroadcastAddress>(&a)) {
    w.u8(1);
    w.f64(g->center.x);
    w.f64(g->center.y);
    w.f64(g->radius_m);
  } else if (const auto* r = std::get_if<RegionalBroadcastAddress>(&a)) {
    w.u8(2);
    w.str(r->region);
  } else if (const auto* p = std::get_if<ProximityAddress>(&a)) {
    w.u8(3);
    w.u32(p->reader.value);
  }
}

inline std::string address_to_string(const Address& a) {
  if (const auto* u = std::get_if<UnicastAddress>(&a)) {
    return "unicast:" + to_string(u->target);
  }
  if (const auto* g = std::get_if<GeoBroadcastAddress>(&a)) {
    return "geo:" + format_double(g->center.x) + "," + format_double(g->center.y) + "," +
           format_double(g->radius_m);
  }
  if (const auto* r = std::get_if<RegionalBroadcastAddress>(&a)) {
    return "region:" + r->region;
  }
  const auto& p = std::get<ProximityAddress>(a);
  return "proximity:" + to_string(p.reader);
}

inline std::optional<Address> address_from_string(std::string_view s) {
  const auto colon = s.find(':');
  if (colon == std::string_view::npos) return std::nullopt;
  const auto head = s.substr(0, colon);
  const auto rest = s.substr(colon + 1);
  if (head == "unicast") {
    auto id = node_id_from_string(rest);
    if (!id) return std::nullopt;
    return Address{UnicastAddress{*id}};
  }
  if (head == "geo") {
    const auto c1 = rest.find(',');
    if (c1 == std::string_view::npos) return std::nullopt;
    const auto c2 = rest.find(',', c1 + 1);
    if (c2 == std::string_view::npos) return std::nullopt;
    auto x = parse_double(rest.substr(0, c1));
    auto y = parse_double(rest.substr(c1 + 1, c2 - c1 - 1));
    auto r = parse_double(rest.substr(c2 + 1));
    if (!x || !y || !r) return std::nullopt;
    return Address{GeoBroadcastAddress{GeoPosition{*x, *y}, *r}};
  }
  if (head == "region") {
    return Address{RegionalBroadcastAddress{std::string(rest)}};
  }
  if (head == "proximity") {
    auto id = node_id_from_string(rest);
    if (!id) return std::nullopt;
    return Address{ProximityAddress{*id}};
  }
  return std::nullopt;
}

}  // namespace hcsim
