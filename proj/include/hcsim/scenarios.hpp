#pragma once

// Built-in scenarios reconstructing the prose use cases: charging-point
// reservation over cellular, positioning inside a parking garage where
// cellular is dead, regional traffic information over DAB, RFID access
// barriers, a pseudonym linkability study and a data-minimization audit.

#include <string>
#include <vector>

#include "hcsim/sim.hpp"

namespace hcsim {

inline Scenario make_charging_reservation() {
  Scenario s;
  s.name = "charging_reservation";
  s.nodes = {
      {"chargingco", NodeKind::ServiceProvider, Plane::Backend, Trajectory::fixed({0, 0})},
      {"car1", NodeKind::Vehicle, Plane::Remote, Trajectory::fixed({100, 0})},
  };
  s.services = {
      {"charge_res", "chargingco", MessageClass::UserSpecific, PurposeTag{"charging"},
       {"plug_type", "slot"}},
  };
  s.actions = {
      {SimTime{1'000},
       DispatchAction{"car1", "charge_res", AddressDecl::unicast("chargingco"),
                      {{"plug_type", "CCS"}, {"slot", "4"}}, {}}},
      {SimTime{5'000},
       DispatchAction{"chargingco", "charge_res", AddressDecl::unicast("car1"),
                      {{"slot", "4"}}, {}}},
      {SimTime{10'000},
       SubjectRequestAction{"car1", "charge_res", "review", 0, "", ""}},
  };
  return s;
}

inline Scenario make_parking_garage_positioning() {
  Scenario s;
  s.name = "parking_garage_positioning";
  s.nodes = {
      {"posco", NodeKind::ServiceProvider, Plane::Backend, Trajectory::fixed({0, 0})},
      {"irs1", NodeKind::RoadsideStation, Plane::Network, Trajectory::fixed({500, 0})},
      {"car1", NodeKind::Vehicle, Plane::Remote, Trajectory::fixed({495, 0})},
      {"car2", NodeKind::Vehicle, Plane::Remote, Trajectory::fixed({505, 5})},
      {"car3", NodeKind::Vehicle, Plane::Remote, Trajectory::fixed({100, 0})},
  };
  // The garage: cellular dead, one roadside station inside.
  s.dead_zones = {CircularRegion{{500, 0}, 30.0}};
  s.stations = {{"irs1", 300.0}};
  s.services = {
      {"positioning", "posco", MessageClass::TimeCriticalLocal, PurposeTag{"positioning"},
       {"x", "y", "ref"}},
      {"garage_info", "posco", MessageClass::UserSpecific, PurposeTag{"garage_info"},
       {"stall"}},
  };
  for (std::int64_t t = 1'000; t <= 9'000; t += 2'000) {
    s.actions.push_back(
        {SimTime{t},
         DispatchAction{"irs1", "positioning", AddressDecl::geo({500, 0}, 100.0),
                        {{"x", "500"}, {"y", "0"}, {"ref", "garage"}}, {}}});
  }
  // A car inside the garage still reaches the backend: selection falls back
  // from cellular to ITS-G5 through the station.
  s.actions.push_back({SimTime{10'000},
                       DispatchAction{"car1", "garage_info", AddressDecl::unicast("posco"),
                                      {{"stall", "12"}}, {}}});
  return s;
}

inline Scenario make_regional_traffic_dab() {
  Scenario s;
  s.name = "regional_traffic_dab";
  s.nodes = {
      {"radioco", NodeKind::ServiceProvider, Plane::Backend, Trajectory::fixed({0, 0})},
      {"v1", NodeKind::Vehicle, Plane::Remote, Trajectory::fixed({1'000, 0})},
      {"v2", NodeKind::Vehicle, Plane::Remote, Trajectory::fixed({2'000, 500})},
      {"v3", NodeKind::Vehicle, Plane::Remote, Trajectory::fixed({-1'500, 300})},
      {"v4", NodeKind::Vehicle, Plane::Remote, Trajectory::fixed({0, 4'000})},
      {"v5", NodeKind::Vehicle, Plane::Remote, Trajectory::fixed({3'000, -3'000})},
      {"v6", NodeKind::Vehicle, Plane::Remote, Trajectory::fixed({6'000, 0})},
      {"v7", NodeKind::Vehicle, Plane::Remote, Trajectory::fixed({0, -7'000})},
      {"v8", NodeKind::Vehicle, Plane::Remote, Trajectory::fixed({8'000, 8'000})},
  };
  s.dab_regions["city"] = CircularRegion{{0, 0}, 5'000.0};
  s.services = {
      {"traffic_info", "radioco", MessageClass::WideAreaPublic, PurposeTag{"traffic"},
       {"road", "status"}},
  };
  for (std::int64_t t = 1'000; t <= 121'000; t += 60'000) {
    s.actions.push_back(
        {SimTime{t},
         DispatchAction{"radioco", "traffic_info", AddressDecl::regional("city"),
                        {{"road", "A620"}, {"status", "jam"}}, {}}});
  }
  // A vehicle has no DAB back channel; its report falls back to cellular.
  s.actions.push_back({SimTime{180'000},
                       DispatchAction{"v1", "traffic_info", AddressDecl::regional("city"),
                                      {{"road", "A620"}, {"status", "clear"}}, {}}});
  return s;
}

inline Scenario make_access_barrier_rfid() {
  Scenario s;
  s.name = "access_barrier_rfid";
  Trajectory approach{{SimTime{0}, {50, 0}}, {SimTime{20'000}, {0.5, 0}}};
  s.nodes = {
      {"parkingco", NodeKind::ServiceProvider, Plane::Backend, Trajectory::fixed({0, 0})},
      {"barrier1", NodeKind::AccessBarrier, Plane::Remote, Trajectory::fixed({0, 0})},
      {"car1", NodeKind::Vehicle, Plane::Remote, approach},
  };
  s.readers = {{"barrier1", 3.0}};
  s.services = {
      {"gate_access", "parkingco", MessageClass::ProximityAuth, PurposeTag{"access_control"},
       {"ticket"}},
  };
  s.actions = {
      // Still approaching: out of the reader's range.
      {SimTime{1'000}, RfidAuthAction{"car1", "barrier1", "gate_access"}},
      // At the barrier: granted, barrier opens.
      {SimTime{20'000}, RfidAuthAction{"car1", "barrier1", "gate_access"}},
      // Credential revoked afterwards: denied.
      {SimTime{25'000}, RevokeAction{"car1", "pseudonym", "gate_access"}},
      {SimTime{30'000}, RfidAuthAction{"car1", "barrier1", "gate_access"}},
  };
  return s;
}

// Two vehicles on parallel lanes report probe data every 2 s for 30 min and
// book charging every 5 min. The same fleet is run under different pseudonym
// policies to measure what each adversary can link.
inline Scenario make_linkability_study(PseudonymPolicy policy) {
  Scenario s;
  s.name = "pseudonym_linkability_study";
  s.pseudonym_policy = policy;
  constexpr std::int64_t duration_ms = 1'800'000;
  Trajectory lane1{{SimTime{0}, {0, 0}}, {SimTime{duration_ms}, {18'000, 0}}};
  Trajectory lane2{{SimTime{0}, {0, 5'000}}, {SimTime{duration_ms}, {18'000, 5'000}}};
  s.nodes = {
      {"mobilityco", NodeKind::ServiceProvider, Plane::Backend, Trajectory::fixed({0, 0})},
      {"chargingco", NodeKind::ServiceProvider, Plane::Backend, Trajectory::fixed({0, 100})},
      {"car1", NodeKind::Vehicle, Plane::Remote, lane1},
      {"car2", NodeKind::Vehicle, Plane::Remote, lane2},
  };
  s.services = {
      {"traffic_probe", "mobilityco", MessageClass::UserSpecific, PurposeTag{"probe"},
       {"speed"}},
      {"charge_res", "chargingco", MessageClass::UserSpecific, PurposeTag{"charging"},
       {"plug_type"}},
  };
  for (std::int64_t t = 0; t < duration_ms; t += 2'000) {
    s.actions.push_back({SimTime{t},
                         DispatchAction{"car1", "traffic_probe",
                                        AddressDecl::unicast("mobilityco"),
                                        {{"speed", "10"}}, {}}});
    s.actions.push_back({SimTime{t},
                         DispatchAction{"car2", "traffic_probe",
                                        AddressDecl::unicast("mobilityco"),
                                        {{"speed", "10"}}, {}}});
    if (t % 300'000 == 0) {
      s.actions.push_back({SimTime{t},
                           DispatchAction{"car1", "charge_res",
                                          AddressDecl::unicast("chargingco"),
                                          {{"plug_type", "CCS"}}, {}}});
      s.actions.push_back({SimTime{t},
                           DispatchAction{"car2", "charge_res",
                                          AddressDecl::unicast("chargingco"),
                                          {{"plug_type", "Type2"}}, {}}});
    }
  }
  return s;
}

inline Scenario make_pseudonym_linkability_study() {
  return make_linkability_study(
      PseudonymPolicy{PseudonymPolicy::Strategy::PerService, 0, 20});
}

inline Scenario make_minimization_audit() {
  Scenario s;
  s.name = "minimization_audit";
  s.nodes = {
      {"chargingco", NodeKind::ServiceProvider, Plane::Backend, Trajectory::fixed({0, 0})},
      {"datacorp", NodeKind::ServiceProvider, Plane::Backend, Trajectory::fixed({50, 0})},
      {"car1", NodeKind::Vehicle, Plane::Remote, Trajectory::fixed({100, 0})},
  };
  s.services = {
      {"charge_res", "chargingco", MessageClass::UserSpecific, PurposeTag{"charging"},
       {"plug_type", "slot"}},
      {"usage_stats", "datacorp", MessageClass::UserSpecific, PurposeTag{"analytics"},
       {"usage"}},
  };
  s.actions = {
      {SimTime{1'000},
       DispatchAction{"car1", "charge_res", AddressDecl::unicast("chargingco"),
                      {{"plug_type", "CCS"}, {"slot", "4"}}, {}}},
      // The greedy service receives and stores more than its schema allows.
      {SimTime{2'000},
       DispatchAction{"car1", "usage_stats", AddressDecl::unicast("datacorp"),
                      {{"usage", "5"}, {"home_address", "Goebenstr. 40"}, {"vin", "WVWZZZ1K"}},
                      {}}},
      {SimTime{3'000},
       DispatchAction{"car1", "usage_stats", AddressDecl::unicast("datacorp"),
                      {{"usage", "6"}}, {}}},
  };
  return s;
}

inline std::vector<Scenario> builtin_scenarios() {
  return {
      make_charging_reservation(),     make_parking_garage_positioning(),
      make_regional_traffic_dab(),     make_access_barrier_rfid(),
      make_pseudonym_linkability_study(), make_minimization_audit(),
  };
}

inline std::optional<Scenario> find_builtin(std::string_view name) {
  for (auto& s : builtin_scenarios()) {
    if (s.name == name) return s;
  }
  return std::nullopt;
}

}  // namespace hcsim
