#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <set>

#include "hcsim/network.hpp"

using namespace hcsim;

namespace {

// A small deployment: one backend provider, one roadside station, two cars,
// a parking-garage dead zone around (500, 0).
struct NetworkRig {
  World world{42};
  EnrollmentAuthority ea{seed_from_u64(1'000)};
  PseudonymAuthority pa{seed_from_u64(2'000), ea.public_key()};
  ServiceRegistry registry;
  CoverageModel coverage;
  ChannelConfig config;
  ChannelSelectionPolicy selection = ChannelSelectionPolicy::defaults();
  PseudonymPolicy policy{PseudonymPolicy::Strategy::PerService, 0, 20};
  RevocationList revocations;
  KeyDirectory keys;
  std::map<NodeId, PseudonymWallet> wallets;
  TransparencyLog network_log{"network"};
  std::uint64_t next_message_id{1};

  NodeId provider;
  NodeId station;
  NodeId car_open;    // in the open, cellular works
  NodeId car_garage;  // inside the dead zone, near the station

  EnrollmentCertificate provider_enrollment;

  NetworkRig() {
    provider =
        world.register_node(NodeKind::ServiceProvider, Plane::Backend, GeoPosition{0, 0}).value();
    station =
        world.register_node(NodeKind::RoadsideStation, Plane::Network, GeoPosition{490, 0})
            .value();
    car_open = world.register_node(NodeKind::Vehicle, Plane::Remote, GeoPosition{100, 0}).value();
    car_garage =
        world.register_node(NodeKind::Vehicle, Plane::Remote, GeoPosition{500, 0}).value();

    coverage.cellular_dead_zones.push_back(CircularRegion{{500, 0}, 30.0});
    coverage.g5_stations.push_back({station, GeoPosition{490, 0}, 300.0});

    for (const NodeId n : {provider, station, car_open, car_garage}) {
      keys.provision(world, n);
      auto enrollment = ea.enroll(world, n, SimTime{0}).take();
      if (n == provider) provider_enrollment = enrollment.certificate;
      auto issued = pa.issue(world, enrollment.certificate, 20, MessageClass::UserSpecific,
                             SimTime{0}, ea.revocations());
      PseudonymWallet wallet;
      for (auto& p : issued.take()) wallet.add(std::move(p));
      wallets.emplace(n, std::move(wallet));
    }

    ServiceDescriptor charging;
    charging.service_id = "charge_res";
    charging.provider = provider;
    charging.message_class = MessageClass::UserSpecific;
    charging.purpose = PurposeTag{"charging"};
    charging.schema = DataSchema{PurposeTag{"charging"}, {"plug_type", "slot"}};
    charging.provider_certificate = provider_enrollment;
    REQUIRE(
        registry.register_service(charging, ea.public_key(), ea.revocations(), SimTime{0}).ok());

    ServiceDescriptor positioning;
    positioning.service_id = "positioning";
    positioning.provider = provider;
    positioning.message_class = MessageClass::TimeCriticalLocal;
    positioning.purpose = PurposeTag{"positioning"};
    positioning.schema = DataSchema{PurposeTag{"positioning"}, {"x", "y"}};
    positioning.provider_certificate = provider_enrollment;
    REQUIRE(registry.register_service(positioning, ea.public_key(), ea.revocations(), SimTime{0})
                .ok());
  }

  NetworkEnv env() {
    return NetworkEnv{world,       registry, coverage,        config,
                      selection,   policy,   revocations,     pa.public_key(),
                      keys,        wallets,  network_log,     next_message_id};
  }
};

}  // namespace

TEST_CASE("service registration gate") {
  NetworkRig rig;

  SECTION("valid descriptor registers and resolves") {
    CHECK(rig.registry.find("charge_res") != nullptr);
    CHECK(rig.registry.find("charge_res")->provider == rig.provider);
  }

  SECTION("expired provider certificate is rejected") {
    ServiceDescriptor d;
    d.service_id = "late_service";
    d.provider = rig.provider;
    d.message_class = MessageClass::UserSpecific;
    d.purpose = PurposeTag{"late"};
    d.schema = DataSchema{PurposeTag{"late"}, {"f"}};
    d.provider_certificate = rig.provider_enrollment;
    const SimTime after_expiry{rig.provider_enrollment.valid_to.ms + 1};
    const auto r =
        rig.registry.register_service(d, rig.ea.public_key(), rig.ea.revocations(), after_expiry);
    REQUIRE(!r.ok());
    CHECK(r.code() == Errc::invalid_provider_certificate);
  }

  SECTION("duplicate service id is rejected") {
    ServiceDescriptor d;
    d.service_id = "charge_res";
    d.provider = rig.provider;
    d.message_class = MessageClass::UserSpecific;
    d.purpose = PurposeTag{"charging"};
    d.schema = DataSchema{PurposeTag{"charging"}, {"plug_type"}};
    d.provider_certificate = rig.provider_enrollment;
    const auto r =
        rig.registry.register_service(d, rig.ea.public_key(), rig.ea.revocations(), SimTime{0});
    REQUIRE(!r.ok());
    CHECK(r.code() == Errc::duplicate_service_id);
  }

  SECTION("certificate bound to a different node is rejected") {
    ServiceDescriptor d;
    d.service_id = "impostor";
    d.provider = rig.car_open;  // claims the backend provider's certificate
    d.message_class = MessageClass::UserSpecific;
    d.purpose = PurposeTag{"x"};
    d.schema = DataSchema{PurposeTag{"x"}, {"f"}};
    d.provider_certificate = rig.provider_enrollment;
    const auto r =
        rig.registry.register_service(d, rig.ea.public_key(), rig.ea.revocations(), SimTime{0});
    REQUIRE(!r.ok());
    CHECK(r.code() == Errc::invalid_provider_certificate);
  }

  SECTION("replicas carry identical content") {
    const ServiceRegistry replica = rig.registry.replicate();
    CHECK(replica == rig.registry);
    CHECK(replica.find("charge_res") != nullptr);
  }
}

TEST_CASE("hybrid channel selection") {
  NetworkRig rig;
  const auto policy = ChannelSelectionPolicy::defaults();
  REQUIRE(policy.validate().ok());

  SECTION("time-critical local geo-broadcast picks ITS-G5 first") {
    const auto d = select_channel(policy, MessageClass::TimeCriticalLocal,
                                  GeoBroadcastAddress{{500, 0}, 200.0}, rig.world, rig.coverage,
                                  rig.config, rig.car_garage, SimTime{0});
    REQUIRE(d.ok());
    CHECK(d.value().chosen == ChannelKind::ItsG5);
    CHECK(d.value().fallbacks_tried.empty());
  }

  SECTION("wide-area public regional broadcast from the backend picks DAB") {
    CoverageModel coverage = rig.coverage;
    coverage.dab_regions["city"] = CircularRegion{{0, 0}, 10'000.0};
    const auto d = select_channel(policy, MessageClass::WideAreaPublic,
                                  RegionalBroadcastAddress{"city"}, rig.world, coverage,
                                  rig.config, rig.provider, SimTime{0});
    REQUIRE(d.ok());
    CHECK(d.value().chosen == ChannelKind::Dab);
  }

  SECTION("user-specific unicast from a dead zone falls back to ITS-G5") {
    const auto d =
        select_channel(policy, MessageClass::UserSpecific, UnicastAddress{rig.provider},
                       rig.world, rig.coverage, rig.config, rig.car_garage, SimTime{0});
    REQUIRE(d.ok());
    CHECK(d.value().chosen == ChannelKind::ItsG5);
    REQUIRE(d.value().fallbacks_tried.size() == 1);
    CHECK(d.value().fallbacks_tried.front() == ChannelKind::Cellular);
  }

  SECTION("dead zone with no station coverage has no viable channel") {
    CoverageModel no_station = rig.coverage;
    no_station.g5_stations.clear();
    const auto d =
        select_channel(policy, MessageClass::UserSpecific, UnicastAddress{rig.provider},
                       rig.world, no_station, rig.config, rig.car_garage, SimTime{0});
    REQUIRE(!d.ok());
    CHECK(d.code() == Errc::no_viable_channel);
  }

  SECTION("selection is a pure function: double evaluation agrees") {
    CoverageModel coverage = rig.coverage;
    coverage.dab_regions["city"] = CircularRegion{{0, 0}, 10'000.0};
    for (const auto cls : {MessageClass::TimeCriticalLocal, MessageClass::UserSpecific,
                           MessageClass::WideAreaPublic}) {
      const Address addresses[] = {
          Address{UnicastAddress{rig.provider}},
          Address{GeoBroadcastAddress{{100, 0}, 250.0}},
          Address{RegionalBroadcastAddress{"city"}},
      };
      for (const auto& address : addresses) {
        const auto a = select_channel(policy, cls, address, rig.world, coverage, rig.config,
                                      rig.car_open, SimTime{3'000});
        const auto b = select_channel(policy, cls, address, rig.world, coverage, rig.config,
                                      rig.car_open, SimTime{3'000});
        REQUIRE(a.ok() == b.ok());
        if (a.ok()) {
          CHECK(a.value().chosen == b.value().chosen);
          CHECK(a.value().fallbacks_tried == b.value().fallbacks_tried);
          CHECK(a.value().reason == b.value().reason);
        } else {
          CHECK(a.code() == b.code());
        }
      }
    }
  }

  SECTION("a policy missing a class fails validation") {
    ChannelSelectionPolicy incomplete;
    incomplete.preferences[MessageClass::UserSpecific] = {ChannelKind::Cellular};
    CHECK(!incomplete.validate().ok());
  }
}

TEST_CASE("payload and cipher blob codecs round trip") {
  const std::map<std::string, std::string> fields{{"plug_type", "CCS"}, {"slot", "4"}};
  const auto decoded = decode_payload_fields(encode_payload_fields(fields));
  REQUIRE(decoded.has_value());
  CHECK(*decoded == fields);
  CHECK(!decode_payload_fields(Bytes{1, 2}).has_value());

  auto sender = SecurePlatform(seed_from_u64(1), 1);
  auto recipient = SecurePlatform(seed_from_u64(2), 2);
  const auto handle = recipient.generate_key(KeyPurpose::Encryption);
  const auto blob = sender.encrypt(recipient.public_key(handle).value(), to_bytes("hi")).take();
  const auto round = decode_cipher_blob(encode_cipher_blob(blob));
  REQUIRE(round.has_value());
  CHECK(*round == blob);
}

TEST_CASE("dispatch pipeline") {
  NetworkRig rig;
  auto env = rig.env();
  const std::map<std::string, std::string> payload{{"plug_type", "CCS"}, {"slot", "4"}};

  SECTION("well-formed dispatch: recipient verifies, decrypts and accepts") {
    const auto r = dispatch(env, rig.car_open, "charge_res", UnicastAddress{rig.provider},
                            payload, SimTime{1'000});
    REQUIRE(r.ok());
    const auto& out = r.value();
    CHECK(out.routing.chosen == ChannelKind::Cellular);
    CHECK(out.envelope.encrypted);  // unicast personal data must be encrypted
    CHECK(verify_envelope_signature(out.envelope));
    REQUIRE(out.recipients.size() == 1);
    CHECK(out.recipients.front().node == rig.provider);
    CHECK(out.recipients.front().accepted);
    REQUIRE(out.recipients.front().fields.has_value());
    CHECK(*out.recipients.front().fields == payload);
    CHECK(out.recipients.front().arrival == SimTime{1'000 + rig.config.cellular_latency_ms});
  }

  SECTION("sender and recipient transparency entries exist for accepted messages") {
    const auto before = rig.network_log.size();
    const auto r = dispatch(env, rig.car_open, "charge_res", UnicastAddress{rig.provider},
                            payload, SimTime{1'000});
    REQUIRE(r.ok());
    REQUIRE(rig.network_log.size() == before + 2);
    const auto& entries = rig.network_log.entries();
    CHECK(entries[before].operation == "send:charge_res");
    CHECK(entries[before + 1].operation == "receive:charge_res");
    CHECK(entries[before].subject == r.value().envelope.sender_pseudonym);
    CHECK(entries[before + 1].subject == r.value().envelope.sender_pseudonym);
    CHECK(rig.network_log.verify());
  }

  SECTION("in-transit bit flip is dropped as an integrity failure") {
    DispatchFaults faults;
    faults.tamper_in_transit = true;
    const auto r = dispatch(env, rig.car_open, "charge_res", UnicastAddress{rig.provider},
                            payload, SimTime{1'000}, faults);
    REQUIRE(r.ok());
    REQUIRE(r.value().recipients.size() == 1);
    CHECK(!r.value().recipients.front().accepted);
    CHECK(r.value().recipients.front().reason == Errc::integrity_failure);
  }

  SECTION("revoked pseudonym is dropped as revoked credential") {
    const auto probe =
        rig.wallets.at(rig.car_open).current(rig.policy, "charge_res", SimTime{500}).take();
    rig.revocations.revoke(probe.certificate.cert_id);
    const auto r = dispatch(env, rig.car_open, "charge_res", UnicastAddress{rig.provider},
                            payload, SimTime{1'000});
    REQUIRE(r.ok());
    REQUIRE(r.value().recipients.size() == 1);
    CHECK(!r.value().recipients.front().accepted);
    CHECK(r.value().recipients.front().reason == Errc::revoked_credential);
  }

  SECTION("misdeclared purpose is dropped as purpose mismatch") {
    DispatchFaults faults;
    faults.wrong_purpose = true;
    const auto r = dispatch(env, rig.car_open, "charge_res", UnicastAddress{rig.provider},
                            payload, SimTime{1'000}, faults);
    REQUIRE(r.ok());
    REQUIRE(r.value().recipients.size() == 1);
    CHECK(!r.value().recipients.front().accepted);
    CHECK(r.value().recipients.front().reason == Errc::purpose_mismatch);
  }

  SECTION("unknown service is an error") {
    const auto r =
        dispatch(env, rig.car_open, "towing", UnicastAddress{rig.provider}, payload, SimTime{0});
    REQUIRE(!r.ok());
    CHECK(r.code() == Errc::unknown_service);
  }

  SECTION("geo-broadcast dispatch reaches and verifies at all in-range nodes") {
    const auto r = dispatch(env, rig.car_garage, "positioning",
                            GeoBroadcastAddress{{500, 0}, 250.0}, {{"x", "500"}, {"y", "0"}},
                            SimTime{2'000});
    REQUIRE(r.ok());
    CHECK(r.value().routing.chosen == ChannelKind::ItsG5);
    REQUIRE(!r.value().recipients.empty());
    for (const auto& rec : r.value().recipients) {
      CHECK(rec.accepted);
      CHECK(rec.arrival == SimTime{2'000 + rig.config.g5_latency_ms});
    }
  }

  SECTION("no viable channel propagates as an error") {
    rig.coverage.g5_stations.clear();
    const auto r = dispatch(env, rig.car_garage, "charge_res", UnicastAddress{rig.provider},
                            payload, SimTime{0});
    REQUIRE(!r.ok());
    CHECK(r.code() == Errc::no_viable_channel);
  }
}

TEST_CASE("acceptance predicate: 8-way fault matrix") {
  // Acceptance must hold exactly when the signature is valid AND the
  // certificate is unrevoked AND the purpose matches. Revocation is
  // permanent, so the unrevoked cells run first.
  NetworkRig rig;
  auto env = rig.env();
  const std::map<std::string, std::string> payload{{"plug_type", "CCS"}};

  const auto run_cell = [&](bool tampered, bool wrong_purpose) {
    DispatchFaults faults;
    faults.tamper_in_transit = tampered;
    faults.wrong_purpose = wrong_purpose;
    const auto r = dispatch(env, rig.car_open, "charge_res", UnicastAddress{rig.provider},
                            payload, SimTime{1'000}, faults);
    REQUIRE(r.ok());
    REQUIRE(r.value().recipients.size() == 1);
    return r.value().recipients.front();
  };

  for (const bool revoked : {false, true}) {
    if (revoked) {
      const auto probe =
          rig.wallets.at(rig.car_open).current(rig.policy, "charge_res", SimTime{500}).take();
      rig.revocations.revoke(probe.certificate.cert_id);
    }
    for (const bool tampered : {false, true}) {
      for (const bool wrong_purpose : {false, true}) {
        const auto outcome = run_cell(tampered, wrong_purpose);
        const bool expect_accept = !tampered && !revoked && !wrong_purpose;
        INFO("tampered=" << tampered << " revoked=" << revoked
                         << " wrong_purpose=" << wrong_purpose);
        CHECK(outcome.accepted == expect_accept);
        if (tampered) {
          CHECK(outcome.reason == Errc::integrity_failure);
        } else if (revoked && !expect_accept) {
          CHECK(outcome.reason == Errc::revoked_credential);
        } else if (wrong_purpose && !expect_accept) {
          CHECK(outcome.reason == Errc::purpose_mismatch);
        }
      }
    }
  }
}
