#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <string>

#include "hcsim/credentials.hpp"
#include "hcsim/world.hpp"

using namespace hcsim;

namespace {

struct CredentialRig {
  World world;
  EnrollmentAuthority ea;
  PseudonymAuthority pa;
  NodeId vehicle;

  CredentialRig()
      : world(5), ea(seed_from_u64(100)), pa(seed_from_u64(200), ea.public_key()) {
    vehicle = world.register_node(NodeKind::Vehicle, Plane::Remote, GeoPosition{0, 0}).value();
  }
};

bool contains_subsequence(const Bytes& haystack, const Bytes& needle) {
  if (needle.empty() || haystack.size() < needle.size()) return false;
  for (std::size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
    if (std::equal(needle.begin(), needle.end(), haystack.begin() + static_cast<std::ptrdiff_t>(i)))
      return true;
  }
  return false;
}

}  // namespace

TEST_CASE("enrollment") {
  CredentialRig rig;

  SECTION("fresh vehicle gets a verifying certificate bound to its node id") {
    auto e = rig.ea.enroll(rig.world, rig.vehicle, SimTime{0});
    REQUIRE(e.ok());
    CHECK(e.value().certificate.node_id == rig.vehicle);
    CHECK(verify_certificate(e.value().certificate, rig.ea.public_key()));
  }

  SECTION("revoked node cannot re-enroll") {
    REQUIRE(rig.ea.enroll(rig.world, rig.vehicle, SimTime{0}).ok());
    rig.ea.revoke_node(rig.vehicle);
    const auto again = rig.ea.enroll(rig.world, rig.vehicle, SimTime{10});
    REQUIRE(!again.ok());
    CHECK(again.code() == Errc::already_revoked);
  }

  SECTION("unregistered node cannot enroll") {
    const auto r = rig.ea.enroll(rig.world, NodeId{9999}, SimTime{0});
    REQUIRE(!r.ok());
    CHECK(r.code() == Errc::unknown_node);
  }

  SECTION("tampered certificate fails verification") {
    auto e = rig.ea.enroll(rig.world, rig.vehicle, SimTime{0}).take();
    e.certificate.valid_to = e.certificate.valid_to + 1;
    CHECK(!verify_certificate(e.certificate, rig.ea.public_key()));
  }
}

TEST_CASE("pseudonym issuance") {
  CredentialRig rig;
  auto enrollment = rig.ea.enroll(rig.world, rig.vehicle, SimTime{0}).take();

  SECTION("count certificates with pairwise distinct ids and keys") {
    auto issued = rig.pa.issue(rig.world, enrollment.certificate, 10, MessageClass::UserSpecific,
                               SimTime{0}, rig.ea.revocations());
    REQUIRE(issued.ok());
    REQUIRE(issued.value().size() == 10);
    std::set<PseudonymId> ids;
    std::set<PublicKey> keys;
    for (const auto& p : issued.value()) {
      ids.insert(p.certificate.pseudonym_id);
      keys.insert(p.certificate.public_key);
      CHECK(verify_certificate(p.certificate, rig.pa.public_key()));
    }
    CHECK(ids.size() == 10);
    CHECK(keys.size() == 10);
  }

  SECTION("revoked enrollment is rejected") {
    rig.ea.revoke_node(rig.vehicle);
    const auto issued = rig.pa.issue(rig.world, enrollment.certificate, 1,
                                     MessageClass::UserSpecific, SimTime{0}, rig.ea.revocations());
    REQUIRE(!issued.ok());
    CHECK(issued.code() == Errc::revoked_enrollment);
  }

  SECTION("tampered enrollment is rejected") {
    auto forged = enrollment.certificate;
    forged.node_id = NodeId{12345};
    const auto issued = rig.pa.issue(rig.world, forged, 1, MessageClass::UserSpecific, SimTime{0},
                                     rig.ea.revocations());
    REQUIRE(!issued.ok());
    CHECK(issued.code() == Errc::invalid_enrollment);
  }

  SECTION("expired enrollment is rejected") {
    const SimTime late{enrollment.certificate.valid_to.ms + 1};
    const auto issued = rig.pa.issue(rig.world, enrollment.certificate, 1,
                                     MessageClass::UserSpecific, late, rig.ea.revocations());
    REQUIRE(!issued.ok());
    CHECK(issued.code() == Errc::invalid_enrollment);
  }
}

TEST_CASE("pseudonym certificates never contain the holder's node id") {
  World world(5);
  // Distinctive id so a byte-pattern scan cannot alias small integers.
  const NodeId node{0xA1B2C3D4u};
  REQUIRE(world
              .register_node_with_id(node, NodeKind::Vehicle, Plane::Remote,
                                     Trajectory::fixed({0, 0}))
              .ok());
  EnrollmentAuthority ea(seed_from_u64(100));
  PseudonymAuthority pa(seed_from_u64(200), ea.public_key());
  auto enrollment = ea.enroll(world, node, SimTime{0}).take();

  // Oracle: substring scan over the serialized certificates for both the
  // little-endian u32 encoding and the decimal text of the node id.
  ByteWriter w;
  w.u32(node.value);
  const Bytes le_bytes = w.take();
  const Bytes text_bytes = to_bytes(std::to_string(node.value));
  const Bytes display_bytes = to_bytes(to_string(node));

  int scanned = 0;
  for (int batch = 0; batch < 10; ++batch) {
    auto issued = pa.issue(world, enrollment.certificate, 100, MessageClass::UserSpecific,
                           SimTime{0}, ea.revocations());
    REQUIRE(issued.ok());
    for (const auto& p : issued.value()) {
      const Bytes wire = serialize_certificate(p.certificate);
      CHECK(!contains_subsequence(wire, le_bytes));
      CHECK(!contains_subsequence(wire, text_bytes));
      CHECK(!contains_subsequence(wire, display_bytes));
      ++scanned;
    }
  }
  CHECK(scanned == 1000);

  // The enrollment certificate, by contrast, does bind the node id.
  CHECK(contains_subsequence(serialize_certificate(enrollment.certificate), le_bytes));
}

TEST_CASE("pseudonym selection policies") {
  CredentialRig rig;
  auto enrollment = rig.ea.enroll(rig.world, rig.vehicle, SimTime{0}).take();
  auto issued = rig.pa.issue(rig.world, enrollment.certificate, 20, MessageClass::UserSpecific,
                             SimTime{0}, rig.ea.revocations());
  REQUIRE(issued.ok());
  PseudonymWallet wallet;
  for (auto& p : issued.value()) wallet.add(std::move(p));

  SECTION("per-service: distinct services get distinct ids, stably") {
    const PseudonymPolicy policy{PseudonymPolicy::Strategy::PerService, 0, 20};
    const auto a = wallet.current(policy, "svc_a", SimTime{1'000}).take();
    const auto b = wallet.current(policy, "svc_b", SimTime{1'000}).take();
    CHECK(a.certificate.pseudonym_id != b.certificate.pseudonym_id);
    const auto a_again = wallet.current(policy, "svc_a", SimTime{900'000}).take();
    CHECK(a_again.certificate.pseudonym_id == a.certificate.pseudonym_id);
  }

  SECTION("time rotation: stable inside a window, changes across windows") {
    const PseudonymPolicy policy{PseudonymPolicy::Strategy::TimeRotation, 60'000, 20};
    const auto t10 = wallet.current(policy, "svc", SimTime{10'000}).take();
    const auto t50 = wallet.current(policy, "svc", SimTime{50'000}).take();
    const auto t70 = wallet.current(policy, "svc", SimTime{70'000}).take();
    CHECK(t10.certificate.pseudonym_id == t50.certificate.pseudonym_id);
    CHECK(t10.certificate.pseudonym_id != t70.certificate.pseudonym_id);
  }

  SECTION("single identity: one id everywhere") {
    const PseudonymPolicy policy{PseudonymPolicy::Strategy::SingleIdentity, 0, 20};
    const auto a = wallet.current(policy, "svc_a", SimTime{1'000}).take();
    const auto b = wallet.current(policy, "svc_b", SimTime{500'000}).take();
    CHECK(a.certificate.pseudonym_id == b.certificate.pseudonym_id);
  }

  SECTION("per service and time combines both keys") {
    const PseudonymPolicy policy{PseudonymPolicy::Strategy::PerServiceAndTime, 60'000, 20};
    const auto a0 = wallet.current(policy, "svc_a", SimTime{0}).take();
    const auto b0 = wallet.current(policy, "svc_b", SimTime{0}).take();
    const auto a1 = wallet.current(policy, "svc_a", SimTime{61'000}).take();
    CHECK(a0.certificate.pseudonym_id != b0.certificate.pseudonym_id);
    CHECK(a0.certificate.pseudonym_id != a1.certificate.pseudonym_id);
  }

  SECTION("exhausted pool reports PoolExhausted") {
    PseudonymWallet small;
    auto more = rig.pa.issue(rig.world, enrollment.certificate, 2, MessageClass::UserSpecific,
                             SimTime{0}, rig.ea.revocations());
    REQUIRE(more.ok());
    for (auto& p : more.value()) small.add(std::move(p));
    const PseudonymPolicy policy{PseudonymPolicy::Strategy::PerService, 0, 2};
    REQUIRE(small.current(policy, "a", SimTime{0}).ok());
    REQUIRE(small.current(policy, "b", SimTime{0}).ok());
    const auto r = small.current(policy, "c", SimTime{0});
    REQUIRE(!r.ok());
    CHECK(r.code() == Errc::pool_exhausted);
  }
}

TEST_CASE("per-service pseudonyms are pairwise distinct across services") {
  // Property over several nodes and services.
  World world(6);
  EnrollmentAuthority ea(seed_from_u64(300));
  PseudonymAuthority pa(seed_from_u64(400), ea.public_key());
  const PseudonymPolicy policy{PseudonymPolicy::Strategy::PerService, 0, 20};
  const std::array<ServiceId, 4> services = {"s1", "s2", "s3", "s4"};

  for (int n = 0; n < 5; ++n) {
    const auto node = world.register_node(NodeKind::Vehicle, Plane::Remote, GeoPosition{}).value();
    auto enrollment = ea.enroll(world, node, SimTime{0}).take();
    auto issued =
        pa.issue(world, enrollment.certificate, 20, MessageClass::UserSpecific, SimTime{0},
                 ea.revocations());
    REQUIRE(issued.ok());
    PseudonymWallet wallet;
    for (auto& p : issued.value()) wallet.add(std::move(p));

    std::set<PseudonymId> seen;
    for (const auto& svc : services) {
      seen.insert(wallet.current(policy, svc, SimTime{1'000}).take().certificate.pseudonym_id);
    }
    CHECK(seen.size() == services.size());
  }
}

TEST_CASE("revocation list") {
  RevocationList rl;
  const CertId a{{1, 2, 3}};
  const CertId b{{4, 5, 6}};

  CHECK(!rl.is_revoked(a));
  rl.revoke(a);
  CHECK(rl.is_revoked(a));
  CHECK(!rl.is_revoked(b));
  CHECK(rl.version() == 1);

  // Idempotent: second revoke leaves set and version unchanged.
  rl.revoke(a);
  CHECK(rl.version() == 1);
  CHECK(rl.size() == 1);

  rl.revoke(b);
  CHECK(rl.version() == 2);
  CHECK(rl.size() == 2);

  const auto lines = rl.to_lines();
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == "revocation-list version=2");
}

TEST_CASE("authorities use distinct identities") {
  CredentialRig rig;
  CHECK(rig.ea.public_key() != rig.pa.public_key());
}
