#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <string_view>

#include "hcsim/secure_platform.hpp"

using namespace hcsim;

namespace {

SecurePlatform make_platform(std::uint64_t seed = 1, std::uint32_t id = 1) {
  return SecurePlatform(seed_from_u64(seed), id);
}

}  // namespace

TEST_CASE("key generation produces distinct handles and keys") {
  auto platform = make_platform();
  const auto h1 = platform.generate_key(KeyPurpose::Signing);
  const auto h2 = platform.generate_key(KeyPurpose::Signing);
  CHECK(h1 != h2);
  CHECK(platform.public_key(h1).value() != platform.public_key(h2).value());
}

TEST_CASE("sign and verify") {
  auto platform = make_platform();
  const auto handle = platform.generate_key(KeyPurpose::Signing);
  const auto pk = platform.public_key(handle).value();
  const Bytes data = to_bytes("position report 12,34");

  auto blob = platform.sign(handle, data);
  REQUIRE(blob.ok());
  CHECK(SecurePlatform::verify(pk, data, blob.value()));

  SECTION("one flipped bit in the data fails") {
    Bytes flipped = data;
    flipped[3] ^= 0x10;
    CHECK(!SecurePlatform::verify(pk, flipped, blob.value()));
  }

  SECTION("a different key's signature fails") {
    auto other = make_platform(2, 2);
    const auto other_handle = other.generate_key(KeyPurpose::Signing);
    auto other_blob = other.sign(other_handle, data);
    REQUIRE(other_blob.ok());
    CHECK(!SecurePlatform::verify(pk, data, other_blob.value()));
  }

  SECTION("long-term identity keys may sign") {
    const auto identity = platform.generate_key(KeyPurpose::LongTermIdentity);
    auto id_blob = platform.sign(identity, data);
    REQUIRE(id_blob.ok());
    CHECK(SecurePlatform::verify(platform.public_key(identity).value(), data, id_blob.value()));
  }

  SECTION("encryption handles may not sign") {
    const auto enc = platform.generate_key(KeyPurpose::Encryption);
    const auto r = platform.sign(enc, data);
    REQUIRE(!r.ok());
    CHECK(r.code() == Errc::wrong_purpose);
  }

  SECTION("handles from another platform are unknown") {
    auto other = make_platform(2, 2);
    const auto foreign = other.generate_key(KeyPurpose::Signing);
    const auto r = platform.sign(foreign, data);
    REQUIRE(!r.ok());
    CHECK(r.code() == Errc::unknown_handle);
  }
}

TEST_CASE("signature fuzzing: single-bit flips never verify") {
  auto platform = make_platform(3, 3);
  const auto handle = platform.generate_key(KeyPurpose::Signing);
  const auto pk = platform.public_key(handle).value();

  std::mt19937_64 rng(7);
  for (int i = 0; i < 300; ++i) {
    Bytes data(1 + rng() % 64);
    for (auto& b : data) b = static_cast<std::uint8_t>(rng());
    auto blob = platform.sign(handle, data).take();

    if (i % 2 == 0) {
      Bytes mutated = data;
      const std::size_t bit = rng() % (mutated.size() * 8);
      mutated[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
      CHECK(!SecurePlatform::verify(pk, mutated, blob));
    } else {
      auto mutated = blob;
      const std::size_t bit = rng() % (mutated.signature.size() * 8);
      mutated.signature[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
      CHECK(!SecurePlatform::verify(pk, data, mutated));
    }
  }
}

TEST_CASE("authenticated encryption round trip and tamper detection") {
  auto sender = make_platform(10, 10);
  auto recipient = make_platform(11, 11);
  const auto enc_handle = recipient.generate_key(KeyPurpose::Encryption);
  const auto enc_pk = recipient.public_key(enc_handle).value();

  const Bytes payload = to_bytes("plug_type=CCS slot=4");
  auto blob = sender.encrypt(enc_pk, payload);
  REQUIRE(blob.ok());

  SECTION("round trip restores the exact bytes") {
    auto plain = recipient.decrypt(enc_handle, blob.value());
    REQUIRE(plain.ok());
    CHECK(plain.value() == payload);
  }

  SECTION("flipping a ciphertext bit fails authentication") {
    auto tampered = blob.value();
    tampered.ciphertext[0] ^= 0x01;
    const auto r = recipient.decrypt(enc_handle, tampered);
    REQUIRE(!r.ok());
    CHECK(r.code() == Errc::auth_failure);
  }

  SECTION("flipping a tag bit fails authentication") {
    auto tampered = blob.value();
    tampered.tag[5] ^= 0x80;
    const auto r = recipient.decrypt(enc_handle, tampered);
    REQUIRE(!r.ok());
    CHECK(r.code() == Errc::auth_failure);
  }

  SECTION("a different platform's handle cannot decrypt") {
    auto other = make_platform(12, 12);
    const auto other_handle = other.generate_key(KeyPurpose::Encryption);
    const auto r = other.decrypt(other_handle, blob.value());
    REQUIRE(!r.ok());
    CHECK(r.code() == Errc::auth_failure);
  }

  SECTION("signing handles cannot decrypt") {
    const auto signing = recipient.generate_key(KeyPurpose::Signing);
    const auto r = recipient.decrypt(signing, blob.value());
    REQUIRE(!r.ok());
    CHECK(r.code() == Errc::wrong_purpose);
  }

  SECTION("encrypting to a signing key is rejected") {
    const auto signing = recipient.generate_key(KeyPurpose::Signing);
    const auto r = sender.encrypt(recipient.public_key(signing).value(), payload);
    REQUIRE(!r.ok());
    CHECK(r.code() == Errc::wrong_purpose);
  }

  SECTION("empty payload round trips") {
    auto empty = sender.encrypt(enc_pk, Bytes{});
    REQUIRE(empty.ok());
    auto plain = recipient.decrypt(enc_handle, empty.value());
    REQUIRE(plain.ok());
    CHECK(plain.value().empty());
  }
}

TEST_CASE("fixed seed reproduces the exact key and ciphertext sequence") {
  auto a = make_platform(77, 1);
  auto b = make_platform(77, 1);

  for (int i = 0; i < 5; ++i) {
    const auto purpose = (i % 2 == 0) ? KeyPurpose::Signing : KeyPurpose::Encryption;
    const auto ha = a.generate_key(purpose);
    const auto hb = b.generate_key(purpose);
    CHECK(a.public_key(ha).value() == b.public_key(hb).value());
  }
  CHECK(a.random_bytes(33) == b.random_bytes(33));

  auto recipient = make_platform(78, 2);
  const auto rh = recipient.generate_key(KeyPurpose::Encryption);
  const auto rpk = recipient.public_key(rh).value();
  const auto ca = a.encrypt(rpk, to_bytes("x")).take();
  const auto cb = b.encrypt(rpk, to_bytes("x")).take();
  CHECK(ca == cb);

  // Different seeds diverge.
  auto c = make_platform(78, 1);
  const auto hc = c.generate_key(KeyPurpose::Signing);
  const auto ha2 = make_platform(77, 1).generate_key(KeyPurpose::Signing);
  CHECK(c.public_key(hc).value() != a.public_key(ha2).value());
}

TEST_CASE("platform API surface contains no private key export") {
  // The platform's complete operation set, mirrored from the header. If an
  // operation is added, this list and the review below must be updated.
  const std::array<std::string_view, 7> expected = {
      "generate_key", "public_key", "sign", "verify", "encrypt", "decrypt", "random_bytes",
  };
  REQUIRE(secure_platform_operations.size() == expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    CHECK(secure_platform_operations[i] == expected[i]);
  }
  for (const auto op : secure_platform_operations) {
    CHECK(op.find("private") == std::string_view::npos);
    CHECK(op.find("secret") == std::string_view::npos);
    CHECK(op.find("export") == std::string_view::npos);
    CHECK(op.find("unseal") == std::string_view::npos);
  }
}
