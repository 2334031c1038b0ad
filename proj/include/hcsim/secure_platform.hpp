#pragma once

// Uniform secure platform, one instance per node on every plane. Holds key
// material behind opaque handles; the API exposes signing, verification and
// authenticated public-key encryption but no path that returns private key
// bytes. Backed by libsodium (Ed25519 signatures, X25519 + XSalsa20-Poly1305
// authenticated encryption, SHA-512 for hashing).
//
// All randomness is drawn from a per-platform deterministic generator seeded
// at construction, so a fixed seed reproduces the exact key and identifier
// sequence of a run. Production use can seed from system entropy instead.

#include <sodium.h>

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>

#include "hcsim/bytes.hpp"
#include "hcsim/result.hpp"

namespace hcsim {

inline void ensure_sodium_init() {
  static const int rc = sodium_init();
  if (rc < 0) throw std::runtime_error("libsodium initialization failed");
}

using Seed32 = std::array<std::uint8_t, 32>;

// Derives an independent 32-byte seed from a label and index, keyed by the
// parent seed. Used to fan one scenario seed out to many platforms.
inline Seed32 derive_seed(const Seed32& parent, std::string_view label, std::uint64_t index) {
  ensure_sodium_init();
  ByteWriter w;
  w.str(label);
  w.u64(index);
  Seed32 out{};
  crypto_generichash(out.data(), out.size(), w.data().data(), w.data().size(), parent.data(),
                     parent.size());
  return out;
}

inline Seed32 seed_from_u64(std::uint64_t seed) {
  Seed32 s{};
  for (int i = 0; i < 8; ++i) s[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(seed >> (8 * i));
  return s;
}

inline std::array<std::uint8_t, 64> sha512(std::span<const std::uint8_t> data) {
  ensure_sodium_init();
  std::array<std::uint8_t, 64> out{};
  crypto_hash_sha512(out.data(), data.data(), data.size());
  return out;
}

enum class KeyPurpose : std::uint8_t { Signing, Encryption, LongTermIdentity };

inline std::string_view key_purpose_name(KeyPurpose p) {
  switch (p) {
    case KeyPurpose::Signing: return "signing";
    case KeyPurpose::Encryption: return "encryption";
    case KeyPurpose::LongTermIdentity: return "long_term_identity";
  }
  return "?";
}

enum class KeyAlg : std::uint8_t { Ed25519, X25519 };

struct PublicKey {
  KeyAlg alg{KeyAlg::Ed25519};
  std::array<std::uint8_t, 32> bytes{};
  auto operator<=>(const PublicKey&) const = default;
  std::string hex() const { return hex_encode(bytes); }
};

// Opaque reference to a key slot. Only meaningful on the platform that
// issued it.
struct KeyHandle {
  std::uint64_t id{0};
  std::uint32_t platform{0};
  KeyPurpose purpose{KeyPurpose::Signing};
  auto operator<=>(const KeyHandle&) const = default;
};

struct SignedBlob {
  std::array<std::uint8_t, 64> signature{};
  PublicKey signer;
  auto operator<=>(const SignedBlob&) const = default;
};

// Authenticated ciphertext: ephemeral sender key, ciphertext and MAC.
// Any modification of either ciphertext or tag fails decryption.
struct CipherBlob {
  std::array<std::uint8_t, 32> ephemeral_pk{};
  Bytes ciphertext;
  std::array<std::uint8_t, 16> tag{};
  PublicKey recipient;
  auto operator<=>(const CipherBlob&) const = default;
};

// Complete public operation set of the platform, kept in one place so the
// API-review test can assert there is no private-key export path.
constexpr std::array<std::string_view, 7> secure_platform_operations = {
    "generate_key", "public_key", "sign", "verify", "encrypt", "decrypt", "random_bytes",
};

class SecurePlatform {
 public:
  SecurePlatform(Seed32 seed, std::uint32_t platform_id)
      : platform_id_(platform_id), seed_(seed) {
    ensure_sodium_init();
  }

  SecurePlatform(const SecurePlatform&) = delete;
  SecurePlatform& operator=(const SecurePlatform&) = delete;
  SecurePlatform(SecurePlatform&&) = default;
  SecurePlatform& operator=(SecurePlatform&&) = default;

  std::uint32_t platform_id() const { return platform_id_; }

  KeyHandle generate_key(KeyPurpose purpose) {
    KeyRecord rec;
    rec.purpose = purpose;
    const Seed32 key_seed = next_seed();
    if (purpose == KeyPurpose::Encryption) {
      rec.pk.alg = KeyAlg::X25519;
      crypto_box_seed_keypair(rec.pk.bytes.data(), rec.secret.data(), key_seed.data());
      rec.secret_len = crypto_box_SECRETKEYBYTES;
    } else {
      rec.pk.alg = KeyAlg::Ed25519;
      crypto_sign_seed_keypair(rec.pk.bytes.data(), rec.secret.data(), key_seed.data());
      rec.secret_len = crypto_sign_SECRETKEYBYTES;
    }
    const KeyHandle handle{next_handle_++, platform_id_, purpose};
    keys_.emplace(handle.id, rec);
    return handle;
  }

  Result<PublicKey> public_key(KeyHandle handle) const {
    const auto* rec = find(handle);
    if (!rec) return make_error(Errc::unknown_handle);
    return rec->pk;
  }

  Result<SignedBlob> sign(KeyHandle handle, std::span<const std::uint8_t> data) const {
    const auto* rec = find(handle);
    if (!rec) return make_error(Errc::unknown_handle);
    if (rec->purpose == KeyPurpose::Encryption) {
      return make_error(Errc::wrong_purpose, "signing requires a signing-capable handle");
    }
    SignedBlob blob;
    blob.signer = rec->pk;
    crypto_sign_detached(blob.signature.data(), nullptr, data.data(), data.size(),
                         rec->secret.data());
    return blob;
  }

  static bool verify(const PublicKey& pk, std::span<const std::uint8_t> data,
                     const SignedBlob& blob) {
    ensure_sodium_init();
    if (pk.alg != KeyAlg::Ed25519) return false;
    if (blob.signer != pk) return false;
    return crypto_sign_verify_detached(blob.signature.data(), data.data(), data.size(),
                                       pk.bytes.data()) == 0;
  }

  // Encrypts for the recipient's Encryption key. The ephemeral key pair is
  // drawn from this platform's seeded generator, which keeps ciphertexts
  // reproducible for a fixed scenario seed.
  Result<CipherBlob> encrypt(const PublicKey& recipient, std::span<const std::uint8_t> data) {
    if (recipient.alg != KeyAlg::X25519) {
      return make_error(Errc::wrong_purpose, "recipient key is not an encryption key");
    }
    CipherBlob blob;
    blob.recipient = recipient;
    const Seed32 eph_seed = next_seed();
    std::array<std::uint8_t, crypto_box_SECRETKEYBYTES> eph_sk{};
    crypto_box_seed_keypair(blob.ephemeral_pk.data(), eph_sk.data(), eph_seed.data());
    const auto nonce = box_nonce(blob.ephemeral_pk, recipient.bytes);
    blob.ciphertext.resize(data.size());
    if (crypto_box_detached(blob.ciphertext.data(), blob.tag.data(), data.data(), data.size(),
                            nonce.data(), recipient.bytes.data(), eph_sk.data()) != 0) {
      return make_error(Errc::auth_failure, "encryption failed");
    }
    return blob;
  }

  Result<Bytes> decrypt(KeyHandle handle, const CipherBlob& blob) const {
    const auto* rec = find(handle);
    if (!rec) return make_error(Errc::unknown_handle);
    if (rec->purpose != KeyPurpose::Encryption) {
      return make_error(Errc::wrong_purpose, "decryption requires an encryption handle");
    }
    const auto nonce = box_nonce(blob.ephemeral_pk, rec->pk.bytes);
    Bytes plain(blob.ciphertext.size());
    const int rc = crypto_box_open_detached(plain.data(), blob.ciphertext.data(), blob.tag.data(),
                                            blob.ciphertext.size(), nonce.data(),
                                            blob.ephemeral_pk.data(), rec->secret.data());
    if (rc != 0) return make_error(Errc::auth_failure, "ciphertext authentication failed");
    return plain;
  }

  Bytes random_bytes(std::size_t n) {
    Bytes out(n);
    if (n == 0) return out;
    const Seed32 sub = next_seed();
    randombytes_buf_deterministic(out.data(), out.size(), sub.data());
    return out;
  }

  std::array<std::uint8_t, 16> random_id() {
    const Bytes b = random_bytes(16);
    std::array<std::uint8_t, 16> out{};
    std::copy(b.begin(), b.end(), out.begin());
    return out;
  }

 private:
  struct KeyRecord {
    KeyPurpose purpose{KeyPurpose::Signing};
    PublicKey pk;
    // crypto_sign secret keys are 64 bytes, crypto_box 32; sized for the max.
    std::array<std::uint8_t, 64> secret{};
    std::size_t secret_len{0};
  };

  const KeyRecord* find(KeyHandle handle) const {
    if (handle.platform != platform_id_) return nullptr;
    const auto it = keys_.find(handle.id);
    if (it == keys_.end()) return nullptr;
    if (it->second.purpose != handle.purpose) return nullptr;
    return &it->second;
  }

  Seed32 next_seed() {
    ByteWriter w;
    w.u64(counter_++);
    Seed32 out{};
    crypto_generichash(out.data(), out.size(), w.data().data(), w.data().size(), seed_.data(),
                       seed_.size());
    return out;
  }

  static std::array<std::uint8_t, crypto_box_NONCEBYTES> box_nonce(
      const std::array<std::uint8_t, 32>& ephemeral_pk,
      const std::array<std::uint8_t, 32>& recipient_pk) {
    std::array<std::uint8_t, crypto_box_NONCEBYTES> nonce{};
    crypto_generichash_state st;
    crypto_generichash_init(&st, nullptr, 0, nonce.size());
    crypto_generichash_update(&st, ephemeral_pk.data(), ephemeral_pk.size());
    crypto_generichash_update(&st, recipient_pk.data(), recipient_pk.size());
    crypto_generichash_final(&st, nonce.data(), nonce.size());
    return nonce;
  }

  std::uint32_t platform_id_{0};
  Seed32 seed_{};
  std::uint64_t counter_{0};
  std::uint64_t next_handle_{1};
  std::map<std::uint64_t, KeyRecord> keys_;
};

}  // namespace hcsim
