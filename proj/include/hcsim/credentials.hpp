#pragma once

// Credential lifecycle: enrollment certificates bind a node to its long-term
// key; pseudonym certificates are short-lived, carry no node identity, and
// are rotated per policy so that service usages stay unlinkable. The
// enrollment and pseudonym authorities are separate entities with separate
// keys; the pseudonym->node mapping exists only in the pseudonym authority's
// escrow store, which exposes no resolve operation.

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "hcsim/result.hpp"
#include "hcsim/secure_platform.hpp"
#include "hcsim/types.hpp"
#include "hcsim/world.hpp"

namespace hcsim {

struct EnrollmentCertificate {
  CertId cert_id;
  NodeId node_id;
  PublicKey public_key;
  SimTime valid_from;
  SimTime valid_to;
  SignedBlob issuer_signature;
  auto operator<=>(const EnrollmentCertificate&) const = default;
};

struct PseudonymCertificate {
  CertId cert_id;
  PseudonymId pseudonym_id;
  PublicKey public_key;
  MessageClass service_class{MessageClass::UserSpecific};
  SimTime valid_from;
  SimTime valid_to;
  SignedBlob issuer_signature;
  auto operator<=>(const PseudonymCertificate&) const = default;
};

// Byte sequence covered by the issuer signature.
inline Bytes enrollment_signing_bytes(const EnrollmentCertificate& c) {
  ByteWriter w;
  w.fixed(c.cert_id.bytes);
  w.u32(c.node_id.value);
  w.u8(static_cast<std::uint8_t>(c.public_key.alg));
  w.fixed(c.public_key.bytes);
  w.i64(c.valid_from.ms);
  w.i64(c.valid_to.ms);
  return w.take();
}

inline Bytes pseudonym_signing_bytes(const PseudonymCertificate& c) {
  ByteWriter w;
  w.fixed(c.cert_id.bytes);
  w.fixed(c.pseudonym_id.bytes);
  w.u8(static_cast<std::uint8_t>(c.public_key.alg));
  w.fixed(c.public_key.bytes);
  w.u8(static_cast<std::uint8_t>(c.service_class));
  w.i64(c.valid_from.ms);
  w.i64(c.valid_to.ms);
  return w.take();
}

// Full wire form (signed bytes + signature). This is what the linkability
// scan inspects: a pseudonym certificate must never contain the holder's
// node id in any encoding.
inline Bytes serialize_certificate(const PseudonymCertificate& c) {
  ByteWriter w;
  w.bytes(pseudonym_signing_bytes(c));
  w.fixed(c.issuer_signature.signature);
  w.u8(static_cast<std::uint8_t>(c.issuer_signature.signer.alg));
  w.fixed(c.issuer_signature.signer.bytes);
  return w.take();
}

inline Bytes serialize_certificate(const EnrollmentCertificate& c) {
  ByteWriter w;
  w.bytes(enrollment_signing_bytes(c));
  w.fixed(c.issuer_signature.signature);
  w.u8(static_cast<std::uint8_t>(c.issuer_signature.signer.alg));
  w.fixed(c.issuer_signature.signer.bytes);
  return w.take();
}

inline bool verify_certificate(const EnrollmentCertificate& c, const PublicKey& issuer) {
  return SecurePlatform::verify(issuer, enrollment_signing_bytes(c), c.issuer_signature);
}

inline bool verify_certificate(const PseudonymCertificate& c, const PublicKey& issuer) {
  return SecurePlatform::verify(issuer, pseudonym_signing_bytes(c), c.issuer_signature);
}

// ---------------------------------------------------------------------------
// Revocation
// ---------------------------------------------------------------------------

// Monotone-growing set of revoked certificate ids. Revoking twice is
// idempotent; the version counter increases only on actual change.
class RevocationList {
 public:
  void revoke(CertId id) {
    if (revoked_.insert(id).second) ++version_;
  }

  bool is_revoked(CertId id) const { return revoked_.contains(id); }

  std::uint64_t version() const { return version_; }
  std::size_t size() const { return revoked_.size(); }
  const std::set<CertId>& entries() const { return revoked_; }

  // Line-delimited export for the trace stream.
  std::vector<std::string> to_lines() const {
    std::vector<std::string> lines;
    lines.reserve(revoked_.size() + 1);
    lines.push_back("revocation-list version=" + std::to_string(version_));
    for (const auto& id : revoked_) lines.push_back("revoked cert=" + id.hex());
    return lines;
  }

 private:
  std::set<CertId> revoked_;
  std::uint64_t version_{0};
};

// ---------------------------------------------------------------------------
// Authorities
// ---------------------------------------------------------------------------

struct Enrollment {
  EnrollmentCertificate certificate;
  KeyHandle long_term_key;  // lives on the enrolled node's platform
};

class EnrollmentAuthority {
 public:
  explicit EnrollmentAuthority(Seed32 seed)
      : platform_(seed, /*platform_id=*/0xea000000u),
        identity_(platform_.generate_key(KeyPurpose::LongTermIdentity)) {}

  PublicKey public_key() const { return platform_.public_key(identity_).value(); }

  static constexpr std::int64_t default_validity_ms = 86'400'000;  // one simulated day

  Result<Enrollment> enroll(World& world, NodeId node, SimTime at) {
    if (!world.contains(node)) {
      return make_error(Errc::unknown_node, "cannot enroll unregistered node " + to_string(node));
    }
    if (const auto it = issued_.find(node);
        it != issued_.end() && revocations_.is_revoked(it->second)) {
      return make_error(Errc::already_revoked, "node enrollment has been revoked");
    }
    auto& node_platform = world.platform(node);
    const KeyHandle key = node_platform.generate_key(KeyPurpose::LongTermIdentity);

    EnrollmentCertificate cert;
    cert.cert_id = CertId{platform_.random_id()};
    cert.node_id = node;
    cert.public_key = node_platform.public_key(key).value();
    cert.valid_from = at;
    cert.valid_to = at + default_validity_ms;
    auto sig = platform_.sign(identity_, enrollment_signing_bytes(cert));
    cert.issuer_signature = sig.take();
    issued_[node] = cert.cert_id;
    return Enrollment{cert, key};
  }

  void revoke_node(NodeId node) {
    if (const auto it = issued_.find(node); it != issued_.end()) revocations_.revoke(it->second);
  }

  const RevocationList& revocations() const { return revocations_; }

 private:
  SecurePlatform platform_;
  KeyHandle identity_;
  RevocationList revocations_;
  std::map<NodeId, CertId> issued_;
};

struct IssuedPseudonym {
  PseudonymCertificate certificate;
  KeyHandle key;  // signing key on the holder's platform
};

class PseudonymAuthority {
 public:
  PseudonymAuthority(Seed32 seed, PublicKey enrollment_authority_key)
      : platform_(seed, /*platform_id=*/0x9a000000u),
        identity_(platform_.generate_key(KeyPurpose::LongTermIdentity)),
        ea_key_(enrollment_authority_key) {}

  PublicKey public_key() const { return platform_.public_key(identity_).value(); }

  static constexpr std::int64_t default_validity_ms = 86'400'000;

  // Issues `count` pseudonym certificates with fresh ids and fresh key pairs.
  // The pseudonym ids and keys come from the holder's own platform; the only
  // record linking them back to the node is this authority's escrow map.
  Result<std::vector<IssuedPseudonym>> issue(World& world, const EnrollmentCertificate& ec,
                                             std::size_t count, MessageClass service_class,
                                             SimTime at,
                                             const RevocationList& enrollment_revocations) {
    if (!verify_certificate(ec, ea_key_)) {
      return make_error(Errc::invalid_enrollment, "enrollment certificate does not verify");
    }
    if (at < ec.valid_from || at > ec.valid_to) {
      return make_error(Errc::invalid_enrollment, "enrollment certificate expired");
    }
    if (enrollment_revocations.is_revoked(ec.cert_id)) {
      return make_error(Errc::revoked_enrollment, "enrollment certificate revoked");
    }
    auto& holder = world.platform(ec.node_id);
    std::vector<IssuedPseudonym> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      IssuedPseudonym issued;
      issued.key = holder.generate_key(KeyPurpose::Signing);
      auto& cert = issued.certificate;
      cert.cert_id = CertId{holder.random_id()};
      cert.pseudonym_id = PseudonymId{holder.random_id()};
      cert.public_key = holder.public_key(issued.key).value();
      cert.service_class = service_class;
      cert.valid_from = at;
      cert.valid_to = at + default_validity_ms;
      auto sig = platform_.sign(identity_, pseudonym_signing_bytes(cert));
      cert.issuer_signature = sig.take();
      escrow_.emplace(cert.pseudonym_id, ec.node_id);
      out.push_back(std::move(issued));
    }
    return out;
  }

  std::size_t escrow_size() const { return escrow_.size(); }

 private:
  SecurePlatform platform_;
  KeyHandle identity_;
  PublicKey ea_key_;
  // Escrow: the single place where pseudonym and node identity meet.
  // Intentionally no lookup operation on the public surface.
  std::map<PseudonymId, NodeId> escrow_;
};

// ---------------------------------------------------------------------------
// Rotation policy and per-node wallet
// ---------------------------------------------------------------------------

struct PseudonymPolicy {
  enum class Strategy : std::uint8_t {
    SingleIdentity,      // baseline for experiments: one id everywhere
    PerService,          // stable id per (node, service), distinct across services
    TimeRotation,        // id changes every period_ms, shared across services
    PerServiceAndTime,   // id per (service, period window)
  };

  Strategy strategy{Strategy::PerService};
  std::int64_t period_ms{60'000};  // used by the rotation strategies; > 0
  std::size_t pool_size{20};       // >= 1

  Result<void> validate() const {
    if (pool_size < 1) return make_error(Errc::scenario_invalid, "pseudonym pool size must be >= 1");
    if ((strategy == Strategy::TimeRotation || strategy == Strategy::PerServiceAndTime) &&
        period_ms <= 0) {
      return make_error(Errc::scenario_invalid, "rotation period must be > 0");
    }
    return {};
  }
};

inline std::string pseudonym_policy_name(const PseudonymPolicy& p) {
  switch (p.strategy) {
    case PseudonymPolicy::Strategy::SingleIdentity: return "single_identity";
    case PseudonymPolicy::Strategy::PerService: return "per_service";
    case PseudonymPolicy::Strategy::TimeRotation:
      return "time_rotation:" + std::to_string(p.period_ms);
    case PseudonymPolicy::Strategy::PerServiceAndTime:
      return "per_service_and_time:" + std::to_string(p.period_ms);
  }
  return "?";
}

// Holds a node's issued pseudonym pool and resolves which credential to use
// for a given service and time under the configured policy.
class PseudonymWallet {
 public:
  void add(IssuedPseudonym issued) { pool_.push_back(std::move(issued)); }
  std::size_t pool_size() const { return pool_.size(); }
  std::size_t used() const { return next_unused_; }

  Result<IssuedPseudonym> current(const PseudonymPolicy& policy, const ServiceId& service,
                                  SimTime at) {
    switch (policy.strategy) {
      case PseudonymPolicy::Strategy::SingleIdentity: {
        if (pool_.empty()) return exhausted();
        next_unused_ = std::max<std::size_t>(next_unused_, 1);
        return pool_.front();
      }
      case PseudonymPolicy::Strategy::PerService: {
        auto it = per_service_.find(service);
        if (it == per_service_.end()) {
          auto slot = allocate();
          if (!slot) return slot.error();
          it = per_service_.emplace(service, slot.value()).first;
        }
        return pool_[it->second];
      }
      case PseudonymPolicy::Strategy::TimeRotation: {
        const std::int64_t window = at.ms / policy.period_ms;
        auto it = per_window_.find(window);
        if (it == per_window_.end()) {
          auto slot = allocate();
          if (!slot) return slot.error();
          it = per_window_.emplace(window, slot.value()).first;
        }
        return pool_[it->second];
      }
      case PseudonymPolicy::Strategy::PerServiceAndTime: {
        const std::int64_t window = at.ms / policy.period_ms;
        const auto key = std::make_pair(service, window);
        auto it = per_service_window_.find(key);
        if (it == per_service_window_.end()) {
          auto slot = allocate();
          if (!slot) return slot.error();
          it = per_service_window_.emplace(key, slot.value()).first;
        }
        return pool_[it->second];
      }
    }
    return exhausted();
  }

 private:
  Result<std::size_t> allocate() {
    if (next_unused_ >= pool_.size()) return exhausted();
    return next_unused_++;
  }

  static Error exhausted() { return make_error(Errc::pool_exhausted, "pseudonym pool exhausted"); }

  std::vector<IssuedPseudonym> pool_;
  std::size_t next_unused_{0};
  std::map<ServiceId, std::size_t> per_service_;
  std::map<std::int64_t, std::size_t> per_window_;
  std::map<std::pair<ServiceId, std::int64_t>, std::size_t> per_service_window_;
};

inline Result<IssuedPseudonym> current_pseudonym(PseudonymWallet& wallet,
                                                 const PseudonymPolicy& policy,
                                                 const ServiceId& service, SimTime at) {
  return wallet.current(policy, service, at);
}

}  // namespace hcsim
