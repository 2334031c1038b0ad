#pragma once

// The addressed, purpose-tagged, signed unit of communication. The signature
// covers exactly the tuple (message id, address, class, purpose, payload,
// created_at) in canonical length-prefixed form; `payload` means the bytes
// as transmitted, i.e. the ciphertext when `encrypted` is set.

#include "hcsim/credentials.hpp"
#include "hcsim/secure_platform.hpp"
#include "hcsim/types.hpp"

namespace hcsim {

using MessageId = std::uint64_t;

struct MessageEnvelope {
  MessageId message_id{0};
  PseudonymId sender_pseudonym;
  Address address{UnicastAddress{}};
  MessageClass msg_class{MessageClass::UserSpecific};
  PurposeTag purpose;
  Bytes payload;
  SignedBlob signature;
  PseudonymCertificate cert;
  bool encrypted{false};
  SimTime created_at;
};

// Canonical byte sequence covered by the envelope signature. Field order and
// encoding are fixed: u64 message id, tagged address, u8 class, purpose
// string, payload bytes, i64 created_at; variable-length fields carry a
// u32-LE length prefix (see bytes.hpp).
inline Bytes signed_tuple_bytes(const MessageEnvelope& e) {
  ByteWriter w;
  w.u64(e.message_id);
  write_address(w, e.address);
  w.u8(static_cast<std::uint8_t>(e.msg_class));
  w.str(e.purpose.value);
  w.bytes(e.payload);
  w.i64(e.created_at.ms);
  return w.take();
}

// Signs the envelope tuple with the sender's pseudonym key and attaches the
// pseudonym certificate.
inline Result<void> sign_envelope(SecurePlatform& platform, const IssuedPseudonym& pseudonym,
                                  MessageEnvelope& envelope) {
  envelope.sender_pseudonym = pseudonym.certificate.pseudonym_id;
  envelope.cert = pseudonym.certificate;
  auto sig = platform.sign(pseudonym.key, signed_tuple_bytes(envelope));
  if (!sig) return sig.error();
  envelope.signature = sig.take();
  return {};
}

// True iff the signature verifies over the canonical tuple against the
// public key carried in the attached pseudonym certificate.
inline bool verify_envelope_signature(const MessageEnvelope& envelope) {
  return SecurePlatform::verify(envelope.cert.public_key, signed_tuple_bytes(envelope),
                                envelope.signature);
}

}  // namespace hcsim
