#pragma once

// Append-only transparency log: who processed which data for which purpose.
// Integrity comes from hash chaining: every entry's chain hash is
// SHA-512(previous chain hash || canonical entry content), with a zero hash
// at genesis. There is no edit or delete operation.

#include <span>
#include <string>
#include <vector>

#include "hcsim/secure_platform.hpp"
#include "hcsim/types.hpp"

namespace hcsim {

using ChainHash = std::array<std::uint8_t, 64>;

struct TransparencyLogEntry {
  std::uint64_t sequence{0};
  std::string actor;           // who processed (pseudonym hex, service or role name)
  PseudonymId subject;         // whose data; all-zero for system-level entries
  std::string operation;       // e.g. "store", "review", "delete", "import"
  PurposeTag purpose;
  SimTime at;
  ChainHash chain_hash{};

  auto operator<=>(const TransparencyLogEntry&) const = default;
};

// Canonical content bytes covered by the chain hash (everything except the
// hash itself).
inline Bytes entry_content_bytes(const TransparencyLogEntry& e) {
  ByteWriter w;
  w.u64(e.sequence);
  w.str(e.actor);
  w.fixed(e.subject.bytes);
  w.str(e.operation);
  w.str(e.purpose.value);
  w.i64(e.at.ms);
  return w.take();
}

inline ChainHash chain_step(const ChainHash& previous, const TransparencyLogEntry& e) {
  ByteWriter w;
  w.fixed(previous);
  w.bytes(entry_content_bytes(e));
  return sha512(w.data());
}

// True iff the sequence numbers run 0..n-1 and every chain hash re-derives
// from its predecessor.
inline bool verify_chain(std::span<const TransparencyLogEntry> entries) {
  ChainHash prev{};  // genesis: all zero
  std::uint64_t expected_seq = 0;
  for (const auto& e : entries) {
    if (e.sequence != expected_seq++) return false;
    if (chain_step(prev, e) != e.chain_hash) return false;
    prev = e.chain_hash;
  }
  return true;
}

class TransparencyLog {
 public:
  TransparencyLog() = default;
  explicit TransparencyLog(std::string log_id) : log_id_(std::move(log_id)) {}

  const std::string& log_id() const { return log_id_; }

  std::uint64_t append(std::string actor, PseudonymId subject, std::string operation,
                       PurposeTag purpose, SimTime at) {
    TransparencyLogEntry e;
    e.sequence = entries_.size();
    e.actor = std::move(actor);
    e.subject = subject;
    e.operation = std::move(operation);
    e.purpose = std::move(purpose);
    e.at = at;
    e.chain_hash = chain_step(entries_.empty() ? ChainHash{} : entries_.back().chain_hash, e);
    entries_.push_back(std::move(e));
    return entries_.back().sequence;
  }

  bool verify() const { return verify_chain(entries_); }

  const std::vector<TransparencyLogEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::string log_id_{"log"};
  std::vector<TransparencyLogEntry> entries_;
};

}  // namespace hcsim
