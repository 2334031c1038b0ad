#pragma once

// Error handling idiom for the whole library: operations that can fail
// return Result<T>. Error carries a stable code (used by tests and for the
// drop reasons emitted into traces) plus a human-readable message.

#include <cassert>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>

namespace hcsim {

enum class Errc {
  // core_model
  kind_plane_mismatch,
  duplicate_id,
  world_sealed,
  unknown_node,
  // channels
  unsupported_address,
  no_back_channel,
  out_of_coverage,
  out_of_range,
  invalid_credential,
  revoked_credential,
  // security platform
  wrong_purpose,
  unknown_handle,
  auth_failure,
  // credentials
  already_revoked,
  invalid_enrollment,
  revoked_enrollment,
  pool_exhausted,
  // privacy
  purpose_mismatch,
  unknown_subject,
  unknown_record,
  schema_mismatch,
  empty_trace,
  // network plane
  invalid_provider_certificate,
  duplicate_service_id,
  unknown_service,
  no_viable_channel,
  integrity_failure,
  // sim
  scenario_invalid,
  malformed_trace,
};

inline std::string_view errc_name(Errc c) {
  switch (c) {
    case Errc::kind_plane_mismatch: return "KindPlaneMismatch";
    case Errc::duplicate_id: return "DuplicateId";
    case Errc::world_sealed: return "WorldSealed";
    case Errc::unknown_node: return "UnknownNode";
    case Errc::unsupported_address: return "UnsupportedAddress";
    case Errc::no_back_channel: return "NoBackChannel";
    case Errc::out_of_coverage: return "OutOfCoverage";
    case Errc::out_of_range: return "OutOfRange";
    case Errc::invalid_credential: return "InvalidCredential";
    case Errc::revoked_credential: return "RevokedCredential";
    case Errc::wrong_purpose: return "WrongPurpose";
    case Errc::unknown_handle: return "UnknownHandle";
    case Errc::auth_failure: return "AuthFailure";
    case Errc::already_revoked: return "AlreadyRevoked";
    case Errc::invalid_enrollment: return "InvalidEnrollment";
    case Errc::revoked_enrollment: return "RevokedEnrollment";
    case Errc::pool_exhausted: return "PoolExhausted";
    case Errc::purpose_mismatch: return "PurposeMismatch";
    case Errc::unknown_subject: return "UnknownSubject";
    case Errc::unknown_record: return "UnknownRecord";
    case Errc::schema_mismatch: return "SchemaMismatch";
    case Errc::empty_trace: return "EmptyTrace";
    case Errc::invalid_provider_certificate: return "InvalidProviderCertificate";
    case Errc::duplicate_service_id: return "DuplicateServiceId";
    case Errc::unknown_service: return "UnknownService";
    case Errc::no_viable_channel: return "NoViableChannel";
    case Errc::integrity_failure: return "IntegrityFailure";
    case Errc::scenario_invalid: return "ScenarioInvalid";
    case Errc::malformed_trace: return "MalformedTrace";
  }
  return "UnknownError";
}

struct Error {
  Errc code;
  std::string message;
};

inline Error make_error(Errc code, std::string message = {}) {
  if (message.empty()) message = std::string(errc_name(code));
  return Error{code, std::move(message)};
}

template <class T>
class [[nodiscard]] Result {
 public:
  Result(T value) : v_(std::move(value)) {}            // NOLINT(google-explicit-constructor)
  Result(Error error) : v_(std::move(error)) {}        // NOLINT(google-explicit-constructor)

  bool ok() const { return std::holds_alternative<T>(v_); }
  explicit operator bool() const { return ok(); }

  T& value() {
    assert(ok());
    return std::get<T>(v_);
  }
  const T& value() const {
    assert(ok());
    return std::get<T>(v_);
  }
  T&& take() {
    assert(ok());
    return std::move(std::get<T>(v_));
  }

  const Error& error() const {
    assert(!ok());
    return std::get<Error>(v_);
  }
  Errc code() const { return error().code; }

 private:
  std::variant<T, Error> v_;
};

template <>
class [[nodiscard]] Result<void> {
 public:
  Result() = default;
  Result(Error error) : err_(std::move(error)) {}      // NOLINT(google-explicit-constructor)

  bool ok() const { return !err_.has_value(); }
  explicit operator bool() const { return ok(); }

  const Error& error() const {
    assert(!ok());
    return *err_;
  }
  Errc code() const { return error().code; }

 private:
  std::optional<Error> err_;
};

}  // namespace hcsim
