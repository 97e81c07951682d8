#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nftm {

enum class ErrorCode {
  Validation,
  BadSignature,
  NonceMismatch,
  UnknownSender,
  NotFound,
  IntegrityFailure,
  Expired,
  AlreadyUsed,
  UnknownChallenge,
  Unauthorized,
  UnknownToken,
  EmptyPrompt,
  ProviderUnavailable,
  DecodeFailure,
  CorruptData,
  Io,
  TargetUnreachable,
  AllRequestsFailed,
  Remote,
};

/// Stable machine-readable name, e.g. "NonceMismatch". The HTTP API reports these verbatim.
std::string_view error_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  std::string_view name() const noexcept { return error_name(code_); }

 private:
  ErrorCode code_;
};

/// Raised by generation providers; carries the server's Retry-After hint when one was sent.
class ProviderUnavailable : public Error {
 public:
  ProviderUnavailable(const std::string& message, long retry_after_s)
      : Error(ErrorCode::ProviderUnavailable, message), retry_after_s_(retry_after_s) {}

  /// Seconds, or -1 when the provider gave no hint.
  long retry_after_s() const noexcept { return retry_after_s_; }

 private:
  long retry_after_s_;
};

}  // namespace nftm
