#include "nftm/error.hpp"

namespace nftm {

std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::Validation: return "ValidationError";
    case ErrorCode::BadSignature: return "BadSignature";
    case ErrorCode::NonceMismatch: return "NonceMismatch";
    case ErrorCode::UnknownSender: return "UnknownSender";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::IntegrityFailure: return "IntegrityFailure";
    case ErrorCode::Expired: return "Expired";
    case ErrorCode::AlreadyUsed: return "AlreadyUsed";
    case ErrorCode::UnknownChallenge: return "UnknownChallenge";
    case ErrorCode::Unauthorized: return "Unauthorized";
    case ErrorCode::UnknownToken: return "UnknownToken";
    case ErrorCode::EmptyPrompt: return "EmptyPrompt";
    case ErrorCode::ProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::DecodeFailure: return "DecodeFailure";
    case ErrorCode::CorruptData: return "CorruptData";
    case ErrorCode::Io: return "IoError";
    case ErrorCode::TargetUnreachable: return "TargetUnreachable";
    case ErrorCode::AllRequestsFailed: return "AllRequestsFailed";
    case ErrorCode::Remote: return "RemoteError";
  }
  return "Unknown";
}

}  // namespace nftm
