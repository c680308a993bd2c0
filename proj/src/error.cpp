#include "churnforge/error.hpp"

namespace churnforge {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::NotARepository: return "NotARepository";
    case Errc::GitInvocationFailed: return "GitInvocationFailed";
    case Errc::NonDecodableContent: return "NonDecodableContent";
    case Errc::EmptyHistory: return "EmptyHistory";
    case Errc::InvalidHistory: return "InvalidHistory";
    case Errc::MalformedManifest: return "MalformedManifest";
    case Errc::MissingBlob: return "MissingBlob";
    case Errc::IoError: return "IoError";
    case Errc::MalformedXml: return "MalformedXml";
    case Errc::DegenerateTarget: return "DegenerateTarget";
    case Errc::TooFewRows: return "TooFewRows";
    case Errc::ConstantTarget: return "ConstantTarget";
    case Errc::NonFiniteLoss: return "NonFiniteLoss";
    case Errc::SchemaMismatch: return "SchemaMismatch";
    case Errc::VersionMismatch: return "VersionMismatch";
    case Errc::CorruptModel: return "CorruptModel";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::MalformedCsv: return "MalformedCsv";
    case Errc::ConfigInvalid: return "ConfigInvalid";
    case Errc::StepFailed: return "StepFailed";
  }
  return "Unknown";
}

}  // namespace churnforge
