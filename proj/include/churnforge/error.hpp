#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace churnforge {

enum class Errc {
  NotARepository,
  GitInvocationFailed,
  NonDecodableContent,
  EmptyHistory,
  InvalidHistory,
  MalformedManifest,
  MissingBlob,
  IoError,
  MalformedXml,
  DegenerateTarget,
  TooFewRows,
  ConstantTarget,
  NonFiniteLoss,
  SchemaMismatch,
  VersionMismatch,
  CorruptModel,
  LengthMismatch,
  EmptyInput,
  MalformedCsv,
  ConfigInvalid,
  StepFailed,
};

std::string_view errc_name(Errc code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI exit-code mapping) can branch without string matching.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace churnforge
