// Copyright 2026 The SCOM Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace scom {

enum class ErrorCode {
  invalid_input,
  ingestion,
  incompatible_checkpoint,
  infeasible_constraints,
  unsupported_estimator,
  oracle,
  io,
  internal,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_input: return "invalid_input";
    case ErrorCode::ingestion: return "ingestion";
    case ErrorCode::incompatible_checkpoint: return "incompatible_checkpoint";
    case ErrorCode::infeasible_constraints: return "infeasible_constraints";
    case ErrorCode::unsupported_estimator: return "unsupported_estimator";
    case ErrorCode::oracle: return "oracle";
    case ErrorCode::io: return "io";
    case ErrorCode::internal: return "internal";
  }
  return "internal";
}

/// Every failure the library reports. `code` classifies it; `detail`
/// carries the offending row, column, path or index when there is one.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string detail = {})
      : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

  // Everything except internal faults is the caller's to fix.
  bool is_user_error() const noexcept { return code_ != ErrorCode::internal; }

 private:
  ErrorCode code_;
  std::string detail_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message,
                              std::string detail = {}) {
  throw Error(code, message, std::move(detail));
}

inline void require(bool condition, const std::string& message,
                    ErrorCode code = ErrorCode::invalid_input) {
  if (!condition) fail(code, message);
}

}  // namespace scom
