// Copyright 2026 The leafrag Authors
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
#include <utility>

namespace leafrag {

/// Coarse failure categories shared by every module. The service layer maps
/// them onto HTTP status codes, the CLI onto exit codes.
enum class ErrorCode {
  kParse,       // malformed input file or text
  kValidation,  // well-formed but semantically invalid input
  kConfig,      // bad configuration, auth failures, dimension mismatches
  kNotFound,
  kTransport,   // network failure, timeout, retries exhausted
  kProtocol,    // peer answered with an unexpected body
  kBusy,        // resource already in use
  kIo,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string component = {})
      : std::runtime_error(message), code_(code), component_(std::move(component)) {}

  ErrorCode code() const noexcept { return code_; }
  /// Subsystem that failed ("detector", "embedding", "llm"), if known.
  const std::string& component() const noexcept { return component_; }

 private:
  ErrorCode code_;
  std::string component_;
};

}  // namespace leafrag
