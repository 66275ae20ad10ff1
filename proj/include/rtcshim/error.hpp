// Copyright 2026 The rtcshim Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
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

namespace rtcshim {

enum class Errc {
  kUnknownBuiltin,
  kInvalidParams,
  kStrictViolation,
  kInvalidType,
  kMalformedLine,
  kMissingMandatory,
  kInvalidValue,
  kMalformedCandidate,
  kInvalidAddress,
  kInvalidServerUrl,
  kUnknownMetric,
  kUnknownSession,
  kInvalidInput,
  kWrongState,
  kNoViablePair,
  kChannelVetoed,
  kNotOpen,
  kStepFailed,
  kUpstreamConnectFailed,
  kUpstreamTimeout,
  kSinkUnreachable,
  kInvalidConfig,
  kPayloadMismatch,
  kPlatformUnsupported,
  kInternal,
};

std::string_view errc_name(Errc code);

// Base exception for every recoverable failure raised by the library.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

class SdpParseError : public Error {
 public:
  SdpParseError(Errc code, std::size_t line_no, const std::string& what)
      : Error(code, what), line_no_(line_no) {}

  // 1-based; 0 when the error is not tied to a line.
  std::size_t line_no() const { return line_no_; }

 private:
  std::size_t line_no_;
};

}  // namespace rtcshim
