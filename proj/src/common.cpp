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

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include <fmt/format.h>

#include "rtcshim/category.hpp"
#include "rtcshim/error.hpp"
#include "rtcshim/scalar.hpp"

namespace rtcshim {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::kUnknownBuiltin: return "UnknownBuiltin";
    case Errc::kInvalidParams: return "InvalidParams";
    case Errc::kStrictViolation: return "StrictViolation";
    case Errc::kInvalidType: return "InvalidType";
    case Errc::kMalformedLine: return "MalformedLine";
    case Errc::kMissingMandatory: return "MissingMandatory";
    case Errc::kInvalidValue: return "InvalidValue";
    case Errc::kMalformedCandidate: return "MalformedCandidate";
    case Errc::kInvalidAddress: return "InvalidAddress";
    case Errc::kInvalidServerUrl: return "InvalidServerUrl";
    case Errc::kUnknownMetric: return "UnknownMetric";
    case Errc::kUnknownSession: return "UnknownSession";
    case Errc::kInvalidInput: return "InvalidInput";
    case Errc::kWrongState: return "WrongState";
    case Errc::kNoViablePair: return "NoViablePair";
    case Errc::kChannelVetoed: return "ChannelVetoed";
    case Errc::kNotOpen: return "NotOpen";
    case Errc::kStepFailed: return "StepFailed";
    case Errc::kUpstreamConnectFailed: return "UpstreamConnectFailed";
    case Errc::kUpstreamTimeout: return "UpstreamTimeout";
    case Errc::kSinkUnreachable: return "SinkUnreachable";
    case Errc::kInvalidConfig: return "InvalidConfig";
    case Errc::kPayloadMismatch: return "PayloadMismatch";
    case Errc::kPlatformUnsupported: return "PlatformUnsupported";
    case Errc::kInternal: return "Internal";
  }
  return "Unknown";
}

std::string_view to_string(CategoryId id) {
  switch (id) {
    case CategoryId::kMedia: return "Media";
    case CategoryId::kDevices: return "Devices";
    case CategoryId::kSession: return "Session";
    case CategoryId::kConnect: return "Connect";
    case CategoryId::kNetwork: return "Network";
    case CategoryId::kStats: return "Stats";
    case CategoryId::kData: return "Data";
    case CategoryId::kSocket: return "Socket";
    case CategoryId::kRequest: return "Request";
    case CategoryId::kSecurity: return "Security";
    case CategoryId::kCpu: return "Cpu";
  }
  return "?";
}

std::optional<CategoryId> parse_category(std::string_view name) {
  auto lower = [](std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
  };
  const std::string wanted = lower(name);
  for (CategoryId id : kAllCategories) {
    if (lower(to_string(id)) == wanted) return id;
  }
  return std::nullopt;
}

json to_json(const Scalar& value) {
  return std::visit([](const auto& v) { return json(v); }, value);
}

std::optional<Scalar> scalar_from_json(const json& j) {
  if (j.is_string()) return Scalar{j.get<std::string>()};
  if (j.is_boolean()) return Scalar{j.get<bool>()};
  if (j.is_number()) return Scalar{j.get<double>()};
  return std::nullopt;
}

std::string scalar_to_string(const Scalar& value) {
  if (const auto* s = std::get_if<std::string>(&value)) return *s;
  if (const auto* b = std::get_if<bool>(&value)) return *b ? "true" : "false";
  const double d = std::get<double>(value);
  if (std::isfinite(d) && d == std::floor(d) && std::fabs(d) < 1e15) {
    return fmt::format("{}", static_cast<long long>(d));
  }
  return fmt::format("{}", d);
}

}  // namespace rtcshim
