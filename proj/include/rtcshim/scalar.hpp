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

#include <map>
#include <optional>
#include <string>
#include <variant>

#include <nlohmann/json.hpp>

namespace rtcshim {

using json = nlohmann::json;

// A primitive value: string, boolean or number. Used for transform
// parameters and shared controls.
using Scalar = std::variant<std::string, bool, double>;

using Params = std::map<std::string, Scalar>;

json to_json(const Scalar& value);

// Returns nullopt for null, arrays and objects.
std::optional<Scalar> scalar_from_json(const json& j);

std::string scalar_to_string(const Scalar& value);

inline bool is_string(const Scalar& v) { return std::holds_alternative<std::string>(v); }
inline bool is_bool(const Scalar& v) { return std::holds_alternative<bool>(v); }
inline bool is_number(const Scalar& v) { return std::holds_alternative<double>(v); }

}  // namespace rtcshim
