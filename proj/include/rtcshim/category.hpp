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

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

namespace rtcshim {

// Intercept surfaces handled by the engine. The media-plane categories
// (frame generation, recording, element layout) are not part of this set.
enum class CategoryId : std::size_t {
  kMedia,
  kDevices,
  kSession,
  kConnect,
  kNetwork,
  kStats,
  kData,
  kSocket,
  kRequest,
  kSecurity,
  kCpu,
};

inline constexpr std::size_t kCategoryCount = 11;

inline constexpr std::array<CategoryId, kCategoryCount> kAllCategories = {
    CategoryId::kMedia,   CategoryId::kDevices, CategoryId::kSession, CategoryId::kConnect,
    CategoryId::kNetwork, CategoryId::kStats,   CategoryId::kData,    CategoryId::kSocket,
    CategoryId::kRequest, CategoryId::kSecurity, CategoryId::kCpu,
};

std::string_view to_string(CategoryId id);

// Case-insensitive; accepts "Cpu" and "CPU".
std::optional<CategoryId> parse_category(std::string_view name);

constexpr std::size_t index_of(CategoryId id) { return static_cast<std::size_t>(id); }

// Request and Socket may answer locally; Data may veto channel creation.
constexpr bool allows_short_circuit(CategoryId id) {
  return id == CategoryId::kRequest || id == CategoryId::kSocket || id == CategoryId::kData;
}

}  // namespace rtcshim
