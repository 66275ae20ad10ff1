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

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rtcshim/scalar.hpp"

namespace rtcshim {

enum class CandidateType { kHost, kSrflx, kPrflx, kRelay };
enum class Transport { kUdp, kTcp };
enum class AddressClass { kIpv4Public, kIpv4Private, kIpv6, kMdnsHostname };

std::string_view to_string(CandidateType type);
std::string_view to_string(Transport transport);
std::string_view to_string(AddressClass cls);
std::optional<CandidateType> parse_candidate_type(std::string_view token);

struct IceCandidate {
  std::string foundation;
  int component = 1;
  Transport transport = Transport::kUdp;
  std::uint32_t priority = 0;
  std::string address;
  int port = 0;
  CandidateType type = CandidateType::kHost;
  std::optional<std::string> related_address;
  std::optional<int> related_port;
  // Trailing name/value pairs such as "generation 0" or "tcptype active".
  std::vector<std::pair<std::string, std::string>> extensions;
  // The line the candidate was parsed from; not part of equality.
  std::string raw;

  bool operator==(const IceCandidate& other) const;
};

using CandidateList = std::vector<IceCandidate>;

// Accepts "candidate:..." with or without a leading "a=".
// Throws Error(kMalformedCandidate).
IceCandidate parse_candidate(std::string_view line);

// Canonical "candidate:..." form (no "a=" prefix, lowercase transport).
std::string serialize_candidate(const IceCandidate& candidate);

bool is_ipv4_literal(std::string_view address);
bool is_ipv6_literal(std::string_view address);
bool is_hostname(std::string_view address);

// Private means the RFC 1918 blocks 10/8, 172.16/12 and 192.168/16.
// Hostnames under ".local" are mDNS names; any other hostname classifies as
// public. Throws Error(kInvalidAddress).
AddressClass classify_address(std::string_view address);

struct CandidatePolicy {
  bool drop_ipv6 = false;
  bool drop_private = false;
  bool relay_only = false;
  bool drop_host = false;
};

bool policy_admits(const IceCandidate& candidate, const CandidatePolicy& policy);

// Order-preserving subsequence of `candidates` admitted by `policy`.
CandidateList filter_candidates(std::span<const IceCandidate> candidates,
                                const CandidatePolicy& policy);

// RFC 8445 candidate priority.
std::uint32_t compute_priority(CandidateType type, std::uint32_t local_preference, int component);

std::uint32_t type_preference(CandidateType type);

json to_json(const IceCandidate& candidate);
IceCandidate candidate_from_json(const json& j);
json to_json(const CandidatePolicy& policy);
CandidatePolicy candidate_policy_from_json(const json& j);

}  // namespace rtcshim
