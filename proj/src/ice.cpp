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

#include "rtcshim/ice.hpp"

#include <arpa/inet.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>

#include "rtcshim/error.hpp"

namespace rtcshim {

namespace {

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
  T value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

[[noreturn]] void malformed(std::string_view line, std::string_view why) {
  throw Error(Errc::kMalformedCandidate,
              "malformed candidate (" + std::string(why) + "): " + std::string(line));
}

}  // namespace

std::string_view to_string(CandidateType type) {
  switch (type) {
    case CandidateType::kHost: return "host";
    case CandidateType::kSrflx: return "srflx";
    case CandidateType::kPrflx: return "prflx";
    case CandidateType::kRelay: return "relay";
  }
  return "?";
}

std::string_view to_string(Transport transport) {
  return transport == Transport::kUdp ? "udp" : "tcp";
}

std::string_view to_string(AddressClass cls) {
  switch (cls) {
    case AddressClass::kIpv4Public: return "ipv4_public";
    case AddressClass::kIpv4Private: return "ipv4_private";
    case AddressClass::kIpv6: return "ipv6";
    case AddressClass::kMdnsHostname: return "mdns_hostname";
  }
  return "?";
}

std::optional<CandidateType> parse_candidate_type(std::string_view token) {
  const std::string t = lower(token);
  if (t == "host") return CandidateType::kHost;
  if (t == "srflx") return CandidateType::kSrflx;
  if (t == "prflx") return CandidateType::kPrflx;
  if (t == "relay") return CandidateType::kRelay;
  return std::nullopt;
}

bool IceCandidate::operator==(const IceCandidate& o) const {
  return foundation == o.foundation && component == o.component && transport == o.transport &&
         priority == o.priority && address == o.address && port == o.port && type == o.type &&
         related_address == o.related_address && related_port == o.related_port &&
         extensions == o.extensions;
}

IceCandidate parse_candidate(std::string_view line) {
  std::string_view rest = line;
  while (!rest.empty() && std::isspace(static_cast<unsigned char>(rest.back()))) rest.remove_suffix(1);
  while (!rest.empty() && std::isspace(static_cast<unsigned char>(rest.front()))) rest.remove_prefix(1);
  if (rest.substr(0, 2) == "a=") rest.remove_prefix(2);
  constexpr std::string_view kPrefix = "candidate:";
  if (rest.substr(0, kPrefix.size()) != kPrefix) malformed(line, "missing candidate: prefix");
  rest.remove_prefix(kPrefix.size());

  const auto tokens = split_ws(rest);
  if (tokens.size() < 8) malformed(line, "too few fields");

  IceCandidate c;
  c.raw = std::string(line);
  c.foundation = std::string(tokens[0]);
  auto component = parse_number<int>(tokens[1]);
  if (!component || *component < 1 || *component > 256) malformed(line, "component");
  c.component = *component;

  const std::string transport = lower(tokens[2]);
  if (transport == "udp") {
    c.transport = Transport::kUdp;
  } else if (transport == "tcp") {
    c.transport = Transport::kTcp;
  } else {
    malformed(line, "transport");
  }

  auto priority = parse_number<std::uint32_t>(tokens[3]);
  if (!priority) malformed(line, "priority");
  c.priority = *priority;

  c.address = std::string(tokens[4]);
  if (!is_ipv4_literal(c.address) && !is_ipv6_literal(c.address) && !is_hostname(c.address)) {
    malformed(line, "address");
  }
  auto port = parse_number<int>(tokens[5]);
  if (!port || *port < 0 || *port > 65535) malformed(line, "port");
  c.port = *port;

  if (tokens[6] != "typ") malformed(line, "expected 'typ'");
  auto type = parse_candidate_type(tokens[7]);
  if (!type) malformed(line, "candidate type");
  c.type = *type;

  if ((tokens.size() - 8) % 2 != 0) malformed(line, "dangling extension attribute");
  for (std::size_t i = 8; i < tokens.size(); i += 2) {
    const std::string_view name = tokens[i];
    const std::string_view value = tokens[i + 1];
    if (name == "raddr") {
      c.related_address = std::string(value);
    } else if (name == "rport") {
      auto rport = parse_number<int>(value);
      if (!rport || *rport < 0 || *rport > 65535) malformed(line, "rport");
      c.related_port = *rport;
    } else {
      c.extensions.emplace_back(std::string(name), std::string(value));
    }
  }
  return c;
}

std::string serialize_candidate(const IceCandidate& c) {
  std::ostringstream out;
  out << "candidate:" << c.foundation << ' ' << c.component << ' ' << to_string(c.transport)
      << ' ' << c.priority << ' ' << c.address << ' ' << c.port << " typ " << to_string(c.type);
  if (c.related_address) out << " raddr " << *c.related_address;
  if (c.related_port) out << " rport " << *c.related_port;
  for (const auto& [name, value] : c.extensions) out << ' ' << name << ' ' << value;
  return out.str();
}

bool is_ipv4_literal(std::string_view address) {
  if (address.empty() || address.size() > 15) return false;
  in_addr addr{};
  return inet_pton(AF_INET, std::string(address).c_str(), &addr) == 1;
}

bool is_ipv6_literal(std::string_view address) {
  if (address.find(':') == std::string_view::npos) return false;
  std::string s(address);
  if (s.size() > 2 && s.front() == '[' && s.back() == ']') s = s.substr(1, s.size() - 2);
  // Zone identifiers ("fe80::1%eth0") are allowed in candidates.
  if (auto pct = s.find('%'); pct != std::string::npos) s.resize(pct);
  in6_addr addr{};
  return inet_pton(AF_INET6, s.c_str(), &addr) == 1;
}

bool is_hostname(std::string_view address) {
  if (address.empty() || address.size() > 253) return false;
  if (address.front() == '.' || address.front() == '-') return false;
  bool has_alpha = false;
  std::size_t label_len = 0;
  for (char ch : address) {
    const auto c = static_cast<unsigned char>(ch);
    if (ch == '.') {
      if (label_len == 0) return false;
      label_len = 0;
      continue;
    }
    if (!std::isalnum(c) && ch != '-') return false;
    if (std::isalpha(c) || ch == '-') has_alpha = true;
    if (++label_len > 63) return false;
  }
  // All-numeric dotted strings that failed IPv4 parsing are not hostnames.
  return has_alpha;
}

AddressClass classify_address(std::string_view address) {
  if (is_ipv4_literal(address)) {
    in_addr addr{};
    inet_pton(AF_INET, std::string(address).c_str(), &addr);
    const std::uint32_t ip = ntohl(addr.s_addr);
    const bool private_block = (ip >> 24) == 10 || (ip >> 20) == ((172u << 4) | 1u) ||
                               (ip >> 16) == ((192u << 8) | 168u);
    return private_block ? AddressClass::kIpv4Private : AddressClass::kIpv4Public;
  }
  if (is_ipv6_literal(address)) return AddressClass::kIpv6;
  if (is_hostname(address)) {
    const std::string l = lower(address);
    constexpr std::string_view kLocal = ".local";
    if (l.size() > kLocal.size() && l.compare(l.size() - kLocal.size(), kLocal.size(), kLocal) == 0) {
      return AddressClass::kMdnsHostname;
    }
    return AddressClass::kIpv4Public;
  }
  throw Error(Errc::kInvalidAddress, "invalid address '" + std::string(address) + "'");
}

bool policy_admits(const IceCandidate& candidate, const CandidatePolicy& policy) {
  if (policy.relay_only && candidate.type != CandidateType::kRelay) return false;
  if (policy.drop_host && candidate.type == CandidateType::kHost) return false;
  if (policy.drop_ipv6 || policy.drop_private) {
    AddressClass cls;
    try {
      cls = classify_address(candidate.address);
    } catch (const Error&) {
      return false;
    }
    if (policy.drop_ipv6 && cls == AddressClass::kIpv6) return false;
    if (policy.drop_private && cls == AddressClass::kIpv4Private) return false;
  }
  return true;
}

CandidateList filter_candidates(std::span<const IceCandidate> candidates,
                                const CandidatePolicy& policy) {
  CandidateList out;
  std::copy_if(candidates.begin(), candidates.end(), std::back_inserter(out),
               [&](const IceCandidate& c) { return policy_admits(c, policy); });
  return out;
}

std::uint32_t type_preference(CandidateType type) {
  switch (type) {
    case CandidateType::kHost: return 126;
    case CandidateType::kPrflx: return 110;
    case CandidateType::kSrflx: return 100;
    case CandidateType::kRelay: return 0;
  }
  return 0;
}

std::uint32_t compute_priority(CandidateType type, std::uint32_t local_preference, int component) {
  return (type_preference(type) << 24) + ((local_preference & 0xFFFFu) << 8) +
         static_cast<std::uint32_t>(256 - component);
}

json to_json(const IceCandidate& c) {
  json j = {{"foundation", c.foundation},
            {"component", c.component},
            {"transport", to_string(c.transport)},
            {"priority", c.priority},
            {"address", c.address},
            {"port", c.port},
            {"type", to_string(c.type)},
            {"line", serialize_candidate(c)}};
  if (c.related_address) j["related_address"] = *c.related_address;
  if (c.related_port) j["related_port"] = *c.related_port;
  return j;
}

IceCandidate candidate_from_json(const json& j) {
  if (j.is_string()) return parse_candidate(j.get<std::string>());
  if (j.is_object() && j.contains("line")) return parse_candidate(j.at("line").get<std::string>());
  if (!j.is_object()) throw Error(Errc::kMalformedCandidate, "candidate must be a string or object");
  try {
    IceCandidate c;
    c.foundation = j.value("foundation", std::string("1"));
    c.component = j.value("component", 1);
    c.transport = lower(j.value("transport", std::string("udp"))) == "tcp" ? Transport::kTcp : Transport::kUdp;
    c.address = j.at("address").get<std::string>();
    c.port = j.at("port").get<int>();
    auto type = parse_candidate_type(j.value("type", std::string("host")));
    if (!type) throw Error(Errc::kMalformedCandidate, "bad candidate type");
    c.type = *type;
    c.priority = j.contains("priority") ? j.at("priority").get<std::uint32_t>()
                                        : compute_priority(c.type, 65535, c.component);
    if (j.contains("related_address")) c.related_address = j.at("related_address").get<std::string>();
    if (j.contains("related_port")) c.related_port = j.at("related_port").get<int>();
    // Round-trip through the grammar so the result is validated.
    IceCandidate parsed = parse_candidate(serialize_candidate(c));
    return parsed;
  } catch (const json::exception& e) {
    throw Error(Errc::kMalformedCandidate, e.what());
  }
}

json to_json(const CandidatePolicy& p) {
  return {{"drop_ipv6", p.drop_ipv6},
          {"drop_private", p.drop_private},
          {"relay_only", p.relay_only},
          {"drop_host", p.drop_host}};
}

CandidatePolicy candidate_policy_from_json(const json& j) {
  CandidatePolicy p;
  p.drop_ipv6 = j.value("drop_ipv6", false);
  p.drop_private = j.value("drop_private", false);
  p.relay_only = j.value("relay_only", false);
  p.drop_host = j.value("drop_host", false);
  return p;
}

}  // namespace rtcshim
