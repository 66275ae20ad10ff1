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

#include "rtcshim/payload.hpp"

#include <fmt/format.h>
#include <openssl/evp.h>

#include "rtcshim/error.hpp"
#include "text_util.hpp"

namespace rtcshim {

std::optional<std::string> HttpMessage::header(std::string_view name) const {
  for (const auto& [k, v] : headers) {
    if (detail::iequals(k, name)) return v;
  }
  return std::nullopt;
}

void HttpMessage::set_header(std::string_view name, std::string value) {
  bool placed = false;
  for (auto it = headers.begin(); it != headers.end();) {
    if (detail::iequals(it->first, name)) {
      if (placed) {
        it = headers.erase(it);
        continue;
      }
      it->second = value;
      placed = true;
    }
    ++it;
  }
  if (!placed) headers.emplace_back(std::string(name), std::move(value));
}

std::size_t HttpMessage::remove_header(std::string_view name) {
  return std::erase_if(headers, [&](const auto& h) { return detail::iequals(h.first, name); });
}

std::string_view payload_type_name(const Payload& p) {
  static constexpr std::string_view kNames[] = {
      "SessionDescription", "CandidateList", "MediaConstraints", "DeviceList",  "PeerConfig", "EncodingParams",
      "StatsReport",        "DataMessage",   "SocketMessage",    "HttpMessage", "CpuSample"};
  return kNames[p.index()];
}

bool payload_fits(CategoryId category, const Payload& p) {
  switch (category) {
    case CategoryId::kSession:
      return std::holds_alternative<SessionDescription>(p) || std::holds_alternative<EncodingParams>(p);
    case CategoryId::kNetwork: return std::holds_alternative<CandidateList>(p);
    case CategoryId::kMedia: return std::holds_alternative<MediaConstraints>(p);
    case CategoryId::kDevices: return std::holds_alternative<DeviceList>(p);
    case CategoryId::kConnect: return std::holds_alternative<PeerConfig>(p);
    case CategoryId::kStats: return std::holds_alternative<StatsReport>(p);
    case CategoryId::kData: return std::holds_alternative<DataMessage>(p);
    case CategoryId::kSocket: return std::holds_alternative<SocketMessage>(p);
    case CategoryId::kRequest:
    case CategoryId::kSecurity: return std::holds_alternative<HttpMessage>(p);
    case CategoryId::kCpu: return std::holds_alternative<CpuSample>(p);
  }
  return false;
}

std::string_view default_payload_type(CategoryId category) {
  switch (category) {
    case CategoryId::kSession: return "SessionDescription";
    case CategoryId::kNetwork: return "CandidateList";
    case CategoryId::kMedia: return "MediaConstraints";
    case CategoryId::kDevices: return "DeviceList";
    case CategoryId::kConnect: return "PeerConfig";
    case CategoryId::kStats: return "StatsReport";
    case CategoryId::kData: return "DataMessage";
    case CategoryId::kSocket: return "SocketMessage";
    case CategoryId::kRequest:
    case CategoryId::kSecurity: return "HttpMessage";
    case CategoryId::kCpu: return "CpuSample";
  }
  return "";
}

json bytes_to_json(const std::string& bytes) {
  try {
    (void)json(bytes).dump();
    return bytes;
  } catch (const json::type_error&) {
  }
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return json{{"base64", out}};
}

std::string bytes_from_json(const json& j) {
  if (j.is_null()) return {};
  if (j.is_string()) return j.get<std::string>();
  if (!j.is_object() || !j.contains("base64") || !j["base64"].is_string()) {
    throw Error(Errc::kInvalidValue, "bytes must be a string or {\"base64\": ...}");
  }
  const auto in = j["base64"].get<std::string>();
  if (in.size() % 4 != 0) throw Error(Errc::kInvalidValue, "base64 length is not a multiple of 4");
  std::string out(3 * in.size() / 4, '\0');
  const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(in.data()), static_cast<int>(in.size()));
  if (n < 0) throw Error(Errc::kInvalidValue, "bad base64");
  std::size_t len = static_cast<std::size_t>(n);
  // EVP_DecodeBlock counts the padding as data.
  if (!in.empty() && in.back() == '=') --len;
  if (in.size() > 1 && in[in.size() - 2] == '=') --len;
  out.resize(len);
  return out;
}

json to_json(const DataMessage& m) { return json{{"label", m.label}, {"data", bytes_to_json(m.data)}, {"binary", m.binary}}; }

json to_json(const SocketMessage& m) { return json{{"url", m.url}, {"data", bytes_to_json(m.data)}, {"binary", m.binary}}; }

json to_json(const HttpMessage& m) {
  json headers = json::array();
  for (const auto& [k, v] : m.headers) headers.push_back(json::array({k, v}));
  json j{{"method", m.method}, {"url", m.url}, {"headers", headers}, {"body", bytes_to_json(m.body)}};
  if (m.status) j["status"] = m.status;
  return j;
}

json to_json(const CpuSample& s) {
  json cores = json::array();
  for (const auto& c : s.per_core) cores.push_back(json{{"index", c.index}, {"load_percent", c.load_percent}});
  return json{{"t_ms", s.t_ms}, {"total_load_percent", s.total_load_percent}, {"per_core", cores}};
}

DataMessage data_message_from_json(const json& j) {
  return DataMessage{j.value("label", std::string()), bytes_from_json(j.value("data", json())), j.value("binary", false)};
}

SocketMessage socket_message_from_json(const json& j) {
  return SocketMessage{j.value("url", std::string()), bytes_from_json(j.value("data", json())), j.value("binary", false)};
}

HttpMessage http_message_from_json(const json& j) {
  HttpMessage m;
  m.method = j.value("method", std::string());
  m.url = j.value("url", std::string());
  m.status = j.value("status", 0);
  m.body = bytes_from_json(j.value("body", json()));
  if (auto it = j.find("headers"); it != j.end()) {
    if (it->is_object()) {
      for (const auto& [k, v] : it->items()) m.headers.emplace_back(k, v.get<std::string>());
    } else {
      for (const auto& h : *it) m.headers.emplace_back(h.at(0).get<std::string>(), h.at(1).get<std::string>());
    }
  }
  return m;
}

CpuSample cpu_sample_from_json(const json& j) {
  CpuSample s;
  s.t_ms = j.value("t_ms", 0.0);
  s.total_load_percent = j.value("total_load_percent", 0.0);
  if (auto it = j.find("per_core"); it != j.end()) {
    for (const auto& c : *it) s.per_core.push_back({c.value("index", 0), c.value("load_percent", 0.0)});
  }
  auto in_range = [](double v) { return v >= 0 && v <= 100; };
  bool ok = in_range(s.total_load_percent);
  for (const auto& c : s.per_core) ok = ok && in_range(c.load_percent);
  if (!ok) throw Error(Errc::kInvalidValue, "cpu load outside [0,100]");
  return s;
}

json to_json(const Payload& p) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, CandidateList>) {
          json out = json::array();
          for (const auto& c : v) out.push_back(to_json(c));
          return out;
        } else {
          return to_json(v);
        }
      },
      p);
}

Payload payload_from_json(std::string_view type, const json& j) {
  if (type == "SessionDescription") return session_description_from_json(j);
  if (type == "CandidateList") {
    CandidateList out;
    for (const auto& c : j) out.push_back(candidate_from_json(c));
    return out;
  }
  if (type == "MediaConstraints") return constraints_from_json(j);
  if (type == "DeviceList") return device_list_from_json(j);
  if (type == "PeerConfig") return peer_config_from_json(j);
  if (type == "EncodingParams") return encoding_params_from_json(j);
  if (type == "StatsReport") return stats_report_from_json(j);
  if (type == "DataMessage") return data_message_from_json(j);
  if (type == "SocketMessage") return socket_message_from_json(j);
  if (type == "HttpMessage") return http_message_from_json(j);
  if (type == "CpuSample") return cpu_sample_from_json(j);
  throw Error(Errc::kInvalidValue, fmt::format("unknown payload type {}", type));
}

}  // namespace rtcshim
