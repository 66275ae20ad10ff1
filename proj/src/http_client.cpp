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

#include "http_client.hpp"

#include <httplib.h>

#include <regex>

#include "rtcshim/error.hpp"
#include "text_util.hpp"

namespace rtcshim::detail {

UrlParts split_url(const std::string& url) {
  static const std::regex re(R"(^([a-zA-Z][a-zA-Z0-9+.-]*)://(\[[^\]]+\]|[^/:?#]+)(?::(\d+))?([^#]*))");
  std::smatch m;
  if (!std::regex_search(url, m, re)) throw Error(Errc::kInvalidValue, "malformed url: " + url);
  UrlParts p;
  p.scheme = m[1].str();
  for (auto& c : p.scheme) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  p.host = m[2].str();
  if (p.host.size() > 2 && p.host.front() == '[') p.host = p.host.substr(1, p.host.size() - 2);
  const bool secure = p.scheme == "https" || p.scheme == "wss";
  p.port = m[3].matched ? std::stoi(m[3].str()) : (secure ? 443 : 80);
  p.target = m[4].str().empty() ? "/" : m[4].str();
  if (p.target.front() != '/') p.target = "/" + p.target;
  return p;
}

HttpResult http_request(const std::string& method, const std::string& url,
                        const std::vector<std::pair<std::string, std::string>>& headers, const std::string& body,
                        int timeout_ms) {
  HttpResult out;
  UrlParts u;
  try {
    u = split_url(url);
  } catch (const Error&) {
    out.failure = HttpResult::Failure::kOther;
    return out;
  }
  if (u.scheme != "http") {
    out.failure = HttpResult::Failure::kOther;
    return out;
  }
  httplib::Client cli(u.host, u.port);
  const auto sec = timeout_ms / 1000;
  const auto usec = (timeout_ms % 1000) * 1000;
  cli.set_connection_timeout(sec, usec);
  cli.set_read_timeout(sec, usec);
  cli.set_write_timeout(sec, usec);

  httplib::Request req;
  req.method = method;
  req.path = u.target;
  for (const auto& [k, v] : headers) {
    // httplib manages these itself.
    if (iequals(k, "Content-Length") || iequals(k, "Host") || iequals(k, "Connection")) {
      continue;
    }
    req.headers.emplace(k, v);
  }
  req.body = body;

  auto res = cli.send(req);
  if (!res) {
    switch (res.error()) {
      case httplib::Error::Connection: out.failure = HttpResult::Failure::kConnect; break;
      case httplib::Error::Read:
      case httplib::Error::Write:
      case httplib::Error::ConnectionTimeout: out.failure = HttpResult::Failure::kTimeout; break;
      default: out.failure = HttpResult::Failure::kOther; break;
    }
    return out;
  }
  out.status = res->status;
  for (const auto& [k, v] : res->headers) out.headers.emplace_back(k, v);
  out.body = res->body;
  return out;
}

int http_post(const std::string& url, const std::string& body, const std::string& content_type, int timeout_ms) {
  auto r = http_request("POST", url, {{"Content-Type", content_type}}, body, timeout_ms);
  return r.failure == HttpResult::Failure::kNone ? r.status : -1;
}

}  // namespace rtcshim::detail
