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

#include <string>
#include <utility>
#include <vector>

namespace rtcshim::detail {

struct HttpResult {
  enum class Failure { kNone, kConnect, kTimeout, kOther };
  Failure failure = Failure::kNone;
  int status = 0;
  std::vector<std::pair<std::string, std::string>> headers;
  std::string body;
};

// Plain http only. Absolute URL, e.g. "http://127.0.0.1:8080/path?q".
HttpResult http_request(const std::string& method, const std::string& url,
                        const std::vector<std::pair<std::string, std::string>>& headers, const std::string& body,
                        int timeout_ms);

// Status code, or -1 if the request could not be completed.
int http_post(const std::string& url, const std::string& body, const std::string& content_type,
              int timeout_ms = 2000);

struct UrlParts {
  std::string scheme;
  std::string host;
  int port = 0;
  std::string target;  // path plus query, at least "/"
};

// Throws Error(kInvalidValue).
UrlParts split_url(const std::string& url);

}  // namespace rtcshim::detail
