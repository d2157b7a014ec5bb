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

#include <chrono>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace leafrag::net {

/// Splits `https://host:port/path` into the origin understood by the HTTP
/// client and the request path. Throws Error{kConfig} on anything else.
struct Url {
  std::string origin;  // scheme://host[:port]
  std::string path;    // always starts with '/'
};
Url parse_url(const std::string& url);

/// Exponential backoff: delay(n) = min(initial * multiplier^n, max_delay).
/// Delays are non-decreasing in n.
struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds initial_delay{500};
  double multiplier = 2.0;
  std::chrono::milliseconds max_delay{8000};

  std::chrono::milliseconds delay(int retry_index) const;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;
Sleeper real_sleeper();

struct Request {
  std::string body;
  std::string content_type = "application/json";
  std::map<std::string, std::string> headers;
};

struct MultipartFile {
  std::string field;
  std::string filename;
  std::string content;
  std::string content_type;
};

struct Response {
  int status = 0;
  std::string body;
  int attempts = 0;
};

struct CallOptions {
  std::chrono::milliseconds timeout{30000};
  RetryPolicy retry;
  Sleeper sleeper;  // defaults to real_sleeper()
};

inline bool is_retryable_status(int status) { return status == 429 || status >= 500; }

/// POSTs with retries on connection errors, timeouts, 429 and 5xx. Returns
/// the first non-retryable response; throws Error{kTransport} once retries are
/// exhausted.
Response post(const Url& url, const Request& request, const CallOptions& options);

/// Multipart variant used by the remote detector.
Response post_multipart(const Url& url, const std::vector<MultipartFile>& files,
                        const std::map<std::string, std::string>& headers,
                        const CallOptions& options);

}  // namespace leafrag::net
