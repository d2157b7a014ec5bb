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

#include "leafrag/net.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <thread>

#include "leafrag/error.hpp"

namespace leafrag::net {
namespace {

void configure(httplib::Client& client, std::chrono::milliseconds timeout) {
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  client.set_keep_alive(false);
}

httplib::Headers to_headers(const std::map<std::string, std::string>& in) {
  httplib::Headers out;
  for (const auto& [k, v] : in) out.emplace(k, v);
  return out;
}

template <typename Send>
Response with_retries(const Url& url, const CallOptions& options, Send&& send) {
  const Sleeper sleep = options.sleeper ? options.sleeper : real_sleeper();
  std::string last_failure;
  for (int attempt = 0;; ++attempt) {
    httplib::Client client(url.origin);
    configure(client, options.timeout);
    httplib::Result result = send(client);
    if (result) {
      if (!is_retryable_status(result->status)) {
        return Response{result->status, result->body, attempt + 1};
      }
      last_failure = "HTTP " + std::to_string(result->status);
    } else {
      last_failure = httplib::to_string(result.error());
    }
    if (attempt >= options.retry.max_retries) {
      throw Error(ErrorCode::kTransport, "POST " + url.origin + url.path + " failed after " +
                                             std::to_string(attempt + 1) +
                                             " attempt(s): " + last_failure);
    }
    sleep(options.retry.delay(attempt));
  }
}

}  // namespace

Url parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::kConfig, "URL lacks a scheme: '" + url + "'");
  }
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw Error(ErrorCode::kConfig, "unsupported URL scheme: '" + scheme + "'");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  Url out;
  out.origin = url.substr(0, path_start);
  out.path = path_start == std::string::npos ? "/" : url.substr(path_start);
  if (out.origin.size() <= scheme_end + 3) {
    throw Error(ErrorCode::kConfig, "URL lacks a host: '" + url + "'");
  }
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (scheme == "https") {
    throw Error(ErrorCode::kConfig, "https requested but built without TLS support");
  }
#endif
  return out;
}

std::chrono::milliseconds RetryPolicy::delay(int retry_index) const {
  const double scaled =
      static_cast<double>(initial_delay.count()) * std::pow(multiplier, retry_index);
  const double capped = std::min(scaled, static_cast<double>(max_delay.count()));
  return std::chrono::milliseconds(static_cast<long long>(capped));
}

Sleeper real_sleeper() {
  return [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

Response post(const Url& url, const Request& request, const CallOptions& options) {
  const auto headers = to_headers(request.headers);
  return with_retries(url, options, [&](httplib::Client& client) {
    return client.Post(url.path, headers, request.body, request.content_type);
  });
}

Response post_multipart(const Url& url, const std::vector<MultipartFile>& files,
                        const std::map<std::string, std::string>& headers,
                        const CallOptions& options) {
  httplib::MultipartFormDataItems items;
  for (const auto& f : files) {
    items.push_back({f.field, f.content, f.filename, f.content_type});
  }
  const auto hdrs = to_headers(headers);
  return with_retries(url, options, [&](httplib::Client& client) {
    return client.Post(url.path, hdrs, items);
  });
}

}  // namespace leafrag::net
