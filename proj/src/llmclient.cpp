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

#include "leafrag/llmclient.hpp"

#include <json.hpp>

#include <cstdlib>

#include "leafrag/error.hpp"

namespace leafrag::llm {

std::string_view role_name(Role role) noexcept {
  switch (role) {
    case Role::kSystem: return "system";
    case Role::kUser: return "user";
    case Role::kAssistant: return "assistant";
  }
  return "user";
}

void validate_messages(const std::vector<ChatMessage>& messages) {
  if (messages.empty() || messages.front().role != Role::kSystem) {
    throw Error(ErrorCode::kValidation, "a request must start with exactly one system message");
  }
  for (std::size_t i = 1; i < messages.size(); ++i) {
    if (messages[i].role == Role::kSystem) {
      throw Error(ErrorCode::kValidation, "only the first message may be a system message");
    }
    if (messages[i].content.empty()) {
      throw Error(ErrorCode::kValidation,
                  "message " + std::to_string(i) + " (" + std::string(role_name(messages[i].role)) +
                      ") has empty content");
    }
  }
}

void CompletionConfig::validate() const {
  if (!(temperature >= 0.0 && temperature <= 2.0)) {
    throw Error(ErrorCode::kConfig, "temperature must be within [0, 2]");
  }
  if (timeout.count() <= 0) throw Error(ErrorCode::kConfig, "timeout must be positive");
  if (max_tokens <= 0) throw Error(ErrorCode::kConfig, "max_tokens must be positive");
  if (retry.max_retries < 0) throw Error(ErrorCode::kConfig, "max_retries must be >= 0");
}

HttpChatClient::HttpChatClient(CompletionConfig config, net::Sleeper sleeper)
    : config_(std::move(config)), url_(net::parse_url(config_.endpoint)), sleeper_(std::move(sleeper)) {
  config_.validate();
}

std::string HttpChatClient::request_body(const std::vector<ChatMessage>& messages) const {
  nlohmann::ordered_json body;
  body["model"] = config_.model;
  body["messages"] = nlohmann::ordered_json::array();
  for (const auto& m : messages) {
    nlohmann::ordered_json msg;
    msg["role"] = role_name(m.role);
    msg["content"] = m.content;
    body["messages"].push_back(std::move(msg));
  }
  body["temperature"] = config_.temperature;
  body["max_tokens"] = config_.max_tokens;
  return body.dump();
}

Completion parse_completion(std::string_view body) {
  auto doc = nlohmann::json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw Error(ErrorCode::kProtocol, "completion response is not a JSON object");
  }
  const auto choices = doc.find("choices");
  if (choices == doc.end() || !choices->is_array() || choices->empty()) {
    throw Error(ErrorCode::kProtocol, "completion response has no choices");
  }
  const auto& first = (*choices)[0];
  if (!first.is_object() || !first.contains("message") || !first["message"].is_object() ||
      !first["message"].contains("content") || !first["message"]["content"].is_string()) {
    throw Error(ErrorCode::kProtocol, "first choice lacks message.content");
  }
  Completion out;
  out.text = first["message"]["content"].get<std::string>();
  if (auto model = doc.find("model"); model != doc.end() && model->is_string()) {
    out.model = model->get<std::string>();
  }
  if (auto usage = doc.find("usage"); usage != doc.end() && usage->is_object()) {
    if (auto p = usage->find("prompt_tokens"); p != usage->end() && p->is_number_integer()) {
      out.usage.prompt_tokens = p->get<long long>();
    }
    if (auto c = usage->find("completion_tokens"); c != usage->end() && c->is_number_integer()) {
      out.usage.completion_tokens = c->get<long long>();
    }
  }
  return out;
}

Completion HttpChatClient::complete(const std::vector<ChatMessage>& messages) const {
  validate_messages(messages);
  net::Request request;
  request.body = request_body(messages);
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
      request.headers["Authorization"] = std::string("Bearer ") + key;
    }
  }
  net::CallOptions options;
  options.timeout = config_.timeout;
  options.retry = config_.retry;
  options.sleeper = sleeper_;

  const net::Response response = net::post(url_, request, options);
  if (response.status == 401 || response.status == 403) {
    throw Error(ErrorCode::kConfig, "chat endpoint rejected credentials (HTTP " +
                                        std::to_string(response.status) + "); check $" +
                                        config_.api_key_env);
  }
  if (response.status != 200) {
    throw Error(ErrorCode::kProtocol,
                "chat endpoint returned HTTP " + std::to_string(response.status));
  }
  Completion out = parse_completion(response.body);
  if (out.model.empty()) out.model = config_.model;
  return out;
}

std::string echo_reply(const std::vector<ChatMessage>& messages) {
  std::string out = "[echo]";
  for (const auto& m : messages) {
    out += "\n";
    out += role_name(m.role);
    out += ": ";
    out += m.content;
  }
  return out;
}

Completion EchoModel::complete(const std::vector<ChatMessage>& messages) const {
  validate_messages(messages);
  std::lock_guard lock(mu_);
  requests_.push_back(messages);
  if (failures_left_ > 0) {
    --failures_left_;
    throw Error(ErrorCode::kTransport, "echo model: scripted failure");
  }
  return Completion{echo_reply(messages), {}, "echo"};
}

std::vector<std::vector<ChatMessage>> EchoModel::requests() const {
  std::lock_guard lock(mu_);
  return requests_;
}

void EchoModel::fail_next(int n) {
  std::lock_guard lock(mu_);
  failures_left_ = n;
}

}  // namespace leafrag::llm
