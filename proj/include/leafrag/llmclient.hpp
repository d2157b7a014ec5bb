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
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "leafrag/net.hpp"

namespace leafrag::llm {

enum class Role { kSystem, kUser, kAssistant };

std::string_view role_name(Role role) noexcept;

struct ChatMessage {
  Role role;
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct Usage {
  std::optional<long long> prompt_tokens;
  std::optional<long long> completion_tokens;
};

struct Completion {
  std::string text;
  Usage usage;
  std::string model;
};

/// Exactly one leading system message; non-empty user/assistant contents.
/// Throws Error{kValidation}.
void validate_messages(const std::vector<ChatMessage>& messages);

/// Anything that turns a message list into an assistant reply. Must be safe
/// for concurrent use.
class ChatModel {
 public:
  virtual ~ChatModel() = default;
  virtual Completion complete(const std::vector<ChatMessage>& messages) const = 0;
  virtual std::string model_name() const = 0;
};

struct CompletionConfig {
  std::string endpoint = "https://api.groq.com/openai/v1/chat/completions";
  std::string model = "llama-3.1-8b-instant";
  double temperature = 0.2;
  int max_tokens = 1024;
  std::chrono::milliseconds timeout{60000};
  std::string api_key_env = "GROQ_API_KEY";
  net::RetryPolicy retry;

  /// Throws Error{kConfig} unless temperature is in [0, 2], timeout > 0 and
  /// max_tokens > 0.
  void validate() const;
};

/// Chat-completions client. 401/403 fail immediately as config errors;
/// 429/5xx/timeouts are retried per the policy, then reported as transport
/// errors; an unexpected body is a protocol error.
class HttpChatClient final : public ChatModel {
 public:
  explicit HttpChatClient(CompletionConfig config, net::Sleeper sleeper = {});

  Completion complete(const std::vector<ChatMessage>& messages) const override;
  std::string model_name() const override { return config_.model; }

  /// Serialized request; identical inputs give identical bytes.
  std::string request_body(const std::vector<ChatMessage>& messages) const;

 private:
  CompletionConfig config_;
  net::Url url_;
  net::Sleeper sleeper_;
};

/// Parses `{"choices":[{"message":{"content":...}}],"usage":{...}}`.
Completion parse_completion(std::string_view body);

/// In-process model for tests and offline runs: replies with a deterministic
/// echo of everything it was given and records every request.
class EchoModel final : public ChatModel {
 public:
  Completion complete(const std::vector<ChatMessage>& messages) const override;
  std::string model_name() const override { return "echo"; }

  std::vector<std::vector<ChatMessage>> requests() const;
  /// Makes the next `n` calls throw Error{kTransport}.
  void fail_next(int n);

 private:
  mutable std::mutex mu_;
  mutable std::vector<std::vector<ChatMessage>> requests_;
  mutable int failures_left_ = 0;
};

/// Echo reply format shared by EchoModel and the test stub servers:
/// "[echo]" followed by each message as "\n<role>: <content>".
std::string echo_reply(const std::vector<ChatMessage>& messages);

}  // namespace leafrag::llm
