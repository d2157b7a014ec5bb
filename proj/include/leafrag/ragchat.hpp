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

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "leafrag/detect.hpp"
#include "leafrag/embed.hpp"
#include "leafrag/llmclient.hpp"
#include "leafrag/vectorstore.hpp"

namespace leafrag::rag {

struct ChatTurn {
  llm::Role role = llm::Role::kUser;
  std::string content;
  std::vector<std::string> sources;  // chunk ids, assistant turns only
  std::int64_t timestamp_ms = 0;
};

inline constexpr std::size_t kDefaultWindowSize = 5;

/// Conversation state. Turns always come in user/assistant pairs; prompts see
/// only the most recent `window_size` pairs while the full transcript is kept.
class Session {
 public:
  Session(std::string id, std::size_t window_size = kDefaultWindowSize);

  const std::string& id() const noexcept { return id_; }
  std::size_t window_size() const noexcept { return window_size_; }
  const std::vector<ChatTurn>& turns() const noexcept { return turns_; }
  std::size_t exchanges() const noexcept { return turns_.size() / 2; }
  std::vector<ChatTurn> windowed_history() const;

  const std::vector<detect::Detection>& detections() const noexcept { return detections_; }
  void set_detections(std::vector<detect::Detection> dets) { detections_ = std::move(dets); }
  /// Distinct detected class names, highest confidence first.
  std::vector<std::string> detected_names() const;

  void append_exchange(ChatTurn user, ChatTurn assistant);

 private:
  std::string id_;
  std::size_t window_size_;
  std::vector<ChatTurn> turns_;
  std::vector<detect::Detection> detections_;
};

/// Diagnosis question for a set of post-NMS detections.
std::string form_query(const std::vector<detect::Detection>& detections);

/// Distinct class names ordered by their best confidence, descending; ties
/// keep first-seen order.
std::vector<std::string> ranked_class_names(const std::vector<detect::Detection>& detections);

extern const char* const kSystemInstruction;
extern const char* const kNoContextNotice;

struct PromptBundle {
  std::string system_instruction;
  std::vector<store::ScoredChunk> context;  // chunks actually placed in the prompt
  std::string context_block;
  std::vector<std::string> uncovered;      // detected diseases no passage mentions
  std::vector<ChatTurn> history;           // windowed, oldest first
  std::string question;

  /// system (instruction + context block), history, then the question.
  std::vector<llm::ChatMessage> to_messages() const;
};

struct RagOptions {
  std::size_t k = store::kDefaultTopK;
  std::size_t context_char_budget = 4000;
};

/// Keeps the best-scored chunks (at most `k`) while their combined text stays
/// within `char_budget` characters, dropping the lowest-scored first. A lone
/// chunk above budget is clipped to the budget.
std::vector<store::ScoredChunk> fit_context(std::vector<store::ScoredChunk> retrieved,
                                            std::size_t k, std::size_t char_budget);

PromptBundle build_prompt(const std::string& question,
                          const std::vector<store::ScoredChunk>& retrieved, const Session& session,
                          const RagOptions& options = {});

struct SourceRef {
  std::string source_id;
  std::string chunk_id;

  friend bool operator==(const SourceRef&, const SourceRef&) = default;
};

struct Answer {
  std::string text;
  std::vector<SourceRef> sources;    // deduplicated, prompt order
  std::vector<std::string> retrieved_ids;
  std::string model_name;
  double latency_ms = 0;
  bool kb_covered = true;
};

using StoreSnapshot = std::function<std::shared_ptr<const store::VectorStore>()>;
using Clock = std::function<std::int64_t()>;  // milliseconds since epoch

/// Retrieval-then-read pipeline shared by every session.
class RagEngine {
 public:
  RagEngine(std::shared_ptr<const embed::EmbeddingProvider> embedder, StoreSnapshot store,
            std::shared_ptr<const llm::ChatModel> model, RagOptions options = {},
            Clock clock = {});

  /// Embeds `query` and returns the exact top-k chunks of the current store.
  std::vector<store::ScoredChunk> retrieve(const std::string& query, std::size_t k) const;

  /// retrieve -> build_prompt -> complete. On success the question and the
  /// reply are appended to `session`; on any failure `session` is untouched.
  /// `retrieval_query` defaults to the question.
  Answer answer(const std::string& question, Session& session,
                const std::optional<std::string>& retrieval_query = std::nullopt) const;

  /// Seeds a session with a diagnosis exchange for `detections`.
  Answer diagnose(const std::vector<detect::Detection>& detections, Session& session) const;

  /// Follow-up turn; retrieval uses the text prefixed by the session's
  /// detected disease names.
  Answer followup(const std::string& text, Session& session) const;

  const RagOptions& options() const noexcept { return options_; }

 private:
  std::shared_ptr<const embed::EmbeddingProvider> embedder_;
  StoreSnapshot store_;
  std::shared_ptr<const llm::ChatModel> model_;
  RagOptions options_;
  Clock clock_;
};

std::int64_t system_clock_ms();

}  // namespace leafrag::rag
