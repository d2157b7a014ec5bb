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

#include "leafrag/ragchat.hpp"

#include <algorithm>
#include <chrono>
#include <set>

#include "leafrag/error.hpp"
#include "leafrag/ingest.hpp"

namespace leafrag::rag {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>((c >= 'A' && c <= 'Z') ? c - 'A' + 'a' : c);
  });
  return out;
}

// Longest prefix of `text` holding at most `chars` code points.
std::string clip_chars(const std::string& text, std::size_t chars) {
  std::size_t seen = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if ((static_cast<unsigned char>(text[i]) & 0xc0) != 0x80) {
      if (seen == chars) return text.substr(0, i);
      ++seen;
    }
  }
  return text;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace

const char* const kSystemInstruction =
    "You are an agricultural assistant helping farmers understand and treat coffee leaf "
    "diseases. Answer only from the knowledge-base passages provided below. If the passages "
    "do not contain the answer, say that the question is not covered by the knowledge base "
    "instead of guessing. Prefer practical, low-pesticide remedies and cite the passages you "
    "used by their [source: ...] tags.";

const char* const kNoContextNotice =
    "No knowledge-base passages were found for this question. Tell the user that it is not "
    "covered by the knowledge base.";

std::int64_t system_clock_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

Session::Session(std::string id, std::size_t window_size)
    : id_(std::move(id)), window_size_(window_size) {}

std::vector<ChatTurn> Session::windowed_history() const {
  const std::size_t keep = std::min(turns_.size(), 2 * window_size_);
  return std::vector<ChatTurn>(turns_.end() - static_cast<std::ptrdiff_t>(keep), turns_.end());
}

std::vector<std::string> Session::detected_names() const { return ranked_class_names(detections_); }

void Session::append_exchange(ChatTurn user, ChatTurn assistant) {
  user.role = llm::Role::kUser;
  user.sources.clear();
  assistant.role = llm::Role::kAssistant;
  turns_.push_back(std::move(user));
  turns_.push_back(std::move(assistant));
}

std::vector<std::string> ranked_class_names(const std::vector<detect::Detection>& detections) {
  std::vector<std::pair<std::string, double>> best;
  for (const auto& d : detections) {
    auto it = std::find_if(best.begin(), best.end(),
                           [&](const auto& b) { return b.first == d.class_name; });
    if (it == best.end()) {
      best.emplace_back(d.class_name, d.confidence);
    } else {
      it->second = std::max(it->second, d.confidence);
    }
  }
  std::stable_sort(best.begin(), best.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> names;
  names.reserve(best.size());
  for (auto& b : best) names.push_back(std::move(b.first));
  return names;
}

std::string form_query(const std::vector<detect::Detection>& detections) {
  if (detections.empty()) {
    return "No disease detected. Provide general coffee leaf care guidance.";
  }
  return "Detected disease(s): " + join(ranked_class_names(detections), ", ") +
         ". Describe the disease, its causes, symptoms, and recommended remedies.";
}

std::vector<store::ScoredChunk> fit_context(std::vector<store::ScoredChunk> retrieved,
                                            std::size_t k, std::size_t char_budget) {
  if (retrieved.size() > k) retrieved.resize(k);
  std::vector<store::ScoredChunk> out;
  std::size_t used = 0;
  for (auto& chunk : retrieved) {
    const std::size_t chars = ingest::char_count(chunk.chunk.text);
    if (used + chars > char_budget) {
      if (out.empty() && char_budget > 0) {
        chunk.chunk.text = clip_chars(chunk.chunk.text, char_budget);
        out.push_back(std::move(chunk));
      }
      break;
    }
    used += chars;
    out.push_back(std::move(chunk));
  }
  return out;
}

PromptBundle build_prompt(const std::string& question,
                          const std::vector<store::ScoredChunk>& retrieved, const Session& session,
                          const RagOptions& options) {
  PromptBundle bundle;
  bundle.system_instruction = kSystemInstruction;
  bundle.context = fit_context(retrieved, options.k, options.context_char_budget);
  bundle.history = session.windowed_history();
  bundle.question = question;

  if (bundle.context.empty()) {
    bundle.context_block = kNoContextNotice;
  } else {
    bundle.context_block = "Knowledge-base passages:";
    for (const auto& c : bundle.context) {
      bundle.context_block += "\n[source: " + c.chunk.chunk_id + "] " + c.chunk.text;
    }
  }

  for (const auto& name : session.detected_names()) {
    const std::string needle = lower(name);
    const bool mentioned = std::any_of(bundle.context.begin(), bundle.context.end(), [&](const auto& c) {
      return lower(c.chunk.text).find(needle) != std::string::npos ||
             lower(c.chunk.source_id).find(needle) != std::string::npos;
    });
    if (!mentioned) bundle.uncovered.push_back(name);
  }
  if (!bundle.uncovered.empty() && !bundle.context.empty()) {
    bundle.context_block += "\nNote: no passage covers " + join(bundle.uncovered, ", ") +
                            ". Say that it is not covered by the knowledge base.";
  }
  return bundle;
}

std::vector<llm::ChatMessage> PromptBundle::to_messages() const {
  std::vector<llm::ChatMessage> messages;
  messages.push_back({llm::Role::kSystem, system_instruction + "\n\n" + context_block});
  for (const auto& turn : history) messages.push_back({turn.role, turn.content});
  messages.push_back({llm::Role::kUser, question});
  return messages;
}

RagEngine::RagEngine(std::shared_ptr<const embed::EmbeddingProvider> embedder, StoreSnapshot store,
                     std::shared_ptr<const llm::ChatModel> model, RagOptions options, Clock clock)
    : embedder_(std::move(embedder)),
      store_(std::move(store)),
      model_(std::move(model)),
      options_(options),
      clock_(clock ? std::move(clock) : Clock(system_clock_ms)) {
  if (!embedder_ || !store_ || !model_) {
    throw Error(ErrorCode::kConfig, "RAG engine needs an embedder, a store and a model");
  }
  if (options_.k == 0) throw Error(ErrorCode::kConfig, "retrieval k must be at least 1");
}

std::vector<store::ScoredChunk> RagEngine::retrieve(const std::string& query, std::size_t k) const {
  const auto snapshot = store_();
  if (!snapshot || snapshot->empty()) return {};
  std::vector<embed::EmbeddingVector> vectors;
  try {
    vectors = embedder_->embed_texts({query});
  } catch (const Error& e) {
    throw Error(e.code(), e.what(), "embedding");
  }
  if (vectors.size() != 1) throw Error(ErrorCode::kProtocol, "embedder returned no vector", "embedding");
  return snapshot->search(vectors.front(), k);
}

Answer RagEngine::answer(const std::string& question, Session& session,
                         const std::optional<std::string>& retrieval_query) const {
  if (question.empty()) throw Error(ErrorCode::kValidation, "question is empty");
  const auto started = std::chrono::steady_clock::now();
  const auto retrieved = retrieve(retrieval_query.value_or(question), options_.k);
  const PromptBundle bundle = build_prompt(question, retrieved, session, options_);
  llm::Completion completion;
  try {
    completion = model_->complete(bundle.to_messages());
  } catch (const Error& e) {
    throw Error(e.code(), e.what(), "llm");
  }

  Answer out;
  out.text = completion.text;
  out.model_name = completion.model.empty() ? model_->model_name() : completion.model;
  for (const auto& r : retrieved) out.retrieved_ids.push_back(r.chunk.chunk_id);
  std::set<std::string> seen;
  for (const auto& c : bundle.context) {
    if (seen.insert(c.chunk.chunk_id).second) {
      out.sources.push_back(SourceRef{c.chunk.source_id, c.chunk.chunk_id});
    }
  }
  out.kb_covered = !bundle.context.empty() && bundle.uncovered.empty();
  out.latency_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();

  const std::int64_t now = clock_();
  ChatTurn user{llm::Role::kUser, question, {}, now};
  ChatTurn assistant{llm::Role::kAssistant, out.text, {}, now};
  for (const auto& s : out.sources) assistant.sources.push_back(s.chunk_id);
  session.append_exchange(std::move(user), std::move(assistant));
  return out;
}

Answer RagEngine::diagnose(const std::vector<detect::Detection>& detections,
                           Session& session) const {
  const auto previous = session.detections();
  session.set_detections(detections);
  try {
    return answer(form_query(detections), session);
  } catch (...) {
    session.set_detections(previous);
    throw;
  }
}

Answer RagEngine::followup(const std::string& text, Session& session) const {
  const auto names = session.detected_names();
  std::optional<std::string> query;
  if (!names.empty()) query = join(names, ", ") + ": " + text;
  return answer(text, session, query);
}

}  // namespace leafrag::rag
