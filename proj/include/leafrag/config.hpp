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
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "leafrag/detect.hpp"
#include "leafrag/detector.hpp"
#include "leafrag/embed.hpp"
#include "leafrag/ingest.hpp"
#include "leafrag/llmclient.hpp"
#include "leafrag/ragchat.hpp"

namespace leafrag {

struct ServerConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string cors_origin = "*";
  std::size_t max_upload_bytes = 10 * 1024 * 1024;
  std::chrono::seconds session_ttl{3600};
  std::uint64_t session_seed = 0;
  bool admin = true;  // enables POST /api/ingest
};

struct DetectorConfig {
  std::string mode = "fixture";  // fixture | remote
  std::string url;
  std::filesystem::path labels_dir = "fixtures/labels";
  detect::ClassList classes;
  detect::Thresholds thresholds;
  std::chrono::milliseconds timeout{30000};
};

struct EmbeddingConfig {
  std::string provider = "hashing";  // hashing | remote
  std::size_t dim = embed::kDefaultDim;
  std::uint64_t seed = 0x5eed;
  std::string url;
  std::string model = "sentence-transformers/all-MiniLM-L6-v2";
  std::string api_key_env = "EMBEDDING_API_KEY";
  std::size_t batch_size = 64;
  std::ptrdiff_t max_in_flight = 4;
  std::chrono::milliseconds timeout{30000};
};

struct LlmConfig {
  std::string provider = "http";  // http | echo
  llm::CompletionConfig completion;
};

struct AppConfig {
  ServerConfig server;
  DetectorConfig detector;
  EmbeddingConfig embedding;
  LlmConfig llm;
  std::filesystem::path store_path = "store.jsonl";
  std::filesystem::path kb_dir = "kb";
  ingest::ChunkSpec chunking;
  rag::RagOptions rag;
  std::size_t window_size = rag::kDefaultWindowSize;

  /// Throws Error{kConfig} describing the first invalid setting.
  void validate() const;
};

/// Reads an INI file (`[section]` + `key = value`), then applies environment
/// overrides named LEAFRAG_<SECTION>_<KEY> (e.g. LEAFRAG_LLM_MODEL). Unknown
/// sections or keys are errors. With no path only defaults and the
/// environment are used. Relative paths resolve against the file's directory.
AppConfig load_config(const std::optional<std::filesystem::path>& path);

/// Same, from in-memory INI text; `base_dir` anchors relative paths.
AppConfig parse_config(const std::string& ini_text, const std::filesystem::path& base_dir,
                       const std::map<std::string, std::string>& env);

/// Current process environment as a map, restricted to LEAFRAG_* names.
std::map<std::string, std::string> leafrag_environment();

std::shared_ptr<const detect::Detector> make_detector(const AppConfig& config);
std::shared_ptr<const embed::EmbeddingProvider> make_embedder(const AppConfig& config);
std::shared_ptr<const llm::ChatModel> make_chat_model(const AppConfig& config);

}  // namespace leafrag
