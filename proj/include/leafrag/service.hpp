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

#include <memory>
#include <string>

#include "leafrag/config.hpp"
#include "leafrag/detector.hpp"
#include "leafrag/embed.hpp"
#include "leafrag/llmclient.hpp"
#include "leafrag/ragchat.hpp"

namespace leafrag {

/// Collaborators injected into the service; production code builds them from
/// AppConfig via make_detector/make_embedder/make_chat_model.
struct ServiceDeps {
  std::shared_ptr<const detect::Detector> detector;
  std::shared_ptr<const embed::EmbeddingProvider> embedder;
  std::shared_ptr<const llm::ChatModel> model;
  rag::Clock clock;  // defaults to the system clock; drives session TTL and turn timestamps
};

ServiceDeps make_service_deps(const AppConfig& config);

/// HTTP/1.1 JSON API:
///   POST /api/diagnose               multipart field `image`
///   POST /api/chat                   {"session_id","message"}
///   POST /api/ingest                 {"path"?, "mode"?: "rebuild"|"extend"}
///   GET  /api/sessions/{id}/history
///   GET  /api/health
/// Non-2xx responses carry {"error":{"code","message"}}.
///
/// The vector store is an immutable snapshot swapped atomically by ingestion,
/// so searches never wait for an ingest. Turns within one session are
/// serialized: a second concurrent message to the same session gets 409.
class Service {
 public:
  /// Loads the store file named by the config if it exists. Throws
  /// Error{kConfig} when its dimension disagrees with the embedder.
  Service(AppConfig config, ServiceDeps deps);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds to `host:port` (port 0 picks a free port) and returns the port.
  int bind(const std::string& host, int port);
  /// Serves until stop(); call after bind().
  void listen();
  /// Blocks until a concurrent listen() accepts connections.
  void wait_until_ready() const;
  void stop();

  std::size_t store_size() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace leafrag
