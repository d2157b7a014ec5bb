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

#include "leafrag/service.hpp"

#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <cstdio>
#include <mutex>
#include <unordered_map>

#include "leafrag/error.hpp"
#include "leafrag/simd/dot.hpp"
#include "leafrag/vectorstore.hpp"

namespace leafrag {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

struct HttpError {
  int status;
  std::string code;
  std::string message;
  std::string cause;  // upstream component for 502s
};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void send_json(httplib::Response& res, int status, const ordered_json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, const HttpError& err) {
  ordered_json body;
  body["error"]["code"] = err.code;
  body["error"]["message"] = err.message;
  if (!err.cause.empty()) body["error"]["cause"] = err.cause;
  send_json(res, err.status, body);
}

// Upstream failures become 502 with the failing component named.
HttpError upstream(const Error& e, std::string cause) {
  if (!e.component().empty()) cause = e.component();
  switch (e.code()) {
    case ErrorCode::kValidation: return {400, "invalid_request", e.what(), ""};
    case ErrorCode::kNotFound: return {404, "not_found", e.what(), cause};
    default: return {502, "upstream_error", e.what(), cause};
  }
}

ordered_json detections_json(const std::vector<detect::Detection>& dets) {
  ordered_json arr = ordered_json::array();
  for (const auto& d : dets) {
    ordered_json j;
    j["class_id"] = d.class_id;
    j["class_name"] = d.class_name;
    j["confidence"] = d.confidence;
    j["box"] = {{"x1", d.bbox.x1}, {"y1", d.bbox.y1}, {"x2", d.bbox.x2}, {"y2", d.bbox.y2}};
    arr.push_back(std::move(j));
  }
  return arr;
}

ordered_json sources_json(const std::vector<rag::SourceRef>& sources) {
  ordered_json arr = ordered_json::array();
  for (const auto& s : sources) arr.push_back({{"source_id", s.source_id}, {"chunk_id", s.chunk_id}});
  return arr;
}

struct SessionSlot {
  explicit SessionSlot(rag::Session s) : session(std::move(s)) {}
  rag::Session session;
  std::mutex turn;
  std::int64_t last_access_ms = 0;
};

}  // namespace

ServiceDeps make_service_deps(const AppConfig& config) {
  return ServiceDeps{make_detector(config), make_embedder(config), make_chat_model(config), {}};
}

struct Service::Impl {
  AppConfig config;
  ServiceDeps deps;
  httplib::Server server;

  mutable std::mutex store_mu;
  std::shared_ptr<const store::VectorStore> store;
  std::mutex ingest_mu;

  std::mutex sessions_mu;
  std::unordered_map<std::string, std::shared_ptr<SessionSlot>> sessions;
  std::uint64_t session_counter = 0;

  std::unique_ptr<rag::RagEngine> engine;

  Impl(AppConfig cfg, ServiceDeps d) : config(std::move(cfg)), deps(std::move(d)) {
    config.validate();
    if (!deps.detector || !deps.embedder || !deps.model) {
      throw Error(ErrorCode::kConfig, "service dependencies are incomplete");
    }
    if (!deps.clock) deps.clock = rag::system_clock_ms;
    if (deps.embedder->dim() != config.embedding.dim) {
      throw Error(ErrorCode::kConfig, "embedder dimension " + std::to_string(deps.embedder->dim()) +
                                          " differs from embedding.dim " +
                                          std::to_string(config.embedding.dim));
    }
    std::error_code ec;
    if (std::filesystem::exists(config.store_path, ec)) {
      auto loaded = store::VectorStore::load(config.store_path);
      if (loaded.dim() != deps.embedder->dim()) {
        throw Error(ErrorCode::kConfig, "store " + config.store_path.string() + " has dimension " +
                                            std::to_string(loaded.dim()) + ", embedder produces " +
                                            std::to_string(deps.embedder->dim()));
      }
      store = std::make_shared<const store::VectorStore>(std::move(loaded));
    } else {
      store = std::make_shared<const store::VectorStore>(deps.embedder->dim());
    }
    engine = std::make_unique<rag::RagEngine>(
        deps.embedder, [this] { return snapshot(); }, deps.model, config.rag, deps.clock);
    routes();
  }

  std::shared_ptr<const store::VectorStore> snapshot() const {
    std::lock_guard lock(store_mu);
    return store;
  }

  std::string new_session_id() {
    const std::uint64_t n = session_counter++;
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(splitmix64(config.server.session_seed ^ splitmix64(n))));
    return buf;
  }

  // Drops expired sessions; caller holds sessions_mu.
  void expire_locked(std::int64_t now) {
    const std::int64_t ttl_ms = config.server.session_ttl.count() * 1000;
    std::erase_if(sessions, [&](const auto& kv) { return now - kv.second->last_access_ms > ttl_ms; });
  }

  std::shared_ptr<SessionSlot> find_session(const std::string& id) {
    std::lock_guard lock(sessions_mu);
    const std::int64_t now = deps.clock();
    expire_locked(now);
    auto it = sessions.find(id);
    if (it == sessions.end()) return nullptr;
    it->second->last_access_ms = now;
    return it->second;
  }

  void routes() {
    server.set_payload_max_length(config.server.max_upload_bytes * 2 + (1 << 20));
    server.set_post_routing_handler([this](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Origin", config.server.cors_origin);
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    });
    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (!res.body.empty()) return;
      const std::string code = res.status == 404 ? "not_found"
                               : res.status == 413 ? "payload_too_large"
                                                   : "http_" + std::to_string(res.status);
      send_error(res, {res.status, code, httplib::status_message(res.status), ""});
    });
    server.set_exception_handler(
        [](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
          std::string what = "internal error";
          try {
            if (ep) std::rethrow_exception(ep);
          } catch (const std::exception& e) {
            what = e.what();
          } catch (...) {
          }
          send_error(res, {500, "internal_error", what, ""});
        });
    server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
      res.status = 204;
    });

    server.Post("/api/diagnose", [this](const httplib::Request& req, httplib::Response& res) {
      diagnose(req, res);
    });
    server.Post("/api/chat", [this](const httplib::Request& req, httplib::Response& res) {
      chat(req, res);
    });
    server.Post("/api/ingest", [this](const httplib::Request& req, httplib::Response& res) {
      ingest(req, res);
    });
    server.Get(R"(/api/sessions/([^/]+)/history)",
               [this](const httplib::Request& req, httplib::Response& res) { history(req, res); });
    server.Get("/api/health", [this](const httplib::Request&, httplib::Response& res) {
      ordered_json body;
      body["status"] = "ok";
      body["store_size"] = snapshot()->size();
      body["detector_mode"] = deps.detector->mode();
      body["embedding_provider"] = deps.embedder->kind();
      body["simd"] = simd::isa_name(simd::active_isa());
      send_json(res, 200, body);
    });
  }

  void diagnose(const httplib::Request& req, httplib::Response& res) {
    if (!req.is_multipart_form_data()) {
      return send_error(res, {400, "invalid_request", "expected multipart/form-data with an 'image' file", ""});
    }
    const char* field = req.has_file("image") ? "image" : (req.has_file("file") ? "file" : nullptr);
    if (!field) return send_error(res, {400, "invalid_request", "missing 'image' file field", ""});
    const httplib::MultipartFormData file = req.get_file_value(field);
    if (file.content.size() > config.server.max_upload_bytes) {
      return send_error(res, {400, "payload_too_large",
                              "image exceeds " + std::to_string(config.server.max_upload_bytes) + " bytes", ""});
    }
    if (!probe_image(file.content)) {
      return send_error(res, {400, "invalid_image", "upload is not a PNG or JPEG image", ""});
    }
    if (snapshot()->empty()) {
      return send_error(res, {503, "store_empty", "knowledge base not ingested yet", ""});
    }

    detect::DetectorResult detected;
    try {
      detected = deps.detector->detect(file.content, file.filename);
    } catch (const Error& e) {
      return send_error(res, upstream(e, "detector"));
    }

    rag::Session session("", config.window_size);
    rag::Answer answer;
    const std::string query = rag::form_query(detected.detections);
    try {
      answer = engine->diagnose(detected.detections, session);
    } catch (const Error& e) {
      return send_error(res, upstream(e, "llm"));
    }

    std::string id;
    {
      std::lock_guard lock(sessions_mu);
      const std::int64_t now = deps.clock();
      expire_locked(now);
      id = new_session_id();
      rag::Session named(id, config.window_size);
      named.set_detections(session.detections());
      const auto& turns = session.turns();
      named.append_exchange(turns[0], turns[1]);
      auto slot = std::make_shared<SessionSlot>(std::move(named));
      slot->last_access_ms = now;
      sessions.emplace(id, std::move(slot));
    }

    ordered_json body;
    body["session_id"] = id;
    body["image"] = {{"width", detected.image.width}, {"height", detected.image.height}};
    body["detections"] = detections_json(detected.detections);
    body["query"] = query;
    body["answer"] = answer.text;
    body["sources"] = sources_json(answer.sources);
    body["kb_covered"] = answer.kb_covered;
    body["model"] = answer.model_name;
    res.set_header("X-Latency-Ms", std::to_string(static_cast<long long>(answer.latency_ms)));
    send_json(res, 200, body);
  }

  void chat(const httplib::Request& req, httplib::Response& res) {
    json in = json::parse(req.body, nullptr, false);
    if (in.is_discarded() || !in.is_object() || !in.contains("session_id") ||
        !in["session_id"].is_string() || !in.contains("message") || !in["message"].is_string()) {
      return send_error(res, {400, "invalid_request", "expected {\"session_id\": str, \"message\": str}", ""});
    }
    const std::string message = in["message"].get<std::string>();
    if (message.find_first_not_of(" \t\r\n") == std::string::npos) {
      return send_error(res, {400, "invalid_request", "message is empty", ""});
    }
    auto slot = find_session(in["session_id"].get<std::string>());
    if (!slot) return send_error(res, {404, "session_not_found", "unknown or expired session", ""});

    std::unique_lock turn(slot->turn, std::try_to_lock);
    if (!turn.owns_lock()) {
      return send_error(res, {409, "session_busy", "another message for this session is in flight", ""});
    }
    rag::Answer answer;
    try {
      answer = engine->followup(message, slot->session);
    } catch (const Error& e) {
      return send_error(res, upstream(e, "llm"));
    }
    ordered_json body;
    body["session_id"] = slot->session.id();
    body["answer"] = answer.text;
    body["sources"] = sources_json(answer.sources);
    body["kb_covered"] = answer.kb_covered;
    res.set_header("X-Latency-Ms", std::to_string(static_cast<long long>(answer.latency_ms)));
    send_json(res, 200, body);
  }

  void ingest(const httplib::Request& req, httplib::Response& res) {
    if (!config.server.admin) {
      return send_error(res, {403, "forbidden", "ingestion is disabled (server.admin = false)", ""});
    }
    std::filesystem::path dir = config.kb_dir;
    std::string mode = "rebuild";
    if (!req.body.empty()) {
      json in = json::parse(req.body, nullptr, false);
      if (in.is_discarded() || !in.is_object()) {
        return send_error(res, {400, "invalid_request", "body must be a JSON object", ""});
      }
      if (in.contains("path")) {
        if (!in["path"].is_string()) return send_error(res, {400, "invalid_request", "'path' must be a string", ""});
        dir = in["path"].get<std::string>();
      }
      if (in.contains("mode")) {
        mode = in["mode"].is_string() ? in["mode"].get<std::string>() : "";
        if (mode != "rebuild" && mode != "extend") {
          return send_error(res, {400, "invalid_request", "'mode' must be 'rebuild' or 'extend'", ""});
        }
      }
    }

    std::unique_lock lock(ingest_mu, std::try_to_lock);
    if (!lock.owns_lock()) return send_error(res, {423, "ingest_running", "an ingestion is already running", ""});

    std::vector<ingest::Document> docs;
    std::vector<ingest::Chunk> chunks;
    try {
      docs = ingest::load_documents(dir);
      for (const auto& d : docs) {
        auto c = ingest::chunk_document(d, config.chunking);
        chunks.insert(chunks.end(), c.begin(), c.end());
      }
    } catch (const Error& e) {
      return send_error(res, {400, "invalid_kb", e.what(), ""});
    }

    std::vector<embed::EmbeddingVector> vectors;
    try {
      std::vector<std::string> texts;
      texts.reserve(chunks.size());
      for (const auto& c : chunks) texts.push_back(c.text);
      vectors = deps.embedder->embed_texts(texts);
    } catch (const Error& e) {
      return send_error(res, upstream(e, "embedding"));
    }
    if (vectors.size() != chunks.size()) {
      return send_error(res, {502, "upstream_error", "embedder returned a wrong number of vectors", "embedding"});
    }

    auto next = mode == "extend" ? std::make_shared<store::VectorStore>(*snapshot())
                                 : std::make_shared<store::VectorStore>(deps.embedder->dim());
    std::vector<store::StoreEntry> entries;
    entries.reserve(chunks.size());
    for (std::size_t i = 0; i < chunks.size(); ++i) {
      entries.push_back(store::StoreEntry{std::move(chunks[i]), std::move(vectors[i]), 0});
    }
    const std::size_t added = next->add(std::move(entries));
    try {
      next->persist(config.store_path);
    } catch (const Error& e) {
      return send_error(res, {500, "store_write_failed", e.what(), ""});
    }
    {
      std::lock_guard guard(store_mu);
      store = next;
    }
    ordered_json body;
    body["documents"] = docs.size();
    body["chunks_added"] = added;
    body["store_size"] = next->size();
    send_json(res, 200, body);
  }

  void history(const httplib::Request& req, httplib::Response& res) {
    auto slot = find_session(req.matches[1]);
    if (!slot) return send_error(res, {404, "session_not_found", "unknown or expired session", ""});
    std::lock_guard turn(slot->turn);
    ordered_json body;
    body["session_id"] = slot->session.id();
    body["window_size"] = slot->session.window_size();
    body["detections"] = detections_json(slot->session.detections());
    body["turns"] = ordered_json::array();
    for (const auto& t : slot->session.turns()) {
      ordered_json j;
      j["role"] = llm::role_name(t.role);
      j["content"] = t.content;
      j["sources"] = t.sources;
      j["timestamp_ms"] = t.timestamp_ms;
      body["turns"].push_back(std::move(j));
    }
    send_json(res, 200, body);
  }
};

Service::Service(AppConfig config, ServiceDeps deps)
    : impl_(std::make_unique<Impl>(std::move(config), std::move(deps))) {}

Service::~Service() { stop(); }

int Service::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw Error(ErrorCode::kIo, "cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw Error(ErrorCode::kIo, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void Service::listen() { impl_->server.listen_after_bind(); }

void Service::wait_until_ready() const { impl_->server.wait_until_ready(); }

void Service::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

std::size_t Service::store_size() const { return impl_->snapshot()->size(); }

}  // namespace leafrag
