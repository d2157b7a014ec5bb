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

#include "stubs.hpp"

#include <json.hpp>

#include <atomic>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "leafrag/embed.hpp"
#include "leafrag/llmclient.hpp"

namespace leafrag::testing {

StubServer::StubServer() = default;

StubServer::~StubServer() {
  server_.stop();
  if (thread_.joinable()) thread_.join();
}

void StubServer::start() {
  port_ = server_.bind_to_any_port("127.0.0.1");
  if (port_ <= 0) throw std::runtime_error("stub server could not bind");
  thread_ = std::thread([this] { server_.listen_after_bind(); });
  server_.wait_until_ready();
}

std::string StubServer::url(const std::string& path) const {
  return "http://127.0.0.1:" + std::to_string(port_) + path;
}

std::vector<std::string> StubServer::bodies() const {
  std::lock_guard lock(mu_);
  return bodies_;
}

std::vector<httplib::Headers> StubServer::headers() const {
  std::lock_guard lock(mu_);
  return headers_;
}

std::size_t StubServer::hits() const {
  std::lock_guard lock(mu_);
  return bodies_.size();
}

void StubServer::script_statuses(std::vector<int> statuses) {
  std::lock_guard lock(mu_);
  script_.assign(statuses.begin(), statuses.end());
}

int StubServer::record(const httplib::Request& req) {
  std::lock_guard lock(mu_);
  bodies_.push_back(req.body);
  headers_.push_back(req.headers);
  if (script_.empty()) return 0;
  const int status = script_.front();
  script_.pop_front();
  return status;
}

namespace {

void scripted_error(httplib::Response& res, int status) {
  res.status = status;
  res.set_content(R"({"error":{"message":"scripted failure"}})", "application/json");
}

}  // namespace

ChatStub::ChatStub() {
  server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
    if (const int status = record(req)) return scripted_error(res, status);
    const auto body = nlohmann::json::parse(req.body);
    std::vector<llm::ChatMessage> messages;
    for (const auto& m : body.at("messages")) {
      const auto role = m.at("role").get<std::string>();
      messages.push_back({role == "system" ? llm::Role::kSystem
                          : role == "user" ? llm::Role::kUser
                                           : llm::Role::kAssistant,
                          m.at("content").get<std::string>()});
    }
    nlohmann::ordered_json out;
    out["id"] = "stub";
    out["model"] = body.at("model");
    out["choices"] = {{{"index", 0},
                       {"message", {{"role", "assistant"}, {"content", llm::echo_reply(messages)}}},
                       {"finish_reason", "stop"}}};
    out["usage"] = {{"prompt_tokens", 1}, {"completion_tokens", 1}};
    res.set_content(out.dump(), "application/json");
  });
  start();
}

EmbeddingStub::EmbeddingStub(std::size_t dim) {
  server_.Post("/v1/embeddings", [this, dim](const httplib::Request& req, httplib::Response& res) {
    if (const int status = record(req)) return scripted_error(res, status);
    const auto body = nlohmann::json::parse(req.body);
    const embed::HashingEmbedder hashing(dim);
    nlohmann::json out;
    out["object"] = "list";
    out["data"] = nlohmann::json::array();
    int index = 0;
    for (const auto& text : body.at("input")) {
      out["data"].push_back({{"object", "embedding"},
                             {"index", index++},
                             {"embedding", hashing.embed_one(text.get<std::string>()).values}});
    }
    res.set_content(out.dump(), "application/json");
  });
  start();
}

DetectorStub::DetectorStub(std::string reply) : reply_(std::move(reply)) {
  server_.Post("/detect", [this](const httplib::Request& req, httplib::Response& res) {
    if (req.has_file("image")) {
      std::lock_guard lock(files_mu_);
      filenames_.push_back(req.get_file_value("image").filename);
    }
    if (const int status = record(req)) return scripted_error(res, status);
    res.set_content(reply_, "application/json");
  });
  start();
}

std::vector<std::string> DetectorStub::image_filenames() const {
  std::lock_guard lock(files_mu_);
  return filenames_;
}

TempDir::TempDir() {
  static std::atomic<unsigned> counter{0};
  std::random_device rd;
  path_ = std::filesystem::temp_directory_path() /
          ("leafrag-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

std::filesystem::path source_dir() { return LEAFRAG_SOURCE_DIR; }

}  // namespace leafrag::testing
