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

#include "leafrag/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "leafrag/error.hpp"

extern char** environ;

namespace leafrag {
namespace {

namespace fs = std::filesystem;

struct Context {
  fs::path base_dir;
};

using Setter = std::function<void(AppConfig&, const std::string&, const Context&)>;

struct Key {
  const char* section;
  const char* name;
  Setter set;
};

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
  throw Error(ErrorCode::kConfig,
              "config " + key + " = '" + value + "': expected " + expected);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) bad_value(key, value, "a number");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  std::string v = value;
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, value, "a boolean");
}

fs::path resolve(const std::string& value, const Context& ctx) {
  fs::path p(value);
  return p.is_absolute() || ctx.base_dir.empty() ? p : ctx.base_dir / p;
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

#define NUM(T, expr)                                                                 \
  [](AppConfig& c, const std::string& v, const Context&) {                           \
    (void)c;                                                                         \
    expr = parse_number<T>(#expr, v);                                                \
  }
#define STR(expr) [](AppConfig& c, const std::string& v, const Context&) { expr = v; }
#define PATH(expr) \
  [](AppConfig& c, const std::string& v, const Context& ctx) { expr = resolve(v, ctx); }
#define MS(expr)                                                                       \
  [](AppConfig& c, const std::string& v, const Context&) {                             \
    expr = std::chrono::milliseconds(parse_number<long long>(#expr, v));              \
  }

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      {"server", "host", STR(c.server.host)},
      {"server", "port", NUM(int, c.server.port)},
      {"server", "cors_origin", STR(c.server.cors_origin)},
      {"server", "max_upload_bytes", NUM(std::size_t, c.server.max_upload_bytes)},
      {"server", "session_ttl_seconds",
       [](AppConfig& c, const std::string& v, const Context&) {
         c.server.session_ttl = std::chrono::seconds(parse_number<long long>("session_ttl_seconds", v));
       }},
      {"server", "session_seed", NUM(std::uint64_t, c.server.session_seed)},
      {"server", "admin",
       [](AppConfig& c, const std::string& v, const Context&) { c.server.admin = parse_bool("admin", v); }},

      {"detector", "mode", STR(c.detector.mode)},
      {"detector", "url", STR(c.detector.url)},
      {"detector", "labels_dir", PATH(c.detector.labels_dir)},
      {"detector", "classes",
       [](AppConfig& c, const std::string& v, const Context&) {
         c.detector.classes = detect::ClassList(split_list(v));
       }},
      {"detector", "classes_file",
       [](AppConfig& c, const std::string& v, const Context& ctx) {
         std::ifstream in(resolve(v, ctx));
         if (!in) throw Error(ErrorCode::kConfig, "cannot read classes file " + v);
         std::stringstream ss;
         ss << in.rdbuf();
         c.detector.classes = detect::ClassList::parse(ss.str());
       }},
      {"detector", "conf_threshold", NUM(double, c.detector.thresholds.conf)},
      {"detector", "iou_threshold", NUM(double, c.detector.thresholds.nms_iou)},
      {"detector", "timeout_ms", MS(c.detector.timeout)},

      {"embedding", "provider", STR(c.embedding.provider)},
      {"embedding", "dim", NUM(std::size_t, c.embedding.dim)},
      {"embedding", "seed", NUM(std::uint64_t, c.embedding.seed)},
      {"embedding", "url", STR(c.embedding.url)},
      {"embedding", "model", STR(c.embedding.model)},
      {"embedding", "api_key_env", STR(c.embedding.api_key_env)},
      {"embedding", "batch_size", NUM(std::size_t, c.embedding.batch_size)},
      {"embedding", "max_in_flight", NUM(std::ptrdiff_t, c.embedding.max_in_flight)},
      {"embedding", "timeout_ms", MS(c.embedding.timeout)},

      {"llm", "provider", STR(c.llm.provider)},
      {"llm", "endpoint", STR(c.llm.completion.endpoint)},
      {"llm", "model", STR(c.llm.completion.model)},
      {"llm", "temperature", NUM(double, c.llm.completion.temperature)},
      {"llm", "max_tokens", NUM(int, c.llm.completion.max_tokens)},
      {"llm", "timeout_ms", MS(c.llm.completion.timeout)},
      {"llm", "api_key_env", STR(c.llm.completion.api_key_env)},
      {"llm", "max_retries", NUM(int, c.llm.completion.retry.max_retries)},
      {"llm", "initial_backoff_ms", MS(c.llm.completion.retry.initial_delay)},
      {"llm", "max_backoff_ms", MS(c.llm.completion.retry.max_delay)},

      {"store", "path", PATH(c.store_path)},
      {"store", "kb_dir", PATH(c.kb_dir)},

      {"chunking", "chunk_size", NUM(std::size_t, c.chunking.chunk_size)},
      {"chunking", "overlap", NUM(std::size_t, c.chunking.overlap)},

      {"rag", "k", NUM(std::size_t, c.rag.k)},
      {"rag", "context_chars", NUM(std::size_t, c.rag.context_char_budget)},
      {"rag", "window_size", NUM(std::size_t, c.window_size)},
  };
  return table;
}

#undef NUM
#undef STR
#undef PATH
#undef MS

std::string env_name(const Key& k) {
  std::string out = std::string("LEAFRAG_") + k.section + "_" + k.name;
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::toupper(c); });
  return out;
}

const Key* find_key(const std::string& section, const std::string& name) {
  for (const auto& k : keys()) {
    if (section == k.section && name == k.name) return &k;
  }
  return nullptr;
}

}  // namespace

void AppConfig::validate() const {
  if (server.port < 0 || server.port > 65535) throw Error(ErrorCode::kConfig, "server.port out of range");
  if (server.max_upload_bytes == 0) throw Error(ErrorCode::kConfig, "server.max_upload_bytes must be positive");
  if (server.session_ttl.count() <= 0) throw Error(ErrorCode::kConfig, "server.session_ttl_seconds must be positive");
  if (detector.mode != "fixture" && detector.mode != "remote") {
    throw Error(ErrorCode::kConfig, "detector.mode must be 'fixture' or 'remote'");
  }
  if (detector.mode == "remote" && detector.url.empty()) {
    throw Error(ErrorCode::kConfig, "detector.url is required in remote mode");
  }
  for (double t : {detector.thresholds.conf, detector.thresholds.nms_iou}) {
    if (!(t >= 0.0 && t <= 1.0)) throw Error(ErrorCode::kConfig, "detector thresholds must be in [0,1]");
  }
  if (embedding.provider != "hashing" && embedding.provider != "remote") {
    throw Error(ErrorCode::kConfig, "embedding.provider must be 'hashing' or 'remote'");
  }
  if (embedding.dim == 0) throw Error(ErrorCode::kConfig, "embedding.dim must be positive");
  if (embedding.provider == "remote" && embedding.url.empty()) {
    throw Error(ErrorCode::kConfig, "embedding.url is required for the remote provider");
  }
  if (llm.provider != "http" && llm.provider != "echo") {
    throw Error(ErrorCode::kConfig, "llm.provider must be 'http' or 'echo'");
  }
  llm.completion.validate();
  chunking.validate();
  if (rag.k == 0) throw Error(ErrorCode::kConfig, "rag.k must be at least 1");
  if (window_size == 0) throw Error(ErrorCode::kConfig, "rag.window_size must be at least 1");
}

AppConfig parse_config(const std::string& ini_text, const fs::path& base_dir,
                       const std::map<std::string, std::string>& env) {
  AppConfig config;
  const Context ctx{base_dir};

  boost::property_tree::ptree tree;
  std::istringstream in(ini_text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(ErrorCode::kConfig, std::string("config: ") + e.what());
  }
  for (const auto& [section, children] : tree) {
    if (children.empty()) {
      throw Error(ErrorCode::kConfig, "config: key '" + section + "' outside a [section]");
    }
    for (const auto& [name, value] : children) {
      const Key* key = find_key(section, name);
      if (!key) throw Error(ErrorCode::kConfig, "config: unknown key " + section + "." + name);
      key->set(config, value.get_value<std::string>(), ctx);
    }
  }
  for (const auto& k : keys()) {
    if (auto it = env.find(env_name(k)); it != env.end()) k.set(config, it->second, Context{});
  }
  config.validate();
  return config;
}

AppConfig load_config(const std::optional<fs::path>& path) {
  if (!path) return parse_config("", {}, leafrag_environment());
  std::ifstream in(*path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kConfig, "cannot read config file " + path->string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path->parent_path(), leafrag_environment());
}

std::map<std::string, std::string> leafrag_environment() {
  std::map<std::string, std::string> out;
  for (char** e = environ; e && *e; ++e) {
    std::string_view entry(*e);
    if (!entry.starts_with("LEAFRAG_")) continue;
    const auto eq = entry.find('=');
    if (eq == std::string_view::npos) continue;
    out.emplace(std::string(entry.substr(0, eq)), std::string(entry.substr(eq + 1)));
  }
  return out;
}

std::shared_ptr<const detect::Detector> make_detector(const AppConfig& config) {
  const auto& d = config.detector;
  if (d.mode == "remote") {
    net::CallOptions call;
    call.timeout = d.timeout;
    return std::make_shared<detect::RemoteDetector>(d.url, d.classes, d.thresholds, call);
  }
  return std::make_shared<detect::FixtureDetector>(d.labels_dir, d.classes, d.thresholds);
}

std::shared_ptr<const embed::EmbeddingProvider> make_embedder(const AppConfig& config) {
  const auto& e = config.embedding;
  if (e.provider == "remote") {
    embed::RemoteEmbedderConfig rc;
    rc.url = e.url;
    rc.model = e.model;
    rc.dim = e.dim;
    rc.api_key_env = e.api_key_env;
    rc.batch_size = e.batch_size;
    rc.max_in_flight = e.max_in_flight;
    rc.call.timeout = e.timeout;
    return std::make_shared<embed::RemoteEmbedder>(rc);
  }
  return std::make_shared<embed::HashingEmbedder>(e.dim, e.seed);
}

std::shared_ptr<const llm::ChatModel> make_chat_model(const AppConfig& config) {
  if (config.llm.provider == "echo") return std::make_shared<llm::EchoModel>();
  return std::make_shared<llm::HttpChatClient>(config.llm.completion);
}

}  // namespace leafrag
