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

// leafrag command-line front end: serve the HTTP API, ingest a knowledge base,
// query a store, run the detector, ask one-off questions, evaluate detections.

#include <CLI11.hpp>
#include <json.hpp>

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "leafrag/config.hpp"
#include "leafrag/error.hpp"
#include "leafrag/eval.hpp"
#include "leafrag/image.hpp"
#include "leafrag/ingest.hpp"
#include "leafrag/service.hpp"
#include "leafrag/vectorstore.hpp"

namespace fs = std::filesystem;
using namespace leafrag;

namespace {

Service* g_service = nullptr;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

store::VectorStore build_store(const AppConfig& config, const fs::path& kb_dir,
                               std::size_t* documents) {
  const auto docs = ingest::load_documents(kb_dir);
  std::vector<ingest::Chunk> chunks;
  for (const auto& d : docs) {
    auto c = ingest::chunk_document(d, config.chunking);
    chunks.insert(chunks.end(), c.begin(), c.end());
  }
  std::vector<std::string> texts;
  texts.reserve(chunks.size());
  for (const auto& c : chunks) texts.push_back(c.text);
  const auto embedder = make_embedder(config);
  auto vectors = embedder->embed_texts(texts);
  store::VectorStore store(embedder->dim());
  std::vector<store::StoreEntry> entries;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    entries.push_back({std::move(chunks[i]), std::move(vectors[i]), 0});
  }
  store.add(std::move(entries));
  if (documents) *documents = docs.size();
  return store;
}

int run_serve(const AppConfig& config, const std::string& host, int port) {
  Service service(config, make_service_deps(config));
  const int bound = service.bind(host, port);
  std::printf("leafrag listening on http://%s:%d (store: %zu chunks)\n", host.c_str(), bound,
              service.store_size());
  std::fflush(stdout);
  g_service = &service;
  std::signal(SIGINT, [](int) {
    if (g_service) g_service->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_service) g_service->stop();
  });
  service.listen();
  g_service = nullptr;
  return 0;
}

int run_ingest(AppConfig config, const fs::path& dir, std::optional<std::size_t> chunk_size,
               std::optional<std::size_t> overlap, std::optional<fs::path> out) {
  if (chunk_size) config.chunking.chunk_size = *chunk_size;
  if (overlap) config.chunking.overlap = *overlap;
  config.chunking.validate();
  std::size_t documents = 0;
  const auto store = build_store(config, dir, &documents);
  const fs::path target = out.value_or(config.store_path);
  store.persist(target);
  std::printf("%zu documents, %zu chunks -> %s\n", documents, store.size(), target.c_str());
  return 0;
}

int run_query(const AppConfig& config, const fs::path& store_path, const std::string& text,
              std::size_t k) {
  const auto store = store::VectorStore::load(store_path);
  const auto embedder = make_embedder(config);
  if (embedder->dim() != store.dim()) {
    throw Error(ErrorCode::kConfig, "store dimension " + std::to_string(store.dim()) +
                                        " does not match embedding.dim " +
                                        std::to_string(embedder->dim()));
  }
  const auto query = embedder->embed_texts({text}).front();
  for (const auto& hit : store.search(query, k)) {
    std::printf("%.6f\t%s\n", hit.score, hit.chunk.chunk_id.c_str());
  }
  return 0;
}

int run_detect(const AppConfig& config, const fs::path& image, bool as_json) {
  const auto detector = make_detector(config);
  const auto result = detector->detect(read_file(image), image.filename().string());
  if (as_json) {
    nlohmann::ordered_json out;
    out["image_width"] = result.image.width;
    out["image_height"] = result.image.height;
    out["detections"] = nlohmann::ordered_json::array();
    for (const auto& d : result.detections) {
      out["detections"].push_back({{"class_id", d.class_id},
                                   {"class_name", d.class_name},
                                   {"x1", d.bbox.x1},
                                   {"y1", d.bbox.y1},
                                   {"x2", d.bbox.x2},
                                   {"y2", d.bbox.y2},
                                   {"confidence", d.confidence}});
    }
    std::printf("%s\n", out.dump(2).c_str());
    return 0;
  }
  if (result.detections.empty()) std::printf("no disease detected\n");
  for (const auto& d : result.detections) {
    std::printf("%-12s %.3f  (%.1f, %.1f, %.1f, %.1f)\n", d.class_name.c_str(), d.confidence,
                d.bbox.x1, d.bbox.y1, d.bbox.x2, d.bbox.y2);
  }
  return 0;
}

int run_ask(const AppConfig& config, const std::string& question, std::size_t k) {
  auto store = std::make_shared<const store::VectorStore>(store::VectorStore::load(config.store_path));
  auto options = config.rag;
  if (k > 0) options.k = k;
  rag::RagEngine engine(make_embedder(config), [store] { return store; }, make_chat_model(config),
                        options);
  rag::Session session("cli", config.window_size);
  const auto answer = engine.answer(question, session);
  std::printf("%s\n", answer.text.c_str());
  if (!answer.sources.empty()) {
    std::printf("\nSources:\n");
    for (const auto& s : answer.sources) std::printf("  - %s\n", s.chunk_id.c_str());
  }
  return 0;
}

struct EvalArgs {
  fs::path pred;
  fs::path gt;
  std::optional<fs::path> classes;
  std::optional<fs::path> sizes;
  std::optional<fs::path> images;
  std::string default_size;
  double conf = 0.0;
  std::optional<fs::path> json_out;
};

int run_eval(const EvalArgs& args) {
  detect::ClassList classes =
      args.classes ? detect::ClassList::parse(read_file(*args.classes)) : detect::ClassList();
  eval::ImageSizes sizes;
  if (args.sizes) sizes = eval::load_size_manifest(*args.sizes);
  if (args.images) {
    for (const auto& entry : fs::directory_iterator(*args.images)) {
      if (!entry.is_regular_file()) continue;
      if (auto info = probe_image(read_file(entry.path()))) {
        sizes.by_stem[entry.path().stem().string()] = {double(info->width), double(info->height)};
      }
    }
  }
  if (!args.default_size.empty()) {
    unsigned w = 0, h = 0;
    if (std::sscanf(args.default_size.c_str(), "%ux%u", &w, &h) != 2 || w == 0 || h == 0) {
      throw Error(ErrorCode::kConfig, "--default-size expects WxH, e.g. 640x640");
    }
    sizes.fallback = std::make_pair(double(w), double(h));
  }
  eval::EvalOptions options;
  options.conf_threshold = args.conf;
  const auto report = eval::evaluate_dataset(args.pred, args.gt, classes, sizes, options);
  std::fputs(eval::format_table(report).c_str(), stdout);
  if (args.json_out) {
    std::ofstream out(*args.json_out, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + args.json_out->string());
    out << eval::report_to_json(report) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"leafrag: leaf-disease detection with retrieval-grounded remedies"};
  app.require_subcommand(1);
  std::optional<fs::path> config_path;
  app.add_option("--config", config_path, "INI config file (env LEAFRAG_<SECTION>_<KEY> overrides)");

  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  std::string host;
  int port = -1;
  serve->add_option("--host", host, "Bind address (default from config)");
  serve->add_option("--port", port, "Port, 0 for any free port (default from config)");

  auto* ingest_cmd = app.add_subcommand("ingest", "Chunk and embed a knowledge base into a store file");
  fs::path kb_dir;
  std::optional<std::size_t> chunk_size, overlap;
  std::optional<fs::path> out;
  ingest_cmd->add_option("dir", kb_dir, "Knowledge-base directory")->required();
  ingest_cmd->add_option("--chunk-size", chunk_size, "Characters per chunk");
  ingest_cmd->add_option("--overlap", overlap, "Characters shared by adjacent chunks");
  ingest_cmd->add_option("--out", out, "Store file (default store.path)");

  auto* query_cmd = app.add_subcommand("query", "Top-k chunks for a text");
  fs::path store_path;
  std::string query_text;
  std::size_t k = 4;
  query_cmd->add_option("store", store_path, "Store file")->required();
  query_cmd->add_option("text", query_text, "Query text")->required();
  query_cmd->add_option("-k", k, "Number of results")->check(CLI::PositiveNumber);

  auto* detect_cmd = app.add_subcommand("detect", "Run the configured detector on an image");
  fs::path image;
  bool as_json = false;
  detect_cmd->add_option("image", image, "PNG or JPEG file")->required()->check(CLI::ExistingFile);
  detect_cmd->add_flag("--json", as_json, "Print JSON");

  auto* ask_cmd = app.add_subcommand("ask", "Ask one question against the configured store");
  std::string question;
  std::size_t ask_k = 0;
  ask_cmd->add_option("question", question, "Question")->required();
  ask_cmd->add_option("-k", ask_k, "Chunks to retrieve (default rag.k)");

  auto* eval_cmd = app.add_subcommand("eval", "Precision/recall/mAP of prediction files against labels");
  EvalArgs eval_args;
  eval_cmd->add_option("--pred", eval_args.pred, "Prediction directory")->required();
  eval_cmd->add_option("--gt", eval_args.gt, "Ground-truth label directory")->required();
  eval_cmd->add_option("--classes", eval_args.classes, "Class names, one per line");
  eval_cmd->add_option("--sizes", eval_args.sizes, "filename,width,height manifest");
  eval_cmd->add_option("--images", eval_args.images, "Directory of images to read sizes from");
  eval_cmd->add_option("--default-size", eval_args.default_size, "Fallback WxH for unlisted images");
  eval_cmd->add_option("--conf", eval_args.conf, "Ignore predictions below this confidence");
  eval_cmd->add_option("--json", eval_args.json_out, "Write report.json here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*eval_cmd) return run_eval(eval_args);
    AppConfig config = load_config(config_path);
    if (*serve) {
      return run_serve(config, host.empty() ? config.server.host : host,
                       port < 0 ? config.server.port : port);
    }
    if (*ingest_cmd) return run_ingest(config, kb_dir, chunk_size, overlap, out);
    if (*query_cmd) return run_query(config, store_path, query_text, k);
    if (*detect_cmd) return run_detect(config, image, as_json);
    if (*ask_cmd) return run_ask(config, question, ask_k);
  } catch (const Error& e) {
    std::fprintf(stderr, "error (%s): %s\n", std::string(to_string(e.code())).c_str(), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
