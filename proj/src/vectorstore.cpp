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

#include "leafrag/vectorstore.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "leafrag/error.hpp"
#include "leafrag/simd/dot.hpp"

namespace leafrag::store {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void load_error(const std::filesystem::path& path, std::size_t line,
                             const std::string& what) {
  throw Error(ErrorCode::kParse,
              path.string() + ":" + std::to_string(line) + ": " + what);
}

template <typename T>
T required(const json& obj, const char* key, const std::filesystem::path& path,
           std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) load_error(path, line, std::string("missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    load_error(path, line, std::string("field '") + key + "' has the wrong type");
  }
}

}  // namespace

VectorStore::VectorStore(std::size_t dim) : dim_(dim) {
  if (dim_ == 0) throw Error(ErrorCode::kConfig, "vector store dimension must be positive");
}

std::size_t VectorStore::add(std::vector<StoreEntry> entries) {
  for (const auto& e : entries) {
    if (e.vector.dim() != dim_) {
      throw Error(ErrorCode::kConfig, "vector for '" + e.chunk.chunk_id + "' has dimension " +
                                          std::to_string(e.vector.dim()) + ", store expects " +
                                          std::to_string(dim_));
    }
  }
  std::size_t added = 0;
  for (auto& e : entries) {
    e.insertion_index = next_insertion_++;
    const double norm = embed::l2_norm(e.vector.values);
    if (auto it = by_id_.find(e.chunk.chunk_id); it != by_id_.end()) {
      const std::size_t row = it->second;
      std::copy(e.vector.values.begin(), e.vector.values.end(),
                matrix_.begin() + static_cast<std::ptrdiff_t>(row * dim_));
      norms_[row] = norm;
      entries_[row] = std::move(e);
      continue;
    }
    by_id_.emplace(e.chunk.chunk_id, entries_.size());
    matrix_.insert(matrix_.end(), e.vector.values.begin(), e.vector.values.end());
    norms_.push_back(norm);
    entries_.push_back(std::move(e));
    ++added;
  }
  return added;
}

std::size_t VectorStore::add(const ingest::Chunk& chunk, embed::EmbeddingVector vector) {
  std::vector<StoreEntry> one;
  one.push_back(StoreEntry{chunk, std::move(vector), 0});
  return add(std::move(one));
}

std::vector<ScoredChunk> VectorStore::search(const embed::EmbeddingVector& query,
                                             std::size_t k) const {
  if (query.dim() != dim_) {
    throw Error(ErrorCode::kConfig, "query has dimension " + std::to_string(query.dim()) +
                                        ", store expects " + std::to_string(dim_));
  }
  if (entries_.empty() || k == 0) return {};

  std::vector<double> dots(entries_.size());
  simd::dot_rows(query.values, matrix_, dots);
  const double qn = embed::l2_norm(query.values);
  std::vector<double> scores(entries_.size(), 0.0);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (qn != 0.0 && norms_[i] != 0.0) {
      scores[i] = std::clamp(dots[i] / (qn * norms_[i]), -1.0, 1.0);
    }
  }

  std::vector<std::size_t> order(entries_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto better = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return entries_[a].insertion_index < entries_[b].insertion_index;
  };
  const std::size_t take = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                    better);

  std::vector<ScoredChunk> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    const auto& e = entries_[order[i]];
    out.push_back(ScoredChunk{e.chunk, scores[order[i]], e.insertion_index});
  }
  return out;
}

std::vector<StoreEntry> VectorStore::entries() const {
  std::vector<StoreEntry> out = entries_;
  std::sort(out.begin(), out.end(), [](const StoreEntry& a, const StoreEntry& b) {
    return a.insertion_index < b.insertion_index;
  });
  return out;
}

void VectorStore::persist(const std::filesystem::path& path) const {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
    ordered_json header;
    header["version"] = kFormatVersion;
    header["dim"] = dim_;
    out << header.dump() << '\n';
    for (const auto& e : entries()) {
      ordered_json line;
      line["chunk_id"] = e.chunk.chunk_id;
      line["source_id"] = e.chunk.source_id;
      line["ordinal"] = e.chunk.ordinal;
      line["start"] = e.chunk.span.start;
      line["end"] = e.chunk.span.end;
      line["insertion_index"] = e.insertion_index;
      line["text"] = e.chunk.text;
      line["vector"] = e.vector.values;
      out << line.dump() << '\n';
    }
    out.flush();
    if (!out) throw Error(ErrorCode::kIo, "failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot replace " + path.string() + ": " + ec.message());
}

VectorStore VectorStore::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read store file " + path.string());

  std::string line;
  if (!std::getline(in, line)) load_error(path, 1, "empty file, expected a store header");
  json header = json::parse(line, nullptr, false);
  if (header.is_discarded() || !header.is_object() || header.size() != 2 ||
      !header.contains("version") || !header.contains("dim")) {
    load_error(path, 1, "not a vector store file (bad header)");
  }
  if (!header["version"].is_number_integer() || header["version"].get<int>() != kFormatVersion) {
    load_error(path, 1, "unsupported store version " + header["version"].dump() +
                            " (expected " + std::to_string(kFormatVersion) + ")");
  }
  if (!header["dim"].is_number_unsigned() || header["dim"].get<std::size_t>() == 0) {
    load_error(path, 1, "invalid dimension in header");
  }
  VectorStore store(header["dim"].get<std::size_t>());

  std::size_t line_no = 1;
  bool have_previous = false;
  std::uint64_t previous = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) load_error(path, line_no, "corrupt entry");
    StoreEntry e;
    e.chunk.chunk_id = required<std::string>(obj, "chunk_id", path, line_no);
    e.chunk.source_id = required<std::string>(obj, "source_id", path, line_no);
    e.chunk.ordinal = required<std::size_t>(obj, "ordinal", path, line_no);
    e.chunk.span.start = required<std::size_t>(obj, "start", path, line_no);
    e.chunk.span.end = required<std::size_t>(obj, "end", path, line_no);
    e.chunk.text = required<std::string>(obj, "text", path, line_no);
    e.insertion_index = required<std::uint64_t>(obj, "insertion_index", path, line_no);
    e.vector.values = required<std::vector<double>>(obj, "vector", path, line_no);
    if (e.vector.dim() != store.dim_) load_error(path, line_no, "vector dimension mismatch");
    if (have_previous && e.insertion_index <= previous) {
      load_error(path, line_no, "insertion indices are not increasing");
    }
    if (store.by_id_.contains(e.chunk.chunk_id)) {
      load_error(path, line_no, "duplicate chunk_id '" + e.chunk.chunk_id + "'");
    }
    have_previous = true;
    previous = e.insertion_index;

    store.by_id_.emplace(e.chunk.chunk_id, store.entries_.size());
    store.matrix_.insert(store.matrix_.end(), e.vector.values.begin(), e.vector.values.end());
    store.norms_.push_back(embed::l2_norm(e.vector.values));
    store.entries_.push_back(std::move(e));
  }
  if (in.bad()) throw Error(ErrorCode::kIo, "error reading " + path.string());
  store.next_insertion_ = have_previous ? previous + 1 : 0;
  return store;
}

}  // namespace leafrag::store
