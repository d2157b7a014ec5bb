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
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "leafrag/embed.hpp"
#include "leafrag/ingest.hpp"

namespace leafrag::store {

struct StoreEntry {
  ingest::Chunk chunk;
  embed::EmbeddingVector vector;
  std::uint64_t insertion_index = 0;
};

struct ScoredChunk {
  ingest::Chunk chunk;
  double score = 0;
  std::uint64_t insertion_index = 0;
};

inline constexpr std::size_t kDefaultTopK = 4;
inline constexpr int kFormatVersion = 1;

/// Exact cosine top-k over an in-memory matrix of embeddings. Not internally
/// synchronized: concurrent const access is safe, mutation needs exclusive
/// access (the service swaps whole snapshots instead of mutating).
class VectorStore {
 public:
  explicit VectorStore(std::size_t dim);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  /// Upserts entries. A chunk_id already present is replaced in place and
  /// receives a fresh insertion index. Returns how many ids were new.
  /// Throws Error{kConfig} on a dimension mismatch (nothing is added then).
  std::size_t add(std::vector<StoreEntry> entries);
  std::size_t add(const ingest::Chunk& chunk, embed::EmbeddingVector vector);

  /// Top-k by cosine similarity, descending; equal scores ordered by
  /// ascending insertion index. Empty store gives an empty result.
  std::vector<ScoredChunk> search(const embed::EmbeddingVector& query, std::size_t k) const;

  /// Entries ordered by insertion index.
  std::vector<StoreEntry> entries() const;

  /// JSON-lines file: `{"version":1,"dim":N}` then one entry per line.
  void persist(const std::filesystem::path& path) const;
  static VectorStore load(const std::filesystem::path& path);

 private:
  std::size_t dim_;
  std::uint64_t next_insertion_ = 0;
  std::vector<StoreEntry> entries_;
  std::vector<double> matrix_;  // row-major copy of the vectors
  std::vector<double> norms_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

}  // namespace leafrag::store
