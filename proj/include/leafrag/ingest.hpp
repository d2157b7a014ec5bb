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
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace leafrag::ingest {

struct Document {
  std::string source_id;  // path relative to the knowledge-base root, '/'-separated
  std::string title;
  std::string body;
  std::map<std::string, std::string> metadata;
};

/// Chunk budgets are counted in Unicode code points, not bytes or tokens.
struct ChunkSpec {
  std::size_t chunk_size = 800;
  std::size_t overlap = 100;
  std::vector<std::string> separators = {"\n\n", "\n", " ", ""};

  /// Throws Error{kConfig} unless 1 <= chunk_size and overlap < chunk_size.
  void validate() const;
};

/// Byte offsets into the document body: text == body.substr(start, end - start).
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  friend bool operator==(const Span&, const Span&) = default;
};

struct TextPiece {
  std::string text;
  Span span;

  friend bool operator==(const TextPiece&, const TextPiece&) = default;
};

struct Chunk {
  std::string chunk_id;  // "<source_id>#<ordinal>"
  std::string text;
  std::string source_id;
  std::size_t ordinal = 0;
  Span span;

  friend bool operator==(const Chunk&, const Chunk&) = default;
};

/// Number of UTF-8 code points in `text`.
std::size_t char_count(std::string_view text) noexcept;

/// Recursive separator-hierarchy splitter. At each level the first separator
/// present in the text is used (the empty separator splits into single
/// characters); separators stay attached to the end of the piece they
/// terminate. Pieces that fit are greedily packed into windows of at most
/// chunk_size characters, and each new window starts with up to `overlap`
/// trailing characters of the previous one; oversized pieces recurse one
/// level down. Windows are contiguous, so their spans cover the whole body.
std::vector<TextPiece> split_text(std::string_view body, const ChunkSpec& spec);

/// Recursively loads `.md`/`.txt` files ordered by source_id. An optional
/// leading front-matter block (`---`, `key: value` lines, `---`) becomes
/// metadata; `title` defaults to the file stem. Throws Error naming the file on
/// unreadable files, invalid UTF-8 or an empty body.
std::vector<Document> load_documents(const std::filesystem::path& root);

/// Parses one document's text; exposed for tests.
Document parse_document(std::string source_id, std::string_view raw);

std::vector<Chunk> chunk_document(const Document& doc, const ChunkSpec& spec);

/// load_documents followed by split_text on every document.
std::vector<Chunk> ingest(const std::filesystem::path& root, const ChunkSpec& spec);

bool is_valid_utf8(std::string_view text) noexcept;

}  // namespace leafrag::ingest
