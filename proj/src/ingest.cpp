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

#include "leafrag/ingest.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <sstream>

#include "leafrag/error.hpp"

namespace leafrag::ingest {
namespace {

namespace fs = std::filesystem;

struct Piece {
  std::size_t begin;
  std::size_t end;
  std::size_t chars;
};

bool is_continuation(unsigned char c) { return (c & 0xc0) == 0x80; }

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n\f\v";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

class Splitter {
 public:
  Splitter(std::string_view body, const ChunkSpec& spec) : body_(body), spec_(spec) {}

  std::vector<TextPiece> run() {
    if (body_.empty()) return {};
    split(0, body_.size(), 0);
    return std::move(out_);
  }

 private:
  std::size_t chars(std::size_t b, std::size_t e) const { return char_count(body_.substr(b, e - b)); }

  // Index of the first separator at or after `level` occurring in [b, e);
  // separators.size() means "split into characters".
  std::size_t pick_separator(std::size_t b, std::size_t e, std::size_t level) const {
    const auto text = body_.substr(b, e - b);
    for (std::size_t i = level; i < spec_.separators.size(); ++i) {
      const auto& sep = spec_.separators[i];
      if (sep.empty()) return spec_.separators.size();
      if (text.find(sep) != std::string_view::npos) return i;
    }
    return spec_.separators.size();
  }

  std::vector<Piece> raw_pieces(std::size_t b, std::size_t e, std::size_t sep_index) const {
    std::vector<Piece> pieces;
    if (sep_index == spec_.separators.size()) {
      std::size_t pos = b;
      while (pos < e) {
        std::size_t next = pos + 1;
        while (next < e && is_continuation(static_cast<unsigned char>(body_[next]))) ++next;
        pieces.push_back(Piece{pos, next, 1});
        pos = next;
      }
      return pieces;
    }
    const std::string& sep = spec_.separators[sep_index];
    std::size_t pos = b;
    while (pos < e) {
      std::size_t hit = body_.substr(0, e).find(sep, pos);
      std::size_t end = hit == std::string_view::npos ? e : hit + sep.size();
      pieces.push_back(Piece{pos, end, chars(pos, end)});
      pos = end;
    }
    return pieces;
  }

  void split(std::size_t b, std::size_t e, std::size_t level) {
    const std::size_t total = chars(b, e);
    if (total <= spec_.chunk_size) {
      emit(b, e);
      return;
    }
    const std::size_t sep_index = pick_separator(b, e, level);
    std::vector<Piece> fitting;
    for (const Piece& p : raw_pieces(b, e, sep_index)) {
      if (p.chars <= spec_.chunk_size) {
        fitting.push_back(p);
        continue;
      }
      merge(fitting);
      fitting.clear();
      split(p.begin, p.end, sep_index + 1);
    }
    merge(fitting);
  }

  void merge(const std::vector<Piece>& pieces) {
    std::deque<Piece> window;
    std::size_t total = 0;
    for (const Piece& p : pieces) {
      if (!window.empty() && total + p.chars > spec_.chunk_size) {
        emit(window.front().begin, window.back().end);
        while (!window.empty() &&
               (total > spec_.overlap || total + p.chars > spec_.chunk_size)) {
          total -= window.front().chars;
          window.pop_front();
        }
      }
      window.push_back(p);
      total += p.chars;
    }
    if (!window.empty()) emit(window.front().begin, window.back().end);
  }

  void emit(std::size_t b, std::size_t e) {
    out_.push_back(TextPiece{std::string(body_.substr(b, e - b)), Span{b, e}});
  }

  std::string_view body_;
  const ChunkSpec& spec_;
  std::vector<TextPiece> out_;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  return ss.str();
}

}  // namespace

void ChunkSpec::validate() const {
  if (chunk_size < 1) throw Error(ErrorCode::kConfig, "chunk_size must be at least 1");
  if (overlap >= chunk_size) {
    throw Error(ErrorCode::kConfig, "overlap (" + std::to_string(overlap) +
                                        ") must be smaller than chunk_size (" +
                                        std::to_string(chunk_size) + ")");
  }
}

std::size_t char_count(std::string_view text) noexcept {
  return static_cast<std::size_t>(std::count_if(text.begin(), text.end(), [](char c) {
    return !is_continuation(static_cast<unsigned char>(c));
  }));
}

bool is_valid_utf8(std::string_view text) noexcept {
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const auto c = static_cast<unsigned char>(text[i]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xe0) == 0xc0) {
      len = 2;
      cp = c & 0x1f;
    } else if ((c & 0xf0) == 0xe0) {
      len = 3;
      cp = c & 0x0f;
    } else if ((c & 0xf8) == 0xf0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > n) return false;
    for (std::size_t k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(text[i + k]);
      if (!is_continuation(cc)) return false;
      cp = (cp << 6) | (cc & 0x3f);
    }
    // overlong forms, surrogates, out of range
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
        cp > 0x10ffff || (cp >= 0xd800 && cp <= 0xdfff)) {
      return false;
    }
    i += len;
  }
  return true;
}

std::vector<TextPiece> split_text(std::string_view body, const ChunkSpec& spec) {
  spec.validate();
  return Splitter(body, spec).run();
}

Document parse_document(std::string source_id, std::string_view raw) {
  Document doc;
  doc.source_id = std::move(source_id);
  std::string_view body = raw;

  auto first_line_end = raw.find('\n');
  if (first_line_end != std::string_view::npos &&
      trim(raw.substr(0, first_line_end)) == "---") {
    std::size_t pos = first_line_end + 1;
    std::map<std::string, std::string> meta;
    bool closed = false;
    while (pos < raw.size()) {
      std::size_t nl = raw.find('\n', pos);
      const std::size_t line_end = nl == std::string_view::npos ? raw.size() : nl;
      const std::string_view line = trim(raw.substr(pos, line_end - pos));
      pos = nl == std::string_view::npos ? raw.size() : nl + 1;
      if (line == "---") {
        closed = true;
        break;
      }
      if (line.empty() || line.front() == '#') continue;
      const auto colon = line.find(':');
      if (colon == std::string_view::npos) {
        throw Error(ErrorCode::kParse, doc.source_id + ": front matter line without ':'");
      }
      meta[std::string(trim(line.substr(0, colon)))] = std::string(trim(line.substr(colon + 1)));
    }
    if (closed) {
      doc.metadata = std::move(meta);
      body = raw.substr(pos);
    }
  }

  doc.body = std::string(body);
  if (trim(doc.body).empty()) {
    throw Error(ErrorCode::kValidation, doc.source_id + ": document body is empty");
  }
  if (auto it = doc.metadata.find("title"); it != doc.metadata.end() && !it->second.empty()) {
    doc.title = it->second;
  } else {
    doc.title = fs::path(doc.source_id).stem().string();
  }
  return doc;
}

std::vector<Document> load_documents(const fs::path& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    throw Error(ErrorCode::kIo, "knowledge base is not a readable directory: " + root.string());
  }
  std::vector<std::pair<std::string, fs::path>> files;
  for (auto it = fs::recursive_directory_iterator(root, ec); !ec && it != fs::end(it);
       it.increment(ec)) {
    if (!it->is_regular_file()) continue;
    const auto ext = it->path().extension();
    if (ext != ".md" && ext != ".txt") continue;
    files.emplace_back(fs::relative(it->path(), root).generic_string(), it->path());
  }
  if (ec) throw Error(ErrorCode::kIo, "cannot list " + root.string() + ": " + ec.message());
  std::sort(files.begin(), files.end());

  std::vector<Document> docs;
  docs.reserve(files.size());
  for (auto& [source_id, path] : files) {
    std::string raw = read_file(path);
    if (!is_valid_utf8(raw)) {
      throw Error(ErrorCode::kValidation, source_id + ": not valid UTF-8");
    }
    docs.push_back(parse_document(source_id, raw));
  }
  return docs;
}

std::vector<Chunk> chunk_document(const Document& doc, const ChunkSpec& spec) {
  std::vector<Chunk> out;
  std::size_t ordinal = 0;
  for (auto& piece : split_text(doc.body, spec)) {
    out.push_back(Chunk{doc.source_id + "#" + std::to_string(ordinal), std::move(piece.text),
                        doc.source_id, ordinal, piece.span});
    ++ordinal;
  }
  return out;
}

std::vector<Chunk> ingest(const fs::path& root, const ChunkSpec& spec) {
  spec.validate();
  std::vector<Chunk> out;
  for (const auto& doc : load_documents(root)) {
    auto chunks = chunk_document(doc, spec);
    out.insert(out.end(), std::make_move_iterator(chunks.begin()),
               std::make_move_iterator(chunks.end()));
  }
  return out;
}

}  // namespace leafrag::ingest
