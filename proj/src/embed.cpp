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

#include "leafrag/embed.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "leafrag/error.hpp"
#include "leafrag/simd/dot.hpp"

namespace leafrag::embed {
namespace {

constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

std::uint64_t fnv1a(std::uint64_t h, unsigned char byte) { return (h ^ byte) * kFnvPrime; }

bool is_token_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

unsigned char ascii_lower(unsigned char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<unsigned char>(c - 'A' + 'a') : c;
}

}  // namespace

double l2_norm(std::span<const double> v) { return std::sqrt(simd::dot(v, v)); }

void normalize(std::vector<double>& v) {
  const double n = l2_norm(v);
  if (n == 0.0) return;
  for (double& x : v) x /= n;
}

double cosine_similarity(const EmbeddingVector& u, const EmbeddingVector& v) {
  if (u.dim() != v.dim()) {
    throw Error(ErrorCode::kConfig, "cosine_similarity: dimension mismatch " +
                                        std::to_string(u.dim()) + " vs " + std::to_string(v.dim()));
  }
  const double nu = l2_norm(u.values);
  const double nv = l2_norm(v.values);
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return std::clamp(simd::dot(u.values, v.values) / (nu * nv), -1.0, 1.0);
}

HashingEmbedder::HashingEmbedder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim_ == 0) throw Error(ErrorCode::kConfig, "embedding dimension must be positive");
}

EmbeddingVector HashingEmbedder::embed_one(std::string_view text) const {
  std::uint64_t seeded = kFnvOffset;
  for (int i = 0; i < 8; ++i) seeded = fnv1a(seeded, static_cast<unsigned char>(seed_ >> (8 * i)));

  std::vector<double> counts(dim_, 0.0);
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && !is_token_byte(static_cast<unsigned char>(text[i]))) ++i;
    if (i == text.size()) break;
    std::uint64_t h = seeded;
    while (i < text.size() && is_token_byte(static_cast<unsigned char>(text[i]))) {
      h = fnv1a(h, ascii_lower(static_cast<unsigned char>(text[i])));
      ++i;
    }
    counts[h % dim_] += 1.0;
  }
  normalize(counts);
  return EmbeddingVector{std::move(counts)};
}

std::vector<EmbeddingVector> HashingEmbedder::embed_texts(
    const std::vector<std::string>& texts) const {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed_one(t));
  return out;
}

RemoteEmbedder::RemoteEmbedder(RemoteEmbedderConfig config)
    : config_(std::move(config)),
      url_(net::parse_url(config_.url)),
      in_flight_(std::max<std::ptrdiff_t>(1, std::min<std::ptrdiff_t>(config_.max_in_flight, 1024))) {
  if (config_.dim == 0) throw Error(ErrorCode::kConfig, "embedding dimension must be positive");
  if (config_.batch_size == 0) throw Error(ErrorCode::kConfig, "batch size must be positive");
}

std::string RemoteEmbedder::request_body(std::span<const std::string> batch) const {
  nlohmann::ordered_json body;
  body["input"] = nlohmann::ordered_json::array();
  for (const auto& t : batch) body["input"].push_back(t);
  body["model"] = config_.model;
  return body.dump();
}

std::vector<EmbeddingVector> RemoteEmbedder::embed_texts(
    const std::vector<std::string>& texts) const {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  net::Request request;
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
      request.headers["Authorization"] = std::string("Bearer ") + key;
    }
  }

  for (std::size_t start = 0; start < texts.size(); start += config_.batch_size) {
    const std::size_t n = std::min(config_.batch_size, texts.size() - start);
    request.body = request_body(std::span<const std::string>(texts).subspan(start, n));

    in_flight_.acquire();
    net::Response response;
    try {
      response = net::post(url_, request, config_.call);
    } catch (...) {
      in_flight_.release();
      throw;
    }
    in_flight_.release();

    if (response.status == 401 || response.status == 403) {
      throw Error(ErrorCode::kConfig,
                  "embedding endpoint rejected credentials (HTTP " + std::to_string(response.status) + ")");
    }
    if (response.status != 200) {
      throw Error(ErrorCode::kProtocol,
                  "embedding endpoint returned HTTP " + std::to_string(response.status));
    }
    auto doc = nlohmann::json::parse(response.body, nullptr, false);
    if (doc.is_discarded() || !doc.contains("data") || !doc["data"].is_array() ||
        doc["data"].size() != n) {
      throw Error(ErrorCode::kProtocol, "embedding response lacks one 'data' item per input");
    }
    for (const auto& item : doc["data"]) {
      if (!item.is_object() || !item.contains("embedding") || !item["embedding"].is_array()) {
        throw Error(ErrorCode::kProtocol, "embedding item lacks an 'embedding' array");
      }
      std::vector<double> values;
      values.reserve(item["embedding"].size());
      for (const auto& x : item["embedding"]) {
        if (!x.is_number()) throw Error(ErrorCode::kProtocol, "non-numeric embedding value");
        values.push_back(x.get<double>());
        if (!std::isfinite(values.back())) {
          throw Error(ErrorCode::kProtocol, "non-finite embedding value");
        }
      }
      if (values.size() != config_.dim) {
        throw Error(ErrorCode::kConfig, "embedding dimension " + std::to_string(values.size()) +
                                            " does not match configured " +
                                            std::to_string(config_.dim));
      }
      normalize(values);
      out.push_back(EmbeddingVector{std::move(values)});
    }
  }
  return out;
}

}  // namespace leafrag::embed
