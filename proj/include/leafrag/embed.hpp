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
#include <memory>
#include <semaphore>
#include <span>
#include <string>
#include <vector>

#include "leafrag/net.hpp"

namespace leafrag::embed {

/// Fixed-length embedding. Providers return L2-normalized vectors, or the
/// zero vector for text without any token.
struct EmbeddingVector {
  std::vector<double> values;

  std::size_t dim() const noexcept { return values.size(); }
  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;
};

double l2_norm(std::span<const double> v);

/// Scales `v` to unit length in place; the zero vector is left unchanged.
void normalize(std::vector<double>& v);

/// u.v / (|u| |v|), or 0 when either norm is 0. Throws Error{kConfig} on a
/// dimension mismatch.
double cosine_similarity(const EmbeddingVector& u, const EmbeddingVector& v);

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  /// One vector per input, order preserved.
  virtual std::vector<EmbeddingVector> embed_texts(const std::vector<std::string>& texts) const = 0;
  virtual std::size_t dim() const noexcept = 0;
  virtual std::string kind() const = 0;
};

inline constexpr std::size_t kDefaultDim = 384;

/// Offline provider: ASCII-lowercased tokens split on non-alphanumerics
/// (bytes >= 0x80 count as token characters), each hashed with seeded FNV-1a
/// into one of `dim` buckets, counts L2-normalized.
class HashingEmbedder final : public EmbeddingProvider {
 public:
  explicit HashingEmbedder(std::size_t dim = kDefaultDim, std::uint64_t seed = 0x5eed);

  std::vector<EmbeddingVector> embed_texts(const std::vector<std::string>& texts) const override;
  EmbeddingVector embed_one(std::string_view text) const;
  std::size_t dim() const noexcept override { return dim_; }
  std::string kind() const override { return "hashing"; }

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

struct RemoteEmbedderConfig {
  std::string url;          // e.g. https://api.example.com/v1/embeddings
  std::string model;
  std::size_t dim = kDefaultDim;
  std::string api_key_env;  // name of the variable holding the bearer token
  std::size_t batch_size = 64;
  std::ptrdiff_t max_in_flight = 4;
  net::CallOptions call;
};

/// Client for the `{"input":[...],"model":...}` -> `{"data":[{"embedding":[...]}]}`
/// embeddings protocol. Results are re-normalized and checked against `dim`.
class RemoteEmbedder final : public EmbeddingProvider {
 public:
  explicit RemoteEmbedder(RemoteEmbedderConfig config);

  std::vector<EmbeddingVector> embed_texts(const std::vector<std::string>& texts) const override;
  std::size_t dim() const noexcept override { return config_.dim; }
  std::string kind() const override { return "remote"; }

  /// Exact request body sent for one batch; stable for identical input.
  std::string request_body(std::span<const std::string> batch) const;

 private:
  RemoteEmbedderConfig config_;
  net::Url url_;
  mutable std::counting_semaphore<1024> in_flight_;
};

}  // namespace leafrag::embed
