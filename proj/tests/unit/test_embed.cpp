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

#include <doctest.h>

#include <json.hpp>

#include <cmath>

#include "leafrag/embed.hpp"
#include "leafrag/error.hpp"
#include "stubs.hpp"

using namespace leafrag;
using namespace leafrag::embed;

namespace {

RemoteEmbedderConfig remote_config(const leafrag::testing::EmbeddingStub& stub) {
  RemoteEmbedderConfig c;
  c.url = stub.endpoint();
  c.model = "mini";
  c.dim = 384;
  c.api_key_env = "";
  c.call.sleeper = [](std::chrono::milliseconds) {};
  return c;
}

}  // namespace

TEST_CASE("hashing embedder is deterministic and normalized") {
  const HashingEmbedder e;
  const auto a = e.embed_one("Orange powder under the leaves");
  CHECK(a.dim() == 384);
  CHECK(l2_norm(a.values) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(e.embed_one("Orange powder under the leaves") == a);
  CHECK(e.embed_one("orange POWDER, under the leaves!") == a);
  CHECK(cosine_similarity(a, e.embed_one("coffee rust orange powder")) > 0.2);
  CHECK(cosine_similarity(a, e.embed_one("nitrogen fertilizer")) < cosine_similarity(a, a));

  const auto blank = e.embed_one(" ,;. ");
  CHECK(l2_norm(blank.values) == 0.0);
  CHECK(cosine_similarity(blank, a) == 0.0);

  CHECK(HashingEmbedder(384, 1).embed_one("rust") != HashingEmbedder(384, 2).embed_one("rust"));
  CHECK(e.embed_texts({"a", "b"}).size() == 2);
  CHECK_THROWS_AS(cosine_similarity(a, HashingEmbedder(8).embed_one("rust")), Error);
}

TEST_CASE("hashing embedder counts repeated tokens") {
  const HashingEmbedder e(16);
  const auto once = e.embed_one("leaf");
  const auto twice = e.embed_one("leaf leaf");
  CHECK(once == twice);  // same direction after normalization
  std::size_t nonzero = 0;
  for (double v : once.values) nonzero += v != 0.0;
  CHECK(nonzero == 1);
}

TEST_CASE("normalize") {
  std::vector<double> v{3, 4};
  normalize(v);
  CHECK(v[0] == doctest::Approx(0.6));
  CHECK(v[1] == doctest::Approx(0.8));
  std::vector<double> zero{0, 0};
  normalize(zero);
  CHECK(zero == std::vector<double>{0, 0});
}

TEST_CASE("remote embedder batches in order and matches the local hashing vectors") {
  leafrag::testing::EmbeddingStub stub;
  auto config = remote_config(stub);
  config.batch_size = 2;
  const RemoteEmbedder remote(config);
  const std::vector<std::string> texts{"one", "two", "three", "four", "five"};
  const auto vectors = remote.embed_texts(texts);
  REQUIRE(vectors.size() == 5);
  CHECK(stub.hits() == 3);
  const HashingEmbedder local;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const double c = cosine_similarity(vectors[i], local.embed_one(texts[i]));
    CHECK(c == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(remote.embed_texts({}).empty());
}

TEST_CASE("remote embedder request body") {
  leafrag::testing::EmbeddingStub stub;
  const RemoteEmbedder remote(remote_config(stub));
  const std::vector<std::string> batch{"a \"quoted\" text", "caf\xc3\xa9"};
  CHECK(remote.request_body(batch) ==
        "{\"input\":[\"a \\\"quoted\\\" text\",\"caf\xc3\xa9\"],\"model\":\"mini\"}");
  remote.embed_texts(batch);
  CHECK(stub.bodies().at(0) == remote.request_body(batch));
}

TEST_CASE("remote embedder errors") {
  leafrag::testing::EmbeddingStub stub(8);
  const RemoteEmbedder wrong_dim(remote_config(stub));
  try {
    wrong_dim.embed_texts({"x"});
    FAIL("expected dimension error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kConfig);
  }

  leafrag::testing::EmbeddingStub flaky;
  const RemoteEmbedder retrying(remote_config(flaky));
  flaky.script_statuses({500, 429});
  CHECK(retrying.embed_texts({"x"}).size() == 1);
  CHECK(flaky.hits() == 3);

  flaky.script_statuses({400});
  try {
    retrying.embed_texts({"x"});
    FAIL("expected protocol error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kProtocol);
  }
}
