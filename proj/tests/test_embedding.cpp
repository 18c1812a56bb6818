#include <doctest.h>

#include <atomic>
#include <cmath>
#include <random>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "framemix/embedding.hpp"
#include "test_support.hpp"

using namespace framemix;
using testsupport::fv;
using testsupport::TempDir;

TEST_CASE("embed_text is deterministic") {
  HashedTrigramEmbedder e;
  const auto a = e.embed("x");
  const auto b = e.embed("x");
  CHECK(a.values == b.values);
}

TEST_CASE("local provider emits unit-norm vectors of fixed dimension") {
  HashedTrigramEmbedder e(64);
  const auto v = e.embed("market instability");
  CHECK(v.dim() == 64);
  CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(e.embed("short").dim() == 64);
  CHECK(e.embed("ab").norm() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("unrelated strings have positive cosine distance") {
  HashedTrigramEmbedder e;
  CHECK(cosine_distance(e.embed("quarterly revenue growth"),
                        e.embed("wildfire evacuation zone")) > 0.0);
}

TEST_CASE("embed rejects empty text") {
  HashedTrigramEmbedder e;
  CHECK_THROWS_AS(e.embed(""), std::invalid_argument);
}

TEST_CASE("cosine distance: identity, antipodal, orthogonal") {
  const auto x = fv({1.0, 0.0});
  CHECK(cosine_distance(x, x) == doctest::Approx(0.0));
  CHECK(cosine_distance(x, fv({-1.0, 0.0})) == doctest::Approx(2.0));
  CHECK(cosine_distance(x, fv({0.0, 1.0})) == doctest::Approx(1.0));
}

TEST_CASE("cosine distance rejects dimension mismatch and zero vectors") {
  CHECK_THROWS_AS(cosine_distance(fv({1.0, 0.0}), fv({1.0, 0.0, 0.0})),
                  std::invalid_argument);
  CHECK_THROWS_AS(cosine_distance(fv({0.0, 0.0}), fv({1.0, 0.0})),
                  std::invalid_argument);
}

TEST_CASE("cosine distance symmetry and range over random vectors") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> a(8), b(8);
    for (auto& v : a) v = u(rng);
    for (auto& v : b) v = u(rng);
    const auto x = fv(a), y = fv(b);
    const double dxy = cosine_distance(x, y);
    CHECK(std::abs(dxy - cosine_distance(y, x)) < 1e-12);
    CHECK(dxy >= 0.0);
    CHECK(dxy <= 2.0);
    CHECK(std::exp(-1.0 * dxy) > 0.0);
    CHECK(std::exp(-1.0 * dxy) <= 1.0);
  }
}

TEST_CASE("embedding cache round-trips across instances") {
  TempDir tmp;
  const std::string cache = tmp.file("cache.jsonl");
  std::vector<double> first;
  {
    CachedEmbedder e(std::make_shared<HashedTrigramEmbedder>(16), cache);
    first = e.embed("supply chain risk").values;
  }
  {
    // Second instance reads the sidecar file without recomputing.
    CachedEmbedder e(std::make_shared<HashedTrigramEmbedder>(16), cache);
    CHECK(e.embed("supply chain risk").values == first);
  }
}

TEST_CASE("cache tolerates concurrent embed calls") {
  TempDir tmp;
  CachedEmbedder e(std::make_shared<HashedTrigramEmbedder>(16), tmp.file("c.jsonl"));
  std::atomic<bool> failed{false};
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t)
    threads.emplace_back([&e, &failed, t] {
      for (int i = 0; i < 50; ++i) {
        const auto v = e.embed("text " + std::to_string(i % 7));
        if (v.dim() != 16) failed = true;
      }
      (void)t;
    });
  for (auto& t : threads) t.join();
  CHECK_FALSE(failed.load());
}

TEST_CASE("remote embedder speaks the documented wire format") {
  httplib::Server server;
  nlohmann::json captured;
  server.Post("/v1/embeddings", [&](const httplib::Request& req, httplib::Response& res) {
    captured = nlohmann::json::parse(req.body);
    nlohmann::json out;
    out["data"] = nlohmann::json::array();
    for (std::size_t i = 0; i < captured.at("input").size(); ++i)
      out["data"].push_back({{"embedding", {0.6, 0.8}}});
    res.set_content(out.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread thread([&server] { server.listen_after_bind(); });
  server.wait_until_ready();

  RemoteEmbedder::Config cfg;
  cfg.base_url = "http://127.0.0.1:" + std::to_string(port);
  cfg.model = "test-model";
  RemoteEmbedder e(cfg);
  const auto batch = e.embed_batch({"alpha", "beta"});
  server.stop();
  thread.join();

  CHECK(captured.at("model") == "test-model");
  CHECK(captured.at("input") == nlohmann::json({"alpha", "beta"}));
  REQUIRE(batch.size() == 2);
  CHECK(batch[0].values == std::vector<double>{0.6, 0.8});
  CHECK(e.dimension() == 2);
}

TEST_CASE("remote embedder: auth failure is terminal, outage is retryable") {
  httplib::Server server;
  server.Post("/v1/embeddings", [](const httplib::Request&, httplib::Response& res) {
    res.status = 401;
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread thread([&server] { server.listen_after_bind(); });
  server.wait_until_ready();

  RemoteEmbedder::Config cfg;
  cfg.base_url = "http://127.0.0.1:" + std::to_string(port);
  cfg.model = "m";
  RemoteEmbedder e(cfg);
  try {
    e.embed("x");
    FAIL("expected ProviderError");
  } catch (const ProviderError& err) {
    CHECK_FALSE(err.retryable);
  }
  server.stop();
  thread.join();

  RemoteEmbedder::Config dead = cfg;
  dead.base_url = "http://127.0.0.1:1";  // nothing listening
  dead.max_retries = 1;
  dead.timeout_seconds = 1;
  RemoteEmbedder d(dead);
  try {
    d.embed("x");
    FAIL("expected ProviderError");
  } catch (const ProviderError& err) {
    CHECK(err.retryable);
  }
}
