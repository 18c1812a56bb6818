#pragma once
// Feature vectors for frame element texts, pluggable providers and the
// cosine distance used throughout the mining math.

#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace framemix {

// Failure talking to a remote provider. `retryable` distinguishes transient
// faults (timeouts, 5xx) from terminal ones (auth, bad request).
struct ProviderError : std::runtime_error {
  ProviderError(const std::string& what, bool retryable_)
      : std::runtime_error(what), retryable(retryable_) {}
  bool retryable;
};

struct FeatureVector {
  std::vector<double> values;
  std::string provider_id;

  std::size_t dim() const { return values.size(); }
  double norm() const;
};

// delta(x, y) = 1 - <x,y>/(|x||y|), in [0, 2]. Throws on dimension mismatch.
double cosine_distance(const FeatureVector& x, const FeatureVector& y);
double cosine_similarity(const FeatureVector& x, const FeatureVector& y);

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::string provider_id() const = 0;
  virtual std::size_t dimension() const = 0;
  virtual FeatureVector embed(const std::string& text) = 0;
  virtual std::vector<FeatureVector> embed_batch(const std::vector<std::string>& texts);
};

// Deterministic offline embedder: hashed character-trigram counts projected
// to a fixed dimension and L2-normalized. Same text always gives the same
// unit-norm vector, so the whole pipeline runs without a network.
class HashedTrigramEmbedder : public EmbeddingProvider {
 public:
  explicit HashedTrigramEmbedder(std::size_t dim = 64);
  std::string provider_id() const override { return id_; }
  std::size_t dimension() const override { return dim_; }
  FeatureVector embed(const std::string& text) override;

 private:
  std::size_t dim_;
  std::string id_;
};

// HTTP embedding-service client.
// POST {base_url}{path} {"input": [texts], "model": m} ->
// {"data": [{"embedding": [...]}, ...]}.
class RemoteEmbedder : public EmbeddingProvider {
 public:
  struct Config {
    std::string base_url;  // e.g. http://localhost:8080
    std::string path = "/v1/embeddings";
    std::string model;
    std::string auth_token;  // optional bearer token
    int timeout_seconds = 30;
    int max_retries = 3;
  };

  explicit RemoteEmbedder(Config config);
  std::string provider_id() const override;
  std::size_t dimension() const override { return dim_; }
  FeatureVector embed(const std::string& text) override;
  std::vector<FeatureVector> embed_batch(const std::vector<std::string>& texts) override;

 private:
  Config config_;
  std::size_t dim_ = 0;  // learned from the first response
};

// Wraps a provider with a (provider_id, text) keyed cache persisted as a
// JSONL sidecar file. Writers are serialized; lookups are lock-guarded too
// since the map mutates on miss.
class CachedEmbedder : public EmbeddingProvider {
 public:
  CachedEmbedder(std::shared_ptr<EmbeddingProvider> inner, std::string cache_path);
  ~CachedEmbedder() override;
  std::string provider_id() const override { return inner_->provider_id(); }
  std::size_t dimension() const override { return inner_->dimension(); }
  FeatureVector embed(const std::string& text) override;

 private:
  void load();
  std::shared_ptr<EmbeddingProvider> inner_;
  std::string cache_path_;
  std::mutex mutex_;
  std::unordered_map<std::string, FeatureVector> cache_;
};

}  // namespace framemix
