#include "framemix/embedding.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#include <httplib.h>
#include <json.hpp>

namespace framemix {

using nlohmann::json;

double FeatureVector::norm() const {
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s);
}

double cosine_similarity(const FeatureVector& x, const FeatureVector& y) {
  if (x.dim() != y.dim())
    throw std::invalid_argument("cosine: dimension mismatch " +
                                std::to_string(x.dim()) + " vs " +
                                std::to_string(y.dim()));
  double dot = 0.0;
  for (std::size_t i = 0; i < x.dim(); ++i) dot += x.values[i] * y.values[i];
  const double nx = x.norm(), ny = y.norm();
  if (nx == 0.0 || ny == 0.0)
    throw std::invalid_argument("cosine: zero vector");
  return std::clamp(dot / (nx * ny), -1.0, 1.0);
}

double cosine_distance(const FeatureVector& x, const FeatureVector& y) {
  return 1.0 - cosine_similarity(x, y);
}

std::vector<FeatureVector> EmbeddingProvider::embed_batch(
    const std::vector<std::string>& texts) {
  std::vector<FeatureVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed(t));
  return out;
}

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

std::uint64_t fnv1a(const std::string& s, std::uint64_t h = kFnvOffset) {
  for (unsigned char c : s) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

}  // namespace

HashedTrigramEmbedder::HashedTrigramEmbedder(std::size_t dim) : dim_(dim) {
  if (dim_ < 2) throw std::invalid_argument("embedding dimension must be >= 2");
  id_ = "hashed-trigram-" + std::to_string(dim_);
}

FeatureVector HashedTrigramEmbedder::embed(const std::string& text) {
  if (text.empty()) throw std::invalid_argument("embed: empty text");
  std::string lower;
  lower.reserve(text.size());
  for (unsigned char c : text)
    lower.push_back(static_cast<char>(std::tolower(c)));

  FeatureVector fv;
  fv.provider_id = id_;
  fv.values.assign(dim_, 0.0);
  if (lower.size() < 3) {
    fv.values[fnv1a(lower) % dim_] += 1.0;
  } else {
    for (std::size_t i = 0; i + 3 <= lower.size(); ++i)
      fv.values[fnv1a(lower.substr(i, 3)) % dim_] += 1.0;
  }
  const double n = fv.norm();
  for (double& v : fv.values) v /= n;
  return fv;
}

RemoteEmbedder::RemoteEmbedder(Config config) : config_(std::move(config)) {
  if (config_.base_url.empty())
    throw std::invalid_argument("remote embedder: base_url not configured");
}

std::string RemoteEmbedder::provider_id() const {
  return "remote:" + config_.model;
}

FeatureVector RemoteEmbedder::embed(const std::string& text) {
  return embed_batch({text}).front();
}

std::vector<FeatureVector> RemoteEmbedder::embed_batch(
    const std::vector<std::string>& texts) {
  json body;
  body["input"] = texts;
  body["model"] = config_.model;

  httplib::Client client(config_.base_url);
  client.set_read_timeout(config_.timeout_seconds, 0);
  httplib::Headers headers;
  if (!config_.auth_token.empty())
    headers.emplace("Authorization", "Bearer " + config_.auth_token);

  std::string last_error;
  for (int attempt = 0; attempt < std::max(1, config_.max_retries); ++attempt) {
    auto res = client.Post(config_.path, headers, body.dump(), "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 401 || res->status == 403)
      throw ProviderError("embedding auth failure: HTTP " +
                              std::to_string(res->status),
                          /*retryable=*/false);
    if (res->status != 200) {
      last_error = "HTTP " + std::to_string(res->status) + ": " + res->body;
      continue;
    }
    json parsed = json::parse(res->body);
    std::vector<FeatureVector> out;
    for (const auto& item : parsed.at("data")) {
      FeatureVector fv;
      fv.provider_id = provider_id();
      fv.values = item.at("embedding").get<std::vector<double>>();
      if (dim_ == 0) dim_ = fv.values.size();
      if (fv.values.size() != dim_)
        throw ProviderError("embedding dimension drift from provider",
                            /*retryable=*/false);
      out.push_back(std::move(fv));
    }
    if (out.size() != texts.size())
      throw ProviderError("embedding count mismatch from provider",
                          /*retryable=*/false);
    return out;
  }
  throw ProviderError("embedding request failed after retries: " + last_error,
                      /*retryable=*/true);
}

CachedEmbedder::CachedEmbedder(std::shared_ptr<EmbeddingProvider> inner,
                               std::string cache_path)
    : inner_(std::move(inner)), cache_path_(std::move(cache_path)) {
  load();
}

CachedEmbedder::~CachedEmbedder() = default;

void CachedEmbedder::load() {
  std::ifstream in(cache_path_);
  if (!in) return;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json obj = json::parse(line);
    if (obj.value("provider", "") != inner_->provider_id()) continue;
    FeatureVector fv;
    fv.provider_id = inner_->provider_id();
    fv.values = obj.at("embedding").get<std::vector<double>>();
    cache_.emplace(obj.at("text").get<std::string>(), std::move(fv));
  }
}

FeatureVector CachedEmbedder::embed(const std::string& text) {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = cache_.find(text);
    if (it != cache_.end()) return it->second;
  }
  FeatureVector fv = inner_->embed(text);
  std::lock_guard<std::mutex> lock(mutex_);
  auto [it, inserted] = cache_.emplace(text, fv);
  if (inserted) {
    std::ofstream out(cache_path_, std::ios::app);
    if (out) {
      json obj;
      obj["provider"] = inner_->provider_id();
      obj["text"] = text;
      obj["embedding"] = fv.values;
      out << obj.dump() << '\n';
    }
  }
  return it->second;
}

}  // namespace framemix
