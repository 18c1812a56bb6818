#pragma once
// K-uniform heterogeneous hypergraph over frame elements, pairwise
// Gaussian-kernel affinity, row normalization and the PageRank-damped
// intimacy matrix used to rank mixup candidates.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "framemix/embedding.hpp"
#include "framemix/frame_model.hpp"

namespace framemix {

class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& at(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double at(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  double row_sum(std::size_t i) const;

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

struct FrameElementNode {
  std::string role;
  std::string text;
  FeatureVector features;
};

enum class EdgeOrigin { original, mined };

class Hypergraph {
 public:
  explicit Hypergraph(FrameSchema schema) : schema_(std::move(schema)) {}

  // Embeds every element of `frame` and appends it as an original hyperedge.
  // Vertices are deduplicated by (role, text).
  void add_original(const Frame& frame, EmbeddingProvider& provider);

  // Mined hyperedges may only touch vertices that already exist.
  void add_mined(const Frame& frame, const FrameId& parent1, const FrameId& parent2);

  const FrameSchema& schema() const { return schema_; }
  std::size_t vertex_count() const { return vertices_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  const std::vector<FrameElementNode>& vertices() const { return vertices_; }
  const Frame& edge(std::size_t e) const { return edges_[e]; }
  EdgeOrigin origin(std::size_t e) const { return origins_[e]; }
  const std::optional<std::pair<FrameId, FrameId>>& parents(std::size_t e) const {
    return parents_[e];
  }
  // K vertex indices of hyperedge e, in schema role order.
  const std::vector<std::size_t>& incidence(std::size_t e) const {
    return incidence_[e];
  }
  const FeatureVector& element_features(std::size_t e, std::size_t k) const {
    return vertices_[incidence_[e][k]].features;
  }
  std::vector<FeatureVector> edge_features(std::size_t e) const;

  // Index of the hyperedge with this frame id; throws on unknown id.
  std::size_t edge_index(const FrameId& id) const;
  bool has_edge(const FrameId& id) const;

  void export_dot(const std::string& path) const;
  void export_jsonl(const std::string& path) const;

 private:
  std::size_t intern_vertex(const std::string& role, const std::string& text,
                            EmbeddingProvider* provider);
  FrameSchema schema_;
  std::vector<FrameElementNode> vertices_;
  std::map<std::pair<std::string, std::string>, std::size_t> vertex_by_key_;
  std::vector<Frame> edges_;
  std::vector<EdgeOrigin> origins_;
  std::vector<std::optional<std::pair<FrameId, FrameId>>> parents_;
  std::vector<std::vector<std::size_t>> incidence_;
  std::map<std::string, std::size_t> edge_by_id_;
};

// Builds the hypergraph from every frame of the corpus.
Hypergraph build_hypergraph(const Corpus& corpus, EmbeddingProvider& provider);

struct AffinityMatrix {
  DenseMatrix entries;
  std::vector<FrameId> edge_ids;
  double gamma = 1.0;
  bool hierarchy_applied = false;
  bool temporal = false;
};

struct IntimacyMatrix {
  DenseMatrix entries;
  std::vector<FrameId> edge_ids;
  double alpha = 0.85;
  std::string mode;  // "literal" or "iterative"
};

// Eq-style kernel sum: w * sum_k exp(-gamma * delta(x1_k, x2_k)).
double pairwise_affinity(const std::vector<FeatureVector>& x1,
                         const std::vector<FeatureVector>& x2, double gamma,
                         double w = 1.0);

AffinityMatrix affinity_matrix(const Hypergraph& g, double gamma,
                               const HierarchyWeights& weights,
                               bool temporal = false);

// Row-stochastic rescaling; every row sum is positive because the diagonal
// self-affinity is K*w(i,i) > 0.
DenseMatrix normalize(const AffinityMatrix& a);

enum class IntimacyMode { literal, iterative };

// literal:   S = alpha * Abar + (1 - alpha) / |E|
// iterative: fixed point of S <- alpha * S * Abar + (1 - alpha) / |E|,
//            tolerance 1e-10, at most 100 iterations.
IntimacyMatrix intimacy(const DenseMatrix& a_bar, const std::vector<FrameId>& edge_ids,
                        double alpha, IntimacyMode mode = IntimacyMode::literal);

struct Candidate {
  FrameId edge_id;
  double score;
};

// Top-k most intimate hyperedges for `source`, excluding the source itself,
// same-document hyperedges (same-document AND same time slice when the
// affinity was built temporally) and anything outside the epsilon ball
// A(source, e') / (K * w) >= epsilon. Ties break (score desc, id asc).
std::vector<Candidate> candidates(const Hypergraph& g, const AffinityMatrix& affinity,
                                  const IntimacyMatrix& s, const FrameId& source,
                                  std::size_t topk, double epsilon_ball,
                                  const HierarchyWeights& weights);

void export_matrix_csv(const DenseMatrix& m, const std::vector<FrameId>& ids,
                       const std::string& path, const std::string& header_comment = "");

}  // namespace framemix
