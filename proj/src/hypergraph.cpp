#include "framemix/hypergraph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace framemix {

using nlohmann::json;

double DenseMatrix::row_sum(std::size_t i) const {
  double s = 0.0;
  for (std::size_t j = 0; j < cols_; ++j) s += at(i, j);
  return s;
}

std::size_t Hypergraph::intern_vertex(const std::string& role, const std::string& text,
                                      EmbeddingProvider* provider) {
  auto key = std::make_pair(role, text);
  auto it = vertex_by_key_.find(key);
  if (it != vertex_by_key_.end()) return it->second;
  if (!provider)
    throw std::runtime_error("mined hyperedge introduces new vertex (" + role + ", " +
                             text + ")");
  FrameElementNode node{role, text, provider->embed(text)};
  vertices_.push_back(std::move(node));
  vertex_by_key_.emplace(key, vertices_.size() - 1);
  return vertices_.size() - 1;
}

void Hypergraph::add_original(const Frame& frame, EmbeddingProvider& provider) {
  auto v = validate_frame(frame, schema_);
  if (!v.ok())
    throw std::invalid_argument("invalid frame " + frame.frame_id.value + ": " +
                                v.violations.front().message);
  if (edge_by_id_.count(frame.frame_id.value))
    throw std::invalid_argument("duplicate hyperedge id " + frame.frame_id.value);
  std::vector<std::size_t> inc;
  inc.reserve(frame.elements.size());
  for (const auto& el : frame.elements)
    inc.push_back(intern_vertex(el.role, el.text, &provider));
  edges_.push_back(frame);
  origins_.push_back(EdgeOrigin::original);
  parents_.push_back(std::nullopt);
  incidence_.push_back(std::move(inc));
  edge_by_id_.emplace(frame.frame_id.value, edges_.size() - 1);
}

void Hypergraph::add_mined(const Frame& frame, const FrameId& parent1,
                           const FrameId& parent2) {
  auto v = validate_frame(frame, schema_);
  if (!v.ok())
    throw std::invalid_argument("invalid mined frame " + frame.frame_id.value + ": " +
                                v.violations.front().message);
  if (edge_by_id_.count(frame.frame_id.value))
    throw std::invalid_argument("duplicate hyperedge id " + frame.frame_id.value);
  if (!has_edge(parent1) || !has_edge(parent2))
    throw std::invalid_argument("mined frame " + frame.frame_id.value +
                                " has unknown parent");
  std::vector<std::size_t> inc;
  inc.reserve(frame.elements.size());
  for (const auto& el : frame.elements)
    inc.push_back(intern_vertex(el.role, el.text, nullptr));
  edges_.push_back(frame);
  origins_.push_back(EdgeOrigin::mined);
  parents_.push_back(std::make_pair(parent1, parent2));
  incidence_.push_back(std::move(inc));
  edge_by_id_.emplace(frame.frame_id.value, edges_.size() - 1);
}

std::vector<FeatureVector> Hypergraph::edge_features(std::size_t e) const {
  std::vector<FeatureVector> out;
  out.reserve(incidence_[e].size());
  for (std::size_t v : incidence_[e]) out.push_back(vertices_[v].features);
  return out;
}

std::size_t Hypergraph::edge_index(const FrameId& id) const {
  auto it = edge_by_id_.find(id.value);
  if (it == edge_by_id_.end())
    throw std::out_of_range("unknown hyperedge id " + id.value);
  return it->second;
}

bool Hypergraph::has_edge(const FrameId& id) const {
  return edge_by_id_.count(id.value) > 0;
}

void Hypergraph::export_dot(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dot file: " + path);
  out << "graph hypergraph {\n";
  for (std::size_t v = 0; v < vertices_.size(); ++v) {
    std::string label = vertices_[v].role + ": " + vertices_[v].text;
    std::string escaped;
    for (char c : label) {
      if (c == '"' || c == '\\') escaped.push_back('\\');
      escaped.push_back(c);
    }
    out << "  v" << v << " [shape=circle label=\"" << escaped << "\"];\n";
  }
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    out << "  e" << e << " [shape=box label=\"" << edges_[e].frame_id.value
        << (origins_[e] == EdgeOrigin::mined ? " (mined)" : "") << "\"];\n";
    for (std::size_t v : incidence_[e]) out << "  e" << e << " -- v" << v << ";\n";
  }
  out << "}\n";
}

void Hypergraph::export_jsonl(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write hypergraph snapshot: " + path);
  for (std::size_t v = 0; v < vertices_.size(); ++v) {
    json obj;
    obj["kind"] = "vertex";
    obj["index"] = v;
    obj["role"] = vertices_[v].role;
    obj["text"] = vertices_[v].text;
    out << obj.dump() << '\n';
  }
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    json obj;
    obj["kind"] = "hyperedge";
    obj["id"] = edges_[e].frame_id.value;
    obj["document_id"] = edges_[e].document_id;
    if (edges_[e].time_index) obj["time_index"] = *edges_[e].time_index;
    obj["vertices"] = incidence_[e];
    obj["origin"] = origins_[e] == EdgeOrigin::mined ? "mined" : "original";
    if (parents_[e])
      obj["parents"] = {parents_[e]->first.value, parents_[e]->second.value};
    out << obj.dump() << '\n';
  }
}

Hypergraph build_hypergraph(const Corpus& corpus, EmbeddingProvider& provider) {
  Hypergraph g(corpus.schema);
  for (const auto& f : corpus.frames) g.add_original(f, provider);
  return g;
}

double pairwise_affinity(const std::vector<FeatureVector>& x1,
                         const std::vector<FeatureVector>& x2, double gamma,
                         double w) {
  if (x1.size() != x2.size())
    throw std::invalid_argument("pairwise_affinity: arity mismatch");
  if (gamma <= 0.0) throw std::invalid_argument("gamma must be > 0");
  if (w < 0.0) throw std::invalid_argument("hierarchy weight must be >= 0");
  double sum = 0.0;
  for (std::size_t k = 0; k < x1.size(); ++k)
    sum += std::exp(-gamma * cosine_distance(x1[k], x2[k]));
  return w * sum;
}

AffinityMatrix affinity_matrix(const Hypergraph& g, double gamma,
                               const HierarchyWeights& weights, bool temporal) {
  const std::size_t n = g.edge_count();
  AffinityMatrix a;
  a.gamma = gamma;
  a.hierarchy_applied = !weights.empty();
  a.temporal = temporal;
  a.entries = DenseMatrix(n, n);
  a.edge_ids.reserve(n);
  for (std::size_t e = 0; e < n; ++e) a.edge_ids.push_back(g.edge(e).frame_id);

  std::vector<std::vector<FeatureVector>> feats(n);
  for (std::size_t e = 0; e < n; ++e) feats[e] = g.edge_features(e);

  // Upper triangle only; the kernel is symmetric in the pair.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double w = weights.weight(g.edge(i).document_id, g.edge(j).document_id);
      const double v = pairwise_affinity(feats[i], feats[j], gamma, w);
      a.entries.at(i, j) = v;
      a.entries.at(j, i) = v;
    }
  }
  return a;
}

DenseMatrix normalize(const AffinityMatrix& a) {
  const std::size_t n = a.entries.rows();
  DenseMatrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = a.entries.row_sum(i);
    if (s <= 0.0)
      throw std::runtime_error("normalize: nonpositive row sum at row " +
                               std::to_string(i));
    for (std::size_t j = 0; j < n; ++j) out.at(i, j) = a.entries.at(i, j) / s;
  }
  return out;
}

IntimacyMatrix intimacy(const DenseMatrix& a_bar, const std::vector<FrameId>& edge_ids,
                        double alpha, IntimacyMode mode) {
  if (alpha < 0.0 || alpha > 1.0)
    throw std::invalid_argument("alpha must be in [0, 1]");
  const std::size_t n = a_bar.rows();
  if (n == 0) throw std::invalid_argument("intimacy: empty matrix");
  const double teleport = (1.0 - alpha) / static_cast<double>(n);

  IntimacyMatrix s;
  s.alpha = alpha;
  s.edge_ids = edge_ids;

  if (mode == IntimacyMode::literal) {
    s.mode = "literal";
    s.entries = DenseMatrix(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        s.entries.at(i, j) = alpha * a_bar.at(i, j) + teleport;
    return s;
  }

  s.mode = "iterative";
  DenseMatrix cur(n, n, 1.0 / static_cast<double>(n));
  for (int iter = 0; iter < 100; ++iter) {
    DenseMatrix next(n, n, teleport);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) {
        const double c = alpha * cur.at(i, k);
        if (c == 0.0) continue;
        for (std::size_t j = 0; j < n; ++j) next.at(i, j) += c * a_bar.at(k, j);
      }
    double delta = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        delta = std::max(delta, std::abs(next.at(i, j) - cur.at(i, j)));
    cur = std::move(next);
    if (delta < 1e-10) break;
  }
  s.entries = std::move(cur);
  return s;
}

std::vector<Candidate> candidates(const Hypergraph& g, const AffinityMatrix& affinity,
                                  const IntimacyMatrix& s, const FrameId& source,
                                  std::size_t topk, double epsilon_ball,
                                  const HierarchyWeights& weights) {
  if (topk < 1) throw std::invalid_argument("topk must be >= 1");
  const std::size_t src = g.edge_index(source);
  const std::size_t n = g.edge_count();
  const double k_arity = static_cast<double>(g.schema().arity());
  const Frame& sf = g.edge(src);

  std::vector<Candidate> out;
  for (std::size_t e = 0; e < n; ++e) {
    if (e == src) continue;
    const Frame& ef = g.edge(e);
    const bool same_doc = ef.document_id == sf.document_id;
    if (affinity.temporal) {
      // Cross-time frames of the same lineage stay eligible.
      if (same_doc && ef.time_index == sf.time_index) continue;
    } else if (same_doc) {
      continue;
    }
    const double w = weights.weight(sf.document_id, ef.document_id);
    if (w <= 0.0) continue;
    // Inside the epsilon ball iff the mean per-element kernel similarity
    // reaches epsilon; K*w is the maximum attainable affinity for the pair.
    if (affinity.entries.at(src, e) / (k_arity * w) < epsilon_ball) continue;
    out.push_back({ef.frame_id, s.entries.at(src, e)});
  }
  std::sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.edge_id.value < b.edge_id.value;
  });
  if (out.size() > topk) out.resize(topk);
  return out;
}

void export_matrix_csv(const DenseMatrix& m, const std::vector<FrameId>& ids,
                       const std::string& path, const std::string& header_comment) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write matrix csv: " + path);
  out.precision(17);
  if (!header_comment.empty()) out << "# " << header_comment << '\n';
  out << "id";
  for (const auto& id : ids) out << ',' << id.value;
  out << '\n';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    out << ids[i].value;
    for (std::size_t j = 0; j < m.cols(); ++j) out << ',' << m.at(i, j);
    out << '\n';
  }
}

}  // namespace framemix
