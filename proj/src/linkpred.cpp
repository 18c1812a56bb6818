#include "framemix/linkpred.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <stdexcept>

namespace framemix {

LinkPredMethod link_pred_method_from_string(const std::string& name) {
  if (name == "jaccard") return LinkPredMethod::jaccard;
  if (name == "preferential_attachment") return LinkPredMethod::preferential_attachment;
  if (name == "adamic_adar") return LinkPredMethod::adamic_adar;
  if (name == "resource_allocation") return LinkPredMethod::resource_allocation;
  if (name == "common_neighbor_centrality")
    return LinkPredMethod::common_neighbor_centrality;
  throw std::invalid_argument("unknown link prediction method: " + name);
}

std::string to_string(LinkPredMethod m) {
  switch (m) {
    case LinkPredMethod::jaccard: return "jaccard";
    case LinkPredMethod::preferential_attachment: return "preferential_attachment";
    case LinkPredMethod::adamic_adar: return "adamic_adar";
    case LinkPredMethod::resource_allocation: return "resource_allocation";
    case LinkPredMethod::common_neighbor_centrality:
      return "common_neighbor_centrality";
  }
  return "unknown";
}

void DyadicGraph::add_node(const std::string& id) {
  nodes_.insert(id);
  adjacency_[id];
}

void DyadicGraph::add_edge(const std::string& u, const std::string& v) {
  if (u == v) throw std::invalid_argument("self-loop rejected: " + u);
  add_node(u);
  add_node(v);
  adjacency_[u].insert(v);
  adjacency_[v].insert(u);
}

bool DyadicGraph::has_edge(const std::string& u, const std::string& v) const {
  auto it = adjacency_.find(u);
  return it != adjacency_.end() && it->second.count(v) > 0;
}

const std::set<std::string>& DyadicGraph::neighbors(const std::string& u) const {
  static const std::set<std::string> empty;
  auto it = adjacency_.find(u);
  return it == adjacency_.end() ? empty : it->second;
}

int DyadicGraph::distance(const std::string& u, const std::string& v) const {
  if (u == v) return 0;
  std::map<std::string, int> dist;
  std::deque<std::string> queue{u};
  dist[u] = 0;
  while (!queue.empty()) {
    const std::string cur = queue.front();
    queue.pop_front();
    for (const auto& next : neighbors(cur)) {
      if (dist.count(next)) continue;
      dist[next] = dist[cur] + 1;
      if (next == v) return dist[next];
      queue.push_back(next);
    }
  }
  return -1;
}

DyadicGraph project_dyadic(const Hypergraph& g, const AffinityMatrix& affinity,
                           double tau) {
  DyadicGraph graph;
  graph.projection_threshold = tau;
  const std::size_t n = g.edge_count();
  const double k_arity = static_cast<double>(g.schema().arity());
  for (std::size_t e = 0; e < n; ++e) graph.add_node(g.edge(e).frame_id.value);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (g.edge(i).document_id == g.edge(j).document_id) continue;
      if (affinity.entries.at(i, j) / k_arity >= tau)
        graph.add_edge(g.edge(i).frame_id.value, g.edge(j).frame_id.value);
    }
  }
  return graph;
}

namespace {

std::set<std::string> intersect(const std::set<std::string>& a,
                                const std::set<std::string>& b) {
  std::set<std::string> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::inserter(out, out.begin()));
  return out;
}

double score_pair(const DyadicGraph& g, LinkPredMethod method, const std::string& u,
                  const std::string& v, double cnc_alpha) {
  const auto& nu = g.neighbors(u);
  const auto& nv = g.neighbors(v);
  switch (method) {
    case LinkPredMethod::jaccard: {
      const auto common = intersect(nu, nv);
      std::set<std::string> uni = nu;
      uni.insert(nv.begin(), nv.end());
      return uni.empty() ? 0.0
                         : static_cast<double>(common.size()) /
                               static_cast<double>(uni.size());
    }
    case LinkPredMethod::preferential_attachment:
      return static_cast<double>(nu.size()) * static_cast<double>(nv.size());
    case LinkPredMethod::adamic_adar: {
      double s = 0.0;
      for (const auto& z : intersect(nu, nv)) {
        const std::size_t d = g.degree(z);
        if (d > 1) s += 1.0 / std::log(static_cast<double>(d));
      }
      return s;
    }
    case LinkPredMethod::resource_allocation: {
      double s = 0.0;
      for (const auto& z : intersect(nu, nv)) {
        const std::size_t d = g.degree(z);
        if (d > 0) s += 1.0 / static_cast<double>(d);
      }
      return s;
    }
    case LinkPredMethod::common_neighbor_centrality: {
      const double common = static_cast<double>(intersect(nu, nv).size());
      const int dist = g.distance(u, v);
      const double n = static_cast<double>(g.nodes().size());
      const double closeness = dist > 0 ? n / static_cast<double>(dist) : 0.0;
      return cnc_alpha * common + (1.0 - cnc_alpha) * closeness;
    }
  }
  throw std::logic_error("unreachable");
}

}  // namespace

std::vector<ScoredPair> score_links(const DyadicGraph& graph, LinkPredMethod method,
                                    const std::map<std::string, std::string>& document_of,
                                    double cnc_alpha) {
  if (graph.nodes().size() < 2)
    throw std::invalid_argument("score_links: need at least 2 nodes");
  std::vector<ScoredPair> out;
  const auto& nodes = graph.nodes();
  for (auto iu = nodes.begin(); iu != nodes.end(); ++iu) {
    for (auto iv = std::next(iu); iv != nodes.end(); ++iv) {
      if (graph.has_edge(*iu, *iv)) continue;
      if (!document_of.empty()) {
        auto du = document_of.find(*iu);
        auto dv = document_of.find(*iv);
        if (du != document_of.end() && dv != document_of.end() &&
            du->second == dv->second)
          continue;
      }
      out.push_back({*iu, *iv, score_pair(graph, method, *iu, *iv, cnc_alpha)});
    }
  }
  std::sort(out.begin(), out.end(), [](const ScoredPair& a, const ScoredPair& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.u != b.u) return a.u < b.u;
    return a.v < b.v;
  });
  return out;
}

void export_scored_pairs_csv(const std::vector<ScoredPair>& pairs,
                             LinkPredMethod method, const std::string& path,
                             const std::string& header_comment) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write scored pairs csv: " + path);
  out.precision(17);
  if (!header_comment.empty()) out << "# " << header_comment << '\n';
  out << "u,v,method,score\n";
  for (const auto& p : pairs)
    out << p.u << ',' << p.v << ',' << to_string(method) << ',' << p.score << '\n';
}

}  // namespace framemix
