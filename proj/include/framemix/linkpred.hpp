#pragma once
// Dyadic projection of the frame graph and classical link-prediction
// heuristics used as mining ablation baselines.

#include <map>
#include <set>
#include <string>
#include <vector>

#include "framemix/hypergraph.hpp"

namespace framemix {

enum class LinkPredMethod {
  jaccard,
  preferential_attachment,
  adamic_adar,
  resource_allocation,
  common_neighbor_centrality,
};

LinkPredMethod link_pred_method_from_string(const std::string& name);
std::string to_string(LinkPredMethod m);

class DyadicGraph {
 public:
  void add_node(const std::string& id);
  void add_edge(const std::string& u, const std::string& v);
  bool has_edge(const std::string& u, const std::string& v) const;
  const std::set<std::string>& nodes() const { return nodes_; }
  const std::set<std::string>& neighbors(const std::string& u) const;
  std::size_t degree(const std::string& u) const { return neighbors(u).size(); }
  // Unweighted shortest-path hop count; -1 when disconnected.
  int distance(const std::string& u, const std::string& v) const;
  double projection_threshold = 0.0;

 private:
  std::set<std::string> nodes_;
  std::map<std::string, std::set<std::string>> adjacency_;
};

// Edge (e, e') iff different documents and A(e, e') / K >= tau.
DyadicGraph project_dyadic(const Hypergraph& g, const AffinityMatrix& affinity,
                           double tau);

struct ScoredPair {
  std::string u, v;  // u < v lexicographically
  double score;
};

// Ranks currently-unconnected node pairs by the chosen heuristic, ties
// broken (score desc, pair lexicographic). `inter_document_of` maps a node
// to its document id; pairs within one document are skipped when supplied.
std::vector<ScoredPair> score_links(
    const DyadicGraph& graph, LinkPredMethod method,
    const std::map<std::string, std::string>& document_of = {},
    double cnc_alpha = 0.8);

void export_scored_pairs_csv(const std::vector<ScoredPair>& pairs,
                             LinkPredMethod method, const std::string& path,
                             const std::string& header_comment = "");

}  // namespace framemix
