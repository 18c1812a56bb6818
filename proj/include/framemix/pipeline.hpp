#pragma once
// End-to-end pipeline: resolved configuration, seeded stage functions and
// the file artifacts they exchange. Stages communicate only via JSONL/CSV
// so each is independently testable and resumable.

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "framemix/frame_model.hpp"
#include "framemix/hypergraph.hpp"
#include "framemix/linkpred.hpp"
#include "framemix/llm_pipeline.hpp"
#include "framemix/metrics.hpp"
#include "framemix/mixup.hpp"
#include "framemix/temporal.hpp"

namespace framemix {

struct PipelineConfig {
  std::size_t k = 4;
  double gamma = 1.0;
  double alpha = 0.85;
  double epsilon_ball = 0.8;
  double epsilon_temporal = 0.8;
  std::size_t topk = 5;
  double mix_ratio = 0.25;
  double tau = 0.8;
  double attribution_theta = 0.5;
  double cnc_alpha = 0.8;
  std::uint64_t seed = 7;

  std::size_t embedding_dim = 64;
  std::string embedding_provider = "hashed-trigram";  // or "remote"
  std::string embedding_base_url;
  std::string embedding_model;
  std::string embedding_cache_path;

  std::string llm_provider = "mock-echo";  // "mock-echo" or "http"
  std::string llm_base_url;
  std::string llm_model;

  std::string prompt_pack_path;  // empty = built-in defaults
  std::string control = "mixups";
  std::string intimacy_mode = "literal";  // or "iterative"
  std::string mine_method = "hypergraph";  // or a linkpred method name
  std::string temporal_lineage = "prefix";  // "prefix" (document id stem) or "corpus"
  bool annotate_temporal = false;

  // Flat key = value text file; unknown keys are errors.
  static PipelineConfig load(const std::string& path);
  void save(const std::string& path) const;
  void apply(const std::string& key, const std::string& value);

  std::string canonical() const;  // deterministic serialization
  std::string hash() const;       // FNV-1a hex of canonical()

  std::shared_ptr<EmbeddingProvider> make_embedding_provider() const;
  std::unique_ptr<CompletionClient> make_completion_client() const;
  PromptPack load_prompt_pack() const;
};

namespace pipeline {

struct BuildResult {
  Hypergraph graph;
  AffinityMatrix affinity;
  DenseMatrix a_bar;
  IntimacyMatrix intimacy;
};

BuildResult build(const Corpus& corpus, EmbeddingProvider& provider,
                  const PipelineConfig& config);

// Seeded pair selection: per document, a mix_ratio fraction of its frames
// (in corpus order) each draws one partner from its candidate list with
// probability proportional to intimacy score. Masks use splittable
// per-pair seeds so the result is deterministic for a fixed config + seed.
std::vector<MixPair> select_mix_pairs(const Corpus& corpus, const Hypergraph& graph,
                                      const AffinityMatrix& affinity,
                                      const IntimacyMatrix& intimacy,
                                      const PipelineConfig& config);

// Same selection driven by a link-prediction baseline ranking; the pairs
// feed the identical mix machinery.
std::vector<MixPair> select_mix_pairs_linkpred(const Corpus& corpus,
                                               const Hypergraph& graph,
                                               const AffinityMatrix& affinity,
                                               LinkPredMethod method,
                                               const PipelineConfig& config);

void save_mined_frames(const std::vector<MinedFrame>& mined, const std::string& path,
                       const std::string& meta_comment);
std::vector<MinedFrame> load_mined_frames(const std::string& path,
                                          const FrameSchema& schema);

// One job per document for the configured control attribute. Mined frames
// are appended to a document's frame list only under the "mixups" control.
std::vector<GenerationJob> generate(const Corpus& corpus,
                                    const std::vector<MinedFrame>& mined,
                                    const PipelineConfig& config,
                                    CompletionClient& client, RunLog* run_log,
                                    const std::map<std::string, std::string>&
                                        temporal_annotations_by_frame = {});

std::vector<MetricReport> evaluate(const Corpus& corpus,
                                   const std::vector<GenerationJob>& jobs,
                                   const std::vector<MinedFrame>& mined,
                                   EmbeddingProvider& provider,
                                   const PipelineConfig& config,
                                   const std::string& attribution_out_path = "");

// Documents grouped into lineages (same company over the years); per
// lineage: frame histories and a year-over-year heatmap.
std::vector<std::pair<std::string, std::vector<const Document*>>> lineages(
    const Corpus& corpus, const PipelineConfig& config);

struct TemporalResult {
  std::string lineage;
  std::vector<FrameHistory> histories;
  std::vector<TemporalClass> classes;
  TemporalHeatmap heatmap;
};

std::vector<TemporalResult> temporal_analysis(const Corpus& corpus,
                                              EmbeddingProvider& provider,
                                              const PipelineConfig& config);

void save_histories_jsonl(const std::vector<TemporalResult>& results,
                          const std::string& path, const std::string& meta_comment);

}  // namespace pipeline

}  // namespace framemix
