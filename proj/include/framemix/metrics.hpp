#pragma once
// Evaluation suite: lexical/semantic similarity, diversity, coherence of
// mixup-derived sentences, mix-diversity provenance tallies and per-sentence
// frame attribution.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "framemix/embedding.hpp"
#include "framemix/frame_model.hpp"
#include "framemix/mixup.hpp"

namespace framemix {

std::vector<std::string> tokenize(const std::string& text);

// Sentence boundaries: newline, or ./?/! followed by whitespace and an
// uppercase start, with an abbreviation guard. Recorded behavior since every
// sentence-level metric depends on it.
std::vector<std::string> split_sentences(const std::string& text);

// Corpus-style BLEU of generated against original: geometric mean of
// modified n-gram precisions (n = 1..max_n) with brevity penalty.
double lexical_similarity(const std::string& original, const std::string& generated,
                          int max_n = 4);

enum class Granularity { word, sentence };

// word: cosine of mean token-embedding vectors. sentence: mean over
// generated sentences of the max cosine against any original sentence.
double semantic_similarity(const std::string& original, const std::string& generated,
                           Granularity granularity, EmbeddingProvider& provider);

struct DiversityScores {
  double lexical = 0.0;            // fraction of generated n-grams absent from original
  double semantic_word = 0.0;      // (1 - sim) / 2
  double semantic_sentence = 0.0;  // (1 - sim) / 2
};

DiversityScores diversity(const std::string& original, const std::string& generated,
                          EmbeddingProvider& provider);

struct SentenceLink {
  int sentence_index = 0;
  std::string sentence;
  std::string best_frame_id;
  double score = 0.0;
  bool attributed = false;  // best score >= theta
};

struct Attribution {
  std::vector<SentenceLink> sentences;
  std::map<std::string, bool> covered;  // frame id -> covered flag
};

// Links each generated sentence to its argmax-cosine frame (rendered as
// concatenated element texts); a frame is covered iff some sentence links
// to it with score >= theta.
Attribution attribute_frames(const std::string& generated,
                             const std::vector<Frame>& frames,
                             EmbeddingProvider& provider, double theta = 0.5);

// Mean pairwise sentence-embedding cosine between mined-frame sentences and
// an equal count of original-frame sentences, rescaled to [0, 1]. Absent
// when the generation has no mined-frame sentences.
std::optional<double> coherence(const std::string& generated,
                                const std::vector<Frame>& frames,
                                const std::set<std::string>& mined_frame_ids,
                                EmbeddingProvider& provider, double theta = 0.5);

struct MixDiversity {
  double document = 0.0;
  double topic = 0.0;
  double content = 0.0;
};

// Provenance tallies for one document's final frame set (originals plus
// mined). `document_of_frame` resolves mined parents to their documents.
MixDiversity mix_diversity(const std::vector<Frame>& original_frames,
                           const std::vector<Frame>& final_frames,
                           const std::vector<MinedFrame>& mined_provenance,
                           const std::map<std::string, std::string>& document_of_frame,
                           const std::string& self_document_id,
                           std::size_t corpus_document_count,
                           const FrameSchema& schema);

struct MetricReport {
  std::string document_id;
  std::string control;
  double lexical_similarity = 0.0;
  double semantic_word_similarity = 0.0;
  double semantic_sentence_similarity = 0.0;
  DiversityScores diversity;
  std::optional<double> coherence;
  MixDiversity mix;
  std::string embedding_provider;
};

void export_reports_csv(const std::vector<MetricReport>& reports,
                        const std::string& path,
                        const std::string& header_comment = "");
void export_reports_json(const std::vector<MetricReport>& reports,
                         const std::string& path);
void export_attribution_jsonl(const Attribution& attribution, const std::string& job_id,
                              const std::string& path);

// Optional external fluency scorer hook: POST {"text": ...} -> {"score": x}.
struct FluencyScorerConfig {
  std::string base_url;
  std::string path = "/score";
  std::string auth_token;
  int timeout_seconds = 30;
};
double remote_fluency_score(const std::string& text, const FluencyScorerConfig& config);

}  // namespace framemix
