#include "framemix/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include <httplib.h>
#include <json.hpp>

namespace framemix {

using nlohmann::json;

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

namespace {

const std::unordered_set<std::string>& abbreviations() {
  static const std::unordered_set<std::string> abbr = {
      "mr", "mrs", "ms", "dr", "prof", "inc", "co", "corp", "ltd",
      "vs", "etc", "no", "u.s", "e.g", "i.e", "fig", "st"};
  return abbr;
}

bool ends_with_abbreviation(const std::string& text, std::size_t dot) {
  std::size_t start = dot;
  while (start > 0 && (std::isalpha(static_cast<unsigned char>(text[start - 1])) ||
                       text[start - 1] == '.'))
    --start;
  std::string word = text.substr(start, dot - start);
  std::transform(word.begin(), word.end(), word.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return abbreviations().count(word) > 0;
}

}  // namespace

std::vector<std::string> split_sentences(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    std::size_t b = cur.find_first_not_of(" \t\r");
    if (b != std::string::npos) {
      std::size_t e = cur.find_last_not_of(" \t\r");
      out.push_back(cur.substr(b, e - b + 1));
    }
    cur.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '\n') {
      flush();
      continue;
    }
    cur.push_back(c);
    if (c == '.' || c == '?' || c == '!') {
      if (c == '.' && ends_with_abbreviation(text, i)) continue;
      std::size_t j = i + 1;
      while (j < text.size() && (text[j] == ' ' || text[j] == '\t')) ++j;
      if (j > i + 1 && j < text.size() &&
          std::isupper(static_cast<unsigned char>(text[j]))) {
        flush();
        i = j - 1;
      }
    }
  }
  flush();
  return out;
}

namespace {

// n-gram key: tokens joined with an unprintable separator.
std::string ngram_key(const std::vector<std::string>& tokens, std::size_t start,
                      std::size_t n) {
  std::string key;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) key.push_back('\x1f');
    key += tokens[start + i];
  }
  return key;
}

std::unordered_map<std::string, int> ngram_counts(const std::vector<std::string>& tokens,
                                                  std::size_t n) {
  std::unordered_map<std::string, int> counts;
  if (tokens.size() >= n)
    for (std::size_t i = 0; i + n <= tokens.size(); ++i)
      ++counts[ngram_key(tokens, i, n)];
  return counts;
}

FeatureVector mean_vector(const std::vector<FeatureVector>& vs) {
  FeatureVector mean;
  mean.provider_id = vs.front().provider_id;
  mean.values.assign(vs.front().dim(), 0.0);
  for (const auto& v : vs)
    for (std::size_t i = 0; i < v.dim(); ++i) mean.values[i] += v.values[i];
  for (double& x : mean.values) x /= static_cast<double>(vs.size());
  return mean;
}

std::string render_frame_text(const Frame& f) {
  std::string out;
  for (const auto& el : f.elements) {
    if (!out.empty()) out += ' ';
    out += el.text;
  }
  return out;
}

}  // namespace

double lexical_similarity(const std::string& original, const std::string& generated,
                          int max_n) {
  const auto ref = tokenize(original);
  const auto cand = tokenize(generated);
  if (ref.empty() || cand.empty()) return 0.0;

  double log_sum = 0.0;
  int used = 0;
  for (int n = 1; n <= max_n; ++n) {
    const auto cand_counts = ngram_counts(cand, static_cast<std::size_t>(n));
    if (cand_counts.empty()) continue;
    const auto ref_counts = ngram_counts(ref, static_cast<std::size_t>(n));
    long total = 0, clipped = 0;
    for (const auto& [gram, count] : cand_counts) {
      total += count;
      auto it = ref_counts.find(gram);
      if (it != ref_counts.end()) clipped += std::min(count, it->second);
    }
    if (clipped == 0) return 0.0;
    log_sum += std::log(static_cast<double>(clipped) / static_cast<double>(total));
    ++used;
  }
  if (used == 0) return 0.0;
  const double precision = std::exp(log_sum / used);
  const double bp =
      cand.size() >= ref.size()
          ? 1.0
          : std::exp(1.0 - static_cast<double>(ref.size()) /
                               static_cast<double>(cand.size()));
  return bp * precision;
}

double semantic_similarity(const std::string& original, const std::string& generated,
                           Granularity granularity, EmbeddingProvider& provider) {
  if (granularity == Granularity::word) {
    const auto orig_tokens = tokenize(original);
    const auto gen_tokens = tokenize(generated);
    if (orig_tokens.empty() || gen_tokens.empty())
      throw std::invalid_argument("semantic_similarity: empty text");
    return cosine_similarity(mean_vector(provider.embed_batch(orig_tokens)),
                             mean_vector(provider.embed_batch(gen_tokens)));
  }
  const auto orig_sents = split_sentences(original);
  const auto gen_sents = split_sentences(generated);
  if (orig_sents.empty() || gen_sents.empty())
    throw std::invalid_argument("semantic_similarity: empty text");
  const auto orig_vecs = provider.embed_batch(orig_sents);
  const auto gen_vecs = provider.embed_batch(gen_sents);
  double sum = 0.0;
  for (const auto& g : gen_vecs) {
    double best = -1.0;
    for (const auto& o : orig_vecs) best = std::max(best, cosine_similarity(g, o));
    sum += best;
  }
  return sum / static_cast<double>(gen_vecs.size());
}

DiversityScores diversity(const std::string& original, const std::string& generated,
                          EmbeddingProvider& provider) {
  DiversityScores d;
  const auto orig_tokens = tokenize(original);
  const auto gen_tokens = tokenize(generated);
  std::unordered_set<std::string> orig_grams, gen_grams;
  for (std::size_t n = 1; n <= 4; ++n) {
    for (const auto& [g, _] : ngram_counts(orig_tokens, n)) orig_grams.insert(g);
    for (const auto& [g, _] : ngram_counts(gen_tokens, n)) gen_grams.insert(g);
  }
  if (!gen_grams.empty()) {
    std::size_t novel = 0;
    for (const auto& g : gen_grams)
      if (!orig_grams.count(g)) ++novel;
    d.lexical = static_cast<double>(novel) / static_cast<double>(gen_grams.size());
  }
  d.semantic_word =
      (1.0 - semantic_similarity(original, generated, Granularity::word, provider)) /
      2.0;
  d.semantic_sentence =
      (1.0 -
       semantic_similarity(original, generated, Granularity::sentence, provider)) /
      2.0;
  return d;
}

Attribution attribute_frames(const std::string& generated,
                             const std::vector<Frame>& frames,
                             EmbeddingProvider& provider, double theta) {
  Attribution attr;
  for (const auto& f : frames) attr.covered[f.frame_id.value] = false;
  const auto sentences = split_sentences(generated);
  if (sentences.empty() || frames.empty()) return attr;

  std::vector<FeatureVector> frame_vecs;
  frame_vecs.reserve(frames.size());
  for (const auto& f : frames) frame_vecs.push_back(provider.embed(render_frame_text(f)));

  for (std::size_t s = 0; s < sentences.size(); ++s) {
    const auto sv = provider.embed(sentences[s]);
    double best = -2.0;
    std::size_t best_f = 0;
    for (std::size_t f = 0; f < frames.size(); ++f) {
      const double c = cosine_similarity(sv, frame_vecs[f]);
      if (c > best) {
        best = c;
        best_f = f;
      }
    }
    SentenceLink link;
    link.sentence_index = static_cast<int>(s);
    link.sentence = sentences[s];
    link.best_frame_id = frames[best_f].frame_id.value;
    link.score = best;
    link.attributed = best >= theta;
    if (link.attributed) attr.covered[link.best_frame_id] = true;
    attr.sentences.push_back(std::move(link));
  }
  return attr;
}

std::optional<double> coherence(const std::string& generated,
                                const std::vector<Frame>& frames,
                                const std::set<std::string>& mined_frame_ids,
                                EmbeddingProvider& provider, double theta) {
  const auto attr = attribute_frames(generated, frames, provider, theta);
  std::vector<const SentenceLink*> mined_sents, orig_sents;
  for (const auto& link : attr.sentences) {
    if (mined_frame_ids.count(link.best_frame_id))
      mined_sents.push_back(&link);
    else
      orig_sents.push_back(&link);
  }
  if (mined_sents.empty() || orig_sents.empty()) return std::nullopt;

  // Equal count of original-attributed sentences, strongest attribution first.
  std::sort(orig_sents.begin(), orig_sents.end(),
            [](const SentenceLink* a, const SentenceLink* b) {
              if (a->score != b->score) return a->score > b->score;
              return a->sentence_index < b->sentence_index;
            });
  if (orig_sents.size() > mined_sents.size()) orig_sents.resize(mined_sents.size());

  double sum = 0.0;
  std::size_t pairs = 0;
  for (const auto* m : mined_sents) {
    const auto mv = provider.embed(m->sentence);
    for (const auto* o : orig_sents) {
      sum += cosine_similarity(mv, provider.embed(o->sentence));
      ++pairs;
    }
  }
  return (sum / static_cast<double>(pairs) + 1.0) / 2.0;
}

MixDiversity mix_diversity(const std::vector<Frame>& original_frames,
                           const std::vector<Frame>& final_frames,
                           const std::vector<MinedFrame>& mined_provenance,
                           const std::map<std::string, std::string>& document_of_frame,
                           const std::string& self_document_id,
                           std::size_t corpus_document_count,
                           const FrameSchema& schema) {
  MixDiversity out;
  if (mined_provenance.empty() || final_frames.size() <= original_frames.size())
    return out;

  // Document diversity: distinct foreign documents among mined parents.
  std::set<std::string> foreign_docs;
  for (const auto& m : mined_provenance) {
    for (const auto& pid : {m.parent1, m.parent2}) {
      auto it = document_of_frame.find(pid.value);
      if (it != document_of_frame.end() && it->second != self_document_id)
        foreign_docs.insert(it->second);
    }
  }
  if (corpus_document_count > 1)
    out.document = static_cast<double>(foreign_docs.size()) /
                   static_cast<double>(corpus_document_count - 1);

  const int cat = std::max(schema.role_index("category"), 0);
  std::set<std::string> orig_categories, final_categories;
  std::set<std::string> orig_content, final_content;
  for (const auto& f : original_frames) {
    orig_categories.insert(f.elements[cat].text);
    for (std::size_t k = 0; k < f.elements.size(); ++k)
      if (static_cast<int>(k) != cat)
        orig_content.insert(f.elements[k].role + "\x1f" + f.elements[k].text);
  }
  for (const auto& f : final_frames) {
    final_categories.insert(f.elements[cat].text);
    for (std::size_t k = 0; k < f.elements.size(); ++k)
      if (static_cast<int>(k) != cat)
        final_content.insert(f.elements[k].role + "\x1f" + f.elements[k].text);
  }

  std::size_t new_categories = 0;
  for (const auto& c : final_categories)
    if (!orig_categories.count(c)) ++new_categories;
  if (!final_categories.empty())
    out.topic = static_cast<double>(new_categories) /
                static_cast<double>(final_categories.size());

  std::size_t new_content = 0;
  for (const auto& c : final_content)
    if (!orig_content.count(c)) ++new_content;
  if (!final_content.empty())
    out.content =
        static_cast<double>(new_content) / static_cast<double>(final_content.size());
  return out;
}

void export_reports_csv(const std::vector<MetricReport>& reports,
                        const std::string& path, const std::string& header_comment) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write metric report csv: " + path);
  out.precision(17);
  if (!header_comment.empty()) out << "# " << header_comment << '\n';
  out << "document_id,control,lexical_similarity,semantic_word_similarity,"
         "semantic_sentence_similarity,lexical_diversity,semantic_word_diversity,"
         "semantic_sentence_diversity,coherence,document_diversity,topic_diversity,"
         "content_diversity,embedding_provider\n";
  for (const auto& r : reports) {
    out << r.document_id << ',' << r.control << ',' << r.lexical_similarity << ','
        << r.semantic_word_similarity << ',' << r.semantic_sentence_similarity << ','
        << r.diversity.lexical << ',' << r.diversity.semantic_word << ','
        << r.diversity.semantic_sentence << ',';
    if (r.coherence) out << *r.coherence;
    out << ',' << r.mix.document << ',' << r.mix.topic << ',' << r.mix.content << ','
        << r.embedding_provider << '\n';
  }
}

void export_reports_json(const std::vector<MetricReport>& reports,
                         const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write metric report json: " + path);
  json arr = json::array();
  for (const auto& r : reports) {
    json obj;
    obj["document_id"] = r.document_id;
    obj["control"] = r.control;
    obj["lexical_similarity"] = r.lexical_similarity;
    obj["semantic_word_similarity"] = r.semantic_word_similarity;
    obj["semantic_sentence_similarity"] = r.semantic_sentence_similarity;
    obj["lexical_diversity"] = r.diversity.lexical;
    obj["semantic_word_diversity"] = r.diversity.semantic_word;
    obj["semantic_sentence_diversity"] = r.diversity.semantic_sentence;
    // 0-100 display scale alongside the unit scale.
    obj["lexical_diversity_pct"] = 100.0 * r.diversity.lexical;
    obj["semantic_word_diversity_pct"] = 100.0 * r.diversity.semantic_word;
    obj["semantic_sentence_diversity_pct"] = 100.0 * r.diversity.semantic_sentence;
    if (r.coherence) obj["coherence"] = *r.coherence;
    obj["document_diversity"] = r.mix.document;
    obj["topic_diversity"] = r.mix.topic;
    obj["content_diversity"] = r.mix.content;
    obj["embedding_provider"] = r.embedding_provider;
    arr.push_back(obj);
  }
  out << arr.dump(2) << '\n';
}

void export_attribution_jsonl(const Attribution& attribution, const std::string& job_id,
                              const std::string& path) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("cannot write attribution jsonl: " + path);
  for (const auto& link : attribution.sentences) {
    json obj;
    obj["kind"] = "sentence_link";
    obj["job_id"] = job_id;
    obj["sentence_index"] = link.sentence_index;
    obj["sentence"] = link.sentence;
    obj["best_frame_id"] = link.best_frame_id;
    obj["score"] = link.score;
    obj["attributed"] = link.attributed;
    out << obj.dump() << '\n';
  }
  for (const auto& [frame_id, covered] : attribution.covered) {
    json obj;
    obj["kind"] = "frame_coverage";
    obj["job_id"] = job_id;
    obj["frame_id"] = frame_id;
    obj["covered"] = covered;
    out << obj.dump() << '\n';
  }
}

double remote_fluency_score(const std::string& text, const FluencyScorerConfig& config) {
  if (config.base_url.empty())
    throw ProviderError("fluency scorer: base_url not configured", false);
  httplib::Client client(config.base_url);
  client.set_read_timeout(config.timeout_seconds, 0);
  httplib::Headers headers;
  if (!config.auth_token.empty())
    headers.emplace("Authorization", "Bearer " + config.auth_token);
  json body;
  body["text"] = text;
  auto res = client.Post(config.path, headers, body.dump(), "application/json");
  if (!res)
    throw ProviderError("fluency scorer transport error", /*retryable=*/true);
  if (res->status != 200)
    throw ProviderError("fluency scorer HTTP " + std::to_string(res->status),
                        res->status >= 500);
  return json::parse(res->body).at("score").get<double>();
}

}  // namespace framemix
