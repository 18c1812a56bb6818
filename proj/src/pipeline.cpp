#include "framemix/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace framemix {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string format_double(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

}  // namespace

PipelineConfig PipelineConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  PipelineConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               ": expected key = value");
    cfg.apply(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return cfg;
}

void PipelineConfig::apply(const std::string& key, const std::string& value) {
  if (key == "k") k = std::stoul(value);
  else if (key == "gamma") gamma = std::stod(value);
  else if (key == "alpha") alpha = std::stod(value);
  else if (key == "epsilon_ball") epsilon_ball = std::stod(value);
  else if (key == "epsilon_temporal") epsilon_temporal = std::stod(value);
  else if (key == "topk") topk = std::stoul(value);
  else if (key == "mix_ratio") mix_ratio = std::stod(value);
  else if (key == "tau") tau = std::stod(value);
  else if (key == "attribution_theta") attribution_theta = std::stod(value);
  else if (key == "cnc_alpha") cnc_alpha = std::stod(value);
  else if (key == "seed") seed = std::stoull(value);
  else if (key == "embedding_dim") embedding_dim = std::stoul(value);
  else if (key == "embedding_provider") embedding_provider = value;
  else if (key == "embedding_base_url") embedding_base_url = value;
  else if (key == "embedding_model") embedding_model = value;
  else if (key == "embedding_cache_path") embedding_cache_path = value;
  else if (key == "llm_provider") llm_provider = value;
  else if (key == "llm_base_url") llm_base_url = value;
  else if (key == "llm_model") llm_model = value;
  else if (key == "prompt_pack_path") prompt_pack_path = value;
  else if (key == "control") control = value;
  else if (key == "intimacy_mode") intimacy_mode = value;
  else if (key == "mine_method") mine_method = value;
  else if (key == "temporal_lineage") temporal_lineage = value;
  else if (key == "annotate_temporal") annotate_temporal = value == "true" || value == "1";
  else throw std::runtime_error("unknown config key: " + key);
}

std::string PipelineConfig::canonical() const {
  std::ostringstream ss;
  ss << "k = " << k << '\n'
     << "gamma = " << format_double(gamma) << '\n'
     << "alpha = " << format_double(alpha) << '\n'
     << "epsilon_ball = " << format_double(epsilon_ball) << '\n'
     << "epsilon_temporal = " << format_double(epsilon_temporal) << '\n'
     << "topk = " << topk << '\n'
     << "mix_ratio = " << format_double(mix_ratio) << '\n'
     << "tau = " << format_double(tau) << '\n'
     << "attribution_theta = " << format_double(attribution_theta) << '\n'
     << "cnc_alpha = " << format_double(cnc_alpha) << '\n'
     << "seed = " << seed << '\n'
     << "embedding_dim = " << embedding_dim << '\n'
     << "embedding_provider = " << embedding_provider << '\n'
     << "embedding_base_url = " << embedding_base_url << '\n'
     << "embedding_model = " << embedding_model << '\n'
     << "embedding_cache_path = " << embedding_cache_path << '\n'
     << "llm_provider = " << llm_provider << '\n'
     << "llm_base_url = " << llm_base_url << '\n'
     << "llm_model = " << llm_model << '\n'
     << "prompt_pack_path = " << prompt_pack_path << '\n'
     << "control = " << control << '\n'
     << "intimacy_mode = " << intimacy_mode << '\n'
     << "mine_method = " << mine_method << '\n'
     << "temporal_lineage = " << temporal_lineage << '\n'
     << "annotate_temporal = " << (annotate_temporal ? "true" : "false") << '\n';
  return ss.str();
}

void PipelineConfig::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config: " + path);
  out << canonical();
}

std::string PipelineConfig::hash() const {
  std::ostringstream ss;
  ss << std::hex << fnv1a(canonical());
  return ss.str();
}

std::shared_ptr<EmbeddingProvider> PipelineConfig::make_embedding_provider() const {
  std::shared_ptr<EmbeddingProvider> provider;
  if (embedding_provider == "hashed-trigram") {
    provider = std::make_shared<HashedTrigramEmbedder>(embedding_dim);
  } else if (embedding_provider == "remote") {
    RemoteEmbedder::Config rc;
    rc.base_url = embedding_base_url;
    rc.model = embedding_model;
    if (const char* token = std::getenv("FRAMEMIX_EMBEDDING_TOKEN"))
      rc.auth_token = token;
    provider = std::make_shared<RemoteEmbedder>(rc);
  } else {
    throw std::runtime_error("unknown embedding provider: " + embedding_provider);
  }
  if (!embedding_cache_path.empty())
    provider = std::make_shared<CachedEmbedder>(provider, embedding_cache_path);
  return provider;
}

std::unique_ptr<CompletionClient> PipelineConfig::make_completion_client() const {
  if (llm_provider == "mock-echo") return std::make_unique<EchoCompletionClient>();
  if (llm_provider == "http") {
    HttpCompletionClient::Config cc;
    cc.base_url = llm_base_url;
    cc.model = llm_model;
    if (const char* token = std::getenv("FRAMEMIX_LLM_TOKEN")) cc.auth_token = token;
    return std::make_unique<HttpCompletionClient>(cc);
  }
  throw std::runtime_error("unknown llm provider: " + llm_provider);
}

PromptPack PipelineConfig::load_prompt_pack() const {
  return prompt_pack_path.empty() ? PromptPack::defaults()
                                  : PromptPack::load(prompt_pack_path);
}

namespace pipeline {

BuildResult build(const Corpus& corpus, EmbeddingProvider& provider,
                  const PipelineConfig& config) {
  if (corpus.schema.arity() != config.k)
    throw std::runtime_error("schema arity " + std::to_string(corpus.schema.arity()) +
                             " does not match configured k=" + std::to_string(config.k));
  Hypergraph graph = build_hypergraph(corpus, provider);
  AffinityMatrix affinity =
      affinity_matrix(graph, config.gamma, corpus.hierarchy, /*temporal=*/false);
  DenseMatrix a_bar = normalize(affinity);
  IntimacyMatrix s = intimacy(a_bar, affinity.edge_ids, config.alpha,
                              config.intimacy_mode == "iterative"
                                  ? IntimacyMode::iterative
                                  : IntimacyMode::literal);
  return {std::move(graph), std::move(affinity), std::move(a_bar), std::move(s)};
}

namespace {

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

// Weighted draw proportional to candidate intimacy scores.
const Candidate& draw_candidate(const std::vector<Candidate>& cands,
                                std::mt19937_64& rng) {
  double total = 0.0;
  for (const auto& c : cands) total += c.score;
  if (total <= 0.0) return cands.front();
  double r = uniform01(rng) * total;
  for (const auto& c : cands) {
    r -= c.score;
    if (r <= 0.0) return c;
  }
  return cands.back();
}

std::vector<MixPair> pairs_from_selection(
    const Corpus& corpus, const Hypergraph& graph,
    const std::vector<std::pair<FrameId, FrameId>>& selected,
    const PipelineConfig& config) {
  std::vector<MixPair> pairs;
  for (const auto& [src, cand] : selected) {
    MixPair p;
    p.source = src;
    p.candidate = cand;
    const auto x1 = graph.edge_features(graph.edge_index(src));
    const auto x2 = graph.edge_features(graph.edge_index(cand));
    p.mask = sample_mask(x1, x2, config.gamma,
                         derive_pair_seed(config.seed, src, cand));
    pairs.push_back(std::move(p));
  }
  (void)corpus;
  return pairs;
}

std::size_t mix_count(std::size_t frames_in_doc, double ratio) {
  return static_cast<std::size_t>(
      std::floor(ratio * static_cast<double>(frames_in_doc) + 1e-9));
}

}  // namespace

std::vector<MixPair> select_mix_pairs(const Corpus& corpus, const Hypergraph& graph,
                                      const AffinityMatrix& affinity,
                                      const IntimacyMatrix& intimacy,
                                      const PipelineConfig& config) {
  std::vector<std::pair<FrameId, FrameId>> selected;
  for (const auto& doc : corpus.documents) {
    const auto doc_frames = corpus.frames_of(doc.document_id);
    const std::size_t n = mix_count(doc_frames.size(), config.mix_ratio);
    for (std::size_t i = 0; i < n && i < doc_frames.size(); ++i) {
      const FrameId& src = doc_frames[i]->frame_id;
      const auto cands = candidates(graph, affinity, intimacy, src, config.topk,
                                    config.epsilon_ball, corpus.hierarchy);
      if (cands.empty()) continue;
      std::mt19937_64 rng(derive_pair_seed(config.seed, src, FrameId{"partner-draw"}));
      selected.emplace_back(src, draw_candidate(cands, rng).edge_id);
    }
  }
  return pairs_from_selection(corpus, graph, selected, config);
}

std::vector<MixPair> select_mix_pairs_linkpred(const Corpus& corpus,
                                               const Hypergraph& graph,
                                               const AffinityMatrix& affinity,
                                               LinkPredMethod method,
                                               const PipelineConfig& config) {
  DyadicGraph dyadic = project_dyadic(graph, affinity, config.tau);
  std::map<std::string, std::string> document_of;
  for (std::size_t e = 0; e < graph.edge_count(); ++e)
    document_of[graph.edge(e).frame_id.value] = graph.edge(e).document_id;
  const auto ranked = score_links(dyadic, method, document_of, config.cnc_alpha);

  // Per-document budget as in the hypergraph route; pairs are consumed from
  // the global ranking, best first.
  std::map<std::string, std::size_t> budget;
  for (const auto& doc : corpus.documents)
    budget[doc.document_id] =
        mix_count(corpus.frames_of(doc.document_id).size(), config.mix_ratio);

  std::vector<std::pair<FrameId, FrameId>> selected;
  for (const auto& p : ranked) {
    if (p.score <= 0.0) continue;
    const std::string& du = document_of.at(p.u);
    if (budget[du] == 0) continue;
    --budget[du];
    selected.emplace_back(FrameId{p.u}, FrameId{p.v});
  }
  return pairs_from_selection(corpus, graph, selected, config);
}

void save_mined_frames(const std::vector<MinedFrame>& mined, const std::string& path,
                       const std::string& meta_comment) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write mined frames: " + path);
  if (!meta_comment.empty()) {
    json meta;
    meta["kind"] = "run_meta";
    meta["meta"] = meta_comment;
    out << meta.dump() << '\n';
  }
  for (const auto& m : mined) {
    json obj;
    obj["kind"] = "mined_frame";
    obj["id"] = m.frame.frame_id.value;
    obj["document_id"] = m.frame.document_id;
    if (m.frame.time_index) obj["time_index"] = *m.frame.time_index;
    json els = json::array();
    for (const auto& el : m.frame.elements)
      els.push_back({{"role", el.role}, {"text", el.text}});
    obj["elements"] = els;
    obj["parents"] = {m.parent1.value, m.parent2.value};
    obj["mask"] = m.mask.bits;
    obj["mask_seed"] = m.mask.seed;
    out << obj.dump() << '\n';
  }
}

std::vector<MinedFrame> load_mined_frames(const std::string& path,
                                          const FrameSchema& schema) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mined frames: " + path);
  std::vector<MinedFrame> mined;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json obj = json::parse(line);
    if (obj.value("kind", "") != "mined_frame") continue;
    MinedFrame m;
    m.frame.frame_id.value = obj.at("id").get<std::string>();
    m.frame.document_id = obj.at("document_id").get<std::string>();
    if (obj.contains("time_index")) m.frame.time_index = obj.at("time_index").get<int>();
    for (const auto& el : obj.at("elements"))
      m.frame.elements.push_back(
          {el.at("role").get<std::string>(), el.at("text").get<std::string>()});
    m.parent1.value = obj.at("parents").at(0).get<std::string>();
    m.parent2.value = obj.at("parents").at(1).get<std::string>();
    m.mask.bits = obj.at("mask").get<std::vector<int>>();
    m.mask.seed = obj.value("mask_seed", std::uint64_t{0});
    auto v = validate_frame(m.frame, schema);
    if (!v.ok())
      throw std::runtime_error("mined frame line " + std::to_string(lineno) + ": " +
                               v.violations.front().message);
    mined.push_back(std::move(m));
  }
  return mined;
}

std::vector<GenerationJob> generate(const Corpus& corpus,
                                    const std::vector<MinedFrame>& mined,
                                    const PipelineConfig& config,
                                    CompletionClient& client, RunLog* run_log,
                                    const std::map<std::string, std::string>&
                                        temporal_annotations_by_frame) {
  const PromptPack pack = config.load_prompt_pack();
  const ControlAttribute control = control_from_string(config.control);
  std::vector<GenerationJob> jobs;

  for (const auto& doc : corpus.documents) {
    GenerationJob job;
    job.job_id = doc.document_id + ":" + config.control;
    job.document_id = doc.document_id;
    job.control = control;
    for (const auto* f : corpus.frames_of(doc.document_id)) job.frames.push_back(*f);
    if (control == ControlAttribute::mixups)
      for (const auto& m : mined)
        if (m.frame.document_id == doc.document_id) job.frames.push_back(m.frame);
    if (job.frames.empty()) continue;
    for (const auto& f : job.frames) {
      auto it = temporal_annotations_by_frame.find(f.frame_id.value);
      if (it != temporal_annotations_by_frame.end())
        job.temporal_annotations.push_back(it->second);
    }

    job.prompt = build_generation_prompt(job.frames, control,
                                         job.temporal_annotations, pack,
                                         corpus.schema);
    CompletionRequest request;
    request.prompt = job.prompt;
    request.model = config.llm_model;
    CompletionResult result = client.complete(request);
    job.output = result.text;
    job.provider_id = result.provider_id;
    if (run_log) run_log->record(job, result.latency_ms);
    jobs.push_back(std::move(job));
  }
  return jobs;
}

std::vector<MetricReport> evaluate(const Corpus& corpus,
                                   const std::vector<GenerationJob>& jobs,
                                   const std::vector<MinedFrame>& mined,
                                   EmbeddingProvider& provider,
                                   const PipelineConfig& config,
                                   const std::string& attribution_out_path) {
  std::map<std::string, std::string> document_of_frame;
  for (const auto& f : corpus.frames)
    document_of_frame[f.frame_id.value] = f.document_id;

  std::set<std::string> mined_ids;
  for (const auto& m : mined) mined_ids.insert(m.frame.frame_id.value);

  std::vector<MetricReport> reports;
  for (const auto& job : jobs) {
    const Document* doc = corpus.find_document(job.document_id);
    if (!doc)
      throw std::runtime_error("generation job references unknown document " +
                               job.document_id);
    // Fall back to the rendered original frames when the corpus carries no
    // raw text for the document.
    std::string original = doc->raw_text;
    if (original.empty()) {
      for (const auto* f : corpus.frames_of(doc->document_id)) {
        if (!original.empty()) original += '\n';
        original += render_tuple(*f);
      }
    }

    MetricReport report;
    report.document_id = job.document_id;
    report.control = to_string(job.control);
    report.embedding_provider = provider.provider_id();
    if (!original.empty() && !job.output.empty()) {
      report.lexical_similarity = lexical_similarity(original, job.output);
      report.semantic_word_similarity =
          semantic_similarity(original, job.output, Granularity::word, provider);
      report.semantic_sentence_similarity =
          semantic_similarity(original, job.output, Granularity::sentence, provider);
      report.diversity = diversity(original, job.output, provider);
    }

    std::vector<Frame> original_frames;
    for (const auto* f : corpus.frames_of(job.document_id))
      original_frames.push_back(*f);
    std::vector<MinedFrame> doc_mined;
    for (const auto& m : mined)
      if (m.frame.document_id == job.document_id) doc_mined.push_back(m);
    report.mix = mix_diversity(original_frames, job.frames, doc_mined,
                               document_of_frame, job.document_id,
                               corpus.documents.size(), corpus.schema);
    if (!job.output.empty()) {
      report.coherence = coherence(job.output, job.frames, mined_ids, provider,
                                   config.attribution_theta);
      if (!attribution_out_path.empty()) {
        const auto attr = attribute_frames(job.output, job.frames, provider,
                                           config.attribution_theta);
        export_attribution_jsonl(attr, job.job_id, attribution_out_path);
      }
    }
    reports.push_back(std::move(report));
  }
  return reports;
}

std::vector<std::pair<std::string, std::vector<const Document*>>> lineages(
    const Corpus& corpus, const PipelineConfig& config) {
  std::map<std::string, std::vector<const Document*>> groups;
  for (const auto& d : corpus.documents) {
    std::string key = "corpus";
    if (config.temporal_lineage == "prefix") {
      // Document ids like "acme-2019" share the "acme" lineage.
      const std::size_t dash = d.document_id.rfind('-');
      key = dash == std::string::npos ? d.document_id : d.document_id.substr(0, dash);
    }
    groups[key].push_back(&d);
  }
  return {groups.begin(), groups.end()};
}

std::vector<TemporalResult> temporal_analysis(const Corpus& corpus,
                                              EmbeddingProvider& provider,
                                              const PipelineConfig& config) {
  std::vector<TemporalResult> results;
  for (const auto& [lineage, docs] : lineages(corpus, config)) {
    std::vector<const Frame*> frames;
    for (const Document* d : docs)
      for (const Frame* f : corpus.frames_of(d->document_id))
        if (f->time_index) frames.push_back(f);
    if (frames.empty()) continue;

    TemporalResult result;
    result.lineage = lineage;
    const Timeline timeline = build_timeline(frames, provider);
    std::vector<int> all_times;
    for (const auto& [t, _] : timeline) all_times.push_back(t);

    for (const auto& [t, slice] : timeline) {
      for (const auto& tf : slice) {
        FrameHistory h =
            frame_history(timeline, tf, t, config.gamma, config.epsilon_temporal);
        result.classes.push_back(classify_frame(h, t, all_times));
        result.histories.push_back(std::move(h));
      }
    }
    result.heatmap = temporal_heatmap(timeline, config.gamma, config.epsilon_temporal);
    results.push_back(std::move(result));
  }
  return results;
}

void save_histories_jsonl(const std::vector<TemporalResult>& results,
                          const std::string& path, const std::string& meta_comment) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write histories: " + path);
  if (!meta_comment.empty()) {
    json meta;
    meta["kind"] = "run_meta";
    meta["meta"] = meta_comment;
    out << meta.dump() << '\n';
  }
  for (const auto& r : results) {
    for (std::size_t i = 0; i < r.histories.size(); ++i) {
      const auto& h = r.histories[i];
      json obj;
      obj["kind"] = "frame_history";
      obj["lineage"] = r.lineage;
      obj["frame_id"] = h.frame_id.value;
      obj["time_index"] = h.time_index;
      json matches = json::array();
      for (const auto& m : h.matches)
        matches.push_back({{"t", m.time_index},
                           {"frame_id", m.matched_frame.value},
                           {"affinity", m.normalized_affinity}});
      obj["matches"] = matches;
      obj["class"] = to_string(r.classes[i]);
      obj["annotation"] = temporal_annotation(h, r.classes[i], h.time_index);
      out << obj.dump() << '\n';
    }
  }
}

}  // namespace pipeline

}  // namespace framemix
