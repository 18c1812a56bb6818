// framemix command line: parse -> build -> mine -> mix -> generate ->
// evaluate -> temporal, each stage reading and writing file artifacts only.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "framemix/pipeline.hpp"

namespace fs = std::filesystem;
using namespace framemix;
using nlohmann::json;

namespace {

struct CommonOptions {
  std::string config_path;
  std::string corpus_path;
  std::string weights_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> provider;
  std::optional<std::string> method;
  std::optional<std::string> control;
  std::optional<double> mix_ratio;
};

void add_common(CLI::App* cmd, CommonOptions& opts, bool needs_corpus = true) {
  cmd->add_option("--config", opts.config_path, "pipeline config file (key = value)");
  auto* c = cmd->add_option("--corpus", opts.corpus_path, "corpus JSONL file");
  if (needs_corpus) c->required();
  cmd->add_option("--weights", opts.weights_path, "hierarchy weights CSV");
  cmd->add_option("--out-dir", opts.out_dir, "artifact output directory");
  cmd->add_option("--seed", opts.seed, "override config seed");
  cmd->add_option("--provider", opts.provider, "override llm provider (mock-echo|http)");
  cmd->add_option("--method", opts.method,
                  "mining method: hypergraph or a link prediction method");
  cmd->add_option("--control", opts.control, "generation control attribute");
  cmd->add_option("--mix-ratio", opts.mix_ratio, "mix-in ratio r in [0,1]");
}

PipelineConfig resolve_config(const CommonOptions& opts) {
  PipelineConfig cfg;
  if (!opts.config_path.empty()) cfg = PipelineConfig::load(opts.config_path);
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.provider) cfg.llm_provider = *opts.provider;
  if (opts.method) cfg.mine_method = *opts.method;
  if (opts.control) cfg.control = *opts.control;
  if (opts.mix_ratio) cfg.mix_ratio = *opts.mix_ratio;
  return cfg;
}

std::string meta_line(const PipelineConfig& cfg) {
  return "config_hash=" + cfg.hash() + " seed=" + std::to_string(cfg.seed);
}

Corpus load_inputs(const CommonOptions& opts) {
  Corpus corpus = load_corpus(opts.corpus_path);
  if (!opts.weights_path.empty())
    corpus.hierarchy = HierarchyWeights::load_csv(opts.weights_path);
  return corpus;
}

void write_resolved_config(const PipelineConfig& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  cfg.save(out_dir + "/config.resolved");
}

void export_candidates_csv(const std::vector<std::tuple<std::string, std::string,
                                                        std::string, double>>& rows,
                           const std::string& path, const std::string& meta) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write candidates csv: " + path);
  out.precision(17);
  out << "# " << meta << '\n' << "u,v,method,score\n";
  for (const auto& [u, v, m, s] : rows)
    out << u << ',' << v << ',' << m << ',' << s << '\n';
}

int cmd_parse(const CommonOptions& opts) {
  const PipelineConfig cfg = resolve_config(opts);
  write_resolved_config(cfg, opts.out_dir);
  Corpus corpus = load_inputs(opts);
  auto client = cfg.make_completion_client();
  const PromptPack pack = cfg.load_prompt_pack();
  RunLog run_log(opts.out_dir + "/parse_run_log.jsonl");

  Corpus parsed = corpus;
  parsed.frames.clear();
  for (auto& d : parsed.documents) d.frames.clear();
  for (const auto& doc : corpus.documents) {
    if (doc.raw_text.empty()) continue;
    const std::string prompt = build_parse_prompt(
        doc.raw_text, corpus.schema, {default_parse_exemplar()}, pack);
    CompletionRequest request;
    request.prompt = prompt;
    request.model = cfg.llm_model;
    const CompletionResult result = client->complete(request);
    GenerationJob job;
    job.job_id = doc.document_id + ":parse";
    job.prompt = prompt;
    job.output = result.text;
    job.provider_id = result.provider_id;
    run_log.record(job, result.latency_ms);

    auto tuples = parse_llm_tuples(result.text, corpus.schema, doc.document_id);
    for (auto& f : tuples.frames) {
      f.time_index = doc.time_index;
      parsed.frames.push_back(std::move(f));
    }
    for (const auto& diag : tuples.diagnostics)
      std::cerr << "diagnostic " << doc.document_id << ": " << diag.reason << " in "
                << diag.tuple_text << '\n';
  }
  save_corpus(parsed, opts.out_dir + "/corpus.jsonl");
  std::cout << "parsed " << parsed.frames.size() << " frames from "
            << corpus.documents.size() << " documents\n";
  return 0;
}

int cmd_build(const CommonOptions& opts) {
  const PipelineConfig cfg = resolve_config(opts);
  write_resolved_config(cfg, opts.out_dir);
  const Corpus corpus = load_inputs(opts);
  auto provider = cfg.make_embedding_provider();
  const auto result = pipeline::build(corpus, *provider, cfg);

  result.graph.export_jsonl(opts.out_dir + "/hypergraph.jsonl");
  result.graph.export_dot(opts.out_dir + "/hypergraph.dot");
  export_matrix_csv(result.affinity.entries, result.affinity.edge_ids,
                    opts.out_dir + "/affinity.csv", meta_line(cfg));
  export_matrix_csv(result.intimacy.entries, result.intimacy.edge_ids,
                    opts.out_dir + "/intimacy.csv",
                    meta_line(cfg) + " mode=" + result.intimacy.mode);
  std::cout << "built hypergraph: " << result.graph.vertex_count() << " vertices, "
            << result.graph.edge_count() << " hyperedges\n";
  return 0;
}

int cmd_mine(const CommonOptions& opts) {
  const PipelineConfig cfg = resolve_config(opts);
  write_resolved_config(cfg, opts.out_dir);
  const Corpus corpus = load_inputs(opts);
  auto provider = cfg.make_embedding_provider();
  const auto built = pipeline::build(corpus, *provider, cfg);

  std::vector<std::tuple<std::string, std::string, std::string, double>> rows;
  if (cfg.mine_method == "hypergraph") {
    for (std::size_t e = 0; e < built.graph.edge_count(); ++e) {
      const FrameId& src = built.graph.edge(e).frame_id;
      for (const auto& c : candidates(built.graph, built.affinity, built.intimacy,
                                      src, cfg.topk, cfg.epsilon_ball,
                                      corpus.hierarchy))
        rows.emplace_back(src.value, c.edge_id.value, "hypergraph", c.score);
    }
  } else {
    const auto method = link_pred_method_from_string(cfg.mine_method);
    DyadicGraph dyadic = project_dyadic(built.graph, built.affinity, cfg.tau);
    std::map<std::string, std::string> document_of;
    for (std::size_t e = 0; e < built.graph.edge_count(); ++e)
      document_of[built.graph.edge(e).frame_id.value] =
          built.graph.edge(e).document_id;
    for (const auto& p : score_links(dyadic, method, document_of, cfg.cnc_alpha))
      rows.emplace_back(p.u, p.v, to_string(method), p.score);
  }
  export_candidates_csv(rows, opts.out_dir + "/candidates.csv", meta_line(cfg));
  std::cout << "mined " << rows.size() << " candidate pairs (" << cfg.mine_method
            << ")\n";
  return 0;
}

int cmd_mix(const CommonOptions& opts) {
  const PipelineConfig cfg = resolve_config(opts);
  write_resolved_config(cfg, opts.out_dir);
  const Corpus corpus = load_inputs(opts);
  auto provider = cfg.make_embedding_provider();
  auto built = pipeline::build(corpus, *provider, cfg);

  std::vector<MixPair> pairs;
  if (cfg.mine_method == "hypergraph") {
    pairs = pipeline::select_mix_pairs(corpus, built.graph, built.affinity,
                                       built.intimacy, cfg);
  } else {
    pairs = pipeline::select_mix_pairs_linkpred(
        corpus, built.graph, built.affinity,
        link_pred_method_from_string(cfg.mine_method), cfg);
  }
  const auto mined = augment(built.graph, pairs);
  pipeline::save_mined_frames(mined, opts.out_dir + "/mined_frames.jsonl",
                              meta_line(cfg));
  std::cout << "mixed " << pairs.size() << " pairs into " << mined.size()
            << " mined frames\n";
  return 0;
}

int cmd_generate(const CommonOptions& opts) {
  const PipelineConfig cfg = resolve_config(opts);
  write_resolved_config(cfg, opts.out_dir);
  const Corpus corpus = load_inputs(opts);

  std::vector<MinedFrame> mined;
  const std::string mined_path = opts.out_dir + "/mined_frames.jsonl";
  if (fs::exists(mined_path))
    mined = pipeline::load_mined_frames(mined_path, corpus.schema);

  std::map<std::string, std::string> annotations;
  if (cfg.annotate_temporal) {
    auto provider = cfg.make_embedding_provider();
    for (const auto& r : pipeline::temporal_analysis(corpus, *provider, cfg))
      for (std::size_t i = 0; i < r.histories.size(); ++i)
        annotations[r.histories[i].frame_id.value] = temporal_annotation(
            r.histories[i], r.classes[i], r.histories[i].time_index);
  }

  auto client = cfg.make_completion_client();
  RunLog run_log(opts.out_dir + "/run_log.jsonl");
  const auto jobs =
      pipeline::generate(corpus, mined, cfg, *client, &run_log, annotations);
  save_generation_jobs(jobs, opts.out_dir + "/jobs.jsonl");
  std::cout << "generated " << jobs.size() << " documents (control=" << cfg.control
            << ")\n";
  return 0;
}

int cmd_evaluate(const CommonOptions& opts) {
  const PipelineConfig cfg = resolve_config(opts);
  write_resolved_config(cfg, opts.out_dir);
  const Corpus corpus = load_inputs(opts);

  const std::string jobs_path = opts.out_dir + "/jobs.jsonl";
  if (!fs::exists(jobs_path))
    throw std::runtime_error("missing generation artifacts: " + jobs_path);
  const auto jobs = load_generation_jobs(jobs_path);

  std::vector<MinedFrame> mined;
  const std::string mined_path = opts.out_dir + "/mined_frames.jsonl";
  if (fs::exists(mined_path))
    mined = pipeline::load_mined_frames(mined_path, corpus.schema);

  auto provider = cfg.make_embedding_provider();
  const std::string attr_path = opts.out_dir + "/attribution.jsonl";
  if (fs::exists(attr_path)) fs::remove(attr_path);
  const auto reports =
      pipeline::evaluate(corpus, jobs, mined, *provider, cfg, attr_path);
  export_reports_csv(reports, opts.out_dir + "/metrics.csv", meta_line(cfg));
  export_reports_json(reports, opts.out_dir + "/metrics.json");
  std::cout << "evaluated " << reports.size() << " generations\n";
  return 0;
}

int cmd_temporal(const CommonOptions& opts) {
  const PipelineConfig cfg = resolve_config(opts);
  write_resolved_config(cfg, opts.out_dir);
  const Corpus corpus = load_inputs(opts);
  auto provider = cfg.make_embedding_provider();
  const auto results = pipeline::temporal_analysis(corpus, *provider, cfg);
  pipeline::save_histories_jsonl(results, opts.out_dir + "/history.jsonl",
                                 meta_line(cfg));
  for (const auto& r : results)
    export_heatmap_csv(r.heatmap, opts.out_dir + "/heatmap_" + r.lineage + ".csv",
                       meta_line(cfg) + " lineage=" + r.lineage);
  std::cout << "temporal analysis over " << results.size() << " lineages\n";
  return 0;
}

int cmd_run(const CommonOptions& opts) {
  // Full offline pipeline in one artifact directory.
  int rc = cmd_build(opts);
  if (rc == 0) rc = cmd_mine(opts);
  if (rc == 0) rc = cmd_mix(opts);
  if (rc == 0) rc = cmd_generate(opts);
  if (rc == 0) rc = cmd_evaluate(opts);
  if (rc == 0) rc = cmd_temporal(opts);
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semantic frame hypergraph mining and synthetic text pipeline"};
  app.require_subcommand(1);

  CommonOptions opts;
  add_common(app.add_subcommand("parse", "extract frames from document text"), opts);
  add_common(app.add_subcommand("build", "build hypergraph, affinity and intimacy"),
             opts);
  add_common(app.add_subcommand("mine", "rank candidate hyperedge pairs"), opts);
  add_common(app.add_subcommand("mix", "mix candidate pairs into mined frames"), opts);
  add_common(app.add_subcommand("generate", "generate text variants from frames"),
             opts);
  add_common(app.add_subcommand("evaluate", "score generated text against originals"),
             opts);
  add_common(app.add_subcommand("temporal", "frame histories and heatmaps"), opts);
  add_common(app.add_subcommand("run", "full pipeline: build through temporal"), opts);

  CLI11_PARSE(app, argc, argv);

  const std::string sub = app.get_subcommands().front()->get_name();
  try {
    if (sub == "parse") return cmd_parse(opts);
    if (sub == "build") return cmd_build(opts);
    if (sub == "mine") return cmd_mine(opts);
    if (sub == "mix") return cmd_mix(opts);
    if (sub == "generate") return cmd_generate(opts);
    if (sub == "evaluate") return cmd_evaluate(opts);
    if (sub == "temporal") return cmd_temporal(opts);
    if (sub == "run") return cmd_run(opts);
  } catch (const std::exception& e) {
    json err;
    err["error"] = e.what();
    err["subcommand"] = sub;
    std::cerr << err.dump() << '\n';
    return 1;
  }
  return 2;
}
