#pragma once
// Prompt construction for parsing and generation, a provider-agnostic
// completion client with offline mocks, and the tuple-output parser.

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "framemix/embedding.hpp"  // ProviderError
#include "framemix/frame_model.hpp"

namespace framemix {

struct CompletionRequest {
  std::string prompt;
  double temperature = 0.0;
  int max_tokens = 2048;
  std::string model;
};

struct CompletionResult {
  std::string text;
  std::string provider_id;
  long latency_ms = 0;
};

enum class ControlAttribute { compact, optimistic, faq, counterfactual, mixups };

ControlAttribute control_from_string(const std::string& name);
std::string to_string(ControlAttribute c);

// Named prompt templates; ships with built-in defaults and can be overridden
// by a versioned JSON pack file so experiment wordings stay reproducible.
class PromptPack {
 public:
  static PromptPack defaults();
  static PromptPack load(const std::string& path);

  int version = 1;
  std::string parse_instruction;     // uses {role_list} and {tuple_format}
  std::string generate_instruction;  // uses {tuple_format} and {role_descriptions}
  std::map<std::string, std::string> control_instructions;
};

struct FewShotExample {
  std::string text;
  std::vector<std::vector<std::string>> tuples;  // each inner list has K items
};

FewShotExample default_parse_exemplar();

// "[a; b; c; d]" over the frame's element texts, schema role order.
std::string render_tuple(const Frame& frame);
std::string tuple_format_clause(const FrameSchema& schema);

std::string build_parse_prompt(const std::string& text, const FrameSchema& schema,
                               const std::vector<FewShotExample>& exemplars,
                               const PromptPack& pack = PromptPack::defaults());

std::string build_generation_prompt(const std::vector<Frame>& frames,
                                    ControlAttribute control,
                                    const std::vector<std::string>& temporal_annotations = {},
                                    const PromptPack& pack = PromptPack::defaults(),
                                    const FrameSchema& schema = FrameSchema::default_schema());

struct ParseDiagnostic {
  std::string tuple_text;
  std::string reason;
};

struct ParsedTuples {
  std::vector<Frame> frames;
  std::vector<ParseDiagnostic> diagnostics;
};

// Extracts every bracketed ';'-separated tuple from arbitrary LLM output.
// Wrong arity or out-of-vocabulary categories become diagnostics, never
// faults. Multi-valued category slots keep the full string.
ParsedTuples parse_llm_tuples(const std::string& output, const FrameSchema& schema,
                              const std::string& document_id);

class CompletionClient {
 public:
  virtual ~CompletionClient() = default;
  virtual std::string provider_id() const = 0;
  virtual CompletionResult complete(const CompletionRequest& request) = 0;
};

// Canned prompt -> text map; unknown prompts are terminal errors.
class MockCompletionClient : public CompletionClient {
 public:
  explicit MockCompletionClient(std::map<std::string, std::string> canned)
      : canned_(std::move(canned)) {}
  std::string provider_id() const override { return "mock"; }
  CompletionResult complete(const CompletionRequest& request) override;

 private:
  std::map<std::string, std::string> canned_;
};

// Returns every tuple line of the prompt verbatim, one per line, so the
// generate -> evaluate path runs deterministically offline.
class EchoCompletionClient : public CompletionClient {
 public:
  std::string provider_id() const override { return "mock-echo"; }
  CompletionResult complete(const CompletionRequest& request) override;
};

// HTTP JSON completion client with exponential backoff over transient
// failures (3 attempts) and a bounded in-flight request limit.
class HttpCompletionClient : public CompletionClient {
 public:
  struct Config {
    std::string base_url;
    std::string path = "/v1/completions";
    std::string model;
    std::string auth_token;
    int timeout_seconds = 60;
    int max_attempts = 3;
    int max_in_flight = 4;
    std::string response_text_key = "text";  // top-level key carrying the output
  };

  explicit HttpCompletionClient(Config config);
  ~HttpCompletionClient() override;
  std::string provider_id() const override;
  CompletionResult complete(const CompletionRequest& request) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct TraceLink {
  int sentence_index = 0;
  std::string frame_id;
  double score = 0.0;
};

struct GenerationJob {
  std::string job_id;
  std::string document_id;
  std::vector<Frame> frames;  // originals plus mined, in prompt order
  ControlAttribute control = ControlAttribute::compact;
  std::vector<std::string> temporal_annotations;
  std::string prompt;
  std::string output;
  std::string provider_id;
  std::vector<TraceLink> trace;
};

// Append-only JSONL run log; an output is never recorded without its prompt.
class RunLog {
 public:
  explicit RunLog(std::string path) : path_(std::move(path)) {}
  void record(const GenerationJob& job, long latency_ms);

 private:
  std::string path_;
};

void save_generation_jobs(const std::vector<GenerationJob>& jobs,
                          const std::string& path);
std::vector<GenerationJob> load_generation_jobs(const std::string& path);

}  // namespace framemix
