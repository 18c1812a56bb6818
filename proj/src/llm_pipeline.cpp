#include "framemix/llm_pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace framemix {

using nlohmann::json;

ControlAttribute control_from_string(const std::string& name) {
  if (name == "compact") return ControlAttribute::compact;
  if (name == "optimistic") return ControlAttribute::optimistic;
  if (name == "faq") return ControlAttribute::faq;
  if (name == "counterfactual") return ControlAttribute::counterfactual;
  if (name == "mixups") return ControlAttribute::mixups;
  throw std::invalid_argument("unknown control attribute: " + name);
}

std::string to_string(ControlAttribute c) {
  switch (c) {
    case ControlAttribute::compact: return "compact";
    case ControlAttribute::optimistic: return "optimistic";
    case ControlAttribute::faq: return "faq";
    case ControlAttribute::counterfactual: return "counterfactual";
    case ControlAttribute::mixups: return "mixups";
  }
  return "unknown";
}

PromptPack PromptPack::defaults() {
  PromptPack pack;
  pack.version = 1;
  pack.parse_instruction =
      "For a given text passage, list {role_list} in the form of a tuple "
      "{tuple_format}. There can be several such tuples in a passage. Some "
      "sentences maybe irrelevant and a tuple item may not be applicable "
      "(e.g. impact is not available).";
  pack.generate_instruction =
      "Construct a text passage for the risk section of a report based on the "
      "given tuples. A tuple is in the format {tuple_format}, where "
      "{role_descriptions}. If a tuple item is n/a, then the corresponding "
      "value is not available.";
  pack.control_instructions = {
      {"compact",
       "Develop the given tuples faithfully into a compact and fluent passage."},
      {"optimistic",
       "Adopt an optimistic tone that adds context to minimize the risk impact."},
      {"faq",
       "Present the content in a question and answer format, where each question "
       "asks about a risk and the answer describes it."},
      {"counterfactual",
       "Present an adversarial counterfactual scenario in which the stated risks "
       "unfold contrary to how they are described."},
      {"mixups",
       "Integrate all of the given tuples, including those that combine "
       "information from multiple sources, into one coherent passage."},
  };
  return pack;
}

PromptPack PromptPack::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open prompt pack: " + path);
  json obj = json::parse(in);
  PromptPack pack = defaults();
  pack.version = obj.value("version", 1);
  if (obj.contains("parse_instruction"))
    pack.parse_instruction = obj.at("parse_instruction").get<std::string>();
  if (obj.contains("generate_instruction"))
    pack.generate_instruction = obj.at("generate_instruction").get<std::string>();
  if (obj.contains("controls"))
    for (const auto& [k, v] : obj.at("controls").items())
      pack.control_instructions[k] = v.get<std::string>();
  return pack;
}

FewShotExample default_parse_exemplar() {
  FewShotExample ex;
  ex.text =
      "From time to time certain of our customers have filed for bankruptcy "
      "protection or ceased operation. The impact of instability in the global "
      "financial markets may lead to reduced domestic or international capacity. "
      "Future environmental regulatory developments in the United States and "
      "abroad concerning environmental issues, such as climate change, could "
      "adversely affect our operations and increase operating costs.";
  ex.tuples = {
      {"operational", "customer bankruptcy", "instability in markets",
       "reduced capacity"},
      {"environment, regulatory", "climate change", "regulatory developments",
       "increase operating cost"},
  };
  return ex;
}

std::string render_tuple(const Frame& frame) {
  std::string out = "[";
  for (std::size_t k = 0; k < frame.elements.size(); ++k) {
    if (k) out += "; ";
    out += frame.elements[k].text;
  }
  out += "]";
  return out;
}

std::string tuple_format_clause(const FrameSchema& schema) {
  std::string out = "[";
  for (std::size_t k = 0; k < schema.roles.size(); ++k) {
    if (k) out += "; ";
    out += "<" + schema.roles[k] + ">";
  }
  out += "]";
  return out;
}

namespace {

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}

std::string role_list_clause(const FrameSchema& schema) {
  std::string out;
  for (std::size_t k = 0; k < schema.roles.size(); ++k) {
    if (k > 0) out += k + 1 == schema.roles.size() ? " and " : ", ";
    out += "the " + schema.roles[k];
    if (k == 0 && !schema.category_vocabulary.empty()) {
      out += " (can be one of ";
      for (std::size_t i = 0; i < schema.category_vocabulary.size(); ++i) {
        if (i) out += ", ";
        out += schema.category_vocabulary[i];
      }
      out += ")";
    }
  }
  return out;
}

std::string role_descriptions_clause(const FrameSchema& schema) {
  std::string out;
  for (std::size_t k = 0; k < schema.roles.size(); ++k) {
    if (k > 0) out += k + 1 == schema.roles.size() ? " and " : ", ";
    out += "<" + schema.roles[k] + "> is the " + schema.roles[k];
  }
  return out;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string build_parse_prompt(const std::string& text, const FrameSchema& schema,
                               const std::vector<FewShotExample>& exemplars,
                               const PromptPack& pack) {
  if (text.empty()) throw std::invalid_argument("build_parse_prompt: empty text");
  if (exemplars.empty())
    throw std::invalid_argument("build_parse_prompt: at least one exemplar required");
  std::string prompt = pack.parse_instruction;
  prompt = replace_all(prompt, "{role_list}", role_list_clause(schema));
  prompt = replace_all(prompt, "{tuple_format}", tuple_format_clause(schema));
  for (std::size_t i = 0; i < exemplars.size(); ++i) {
    prompt += "\n\nExample #" + std::to_string(i + 1) + "\n" + exemplars[i].text;
    prompt += "\n\nAnswer #" + std::to_string(i + 1);
    for (const auto& tuple : exemplars[i].tuples) {
      prompt += "\n[";
      for (std::size_t k = 0; k < tuple.size(); ++k) {
        if (k) prompt += "; ";
        prompt += tuple[k];
      }
      prompt += "]";
    }
  }
  prompt += "\n\nTest\n" + text;
  return prompt;
}

std::string build_generation_prompt(const std::vector<Frame>& frames,
                                    ControlAttribute control,
                                    const std::vector<std::string>& temporal_annotations,
                                    const PromptPack& pack, const FrameSchema& schema) {
  if (frames.empty())
    throw std::invalid_argument("build_generation_prompt: empty frame list");
  std::string prompt = pack.generate_instruction;
  prompt = replace_all(prompt, "{tuple_format}", tuple_format_clause(schema));
  prompt = replace_all(prompt, "{role_descriptions}", role_descriptions_clause(schema));
  auto it = pack.control_instructions.find(to_string(control));
  if (it == pack.control_instructions.end())
    throw std::runtime_error("prompt pack has no instruction for control " +
                             to_string(control));
  prompt += " " + it->second;
  prompt += "\n\nTest";
  for (const auto& f : frames) prompt += "\n" + render_tuple(f);
  for (const auto& note : temporal_annotations) prompt += "\nNote: " + note;
  return prompt;
}

ParsedTuples parse_llm_tuples(const std::string& output, const FrameSchema& schema,
                              const std::string& document_id) {
  ParsedTuples result;
  std::size_t pos = 0;
  int accepted = 0;
  while ((pos = output.find('[', pos)) != std::string::npos) {
    const std::size_t close = output.find(']', pos);
    if (close == std::string::npos) break;
    const std::string body = output.substr(pos + 1, close - pos - 1);
    pos = close + 1;
    if (body.find(';') == std::string::npos) continue;  // not a tuple

    std::vector<std::string> items;
    std::istringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ';')) items.push_back(trim(item));
    if (!body.empty() && body.back() == ';') items.push_back("");

    if (items.size() != schema.arity()) {
      result.diagnostics.push_back(
          {"[" + body + "]", "arity " + std::to_string(items.size()) + " != " +
                                 std::to_string(schema.arity())});
      continue;
    }
    if (std::any_of(items.begin(), items.end(),
                    [](const std::string& s) { return s.empty(); })) {
      result.diagnostics.push_back({"[" + body + "]", "empty tuple item"});
      continue;
    }
    if (!schema.category_vocabulary.empty()) {
      const int cat = std::max(schema.role_index("category"), 0);
      // Multi-valued slots like "environment, regulatory" check each part
      // but the frame keeps the full string.
      std::istringstream cs(items[cat]);
      std::string part;
      bool bad = false;
      while (std::getline(cs, part, ',')) {
        part = trim(part);
        if (std::find(schema.category_vocabulary.begin(),
                      schema.category_vocabulary.end(),
                      part) == schema.category_vocabulary.end()) {
          result.diagnostics.push_back(
              {"[" + body + "]", "category \"" + part + "\" outside vocabulary"});
          bad = true;
          break;
        }
      }
      if (bad) continue;
    }

    Frame f;
    f.frame_id.value = document_id + "#" + std::to_string(++accepted);
    f.document_id = document_id;
    for (std::size_t k = 0; k < schema.arity(); ++k)
      f.elements.push_back({schema.roles[k], items[k]});
    result.frames.push_back(std::move(f));
  }
  return result;
}

CompletionResult MockCompletionClient::complete(const CompletionRequest& request) {
  auto it = canned_.find(request.prompt);
  if (it == canned_.end())
    throw ProviderError("mock provider has no canned response for prompt",
                        /*retryable=*/false);
  return {it->second, provider_id(), 0};
}

CompletionResult EchoCompletionClient::complete(const CompletionRequest& request) {
  std::string out;
  std::istringstream ss(request.prompt);
  std::string line;
  while (std::getline(ss, line)) {
    if (!line.empty() && line[0] == '[') {
      if (!out.empty()) out += '\n';
      out += line;
    }
  }
  return {out, provider_id(), 0};
}

struct HttpCompletionClient::Impl {
  Config config;
  std::mutex mutex;
  std::condition_variable cv;
  int in_flight = 0;
};

HttpCompletionClient::HttpCompletionClient(Config config)
    : impl_(std::make_unique<Impl>()) {
  if (config.base_url.empty())
    throw ProviderError("completion client: base_url not configured",
                        /*retryable=*/false);
  impl_->config = std::move(config);
}

HttpCompletionClient::~HttpCompletionClient() = default;

std::string HttpCompletionClient::provider_id() const {
  return "http:" + impl_->config.model;
}

CompletionResult HttpCompletionClient::complete(const CompletionRequest& request) {
  const Config& cfg = impl_->config;
  {
    std::unique_lock<std::mutex> lock(impl_->mutex);
    impl_->cv.wait(lock, [this] {
      return impl_->in_flight < impl_->config.max_in_flight;
    });
    ++impl_->in_flight;
  }
  struct SlotRelease {
    Impl* impl;
    ~SlotRelease() {
      std::lock_guard<std::mutex> lock(impl->mutex);
      --impl->in_flight;
      impl->cv.notify_one();
    }
  } release{impl_.get()};

  json body;
  body["model"] = request.model.empty() ? cfg.model : request.model;
  body["prompt"] = request.prompt;
  body["temperature"] = request.temperature;
  body["max_tokens"] = request.max_tokens;

  httplib::Client client(cfg.base_url);
  client.set_read_timeout(cfg.timeout_seconds, 0);
  httplib::Headers headers;
  if (!cfg.auth_token.empty())
    headers.emplace("Authorization", "Bearer " + cfg.auth_token);

  std::string last_error;
  const auto start = std::chrono::steady_clock::now();
  for (int attempt = 0; attempt < std::max(1, cfg.max_attempts); ++attempt) {
    if (attempt > 0)
      std::this_thread::sleep_for(std::chrono::milliseconds(100 << attempt));
    auto res = client.Post(cfg.path, headers, body.dump(), "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 401 || res->status == 403)
      throw ProviderError("completion auth failure: HTTP " +
                              std::to_string(res->status),
                          /*retryable=*/false);
    if (res->status != 200) {
      last_error = "HTTP " + std::to_string(res->status) + ": " + res->body;
      continue;
    }
    json parsed = json::parse(res->body);
    if (!parsed.contains(cfg.response_text_key))
      throw ProviderError("completion response missing key \"" +
                              cfg.response_text_key + "\"",
                          /*retryable=*/false);
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - start);
    return {parsed.at(cfg.response_text_key).get<std::string>(), provider_id(),
            elapsed.count()};
  }
  throw ProviderError("completion failed after retries: " + last_error,
                      /*retryable=*/true);
}

namespace {

json job_to_json(const GenerationJob& job) {
  json obj;
  obj["job_id"] = job.job_id;
  obj["document_id"] = job.document_id;
  obj["control"] = to_string(job.control);
  obj["prompt"] = job.prompt;
  obj["output"] = job.output;
  obj["provider"] = job.provider_id;
  json frames = json::array();
  for (const auto& f : job.frames) {
    json fr;
    fr["id"] = f.frame_id.value;
    fr["document_id"] = f.document_id;
    json els = json::array();  // array keeps schema role order
    for (const auto& el : f.elements) els.push_back({{"role", el.role}, {"text", el.text}});
    fr["elements"] = els;
    frames.push_back(fr);
  }
  obj["frames"] = frames;
  obj["temporal_annotations"] = job.temporal_annotations;
  json trace = json::array();
  for (const auto& t : job.trace)
    trace.push_back({{"sentence", t.sentence_index},
                     {"frame_id", t.frame_id},
                     {"score", t.score}});
  obj["trace"] = trace;
  return obj;
}

}  // namespace

void RunLog::record(const GenerationJob& job, long latency_ms) {
  if (job.prompt.empty())
    throw std::logic_error("run log refuses an output without its prompt");
  std::ofstream out(path_, std::ios::app);
  if (!out) throw std::runtime_error("cannot append run log: " + path_);
  json obj;
  obj["job_id"] = job.job_id;
  obj["prompt"] = job.prompt;
  obj["output"] = job.output;
  obj["provider"] = job.provider_id;
  obj["latency_ms"] = latency_ms;
  out << obj.dump() << '\n';
}

void save_generation_jobs(const std::vector<GenerationJob>& jobs,
                          const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write generation jobs: " + path);
  for (const auto& job : jobs) out << job_to_json(job).dump() << '\n';
}

std::vector<GenerationJob> load_generation_jobs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open generation jobs: " + path);
  std::vector<GenerationJob> jobs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    json obj = json::parse(line);
    if (obj.value("kind", "") == "run_meta") continue;
    GenerationJob job;
    job.job_id = obj.value("job_id", "");
    job.document_id = obj.value("document_id", "");
    job.control = control_from_string(obj.value("control", "compact"));
    job.prompt = obj.value("prompt", "");
    job.output = obj.value("output", "");
    job.provider_id = obj.value("provider", "");
    for (const auto& fr : obj.value("frames", json::array())) {
      Frame f;
      f.frame_id.value = fr.at("id").get<std::string>();
      f.document_id = fr.value("document_id", "");
      for (const auto& el : fr.at("elements"))
        f.elements.push_back(
            {el.at("role").get<std::string>(), el.at("text").get<std::string>()});
      job.frames.push_back(std::move(f));
    }
    job.temporal_annotations =
        obj.value("temporal_annotations", std::vector<std::string>{});
    for (const auto& t : obj.value("trace", json::array()))
      job.trace.push_back({t.value("sentence", 0), t.value("frame_id", ""),
                           t.value("score", 0.0)});
    jobs.push_back(std::move(job));
  }
  return jobs;
}

}  // namespace framemix
