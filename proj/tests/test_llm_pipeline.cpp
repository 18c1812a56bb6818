#include <doctest.h>

#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "framemix/llm_pipeline.hpp"
#include "test_support.hpp"

using namespace framemix;
using testsupport::make_frame;
using testsupport::TempDir;

TEST_CASE("control attribute names round-trip") {
  for (auto c : {ControlAttribute::compact, ControlAttribute::optimistic,
                 ControlAttribute::faq, ControlAttribute::counterfactual,
                 ControlAttribute::mixups})
    CHECK(control_from_string(to_string(c)) == c);
  CHECK_THROWS_AS(control_from_string("sarcastic"), std::invalid_argument);
}

TEST_CASE("tuple rendering follows the bracketed semicolon format") {
  Frame f = make_frame("f", "d", {"operational", "customer bankruptcy",
                                  "instability in markets", "reduced capacity"});
  CHECK(render_tuple(f) ==
        "[operational; customer bankruptcy; instability in markets; reduced capacity]");
  CHECK(tuple_format_clause(FrameSchema::default_schema()) ==
        "[<category>; <event>; <driver>; <impact>]");
}

TEST_CASE("parse prompt embeds instruction, exemplars and the test text") {
  const auto schema = FrameSchema::default_schema();
  const auto prompt =
      build_parse_prompt("Our supplier filed for bankruptcy.", schema,
                         {default_parse_exemplar()});
  CHECK(prompt.find("[<category>; <event>; <driver>; <impact>]") != std::string::npos);
  CHECK(prompt.find("Example #1") != std::string::npos);
  CHECK(prompt.find("Answer #1") != std::string::npos);
  CHECK(prompt.find("[operational; customer bankruptcy; instability in markets; "
                    "reduced capacity]") != std::string::npos);
  CHECK(prompt.find("\n\nTest\nOur supplier filed for bankruptcy.") !=
        std::string::npos);
  CHECK(prompt.find("{role_list}") == std::string::npos);
  CHECK(prompt.find("{tuple_format}") == std::string::npos);

  CHECK_THROWS_AS(build_parse_prompt("", schema, {default_parse_exemplar()}),
                  std::invalid_argument);
  CHECK_THROWS_AS(build_parse_prompt("x", schema, {}), std::invalid_argument);
}

TEST_CASE("category vocabulary is spelled out in the parse prompt") {
  FrameSchema schema = FrameSchema::default_schema();
  schema.category_vocabulary = {"operational", "environment"};
  const auto prompt = build_parse_prompt("x", schema, {default_parse_exemplar()});
  CHECK(prompt.find("(can be one of operational, environment)") != std::string::npos);
}

TEST_CASE("generation prompt carries control wording and one line per tuple") {
  std::vector<Frame> frames = {
      make_frame("f1", "d", {"a", "b", "c", "d"}),
      make_frame("f2", "d", {"e", "f", "g", "h"}),
  };
  const auto prompt = build_generation_prompt(frames, ControlAttribute::faq,
                                              {"recurring risk, previously seen at 2019"});
  CHECK(prompt.find("question and answer format") != std::string::npos);
  CHECK(prompt.find("\n[a; b; c; d]\n[e; f; g; h]") != std::string::npos);
  CHECK(prompt.find("\nNote: recurring risk, previously seen at 2019") !=
        std::string::npos);

  const auto optimistic =
      build_generation_prompt(frames, ControlAttribute::optimistic);
  CHECK(optimistic.find("optimistic tone") != std::string::npos);
  CHECK(optimistic.find("question and answer") == std::string::npos);

  CHECK_THROWS_AS(build_generation_prompt({}, ControlAttribute::compact),
                  std::invalid_argument);
}

TEST_CASE("tuple parser: round trip, diagnostics and multi-valued categories") {
  const auto schema = FrameSchema::default_schema();

  SUBCASE("round trip over rendered frames") {
    std::vector<Frame> frames = {
        make_frame("x", "doc", {"operational", "customer bankruptcy", "n/a",
                                "reduced capacity"}),
        make_frame("y", "doc", {"financial", "rate increase", "inflation", "n/a"}),
    };
    std::string text;
    for (const auto& f : frames) text += render_tuple(f) + "\n";
    auto parsed = parse_llm_tuples(text, schema, "doc");
    REQUIRE(parsed.frames.size() == 2);
    CHECK(parsed.diagnostics.empty());
    CHECK(parsed.frames[0].frame_id.value == "doc#1");
    CHECK(parsed.frames[1].frame_id.value == "doc#2");
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t k = 0; k < 4; ++k)
        CHECK(parsed.frames[i].elements[k].text == frames[i].elements[k].text);
  }

  SUBCASE("wrong arity becomes a diagnostic, not a fault") {
    auto parsed = parse_llm_tuples("[a; b; c]", schema, "doc");
    CHECK(parsed.frames.empty());
    REQUIRE(parsed.diagnostics.size() == 1);
    CHECK(parsed.diagnostics[0].reason == "arity 3 != 4");
  }

  SUBCASE("prose around tuples is ignored") {
    auto parsed = parse_llm_tuples(
        "Sure. Here are the risks: [a; b; c; d] and also [e; f; g; h].", schema,
        "doc");
    CHECK(parsed.frames.size() == 2);
  }

  SUBCASE("bracketed non-tuples are skipped silently") {
    auto parsed = parse_llm_tuples("[citation 3] then [a; b; c; d]", schema, "doc");
    CHECK(parsed.frames.size() == 1);
    CHECK(parsed.diagnostics.empty());
  }

  SUBCASE("multi-valued category validates each part, keeps the full string") {
    FrameSchema vocab = schema;
    vocab.category_vocabulary = {"environment", "regulatory", "operational"};
    auto ok = parse_llm_tuples("[environment, regulatory; climate change; rules; cost]",
                               vocab, "doc");
    REQUIRE(ok.frames.size() == 1);
    CHECK(ok.frames[0].elements[0].text == "environment, regulatory");

    auto bad = parse_llm_tuples("[environment, fiscal; e; d; i]", vocab, "doc");
    CHECK(bad.frames.empty());
    REQUIRE(bad.diagnostics.size() == 1);
    CHECK(bad.diagnostics[0].reason == "category \"fiscal\" outside vocabulary");
  }

  SUBCASE("empty items are diagnosed") {
    auto parsed = parse_llm_tuples("[a; ; c; d]", schema, "doc");
    CHECK(parsed.frames.empty());
    REQUIRE(parsed.diagnostics.size() == 1);
    CHECK(parsed.diagnostics[0].reason == "empty tuple item");
  }
}

TEST_CASE("prompt pack load overrides selected fields only") {
  TempDir tmp;
  {
    std::ofstream out(tmp.file("pack.json"));
    out << R"({"version": 2, "controls": {"compact": "Be very short."}})";
  }
  auto pack = PromptPack::load(tmp.file("pack.json"));
  CHECK(pack.version == 2);
  CHECK(pack.control_instructions.at("compact") == "Be very short.");
  // Untouched fields keep the defaults.
  CHECK(pack.control_instructions.at("faq") ==
        PromptPack::defaults().control_instructions.at("faq"));
  CHECK(pack.parse_instruction == PromptPack::defaults().parse_instruction);
  CHECK_THROWS_AS(PromptPack::load(tmp.file("missing.json")), std::runtime_error);
}

TEST_CASE("mock client returns canned output, faults on unknown prompts") {
  MockCompletionClient mock(std::map<std::string, std::string>{{"p1", "answer one"}});
  auto res = mock.complete({"p1"});
  CHECK(res.text == "answer one");
  CHECK(res.latency_ms == 0);
  CHECK_THROWS_AS(mock.complete({"p2"}), ProviderError);
}

TEST_CASE("echo client returns exactly the prompt's tuple lines") {
  EchoCompletionClient echo;
  auto res = echo.complete({"Instruction text.\n[a; b; c; d]\nNote: x\n[e; f; g; h]"});
  CHECK(res.text == "[a; b; c; d]\n[e; f; g; h]");
  CHECK(res.provider_id == "mock-echo");
}

TEST_CASE("http completion client retries transient errors then succeeds") {
  httplib::Server server;
  int calls = 0;
  server.Post("/v1/completions", [&](const httplib::Request& req, httplib::Response& res) {
    ++calls;
    if (calls == 1) {
      res.status = 500;
      return;
    }
    auto body = nlohmann::json::parse(req.body);
    nlohmann::json out;
    out["text"] = "echo:" + body.at("prompt").get<std::string>();
    res.set_content(out.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread thread([&server] { server.listen_after_bind(); });
  server.wait_until_ready();

  HttpCompletionClient::Config cfg;
  cfg.base_url = "http://127.0.0.1:" + std::to_string(port);
  cfg.model = "m1";
  HttpCompletionClient client(cfg);
  auto res = client.complete({"hello"});
  server.stop();
  thread.join();
  CHECK(res.text == "echo:hello");
  CHECK(calls == 2);
}

TEST_CASE("http completion client treats auth failures as terminal") {
  httplib::Server server;
  int calls = 0;
  server.Post("/v1/completions", [&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 403;
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread thread([&server] { server.listen_after_bind(); });
  server.wait_until_ready();

  HttpCompletionClient::Config cfg;
  cfg.base_url = "http://127.0.0.1:" + std::to_string(port);
  cfg.model = "m1";
  HttpCompletionClient client(cfg);
  try {
    client.complete({"hello"});
    FAIL("expected ProviderError");
  } catch (const ProviderError& err) {
    CHECK_FALSE(err.retryable);
  }
  server.stop();
  thread.join();
  CHECK(calls == 1);  // no retry after 403
}

TEST_CASE("generation jobs persist losslessly, including element order") {
  TempDir tmp;
  GenerationJob job;
  job.job_id = "j1";
  job.document_id = "d1";
  job.control = ControlAttribute::mixups;
  job.frames = {make_frame("f1", "d1", {"c", "e", "dr", "i"})};
  job.temporal_annotations = {"new risk emerged at 2021"};
  job.prompt = "the prompt";
  job.output = "[c; e; dr; i]";
  job.provider_id = "mock-echo";
  job.trace = {{0, "f1", 0.9}};

  save_generation_jobs({job}, tmp.file("jobs.jsonl"));
  auto loaded = load_generation_jobs(tmp.file("jobs.jsonl"));
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0].job_id == "j1");
  CHECK(loaded[0].control == ControlAttribute::mixups);
  REQUIRE(loaded[0].frames.size() == 1);
  const auto schema = FrameSchema::default_schema();
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(loaded[0].frames[0].elements[k].role == schema.roles[k]);
    CHECK(loaded[0].frames[0].elements[k].text == job.frames[0].elements[k].text);
  }
  CHECK(loaded[0].temporal_annotations == job.temporal_annotations);
  REQUIRE(loaded[0].trace.size() == 1);
  CHECK(loaded[0].trace[0].frame_id == "f1");
}

TEST_CASE("run log refuses an output without its prompt") {
  TempDir tmp;
  RunLog log(tmp.file("run.jsonl"));
  GenerationJob job;
  job.job_id = "j1";
  job.output = "text";
  CHECK_THROWS_AS(log.record(job, 0), std::logic_error);
  job.prompt = "p";
  log.record(job, 12);
  std::ifstream in(tmp.file("run.jsonl"));
  std::string line;
  REQUIRE(std::getline(in, line));
  auto obj = nlohmann::json::parse(line);
  CHECK(obj.at("latency_ms") == 12);
  CHECK(obj.at("prompt") == "p");
}
