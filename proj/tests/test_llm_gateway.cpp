#include <gtest/gtest.h>

#include <json.hpp>

#include <cstdlib>
#include <deque>
#include <random>

#include "fake_llm.hpp"
#include "noisy_replies.hpp"
#include "sectorllm/llm_gateway.hpp"
#include "temp_dir.hpp"
#include "test_util.hpp"

using namespace sectorllm;
using sectorllm::testing::code_of;
using sectorllm::testing::TempDir;

namespace {

SectorSpec industrials() { return {"Industrials", "S&P 500-20", {"GE", "CAT", "MMM", "PH"}}; }

/// Serves queued HTTP responses and records the requests.
class ScriptedTransport : public Transport {
 public:
  std::deque<HttpResponse> queue;
  std::vector<HttpRequest> requests;

  HttpResponse post(const HttpRequest& r) override {
    requests.push_back(r);
    if (queue.empty()) return {500, "empty script"};
    auto next = queue.front();
    queue.pop_front();
    return next;
  }

  void reply(const std::string& text) {
    nlohmann::json j;
    j["choices"] = nlohmann::json::array({{{"message", {{"content", text}}}}});
    queue.push_back({200, j.dump()});
  }
};

ProviderConfig provider() {
  ProviderConfig p;
  p.provider_id = "acme";
  p.endpoint = "https://llm.invalid/v1/chat";
  p.model_name = "acme-1";
  p.auth_ref = "SECTORLLM_TEST_KEY";
  p.max_retries = 2;
  return p;
}

void no_sleep(std::chrono::duration<double>) {}

struct KeyEnv {
  KeyEnv() { ::setenv("SECTORLLM_TEST_KEY", "sk-test", 1); }
  ~KeyEnv() { ::unsetenv("SECTORLLM_TEST_KEY"); }
};

}  // namespace

TEST(Prompts, SelectionPromptNamesIndexAndSector) {
  const auto text = render_prompt(PromptKind::SelectStocks, industrials());
  EXPECT_NE(text.find("S&P 500-20 industrials sector"), std::string::npos);
  EXPECT_NE(text.find("at least 20 stocks"), std::string::npos);
  EXPECT_EQ(text.find('{'), std::string::npos);
}

TEST(Prompts, ExtractWeightsEndsWithExample) {
  const auto text = render_prompt(PromptKind::ExtractWeights, industrials(), std::nullopt, std::string_view("..."));
  const std::string tail = "\"AAPL: 0.2, MSFT: 0.3, GOOGL: 0.5\"";
  ASSERT_GE(text.size(), tail.size());
  EXPECT_EQ(text.substr(text.size() - tail.size()), tail);
}

TEST(Prompts, AssignWeightsListsTickers) {
  const std::vector<std::string> tickers{"GE", "CAT", "PH"};
  const auto text = render_prompt(PromptKind::AssignWeights, industrials(), tickers);
  EXPECT_NE(text.find("S&P 500-20 Industrials stocks: GE CAT PH."), std::string::npos);
}

TEST(Prompts, MissingPlaceholders) {
  const std::vector<std::string> none;
  EXPECT_EQ(code_of([&] { render_prompt(PromptKind::AssignWeights, industrials(), none); }),
            ErrorCode::MissingPlaceholder);
  EXPECT_EQ(code_of([&] { render_prompt(PromptKind::AssignWeights, industrials()); }), ErrorCode::MissingPlaceholder);
  EXPECT_EQ(code_of([&] { render_prompt(PromptKind::ExtractTickers, industrials()); }),
            ErrorCode::MissingPlaceholder);
  PromptTemplate t{PromptKind::SelectStocks, "{tickers} and {unknown}"};
  EXPECT_EQ(code_of([&] { render_template(t, {{"tickers", "X"}}); }), ErrorCode::MissingPlaceholder);
}

TEST(Prompts, LiteralBracesInOutputSurvive) {
  const auto text =
      render_prompt(PromptKind::ExtractWeights, industrials(), std::nullopt, std::string_view("{\"GE\": 0.5}"));
  EXPECT_NE(text.find("{\"GE\": 0.5}"), std::string::npos);
}

TEST(TickerReply, NoisyFixture) {
  for (const auto& c : sectorllm::testing::noisy_ticker_replies()) {
    SCOPED_TRACE(c.reply);
    if (c.expected.empty()) {
      EXPECT_EQ(code_of([&] { parse_ticker_reply(c.reply); }), ErrorCode::ParseError);
    } else {
      EXPECT_EQ(parse_ticker_reply(c.reply), c.expected);
    }
  }
}

TEST(WeightString, PaperExample) {
  const auto p = parse_weight_string("AAPL: 0.2, MSFT: 0.3, GOOGL: 0.5");
  const std::map<std::string, double> want{{"AAPL", 0.2}, {"MSFT", 0.3}, {"GOOGL", 0.5}};
  EXPECT_EQ(p.weights, want);
  EXPECT_TRUE(p.warnings.empty());
}

TEST(WeightString, NoisyFixture) {
  for (const auto& c : sectorllm::testing::noisy_weight_replies()) {
    SCOPED_TRACE(c.reply);
    if (c.expected.empty()) {
      EXPECT_EQ(code_of([&] { parse_weight_string(c.reply); }), ErrorCode::ParseError);
    } else {
      EXPECT_EQ(parse_weight_string(c.reply).weights, c.expected);
    }
  }
}

TEST(WeightString, DuplicateWarns) {
  const auto p = parse_weight_string("AAPL: 0.5, AAPL: 0.3");
  EXPECT_EQ(p.weights.at("AAPL"), 0.3);
  EXPECT_EQ(p.warnings.size(), 1u);
}

TEST(WeightString, Negative) {
  EXPECT_EQ(code_of([] { parse_weight_string("AAPL: -0.1, MSFT: 1.1"); }), ErrorCode::NegativeWeight);
}

TEST(WeightString, FormatRoundTrip) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::vector<std::string> symbols{"AAPL", "BRK.B", "BF-B", "X", "GOOGL", "A1"};
  for (int trial = 0; trial < 500; ++trial) {
    std::map<std::string, double> m;
    for (const auto& s : symbols) {
      if (u(rng) < 0.6) m[s] = trial % 7 == 0 ? std::ldexp(u(rng), -40) : u(rng);
    }
    if (m.empty()) m["X"] = 1.0;
    EXPECT_EQ(parse_weight_string(format_weight_map(m)).weights, m);
  }
}

TEST(Cassette, JsonLineRoundTrip) {
  CassetteEntry e{7, PromptKind::ExtractWeights, "prompt\nwith \"quotes\"", "AAPL: 1", "acme", "acme-1",
                  "2025-01-01T00:00:00Z", R"({"temperature":0.7})"};
  const auto back = parse_json_line(to_json_line(e));
  EXPECT_EQ(back.sequence_no, 7);
  EXPECT_EQ(back.prompt_kind, e.prompt_kind);
  EXPECT_EQ(back.rendered_prompt, e.rendered_prompt);
  EXPECT_EQ(back.response_text, e.response_text);
  EXPECT_EQ(back.decoding, e.decoding);
  EXPECT_EQ(to_json_line(e).find('\n'), std::string::npos);
}

TEST(Cassette, OutOfOrderIsCorrupt) {
  TempDir tmp;
  CassetteEntry a{2, PromptKind::SelectStocks, "p", "r", "x", "y", "t", ""};
  CassetteEntry b{1, PromptKind::SelectStocks, "p", "r", "x", "y", "t", ""};
  const auto path = tmp.write("c.jsonl", to_json_line(a) + "\n" + to_json_line(b) + "\n");
  EXPECT_EQ(code_of([&] { load_cassette(path); }), ErrorCode::CassetteCorrupt);
  const auto junk = tmp.write("j.jsonl", "{not json\n");
  EXPECT_EQ(code_of([&] { load_cassette(junk); }), ErrorCode::CassetteCorrupt);
}

TEST(Cassette, RecordThenReplayRoundTrip) {
  KeyEnv key;
  TempDir tmp;
  const auto path = tmp / "m.jsonl";
  const SectorRegistry reg = SectorRegistry::from_specs({industrials()});
  auto fake = std::make_shared<sectorllm::testing::FakeLlm>(reg, 1);

  std::vector<SelectionRun> recorded_sel;
  std::vector<WeightingRun> recorded_w;
  {
    LlmClient client(provider(), fake, Transcript::record(path), nullptr, no_sleep);
    recorded_sel = run_selection_round(client, "m", industrials(), 3);
    const std::vector<std::string> tickers{"GE", "CAT", "MMM", "PH"};
    recorded_w = run_weighting_round(client, "m", industrials(), tickers, 2);
  }
  const int calls = fake->calls();
  EXPECT_EQ(calls, 3 * 2 + 2 * 2);

  auto counting = std::make_shared<sectorllm::testing::CountingTransport>();
  LlmClient replay(provider(), counting, Transcript::replay(path), nullptr, no_sleep);
  const auto sel = run_selection_round(replay, "m", industrials(), 3);
  const std::vector<std::string> tickers{"GE", "CAT", "MMM", "PH"};
  const auto w = run_weighting_round(replay, "m", industrials(), tickers, 2);
  ASSERT_EQ(sel.size(), recorded_sel.size());
  for (std::size_t i = 0; i < sel.size(); ++i) {
    EXPECT_EQ(sel[i].raw_tickers, recorded_sel[i].raw_tickers);
    EXPECT_EQ(sel[i].rationale_text, recorded_sel[i].rationale_text);
  }
  ASSERT_EQ(w.size(), recorded_w.size());
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_EQ(w[i].weights, recorded_w[i].weights);
  EXPECT_EQ(counting->calls(), 0);
  EXPECT_EQ(fake->calls(), calls);
}

TEST(Cassette, ReplayMissOnEditedPrompt) {
  TempDir tmp;
  CassetteEntry e{1, PromptKind::SelectStocks, "original prompt", "AAPL", "x", "y", "t", ""};
  const auto path = tmp.write("c.jsonl", to_json_line(e) + "\n");
  auto t = Transcript::replay(path);
  EXPECT_EQ(code_of([&] { t->lookup(PromptKind::SelectStocks, "original prompt!"); }), ErrorCode::ReplayMiss);
  EXPECT_EQ(code_of([&] { t->lookup(PromptKind::ExtractTickers, "original prompt"); }), ErrorCode::ReplayMiss);
  EXPECT_EQ(t->lookup(PromptKind::SelectStocks, "original prompt"), "AAPL");
  EXPECT_EQ(code_of([&] { t->lookup(PromptKind::SelectStocks, "original prompt"); }), ErrorCode::ReplayMiss);
}

TEST(Cassette, RepeatedPromptsReplayInOrder) {
  TempDir tmp;
  std::string text;
  for (int i = 1; i <= 3; ++i) {
    text += to_json_line({i, PromptKind::SelectStocks, "same", "reply " + std::to_string(i), "x", "y", "t", ""}) + "\n";
  }
  auto t = Transcript::replay(tmp.write("c.jsonl", text));
  EXPECT_EQ(t->lookup(PromptKind::SelectStocks, "same"), "reply 1");
  EXPECT_EQ(t->lookup(PromptKind::SelectStocks, "same"), "reply 2");
  EXPECT_EQ(t->lookup(PromptKind::SelectStocks, "same"), "reply 3");
}

TEST(Provider, BuildsRequestFromTemplate) {
  KeyEnv key;
  auto transport = std::make_shared<ScriptedTransport>();
  transport->reply("AAPL MSFT");
  auto p = provider();
  p.decoding = R"({"temperature":0.2})";
  LlmClient client(p, transport, Transcript::live(), nullptr, no_sleep);
  EXPECT_EQ(client.complete(PromptKind::ExtractTickers, "say \"hi\""), "AAPL MSFT");
  ASSERT_EQ(transport->requests.size(), 1u);
  const auto& r = transport->requests[0];
  EXPECT_EQ(r.url, p.endpoint);
  EXPECT_EQ(r.headers.at("Authorization"), "Bearer sk-test");
  const auto body = nlohmann::json::parse(r.body);
  EXPECT_EQ(body.at("model"), "acme-1");
  EXPECT_EQ(body.at("messages").at(0).at("content"), "say \"hi\"");
  EXPECT_EQ(body.at("temperature"), 0.2);
}

TEST(Provider, RetriesThenSucceeds) {
  KeyEnv key;
  auto transport = std::make_shared<ScriptedTransport>();
  transport->queue.push_back({503, "busy"});
  transport->queue.push_back({200, "{\"unexpected\":true}"});
  transport->reply("ok");
  std::vector<double> sleeps;
  LlmClient client(provider(), transport, Transcript::live(), nullptr,
                   [&](std::chrono::duration<double> d) { sleeps.push_back(d.count()); });
  EXPECT_EQ(client.complete(PromptKind::SelectStocks, "p"), "ok");
  ASSERT_EQ(sleeps.size(), 2u);
  EXPECT_GE(sleeps[0], 0.5);
  EXPECT_LE(sleeps[0], 1.5);
  EXPECT_GE(sleeps[1], 1.0);
  EXPECT_LE(sleeps[1], 3.0);
}

TEST(Provider, GivesUpAfterMaxRetries) {
  KeyEnv key;
  auto transport = std::make_shared<ScriptedTransport>();
  LlmClient client(provider(), transport, Transcript::live(), nullptr, no_sleep);
  EXPECT_EQ(code_of([&] { client.complete(PromptKind::SelectStocks, "p"); }), ErrorCode::ProviderError);
  EXPECT_EQ(transport->requests.size(), 3u);
}

TEST(Provider, MissingSecret) {
  ::unsetenv("SECTORLLM_TEST_KEY");
  auto transport = std::make_shared<ScriptedTransport>();
  LlmClient client(provider(), transport, Transcript::live(), nullptr, no_sleep);
  EXPECT_EQ(code_of([&] { client.complete(PromptKind::SelectStocks, "p"); }), ErrorCode::ProviderError);
  EXPECT_TRUE(transport->requests.empty());
}

TEST(Provider, SecretNeverRecorded) {
  KeyEnv key;
  TempDir tmp;
  auto transport = std::make_shared<ScriptedTransport>();
  transport->reply("AAPL");
  LlmClient client(provider(), transport, Transcript::record(tmp / "c.jsonl"), nullptr, no_sleep);
  client.complete(PromptKind::ExtractTickers, "p");
  EXPECT_EQ(sectorllm::testing::read_file(tmp / "c.jsonl").find("sk-test"), std::string::npos);
}

TEST(Provider, ConfigValidation) {
  auto p = provider();
  EXPECT_NO_THROW(p.validate());
  p.max_retries = -1;
  EXPECT_EQ(code_of([&] { p.validate(); }), ErrorCode::ConfigError);
  p = provider();
  p.request_timeout = 0;
  EXPECT_EQ(code_of([&] { p.validate(); }), ErrorCode::ConfigError);
  p = provider();
  p.response_pointer = "choices";
  EXPECT_EQ(code_of([&] { p.validate(); }), ErrorCode::ConfigError);
  p = provider();
  p.payload_template = "{";
  EXPECT_EQ(code_of([&] { p.validate(); }), ErrorCode::ConfigError);
}

TEST(Rounds, SelectionParsesSecondReply) {
  KeyEnv key;
  auto transport = std::make_shared<ScriptedTransport>();
  transport->reply("Here is a fund: Apple (AAPL), Microsoft (MSFT), Nvidia (NVDA).");
  transport->reply("AAPL MSFT NVDA");
  LlmClient client(provider(), transport, Transcript::live(), nullptr, no_sleep);
  const auto runs = run_selection_round(client, "m", industrials(), 1);
  ASSERT_EQ(runs.size(), 1u);
  EXPECT_EQ(runs[0].raw_tickers, (std::vector<std::string>{"AAPL", "MSFT", "NVDA"}));
  EXPECT_NE(runs[0].rationale_text.find("Apple"), std::string::npos);
  const auto second = nlohmann::json::parse(transport->requests[1].body);
  EXPECT_NE(second.at("messages").at(0).at("content").get<std::string>().find("Microsoft (MSFT)"),
            std::string::npos);
}

TEST(Rounds, EmptyTickerReply) {
  KeyEnv key;
  auto transport = std::make_shared<ScriptedTransport>();
  transport->reply("fund text");
  transport->reply("");
  LlmClient client(provider(), transport, Transcript::live(), nullptr, no_sleep);
  EXPECT_EQ(code_of([&] { run_selection_round(client, "m", industrials(), 1); }), ErrorCode::ParseError);
}

TEST(Rounds, WeightingDropsForeignTickers) {
  KeyEnv key;
  auto transport = std::make_shared<ScriptedTransport>();
  transport->reply("rationale");
  transport->reply("GE: 0.5, CAT: 0.3, AAPL: 0.2");
  LlmClient client(provider(), transport, Transcript::live(), nullptr, no_sleep);
  const std::vector<std::string> tickers{"GE", "CAT"};
  const auto runs = run_weighting_round(client, "m", industrials(), tickers, 1);
  const std::map<std::string, double> want{{"GE", 0.5}, {"CAT", 0.3}};
  EXPECT_EQ(runs[0].weights, want);
  ASSERT_EQ(runs[0].warnings.size(), 1u);
  EXPECT_NE(runs[0].warnings[0].find("AAPL"), std::string::npos);
}

TEST(Rounds, WeightingWithoutPairs) {
  KeyEnv key;
  auto transport = std::make_shared<ScriptedTransport>();
  transport->reply("rationale");
  transport->reply("AAPL 0.2 MSFT");
  LlmClient client(provider(), transport, Transcript::live(), nullptr, no_sleep);
  const std::vector<std::string> tickers{"GE", "CAT"};
  EXPECT_EQ(code_of([&] { run_weighting_round(client, "m", industrials(), tickers, 1); }), ErrorCode::ParseError);
}

TEST(Rounds, ReplayNeverTouchesTransport) {
  TempDir tmp;
  const auto sel = render_prompt(PromptKind::SelectStocks, industrials());
  const auto ext = render_prompt(PromptKind::ExtractTickers, industrials(), std::nullopt, std::string_view("fund"));
  const auto path = tmp.write("c.jsonl", to_json_line({1, PromptKind::SelectStocks, sel, "fund", "x", "y", "t", ""}) +
                                             "\n" +
                                             to_json_line({2, PromptKind::ExtractTickers, ext, "GE CAT", "x", "y", "t", ""}) +
                                             "\n");
  auto counting = std::make_shared<sectorllm::testing::CountingTransport>();
  LlmClient client(provider(), counting, Transcript::replay(path));
  const auto runs = run_selection_round(client, "m", industrials(), 1);
  EXPECT_EQ(runs[0].raw_tickers, (std::vector<std::string>{"GE", "CAT"}));
  EXPECT_EQ(counting->calls(), 0);
}
