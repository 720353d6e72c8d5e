#include <gtest/gtest.h>

#include <json.hpp>

#include <cstdlib>
#include <set>

#include "fake_llm.hpp"
#include "fixture.hpp"
#include "sectorllm/csv.hpp"
#include "sectorllm/pipeline.hpp"
#include "temp_dir.hpp"
#include "test_util.hpp"

using namespace sectorllm;
using sectorllm::testing::code_of;
using sectorllm::testing::read_file;
using sectorllm::testing::TempDir;

namespace {

const std::filesystem::path kFixture = SECTORLLM_FIXTURE_DIR;

RunConfig fixture_config() { return load_run_config(kFixture / "config.json"); }

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < text.size()) {
    const auto end = text.find('\n', start);
    out.push_back(text.substr(start, end - start));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return out;
}

const char* kMinimalConfig = R"({
  "models": [{"model_id": "m1", "provider_id": "p", "endpoint": "https://x.invalid", "model_name": "n",
              "auth_ref": "K"}],
  "sectors": ["Energy"],
  "windows": [{"label": "in_sample", "start": "2020-01-01", "end": "2021-01-01"},
              {"label": "oos_1", "start": "2021-01-01", "end": "2021-04-01"}],
  "data": {"prices": "p.csv", "registry": "r.csv", "cassette_dir": "c"}
})";

}  // namespace

TEST(Config, Defaults) {
  const auto c = parse_run_config(kMinimalConfig, "/base");
  EXPECT_EQ(c.portfolio_size, 20);
  EXPECT_EQ(c.selection_repeats, 10);
  EXPECT_EQ(c.weighting_repeats, 5);
  EXPECT_EQ(c.frontier_points, 50);
  EXPECT_EQ(c.rf_annual, 0.02);
  EXPECT_EQ(c.periods_per_year, 252);
  EXPECT_EQ(c.mode, TranscriptMode::Replay);
  EXPECT_EQ(c.prices, std::filesystem::path("/base/p.csv"));
  EXPECT_EQ(c.cassette_for(c.models[0]), std::filesystem::path("/base/c/m1.jsonl"));
  EXPECT_EQ(c.in_sample().label, WindowLabel::InSample);
  EXPECT_EQ(c.out_of_sample().size(), 1u);
}

TEST(Config, UnknownKeysRejected) {
  auto j = nlohmann::json::parse(kMinimalConfig);
  j["portfolio_sise"] = 15;
  EXPECT_EQ(code_of([&] { parse_run_config(j.dump(), "/"); }), ErrorCode::ConfigError);
  j = nlohmann::json::parse(kMinimalConfig);
  j["models"][0]["temperature"] = 0.1;
  EXPECT_EQ(code_of([&] { parse_run_config(j.dump(), "/"); }), ErrorCode::ConfigError);
}

TEST(Config, Validation) {
  auto bad = [](auto mutate) {
    auto j = nlohmann::json::parse(kMinimalConfig);
    mutate(j);
    return code_of([&] { parse_run_config(j.dump(), "/").validate(); });
  };
  EXPECT_EQ(bad([](auto& j) { j["portfolio_size"] = 1; }), ErrorCode::ConfigError);
  EXPECT_EQ(bad([](auto& j) { j["models"] = nlohmann::json::array(); }), ErrorCode::ConfigError);
  EXPECT_EQ(bad([](auto& j) { j["windows"].erase(0); }), ErrorCode::ConfigError);
  EXPECT_EQ(bad([](auto& j) { j["windows"][1]["start"] = "2020-06-01"; }), ErrorCode::ConfigError);
  EXPECT_EQ(bad([](auto& j) { j["frontier_points"] = 1; }), ErrorCode::ConfigError);
  EXPECT_EQ(bad([](auto& j) { j["mode"] = "dry"; }), ErrorCode::ConfigError);
  EXPECT_EQ(bad([](auto& j) { j["models"].push_back(j["models"][0]); }), ErrorCode::ConfigError);
}

TEST(Config, SnapshotHasNoSecrets) {
  ::setenv("K", "super-secret-value", 1);
  const auto snapshot = config_snapshot(parse_run_config(kMinimalConfig, "/"));
  EXPECT_EQ(snapshot.find("super-secret-value"), std::string::npos);
  EXPECT_NE(snapshot.find("\"K\""), std::string::npos);
  ::unsetenv("K");
}

TEST(CellStem, Sanitized) {
  EXPECT_EQ(cell_stem("GPT-4o", "Information Technology"), "gpt-4o__information_technology");
  EXPECT_EQ(cell_stem("a/b", "S&P"), "a_b__s_p");
}

TEST(Digest, KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Csv, QuotedFields) {
  EXPECT_EQ(csv::split_record(R"(a,"b,c","d""e",)"), (std::vector<std::string>{"a", "b,c", "d\"e", ""}));
  EXPECT_EQ(csv::join_record({"x", "y,z", "q\"r"}), R"(x,"y,z","q""r")");
  for (const std::string f : {"plain", "with,comma", "with\"quote", ""}) {
    EXPECT_EQ(csv::split_record(csv::join_record({f, "tail"}))[0], f);
  }
}

TEST(Csv, RealFormatting) {
  EXPECT_EQ(csv::format_real(0.05), "0.05");
  EXPECT_EQ(csv::format_real(1.0), "1");
  EXPECT_EQ(csv::format_real(1.0 / 3.0), "0.3333333333");
}

TEST(Pipeline, ReplayFixtureEndToEnd) {
  TempDir a;
  TempDir b;
  int transports = 0;
  auto factory = [&](const ModelConfig&) -> std::shared_ptr<Transport> {
    ++transports;
    return std::make_shared<sectorllm::testing::CountingTransport>();
  };
  const auto ma = Pipeline(fixture_config(), a.path(), factory).run();
  const auto mb = Pipeline(fixture_config(), b.path(), factory).run();
  EXPECT_EQ(transports, 0);
  EXPECT_EQ(ma.succeeded(), 6);
  EXPECT_EQ(ma.failed(), 0);
  EXPECT_EQ(ma.portfolio_count, 30);
  EXPECT_EQ(read_file(a / "digests.txt"), read_file(b / "digests.txt"));
  EXPECT_EQ(read_file(a / "manifest.json"), read_file(b / "manifest.json"));

  const auto manifest = nlohmann::json::parse(read_file(a / "manifest.json"));
  EXPECT_EQ(manifest["portfolio_count"], 30);
  EXPECT_EQ(manifest["digests"].size(), ma.digests.size());

  const auto portfolios = lines_of(read_file(a / "portfolios.csv"));
  std::set<std::string> keys;
  for (std::size_t i = 1; i < portfolios.size(); ++i) {
    const auto f = csv::split_record(portfolios[i]);
    keys.insert(f[0] + "|" + f[1] + "|" + f[2]);
  }
  EXPECT_EQ(keys.size(), 30u);
}

TEST(Pipeline, ParallelMatchesSerial) {
  TempDir a;
  TempDir b;
  auto serial = fixture_config();
  serial.workers = 1;
  auto parallel = fixture_config();
  parallel.workers = 4;
  Pipeline(serial, a.path()).run();
  Pipeline(parallel, b.path()).run();
  EXPECT_EQ(read_file(a / "digests.txt"), read_file(b / "digests.txt"));
}

TEST(Pipeline, StagedRerunMatchesFullRun) {
  TempDir full;
  TempDir staged;
  Pipeline(fixture_config(), full.path()).run();
  {
    Pipeline p(fixture_config(), staged.path());
    p.select();
    p.weight();
    p.build();
    p.optimize();
  }
  {
    Pipeline p(fixture_config(), staged.path());
    p.backtest();
    p.diagnose();
    p.report();
    // Rerunning a late stage reuses persisted state.
    p.backtest();
    p.report();
  }
  EXPECT_EQ(read_file(full / "digests.txt"), read_file(staged / "digests.txt"));
}

TEST(Pipeline, ClassGridLayout) {
  TempDir out;
  Pipeline(fixture_config(), out.path()).run();
  for (const std::string basis : {"cumulative", "sharpe"}) {
    for (const std::string w : {"oos_1", "oos_2"}) {
      const auto rows = lines_of(read_file(out / ("classes_" + basis + "_" + w + ".csv")));
      ASSERT_EQ(rows.size(), 4u);
      EXPECT_EQ(rows[0], "sector,model-a,model-b");
      EXPECT_EQ(csv::split_record(rows[1])[0], "Information Technology");
      for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto f = csv::split_record(rows[r]);
        ASSERT_EQ(f.size(), 3u);
        for (std::size_t c = 1; c < f.size(); ++c) {
          EXPECT_TRUE(f[c] == "Green" || f[c] == "Yellow" || f[c] == "Red") << f[c];
        }
      }
    }
  }
}

TEST(Pipeline, ReportWithoutStateFails) {
  TempDir out;
  Pipeline p(fixture_config(), out.path());
  EXPECT_EQ(code_of([&] { p.report(); }), ErrorCode::DataError);
  EXPECT_EQ(code_of([&] { p.optimize(); }), ErrorCode::DataError);
}

TEST(Pipeline, MissingInputsFail) {
  TempDir out;
  auto c = fixture_config();
  c.prices = out / "nope.csv";
  EXPECT_EQ(code_of([&] { Pipeline(c, out.path()); }), ErrorCode::DataError);
  c = fixture_config();
  c.registry = out / "nope.csv";
  EXPECT_EQ(code_of([&] { Pipeline(c, out.path()); }), ErrorCode::DataError);
}

TEST(Pipeline, MissingCassetteFailsOnlyThatModel) {
  TempDir work;
  std::filesystem::copy(kFixture, work.path(), std::filesystem::copy_options::recursive);
  std::filesystem::remove(work / "cassettes/model-b.jsonl");
  const auto m = Pipeline(load_run_config(work / "config.json"), work / "out").run();
  EXPECT_EQ(m.succeeded(), 3);
  EXPECT_EQ(m.failed(), 3);
  EXPECT_EQ(m.portfolio_count, 15);
  for (const auto& cell : m.cells) {
    EXPECT_EQ(cell.status == CellStatus::Failed, cell.model_id == "model-b");
  }
  const auto grid = lines_of(read_file(work / "out/classes_sharpe_oos_1.csv"));
  EXPECT_EQ(csv::split_record(grid[1])[2], "failed");
}

TEST(Pipeline, LiveFailureIsolatedToModel) {
  ::setenv("SECTORLLM_FIXTURE_KEY", "k", 1);
  TempDir out;
  auto c = fixture_config();
  c.mode = TranscriptMode::Live;
  for (auto& m : c.models) m.provider.backoff_base = 0.0;
  const auto registry = SectorRegistry::load(c.registry);
  auto good = std::make_shared<sectorllm::testing::FakeLlm>(registry, 5);
  auto bad = std::make_shared<sectorllm::testing::CountingTransport>();
  const auto m = Pipeline(c, out.path(), [&](const ModelConfig& mc) -> std::shared_ptr<Transport> {
                   if (mc.model_id == "model-b") return bad;
                   return good;
                 }).run();
  EXPECT_EQ(m.succeeded(), 3);
  EXPECT_EQ(m.failed(), 3);
  EXPECT_GT(bad->calls(), 0);
  EXPECT_GT(good->calls(), 0);
  EXPECT_FALSE(m.error_log.empty());
  EXPECT_FALSE(std::filesystem::exists(c.cassette_dir / "model-a.jsonl.tmp"));
}

TEST(Pipeline, PortfolioCountScalesWithCells) {
  for (const auto& [models, sectors] : std::vector<std::pair<int, int>>{{1, 1}, {1, 4}, {3, 2}}) {
    TempDir dir;
    sectorllm::testing::write_replay_fixture(dir.path(), {models, sectors, 99});
    const auto m = Pipeline(load_run_config(dir / "config.json"), dir / "out").run();
    EXPECT_EQ(m.succeeded(), models * sectors);
    EXPECT_EQ(m.portfolio_count, 5 * models * sectors);
  }
}
