#include "fixture.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <random>

#include "fake_llm.hpp"
#include "sectorllm/config.hpp"
#include "sectorllm/pipeline.hpp"

namespace sectorllm::testing {

namespace {

struct SectorDef {
  const char* name;
  const char* index_ticker;
  const char* price_symbol;
  std::vector<const char*> members;
};

const std::vector<SectorDef>& sector_defs() {
  static const std::vector<SectorDef> defs = {
      {"Information Technology", "S&P 500-45", "^SP500-45",
       {"AAPL", "MSFT", "NVDA", "AVGO", "ORCL", "CRM", "AMD", "ADBE", "ACN", "CSCO", "IBM", "INTU", "TXN",
        "QCOM", "NOW", "AMAT", "MU", "ADI", "LRCX", "KLAC", "PANW", "SNPS", "CDNS", "ANET", "APH", "MSI"}},
      {"Industrials", "S&P 500-20", "^SP500-20",
       {"GE", "CAT", "RTX", "UNP", "HON", "ETN", "LMT", "DE", "UPS", "BA", "ADP", "WM", "PH", "TT",
        "GD", "NOC", "ITW", "CSX", "EMR", "FDX", "NSC", "MMM", "CTAS", "PCAR", "CARR", "JCI"}},
      {"Health Care", "S&P 500-35", "^SP500-35",
       {"LLY", "UNH", "JNJ", "ABBV", "MRK", "TMO", "ABT", "ISRG", "DHR", "AMGN", "PFE", "SYK", "BSX", "VRTX",
        "ELV", "GILD", "MDT", "BMY", "CI", "ZTS", "REGN", "MCK", "CVS", "HCA", "BDX", "EW"}},
      {"Financials", "S&P 500-40", "^SP500-40",
       {"JPM", "V", "MA", "BAC", "WFC", "GS", "SPGI", "AXP", "MS", "BLK", "C", "PGR", "SCHW", "CB",
        "MMC", "ICE", "CME", "AON", "PNC", "USB", "MCO", "AJG", "TRV", "AFL", "COF", "MET"}},
      {"Energy", "S&P 500-10", "^SP500-10",
       {"XOM", "CVX", "COP", "EOG", "SLB", "MPC", "PSX", "WMB", "OKE", "VLO", "KMI", "OXY", "HES", "FANG",
        "BKR", "HAL", "DVN", "TRGP", "CTRA", "EQT", "MRO", "APA", "EXE", "TPL"}},
      {"Utilities", "S&P 500-55", "^SP500-55",
       {"NEE", "SO", "DUK", "CEG", "SRE", "AEP", "D", "PCG", "EXC", "PEG", "XEL", "ED", "EIX", "WEC",
        "ETR", "DTE", "AEE", "PPL", "ES", "FE", "CNP", "ATO", "CMS", "NI"}},
  };
  return defs;
}

std::vector<Date> business_days(Date from, Date to) {
  std::vector<Date> out;
  for (std::chrono::sys_days d{from}; d <= std::chrono::sys_days{to}; d += std::chrono::days{1}) {
    const std::chrono::weekday wd{d};
    if (wd != std::chrono::Saturday && wd != std::chrono::Sunday) out.emplace_back(d);
  }
  return out;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

}  // namespace

void write_market_data(const std::filesystem::path& dir, std::uint64_t seed, int sectors) {
  using namespace std::chrono;
  std::filesystem::create_directories(dir);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto days = business_days(year{2024} / January / 1, year{2025} / June / 30);
  const auto late_listing = Date{year{2024} / July / 1};

  std::vector<double> market(days.size());
  for (auto& m : market) m = 0.0004 + 0.009 * z(rng);

  std::string registry = "sector_name,index_ticker,constituent\n";
  std::string prices = "date,ticker,adjusted_close\n";
  for (int si = 0; si < sectors; ++si) {
    const auto& s = sector_defs()[static_cast<std::size_t>(si)];
    std::vector<double> sector(days.size());
    for (auto& v : sector) v = 0.006 * z(rng);
    std::vector<double> index_ret(days.size(), 0.0);
    for (std::size_t k = 0; k < s.members.size(); ++k) {
      const std::string ticker = s.members[k];
      registry += fmt::format("{},{},{}\n", s.name, s.index_ticker, ticker);
      const double beta = 0.7 + 0.6 * u(rng);
      const double alpha = 0.0002 + 0.0004 * z(rng);
      const double idio = 0.008 + 0.01 * u(rng);
      double price = 20.0 + 380.0 * u(rng);
      // The last member lists mid-year and so lacks in-sample coverage; the
      // second misses a handful of sessions.
      const bool late = k + 1 == s.members.size();
      for (std::size_t t = 0; t < days.size(); ++t) {
        const double r = alpha + beta * market[t] + sector[t] + idio * z(rng);
        index_ret[t] += r / static_cast<double>(s.members.size());
        if (t > 0) price *= 1.0 + r;
        if (late && days[t] < late_listing) continue;
        if (k == 1 && t % 97 == 50) continue;
        prices += fmt::format("{},{},{:.4f}\n", format_date(days[t]), ticker, price);
      }
    }
    double level = 1000.0;
    for (std::size_t t = 0; t < days.size(); ++t) {
      if (t > 0) level *= 1.0 + index_ret[t] + 0.001 * z(rng);
      prices += fmt::format("{},{},{:.4f}\n", format_date(days[t]), s.price_symbol, level);
    }
  }
  write_file(dir / "prices.csv", prices);
  write_file(dir / "registry.csv", registry);
}

void write_replay_fixture(const std::filesystem::path& dir, const FixtureShape& shape) {
  if (shape.sectors < 1 || shape.sectors > static_cast<int>(sector_defs().size()) || shape.models < 1) {
    throw std::invalid_argument("unsupported fixture shape");
  }
  write_market_data(dir, shape.seed, shape.sectors);

  nlohmann::json config;
  config["models"] = nlohmann::json::array();
  for (int m = 0; m < shape.models; ++m) {
    config["models"].push_back({{"model_id", fmt::format("model-{}", static_cast<char>('a' + m))},
                                {"provider_id", "scripted"},
                                {"endpoint", "https://llm.invalid/v1/chat/completions"},
                                {"model_name", fmt::format("scripted-{}", m + 1)},
                                {"auth_ref", "SECTORLLM_FIXTURE_KEY"},
                                {"decoding", {{"temperature", 0.7}}}});
  }
  config["sectors"] = nlohmann::json::array();
  config["index_price_tickers"] = nlohmann::json::object();
  for (int s = 0; s < shape.sectors; ++s) {
    const auto& def = sector_defs()[static_cast<std::size_t>(s)];
    config["sectors"].push_back(def.name);
    config["index_price_tickers"][def.index_ticker] = def.price_symbol;
  }
  config["portfolio_size"] = 20;
  config["selection_repeats"] = 10;
  config["weighting_repeats"] = 5;
  config["frontier_points"] = 50;
  config["rf_annual"] = 0.02;
  config["mode"] = "replay";
  config["windows"] = {{{"label", "in_sample"}, {"start", "2024-01-01"}, {"end", "2025-01-01"}},
                       {{"label", "oos_1"}, {"start", "2025-01-01"}, {"end", "2025-04-01"}},
                       {{"label", "oos_2"}, {"start", "2025-04-01"}, {"end", "2025-07-01"}}};
  config["data"] = {{"prices", "prices.csv"}, {"registry", "registry.csv"}, {"cassette_dir", "cassettes"}};
  write_file(dir / "config.json", config.dump(2) + "\n");

  std::filesystem::remove_all(dir / "cassettes");
  auto run = load_run_config(dir / "config.json");
  run.mode = TranscriptMode::Record;
  const auto registry = SectorRegistry::load(run.registry);
  ::setenv("SECTORLLM_FIXTURE_KEY", "fixture-key", 0);
  std::uint64_t model_seed = shape.seed;
  std::map<std::string, std::shared_ptr<Transport>> fakes;
  for (const auto& m : run.models) fakes[m.model_id] = std::make_shared<FakeLlm>(registry, ++model_seed);
  const auto scratch = dir / ".record";
  {
    Pipeline p(run, scratch, [&](const ModelConfig& m) { return fakes.at(m.model_id); });
    p.select();
    p.weight();
  }
  std::filesystem::remove_all(scratch);
}

}  // namespace sectorllm::testing
