#include "sectorllm/pipeline.hpp"

#include <fmt/format.h>
#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include "reports.hpp"
#include "state.hpp"

namespace sectorllm {

std::string_view to_string(Stage stage) noexcept {
  switch (stage) {
    case Stage::Select: return "select";
    case Stage::Weight: return "weight";
    case Stage::Build: return "build";
    case Stage::Optimize: return "optimize";
    case Stage::Backtest: return "backtest";
    case Stage::Diagnose: return "diagnose";
    case Stage::Report: return "report";
  }
  return "?";
}

int RunManifest::succeeded() const {
  return static_cast<int>(std::count_if(cells.begin(), cells.end(),
                                        [](const CellRecord& c) { return c.status == CellStatus::Succeeded; }));
}

int RunManifest::failed() const { return static_cast<int>(cells.size()) - succeeded(); }

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::IoError, "SHA-256 failed");
  }
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::vector<ArtifactDigest> digest_directory(const std::filesystem::path& root,
                                             const std::vector<std::string>& relative_paths) {
  std::vector<ArtifactDigest> out;
  for (const auto& rel : relative_paths) {
    std::ifstream in(root / rel, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot read " + (root / rel).string());
    std::ostringstream buf;
    buf << in.rdbuf();
    out.push_back({rel, sha256_hex(buf.str())});
  }
  std::sort(out.begin(), out.end(), [](const ArtifactDigest& a, const ArtifactDigest& b) { return a.path < b.path; });
  return out;
}

std::string cell_stem(const std::string& model_id, const std::string& sector_name) {
  auto clean = [](const std::string& s) {
    std::string r;
    for (char c : s) {
      const auto u = static_cast<unsigned char>(c);
      if (std::isalnum(u) || c == '-' || c == '.') {
        r += static_cast<char>(std::tolower(u));
      } else if (!r.empty() && r.back() != '_') {
        r += '_';
      }
    }
    while (!r.empty() && r.back() == '_') r.pop_back();
    return r;
  };
  return clean(model_id) + "__" + clean(sector_name);
}

namespace {

using state::json;

struct SectorData {
  std::set<std::string> coverage;
  std::string index_symbol;
  std::string error;  // non-empty when the sector cannot be evaluated
};

std::size_t rows_in(const PriceStore& store, const std::string& ticker, const DateRange& range) {
  return store.observations(ticker, range).size();
}

}  // namespace

struct Pipeline::Impl {
  const RunConfig& config;
  std::filesystem::path out;
  TransportFactory transports;
  SectorRegistry registry;
  PriceStore prices;
  std::map<std::string, SectorData> sectors;
  std::vector<CellRecord> cells;

  std::mutex clients_mutex;
  std::map<std::string, std::shared_ptr<LlmClient>> clients;

  Impl(const RunConfig& c, std::filesystem::path o, TransportFactory t)
      : config(c), out(std::move(o)), transports(std::move(t)) {
    if (!std::filesystem::exists(config.registry)) {
      throw Error(ErrorCode::DataError, "registry file not found: " + config.registry.string());
    }
    if (!std::filesystem::exists(config.prices)) {
      throw Error(ErrorCode::DataError, "price file not found: " + config.prices.string());
    }
    try {
      registry = SectorRegistry::load(config.registry);
      prices = PriceStore::load(config.prices);
    } catch (const Error& e) {
      throw Error(ErrorCode::DataError, e.what());
    }
    for (const auto& name : config.sectors) sectors[name] = sector_data(name);

    const auto cells_path = out / "state" / "cells.json";
    if (std::filesystem::exists(cells_path)) {
      cells = state::cells_from_json(state::read_json(cells_path));
    } else {
      reset_cells();
    }
  }

  SectorData sector_data(const std::string& name) const {
    SectorData d;
    if (!registry.contains(name)) {
      d.error = "sector not in registry: " + name;
      return d;
    }
    const auto& spec = registry.at(name);
    d.index_symbol = config.index_price_symbol(spec.index_ticker);
    if (!prices.has(d.index_symbol)) {
      d.error = fmt::format("MissingTicker: no price history for sector index {}", d.index_symbol);
      return d;
    }
    for (const auto& t : spec.constituents) {
      bool covered = prices.has(t);
      for (const auto& w : config.windows) {
        if (!covered) break;
        const auto need = static_cast<double>(rows_in(prices, d.index_symbol, w.range()));
        covered = static_cast<double>(rows_in(prices, t, w.range())) >= (1.0 - config.coverage_loss_threshold) * need;
      }
      if (covered) d.coverage.insert(t);
    }
    return d;
  }

  void reset_cells() {
    cells.clear();
    for (const auto& m : config.models) {
      for (const auto& s : config.sectors) cells.push_back({m.model_id, s, CellStatus::Succeeded, {}, {}, {}});
    }
  }

  void save_cells() const { state::write_json(out / "state" / "cells.json", state::to_json(cells)); }

  std::filesystem::path state_path(Stage stage, const CellRecord& c) const {
    return out / "state" / std::string(to_string(stage)) / (cell_stem(c.model_id, c.sector_name) + ".json");
  }

  const ModelConfig& model(const std::string& id) const {
    for (const auto& m : config.models) {
      if (m.model_id == id) return m;
    }
    throw Error(ErrorCode::ConfigError, "unknown model " + id);
  }

  const SectorSpec& sector(const CellRecord& c) const {
    const auto& d = sectors.at(c.sector_name);
    if (!d.error.empty()) throw Error(ErrorCode::DataError, d.error);
    return registry.at(c.sector_name);
  }

  /// One client per model, shared by that model's cells.
  std::shared_ptr<LlmClient> client(const std::string& model_id) {
    std::lock_guard lock(clients_mutex);
    if (auto it = clients.find(model_id); it != clients.end()) return it->second;
    const auto& m = model(model_id);
    std::shared_ptr<Transcript> transcript;
    std::shared_ptr<Transport> transport;
    switch (config.mode) {
      case TranscriptMode::Replay: transcript = Transcript::replay(config.cassette_for(m)); break;
      case TranscriptMode::Record: transcript = Transcript::record(config.cassette_for(m)); break;
      case TranscriptMode::Live: transcript = Transcript::live(); break;
    }
    if (config.mode != TranscriptMode::Replay) {
      transport = transports ? transports(m) : make_http_transport();
    }
    auto limiter = std::make_shared<InFlightLimiter>(m.provider.max_in_flight);
    auto c = std::make_shared<LlmClient>(m.provider, transport, transcript, limiter);
    clients.emplace(model_id, c);
    return c;
  }

  /// Runs `fn` on every still-healthy cell with a bounded worker pool. A
  /// throwing cell is marked failed; its siblings continue.
  void for_each_cell(Stage stage, const std::function<void(CellRecord&, std::vector<std::string>&)>& fn) {
    if (stage != Stage::Select && !std::filesystem::exists(out / "state" / "cells.json")) {
      throw Error(ErrorCode::DataError, fmt::format("no stage state in {}; run select first", out.string()));
    }
    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (cells[i].status == CellStatus::Succeeded) todo.push_back(i);
    }
    std::vector<std::vector<std::string>> warnings(cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t k = next++; k < todo.size(); k = next++) {
        auto& cell = cells[todo[k]];
        try {
          fn(cell, warnings[todo[k]]);
        } catch (const std::exception& e) {
          cell.status = CellStatus::Failed;
          cell.failed_stage = std::string(to_string(stage));
          cell.error = e.what();
        }
      }
    };
    const auto n = static_cast<std::size_t>(std::max(1, config.workers));
    if (n == 1 || todo.size() <= 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (std::size_t t = 0; t < std::min(n, todo.size()); ++t) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
      for (auto& w : warnings[i]) cells[i].warnings.push_back(fmt::format("{}: {}", to_string(stage), w));
    }
    save_cells();
  }

  /// Aligned simple returns of `tickers` over `range`, columns in the given order.
  ReturnsMatrix returns_for(const std::vector<std::string>& tickers, const DateRange& range,
                            std::vector<std::string>* warnings) const {
    std::vector<PriceSeries> series;
    series.reserve(tickers.size());
    for (const auto& t : tickers) series.push_back(prices.series(t, range));
    auto m = to_returns(series, config.alignment);
    if (warnings) {
      for (const auto& s : series) {
        const auto own = static_cast<double>(s.size() - 1);
        const auto lost = own - static_cast<double>(m.rows());
        if (own > 0 && lost / own > config.coverage_loss_threshold) {
          warnings->push_back(fmt::format("{} loses {:.1f}% of its observations to date alignment", s.ticker(),
                                          100.0 * lost / own));
        }
      }
    }
    return m.select_columns(tickers);
  }

  DateRange full_range() const {
    DateRange r = config.windows.front().range();
    for (const auto& w : config.windows) {
      r.start = std::min(r.start, w.start);
      r.end = std::max(r.end, w.end);
    }
    return r;
  }

  state::SelectionState selection(const CellRecord& c) const {
    return state::selection_from_json(state::read_json(state_path(Stage::Select, c)));
  }

  std::vector<WeightingRun> weighting(const CellRecord& c) const {
    return state::weighting_from_json(state::read_json(state_path(Stage::Weight, c)));
  }

  std::vector<Portfolio> portfolios(const CellRecord& c) const {
    auto all = state::portfolios_from_json(state::read_json(state_path(Stage::Build, c)));
    auto opt = state::portfolios_from_json(state::read_json(state_path(Stage::Optimize, c)).at("portfolios"));
    all.insert(all.end(), opt.begin(), opt.end());
    return all;
  }
};

Pipeline::Pipeline(RunConfig config, std::filesystem::path out_dir, TransportFactory transports)
    : config_(std::move(config)), out_dir_(std::move(out_dir)) {
  config_.validate();
  impl_ = std::make_unique<Impl>(config_, out_dir_, std::move(transports));
}

Pipeline::~Pipeline() = default;

const std::vector<CellRecord>& Pipeline::cells() const noexcept { return impl_->cells; }

void Pipeline::select() {
  auto& I = *impl_;
  I.reset_cells();
  I.for_each_cell(Stage::Select, [&](CellRecord& cell, std::vector<std::string>& warnings) {
    const auto& spec = I.sector(cell);
    auto client = I.client(cell.model_id);
    state::SelectionState s;
    s.runs = run_selection_round(*client, cell.model_id, spec, config_.selection_repeats);
    const auto& coverage = I.sectors.at(cell.sector_name).coverage;
    try {
      s.selection = aggregate_selection(s.runs, spec, coverage, config_.portfolio_size);
    } catch (const UniverseTooSmall& e) {
      if (e.selection().universe_size < 2) throw;
      warnings.push_back(e.what());
      s.selection = e.selection();
    }
    state::write_json(I.state_path(Stage::Select, cell), state::to_json(s));
  });
}

void Pipeline::weight() {
  auto& I = *impl_;
  I.for_each_cell(Stage::Weight, [&](CellRecord& cell, std::vector<std::string>& warnings) {
    const auto& spec = I.sector(cell);
    const auto s = I.selection(cell);
    auto client = I.client(cell.model_id);
    auto runs = run_weighting_round(*client, cell.model_id, spec, s.selection.chosen, config_.weighting_repeats);
    for (const auto& r : runs) {
      for (const auto& w : r.warnings) warnings.push_back(fmt::format("run {}: {}", r.run_index, w));
    }
    state::write_json(I.state_path(Stage::Weight, cell), state::to_json(runs));
  });
}

void Pipeline::build() {
  auto& I = *impl_;
  I.for_each_cell(Stage::Build, [&](CellRecord& cell, std::vector<std::string>&) {
    const auto s = I.selection(cell);
    const auto runs = I.weighting(cell);
    std::vector<Portfolio> out;
    out.push_back(average_weights(runs, s.selection.chosen));
    out.push_back(equal_weight(s.selection.chosen, cell.model_id, cell.sector_name));
    state::write_json(I.state_path(Stage::Build, cell), state::to_json(out));
  });
}

void Pipeline::optimize() {
  auto& I = *impl_;
  I.for_each_cell(Stage::Optimize, [&](CellRecord& cell, std::vector<std::string>& warnings) {
    I.sector(cell);
    const auto s = I.selection(cell);
    const auto& tickers = s.selection.chosen;
    const auto returns = I.returns_for(tickers, config_.in_sample().range(), &warnings);
    const auto moments = estimate_moments(returns);
    warnings.insert(warnings.end(), moments.warnings.begin(), moments.warnings.end());
    const auto n = static_cast<int>(tickers.size());
    const double rf = per_period_rate(config_.rf_annual, config_.periods_per_year);
    const auto frontier = trace_frontier(moments, weight_bounds(n), config_.frontier_points, rf);
    const auto long_only = trace_frontier(moments, WeightBounds{0.0, 1.0, n}, config_.frontier_points, rf);
    const auto picked = pick_portfolios(frontier, cell.model_id, cell.sector_name);

    state::FrontierState fs{tickers, frontier.points, long_only.points};
    json j = state::to_json(fs);
    j["portfolios"] = state::to_json(std::vector<Portfolio>{picked.min_variance, picked.max_return, picked.max_sharpe});
    state::write_json(I.state_path(Stage::Optimize, cell), j);
  });
}

void Pipeline::backtest() {
  auto& I = *impl_;
  const BacktestSettings settings{config_.rf_annual, config_.periods_per_year, config_.cumulative_summary};
  I.for_each_cell(Stage::Backtest, [&](CellRecord& cell, std::vector<std::string>&) {
    I.sector(cell);
    const auto s = I.selection(cell);
    const auto portfolios = I.portfolios(cell);
    const auto& index_symbol = I.sectors.at(cell.sector_name).index_symbol;
    auto columns = s.selection.chosen;
    columns.push_back(index_symbol);
    const auto all = I.returns_for(columns, I.full_range(), nullptr);

    std::vector<state::WindowResults> results;
    for (const auto& w : config_.out_of_sample()) {
      const auto slice = slice_window(all, w);
      const Eigen::VectorXd index_series = slice.values().col(*slice.column_of(index_symbol));
      state::WindowResults r;
      r.window = w.label;
      r.dates = slice.dates();
      r.index = evaluate_series(index_series, index_series, w.label, settings);
      r.index.model_id = cell.model_id;
      r.index.sector_name = cell.sector_name;
      for (const auto& p : portfolios) {
        auto res = evaluate_series(portfolio_returns(slice, p), index_series, w.label, settings);
        res.kind = p.kind();
        res.model_id = cell.model_id;
        res.sector_name = cell.sector_name;
        r.portfolios.emplace(p.kind(), std::move(res));
      }
      r.class_cumulative = classify(r.portfolios, r.index, Basis::CumulativeReturn).value;
      r.class_sharpe = classify(r.portfolios, r.index, Basis::Sharpe).value;
      results.push_back(std::move(r));
    }
    state::write_json(I.state_path(Stage::Backtest, cell), state::to_json(results));
  });
}

void Pipeline::diagnose() {
  auto& I = *impl_;
  I.for_each_cell(Stage::Diagnose, [&](CellRecord& cell, std::vector<std::string>& warnings) {
    I.sector(cell);
    const auto s = I.selection(cell);
    const auto& tickers = s.selection.chosen;
    const auto runs = I.weighting(cell);
    const auto portfolios = I.portfolios(cell);
    const auto backtests = state::backtest_from_json(state::read_json(I.state_path(Stage::Backtest, cell)));

    const auto all = I.returns_for(tickers, I.full_range(), nullptr);
    std::vector<ReturnsMatrix> parts;
    for (const auto& w : config_.out_of_sample()) parts.push_back(slice_window(all, w));
    const auto oos = concat_rows(parts);

    DiagnosticsReport d;
    d.model_id = cell.model_id;
    d.sector_name = cell.sector_name;
    d.pca_components_95 = pca_components_for_threshold(oos, config_.pca_threshold);
    d.effective_rank = effective_rank(sample_covariance(oos.values()));
    for (const auto& p : portfolios) {
      if (p.kind() == PortfolioKind::LlmWeighted) d.hhi = hhi(p);
    }
    try {
      d.weight_volatility = weight_volatility(runs, tickers);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::TooFewRuns) throw;
      d.weight_volatility = std::numeric_limits<double>::quiet_NaN();
      warnings.push_back(e.what());
    }
    for (const auto& w : backtests) {
      d.relative_volatility_by_window[w.window] = w.portfolios.at(PortfolioKind::LlmWeighted).relative_volatility;
    }
    state::write_json(I.state_path(Stage::Diagnose, cell), state::to_json(d));
  });
}

RunManifest Pipeline::report() {
  auto& I = *impl_;
  RunManifest m;
  m.config_snapshot = config_snapshot(config_);
  if (!std::filesystem::exists(out_dir_ / "state" / "cells.json")) {
    throw Error(ErrorCode::DataError, fmt::format("no stage state in {}; run the pipeline first", out_dir_.string()));
  }
  m.cells = I.cells;
  for (const auto& c : m.cells) {
    if (c.status == CellStatus::Failed) {
      m.error_log.push_back(fmt::format("{} / {} [{}]: {}", c.model_id, c.sector_name, c.failed_stage, c.error));
    }
  }
  m.portfolio_count = 5 * m.succeeded();
  if (m.succeeded() == 0) {
    throw Error(ErrorCode::DataError, "no (model, sector) cell succeeded; nothing to report");
  }

  auto files = reports::write_all(config_, out_dir_, m.cells);
  m.digests = digest_directory(out_dir_, files);

  std::string digest_text;
  for (const auto& d : m.digests) digest_text += d.sha256 + "  " + d.path + "\n";
  state::write_text(out_dir_ / "digests.txt", digest_text);

  json manifest;
  manifest["config"] = json::parse(m.config_snapshot);
  manifest["cells"] = state::to_json(m.cells);
  manifest["portfolio_count"] = m.portfolio_count;
  manifest["succeeded"] = m.succeeded();
  manifest["failed"] = m.failed();
  manifest["error_log"] = m.error_log;
  json digests = json::array();
  for (const auto& d : m.digests) digests.push_back({{"path", d.path}, {"sha256", d.sha256}});
  manifest["digests"] = digests;
  state::write_json(out_dir_ / "manifest.json", manifest);
  return m;
}

RunManifest Pipeline::run() {
  select();
  weight();
  build();
  optimize();
  backtest();
  diagnose();
  return report();
}

}  // namespace sectorllm
