#pragma once

// Persisted per-cell stage state. Reals are stored as JSON numbers, which
// round-trip exactly, so a stage rerun from disk sees the same values as an
// in-process run.

#include <filesystem>
#include <json.hpp>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sectorllm/backtest.hpp"
#include "sectorllm/diagnostics.hpp"
#include "sectorllm/optimizer.hpp"
#include "sectorllm/pipeline.hpp"

namespace sectorllm::state {

using nlohmann::json;

struct SelectionState {
  std::vector<SelectionRun> runs;
  UniverseSelection selection;
};

struct FrontierState {
  std::vector<std::string> tickers;
  std::vector<FrontierPoint> bounded;
  std::vector<FrontierPoint> long_only;  // bounds (0, 1), plotting aid
};

struct WindowResults {
  WindowLabel window;
  std::vector<Date> dates;
  std::map<PortfolioKind, BacktestResult> portfolios;
  BacktestResult index;
  Outcome class_cumulative;
  Outcome class_sharpe;
};

json to_json(const SelectionState& s);
SelectionState selection_from_json(const json& j);

json to_json(const std::vector<WeightingRun>& runs);
std::vector<WeightingRun> weighting_from_json(const json& j);

json to_json(const std::vector<Portfolio>& portfolios);
std::vector<Portfolio> portfolios_from_json(const json& j);

json to_json(const FrontierState& f);
FrontierState frontier_from_json(const json& j);

json to_json(const std::vector<WindowResults>& results);
std::vector<WindowResults> backtest_from_json(const json& j);

json to_json(const DiagnosticsReport& d);
DiagnosticsReport diagnostics_from_json(const json& j);

json to_json(const std::vector<CellRecord>& cells);
std::vector<CellRecord> cells_from_json(const json& j);

void write_json(const std::filesystem::path& path, const json& j);
json read_json(const std::filesystem::path& path);

/// Writes `text` to `path`, creating parent directories. IoError on failure.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace sectorllm::state
