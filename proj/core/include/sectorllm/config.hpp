#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "sectorllm/backtest.hpp"
#include "sectorllm/llm_gateway.hpp"
#include "sectorllm/marketdata.hpp"

namespace sectorllm {

struct ModelConfig {
  std::string model_id;
  ProviderConfig provider;
  std::filesystem::path cassette;  // defaults to <cassette_dir>/<model_id>.jsonl
};

struct RunConfig {
  std::vector<ModelConfig> models;
  std::vector<std::string> sectors;
  int portfolio_size = 20;
  int selection_repeats = 10;
  int weighting_repeats = 5;
  std::vector<WindowSpec> windows;
  double rf_annual = 0.02;
  int periods_per_year = 252;
  int frontier_points = 50;
  TranscriptMode mode = TranscriptMode::Replay;
  std::filesystem::path prices;
  std::filesystem::path registry;
  std::filesystem::path cassette_dir;
  /// Sector index ticker -> symbol used for it in the price file.
  std::map<std::string, std::string> index_price_tickers;
  AlignmentPolicy alignment = AlignmentPolicy::Intersect;
  double coverage_loss_threshold = 0.05;
  CumulativeSummary cumulative_summary = CumulativeSummary::WindowAverage;
  double pca_threshold = 0.95;
  int workers = 1;

  /// ConfigError on any violated invariant.
  void validate() const;

  const WindowSpec& in_sample() const;
  /// Out-of-sample windows ordered by start date.
  std::vector<WindowSpec> out_of_sample() const;
  std::filesystem::path cassette_for(const ModelConfig& m) const;
  std::string index_price_symbol(const std::string& index_ticker) const;
};

/// Parses the JSON run configuration. Relative paths resolve against the
/// directory holding the file. Unknown keys are rejected.
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(const std::string& json_text, const std::filesystem::path& base_dir);

/// Canonical JSON of the effective configuration (secrets are never part of it).
std::string config_snapshot(const RunConfig& config);

}  // namespace sectorllm
