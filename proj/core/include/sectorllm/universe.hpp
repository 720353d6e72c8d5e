#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "sectorllm/error.hpp"

namespace sectorllm {

struct SectorSpec {
  std::string sector_name;
  std::string index_ticker;
  std::set<std::string> constituents;

  std::size_t constituent_count() const noexcept { return constituents.size(); }
};

/// Sector definitions keyed by sector name. Index tickers are unique.
class SectorRegistry {
 public:
  /// Reads `sector_name,index_ticker,constituent` rows.
  static SectorRegistry load(const std::filesystem::path& path);
  static SectorRegistry from_specs(std::vector<SectorSpec> specs);

  const SectorSpec& at(const std::string& sector_name) const;
  bool contains(const std::string& sector_name) const { return sectors_.contains(sector_name); }
  const std::map<std::string, SectorSpec>& sectors() const noexcept { return sectors_; }

 private:
  std::map<std::string, SectorSpec> sectors_;
};

/// One reply to the stock-selection prompt, already reduced to symbols.
struct SelectionRun {
  std::string model_id;
  std::string sector_name;
  int run_index = 0;
  std::vector<std::string> raw_tickers;
  std::string rationale_text;
};

struct UniverseSelection {
  std::string model_id;
  std::string sector_name;
  std::vector<std::string> chosen;  // count desc, symbol asc
  std::set<std::string> false_stocks;
  std::set<std::string> unpriced;
  std::map<std::string, int> frequency;
  int universe_size = 0;  // distinct valid candidates before truncation
};

struct TickerValidation {
  std::vector<std::string> valid;
  std::vector<std::string> false_stocks;
  std::vector<std::string> unpriced;
};

TickerValidation validate_tickers(std::span<const std::string> candidates, const SectorSpec& spec,
                                  const std::set<std::string>& price_coverage);

/// Raised when fewer than k distinct valid candidates exist. The aggregated
/// selection (with every valid candidate chosen) travels with the error so the
/// caller can continue with a smaller universe.
class UniverseTooSmall : public Error {
 public:
  UniverseTooSmall(UniverseSelection selection, int requested_k);

  const UniverseSelection& selection() const noexcept { return selection_; }
  int requested_k() const noexcept { return requested_k_; }

 private:
  UniverseSelection selection_;
  int requested_k_;
};

/// Tallies per-run-deduplicated mentions of valid tickers and keeps the top k.
UniverseSelection aggregate_selection(std::span<const SelectionRun> runs, const SectorSpec& spec,
                                      const std::set<std::string>& price_coverage, int k);

struct UniverseStats {
  int universe_size = 0;  // every distinct proposed symbol, false ones included
  int false_count = 0;
};

UniverseStats universe_stats(const UniverseSelection& u);

}  // namespace sectorllm
