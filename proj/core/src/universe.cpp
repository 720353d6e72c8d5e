#include "sectorllm/universe.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <unordered_set>

#include "sectorllm/csv.hpp"

namespace sectorllm {

SectorRegistry SectorRegistry::load(const std::filesystem::path& path) {
  std::map<std::string, SectorSpec> by_name;
  csv::read_file(path, {"sector_name", "index_ticker", "constituent"},
                 [&](std::size_t line, const std::vector<std::string>& f) {
                   if (f.size() != 3 || f[0].empty() || f[1].empty() || f[2].empty()) {
                     throw Error(ErrorCode::MalformedRow, fmt::format("{}:{}: bad registry row", path.string(), line));
                   }
                   auto& spec = by_name[f[0]];
                   if (spec.sector_name.empty()) {
                     spec.sector_name = f[0];
                     spec.index_ticker = f[1];
                   } else if (spec.index_ticker != f[1]) {
                     throw Error(ErrorCode::MalformedRow,
                                 fmt::format("{}:{}: sector {} has two index tickers", path.string(), line, f[0]));
                   }
                   spec.constituents.insert(f[2]);
                 });
  std::vector<SectorSpec> specs;
  for (auto& [_, s] : by_name) specs.push_back(std::move(s));
  return from_specs(std::move(specs));
}

SectorRegistry SectorRegistry::from_specs(std::vector<SectorSpec> specs) {
  SectorRegistry reg;
  std::set<std::string> index_tickers;
  for (auto& s : specs) {
    if (s.constituents.empty()) throw Error(ErrorCode::DataError, "sector " + s.sector_name + " has no constituents");
    if (!index_tickers.insert(s.index_ticker).second) {
      throw Error(ErrorCode::DataError, "index ticker " + s.index_ticker + " used by more than one sector");
    }
    if (!reg.sectors_.emplace(s.sector_name, std::move(s)).second) {
      throw Error(ErrorCode::DataError, "duplicate sector definition");
    }
  }
  return reg;
}

const SectorSpec& SectorRegistry::at(const std::string& sector_name) const {
  auto it = sectors_.find(sector_name);
  if (it == sectors_.end()) throw Error(ErrorCode::ConfigError, "unknown sector: " + sector_name);
  return it->second;
}

TickerValidation validate_tickers(std::span<const std::string> candidates, const SectorSpec& spec,
                                  const std::set<std::string>& price_coverage) {
  TickerValidation out;
  std::unordered_set<std::string> seen;
  for (const auto& c : candidates) {
    if (!seen.insert(c).second) continue;
    if (!spec.constituents.contains(c)) {
      out.false_stocks.push_back(c);
    } else if (!price_coverage.contains(c)) {
      out.unpriced.push_back(c);
    } else {
      out.valid.push_back(c);
    }
  }
  return out;
}

UniverseTooSmall::UniverseTooSmall(UniverseSelection selection, int requested_k)
    : Error(ErrorCode::UniverseTooSmall,
            fmt::format("{} / {}: {} distinct valid candidates, {} requested", selection.model_id,
                        selection.sector_name, selection.universe_size, requested_k)),
      selection_(std::move(selection)),
      requested_k_(requested_k) {}

UniverseSelection aggregate_selection(std::span<const SelectionRun> runs, const SectorSpec& spec,
                                      const std::set<std::string>& price_coverage, int k) {
  if (k < 1) throw std::invalid_argument("aggregate_selection: k must be >= 1");
  if (runs.empty()) throw std::invalid_argument("aggregate_selection: no runs");

  UniverseSelection u;
  u.model_id = runs.front().model_id;
  u.sector_name = runs.front().sector_name;
  for (const auto& run : runs) {
    if (run.model_id != u.model_id || run.sector_name != u.sector_name) {
      throw std::invalid_argument("aggregate_selection: runs mix (model, sector) cells");
    }
    // validate_tickers dedups, so a symbol counts once per run.
    auto v = validate_tickers(run.raw_tickers, spec, price_coverage);
    for (const auto& t : v.valid) ++u.frequency[t];
    u.false_stocks.insert(v.false_stocks.begin(), v.false_stocks.end());
    u.unpriced.insert(v.unpriced.begin(), v.unpriced.end());
  }

  std::vector<std::pair<std::string, int>> ranked(u.frequency.begin(), u.frequency.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  u.universe_size = static_cast<int>(ranked.size());
  const auto keep = std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < keep; ++i) u.chosen.push_back(ranked[i].first);

  if (u.universe_size < k) throw UniverseTooSmall(std::move(u), k);
  return u;
}

UniverseStats universe_stats(const UniverseSelection& u) {
  const auto false_count = static_cast<int>(u.false_stocks.size());
  return {u.universe_size + static_cast<int>(u.unpriced.size()) + false_count, false_count};
}

}  // namespace sectorllm
