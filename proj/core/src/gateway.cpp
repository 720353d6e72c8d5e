#include <fmt/format.h>

#include <set>

#include "sectorllm/llm_gateway.hpp"

namespace sectorllm {

std::vector<SelectionRun> run_selection_round(LlmClient& client, const std::string& model_id,
                                              const SectorSpec& sector, int repeats) {
  if (repeats < 1) throw std::invalid_argument("run_selection_round: repeats must be >= 1");
  std::vector<SelectionRun> runs;
  const auto selection_prompt = render_prompt(PromptKind::SelectStocks, sector);
  for (int r = 1; r <= repeats; ++r) {
    auto fund = client.complete(PromptKind::SelectStocks, selection_prompt);
    const auto extract_prompt = render_prompt(PromptKind::ExtractTickers, sector, std::nullopt, fund);
    auto tickers_reply = client.complete(PromptKind::ExtractTickers, extract_prompt);
    std::vector<std::string> tickers;
    try {
      tickers = parse_ticker_reply(tickers_reply);
    } catch (const Error& e) {
      throw Error(e.code(), fmt::format("{} / {} run {}: {}", model_id, sector.sector_name, r, e.what()));
    }
    runs.push_back({model_id, sector.sector_name, r, std::move(tickers), std::move(fund)});
  }
  return runs;
}

std::vector<WeightingRun> run_weighting_round(LlmClient& client, const std::string& model_id,
                                              const SectorSpec& sector, std::span<const std::string> tickers,
                                              int repeats) {
  if (repeats < 1) throw std::invalid_argument("run_weighting_round: repeats must be >= 1");
  if (tickers.empty()) throw std::invalid_argument("run_weighting_round: empty ticker list");
  const std::set<std::string> allowed(tickers.begin(), tickers.end());
  const auto assign_prompt = render_prompt(PromptKind::AssignWeights, sector, tickers);

  std::vector<WeightingRun> runs;
  for (int r = 1; r <= repeats; ++r) {
    auto rationale = client.complete(PromptKind::AssignWeights, assign_prompt);
    const auto extract_prompt = render_prompt(PromptKind::ExtractWeights, sector, std::nullopt, rationale);
    auto reply = client.complete(PromptKind::ExtractWeights, extract_prompt);

    WeightingRun run{model_id, sector.sector_name, r, {}, std::move(rationale), {}};
    ParsedWeights parsed;
    try {
      parsed = parse_weight_string(reply);
    } catch (const Error& e) {
      throw Error(e.code(), fmt::format("{} / {} weighting run {}: {}", model_id, sector.sector_name, r, e.what()));
    }
    run.warnings = std::move(parsed.warnings);
    for (auto& [symbol, w] : parsed.weights) {
      if (allowed.contains(symbol)) {
        run.weights.emplace(symbol, w);
      } else {
        run.warnings.push_back(fmt::format("dropped {} (not in the requested ticker list)", symbol));
      }
    }
    if (run.weights.empty()) {
      throw Error(ErrorCode::ParseError, fmt::format("{} / {} weighting run {}: no weights for requested tickers",
                                                     model_id, sector.sector_name, r));
    }
    runs.push_back(std::move(run));
  }
  return runs;
}

}  // namespace sectorllm
