#include <fmt/format.h>

#include <algorithm>
#include <cctype>

#include "sectorllm/llm_gateway.hpp"

namespace sectorllm {

std::string_view to_string(PromptKind kind) noexcept {
  switch (kind) {
    case PromptKind::SelectStocks: return "select_stocks";
    case PromptKind::ExtractTickers: return "extract_tickers";
    case PromptKind::AssignWeights: return "assign_weights";
    case PromptKind::ExtractWeights: return "extract_weights";
  }
  return "unknown";
}

std::optional<PromptKind> parse_prompt_kind(std::string_view text) noexcept {
  for (auto k : {PromptKind::SelectStocks, PromptKind::ExtractTickers, PromptKind::AssignWeights,
                 PromptKind::ExtractWeights}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

const PromptTemplate& default_template(PromptKind kind) {
  static const PromptTemplate select{
      PromptKind::SelectStocks,
      "Using a range of investing principles taken from leading funds, create a theoretical fund comprising of "
      "at least 20 stocks (mention their tickers) from the {tickers} {sector_index} sector with the goal to "
      "outperform the {tickers} {sector_index} sector (S&P 500 sector index)."};
  // Requests are stateless, so the previous reply is carried in {output}.
  static const PromptTemplate extract_tickers{
      PromptKind::ExtractTickers,
      "Extract only the ticker symbols of the stocks comprising the fund from the previous response. In your "
      "response to this prompt, list only the ticker symbols separated by spaces.\n\nPrevious response:\n{output}"};
  static const PromptTemplate assign{
      PromptKind::AssignWeights,
      "Assume you're designing a theoretical model portfolio from these {tickers} {sector_index} stocks: "
      "{ticker_list}. Provide a hypothetical example of how you might distribute the weightage of these stocks "
      "(normalized i.e weights should add up to 1.00) in the portfolio to potentially outperform the {tickers} "
      "{sector_index} index. Also mention the underlying strategy or logic which you used to assign these "
      "weights."};
  static const PromptTemplate extract_weights{
      PromptKind::ExtractWeights,
      "Extract tickers of stocks and corresponding weights as a single comma \", \" separated string, with the "
      "weights expressed as floats: {output}. Provide a list of type TICKER: weight, no extra symbols used, and "
      "no extra text or explanation. Example output: \"AAPL: 0.2, MSFT: 0.3, GOOGL: 0.5\""};
  switch (kind) {
    case PromptKind::SelectStocks: return select;
    case PromptKind::ExtractTickers: return extract_tickers;
    case PromptKind::AssignWeights: return assign;
    case PromptKind::ExtractWeights: return extract_weights;
  }
  return select;
}

std::string render_template(const PromptTemplate& tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  const std::string& text = tmpl.text;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto open = text.find('{', pos);
    if (open == std::string::npos) {
      out.append(text, pos, std::string::npos);
      break;
    }
    out.append(text, pos, open - pos);
    const auto close = text.find('}', open);
    const auto name = close == std::string::npos ? std::string() : text.substr(open + 1, close - open - 1);
    const bool is_placeholder =
        !name.empty() && std::all_of(name.begin(), name.end(), [](unsigned char c) {
          return std::islower(c) || c == '_';
        });
    if (!is_placeholder) {
      out.push_back('{');
      pos = open + 1;
      continue;
    }
    auto it = values.find(name);
    if (it == values.end()) {
      throw Error(ErrorCode::MissingPlaceholder,
                  fmt::format("{} prompt needs a value for {{{}}}", to_string(tmpl.kind), name));
    }
    // Substituted text is never re-scanned, so replies containing braces are safe.
    out += it->second;
    pos = close + 1;
  }
  return out;
}

std::string render_prompt(PromptKind kind, const SectorSpec& sector,
                          std::optional<std::span<const std::string>> ticker_list,
                          std::optional<std::string_view> prior_output) {
  std::map<std::string, std::string> values{{"tickers", sector.index_ticker}};
  std::string name = sector.sector_name;
  if (kind == PromptKind::SelectStocks) {
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
  }
  values["sector_index"] = name;
  if (ticker_list && !ticker_list->empty()) {
    values["ticker_list"] = fmt::format("{}", fmt::join(*ticker_list, " "));
  }
  if (prior_output && !prior_output->empty()) values["output"] = std::string(*prior_output);
  return render_template(default_template(kind), values);
}

}  // namespace sectorllm
