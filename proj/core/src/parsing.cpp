#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

#include "sectorllm/llm_gateway.hpp"

namespace sectorllm {

namespace {

bool is_strip_char(char c) {
  switch (c) {
    case ',': case '.': case ';': case '(': case ')': case '[': case ']':
    case '$': case '*': case '`': case '"': case '\'':
      return true;
    default:
      return false;
  }
}

bool is_symbol_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-';
}

/// 1-10 chars, leading letter, then letters, digits, '.' or '-'.
bool looks_like_symbol(std::string_view token) {
  if (token.empty() || token.size() > 10) return false;
  if (!std::isalpha(static_cast<unsigned char>(token.front()))) return false;
  return std::all_of(token.begin(), token.end(), is_symbol_char);
}

bool has_lower(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](unsigned char c) { return std::islower(c); });
}

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::toupper(c); });
  return out;
}

}  // namespace

std::vector<std::string> parse_ticker_reply(std::string_view reply) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    std::string_view t = current;
    while (!t.empty() && is_strip_char(t.front())) t.remove_prefix(1);
    while (!t.empty() && is_strip_char(t.back())) t.remove_suffix(1);
    if (looks_like_symbol(t)) tokens.emplace_back(t);
    current.clear();
  };
  for (char c : reply) {
    if (std::isspace(static_cast<unsigned char>(c)) || c == ',' || c == ';') {
      flush();
    } else {
      current.push_back(c);
    }
  }
  flush();

  const bool any_upper = std::any_of(tokens.begin(), tokens.end(), [](const std::string& t) { return !has_lower(t); });
  std::vector<std::string> out;
  for (const auto& t : tokens) {
    if (any_upper && has_lower(t)) continue;  // prose around an upper-case list
    out.push_back(upper(t));
  }
  if (out.empty()) throw Error(ErrorCode::ParseError, "ticker reply contains no symbols");
  return out;
}

ParsedWeights parse_weight_string(std::string_view text) {
  ParsedWeights out;
  std::size_t pos = 0;
  bool negative = false;
  std::string negative_symbol;
  while ((pos = text.find(':', pos)) != std::string_view::npos) {
    const std::size_t colon = pos++;
    // symbol: maximal run of symbol chars ending right before the colon (spaces allowed)
    std::size_t end = colon;
    while (end > 0 && text[end - 1] == ' ') --end;
    std::size_t begin = end;
    while (begin > 0 && is_symbol_char(text[begin - 1])) --begin;
    while (begin < end && !std::isalpha(static_cast<unsigned char>(text[begin]))) ++begin;
    std::string_view symbol = text.substr(begin, end - begin);
    while (!symbol.empty() && (symbol.back() == '.' || symbol.back() == '-')) symbol.remove_suffix(1);
    if (!looks_like_symbol(symbol)) continue;

    std::size_t num = colon + 1;
    while (num < text.size() && std::isspace(static_cast<unsigned char>(text[num]))) ++num;
    if (num < text.size() && text[num] == '+') ++num;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data() + num, text.data() + text.size(), value);
    if (ec != std::errc() || !std::isfinite(value)) continue;
    pos = static_cast<std::size_t>(ptr - text.data());

    auto key = upper(symbol);
    if (value < 0.0 && !negative) {
      negative = true;
      negative_symbol = key;
    }
    auto [it, inserted] = out.weights.insert_or_assign(key, value);
    if (!inserted) out.warnings.push_back(fmt::format("duplicate symbol {}; keeping last value", key));
  }
  if (negative) throw Error(ErrorCode::NegativeWeight, "negative weight for " + negative_symbol);
  if (out.weights.empty()) throw Error(ErrorCode::ParseError, "no 'TICKER: weight' pairs found");
  return out;
}

std::string format_weight_map(const std::map<std::string, double>& weights) {
  std::string out;
  for (const auto& [symbol, w] : weights) {
    if (!out.empty()) out += ", ";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, w);
    out += symbol;
    out += ": ";
    out.append(buf, ptr);
  }
  return out;
}

}  // namespace sectorllm
