#include "sectorllm/marketdata.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>

#include "sectorllm/csv.hpp"
#include "sectorllm/error.hpp"

namespace sectorllm {

namespace {

template <typename Int>
bool parse_int(std::string_view text, Int& out) {
  if (text.empty()) return false;
  for (char c : text) {
    if (c < '0' || c > '9') return false;
  }
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

bool parse_price(std::string_view text, double& out) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size() && std::isfinite(out);
}

void check_sorted_unique(const std::string& ticker, const std::vector<PriceObservation>& obs) {
  for (std::size_t i = 1; i < obs.size(); ++i) {
    if (!(obs[i - 1].date < obs[i].date)) {
      throw Error(ErrorCode::MalformedRow, fmt::format("{}: dates not strictly increasing at {}", ticker,
                                                       format_date(obs[i].date)));
    }
  }
}

}  // namespace

std::optional<Date> parse_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  if (!parse_int(text.substr(0, 4), y) || !parse_int(text.substr(5, 2), m) ||
      !parse_int(text.substr(8, 2), d)) {
    return std::nullopt;
  }
  Date date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!date.ok()) return std::nullopt;
  return date;
}

std::string format_date(Date date) {
  return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(date.year()),
                     static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
}

PriceSeries::PriceSeries(std::string ticker, std::vector<PriceObservation> observations)
    : ticker_(std::move(ticker)), observations_(std::move(observations)) {
  if (observations_.size() < 2) {
    throw Error(ErrorCode::InsufficientOverlap,
                fmt::format("{}: need at least 2 observations, have {}", ticker_, observations_.size()));
  }
  check_sorted_unique(ticker_, observations_);
  for (const auto& o : observations_) {
    if (!(o.adjusted_close > 0.0)) {
      throw Error(ErrorCode::NonPositivePrice,
                  fmt::format("{} on {}: {}", ticker_, format_date(o.date), o.adjusted_close));
    }
  }
}

PriceStore PriceStore::load(const std::filesystem::path& path) {
  std::map<std::string, std::vector<PriceObservation>> rows;
  csv::read_file(path, {"date", "ticker", "adjusted_close"},
                 [&](std::size_t line, const std::vector<std::string>& f) {
                   if (f.size() != 3) {
                     throw Error(ErrorCode::MalformedRow,
                                 fmt::format("{}:{}: expected 3 fields, got {}", path.string(), line, f.size()));
                   }
                   auto date = parse_date(f[0]);
                   if (!date) {
                     throw Error(ErrorCode::MalformedRow,
                                 fmt::format("{}:{}: bad date '{}'", path.string(), line, f[0]));
                   }
                   if (f[1].empty()) {
                     throw Error(ErrorCode::MalformedRow, fmt::format("{}:{}: empty ticker", path.string(), line));
                   }
                   double price = 0.0;
                   if (!parse_price(f[2], price)) {
                     throw Error(ErrorCode::MalformedRow,
                                 fmt::format("{}:{}: bad price '{}'", path.string(), line, f[2]));
                   }
                   if (!(price > 0.0)) {
                     throw Error(ErrorCode::NonPositivePrice,
                                 fmt::format("{}:{}: {} has price {}", path.string(), line, f[1], f[2]));
                   }
                   rows[f[1]].push_back({*date, price});
                 });
  return from_rows(std::move(rows));
}

PriceStore PriceStore::from_rows(std::map<std::string, std::vector<PriceObservation>> rows) {
  for (auto& [ticker, obs] : rows) {
    std::stable_sort(obs.begin(), obs.end(),
                     [](const PriceObservation& a, const PriceObservation& b) { return a.date < b.date; });
    check_sorted_unique(ticker, obs);
    for (const auto& o : obs) {
      if (!(o.adjusted_close > 0.0)) {
        throw Error(ErrorCode::NonPositivePrice,
                    fmt::format("{} on {}: {}", ticker, format_date(o.date), o.adjusted_close));
      }
    }
  }
  PriceStore store;
  store.rows_ = std::move(rows);
  return store;
}

std::set<std::string> PriceStore::tickers() const {
  std::set<std::string> out;
  for (const auto& [t, _] : rows_) out.insert(t);
  return out;
}

std::vector<PriceObservation> PriceStore::observations(const std::string& ticker,
                                                       const DateRange& range) const {
  std::vector<PriceObservation> out;
  auto it = rows_.find(ticker);
  if (it == rows_.end()) return out;
  for (const auto& o : it->second) {
    if (range.contains(o.date)) out.push_back(o);
  }
  return out;
}

PriceSeries PriceStore::series(const std::string& ticker, const DateRange& range) const {
  auto obs = observations(ticker, range);
  if (obs.empty()) throw Error(ErrorCode::MissingTicker, ticker + ": no rows in requested range");
  return PriceSeries(ticker, std::move(obs));
}

LoadedPrices load_prices(const std::filesystem::path& source, std::span<const std::string> tickers,
                         const DateRange& range, MissingTickerPolicy policy) {
  if (!std::filesystem::exists(source)) {
    throw Error(ErrorCode::IoError, "price file not found: " + source.string());
  }
  const auto store = PriceStore::load(source);
  LoadedPrices out;
  for (const auto& t : tickers) {
    if (out.series.contains(t)) continue;
    if (store.observations(t, range).empty()) {
      out.missing.push_back(t);
      continue;
    }
    out.series.emplace(t, store.series(t, range));
  }
  if (!out.missing.empty() && policy == MissingTickerPolicy::Throw) {
    throw Error(ErrorCode::MissingTicker, fmt::format("no rows for: {}", fmt::join(out.missing, ", ")));
  }
  return out;
}

ReturnsMatrix::ReturnsMatrix(std::vector<std::string> tickers, std::vector<Date> dates,
                             Eigen::MatrixXd values)
    : tickers_(std::move(tickers)), dates_(std::move(dates)), values_(std::move(values)) {
  if (values_.rows() != static_cast<Eigen::Index>(dates_.size()) ||
      values_.cols() != static_cast<Eigen::Index>(tickers_.size())) {
    throw std::invalid_argument("ReturnsMatrix: shape does not match labels");
  }
  for (std::size_t i = 1; i < dates_.size(); ++i) {
    if (!(dates_[i - 1] < dates_[i])) throw std::invalid_argument("ReturnsMatrix: dates not increasing");
  }
  if ((values_.array() <= -1.0).any() || !values_.allFinite()) {
    throw std::invalid_argument("ReturnsMatrix: returns must be finite and > -1");
  }
}

std::optional<Eigen::Index> ReturnsMatrix::column_of(std::string_view ticker) const {
  for (std::size_t i = 0; i < tickers_.size(); ++i) {
    if (tickers_[i] == ticker) return static_cast<Eigen::Index>(i);
  }
  return std::nullopt;
}

ReturnsMatrix ReturnsMatrix::select_columns(std::span<const std::string> tickers) const {
  Eigen::MatrixXd out(rows(), static_cast<Eigen::Index>(tickers.size()));
  for (std::size_t j = 0; j < tickers.size(); ++j) {
    auto col = column_of(tickers[j]);
    if (!col) throw Error(ErrorCode::MissingColumn, tickers[j] + " not in returns matrix");
    out.col(static_cast<Eigen::Index>(j)) = values_.col(*col);
  }
  // Column labels follow the requested order here; only to_returns sorts.
  ReturnsMatrix result = *this;
  result.tickers_.assign(tickers.begin(), tickers.end());
  result.values_ = std::move(out);
  return result;
}

ReturnsMatrix to_returns(std::span<const PriceSeries> series, AlignmentPolicy policy) {
  if (series.empty()) throw Error(ErrorCode::InsufficientOverlap, "no series supplied");

  std::vector<const PriceSeries*> ordered;
  for (const auto& s : series) ordered.push_back(&s);
  std::sort(ordered.begin(), ordered.end(),
            [](const PriceSeries* a, const PriceSeries* b) { return a->ticker() < b->ticker(); });
  for (std::size_t i = 1; i < ordered.size(); ++i) {
    if (ordered[i - 1]->ticker() == ordered[i]->ticker()) {
      throw std::invalid_argument("to_returns: duplicate ticker " + ordered[i]->ticker());
    }
  }

  std::vector<Date> grid;
  for (const auto& o : ordered.front()->observations()) grid.push_back(o.date);
  for (std::size_t s = 1; s < ordered.size(); ++s) {
    std::vector<Date> dates;
    for (const auto& o : ordered[s]->observations()) dates.push_back(o.date);
    if (policy == AlignmentPolicy::Strict && dates != grid) {
      throw Error(ErrorCode::MissingData, fmt::format("{} and {} have different date sets",
                                                      ordered.front()->ticker(), ordered[s]->ticker()));
    }
    std::vector<Date> common;
    std::set_intersection(grid.begin(), grid.end(), dates.begin(), dates.end(), std::back_inserter(common));
    grid = std::move(common);
  }
  if (grid.size() < 2) {
    throw Error(ErrorCode::InsufficientOverlap,
                fmt::format("common date grid has {} dates, need at least 2", grid.size()));
  }

  const auto n = static_cast<Eigen::Index>(ordered.size());
  const auto t = static_cast<Eigen::Index>(grid.size()) - 1;
  Eigen::MatrixXd values(t, n);
  std::vector<std::string> tickers;
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& obs = ordered[static_cast<std::size_t>(j)]->observations();
    tickers.push_back(ordered[static_cast<std::size_t>(j)]->ticker());
    std::size_t k = 0;
    double previous = 0.0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      while (obs[k].date < grid[g]) ++k;
      const double price = obs[k].adjusted_close;
      if (g > 0) values(static_cast<Eigen::Index>(g) - 1, j) = price / previous - 1.0;
      previous = price;
    }
  }
  return ReturnsMatrix(std::move(tickers), std::vector<Date>(grid.begin() + 1, grid.end()), std::move(values));
}

std::string_view to_string(WindowLabel label) noexcept {
  switch (label) {
    case WindowLabel::InSample: return "in_sample";
    case WindowLabel::Oos1: return "oos_1";
    case WindowLabel::Oos2: return "oos_2";
  }
  return "unknown";
}

std::optional<WindowLabel> parse_window_label(std::string_view text) noexcept {
  if (text == "in_sample") return WindowLabel::InSample;
  if (text == "oos_1") return WindowLabel::Oos1;
  if (text == "oos_2") return WindowLabel::Oos2;
  return std::nullopt;
}

void validate_windows(std::span<const WindowSpec> windows) {
  for (const auto& w : windows) {
    if (!(w.start < w.end)) {
      throw Error(ErrorCode::ConfigError,
                  fmt::format("window {}: start {} is not before end {}", to_string(w.label),
                              format_date(w.start), format_date(w.end)));
    }
  }
  for (std::size_t i = 0; i < windows.size(); ++i) {
    for (std::size_t j = i + 1; j < windows.size(); ++j) {
      if (windows[i].label == windows[j].label) {
        throw Error(ErrorCode::ConfigError, fmt::format("duplicate window {}", to_string(windows[i].label)));
      }
      if (windows[i].start < windows[j].end && windows[j].start < windows[i].end) {
        throw Error(ErrorCode::ConfigError, fmt::format("windows {} and {} overlap", to_string(windows[i].label),
                                                        to_string(windows[j].label)));
      }
    }
  }
}

ReturnsMatrix slice_window(const ReturnsMatrix& m, const WindowSpec& w) {
  const auto& dates = m.dates();
  auto first = std::lower_bound(dates.begin(), dates.end(), w.start);
  auto last = std::lower_bound(dates.begin(), dates.end(), w.end);
  if (first >= last) {
    throw Error(ErrorCode::EmptyWindow, fmt::format("window {} [{}, {}) has no rows", to_string(w.label),
                                                    format_date(w.start), format_date(w.end)));
  }
  const auto begin_row = static_cast<Eigen::Index>(first - dates.begin());
  const auto count = static_cast<Eigen::Index>(last - first);
  return ReturnsMatrix(m.tickers(), std::vector<Date>(first, last), m.values().middleRows(begin_row, count));
}

ReturnsMatrix concat_rows(std::span<const ReturnsMatrix> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: nothing to concatenate");
  Eigen::Index total = 0;
  for (const auto& p : parts) {
    if (p.tickers() != parts.front().tickers()) throw std::invalid_argument("concat_rows: column mismatch");
    total += p.rows();
  }
  Eigen::MatrixXd values(total, parts.front().cols());
  std::vector<Date> dates;
  Eigen::Index row = 0;
  for (const auto& p : parts) {
    values.middleRows(row, p.rows()) = p.values();
    row += p.rows();
    dates.insert(dates.end(), p.dates().begin(), p.dates().end());
  }
  return ReturnsMatrix(parts.front().tickers(), std::move(dates), std::move(values));
}

}  // namespace sectorllm
