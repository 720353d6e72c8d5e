#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sectorllm {

using Date = std::chrono::year_month_day;

/// Parses a strict ISO-8601 calendar date (`YYYY-MM-DD`).
std::optional<Date> parse_date(std::string_view text);
std::string format_date(Date date);

struct PriceObservation {
  Date date;
  double adjusted_close;
};

/// Adjusted-close history of one symbol. Dates strictly increase, prices are
/// positive and there are at least two observations.
class PriceSeries {
 public:
  PriceSeries(std::string ticker, std::vector<PriceObservation> observations);

  const std::string& ticker() const noexcept { return ticker_; }
  const std::vector<PriceObservation>& observations() const noexcept { return observations_; }
  std::size_t size() const noexcept { return observations_.size(); }

 private:
  std::string ticker_;
  std::vector<PriceObservation> observations_;
};

/// Half-open calendar interval [start, end).
struct DateRange {
  Date start;
  Date end;

  bool contains(Date d) const noexcept { return start <= d && d < end; }
};

/// Every row of a price CSV, grouped by ticker and sorted by date. Rows are
/// validated on load; series are not yet required to have two observations.
class PriceStore {
 public:
  static PriceStore load(const std::filesystem::path& path);
  static PriceStore from_rows(std::map<std::string, std::vector<PriceObservation>> rows);

  bool has(const std::string& ticker) const { return rows_.contains(ticker); }
  std::set<std::string> tickers() const;

  /// Observations of `ticker` inside `range` (empty if none).
  std::vector<PriceObservation> observations(const std::string& ticker, const DateRange& range) const;

  /// Builds a PriceSeries restricted to `range`; MissingTicker when there are no rows.
  PriceSeries series(const std::string& ticker, const DateRange& range) const;

 private:
  std::map<std::string, std::vector<PriceObservation>> rows_;
};

enum class MissingTickerPolicy { Throw, Report };

struct LoadedPrices {
  std::map<std::string, PriceSeries> series;
  std::vector<std::string> missing;
};

/// Reads `date,ticker,adjusted_close` rows for the requested tickers within
/// `range`. Missing tickers raise MissingTicker unless policy is Report.
LoadedPrices load_prices(const std::filesystem::path& source, std::span<const std::string> tickers,
                         const DateRange& range,
                         MissingTickerPolicy policy = MissingTickerPolicy::Throw);

enum class AlignmentPolicy { Intersect, Strict };

/// T x n simple returns, columns in ascending ticker order.
class ReturnsMatrix {
 public:
  ReturnsMatrix(std::vector<std::string> tickers, std::vector<Date> dates, Eigen::MatrixXd values);

  const std::vector<std::string>& tickers() const noexcept { return tickers_; }
  const std::vector<Date>& dates() const noexcept { return dates_; }
  const Eigen::MatrixXd& values() const noexcept { return values_; }

  Eigen::Index rows() const noexcept { return values_.rows(); }
  Eigen::Index cols() const noexcept { return values_.cols(); }

  std::optional<Eigen::Index> column_of(std::string_view ticker) const;

  /// Columns in the order of `tickers`; MissingColumn if any is absent.
  ReturnsMatrix select_columns(std::span<const std::string> tickers) const;

 private:
  std::vector<std::string> tickers_;
  std::vector<Date> dates_;
  Eigen::MatrixXd values_;
};

/// r_t = p_t / p_{t-1} - 1 on the common date grid of all series.
ReturnsMatrix to_returns(std::span<const PriceSeries> series,
                         AlignmentPolicy policy = AlignmentPolicy::Intersect);

enum class WindowLabel { InSample, Oos1, Oos2 };

std::string_view to_string(WindowLabel label) noexcept;
std::optional<WindowLabel> parse_window_label(std::string_view text) noexcept;

struct WindowSpec {
  WindowLabel label;
  Date start;
  Date end;  // exclusive

  DateRange range() const noexcept { return {start, end}; }
};

/// Checks start < end for each window and that windows do not overlap.
void validate_windows(std::span<const WindowSpec> windows);

/// Rows whose date falls in [w.start, w.end); EmptyWindow if none do.
ReturnsMatrix slice_window(const ReturnsMatrix& m, const WindowSpec& w);

/// Row-concatenation of matrices that share the same columns.
ReturnsMatrix concat_rows(std::span<const ReturnsMatrix> parts);

}  // namespace sectorllm
