#pragma once

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "sectorllm/marketdata.hpp"
#include "sectorllm/portfolio.hpp"

namespace sectorllm {

/// Per-period return of the weighted portfolio, r_t = sum_i w_i r[t, i].
/// MissingColumn when a portfolio ticker is not in the matrix.
Eigen::VectorXd portfolio_returns(const ReturnsMatrix& returns, const Portfolio& p);

struct CumulativeMetrics {
  Eigen::VectorXd path;  // V_t = prod_{s<=t} (1 + r_s)
  double mean_cumulative_return = 0.0;  // window average of V_t
  double terminal_value = 0.0;
};

CumulativeMetrics cumulative_metrics(const Eigen::VectorXd& series);

/// Unbiased (T-1) standard deviation.
double sample_std(const Eigen::VectorXd& series);

/// Geometric de-annualization: (1 + annual)^(1/periods) - 1.
double per_period_rate(double annual_rate, int periods_per_year);

/// (mean - rf) / std with rf de-annualized geometrically. ZeroVolatility when
/// the sample standard deviation is zero.
double sharpe_ratio(const Eigen::VectorXd& series, double rf_annual, int periods_per_year = 252);

/// std(portfolio) / std(index). ZeroIndexVolatility when the index is flat.
double relative_volatility(const Eigen::VectorXd& portfolio_series, const Eigen::VectorXd& index_series);

enum class CumulativeSummary { WindowAverage, Terminal };

struct BacktestSettings {
  double rf_annual = 0.02;
  int periods_per_year = 252;
  CumulativeSummary summary = CumulativeSummary::WindowAverage;
};

struct BacktestResult {
  std::optional<PortfolioKind> kind;  // empty for the sector index
  std::string model_id;
  std::string sector_name;
  WindowLabel window = WindowLabel::Oos1;
  Eigen::VectorXd return_series;
  Eigen::VectorXd cumulative_path;
  double mean_cumulative_return = 0.0;
  double sharpe = 0.0;
  double volatility = 0.0;
  double relative_volatility = 1.0;
};

/// Backtests a return series; `index_series` supplies the relative-volatility
/// denominator (pass the series itself for the index row).
BacktestResult evaluate_series(const Eigen::VectorXd& series, const Eigen::VectorXd& index_series,
                               WindowLabel window, const BacktestSettings& settings);

enum class Outcome { Green, Yellow, Red };
enum class Basis { CumulativeReturn, Sharpe };

std::string_view to_string(Outcome o) noexcept;
std::string_view to_string(Basis b) noexcept;

struct OutcomeClass {
  Outcome value;
  Basis basis;
};

/// Green when the LLM-weighted portfolio beats the index, otherwise Yellow if
/// any other portfolio does, otherwise Red. Ties do not count as beating.
OutcomeClass classify(const std::map<PortfolioKind, BacktestResult>& results, const BacktestResult& index,
                      Basis basis);

}  // namespace sectorllm
