#include "sectorllm/backtest.hpp"

#include <fmt/format.h>

#include <cmath>

namespace sectorllm {

Eigen::VectorXd portfolio_returns(const ReturnsMatrix& returns, const Portfolio& p) {
  const auto selected = returns.select_columns(p.tickers());
  return selected.values() * p.weights();
}

CumulativeMetrics cumulative_metrics(const Eigen::VectorXd& series) {
  if (series.size() == 0) throw std::invalid_argument("cumulative_metrics: empty series");
  CumulativeMetrics out;
  out.path.resize(series.size());
  double value = 1.0;
  double sum = 0.0;
  for (Eigen::Index t = 0; t < series.size(); ++t) {
    value *= 1.0 + series(t);
    out.path(t) = value;
    sum += value;
  }
  out.mean_cumulative_return = sum / static_cast<double>(series.size());
  out.terminal_value = value;
  return out;
}

double sample_std(const Eigen::VectorXd& series) {
  if (series.size() < 2) throw std::invalid_argument("sample_std: need at least 2 values");
  const double mean = series.mean();
  return std::sqrt((series.array() - mean).square().sum() / static_cast<double>(series.size() - 1));
}

double per_period_rate(double annual_rate, int periods_per_year) {
  if (periods_per_year < 1) throw std::invalid_argument("per_period_rate: periods_per_year must be >= 1");
  return std::pow(1.0 + annual_rate, 1.0 / periods_per_year) - 1.0;
}

double sharpe_ratio(const Eigen::VectorXd& series, double rf_annual, int periods_per_year) {
  const double sd = sample_std(series);
  if (!(sd > 0.0)) throw Error(ErrorCode::ZeroVolatility, "return series has zero standard deviation");
  return (series.mean() - per_period_rate(rf_annual, periods_per_year)) / sd;
}

double relative_volatility(const Eigen::VectorXd& portfolio_series, const Eigen::VectorXd& index_series) {
  if (portfolio_series.size() != index_series.size()) {
    throw std::invalid_argument("relative_volatility: series cover different windows");
  }
  const double index_sd = sample_std(index_series);
  if (!(index_sd > 0.0)) throw Error(ErrorCode::ZeroIndexVolatility, "index return series is flat");
  return sample_std(portfolio_series) / index_sd;
}

BacktestResult evaluate_series(const Eigen::VectorXd& series, const Eigen::VectorXd& index_series,
                               WindowLabel window, const BacktestSettings& settings) {
  BacktestResult r;
  r.window = window;
  r.return_series = series;
  auto cm = cumulative_metrics(series);
  r.cumulative_path = std::move(cm.path);
  r.mean_cumulative_return =
      settings.summary == CumulativeSummary::WindowAverage ? cm.mean_cumulative_return : cm.terminal_value;
  r.volatility = sample_std(series);
  r.sharpe = sharpe_ratio(series, settings.rf_annual, settings.periods_per_year);
  r.relative_volatility = relative_volatility(series, index_series);
  return r;
}

std::string_view to_string(Outcome o) noexcept {
  switch (o) {
    case Outcome::Green: return "Green";
    case Outcome::Yellow: return "Yellow";
    case Outcome::Red: return "Red";
  }
  return "Unknown";
}

std::string_view to_string(Basis b) noexcept {
  return b == Basis::CumulativeReturn ? "cumulative" : "sharpe";
}

OutcomeClass classify(const std::map<PortfolioKind, BacktestResult>& results, const BacktestResult& index,
                      Basis basis) {
  for (auto k : kAllPortfolioKinds) {
    if (!results.contains(k)) {
      throw Error(ErrorCode::IncompleteSet, fmt::format("no backtest result for {}", to_string(k)));
    }
  }
  auto metric = [basis](const BacktestResult& r) {
    return basis == Basis::CumulativeReturn ? r.mean_cumulative_return : r.sharpe;
  };
  const double benchmark = metric(index);
  if (metric(results.at(PortfolioKind::LlmWeighted)) > benchmark) return {Outcome::Green, basis};
  for (auto k : kAllPortfolioKinds) {
    if (k != PortfolioKind::LlmWeighted && metric(results.at(k)) > benchmark) return {Outcome::Yellow, basis};
  }
  return {Outcome::Red, basis};
}

}  // namespace sectorllm
