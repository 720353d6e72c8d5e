#include "sectorllm/portfolio.hpp"

#include <fmt/format.h>

#include <cmath>
#include <set>

namespace sectorllm {

std::string_view to_string(PortfolioKind kind) noexcept {
  switch (kind) {
    case PortfolioKind::LlmWeighted: return "LlmWeighted";
    case PortfolioKind::EqualWeighted: return "EqualWeighted";
    case PortfolioKind::MinVariance: return "MinVariance";
    case PortfolioKind::MaxReturn: return "MaxReturn";
    case PortfolioKind::MaxSharpe: return "MaxSharpe";
  }
  return "Unknown";
}

std::optional<PortfolioKind> parse_portfolio_kind(std::string_view text) noexcept {
  for (auto k : kAllPortfolioKinds) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

Portfolio::Portfolio(PortfolioKind kind, std::string model_id, std::string sector_name,
                     std::vector<std::string> tickers, Eigen::VectorXd weights)
    : kind_(kind),
      model_id_(std::move(model_id)),
      sector_name_(std::move(sector_name)),
      tickers_(std::move(tickers)),
      weights_(std::move(weights)) {
  if (static_cast<Eigen::Index>(tickers_.size()) != weights_.size() || tickers_.empty()) {
    throw std::invalid_argument("Portfolio: ticker and weight counts differ or are zero");
  }
  if (std::set<std::string>(tickers_.begin(), tickers_.end()).size() != tickers_.size()) {
    throw std::invalid_argument("Portfolio: duplicate tickers");
  }
  if (!weights_.allFinite() || (weights_.array() < 0.0).any()) {
    throw std::invalid_argument("Portfolio: weights must be finite and non-negative");
  }
  if (std::abs(weights_.sum() - 1.0) > 1e-9) {
    throw std::invalid_argument(fmt::format("Portfolio: weights sum to {}", weights_.sum()));
  }
}

bool WeightBounds::feasible() const noexcept {
  return 0.0 <= lower && lower <= upper && upper <= 1.0 && n >= 1 && n * lower <= 1.0 + 1e-12 &&
         n * upper >= 1.0 - 1e-12;
}

Eigen::MatrixXd normalized_run_weights(std::span<const WeightingRun> runs, std::span<const std::string> tickers) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(runs.size()),
                                              static_cast<Eigen::Index>(tickers.size()));
  for (std::size_t r = 0; r < runs.size(); ++r) {
    for (std::size_t j = 0; j < tickers.size(); ++j) {
      auto it = runs[r].weights.find(tickers[j]);
      if (it != runs[r].weights.end()) out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = it->second;
    }
    const double total = out.row(static_cast<Eigen::Index>(r)).sum();
    if (total > 0.0) out.row(static_cast<Eigen::Index>(r)) /= total;
  }
  return out;
}

Portfolio average_weights(std::span<const WeightingRun> runs, std::span<const std::string> tickers) {
  if (runs.empty()) throw std::invalid_argument("average_weights: no runs");
  if (tickers.empty()) throw std::invalid_argument("average_weights: no tickers");
  const auto normalized = normalized_run_weights(runs, tickers);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(normalized.cols());
  int used = 0;
  for (Eigen::Index r = 0; r < normalized.rows(); ++r) {
    if (normalized.row(r).sum() > 0.0) {
      sum += normalized.row(r).transpose();
      ++used;
    }
  }
  if (used == 0) throw Error(ErrorCode::AllZero, "every weighting run assigns zero total weight");
  Eigen::VectorXd mean = sum / used;
  mean /= mean.sum();
  return Portfolio(PortfolioKind::LlmWeighted, runs.front().model_id, runs.front().sector_name,
                   std::vector<std::string>(tickers.begin(), tickers.end()), std::move(mean));
}

Portfolio equal_weight(std::span<const std::string> tickers, std::string model_id, std::string sector_name) {
  if (tickers.empty()) throw std::invalid_argument("equal_weight: no tickers");
  const auto n = static_cast<Eigen::Index>(tickers.size());
  return Portfolio(PortfolioKind::EqualWeighted, std::move(model_id), std::move(sector_name),
                   std::vector<std::string>(tickers.begin(), tickers.end()),
                   Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)));
}

WeightBounds weight_bounds(int n) {
  if (n < 2) throw Error(ErrorCode::DegenerateUniverse, fmt::format("need at least 2 assets, have {}", n));
  return {1.0 / (2.0 * n), 2.0 / n, n};
}

double hhi(const Portfolio& p) noexcept {
  // Compensated dot product (TwoProduct via fma, TwoSum), so the 1/n weights
  // of an equal-weight portfolio give exactly 1/n rather than 1/n + ulp.
  double sum = 0.0;
  double correction = 0.0;
  for (double w : p.weights()) {
    const double prod = w * w;
    const double prod_err = std::fma(w, w, -prod);
    const double next = sum + prod;
    const double z = next - sum;
    correction += (sum - (next - z)) + (prod - z) + prod_err;
    sum = next;
  }
  return sum + correction;
}

}  // namespace sectorllm
