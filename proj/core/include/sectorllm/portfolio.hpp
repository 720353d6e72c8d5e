#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sectorllm/llm_gateway.hpp"

namespace sectorllm {

enum class PortfolioKind { LlmWeighted, EqualWeighted, MinVariance, MaxReturn, MaxSharpe };

inline constexpr PortfolioKind kAllPortfolioKinds[] = {PortfolioKind::LlmWeighted, PortfolioKind::EqualWeighted,
                                                       PortfolioKind::MinVariance, PortfolioKind::MaxReturn,
                                                       PortfolioKind::MaxSharpe};

std::string_view to_string(PortfolioKind kind) noexcept;
std::optional<PortfolioKind> parse_portfolio_kind(std::string_view text) noexcept;

/// Long-only weight vector over distinct tickers, summing to one within 1e-9.
class Portfolio {
 public:
  Portfolio(PortfolioKind kind, std::string model_id, std::string sector_name, std::vector<std::string> tickers,
            Eigen::VectorXd weights);

  PortfolioKind kind() const noexcept { return kind_; }
  const std::string& model_id() const noexcept { return model_id_; }
  const std::string& sector_name() const noexcept { return sector_name_; }
  const std::vector<std::string>& tickers() const noexcept { return tickers_; }
  const Eigen::VectorXd& weights() const noexcept { return weights_; }
  Eigen::Index size() const noexcept { return weights_.size(); }

 private:
  PortfolioKind kind_;
  std::string model_id_;
  std::string sector_name_;
  std::vector<std::string> tickers_;
  Eigen::VectorXd weights_;
};

/// Box constraints lower <= w_i <= upper shared by every optimized portfolio.
struct WeightBounds {
  double lower = 0.0;
  double upper = 1.0;
  int n = 0;

  /// n * lower <= 1 <= n * upper and 0 <= lower <= upper <= 1.
  bool feasible() const noexcept;
};

/// Per-run weights normalized to one over `tickers` (absent = 0). Runs whose
/// total is zero are skipped by average_weights and rejected by the rest.
Eigen::MatrixXd normalized_run_weights(std::span<const WeightingRun> runs, std::span<const std::string> tickers);

/// Mean of the per-run normalized weights, renormalized to sum to one.
Portfolio average_weights(std::span<const WeightingRun> runs, std::span<const std::string> tickers);

Portfolio equal_weight(std::span<const std::string> tickers, std::string model_id = {}, std::string sector_name = {});

/// lower = 1/(2n), upper = 2/n.
WeightBounds weight_bounds(int n);

/// Sum of squared weights.
double hhi(const Portfolio& p) noexcept;

}  // namespace sectorllm
