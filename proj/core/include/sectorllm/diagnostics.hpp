#pragma once

#include <Eigen/Dense>

#include <map>
#include <span>
#include <string>
#include <vector>

#include "sectorllm/llm_gateway.hpp"
#include "sectorllm/marketdata.hpp"

namespace sectorllm {

/// Unbiased sample covariance of the columns of `values` (rows = periods).
Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& values);

/// Eigenvalues of a symmetric matrix, descending, with values below 1e-12 of
/// the largest (including negatives) set to zero.
Eigen::VectorXd clamped_spectrum(const Eigen::MatrixXd& symmetric);

/// Smallest number of leading principal components of the return covariance
/// whose share of total variance reaches `threshold`.
int pca_components_for_threshold(const ReturnsMatrix& returns, double threshold);

/// exp of the Shannon entropy (natural log) of the normalized spectrum.
double effective_rank(const Eigen::MatrixXd& covariance);

/// Mean over tickers of the across-run sample std of normalized weights.
double weight_volatility(std::span<const WeightingRun> runs, std::span<const std::string> tickers);

struct DiagnosticsReport {
  std::string model_id;
  std::string sector_name;
  int pca_components_95 = 0;
  double effective_rank = 0.0;
  double hhi = 0.0;
  double weight_volatility = 0.0;
  std::map<WindowLabel, double> relative_volatility_by_window;
};

}  // namespace sectorllm
