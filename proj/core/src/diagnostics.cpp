#include "sectorllm/diagnostics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "sectorllm/portfolio.hpp"

namespace sectorllm {

Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& values) {
  if (values.rows() < 2) throw Error(ErrorCode::TooFewRows, "covariance needs at least 2 rows");
  const Eigen::RowVectorXd mean = values.colwise().mean();
  const Eigen::MatrixXd centered = values.rowwise() - mean;
  Eigen::MatrixXd c = (centered.transpose() * centered) / static_cast<double>(values.rows() - 1);
  return 0.5 * (c + c.transpose());
}

Eigen::VectorXd clamped_spectrum(const Eigen::MatrixXd& symmetric) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetric, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw Error(ErrorCode::NumericalFailure, "eigendecomposition failed");
  Eigen::VectorXd values = eig.eigenvalues().reverse();  // Eigen sorts ascending
  const double largest = values.size() > 0 ? std::max(values(0), 0.0) : 0.0;
  for (auto& v : values) {
    if (v < 1e-12 * largest || v < 0.0) v = 0.0;
  }
  return values;
}

int pca_components_for_threshold(const ReturnsMatrix& returns, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw std::invalid_argument("threshold must be in (0, 1]");
  const auto spectrum = clamped_spectrum(sample_covariance(returns.values()));
  Eigen::VectorXd prefix(spectrum.size());
  double running = 0.0;
  for (Eigen::Index i = 0; i < spectrum.size(); ++i) {
    running += spectrum(i);
    prefix(i) = running;
  }
  const double total = running;
  if (!(total > 0.0)) throw Error(ErrorCode::ZeroTotalVariance, "returns have zero total variance");
  for (Eigen::Index i = 0; i < prefix.size(); ++i) {
    if (prefix(i) / total >= threshold) return static_cast<int>(i) + 1;
  }
  return static_cast<int>(prefix.size());
}

double effective_rank(const Eigen::MatrixXd& covariance) {
  if (covariance.rows() != covariance.cols() || covariance.rows() == 0) {
    throw std::invalid_argument("effective_rank: need a non-empty square matrix");
  }
  const auto spectrum = clamped_spectrum(covariance);
  const double total = spectrum.sum();
  if (!(total > 0.0)) throw Error(ErrorCode::ZeroMatrix, "matrix has no positive eigenvalue");
  double entropy = 0.0;
  for (double lambda : spectrum) {
    if (lambda <= 0.0) continue;
    const double p = lambda / total;
    entropy -= p * std::log(p);
  }
  return std::exp(entropy);
}

double weight_volatility(std::span<const WeightingRun> runs, std::span<const std::string> tickers) {
  if (runs.size() < 2) {
    throw Error(ErrorCode::TooFewRuns, fmt::format("need at least 2 weighting runs, have {}", runs.size()));
  }
  // Shifting by the first run makes identical runs give exactly zero.
  const Eigen::MatrixXd raw = normalized_run_weights(runs, tickers);
  const Eigen::MatrixXd w = raw.rowwise() - raw.row(0);
  const Eigen::RowVectorXd mean = w.colwise().mean();
  const Eigen::RowVectorXd var =
      (w.rowwise() - mean).array().square().colwise().sum() / static_cast<double>(w.rows() - 1);
  return var.array().sqrt().mean();
}

}  // namespace sectorllm
