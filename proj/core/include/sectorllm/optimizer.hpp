#pragma once

#include <Eigen/Dense>

#include <limits>
#include <string>
#include <vector>

#include "sectorllm/marketdata.hpp"
#include "sectorllm/portfolio.hpp"

namespace sectorllm {

/// Sample moments of in-sample returns.
struct MomentModel {
  std::vector<std::string> tickers;
  Eigen::VectorXd mu;  // per-period expected returns
  Eigen::MatrixXd Q;   // covariance
  double ridge = 0.0;  // diagonal shift added to make Q safely positive definite
  std::vector<std::string> warnings;
};

/// Column means and unbiased sample covariance. When the smallest eigenvalue
/// of Q is below 1e-10, Q += (1e-10 - lambda_min) I and the shift is recorded.
MomentModel estimate_moments(const ReturnsMatrix& returns);

struct KktReport {
  double stationarity = 0.0;          // ||2Qw - A_active^T lambda||_inf
  double min_multiplier = 0.0;        // smallest inequality multiplier (>= 0 at optimum)
  double primal_infeasibility = 0.0;  // worst violation of sum, bounds and return target
  int iterations = 0;
  int active_constraints = 0;
};

struct QpSolution {
  Eigen::VectorXd weights;
  double objective = 0.0;  // w^T Q w
  KktReport kkt;
};

inline constexpr double kNoReturnTarget = -std::numeric_limits<double>::infinity();

/// Solves  min w^T Q w  s.t. mu^T w >= epsilon, sum(w) = 1, lower <= w <= upper
/// with a primal active-set method. `warm_start`, when given, must satisfy the
/// sum and bound constraints. Pass kNoReturnTarget to drop the return constraint.
/// Throws Infeasible or NumericalFailure.
QpSolution solve_min_variance(const MomentModel& m, double epsilon, const WeightBounds& b,
                              const Eigen::VectorXd* warm_start = nullptr);

/// Maximizes mu^T w over the bounded simplex by filling the highest-return
/// assets to the upper bound. Assets with equal mu share their allocation.
Eigen::VectorXd max_return_weights(const MomentModel& m, const WeightBounds& b);

struct FrontierPoint {
  double epsilon = 0.0;
  Eigen::VectorXd weights;
  double expected_return = 0.0;
  double variance = 0.0;
  double sharpe = 0.0;
  KktReport kkt;
};

struct EfficientFrontier {
  std::vector<std::string> tickers;
  std::vector<FrontierPoint> points;  // epsilon ascending
  WeightBounds bounds;
  double rf_per_period = 0.0;
};

/// Linear epsilon grid from the minimum-variance return to the maximum return,
/// each point solved with a warm start from its predecessor.
EfficientFrontier trace_frontier(const MomentModel& m, const WeightBounds& b, int num_points,
                                 double rf_per_period = 0.0);

struct OptimizedPortfolios {
  Portfolio min_variance;
  Portfolio max_return;
  Portfolio max_sharpe;
};

/// First point, last point and the highest-Sharpe point (ties to lower variance).
OptimizedPortfolios pick_portfolios(const EfficientFrontier& f, const std::string& model_id,
                                    const std::string& sector_name);

}  // namespace sectorllm
