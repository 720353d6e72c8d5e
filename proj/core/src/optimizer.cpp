#include "sectorllm/optimizer.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sectorllm {

MomentModel estimate_moments(const ReturnsMatrix& returns) {
  const auto t = returns.rows();
  const auto n = returns.cols();
  if (t < 2) throw Error(ErrorCode::TooFewRows, fmt::format("need at least 2 return rows, have {}", t));

  MomentModel m;
  m.tickers = returns.tickers();
  m.mu = returns.values().colwise().mean().transpose();
  const Eigen::MatrixXd centered = returns.values().rowwise() - m.mu.transpose();
  m.Q = (centered.transpose() * centered) / static_cast<double>(t - 1);
  m.Q = 0.5 * (m.Q + m.Q.transpose());
  if (t < n + 1) {
    m.warnings.push_back(fmt::format("only {} rows for {} assets; covariance is rank deficient", t, n));
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m.Q, Eigen::EigenvaluesOnly);
  const double lambda_min = eig.eigenvalues().minCoeff();
  constexpr double kFloor = 1e-10;
  if (lambda_min < kFloor) {
    m.ridge = kFloor - lambda_min;
    m.Q.diagonal().array() += m.ridge;
    m.warnings.push_back(fmt::format("smallest covariance eigenvalue {:.3e}; added ridge {:.3e}", lambda_min, m.ridge));
  }
  return m;
}

Eigen::VectorXd max_return_weights(const MomentModel& m, const WeightBounds& b) {
  const auto n = m.mu.size();
  if (n == 0 || b.n != n || !b.feasible()) {
    throw Error(ErrorCode::Infeasible, fmt::format("bounds [{}, {}] infeasible for {} assets", b.lower, b.upper, n));
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index c) { return m.mu(a) > m.mu(c); });

  Eigen::VectorXd w = Eigen::VectorXd::Constant(n, b.lower);
  double remaining = 1.0 - static_cast<double>(n) * b.lower;
  const double room = b.upper - b.lower;
  for (std::size_t i = 0; i < order.size() && remaining > 0.0;) {
    std::size_t j = i;
    while (j < order.size() && m.mu(order[j]) == m.mu(order[i])) ++j;
    const auto group = static_cast<double>(j - i);
    const double each = std::min(room, remaining / group);
    for (std::size_t k = i; k < j; ++k) w(order[k]) += each;
    remaining -= each * group;
    i = j;
  }
  return w;
}

namespace {

// Inequality constraints a_i^T w >= b_i: lower bounds, upper bounds, then the
// optional return target.
struct ConstraintSet {
  Eigen::Index n;
  double lower;
  double upper;
  const Eigen::VectorXd* mu;
  double target;
  bool has_target;

  Eigen::Index count() const { return 2 * n + (has_target ? 1 : 0); }

  double dot(Eigen::Index i, const Eigen::VectorXd& x) const {
    if (i < n) return x(i);
    if (i < 2 * n) return -x(i - n);
    return mu->dot(x);
  }

  double rhs(Eigen::Index i) const {
    if (i < n) return lower;
    if (i < 2 * n) return -upper;
    return target;
  }

  void write_row(Eigen::Index i, Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> row) const {
    row.setZero();
    if (i < n) {
      row(i) = 1.0;
    } else if (i < 2 * n) {
      row(i - n) = -1.0;
    } else {
      row = mu->transpose();
    }
  }

  double norm(Eigen::Index i) const { return i < 2 * n ? 1.0 : mu->cwiseAbs().maxCoeff(); }
};

Eigen::MatrixXd active_matrix(const ConstraintSet& cs, const std::vector<Eigen::Index>& working) {
  Eigen::MatrixXd a(static_cast<Eigen::Index>(working.size()) + 1, cs.n);
  a.row(0).setOnes();
  for (std::size_t k = 0; k < working.size(); ++k) cs.write_row(working[k], a.row(static_cast<Eigen::Index>(k) + 1));
  return a;
}

KktReport kkt_report(const MomentModel& m, const ConstraintSet& cs, const std::vector<Eigen::Index>& working,
                     const Eigen::VectorXd& w, int iterations) {
  KktReport r;
  r.iterations = iterations;
  r.active_constraints = static_cast<int>(working.size());
  const Eigen::VectorXd grad = 2.0 * m.Q * w;
  const Eigen::MatrixXd a = active_matrix(cs, working);
  const Eigen::VectorXd lambda = a.transpose().colPivHouseholderQr().solve(grad);
  r.stationarity = (grad - a.transpose() * lambda).cwiseAbs().maxCoeff();
  r.min_multiplier = lambda.size() > 1 ? lambda.tail(lambda.size() - 1).minCoeff() : 0.0;
  double infeas = std::abs(w.sum() - 1.0);
  for (Eigen::Index i = 0; i < cs.count(); ++i) infeas = std::max(infeas, cs.rhs(i) - cs.dot(i, w));
  r.primal_infeasibility = std::max(0.0, infeas);
  return r;
}

}  // namespace

QpSolution solve_min_variance(const MomentModel& m, double epsilon, const WeightBounds& b,
                              const Eigen::VectorXd* warm_start) {
  const auto n = m.mu.size();
  if (n == 0 || m.Q.rows() != n || m.Q.cols() != n) throw std::invalid_argument("solve_min_variance: bad moment shapes");
  if (b.n != n || !b.feasible()) {
    throw Error(ErrorCode::Infeasible,
                fmt::format("bounds [{}, {}] inconsistent with {} assets", b.lower, b.upper, n));
  }
  if (std::isnan(epsilon)) throw std::invalid_argument("solve_min_variance: epsilon is NaN");

  // Feasible start: blend the start point toward the max-return allocation
  // until the return target is met.
  Eigen::VectorXd w = warm_start != nullptr ? *warm_start : Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  if (w.size() != n) throw std::invalid_argument("solve_min_variance: warm start has wrong size");
  const bool has_target = std::isfinite(epsilon);
  double target = epsilon;
  if (has_target) {
    const Eigen::VectorXd best = max_return_weights(m, b);
    const double best_return = m.mu.dot(best);
    const double scale = std::max(1.0, m.mu.cwiseAbs().maxCoeff());
    if (epsilon > best_return + 1e-12 * scale) {
      throw Error(ErrorCode::Infeasible,
                  fmt::format("target return {:.6g} exceeds the bounded maximum {:.6g}", epsilon, best_return));
    }
    const double start_return = m.mu.dot(w);
    if (start_return < epsilon) {
      const double gap = best_return - start_return;
      const double t = gap > 0.0 ? std::clamp((epsilon - start_return) / gap, 0.0, 1.0) : 1.0;
      w = t >= 1.0 ? best : Eigen::VectorXd(w + t * (best - w));
      target = std::min(epsilon, m.mu.dot(w));
    }
  }

  const ConstraintSet cs{n, b.lower, b.upper, &m.mu, target, has_target};
  const Eigen::MatrixXd hessian = 2.0 * m.Q;
  std::vector<Eigen::Index> working;
  std::vector<bool> in_working(static_cast<std::size_t>(cs.count()), false);

  // Start with every bound that is already tight, as long as the rows stay independent.
  Eigen::MatrixXd z = Eigen::MatrixXd::Identity(n, n);
  auto refresh_null_space = [&](const Eigen::MatrixXd& a, Eigen::HouseholderQR<Eigen::MatrixXd>& qr) {
    qr.compute(a.transpose());
    const Eigen::MatrixXd full = qr.householderQ();
    z = full.rightCols(n - a.rows());
  };
  auto independent = [&](Eigen::Index i) {
    Eigen::RowVectorXd row(n);
    cs.write_row(i, row);
    return z.cols() > 0 && (row * z).cwiseAbs().maxCoeff() > 1e-10 * row.cwiseAbs().maxCoeff();
  };
  Eigen::HouseholderQR<Eigen::MatrixXd> qr;
  refresh_null_space(active_matrix(cs, working), qr);
  for (Eigen::Index i = 0; i < 2 * n; ++i) {
    if (cs.dot(i, w) - cs.rhs(i) <= 0.0 && independent(i)) {
      working.push_back(i);
      in_working[static_cast<std::size_t>(i)] = true;
      refresh_null_space(active_matrix(cs, working), qr);
    }
  }

  const int max_iterations = 50 * static_cast<int>(cs.count()) + 100;
  bool degenerate = false;
  int iteration = 0;
  for (; iteration < max_iterations; ++iteration) {
    const Eigen::MatrixXd a = active_matrix(cs, working);
    const auto rows = a.rows();
    const Eigen::VectorXd grad = hessian * w;

    // Null-space step: p = -Z (Z^T G Z)^{-1} Z^T g keeps every working row tight.
    Eigen::VectorXd step = Eigen::VectorXd::Zero(n);
    if (z.cols() > 0) {
      const Eigen::MatrixXd reduced = z.transpose() * hessian * z;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(reduced);
      if (ldlt.info() != Eigen::Success) throw Error(ErrorCode::NumericalFailure, "reduced Hessian factorization failed");
      step = -z * ldlt.solve(z.transpose() * grad);
      if (!step.allFinite()) throw Error(ErrorCode::NumericalFailure, "active-set step is not finite");
    }

    if (step.cwiseAbs().maxCoeff() <= 1e-12) {
      // Stationary on the working set: optimal unless some multiplier is negative.
      const Eigen::MatrixXd r = qr.matrixQR().topRows(rows).triangularView<Eigen::Upper>();
      const Eigen::MatrixXd y = Eigen::MatrixXd(qr.householderQ()).leftCols(rows);
      const Eigen::VectorXd g = grad + hessian * step;
      const Eigen::VectorXd lambda = r.triangularView<Eigen::Upper>().solve(y.transpose() * g);
      const double gscale = std::max(g.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
      Eigen::Index drop = -1;
      double most_negative = 0.0;
      for (std::size_t k = 0; k < working.size(); ++k) {
        const double scaled = lambda(static_cast<Eigen::Index>(k) + 1) * cs.norm(working[k]) / gscale;
        if (scaled >= -1e-10) continue;
        if (degenerate) {
          // Bland's rule: lowest constraint index, to break cycles at degenerate vertices.
          if (drop < 0 || working[k] < working[static_cast<std::size_t>(drop)]) drop = static_cast<Eigen::Index>(k);
        } else if (scaled < most_negative) {
          most_negative = scaled;
          drop = static_cast<Eigen::Index>(k);
        }
      }
      if (drop < 0) break;
      in_working[static_cast<std::size_t>(working[static_cast<std::size_t>(drop)])] = false;
      working.erase(working.begin() + drop);
      refresh_null_space(active_matrix(cs, working), qr);
      continue;
    }

    double alpha = 1.0;
    Eigen::Index blocking = -1;
    const double step_norm = step.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < cs.count(); ++i) {
      if (in_working[static_cast<std::size_t>(i)]) continue;
      const double ap = cs.dot(i, step);
      if (ap >= -1e-14 * step_norm * cs.norm(i)) continue;
      const double slack = std::max(0.0, cs.dot(i, w) - cs.rhs(i));
      const double ratio = slack / -ap;
      if (ratio < alpha && independent(i)) {
        alpha = ratio;
        blocking = i;
      }
    }
    w += alpha * step;
    degenerate = blocking >= 0 && alpha == 0.0;
    if (blocking >= 0) {
      if (blocking < n) w(blocking) = b.lower;
      else if (blocking < 2 * n) w(blocking - n) = b.upper;
      working.push_back(blocking);
      in_working[static_cast<std::size_t>(blocking)] = true;
      refresh_null_space(active_matrix(cs, working), qr);
    }
  }
  if (iteration == max_iterations) {
    throw Error(ErrorCode::NumericalFailure, fmt::format("active set did not converge in {} iterations", iteration));
  }

  for (auto i : working) {
    if (i < n) w(i) = b.lower;
    else if (i < 2 * n) w(i - n) = b.upper;
  }
  w = w.cwiseMax(b.lower).cwiseMin(b.upper);

  QpSolution out;
  out.objective = w.dot(m.Q * w);
  out.kkt = kkt_report(m, cs, working, w, iteration);
  out.weights = std::move(w);
  return out;
}

namespace {

double sharpe_of(double expected_return, double variance, double rf) {
  const double excess = expected_return - rf;
  if (variance <= 0.0) {
    if (excess == 0.0) return 0.0;
    return excess > 0.0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
  }
  return excess / std::sqrt(variance);
}

}  // namespace

EfficientFrontier trace_frontier(const MomentModel& m, const WeightBounds& b, int num_points, double rf_per_period) {
  if (num_points < 2) throw std::invalid_argument("trace_frontier: num_points must be >= 2");

  const auto mvp = solve_min_variance(m, kNoReturnTarget, b);
  const Eigen::VectorXd top = max_return_weights(m, b);
  const double lo = m.mu.dot(mvp.weights);
  const double hi = std::max(lo, m.mu.dot(top));

  EfficientFrontier f;
  f.tickers = m.tickers;
  f.bounds = b;
  f.rf_per_period = rf_per_period;
  Eigen::VectorXd previous = mvp.weights;
  for (int k = 0; k < num_points; ++k) {
    const double eps = k == num_points - 1 ? hi : lo + (hi - lo) * static_cast<double>(k) / (num_points - 1);
    const auto sol = solve_min_variance(m, eps, b, &previous);
    FrontierPoint p;
    p.epsilon = eps;
    p.weights = sol.weights;
    p.expected_return = m.mu.dot(sol.weights);
    p.variance = sol.objective;
    p.sharpe = sharpe_of(p.expected_return, p.variance, rf_per_period);
    p.kkt = sol.kkt;
    previous = sol.weights;
    f.points.push_back(std::move(p));
  }
  return f;
}

OptimizedPortfolios pick_portfolios(const EfficientFrontier& f, const std::string& model_id,
                                    const std::string& sector_name) {
  if (f.points.empty()) throw std::invalid_argument("pick_portfolios: empty frontier");
  std::size_t best = 0;
  for (std::size_t i = 1; i < f.points.size(); ++i) {
    const auto& p = f.points[i];
    const auto& q = f.points[best];
    if (p.sharpe > q.sharpe || (p.sharpe == q.sharpe && p.variance < q.variance)) best = i;
  }
  auto make = [&](PortfolioKind kind, const FrontierPoint& p) {
    Eigen::VectorXd w = p.weights.cwiseMax(0.0);
    w /= w.sum();
    return Portfolio(kind, model_id, sector_name, f.tickers, std::move(w));
  };
  return {make(PortfolioKind::MinVariance, f.points.front()), make(PortfolioKind::MaxReturn, f.points.back()),
          make(PortfolioKind::MaxSharpe, f.points[best])};
}

}  // namespace sectorllm
