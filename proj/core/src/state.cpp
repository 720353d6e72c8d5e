#include "state.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace sectorllm::state {

namespace {

json vec(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vec_from(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

// JSON has no infinities; a frontier point with zero variance can have one.
json real(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

double real_from(const json& j) {
  if (j.is_number()) return j.get<double>();
  const auto s = j.get<std::string>();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  return std::numeric_limits<double>::quiet_NaN();
}

Outcome outcome_from(const std::string& s) {
  if (s == "Green") return Outcome::Green;
  if (s == "Yellow") return Outcome::Yellow;
  return Outcome::Red;
}

PortfolioKind kind_from(const json& j) {
  auto k = parse_portfolio_kind(j.get<std::string>());
  if (!k) throw Error(ErrorCode::DataError, "unknown portfolio kind in state: " + j.dump());
  return *k;
}

json point_json(const FrontierPoint& p) {
  return {{"epsilon", p.epsilon},
          {"expected_return", p.expected_return},
          {"variance", p.variance},
          {"sharpe", real(p.sharpe)},
          {"weights", vec(p.weights)},
          {"kkt",
           {{"stationarity", p.kkt.stationarity},
            {"min_multiplier", p.kkt.min_multiplier},
            {"primal_infeasibility", p.kkt.primal_infeasibility},
            {"iterations", p.kkt.iterations},
            {"active_constraints", p.kkt.active_constraints}}}};
}

FrontierPoint point_from(const json& j) {
  FrontierPoint p;
  p.epsilon = j.at("epsilon").get<double>();
  p.expected_return = j.at("expected_return").get<double>();
  p.variance = j.at("variance").get<double>();
  p.sharpe = real_from(j.at("sharpe"));
  p.weights = vec_from(j.at("weights"));
  const auto& k = j.at("kkt");
  p.kkt.stationarity = k.at("stationarity").get<double>();
  p.kkt.min_multiplier = k.at("min_multiplier").get<double>();
  p.kkt.primal_infeasibility = k.at("primal_infeasibility").get<double>();
  p.kkt.iterations = k.at("iterations").get<int>();
  p.kkt.active_constraints = k.at("active_constraints").get<int>();
  return p;
}

json result_json(const BacktestResult& r) {
  return {{"kind", r.kind ? json(std::string(to_string(*r.kind))) : json(nullptr)},
          {"model_id", r.model_id},
          {"sector", r.sector_name},
          {"window", std::string(to_string(r.window))},
          {"returns", vec(r.return_series)},
          {"path", vec(r.cumulative_path)},
          {"mean_cumulative_return", r.mean_cumulative_return},
          {"sharpe", r.sharpe},
          {"volatility", r.volatility},
          {"relative_volatility", r.relative_volatility}};
}

BacktestResult result_from(const json& j) {
  BacktestResult r;
  if (!j.at("kind").is_null()) r.kind = kind_from(j.at("kind"));
  r.model_id = j.at("model_id").get<std::string>();
  r.sector_name = j.at("sector").get<std::string>();
  r.window = parse_window_label(j.at("window").get<std::string>()).value();
  r.return_series = vec_from(j.at("returns"));
  r.cumulative_path = vec_from(j.at("path"));
  r.mean_cumulative_return = j.at("mean_cumulative_return").get<double>();
  r.sharpe = j.at("sharpe").get<double>();
  r.volatility = j.at("volatility").get<double>();
  r.relative_volatility = j.at("relative_volatility").get<double>();
  return r;
}

}  // namespace

json to_json(const SelectionState& s) {
  json runs = json::array();
  for (const auto& r : s.runs) {
    runs.push_back({{"model_id", r.model_id},
                    {"sector", r.sector_name},
                    {"run_index", r.run_index},
                    {"raw_tickers", r.raw_tickers},
                    {"rationale", r.rationale_text}});
  }
  const auto& u = s.selection;
  return {{"runs", runs},
          {"selection",
           {{"model_id", u.model_id},
            {"sector", u.sector_name},
            {"chosen", u.chosen},
            {"false_stocks", u.false_stocks},
            {"unpriced", u.unpriced},
            {"frequency", u.frequency},
            {"universe_size", u.universe_size}}}};
}

SelectionState selection_from_json(const json& j) {
  SelectionState s;
  for (const auto& r : j.at("runs")) {
    s.runs.push_back({r.at("model_id").get<std::string>(), r.at("sector").get<std::string>(),
                      r.at("run_index").get<int>(), r.at("raw_tickers").get<std::vector<std::string>>(),
                      r.at("rationale").get<std::string>()});
  }
  const auto& u = j.at("selection");
  s.selection.model_id = u.at("model_id").get<std::string>();
  s.selection.sector_name = u.at("sector").get<std::string>();
  s.selection.chosen = u.at("chosen").get<std::vector<std::string>>();
  s.selection.false_stocks = u.at("false_stocks").get<std::set<std::string>>();
  s.selection.unpriced = u.at("unpriced").get<std::set<std::string>>();
  s.selection.frequency = u.at("frequency").get<std::map<std::string, int>>();
  s.selection.universe_size = u.at("universe_size").get<int>();
  return s;
}

json to_json(const std::vector<WeightingRun>& runs) {
  json out = json::array();
  for (const auto& r : runs) {
    out.push_back({{"model_id", r.model_id},
                   {"sector", r.sector_name},
                   {"run_index", r.run_index},
                   {"weights", r.weights},
                   {"rationale", r.rationale_text},
                   {"warnings", r.warnings}});
  }
  return out;
}

std::vector<WeightingRun> weighting_from_json(const json& j) {
  std::vector<WeightingRun> out;
  for (const auto& r : j) {
    out.push_back({r.at("model_id").get<std::string>(), r.at("sector").get<std::string>(),
                   r.at("run_index").get<int>(), r.at("weights").get<std::map<std::string, double>>(),
                   r.at("rationale").get<std::string>(), r.at("warnings").get<std::vector<std::string>>()});
  }
  return out;
}

json to_json(const std::vector<Portfolio>& portfolios) {
  json out = json::array();
  for (const auto& p : portfolios) {
    out.push_back({{"kind", std::string(to_string(p.kind()))},
                   {"model_id", p.model_id()},
                   {"sector", p.sector_name()},
                   {"tickers", p.tickers()},
                   {"weights", vec(p.weights())}});
  }
  return out;
}

std::vector<Portfolio> portfolios_from_json(const json& j) {
  std::vector<Portfolio> out;
  for (const auto& p : j) {
    out.emplace_back(kind_from(p.at("kind")), p.at("model_id").get<std::string>(), p.at("sector").get<std::string>(),
                     p.at("tickers").get<std::vector<std::string>>(), vec_from(p.at("weights")));
  }
  return out;
}

json to_json(const FrontierState& f) {
  json bounded = json::array();
  for (const auto& p : f.bounded) bounded.push_back(point_json(p));
  json long_only = json::array();
  for (const auto& p : f.long_only) long_only.push_back(point_json(p));
  return {{"tickers", f.tickers}, {"bounded", bounded}, {"long_only", long_only}};
}

FrontierState frontier_from_json(const json& j) {
  FrontierState f;
  f.tickers = j.at("tickers").get<std::vector<std::string>>();
  for (const auto& p : j.at("bounded")) f.bounded.push_back(point_from(p));
  for (const auto& p : j.at("long_only")) f.long_only.push_back(point_from(p));
  return f;
}

json to_json(const std::vector<WindowResults>& results) {
  json out = json::array();
  for (const auto& w : results) {
    json dates = json::array();
    for (auto d : w.dates) dates.push_back(format_date(d));
    json portfolios = json::array();
    for (const auto& [_, r] : w.portfolios) portfolios.push_back(result_json(r));
    out.push_back({{"window", std::string(to_string(w.window))},
                   {"dates", dates},
                   {"portfolios", portfolios},
                   {"index", result_json(w.index)},
                   {"class_cumulative", std::string(to_string(w.class_cumulative))},
                   {"class_sharpe", std::string(to_string(w.class_sharpe))}});
  }
  return out;
}

std::vector<WindowResults> backtest_from_json(const json& j) {
  std::vector<WindowResults> out;
  for (const auto& w : j) {
    WindowResults r;
    r.window = parse_window_label(w.at("window").get<std::string>()).value();
    for (const auto& d : w.at("dates")) r.dates.push_back(parse_date(d.get<std::string>()).value());
    for (const auto& p : w.at("portfolios")) {
      auto res = result_from(p);
      r.portfolios.emplace(*res.kind, std::move(res));
    }
    r.index = result_from(w.at("index"));
    r.class_cumulative = outcome_from(w.at("class_cumulative").get<std::string>());
    r.class_sharpe = outcome_from(w.at("class_sharpe").get<std::string>());
    out.push_back(std::move(r));
  }
  return out;
}

json to_json(const DiagnosticsReport& d) {
  json relvol = json::object();
  for (const auto& [w, v] : d.relative_volatility_by_window) relvol[std::string(to_string(w))] = v;
  return {{"model_id", d.model_id},
          {"sector", d.sector_name},
          {"pca_components_95", d.pca_components_95},
          {"effective_rank", d.effective_rank},
          {"hhi", d.hhi},
          {"weight_volatility", real(d.weight_volatility)},
          {"relative_volatility", relvol}};
}

DiagnosticsReport diagnostics_from_json(const json& j) {
  DiagnosticsReport d;
  d.model_id = j.at("model_id").get<std::string>();
  d.sector_name = j.at("sector").get<std::string>();
  d.pca_components_95 = j.at("pca_components_95").get<int>();
  d.effective_rank = j.at("effective_rank").get<double>();
  d.hhi = j.at("hhi").get<double>();
  d.weight_volatility = real_from(j.at("weight_volatility"));
  for (const auto& [k, v] : j.at("relative_volatility").items()) {
    d.relative_volatility_by_window[parse_window_label(k).value()] = v.get<double>();
  }
  return d;
}

json to_json(const std::vector<CellRecord>& cells) {
  json out = json::array();
  for (const auto& c : cells) {
    out.push_back({{"model_id", c.model_id},
                   {"sector", c.sector_name},
                   {"status", c.status == CellStatus::Succeeded ? "succeeded" : "failed"},
                   {"failed_stage", c.failed_stage},
                   {"error", c.error},
                   {"warnings", c.warnings}});
  }
  return out;
}

std::vector<CellRecord> cells_from_json(const json& j) {
  std::vector<CellRecord> out;
  for (const auto& c : j) {
    CellRecord r;
    r.model_id = c.at("model_id").get<std::string>();
    r.sector_name = c.at("sector").get<std::string>();
    r.status = c.at("status").get<std::string>() == "succeeded" ? CellStatus::Succeeded : CellStatus::Failed;
    r.failed_stage = c.at("failed_stage").get<std::string>();
    r.error = c.at("error").get<std::string>();
    r.warnings = c.at("warnings").get<std::vector<std::string>>();
    out.push_back(std::move(r));
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  out.close();
  if (!out) throw Error(ErrorCode::IoError, "failed to write " + path.string());
}

void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(1) + "\n"); }

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::DataError, "missing stage state " + path.string() + " (run the earlier stage first)");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::DataError, path.string() + ": " + e.what());
  }
}

}  // namespace sectorllm::state
