#include "reports.hpp"

#include <fmt/format.h>

#include <functional>

#include "sectorllm/csv.hpp"
#include "state.hpp"

namespace sectorllm::reports {

namespace {

using csv::format_real;

class Writer {
 public:
  explicit Writer(std::filesystem::path out) : out_(std::move(out)) {}

  void file(const std::string& rel, const std::vector<std::string>& header,
            const std::vector<std::vector<std::string>>& rows) {
    std::string text = csv::join_record(header) + "\n";
    for (const auto& r : rows) text += csv::join_record(r) + "\n";
    state::write_text(out_ / rel, text);
    written_.push_back(rel);
  }

  std::vector<std::string> take() { return std::move(written_); }

 private:
  std::filesystem::path out_;
  std::vector<std::string> written_;
};

std::string real_or_na(double x) { return std::isfinite(x) ? format_real(x) : "NA"; }

struct CellData {
  const CellRecord* cell;
  std::string stem;
  state::SelectionState selection;
  std::vector<Portfolio> portfolios;
  state::FrontierState frontier;
  std::vector<state::WindowResults> backtest;
  DiagnosticsReport diagnostics;
};

std::filesystem::path stage_file(const std::filesystem::path& out, const char* stage, const std::string& stem) {
  return out / "state" / stage / (stem + ".json");
}

CellData load_cell(const std::filesystem::path& out, const CellRecord& c) {
  CellData d;
  d.cell = &c;
  d.stem = cell_stem(c.model_id, c.sector_name);
  d.selection = state::selection_from_json(state::read_json(stage_file(out, "select", d.stem)));
  d.portfolios = state::portfolios_from_json(state::read_json(stage_file(out, "build", d.stem)));
  const auto opt = state::read_json(stage_file(out, "optimize", d.stem));
  for (auto& p : state::portfolios_from_json(opt.at("portfolios"))) d.portfolios.push_back(std::move(p));
  d.frontier = state::frontier_from_json(opt);
  d.backtest = state::backtest_from_json(state::read_json(stage_file(out, "backtest", d.stem)));
  d.diagnostics = state::diagnostics_from_json(state::read_json(stage_file(out, "diagnose", d.stem)));
  return d;
}

void frontier_files(Writer& w, const std::string& rel, const std::vector<std::string>& tickers,
                    const std::vector<FrontierPoint>& points) {
  std::vector<std::vector<std::string>> summary;
  std::vector<std::vector<std::string>> weights;
  for (const auto& p : points) {
    summary.push_back({format_real(p.epsilon), format_real(p.expected_return), format_real(p.variance),
                       real_or_na(p.sharpe)});
    std::vector<std::string> row{format_real(p.epsilon)};
    for (Eigen::Index i = 0; i < p.weights.size(); ++i) row.push_back(format_real(p.weights[i]));
    weights.push_back(std::move(row));
  }
  w.file(rel + ".csv", {"epsilon", "expected_return", "variance", "sharpe"}, summary);
  std::vector<std::string> header{"epsilon"};
  header.insert(header.end(), tickers.begin(), tickers.end());
  w.file(rel + "_weights.csv", header, weights);
}

}  // namespace

std::vector<std::string> write_all(const RunConfig& config, const std::filesystem::path& out_dir,
                                   const std::vector<CellRecord>& cells) {
  std::vector<CellData> data;
  for (const auto& c : cells) {
    if (c.status == CellStatus::Succeeded) data.push_back(load_cell(out_dir, c));
  }
  const auto windows = config.out_of_sample();
  Writer w(out_dir);

  std::vector<std::vector<std::string>> portfolio_rows;
  std::vector<std::vector<std::string>> result_rows;
  for (const auto& d : data) {
    for (const auto& p : d.portfolios) {
      for (Eigen::Index i = 0; i < p.size(); ++i) {
        portfolio_rows.push_back({std::string(to_string(p.kind())), p.model_id(), p.sector_name(),
                                  p.tickers()[static_cast<std::size_t>(i)], format_real(p.weights()[i])});
      }
    }
    for (const auto& r : d.backtest) {
      const std::string cls_c(to_string(r.class_cumulative));
      const std::string cls_s(to_string(r.class_sharpe));
      auto row = [&](const std::string& kind, const BacktestResult& b) {
        result_rows.push_back({d.cell->model_id, d.cell->sector_name, kind, std::string(to_string(r.window)),
                               format_real(b.mean_cumulative_return), format_real(b.sharpe),
                               format_real(b.volatility), format_real(b.relative_volatility), cls_c, cls_s});
      };
      for (auto kind : kAllPortfolioKinds) row(std::string(to_string(kind)), r.portfolios.at(kind));
      row("Index", r.index);
    }
  }
  w.file("portfolios.csv", {"kind", "model_id", "sector", "ticker", "weight"}, portfolio_rows);
  w.file("results.csv",
         {"model_id", "sector", "kind", "window", "mean_cum_return", "sharpe", "volatility", "relative_volatility",
          "class_cum", "class_sharpe"},
         result_rows);

  // Index series depend only on the sector and window; take the first cell that has them.
  std::vector<std::vector<std::string>> index_rows;
  for (const auto& sector : config.sectors) {
    for (const auto& d : data) {
      if (d.cell->sector_name != sector) continue;
      for (const auto& r : d.backtest) {
        for (std::size_t t = 0; t < r.dates.size(); ++t) {
          index_rows.push_back({sector, std::string(to_string(r.window)), format_date(r.dates[t]),
                                format_real(r.index.return_series[static_cast<Eigen::Index>(t)])});
        }
      }
      break;
    }
  }
  w.file("index_returns.csv", {"sector", "window", "date", "return"}, index_rows);

  // Grids: one row per sector, one column per model.
  std::vector<std::string> grid_header{"sector"};
  for (const auto& m : config.models) grid_header.push_back(m.model_id);
  auto grid = [&](const std::string& rel, const std::function<std::string(const CellData&)>& value) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& sector : config.sectors) {
      std::vector<std::string> row{sector};
      for (const auto& m : config.models) {
        std::string v = "failed";
        for (const auto& d : data) {
          if (d.cell->model_id == m.model_id && d.cell->sector_name == sector) v = value(d);
        }
        row.push_back(std::move(v));
      }
      rows.push_back(std::move(row));
    }
    w.file(rel, grid_header, rows);
  };
  auto window_of = [](const CellData& d, WindowLabel label) -> const state::WindowResults& {
    for (const auto& r : d.backtest) {
      if (r.window == label) return r;
    }
    throw Error(ErrorCode::DataError, "backtest state lacks window " + std::string(to_string(label)));
  };

  for (auto basis : {Basis::CumulativeReturn, Basis::Sharpe}) {
    for (const auto& win : windows) {
      grid(fmt::format("classes_{}_{}.csv", to_string(basis), to_string(win.label)), [&](const CellData& d) {
        const auto& r = window_of(d, win.label);
        return std::string(to_string(basis == Basis::Sharpe ? r.class_sharpe : r.class_cumulative));
      });
    }
  }

  grid("diagnostics/pca_components_95.csv",
       [](const CellData& d) { return std::to_string(d.diagnostics.pca_components_95); });
  grid("diagnostics/effective_rank.csv", [](const CellData& d) { return format_real(d.diagnostics.effective_rank); });
  grid("diagnostics/hhi.csv", [](const CellData& d) { return format_real(d.diagnostics.hhi); });
  grid("diagnostics/weight_volatility.csv",
       [](const CellData& d) { return real_or_na(d.diagnostics.weight_volatility); });
  grid("diagnostics/universe.csv", [](const CellData& d) {
    const auto s = universe_stats(d.selection.selection);
    return fmt::format("{}/{}", s.universe_size, s.false_count);
  });
  for (const auto& win : windows) {
    grid(fmt::format("diagnostics/relative_volatility_{}.csv", to_string(win.label)), [&](const CellData& d) {
      const auto& m = d.diagnostics.relative_volatility_by_window;
      auto it = m.find(win.label);
      return it == m.end() ? std::string("NA") : format_real(it->second);
    });
  }

  for (const auto& d : data) {
    frontier_files(w, "frontier/" + d.stem, d.frontier.tickers, d.frontier.bounded);
    frontier_files(w, "frontier/" + d.stem + "_long_only", d.frontier.tickers, d.frontier.long_only);
    for (const auto& r : d.backtest) {
      std::vector<std::vector<std::string>> rows;
      auto add = [&](const std::string& label, const Eigen::VectorXd& path) {
        for (std::size_t t = 0; t < r.dates.size(); ++t) {
          rows.push_back({format_date(r.dates[t]), label, format_real(path[static_cast<Eigen::Index>(t)])});
        }
      };
      for (auto kind : kAllPortfolioKinds) add(std::string(to_string(kind)), r.portfolios.at(kind).cumulative_path);
      add("Index", r.index.cumulative_path);
      w.file(fmt::format("paths/{}__{}.csv", d.stem, to_string(r.window)), {"date", "label", "value"}, rows);
    }
  }
  return w.take();
}

}  // namespace sectorllm::reports
