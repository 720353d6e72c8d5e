#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdio>
#include <optional>

#include "sectorllm/config.hpp"
#include "sectorllm/pipeline.hpp"

namespace {

struct Overrides {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::string> mode;
  std::optional<int> workers;
  std::optional<int> portfolio_size;
  std::optional<int> selection_repeats;
  std::optional<int> weighting_repeats;
  std::optional<int> frontier_points;
  std::optional<double> rf_annual;
  std::optional<std::string> cassette_dir;
};

void add_common(CLI::App& cmd, Overrides& o) {
  cmd.add_option("-c,--config", o.config_path, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  cmd.add_option("-o,--out", o.out_dir, "Output directory")->capture_default_str();
  cmd.add_option("--mode", o.mode, "live | record | replay")
      ->check(CLI::IsMember({"live", "record", "replay"}));
  cmd.add_option("-j,--workers", o.workers, "Concurrent (model, sector) cells")->check(CLI::PositiveNumber);
  cmd.add_option("-k,--portfolio-size", o.portfolio_size, "Stocks per portfolio");
  cmd.add_option("--selection-repeats", o.selection_repeats, "Selection prompts per cell");
  cmd.add_option("--weighting-repeats", o.weighting_repeats, "Weighting prompts per cell");
  cmd.add_option("--frontier-points", o.frontier_points, "Efficient frontier grid size");
  cmd.add_option("--rf", o.rf_annual, "Annual risk-free rate");
  cmd.add_option("--cassette-dir", o.cassette_dir, "Directory of per-model cassettes");
}

sectorllm::RunConfig effective_config(const Overrides& o) {
  auto c = sectorllm::load_run_config(o.config_path);
  if (o.mode) c.mode = *sectorllm::parse_transcript_mode(*o.mode);
  if (o.workers) c.workers = *o.workers;
  if (o.portfolio_size) c.portfolio_size = *o.portfolio_size;
  if (o.selection_repeats) c.selection_repeats = *o.selection_repeats;
  if (o.weighting_repeats) c.weighting_repeats = *o.weighting_repeats;
  if (o.frontier_points) c.frontier_points = *o.frontier_points;
  if (o.rf_annual) c.rf_annual = *o.rf_annual;
  if (o.cassette_dir) c.cassette_dir = *o.cassette_dir;
  c.validate();
  return c;
}

int summarize(const std::vector<sectorllm::CellRecord>& cells) {
  int failed = 0;
  for (const auto& c : cells) {
    if (c.status == sectorllm::CellStatus::Failed) {
      ++failed;
      fmt::print(stderr, "FAILED {} / {} at {}: {}\n", c.model_id, c.sector_name, c.failed_stage, c.error);
    }
    for (const auto& w : c.warnings) fmt::print(stderr, "warning {} / {}: {}\n", c.model_id, c.sector_name, w);
  }
  fmt::print("{} of {} cells succeeded\n", cells.size() - static_cast<std::size_t>(failed), cells.size());
  return failed == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sector portfolio construction from LLM stock picks"};
  app.require_subcommand(1);
  Overrides o;

  const std::vector<std::pair<std::string, std::string>> stages = {
      {"select", "Query models for sector stock picks and aggregate them"},
      {"weight", "Query models for weights over the selected stocks"},
      {"build", "Build LLM-weighted and equal-weighted portfolios"},
      {"optimize", "Estimate moments and trace the efficient frontier"},
      {"backtest", "Evaluate every portfolio over the out-of-sample windows"},
      {"diagnose", "Compute concentration and dimensionality diagnostics"},
      {"report", "Write result tables, digests and the manifest"},
      {"run", "Run every stage in order"},
  };
  std::map<std::string, CLI::App*> cmds;
  for (const auto& [name, help] : stages) {
    cmds[name] = app.add_subcommand(name, help);
    add_common(*cmds[name], o);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    sectorllm::Pipeline p(effective_config(o), o.out_dir);
    if (cmds["run"]->parsed() || cmds["report"]->parsed()) {
      const auto m = cmds["run"]->parsed() ? p.run() : p.report();
      const int code = summarize(m.cells);
      fmt::print("{} portfolios, {} artifacts; digests in {}\n", m.portfolio_count, m.digests.size(),
                 (p.out_dir() / "digests.txt").string());
      return code;
    }
    if (cmds["select"]->parsed()) p.select();
    if (cmds["weight"]->parsed()) p.weight();
    if (cmds["build"]->parsed()) p.build();
    if (cmds["optimize"]->parsed()) p.optimize();
    if (cmds["backtest"]->parsed()) p.backtest();
    if (cmds["diagnose"]->parsed()) p.diagnose();
    return summarize(p.cells());
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
}
