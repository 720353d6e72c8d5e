#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "sectorllm/config.hpp"
#include "sectorllm/universe.hpp"

namespace sectorllm {

enum class Stage { Select, Weight, Build, Optimize, Backtest, Diagnose, Report };

std::string_view to_string(Stage stage) noexcept;

enum class CellStatus { Succeeded, Failed };

/// Outcome of one (model, sector) cell across the stages run so far.
struct CellRecord {
  std::string model_id;
  std::string sector_name;
  CellStatus status = CellStatus::Succeeded;
  std::string failed_stage;
  std::string error;
  std::vector<std::string> warnings;
};

struct ArtifactDigest {
  std::string path;  // relative to the output directory
  std::string sha256;
};

struct RunManifest {
  std::string config_snapshot;
  std::vector<CellRecord> cells;
  int portfolio_count = 0;  // 5 per successful cell
  std::vector<std::string> error_log;
  std::vector<ArtifactDigest> digests;

  int succeeded() const;
  int failed() const;
};

/// Builds a transport for one model; only called outside replay mode.
using TransportFactory = std::function<std::shared_ptr<Transport>(const ModelConfig&)>;

/// Stage driver over an output directory. Each stage reads the persisted
/// state of its predecessors from `<out>/state` and writes its own, so stages
/// can be rerun individually without re-querying providers.
class Pipeline {
 public:
  Pipeline(RunConfig config, std::filesystem::path out_dir, TransportFactory transports = nullptr);
  ~Pipeline();

  Pipeline(const Pipeline&) = delete;
  Pipeline& operator=(const Pipeline&) = delete;

  void select();
  void weight();
  void build();
  void optimize();
  void backtest();
  void diagnose();
  /// Writes every report file plus digests.txt and manifest.json.
  RunManifest report();

  /// select -> weight -> build -> optimize -> backtest -> diagnose -> report.
  RunManifest run();

  /// Cell outcomes so far (persisted in `<out>/state/cells.json`).
  const std::vector<CellRecord>& cells() const noexcept;

  const RunConfig& config() const noexcept { return config_; }
  const std::filesystem::path& out_dir() const noexcept { return out_dir_; }

 private:
  struct Impl;
  RunConfig config_;
  std::filesystem::path out_dir_;
  std::unique_ptr<Impl> impl_;
};

/// SHA-256 of each listed file, sorted by path.
std::vector<ArtifactDigest> digest_directory(const std::filesystem::path& root,
                                             const std::vector<std::string>& relative_paths);

std::string sha256_hex(std::string_view bytes);

/// Lower-cased, filesystem-safe cell file stem `<model>__<sector>`.
std::string cell_stem(const std::string& model_id, const std::string& sector_name);

}  // namespace sectorllm
