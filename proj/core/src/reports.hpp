#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sectorllm/config.hpp"
#include "sectorllm/pipeline.hpp"

namespace sectorllm::reports {

/// Writes every report file for the succeeded cells and returns their paths
/// relative to `out_dir`.
std::vector<std::string> write_all(const RunConfig& config, const std::filesystem::path& out_dir,
                                   const std::vector<CellRecord>& cells);

}  // namespace sectorllm::reports
