#pragma once

#include <cstdint>
#include <filesystem>

namespace sectorllm::testing {

struct FixtureShape {
  int models = 2;
  int sectors = 3;  // at most 6
  std::uint64_t seed = 20250101;
};

/// Writes prices.csv, registry.csv and config.json (replay mode) into `dir`,
/// then records one cassette per model under `dir/cassettes` by running the
/// pipeline in record mode against FakeLlm.
void write_replay_fixture(const std::filesystem::path& dir, const FixtureShape& shape = {});

/// Just the market data and registry for the first `sectors` sectors.
void write_market_data(const std::filesystem::path& dir, std::uint64_t seed, int sectors);

}  // namespace sectorllm::testing
