#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace sectorllm::csv {

/// Splits one CSV record. Double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_record(std::string_view line);

/// Quotes a field only when it contains a delimiter, quote or newline.
std::string escape_field(std::string_view field);

std::string join_record(const std::vector<std::string>& fields);

/// Calls `on_row(line_number, fields)` for every non-empty data line after
/// checking that the header matches `expected_header` exactly.
void read_file(const std::filesystem::path& path, const std::vector<std::string>& expected_header,
               const std::function<void(std::size_t, const std::vector<std::string>&)>& on_row);

/// Reals in every exported file use 10 significant digits.
std::string format_real(double value);

}  // namespace sectorllm::csv
