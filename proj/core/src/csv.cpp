#include "sectorllm/csv.hpp"

#include <fmt/format.h>

#include <fstream>

#include "sectorllm/error.hpp"

namespace sectorllm::csv {

std::vector<std::string> split_record(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

std::string escape_field(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string join_record(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i != 0) out.push_back(',');
    out += escape_field(fields[i]);
  }
  return out;
}

void read_file(const std::filesystem::path& path, const std::vector<std::string>& expected_header,
               const std::function<void(std::size_t, const std::vector<std::string>&)>& on_row) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());

  std::string line;
  std::size_t line_number = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_record(line);
    if (!header_seen) {
      if (line_number == 1 && !fields.empty() && fields[0].starts_with("\xEF\xBB\xBF")) {
        fields[0].erase(0, 3);
      }
      if (fields != expected_header) {
        throw Error(ErrorCode::MalformedRow,
                    path.string() + ": unexpected header '" + line + "', expected '" +
                        join_record(expected_header) + "'");
      }
      header_seen = true;
      continue;
    }
    on_row(line_number, fields);
  }
  if (!header_seen) throw Error(ErrorCode::MalformedRow, path.string() + ": missing header");
}

std::string format_real(double value) {
  if (value == 0.0) value = 0.0;  // no "-0"
  return fmt::format("{:.10g}", value);
}

}  // namespace sectorllm::csv
