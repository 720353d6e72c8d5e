#include <fmt/chrono.h>
#include <fmt/format.h>

#include <chrono>
#include <fstream>
#include <json.hpp>

#include "sectorllm/llm_gateway.hpp"

namespace sectorllm {

using nlohmann::json;

std::string_view to_string(TranscriptMode mode) noexcept {
  switch (mode) {
    case TranscriptMode::Live: return "live";
    case TranscriptMode::Record: return "record";
    case TranscriptMode::Replay: return "replay";
  }
  return "unknown";
}

std::optional<TranscriptMode> parse_transcript_mode(std::string_view text) noexcept {
  if (text == "live") return TranscriptMode::Live;
  if (text == "record") return TranscriptMode::Record;
  if (text == "replay") return TranscriptMode::Replay;
  return std::nullopt;
}

std::string to_json_line(const CassetteEntry& e) {
  json j = {
      {"sequence_no", e.sequence_no},
      {"prompt_kind", std::string(to_string(e.prompt_kind))},
      {"rendered_prompt", e.rendered_prompt},
      {"response_text", e.response_text},
      {"provider_id", e.provider_id},
      {"model_name", e.model_name},
      {"timestamp", e.timestamp},
  };
  if (!e.decoding.empty()) j["decoding"] = json::parse(e.decoding);
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

CassetteEntry parse_json_line(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::CassetteCorrupt, std::string("invalid JSON: ") + e.what());
  }
  auto field = [&](const char* name) -> const json& {
    if (!j.is_object() || !j.contains(name)) {
      throw Error(ErrorCode::CassetteCorrupt, fmt::format("entry missing field '{}'", name));
    }
    return j.at(name);
  };
  try {
    CassetteEntry e;
    e.sequence_no = field("sequence_no").get<long long>();
    auto kind = parse_prompt_kind(field("prompt_kind").get<std::string>());
    if (!kind) throw Error(ErrorCode::CassetteCorrupt, "unknown prompt_kind");
    e.prompt_kind = *kind;
    e.rendered_prompt = field("rendered_prompt").get<std::string>();
    e.response_text = field("response_text").get<std::string>();
    e.provider_id = field("provider_id").get<std::string>();
    e.model_name = field("model_name").get<std::string>();
    e.timestamp = field("timestamp").get<std::string>();
    if (j.contains("decoding")) e.decoding = j.at("decoding").dump();
    return e;
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::CassetteCorrupt, std::string("bad field type: ") + ex.what());
  }
}

std::vector<CassetteEntry> load_cassette(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open cassette " + path.string());
  std::vector<CassetteEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    CassetteEntry e;
    try {
      e = parse_json_line(line);
    } catch (const Error& err) {
      throw Error(ErrorCode::CassetteCorrupt, fmt::format("{}:{}: {}", path.string(), line_no, err.what()));
    }
    if (!entries.empty() && e.sequence_no <= entries.back().sequence_no) {
      throw Error(ErrorCode::CassetteCorrupt,
                  fmt::format("{}:{}: sequence_no {} does not follow {}", path.string(), line_no, e.sequence_no,
                              entries.back().sequence_no));
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

std::shared_ptr<Transcript> Transcript::live() {
  return std::shared_ptr<Transcript>(new Transcript(TranscriptMode::Live));
}

std::shared_ptr<Transcript> Transcript::record(const std::filesystem::path& cassette) {
  std::shared_ptr<Transcript> t(new Transcript(TranscriptMode::Record));
  t->path_ = cassette;
  if (std::filesystem::exists(cassette)) t->entries_ = load_cassette(cassette);
  if (cassette.has_parent_path()) std::filesystem::create_directories(cassette.parent_path());
  std::ofstream probe(cassette, std::ios::app);
  if (!probe) throw Error(ErrorCode::IoError, "cassette not writable: " + cassette.string());
  return t;
}

std::shared_ptr<Transcript> Transcript::replay(const std::filesystem::path& cassette) {
  std::shared_ptr<Transcript> t(new Transcript(TranscriptMode::Replay));
  t->path_ = cassette;
  t->entries_ = load_cassette(cassette);
  for (std::size_t i = 0; i < t->entries_.size(); ++i) {
    const auto& e = t->entries_[i];
    t->index_[{e.prompt_kind, e.rendered_prompt}].push_back(i);
  }
  return t;
}

std::string Transcript::lookup(PromptKind kind, const std::string& prompt) {
  if (mode_ != TranscriptMode::Replay) throw std::logic_error("Transcript::lookup outside replay mode");
  std::lock_guard lock(mutex_);
  const auto key = std::make_pair(kind, prompt);
  auto it = index_.find(key);
  auto& ordinal = served_[key];
  if (it == index_.end() || ordinal >= it->second.size()) {
    throw Error(ErrorCode::ReplayMiss, fmt::format("{}: no recorded {} reply #{} for prompt '{:.80}...'",
                                                   path_.string(), to_string(kind), ordinal + 1, prompt));
  }
  return entries_[it->second[ordinal++]].response_text;
}

void Transcript::append(PromptKind kind, const std::string& prompt, const std::string& response,
                        const std::string& provider_id, const std::string& model_name,
                        const std::string& decoding) {
  if (mode_ != TranscriptMode::Record) return;
  std::lock_guard lock(mutex_);
  CassetteEntry e;
  e.sequence_no = entries_.empty() ? 1 : entries_.back().sequence_no + 1;
  e.prompt_kind = kind;
  e.rendered_prompt = prompt;
  e.response_text = response;
  e.provider_id = provider_id;
  e.model_name = model_name;
  e.timestamp = fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::chrono::system_clock::to_time_t(
                                                          std::chrono::system_clock::now())));
  e.decoding = decoding;
  std::ofstream out(path_, std::ios::app);
  out << to_json_line(e) << '\n';
  out.flush();
  if (!out) throw Error(ErrorCode::IoError, "failed writing cassette " + path_.string());
  entries_.push_back(std::move(e));
}

std::vector<CassetteEntry> Transcript::entries() const {
  std::lock_guard lock(mutex_);
  return entries_;
}

}  // namespace sectorllm
