#pragma once

#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sectorllm/universe.hpp"

namespace sectorllm {

// ---------------------------------------------------------------------------
// Prompts

enum class PromptKind { SelectStocks, ExtractTickers, AssignWeights, ExtractWeights };

std::string_view to_string(PromptKind kind) noexcept;
std::optional<PromptKind> parse_prompt_kind(std::string_view text) noexcept;

/// Template text with `{tickers}`, `{sector_index}`, `{ticker_list}` and
/// `{output}` placeholders.
struct PromptTemplate {
  PromptKind kind;
  std::string text;
};

const PromptTemplate& default_template(PromptKind kind);

/// Substitutes `values` into the template. Throws MissingPlaceholder if any
/// `{name}` is left unresolved.
std::string render_template(const PromptTemplate& tmpl, const std::map<std::string, std::string>& values);

/// `{tickers}` takes the index ticker and `{sector_index}` the sector name
/// (lower-cased in the selection prompt). `{ticker_list}` is space-joined.
std::string render_prompt(PromptKind kind, const SectorSpec& sector,
                          std::optional<std::span<const std::string>> ticker_list = std::nullopt,
                          std::optional<std::string_view> prior_output = std::nullopt);

// ---------------------------------------------------------------------------
// Reply parsing

/// Splits a ticker-list reply on whitespace, commas and semicolons, strips
/// `,.;()[]$*"'` and backticks from token ends and upper-cases. When the reply mixes
/// upper-case symbols with prose, only the originally upper-case tokens are
/// kept. ParseError if nothing survives.
std::vector<std::string> parse_ticker_reply(std::string_view reply);

struct ParsedWeights {
  std::map<std::string, double> weights;
  std::vector<std::string> warnings;
};

/// Extracts every `SYMBOL: number` pair. Symbols are upper-cased; a repeated
/// symbol keeps its last value. ParseError when no pair is found,
/// NegativeWeight when any value is below zero.
ParsedWeights parse_weight_string(std::string_view text);

/// Inverse of parse_weight_string: `A: w, B: w` with shortest round-trip reals.
std::string format_weight_map(const std::map<std::string, double>& weights);

// ---------------------------------------------------------------------------
// Transcripts

struct CassetteEntry {
  long long sequence_no = 0;
  PromptKind prompt_kind = PromptKind::SelectStocks;
  std::string rendered_prompt;
  std::string response_text;
  std::string provider_id;
  std::string model_name;
  std::string timestamp;
  std::string decoding;  // opaque JSON object text, may be empty
};

std::string to_json_line(const CassetteEntry& entry);
CassetteEntry parse_json_line(std::string_view line);

enum class TranscriptMode { Live, Record, Replay };

std::string_view to_string(TranscriptMode mode) noexcept;
std::optional<TranscriptMode> parse_transcript_mode(std::string_view text) noexcept;

/// Record/replay context over a JSON-lines cassette.
///
/// Replay serves the response of the N-th entry matching (kind, prompt) to the
/// N-th identical request, so repeated prompts replay in recorded order.
/// Record appends entries under a single-writer lock.
class Transcript {
 public:
  static std::shared_ptr<Transcript> live();
  static std::shared_ptr<Transcript> record(const std::filesystem::path& cassette);
  static std::shared_ptr<Transcript> replay(const std::filesystem::path& cassette);

  TranscriptMode mode() const noexcept { return mode_; }

  /// Replay only. ReplayMiss when no unused matching entry remains.
  std::string lookup(PromptKind kind, const std::string& prompt);

  /// Record mode appends and flushes; live mode is a no-op.
  void append(PromptKind kind, const std::string& prompt, const std::string& response,
              const std::string& provider_id, const std::string& model_name, const std::string& decoding);

  std::vector<CassetteEntry> entries() const;

 private:
  explicit Transcript(TranscriptMode mode) : mode_(mode) {}

  TranscriptMode mode_;
  std::filesystem::path path_;
  mutable std::mutex mutex_;
  std::vector<CassetteEntry> entries_;
  std::map<std::pair<PromptKind, std::string>, std::vector<std::size_t>> index_;
  std::map<std::pair<PromptKind, std::string>, std::size_t> served_;
};

/// Reads and validates a cassette. CassetteCorrupt on bad JSON, missing fields
/// or non-increasing sequence numbers.
std::vector<CassetteEntry> load_cassette(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Providers

struct ProviderConfig {
  std::string provider_id;
  std::string endpoint;
  std::string model_name;
  std::string auth_ref;  // environment variable holding the API key
  double request_timeout = 60.0;  // seconds
  int max_retries = 3;
  /// JSON request body; string values `{model}` and `{prompt}` are substituted.
  std::string payload_template =
      R"({"model":"{model}","messages":[{"role":"user","content":"{prompt}"}]})";
  /// JSON pointer to the reply text in the response body.
  std::string response_pointer = "/choices/0/message/content";
  std::string auth_header = "Authorization";
  std::string auth_prefix = "Bearer ";
  std::string decoding;  // opaque JSON object merged into the request body
  int max_in_flight = 4;
  double backoff_base = 1.0;  // seconds

  void validate() const;
};

struct HttpRequest {
  std::string url;
  std::map<std::string, std::string> headers;
  std::string body;
  double timeout = 60.0;
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse post(const HttpRequest& request) = 0;
};

/// HTTPS/HTTP transport.
std::shared_ptr<Transport> make_http_transport();

/// Counting semaphore shared by every client of one provider.
class InFlightLimiter {
 public:
  explicit InFlightLimiter(int limit) : available_(limit < 1 ? 1 : limit) {}
  void acquire();
  void release();

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  int available_;
};

using Sleeper = std::function<void(std::chrono::duration<double>)>;

/// One model behind one transcript. In replay mode the transport is never used.
class LlmClient {
 public:
  LlmClient(ProviderConfig config, std::shared_ptr<Transport> transport, std::shared_ptr<Transcript> transcript,
            std::shared_ptr<InFlightLimiter> limiter = nullptr, Sleeper sleeper = nullptr);

  const ProviderConfig& config() const noexcept { return config_; }

  std::string complete(PromptKind kind, const std::string& prompt);

 private:
  std::string call_provider(const std::string& prompt);

  ProviderConfig config_;
  std::shared_ptr<Transport> transport_;
  std::shared_ptr<Transcript> transcript_;
  std::shared_ptr<InFlightLimiter> limiter_;
  Sleeper sleeper_;
};

// ---------------------------------------------------------------------------
// Rounds

struct WeightingRun {
  std::string model_id;
  std::string sector_name;
  int run_index = 0;
  std::map<std::string, double> weights;  // raw, unnormalized
  std::string rationale_text;
  std::vector<std::string> warnings;
};

/// Prompt 1 then prompt 2, `repeats` times. Any failure aborts the round.
std::vector<SelectionRun> run_selection_round(LlmClient& client, const std::string& model_id,
                                              const SectorSpec& sector, int repeats);

/// Prompt 3 then prompt 4, `repeats` times. Symbols outside `tickers` are
/// dropped with a warning.
std::vector<WeightingRun> run_weighting_round(LlmClient& client, const std::string& model_id,
                                              const SectorSpec& sector, std::span<const std::string> tickers,
                                              int repeats);

}  // namespace sectorllm
