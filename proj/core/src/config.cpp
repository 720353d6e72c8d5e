#include "sectorllm/config.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

namespace sectorllm {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed, std::string_view where) {
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw Error(ErrorCode::ConfigError, fmt::format("{}: unknown key '{}'", where, key));
    }
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() || p.empty() ? path : base / path;
}

Date require_date(const json& j, const char* key) {
  auto d = parse_date(j.at(key).get<std::string>());
  if (!d) throw Error(ErrorCode::ConfigError, fmt::format("window {}: bad date", key));
  return *d;
}

ModelConfig parse_model(const json& j, const std::filesystem::path& base) {
  reject_unknown(j,
                 {"model_id", "provider_id", "endpoint", "model_name", "auth_ref", "request_timeout", "max_retries",
                  "payload_template", "response_pointer", "auth_header", "auth_prefix", "decoding", "max_in_flight",
                  "backoff_base", "cassette"},
                 "models[]");
  ModelConfig m;
  read(j, "model_id", m.model_id);
  auto& p = m.provider;
  read(j, "provider_id", p.provider_id);
  read(j, "endpoint", p.endpoint);
  read(j, "model_name", p.model_name);
  read(j, "auth_ref", p.auth_ref);
  read(j, "request_timeout", p.request_timeout);
  read(j, "max_retries", p.max_retries);
  if (j.contains("payload_template")) p.payload_template = j.at("payload_template").dump();
  read(j, "response_pointer", p.response_pointer);
  read(j, "auth_header", p.auth_header);
  read(j, "auth_prefix", p.auth_prefix);
  if (j.contains("decoding")) p.decoding = j.at("decoding").dump();
  read(j, "max_in_flight", p.max_in_flight);
  read(j, "backoff_base", p.backoff_base);
  if (j.contains("cassette")) m.cassette = resolve(base, j.at("cassette").get<std::string>());
  if (m.model_id.empty()) m.model_id = p.model_name;
  if (p.provider_id.empty()) p.provider_id = m.model_id;
  return m;
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  RunConfig c;
  try {
    const auto j = json::parse(json_text);
    reject_unknown(j,
                   {"models", "sectors", "portfolio_size", "selection_repeats", "weighting_repeats", "windows",
                    "rf_annual", "periods_per_year", "frontier_points", "mode", "data", "index_price_tickers",
                    "alignment", "coverage_loss_threshold", "cumulative_summary", "pca_threshold", "workers"},
                   "config");
    for (const auto& m : j.value("models", json::array())) c.models.push_back(parse_model(m, base_dir));
    read(j, "sectors", c.sectors);
    read(j, "portfolio_size", c.portfolio_size);
    read(j, "selection_repeats", c.selection_repeats);
    read(j, "weighting_repeats", c.weighting_repeats);
    read(j, "rf_annual", c.rf_annual);
    read(j, "periods_per_year", c.periods_per_year);
    read(j, "frontier_points", c.frontier_points);
    read(j, "coverage_loss_threshold", c.coverage_loss_threshold);
    read(j, "pca_threshold", c.pca_threshold);
    read(j, "workers", c.workers);
    read(j, "index_price_tickers", c.index_price_tickers);
    for (const auto& w : j.value("windows", json::array())) {
      reject_unknown(w, {"label", "start", "end"}, "windows[]");
      auto label = parse_window_label(w.at("label").get<std::string>());
      if (!label) throw Error(ErrorCode::ConfigError, "unknown window label " + w.at("label").dump());
      c.windows.push_back({*label, require_date(w, "start"), require_date(w, "end")});
    }
    if (j.contains("mode")) {
      auto mode = parse_transcript_mode(j.at("mode").get<std::string>());
      if (!mode) throw Error(ErrorCode::ConfigError, "mode must be live, record or replay");
      c.mode = *mode;
    }
    if (j.contains("alignment")) {
      const auto a = j.at("alignment").get<std::string>();
      if (a == "intersect") c.alignment = AlignmentPolicy::Intersect;
      else if (a == "strict") c.alignment = AlignmentPolicy::Strict;
      else throw Error(ErrorCode::ConfigError, "alignment must be intersect or strict");
    }
    if (j.contains("cumulative_summary")) {
      const auto s = j.at("cumulative_summary").get<std::string>();
      if (s == "window_average") c.cumulative_summary = CumulativeSummary::WindowAverage;
      else if (s == "terminal") c.cumulative_summary = CumulativeSummary::Terminal;
      else throw Error(ErrorCode::ConfigError, "cumulative_summary must be window_average or terminal");
    }
    if (j.contains("data")) {
      const auto& d = j.at("data");
      reject_unknown(d, {"prices", "registry", "cassette_dir"}, "data");
      c.prices = resolve(base_dir, d.value("prices", ""));
      c.registry = resolve(base_dir, d.value("registry", ""));
      c.cassette_dir = resolve(base_dir, d.value("cassette_dir", ""));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot read config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config(buffer.str(), path.parent_path());
}

void RunConfig::validate() const {
  if (models.empty()) throw Error(ErrorCode::ConfigError, "no models configured");
  if (sectors.empty()) throw Error(ErrorCode::ConfigError, "no sectors configured");
  std::set<std::string> ids;
  for (const auto& m : models) {
    if (m.model_id.empty()) throw Error(ErrorCode::ConfigError, "model without model_id");
    if (!ids.insert(m.model_id).second) throw Error(ErrorCode::ConfigError, "duplicate model_id " + m.model_id);
    m.provider.validate();
    if (mode != TranscriptMode::Replay && m.provider.endpoint.empty()) {
      throw Error(ErrorCode::ConfigError, m.model_id + ": endpoint required outside replay mode");
    }
  }
  if (std::set<std::string>(sectors.begin(), sectors.end()).size() != sectors.size()) {
    throw Error(ErrorCode::ConfigError, "duplicate sector");
  }
  if (portfolio_size < 2) throw Error(ErrorCode::ConfigError, "portfolio_size must be >= 2");
  if (selection_repeats < 1 || weighting_repeats < 1) throw Error(ErrorCode::ConfigError, "repeats must be >= 1");
  if (frontier_points < 2) throw Error(ErrorCode::ConfigError, "frontier_points must be >= 2");
  if (periods_per_year < 1) throw Error(ErrorCode::ConfigError, "periods_per_year must be >= 1");
  if (workers < 1) throw Error(ErrorCode::ConfigError, "workers must be >= 1");
  if (!(pca_threshold > 0.0 && pca_threshold <= 1.0)) throw Error(ErrorCode::ConfigError, "pca_threshold out of range");
  if (!(coverage_loss_threshold >= 0.0 && coverage_loss_threshold < 1.0)) {
    throw Error(ErrorCode::ConfigError, "coverage_loss_threshold out of range");
  }
  validate_windows(windows);
  (void)in_sample();
  if (out_of_sample().empty()) throw Error(ErrorCode::ConfigError, "no out-of-sample window");
  if (prices.empty() || registry.empty()) throw Error(ErrorCode::ConfigError, "data.prices and data.registry required");
  if (mode != TranscriptMode::Live) {
    for (const auto& m : models) {
      if (cassette_for(m).empty()) throw Error(ErrorCode::ConfigError, m.model_id + ": no cassette path");
    }
  }
}

const WindowSpec& RunConfig::in_sample() const {
  for (const auto& w : windows) {
    if (w.label == WindowLabel::InSample) return w;
  }
  throw Error(ErrorCode::ConfigError, "no in_sample window");
}

std::vector<WindowSpec> RunConfig::out_of_sample() const {
  std::vector<WindowSpec> out;
  for (const auto& w : windows) {
    if (w.label != WindowLabel::InSample) out.push_back(w);
  }
  std::sort(out.begin(), out.end(), [](const WindowSpec& a, const WindowSpec& b) { return a.start < b.start; });
  return out;
}

std::filesystem::path RunConfig::cassette_for(const ModelConfig& m) const {
  if (!m.cassette.empty()) return m.cassette;
  if (cassette_dir.empty()) return {};
  return cassette_dir / (m.model_id + ".jsonl");
}

std::string RunConfig::index_price_symbol(const std::string& index_ticker) const {
  auto it = index_price_tickers.find(index_ticker);
  return it == index_price_tickers.end() ? index_ticker : it->second;
}

std::string config_snapshot(const RunConfig& c) {
  json j;
  json models = json::array();
  for (const auto& m : c.models) {
    models.push_back({{"model_id", m.model_id},
                      {"provider_id", m.provider.provider_id},
                      {"model_name", m.provider.model_name},
                      {"endpoint", m.provider.endpoint},
                      {"auth_ref", m.provider.auth_ref},
                      {"max_retries", m.provider.max_retries},
                      {"request_timeout", m.provider.request_timeout},
                      {"decoding", m.provider.decoding.empty() ? json::object() : json::parse(m.provider.decoding)}});
  }
  j["models"] = models;
  j["sectors"] = c.sectors;
  j["portfolio_size"] = c.portfolio_size;
  j["selection_repeats"] = c.selection_repeats;
  j["weighting_repeats"] = c.weighting_repeats;
  json windows = json::array();
  for (const auto& w : c.windows) {
    windows.push_back({{"label", to_string(w.label)}, {"start", format_date(w.start)}, {"end", format_date(w.end)}});
  }
  j["windows"] = windows;
  j["rf_annual"] = c.rf_annual;
  j["periods_per_year"] = c.periods_per_year;
  j["frontier_points"] = c.frontier_points;
  j["mode"] = to_string(c.mode);
  j["index_price_tickers"] = c.index_price_tickers;
  j["alignment"] = c.alignment == AlignmentPolicy::Intersect ? "intersect" : "strict";
  j["coverage_loss_threshold"] = c.coverage_loss_threshold;
  j["cumulative_summary"] = c.cumulative_summary == CumulativeSummary::WindowAverage ? "window_average" : "terminal";
  j["pca_threshold"] = c.pca_threshold;
  // Paths are omitted so that relocating a fixture does not change digests.
  return j.dump(2);
}

}  // namespace sectorllm
