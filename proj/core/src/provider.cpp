#include <fmt/format.h>

#include <cstdlib>
#include <httplib.h>
#include <json.hpp>
#include <random>
#include <thread>

#include "sectorllm/llm_gateway.hpp"

namespace sectorllm {

using nlohmann::json;

namespace {

void substitute_strings(json& node, const std::string& model, const std::string& prompt) {
  if (node.is_string()) {
    auto s = node.get<std::string>();
    if (s == "{prompt}") {
      node = prompt;
    } else if (s == "{model}") {
      node = model;
    }
  } else if (node.is_array() || node.is_object()) {
    for (auto& child : node) substitute_strings(child, model, prompt);
  }
}

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorCode::ConfigError, "endpoint is not a URL: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

class HttpTransport final : public Transport {
 public:
  HttpResponse post(const HttpRequest& request) override {
    const auto [origin, path] = split_url(request.url);
    httplib::Client client(origin);
    const auto seconds = static_cast<time_t>(request.timeout);
    const auto micros = static_cast<time_t>((request.timeout - static_cast<double>(seconds)) * 1e6);
    client.set_connection_timeout(seconds, micros);
    client.set_read_timeout(seconds, micros);
    client.set_write_timeout(seconds, micros);
    httplib::Headers headers;
    for (const auto& [k, v] : request.headers) headers.emplace(k, v);
    auto result = client.Post(path, headers, request.body, "application/json");
    if (!result) {
      throw Error(ErrorCode::ProviderError,
                  fmt::format("{}: {}", request.url, httplib::to_string(result.error())));
    }
    return {result->status, result->body};
  }
};

}  // namespace

void ProviderConfig::validate() const {
  if (provider_id.empty()) throw Error(ErrorCode::ConfigError, "provider_id is empty");
  if (model_name.empty()) throw Error(ErrorCode::ConfigError, provider_id + ": model_name is empty");
  if (max_retries < 0) throw Error(ErrorCode::ConfigError, provider_id + ": max_retries must be >= 0");
  if (!(request_timeout > 0.0)) throw Error(ErrorCode::ConfigError, provider_id + ": request_timeout must be > 0");
  if (max_in_flight < 1) throw Error(ErrorCode::ConfigError, provider_id + ": max_in_flight must be >= 1");
  if (!json::accept(payload_template)) {
    throw Error(ErrorCode::ConfigError, provider_id + ": payload_template is not valid JSON");
  }
  try {
    json::json_pointer pointer(response_pointer);
  } catch (const json::exception&) {
    throw Error(ErrorCode::ConfigError, provider_id + ": response_pointer is not a JSON pointer");
  }
  if (!decoding.empty() && !json::parse(decoding, nullptr, false).is_object()) {
    throw Error(ErrorCode::ConfigError, provider_id + ": decoding must be a JSON object");
  }
}

std::shared_ptr<Transport> make_http_transport() { return std::make_shared<HttpTransport>(); }

void InFlightLimiter::acquire() {
  std::unique_lock lock(mutex_);
  cv_.wait(lock, [this] { return available_ > 0; });
  --available_;
}

void InFlightLimiter::release() {
  {
    std::lock_guard lock(mutex_);
    ++available_;
  }
  cv_.notify_one();
}

LlmClient::LlmClient(ProviderConfig config, std::shared_ptr<Transport> transport,
                     std::shared_ptr<Transcript> transcript, std::shared_ptr<InFlightLimiter> limiter,
                     Sleeper sleeper)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      transcript_(std::move(transcript)),
      limiter_(limiter ? std::move(limiter) : std::make_shared<InFlightLimiter>(config_.max_in_flight)),
      sleeper_(sleeper ? std::move(sleeper) : Sleeper([](std::chrono::duration<double> d) {
        std::this_thread::sleep_for(d);
      })) {
  if (!transcript_) throw std::invalid_argument("LlmClient needs a transcript");
  if (transcript_->mode() != TranscriptMode::Replay && !transport_) {
    throw std::invalid_argument("LlmClient needs a transport outside replay mode");
  }
}

std::string LlmClient::complete(PromptKind kind, const std::string& prompt) {
  if (transcript_->mode() == TranscriptMode::Replay) return transcript_->lookup(kind, prompt);
  auto reply = call_provider(prompt);
  transcript_->append(kind, prompt, reply, config_.provider_id, config_.model_name, config_.decoding);
  return reply;
}

std::string LlmClient::call_provider(const std::string& prompt) {
  HttpRequest request;
  request.url = config_.endpoint;
  request.timeout = config_.request_timeout;
  if (!config_.auth_ref.empty()) {
    const char* secret = std::getenv(config_.auth_ref.c_str());
    if (secret == nullptr || *secret == '\0') {
      throw Error(ErrorCode::ProviderError,
                  fmt::format("{}: environment variable {} is not set", config_.provider_id, config_.auth_ref));
    }
    request.headers[config_.auth_header] = config_.auth_prefix + secret;
  }
  auto body = json::parse(config_.payload_template);
  substitute_strings(body, config_.model_name, prompt);
  if (!config_.decoding.empty() && body.is_object()) body.update(json::parse(config_.decoding));
  request.body = body.dump();

  std::mt19937_64 jitter_rng{std::random_device{}()};
  std::uniform_real_distribution<double> jitter(0.5, 1.5);
  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      sleeper_(std::chrono::duration<double>(config_.backoff_base * std::ldexp(1.0, attempt - 1) *
                                             jitter(jitter_rng)));
    }
    try {
      limiter_->acquire();
      HttpResponse response;
      try {
        response = transport_->post(request);
      } catch (...) {
        limiter_->release();
        throw;
      }
      limiter_->release();
      if (response.status < 200 || response.status >= 300) {
        last_error = fmt::format("HTTP {}: {:.200}", response.status, response.body);
        continue;
      }
      const auto parsed = json::parse(response.body, nullptr, false);
      const json::json_pointer pointer(config_.response_pointer);
      if (parsed.is_discarded() || !parsed.contains(pointer) || !parsed.at(pointer).is_string()) {
        last_error = "response has no text at " + config_.response_pointer;
        continue;
      }
      return parsed.at(pointer).get<std::string>();
    } catch (const std::exception& e) {
      last_error = e.what();
    }
  }
  throw Error(ErrorCode::ProviderError, fmt::format("{} ({}): giving up after {} attempt(s): {}", config_.provider_id,
                                                    config_.model_name, config_.max_retries + 1, last_error));
}

}  // namespace sectorllm
