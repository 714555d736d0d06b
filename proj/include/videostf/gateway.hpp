#pragma once

/// Black-box query interface to video-language model endpoints.
///
/// One wire contract: POST {base_url}/v1/chat/completions with a chat-style
/// JSON body carrying the prompt and the frames as inline base64 data URLs,
/// in sequence order. The reply's choices[0].message.content is the output
/// text; finish_reason "length" marks truncation at the output token limit.
///
/// Decoding defaults to the deterministic profile (temperature 0, sampling
/// off) and query() refuses a non-deterministic profile unless the caller
/// explicitly opts out, so measurements stay free of decoding randomness.
///
/// Transport failures are retried with exponential backoff and, once retries
/// are exhausted, recorded as a transport_error flag on the QueryRecord --
/// never thrown, so one dead query cannot abort a batch. Authentication
/// failures are configuration errors and do abort.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "videostf/errors.hpp"
#include "videostf/frames.hpp"
#include "videostf/metrics.hpp"
#include "videostf/rng.hpp"

namespace videostf::gateway {

struct ModelEndpoint {
  std::string base_url;    // e.g. http://127.0.0.1:8080
  std::string model_name;
  std::string auth_env;    // env var holding a bearer token; empty = none
  double timeout_s = 30.0;
  size_t max_retries = 2;
};

struct DecodingParams {
  double temperature = 0.0;
  bool sampling_enabled = false;
  size_t max_new_tokens = 1024;
  std::optional<uint64_t> request_seed;

  bool deterministic() const {
    return temperature == 0.0 && !sampling_enabled;
  }

  nlohmann::json to_json() const {
    nlohmann::json j{{"temperature", temperature},
                     {"sampling_enabled", sampling_enabled},
                     {"max_new_tokens", max_new_tokens}};
    if (request_seed) j["request_seed"] = *request_seed;
    return j;
  }
};

struct QueryRecord {
  std::string query_id;
  std::string video_id;
  std::vector<std::string> frame_digests;
  std::string prompt;
  DecodingParams decoding;
  std::string output_text;
  double latency_ms = 0.0;
  bool empty_output = false;
  bool truncated_at_limit = false;
  bool transport_error = false;
  std::string error_detail;

  nlohmann::json to_json() const {
    nlohmann::json flags = nlohmann::json::array();
    if (empty_output) flags.push_back("empty_output");
    if (truncated_at_limit) flags.push_back("truncated_at_limit");
    if (transport_error) flags.push_back("transport_error");
    nlohmann::json j{{"query_id", query_id},
                     {"video_id", video_id},
                     {"frame_digests", frame_digests},
                     {"prompt", prompt},
                     {"decoding", decoding.to_json()},
                     {"output_text", output_text},
                     {"latency_ms", latency_ms},
                     {"flags", flags}};
    if (!error_detail.empty()) j["error_detail"] = error_detail;
    return j;
  }
};

struct QueryOptions {
  std::string query_id;  // deterministic content hash when empty
  frames::FrameEncoding encoding = frames::FrameEncoding::jpeg_base64;
  bool require_deterministic = true;
  double backoff_initial_ms = 100.0;
  metrics::TokenizerSpec tokenizer;  // for the empty_output flag
};

// Identical (frames, prompt, decoding) always produce byte-identical bodies.
inline nlohmann::json build_request_body(
    const ModelEndpoint& endpoint,
    const std::vector<frames::EncodedFrame>& payloads,
    const std::string& prompt, const DecodingParams& decoding) {
  nlohmann::json content = nlohmann::json::array();
  content.push_back({{"type", "text"}, {"text", prompt}});
  for (const frames::EncodedFrame& frame : payloads) {
    content.push_back(
        {{"type", "image_url"},
         {"image_url",
          {{"url", "data:" + frame.media_type + ";base64," +
                       frame.payload_base64}}}});
  }
  nlohmann::json body{
      {"model", endpoint.model_name},
      {"temperature", decoding.temperature},
      {"max_tokens", decoding.max_new_tokens},
      {"messages", nlohmann::json::array({nlohmann::json{
                       {"role", "user"}, {"content", std::move(content)}}})}};
  if (decoding.request_seed) body["seed"] = *decoding.request_seed;
  return body;
}

namespace detail {

inline httplib::Headers auth_headers(const ModelEndpoint& endpoint) {
  httplib::Headers headers;
  if (!endpoint.auth_env.empty()) {
    const char* token = std::getenv(endpoint.auth_env.c_str());
    if (token == nullptr || *token == '\0') {
      throw ConfigError("auth env var '" + endpoint.auth_env +
                        "' is not set for endpoint " + endpoint.base_url);
    }
    headers.emplace("Authorization", std::string("Bearer ") + token);
  }
  return headers;
}

inline void configure_client(httplib::Client& cli, const ModelEndpoint& ep) {
  const auto secs = std::chrono::milliseconds(
      static_cast<long>(ep.timeout_s * 1000.0));
  cli.set_connection_timeout(secs);
  cli.set_read_timeout(secs);
  cli.set_write_timeout(secs);
}

}  // namespace detail

inline QueryRecord query(const ModelEndpoint& endpoint,
                         const frames::FrameSequence& seq,
                         const std::string& prompt,
                         const DecodingParams& decoding,
                         const QueryOptions& opts = {}) {
  if (opts.require_deterministic && !decoding.deterministic()) {
    throw ConfigError("non-deterministic decoding profile (temperature=" +
                      std::to_string(decoding.temperature) +
                      ", sampling on) without explicit override");
  }
  const auto payloads = frames::materialize(seq, opts.encoding);
  const nlohmann::json body =
      build_request_body(endpoint, payloads, prompt, decoding);
  const std::string body_text = body.dump();

  QueryRecord rec;
  rec.video_id = seq.video_id;
  rec.frame_digests = seq.digest_list();
  rec.prompt = prompt;
  rec.decoding = decoding;
  rec.query_id = opts.query_id.empty()
                     ? "q-" + rng::to_hex(rng::fnv1a64(endpoint.model_name +
                                                       "|" + body_text))
                     : opts.query_id;

  const httplib::Headers headers = detail::auth_headers(endpoint);
  const auto started = std::chrono::steady_clock::now();
  const auto finish = [&](QueryRecord& r) -> QueryRecord& {
    r.latency_ms = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - started)
                       .count();
    return r;
  };

  std::string last_error;
  for (size_t attempt = 0; attempt <= endpoint.max_retries; ++attempt) {
    if (attempt > 0) {
      const double backoff =
          opts.backoff_initial_ms * static_cast<double>(1ull << (attempt - 1));
      std::this_thread::sleep_for(
          std::chrono::duration<double, std::milli>(backoff));
    }
    httplib::Client cli(endpoint.base_url);
    detail::configure_client(cli, endpoint);
    httplib::Result res =
        cli.Post("/v1/chat/completions", headers, body_text, "application/json");
    if (!res) {
      last_error = "transport: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 401 || res->status == 403) {
      throw ConfigError("authentication rejected (HTTP " +
                        std::to_string(res->status) + ") by " +
                        endpoint.base_url);
    }
    if (res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      rec.transport_error = true;
      rec.error_detail = "HTTP " + std::to_string(res->status);
      return finish(rec);
    }
    try {
      const nlohmann::json reply = nlohmann::json::parse(res->body);
      const auto& choice = reply.at("choices").at(0);
      rec.output_text = choice.at("message").at("content").get<std::string>();
      if (choice.contains("finish_reason") &&
          choice["finish_reason"].is_string()) {
        rec.truncated_at_limit = choice["finish_reason"] == "length";
      }
    } catch (const nlohmann::json::exception& e) {
      last_error = std::string("malformed response: ") + e.what();
      continue;
    }
    rec.empty_output =
        metrics::tokenize(rec.output_text, opts.tokenizer).empty();
    return finish(rec);
  }
  rec.transport_error = true;
  rec.error_detail = last_error;
  return finish(rec);
}

// Side-channel registration of a canonical (untransformed) frame order with
// the mock server. A no-op contract for real endpoints; the mock uses it for
// its order-based predicates.
inline bool register_canonical(const ModelEndpoint& endpoint,
                               const std::string& video_id,
                               const std::vector<std::string>& digests) {
  httplib::Client cli(endpoint.base_url);
  detail::configure_client(cli, endpoint);
  const nlohmann::json body{{"video_id", video_id}, {"digests", digests}};
  httplib::Result res =
      cli.Post("/register_canonical", body.dump(), "application/json");
  return res && res->status == 200;
}

}  // namespace videostf::gateway
