#pragma once

/// Deterministic mock model server for offline pipeline testing.
///
/// Serves the same chat-completions wire schema as a real endpoint, but the
/// response is a pure function of (ordered frame digests, prompt, rules), so
/// whole runs replay byte-identically. Rules are evaluated top to bottom and
/// the first match wins:
///
///   {"when": {"kind": "is_canonical_order"}, "respond": "..."}
///   {"when": {"kind": "is_reversed"}, "respond": "..."}
///   {"when": {"kind": "has_duplicate_digest"}, "respond": "..."}
///   {"when": {"kind": "order_hash_mod", "modulus": m, "threshold": t},
///    "respond": "..."}                       // fires when hash % m < t
///   {"when": {"kind": "default"}, "respond": "..."}
///
/// A rule may carry "finish_reason": "length" to simulate hitting the output
/// token limit. Canonical orders arrive through a side-channel call,
/// POST /register_canonical {"video_id", "digests": [...]}; order predicates
/// compare the request's digest order against every registered canonical.
///
/// The rule engine is exposed separately from the HTTP wrapper so tests can
/// predict responses offline from digests alone.

#include <atomic>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "videostf/base64.hpp"
#include "videostf/errors.hpp"
#include "videostf/rng.hpp"

namespace videostf::mock {

enum class PredicateKind {
  is_canonical_order,
  is_reversed,
  has_duplicate_digest,
  order_hash_mod,
  match_default
};

struct MockRule {
  PredicateKind kind = PredicateKind::match_default;
  uint64_t modulus = 0;    // order_hash_mod only
  uint64_t threshold = 0;  // order_hash_mod only
  std::string respond;
  std::string finish_reason = "stop";
};

inline PredicateKind predicate_from_name(std::string_view name) {
  if (name == "is_canonical_order") return PredicateKind::is_canonical_order;
  if (name == "is_reversed") return PredicateKind::is_reversed;
  if (name == "has_duplicate_digest") return PredicateKind::has_duplicate_digest;
  if (name == "order_hash_mod") return PredicateKind::order_hash_mod;
  if (name == "default") return PredicateKind::match_default;
  throw ConfigError("unknown mock predicate: " + std::string(name));
}

inline std::vector<MockRule> parse_rules(const nlohmann::json& doc) {
  if (!doc.is_array()) {
    throw ConfigError("mock rules file must be a JSON array");
  }
  std::vector<MockRule> rules;
  for (const auto& entry : doc) {
    MockRule rule;
    const auto& when = entry.at("when");
    rule.kind = predicate_from_name(when.at("kind").get<std::string>());
    if (rule.kind == PredicateKind::order_hash_mod) {
      rule.modulus = when.at("modulus").get<uint64_t>();
      rule.threshold = when.at("threshold").get<uint64_t>();
      if (rule.modulus == 0) {
        throw ConfigError("order_hash_mod modulus must be >= 1");
      }
    }
    rule.respond = entry.at("respond").get<std::string>();
    if (entry.contains("finish_reason")) {
      rule.finish_reason = entry["finish_reason"].get<std::string>();
    }
    rules.push_back(std::move(rule));
  }
  return rules;
}

inline std::vector<MockRule> load_rules(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open mock rules file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("malformed mock rules file " + path + ": " + e.what());
  }
  return parse_rules(doc);
}

inline std::string join_digests(const std::vector<std::string>& digests) {
  std::string joined;
  for (const std::string& d : digests) {
    joined += d;
    joined += ',';
  }
  return joined;
}

inline uint64_t order_hash(const std::vector<std::string>& digests) {
  return rng::fnv1a64(join_digests(digests));
}

// Pure rule evaluation against a digest order; shared by the HTTP server and
// by offline trace prediction in tests.
class RuleEngine {
 public:
  explicit RuleEngine(std::vector<MockRule> rules) : rules_(std::move(rules)) {}

  void register_canonical(const std::string& video_id,
                          const std::vector<std::string>& digests) {
    canonical_orders_.insert(join_digests(digests));
    canonical_by_video_[video_id] = digests;
  }

  bool is_canonical(const std::vector<std::string>& digests) const {
    return canonical_orders_.count(join_digests(digests)) > 0;
  }

  bool is_reversed(const std::vector<std::string>& digests) const {
    std::vector<std::string> reversed(digests.rbegin(), digests.rend());
    return canonical_orders_.count(join_digests(reversed)) > 0;
  }

  static bool has_duplicate(const std::vector<std::string>& digests) {
    std::set<std::string> seen;
    for (const std::string& d : digests) {
      if (!seen.insert(d).second) return true;
    }
    return false;
  }

  bool matches(const MockRule& rule,
               const std::vector<std::string>& digests) const {
    switch (rule.kind) {
      case PredicateKind::is_canonical_order: return is_canonical(digests);
      case PredicateKind::is_reversed: return is_reversed(digests);
      case PredicateKind::has_duplicate_digest: return has_duplicate(digests);
      case PredicateKind::order_hash_mod:
        return order_hash(digests) % rule.modulus < rule.threshold;
      case PredicateKind::match_default: return true;
    }
    return false;
  }

  // First matching rule, or nullptr when no rule fires.
  const MockRule* match(const std::vector<std::string>& digests) const {
    for (const MockRule& rule : rules_) {
      if (matches(rule, digests)) return &rule;
    }
    return nullptr;
  }

 private:
  std::vector<MockRule> rules_;
  std::set<std::string> canonical_orders_;
  std::map<std::string, std::vector<std::string>> canonical_by_video_;
};

// Pulls the prompt and the ordered frame digests out of a chat-completions
// body; digests are computed over the decoded image payload bytes, matching
// the digests recorded at frame load.
inline std::pair<std::string, std::vector<std::string>> parse_chat_request(
    const nlohmann::json& body) {
  std::string prompt;
  std::vector<std::string> digests;
  for (const auto& message : body.at("messages")) {
    if (!message.contains("content") || !message["content"].is_array()) {
      continue;
    }
    for (const auto& part : message["content"]) {
      const std::string type = part.at("type").get<std::string>();
      if (type == "text") {
        prompt = part.at("text").get<std::string>();
      } else if (type == "image_url") {
        const std::string url =
            part.at("image_url").at("url").get<std::string>();
        const size_t comma = url.find(',');
        if (url.rfind("data:", 0) != 0 || comma == std::string::npos) {
          throw ValidationError("image_url is not an inline data URL");
        }
        const std::string bytes = base64::decode(url.substr(comma + 1));
        digests.push_back(rng::to_hex(rng::fnv1a64(bytes)));
      }
    }
  }
  return {prompt, digests};
}

// HTTP wrapper around the rule engine. Stateless per request apart from the
// canonical registry; safe under the server's request thread pool.
class MockServer {
 public:
  explicit MockServer(std::vector<MockRule> rules)
      : engine_(std::move(rules)) {
    server_.Post("/register_canonical",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   handle_register(req, res);
                 });
    server_.Post("/v1/chat/completions",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   handle_completion(req, res);
                 });
    server_.Get("/healthz",
                [](const httplib::Request&, httplib::Response& res) {
                  res.set_content("ok", "text/plain");
                });
  }

  ~MockServer() { stop(); }

  // Binds and serves on a background thread; port 0 picks a free port.
  // Returns the bound port.
  int start(const std::string& host, int port) {
    if (port == 0) {
      port = server_.bind_to_any_port(host);
      if (port < 0) throw ConfigError("mock server: no port available");
    } else if (!server_.bind_to_port(host, port)) {
      throw ConfigError("mock server: cannot bind " + host + ":" +
                        std::to_string(port));
    }
    port_ = port;
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return port;
  }

  void stop() {
    if (thread_.joinable()) {
      server_.stop();
      thread_.join();
    }
  }

  int port() const { return port_; }
  std::string base_url() const {
    return "http://127.0.0.1:" + std::to_string(port_);
  }

 private:
  void handle_register(const httplib::Request& req, httplib::Response& res) {
    try {
      const nlohmann::json body = nlohmann::json::parse(req.body);
      const auto video_id = body.at("video_id").get<std::string>();
      const auto digests = body.at("digests").get<std::vector<std::string>>();
      {
        std::unique_lock lock(mutex_);
        engine_.register_canonical(video_id, digests);
      }
      res.set_content(R"({"status":"ok"})", "application/json");
    } catch (const std::exception& e) {
      res.status = 400;
      res.set_content(nlohmann::json{{"error", e.what()}}.dump(),
                      "application/json");
    }
  }

  void handle_completion(const httplib::Request& req, httplib::Response& res) {
    try {
      const nlohmann::json body = nlohmann::json::parse(req.body);
      const auto [prompt, digests] = parse_chat_request(body);
      const MockRule* rule = nullptr;
      {
        std::shared_lock lock(mutex_);
        rule = engine_.match(digests);
      }
      if (rule == nullptr) {
        res.status = 500;
        res.set_content(R"({"error":"no mock rule matched"})",
                        "application/json");
        return;
      }
      // Deterministic response id so identical requests yield identical bytes.
      const std::string id =
          "mock-" + rng::to_hex(rng::fnv1a64(join_digests(digests) + prompt));
      const nlohmann::json reply{
          {"id", id},
          {"object", "chat.completion"},
          {"model", body.value("model", "mock")},
          {"choices",
           nlohmann::json::array(
               {nlohmann::json{{"index", 0},
                               {"finish_reason", rule->finish_reason},
                               {"message",
                                {{"role", "assistant"},
                                 {"content", rule->respond}}}}})}};
      res.set_content(reply.dump(), "application/json");
    } catch (const std::exception& e) {
      res.status = 400;
      res.set_content(nlohmann::json{{"error", e.what()}}.dump(),
                      "application/json");
    }
  }

  RuleEngine engine_;
  mutable std::shared_mutex mutex_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace videostf::mock
