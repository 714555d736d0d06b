#pragma once

/// Orchestration of the three evaluation protocols over a manifest and a set
/// of model endpoints, with resumable result logging.
///
///   - Pervasive: every video is sampled at each configured frame count and
///     queried once, untransformed; outputs are scored and aggregated per
///     (model, frame count).
///   - Stress: each video is additionally queried under every transform
///     variant. Delete-1 exhausts all frame positions (T plans); Reverse is
///     a single deterministic plan; every other variant draws the configured
///     number of seeded trials (default 30).
///   - Attack: videos whose pervasive output was normal (non-repetitive,
///     non-empty) form the attack set; each is re-queried under freshly
///     seeded transforms until the output turns repetitive or the query
///     budget (default 30) is spent.
///
/// Determinism: every record id is a pure function of its coordinates
/// (protocol, model, frame count, transform, video, trial), and every seed
/// derives from the master seed, so re-running a config reproduces the log
/// byte-for-byte modulo timestamps and latencies. Resuming skips record ids
/// already present; attack traces replay logged attempts instead of
/// re-querying.
///
/// Queries may run concurrently up to `parallelism`; records are always
/// flushed in submission order, so concurrency never changes log content.
/// Within one attack trace, attempts are strictly sequential.

#include <atomic>
#include <cstdint>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "videostf/errors.hpp"
#include "videostf/frames.hpp"
#include "videostf/gateway.hpp"
#include "videostf/metrics.hpp"
#include "videostf/report.hpp"
#include "videostf/rng.hpp"
#include "videostf/stressors.hpp"

namespace videostf::runner {

struct RunConfig {
  std::string run_id = "run";
  std::string manifest_path;
  std::vector<gateway::ModelEndpoint> endpoints;
  std::vector<size_t> frame_counts = {8, 16, 24, 32};
  std::string prompt = "Describe this video in detail.";
  gateway::DecodingParams decoding;
  metrics::MetricConfig metric_config;
  metrics::EmptyPolicy empty_policy = metrics::EmptyPolicy::exclude_empty;
  uint64_t master_seed = 0;
  frames::SamplingMode sampling_mode = frames::SamplingMode::force;
  frames::FrameEncoding encoding = frames::FrameEncoding::jpeg_base64;
  bool register_canonical_with_mock = false;
  size_t parallelism = 4;
  double retry_backoff_ms = 100.0;
};

struct StressVariant {
  stress::TransformKind kind = stress::TransformKind::Add;
  size_t k = 1;

  // Table labels: add1 .. replace2, reverse, shuffle.
  std::string label() const {
    const std::string name = stress::kind_name(kind);
    if (kind == stress::TransformKind::Reverse ||
        kind == stress::TransformKind::Shuffle) {
      return name;
    }
    return name + std::to_string(k);
  }
};

inline std::vector<StressVariant> default_stress_variants() {
  using stress::TransformKind;
  return {{TransformKind::Add, 1},     {TransformKind::Add, 2},
          {TransformKind::Delete, 1},  {TransformKind::Delete, 2},
          {TransformKind::Replace, 1}, {TransformKind::Replace, 2},
          {TransformKind::Reverse, 0}, {TransformKind::Shuffle, 0}};
}

struct StressConfig {
  std::vector<StressVariant> transforms = default_stress_variants();
  size_t trials_stochastic = 30;
  bool delete1_exhaustive = true;
};

struct AttackConfig {
  StressVariant transform;
  size_t max_queries = 30;
  size_t success_n = 5;  // repetition indicator window for success
};

struct AttackAttempt {
  size_t attempt_index = 0;  // 0-based
  uint64_t seed = 0;
  std::string query_id;
  bool is_repetitive = false;
  bool transport_error = false;
};

struct AttackTrace {
  std::string video_id;
  StressVariant transform;
  std::vector<AttackAttempt> attempts;
  bool success = false;
  size_t queries_used = 0;

  nlohmann::json to_json() const {
    nlohmann::json attempts_json = nlohmann::json::array();
    for (const AttackAttempt& a : attempts) {
      attempts_json.push_back({{"attempt_index", a.attempt_index},
                               {"seed", a.seed},
                               {"query_id", a.query_id},
                               {"is_repetitive", a.is_repetitive},
                               {"transport_error", a.transport_error}});
    }
    return nlohmann::json{
        {"video_id", video_id},
        {"transform", {{"kind", stress::kind_name(transform.kind)},
                       {"k", transform.k}}},
        {"attempts", attempts_json},
        {"success", success},
        {"queries_used", queries_used}};
  }
};

struct AsrAq {
  double asr = 0.0;
  std::optional<double> aq;  // absent when no attack succeeded
};

inline AsrAq compute_asr_aq(const std::vector<AttackTrace>& traces) {
  if (traces.empty()) {
    throw EmptyReportError("no attack traces to aggregate");
  }
  size_t successes = 0;
  double queries = 0.0;
  for (const AttackTrace& t : traces) {
    if (t.success) {
      ++successes;
      queries += static_cast<double>(t.queries_used);
    }
  }
  AsrAq out;
  out.asr = static_cast<double>(successes) / static_cast<double>(traces.size());
  if (successes > 0) out.aq = queries / static_cast<double>(successes);
  return out;
}

// Plans for one stress cell under the trial policy: Delete-1 exhaustive
// (T plans), Reverse single, everything else trials_stochastic seeded draws.
inline std::vector<stress::TransformPlan> stress_plans(
    const frames::FrameSequence& seq, const StressVariant& variant,
    const StressConfig& cfg, uint64_t batch_seed) {
  using stress::TransformKind;
  if (variant.kind == TransformKind::Reverse) {
    return {stress::plan_reverse(seq)};
  }
  if (variant.kind == TransformKind::Delete && variant.k == 1 &&
      cfg.delete1_exhaustive) {
    return stress::plan_delete_exhaustive(seq);
  }
  return stress::trial_batch(seq, variant.kind, variant.k,
                             cfg.trials_stochastic, batch_seed);
}

namespace detail {

// Runs tasks with bounded concurrency; results land at their task's index,
// so downstream persistence order is independent of completion order.
template <typename Result>
std::vector<Result> run_parallel(
    const std::vector<std::function<Result()>>& tasks, size_t parallelism) {
  std::vector<Result> results(tasks.size());
  if (tasks.empty()) return results;
  std::vector<std::exception_ptr> errors(tasks.size());
  std::atomic<size_t> next{0};
  const size_t workers = std::max<size_t>(1, std::min(parallelism, tasks.size()));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const size_t i = next.fetch_add(1);
        if (i >= tasks.size()) return;
        try {
          results[i] = tasks[i]();
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

inline nlohmann::json make_context(const std::string& protocol,
                                   const std::string& model, size_t frames,
                                   const std::string& transform, size_t trial) {
  return nlohmann::json{{"protocol", protocol},
                        {"model", model},
                        {"frame_count", frames},
                        {"transform", transform},
                        {"trial", trial}};
}

inline nlohmann::json sample_payload(const metrics::SampleMetrics& m,
                                     const metrics::TokenizerSpec& tokenizer,
                                     const std::string& query_id,
                                     const std::string& video_id,
                                     const nlohmann::json& context) {
  nlohmann::json flags = nlohmann::json::array();
  if (m.empty_output) flags.push_back("empty_output");
  if (m.too_short) flags.push_back("too_short");
  return nlohmann::json{{"query_id", query_id},
                        {"video_id", video_id},
                        {"context", context},
                        {"r_max", m.r_max},
                        {"rep_n", m.rep_n},
                        {"h_norm", m.h_norm},
                        {"is_repetitive", m.is_repetitive},
                        {"n_indicator", m.n_indicator},
                        {"n_intensity", m.n_intensity},
                        {"tokenizer", metrics::tokenizer_kind_name(tokenizer.kind)},
                        {"flags", flags}};
}

}  // namespace detail

// Videos whose pervasive output in the (model, frame_count) cell was normal:
// non-repetitive and non-empty.
inline std::vector<std::string> select_attack_set(
    const std::vector<report::RunRecord>& records, const std::string& model,
    size_t frame_count) {
  bool cell_seen = false;
  std::vector<std::string> out;
  for (const report::RunRecord& rec : records) {
    if (rec.kind != report::RecordKind::sample_metrics) continue;
    const auto& ctx = rec.payload.at("context");
    if (ctx.at("protocol") != "pervasive") continue;
    if (ctx.at("model") != model ||
        ctx.at("frame_count").get<size_t>() != frame_count) {
      continue;
    }
    cell_seen = true;
    const bool repetitive = rec.payload.at("is_repetitive").get<bool>();
    const bool empty = report::detail::has_flag(rec.payload, "empty_output");
    if (!repetitive && !empty) {
      out.push_back(rec.payload.at("video_id").get<std::string>());
    }
  }
  if (!cell_seen) {
    throw ValidationError(
        "attack requires pervasive results for model '" + model + "' at " +
        std::to_string(frame_count) + " frames; run the pervasive protocol "
        "into this log first");
  }
  return out;
}

class ProtocolRunner {
 public:
  ProtocolRunner(RunConfig config, report::ResultLog& log)
      : config_(std::move(config)), log_(log) {
    if (config_.frame_counts.empty()) {
      throw ConfigError("frame_counts must be nonempty");
    }
    if (config_.endpoints.empty()) {
      throw ConfigError("at least one endpoint is required");
    }
    videos_ = frames::load_manifest(config_.manifest_path);
    if (videos_.empty()) {
      throw ValidationError("manifest is empty: " + config_.manifest_path);
    }
  }

  const std::vector<frames::VideoRecord>& videos() const { return videos_; }

  report::ReportTable run_pervasive() {
    for (const auto& endpoint : config_.endpoints) {
      for (size_t frame_count : config_.frame_counts) {
        run_cell_pervasive(endpoint, frame_count);
      }
    }
    return finish_aggregate(report::ReportKind::pervasive);
  }

  report::ReportTable run_stress(const StressConfig& stress_cfg) {
    if (stress_cfg.trials_stochastic < 1) {
      throw ConfigError("trials_stochastic must be >= 1");
    }
    for (const auto& endpoint : config_.endpoints) {
      for (size_t frame_count : config_.frame_counts) {
        run_cell_stress(endpoint, frame_count, stress_cfg);
      }
    }
    return finish_aggregate(report::ReportKind::stress);
  }

  report::ReportTable run_attack(const AttackConfig& attack) {
    if (attack.max_queries < 1) {
      throw ConfigError("max_queries must be >= 1");
    }
    for (const auto& endpoint : config_.endpoints) {
      for (size_t frame_count : config_.frame_counts) {
        run_cell_attack(endpoint, frame_count, attack);
      }
    }
    return finish_aggregate(report::ReportKind::attack);
  }

  // One attack loop against one video; attempts are sequential and each
  // draws a fresh plan from seed split(master_seed, video_id, attempt).
  AttackTrace attack_single(const frames::VideoRecord& video,
                            const gateway::ModelEndpoint& endpoint,
                            size_t frame_count, const AttackConfig& attack) {
    const auto seq = sample(video, frame_count);
    const auto logged = snapshot_query_outputs();
    return attack_single_impl(seq, endpoint, frame_count, attack, logged)
        .first;
  }

 private:
  struct LoggedQuery {
    std::string output_text;
    bool transport_error = false;
  };
  using LoggedQueries = std::map<std::string, LoggedQuery>;

  frames::FrameSequence sample(const frames::VideoRecord& video,
                               size_t frame_count) const {
    return frames::sample_frames(
        video, frames::SamplingSpec{frame_count, config_.sampling_mode});
  }

  gateway::QueryOptions query_options(const std::string& query_id) const {
    gateway::QueryOptions opts;
    opts.query_id = query_id;
    opts.encoding = config_.encoding;
    opts.backoff_initial_ms = config_.retry_backoff_ms;
    opts.tokenizer = config_.metric_config.tokenizer;
    return opts;
  }

  LoggedQueries snapshot_query_outputs() const {
    LoggedQueries out;
    for (const report::RunRecord& rec : log_.records()) {
      if (rec.kind != report::RecordKind::query) continue;
      out.emplace(rec.record_id,
                  LoggedQuery{rec.payload.at("output_text").get<std::string>(),
                              report::detail::has_flag(rec.payload,
                                                       "transport_error")});
    }
    return out;
  }

  void maybe_register_canonical(const gateway::ModelEndpoint& endpoint,
                                const frames::FrameSequence& seq) {
    if (!config_.register_canonical_with_mock) return;
    const std::string key = endpoint.base_url + "|" + seq.sequence_digest();
    if (!registered_.insert(key).second) return;
    if (!gateway::register_canonical(endpoint, seq.video_id,
                                     seq.digest_list())) {
      std::cerr << "[videostf] warning: canonical registration failed for "
                << seq.video_id << " at " << endpoint.base_url << "\n";
    }
  }

  // One query work item; flushed to the log in submission order.
  struct WorkItem {
    std::string query_id;
    std::string video_id;
    nlohmann::json context;
    frames::FrameSequence transformed;
    std::optional<stress::TransformPlan> plan;
    bool need_query = false;   // not yet in the log
    std::optional<gateway::QueryRecord> fresh;  // live result
  };

  void execute_and_flush(std::vector<WorkItem>& items,
                         const gateway::ModelEndpoint& endpoint,
                         const LoggedQueries& logged) {
    std::vector<size_t> pending;
    for (size_t i = 0; i < items.size(); ++i) {
      if (items[i].need_query) pending.push_back(i);
    }
    std::vector<std::function<gateway::QueryRecord()>> tasks;
    tasks.reserve(pending.size());
    for (size_t idx : pending) {
      const WorkItem& item = items[idx];
      tasks.push_back([this, &endpoint, &item] {
        return gateway::query(endpoint, item.transformed, config_.prompt,
                              config_.decoding, query_options(item.query_id));
      });
    }
    auto results = detail::run_parallel(tasks, config_.parallelism);
    for (size_t j = 0; j < pending.size(); ++j) {
      items[pending[j]].fresh = std::move(results[j]);
    }

    for (WorkItem& item : items) {
      if (item.plan &&
          !log_.contains(report::RecordKind::plan, item.query_id)) {
        nlohmann::json payload{{"query_id", item.query_id},
                               {"video_id", item.video_id},
                               {"context", item.context},
                               {"plan", item.plan->to_json()}};
        log_.append(report::make_record(report::RecordKind::plan,
                                        config_.run_id, item.query_id,
                                        std::move(payload)));
      }
      std::string output_text;
      bool transport_error = false;
      if (item.fresh) {
        nlohmann::json payload = item.fresh->to_json();
        payload["context"] = item.context;
        log_.append(report::make_record(report::RecordKind::query,
                                        config_.run_id, item.query_id,
                                        std::move(payload)));
        output_text = item.fresh->output_text;
        transport_error = item.fresh->transport_error;
      } else {
        const auto it = logged.find(item.query_id);
        if (it == logged.end()) continue;  // unreachable for flushed items
        output_text = it->second.output_text;
        transport_error = it->second.transport_error;
      }
      if (!transport_error &&
          !log_.contains(report::RecordKind::sample_metrics, item.query_id)) {
        const auto m =
            metrics::sample_metrics(output_text, config_.metric_config);
        log_.append(report::make_record(
            report::RecordKind::sample_metrics, config_.run_id, item.query_id,
            detail::sample_payload(m, config_.metric_config.tokenizer,
                                   item.query_id, item.video_id,
                                   item.context)));
      }
    }
  }

  void run_cell_pervasive(const gateway::ModelEndpoint& endpoint,
                          size_t frame_count) {
    const LoggedQueries logged = snapshot_query_outputs();
    std::vector<WorkItem> items;
    for (const frames::VideoRecord& video : videos_) {
      WorkItem item;
      item.query_id = "pervasive|" + endpoint.model_name + "|f" +
                      std::to_string(frame_count) + "|" + video.video_id;
      item.video_id = video.video_id;
      item.context = detail::make_context("pervasive", endpoint.model_name,
                                          frame_count, "original", 0);
      const bool have_query =
          log_.contains(report::RecordKind::query, item.query_id);
      const bool have_sample =
          log_.contains(report::RecordKind::sample_metrics, item.query_id);
      if (have_query && have_sample) continue;
      item.transformed = sample(video, frame_count);
      maybe_register_canonical(endpoint, item.transformed);
      item.need_query = !have_query;
      items.push_back(std::move(item));
    }
    execute_and_flush(items, endpoint, logged);
  }

  void run_cell_stress(const gateway::ModelEndpoint& endpoint,
                       size_t frame_count, const StressConfig& stress_cfg) {
    const LoggedQueries logged = snapshot_query_outputs();
    std::vector<WorkItem> items;
    for (const frames::VideoRecord& video : videos_) {
      const auto seq = sample(video, frame_count);
      maybe_register_canonical(endpoint, seq);
      for (const StressVariant& variant : stress_cfg.transforms) {
        if (variant.kind == stress::TransformKind::Reverse && seq.size() < 2) {
          std::cerr << "[videostf] skip: reverse on " << video.video_id
                    << " (T=" << seq.size() << " is degenerate)\n";
          continue;
        }
        std::vector<stress::TransformPlan> plans;
        try {
          const uint64_t batch_seed =
              rng::split(config_.master_seed, "stress", variant.label(),
                         video.video_id, static_cast<uint64_t>(frame_count));
          plans = stress_plans(seq, variant, stress_cfg, batch_seed);
        } catch (const ValidationError& e) {
          std::cerr << "[videostf] skip: " << variant.label() << " on "
                    << video.video_id << ": " << e.what() << "\n";
          continue;
        }
        for (size_t trial = 0; trial < plans.size(); ++trial) {
          WorkItem item;
          item.query_id = "stress|" + endpoint.model_name + "|f" +
                          std::to_string(frame_count) + "|" + variant.label() +
                          "|" + video.video_id + "|t" + std::to_string(trial);
          item.video_id = video.video_id;
          item.context =
              detail::make_context("stress", endpoint.model_name, frame_count,
                                   variant.label(), trial);
          const bool have_query =
              log_.contains(report::RecordKind::query, item.query_id);
          const bool have_sample =
              log_.contains(report::RecordKind::sample_metrics, item.query_id);
          const bool have_plan =
              log_.contains(report::RecordKind::plan, item.query_id);
          if (have_query && have_sample && have_plan) continue;
          item.transformed = stress::apply(plans[trial], seq);
          item.plan = std::move(plans[trial]);
          item.need_query = !have_query;
          items.push_back(std::move(item));
        }
      }
    }
    execute_and_flush(items, endpoint, logged);
  }

  std::pair<AttackTrace, std::vector<report::RunRecord>> attack_single_impl(
      const frames::FrameSequence& seq,
      const gateway::ModelEndpoint& endpoint, size_t frame_count,
      const AttackConfig& attack, const LoggedQueries& logged) {
    AttackTrace trace;
    trace.video_id = seq.video_id;
    trace.transform = attack.transform;
    std::vector<report::RunRecord> new_records;

    const bool deterministic =
        attack.transform.kind == stress::TransformKind::Reverse;
    const size_t budget = deterministic ? 1 : attack.max_queries;
    const nlohmann::json base_context =
        detail::make_context("attack", endpoint.model_name, frame_count,
                             attack.transform.label(), 0);

    for (size_t i = 0; i < budget; ++i) {
      const uint64_t seed =
          deterministic ? 0
                        : rng::split(config_.master_seed, seq.video_id,
                                     static_cast<uint64_t>(i));
      stress::TransformPlan plan;
      switch (attack.transform.kind) {
        case stress::TransformKind::Add:
          plan = stress::plan_add(seq, attack.transform.k, seed);
          break;
        case stress::TransformKind::Delete:
          plan = stress::plan_delete(seq, attack.transform.k, seed);
          break;
        case stress::TransformKind::Replace:
          plan = stress::plan_replace(seq, attack.transform.k, seed);
          break;
        case stress::TransformKind::Reverse:
          plan = stress::plan_reverse(seq);
          break;
        case stress::TransformKind::Shuffle:
          plan = stress::plan_shuffle(seq, seed);
          break;
      }
      const std::string query_id =
          "attack|" + endpoint.model_name + "|f" + std::to_string(frame_count) +
          "|" + attack.transform.label() + "|" + seq.video_id + "|a" +
          std::to_string(i);
      nlohmann::json context = base_context;
      context["trial"] = i;

      std::string output_text;
      bool transport_error = false;
      const auto it = logged.find(query_id);
      if (it != logged.end()) {
        output_text = it->second.output_text;          // resume: replay
        transport_error = it->second.transport_error;  // without re-querying
      } else {
        const auto transformed = stress::apply(plan, seq);
        auto rec = gateway::query(endpoint, transformed, config_.prompt,
                                  config_.decoding, query_options(query_id));
        output_text = rec.output_text;
        transport_error = rec.transport_error;
        nlohmann::json plan_payload{{"query_id", query_id},
                                    {"video_id", seq.video_id},
                                    {"context", context},
                                    {"plan", plan.to_json()}};
        new_records.push_back(report::make_record(report::RecordKind::plan,
                                                  config_.run_id, query_id,
                                                  std::move(plan_payload)));
        nlohmann::json query_payload = rec.to_json();
        query_payload["context"] = context;
        new_records.push_back(report::make_record(report::RecordKind::query,
                                                  config_.run_id, query_id,
                                                  std::move(query_payload)));
      }

      AttackAttempt attempt;
      attempt.attempt_index = i;
      attempt.seed = seed;
      attempt.query_id = query_id;
      attempt.transport_error = transport_error;
      if (!transport_error) {
        const auto tokens =
            metrics::tokenize(output_text, config_.metric_config.tokenizer);
        attempt.is_repetitive =
            metrics::max_repeat(
                metrics::ngram_profile(tokens, attack.success_n)) > 1;
      }
      trace.attempts.push_back(attempt);
      if (attempt.is_repetitive) {
        trace.success = true;
        break;
      }
    }
    trace.queries_used = trace.attempts.size();
    return {std::move(trace), std::move(new_records)};
  }

  void run_cell_attack(const gateway::ModelEndpoint& endpoint,
                       size_t frame_count, const AttackConfig& attack) {
    const auto attack_set =
        select_attack_set(log_.records(), endpoint.model_name, frame_count);
    if (attack_set.empty()) {
      std::cerr << "[videostf] warning: empty attack set for "
                << endpoint.model_name << " at " << frame_count
                << " frames (every pervasive output was repetitive or empty)\n";
      return;
    }
    std::map<std::string, const frames::VideoRecord*> by_id;
    for (const frames::VideoRecord& video : videos_) {
      by_id[video.video_id] = &video;
    }
    const LoggedQueries logged = snapshot_query_outputs();

    struct VideoResult {
      AttackTrace trace;
      std::vector<report::RunRecord> records;
      bool executed = false;
    };
    std::vector<frames::FrameSequence> todo;
    for (const std::string& video_id : attack_set) {
      const std::string trace_id =
          "trace|" + endpoint.model_name + "|f" + std::to_string(frame_count) +
          "|" + attack.transform.label() + "|" + video_id;
      if (log_.contains(report::RecordKind::trace, trace_id)) continue;
      auto seq = sample(*by_id.at(video_id), frame_count);
      maybe_register_canonical(endpoint, seq);
      todo.push_back(std::move(seq));
    }
    std::vector<std::function<VideoResult()>> tasks;
    tasks.reserve(todo.size());
    for (const frames::FrameSequence& seq : todo) {
      tasks.push_back([this, &seq, &endpoint, frame_count, &attack, &logged] {
        VideoResult result;
        auto [trace, records] =
            attack_single_impl(seq, endpoint, frame_count, attack, logged);
        result.trace = std::move(trace);
        result.records = std::move(records);
        result.executed = true;
        return result;
      });
    }
    auto results = detail::run_parallel(tasks, config_.parallelism);
    for (size_t i = 0; i < results.size(); ++i) {
      VideoResult& result = results[i];
      if (!result.executed) continue;
      for (report::RunRecord& rec : result.records) {
        log_.append(rec);
      }
      const std::string trace_id =
          "trace|" + endpoint.model_name + "|f" + std::to_string(frame_count) +
          "|" + attack.transform.label() + "|" + result.trace.video_id;
      nlohmann::json payload = result.trace.to_json();
      payload["context"] =
          detail::make_context("attack", endpoint.model_name, frame_count,
                               attack.transform.label(), 0);
      log_.append(report::make_record(report::RecordKind::trace,
                                      config_.run_id, trace_id,
                                      std::move(payload)));
    }
  }

  report::ReportTable finish_aggregate(report::ReportKind kind) {
    report::AggregateOptions opts;
    opts.policy = config_.empty_policy;
    opts.tokenizer = config_.metric_config.tokenizer;
    const auto table = report::aggregate(log_.records(), kind, opts);
    for (const report::ReportRow& row : table.rows) {
      std::string cell_id = "agg|" + report::report_kind_name(kind);
      for (const std::string& axis : row.axes) cell_id += "|" + axis;
      if (log_.contains(report::RecordKind::aggregate, cell_id)) continue;
      nlohmann::json values;
      for (const auto& [name, value] : row.values) values[name] = value;
      nlohmann::json axes;
      for (size_t i = 0; i < table.axis_names.size(); ++i) {
        axes[table.axis_names[i]] = row.axes[i];
      }
      log_.append(report::make_record(
          report::RecordKind::aggregate, config_.run_id, cell_id,
          nlohmann::json{{"report_kind", report::report_kind_name(kind)},
                         {"axes", axes},
                         {"values", values}}));
    }
    return table;
  }

  RunConfig config_;
  report::ResultLog& log_;
  std::vector<frames::VideoRecord> videos_;
  std::set<std::string> registered_;
};

}  // namespace videostf::runner
