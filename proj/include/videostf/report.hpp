#pragma once

/// Append-only run persistence and report aggregation.
///
/// Every run event is one self-describing JSON object per line in the run's
/// log file: queries, per-sample metrics, transform plans, attack traces, and
/// cell aggregates. Appends are atomic at line granularity and re-appending
/// an existing record id is rejected, which is what makes interrupted runs
/// resumable: on restart the runner skips every record id already present.
/// A torn trailing line (crash mid-write) is detected on open and truncated
/// with a warning.
///
/// Aggregation is a pure fold over the records; record order never matters
/// beyond the sequencing recorded inside each attack trace. Rendering mirrors
/// the display conventions of the report tables this harness regenerates:
/// rates as whole percents, intensity/entropy with two decimals, average
/// queries with one.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "videostf/errors.hpp"
#include "videostf/metrics.hpp"

namespace videostf::report {

namespace fs = std::filesystem;

inline constexpr int kSchemaVersion = 1;

enum class RecordKind { query, sample_metrics, plan, trace, aggregate };

inline std::string record_kind_name(RecordKind k) {
  switch (k) {
    case RecordKind::query: return "query";
    case RecordKind::sample_metrics: return "sample_metrics";
    case RecordKind::plan: return "plan";
    case RecordKind::trace: return "trace";
    case RecordKind::aggregate: return "aggregate";
  }
  return "query";
}

inline RecordKind record_kind_from_name(std::string_view name) {
  if (name == "query") return RecordKind::query;
  if (name == "sample_metrics") return RecordKind::sample_metrics;
  if (name == "plan") return RecordKind::plan;
  if (name == "trace") return RecordKind::trace;
  if (name == "aggregate") return RecordKind::aggregate;
  throw ValidationError("unknown record kind: " + std::string(name));
}

inline std::string now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct RunRecord {
  RecordKind kind = RecordKind::query;
  std::string run_id;
  std::string record_id;
  int schema_version = kSchemaVersion;
  std::string created_at;
  nlohmann::json payload;

  nlohmann::json to_json() const {
    return nlohmann::json{{"record_kind", record_kind_name(kind)},
                          {"run_id", run_id},
                          {"record_id", record_id},
                          {"schema_version", schema_version},
                          {"created_at", created_at},
                          {"payload", payload}};
  }

  static RunRecord from_json(const nlohmann::json& j) {
    RunRecord rec;
    rec.kind = record_kind_from_name(j.at("record_kind").get<std::string>());
    rec.run_id = j.at("run_id").get<std::string>();
    rec.record_id = j.at("record_id").get<std::string>();
    rec.schema_version = j.at("schema_version").get<int>();
    rec.created_at = j.at("created_at").get<std::string>();
    rec.payload = j.at("payload");
    return rec;
  }
};

inline RunRecord make_record(RecordKind kind, std::string run_id,
                             std::string record_id, nlohmann::json payload) {
  RunRecord rec;
  rec.kind = kind;
  rec.run_id = std::move(run_id);
  rec.record_id = std::move(record_id);
  rec.created_at = now_iso8601();
  rec.payload = std::move(payload);
  return rec;
}

// Append-only JSONL log with duplicate-id rejection. Single writer;
// any number of read-only loads.
class ResultLog {
 public:
  explicit ResultLog(fs::path path) : path_(std::move(path)) { open(); }

  const fs::path& path() const { return path_; }
  const std::vector<RunRecord>& records() const { return records_; }

  bool contains(RecordKind kind, const std::string& record_id) const {
    return ids_.count(key(kind, record_id)) > 0;
  }

  // Appends one record as a single line and returns its line position.
  size_t append(const RunRecord& rec) {
    const std::string k = key(rec.kind, rec.record_id);
    if (ids_.count(k)) {
      throw ValidationError("duplicate record id '" + rec.record_id +
                            "' (kind " + record_kind_name(rec.kind) +
                            ") already at line " +
                            std::to_string(ids_.at(k) + 1));
    }
    const std::string line = rec.to_json().dump();
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    if (!out) {
      throw ValidationError("cannot append to log: " + path_.string());
    }
    out << line << '\n';
    out.flush();
    const size_t pos = records_.size();
    ids_.emplace(k, pos);
    records_.push_back(rec);
    return pos;
  }

  // Read-only load; tolerates (skips) a torn trailing line.
  static std::vector<RunRecord> load(const fs::path& path) {
    return parse_lines(read_lines(path).first);
  }

 private:
  static std::string key(RecordKind kind, const std::string& id) {
    return record_kind_name(kind) + "|" + id;
  }

  // Returns (complete lines, had_torn_tail).
  static std::pair<std::vector<std::string>, bool> read_lines(
      const fs::path& path) {
    std::vector<std::string> lines;
    bool torn = false;
    std::ifstream in(path, std::ios::binary);
    if (!in) return {lines, torn};
    std::string content((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
    size_t start = 0;
    while (start < content.size()) {
      const size_t nl = content.find('\n', start);
      if (nl == std::string::npos) {
        torn = true;  // no trailing newline: interrupted write
        break;
      }
      lines.push_back(content.substr(start, nl - start));
      start = nl + 1;
    }
    // A complete last line that fails to parse is treated as torn too.
    if (!lines.empty()) {
      try {
        [[maybe_unused]] auto probe = nlohmann::json::parse(lines.back());
      } catch (const nlohmann::json::parse_error&) {
        lines.pop_back();
        torn = true;
      }
    }
    return {lines, torn};
  }

  static std::vector<RunRecord> parse_lines(
      const std::vector<std::string>& lines) {
    std::vector<RunRecord> out;
    out.reserve(lines.size());
    for (size_t i = 0; i < lines.size(); ++i) {
      try {
        out.push_back(RunRecord::from_json(nlohmann::json::parse(lines[i])));
      } catch (const nlohmann::json::exception& e) {
        throw ValidationError("corrupt log line " + std::to_string(i + 1) +
                              " in " + "result log: " + e.what());
      }
    }
    return out;
  }

  void open() {
    if (path_.has_parent_path()) fs::create_directories(path_.parent_path());
    auto [lines, torn] = read_lines(path_);
    if (torn) {
      std::cerr << "[videostf] warning: truncating torn trailing line in "
                << path_ << "\n";
      std::ofstream out(path_, std::ios::trunc | std::ios::binary);
      for (const std::string& line : lines) out << line << '\n';
    }
    records_ = parse_lines(lines);
    for (size_t i = 0; i < records_.size(); ++i) {
      const std::string k = key(records_[i].kind, records_[i].record_id);
      if (!ids_.emplace(k, i).second) {
        throw ValidationError("log already contains duplicate record id: " +
                              records_[i].record_id);
      }
    }
  }

  fs::path path_;
  std::vector<RunRecord> records_;
  std::map<std::string, size_t> ids_;
};

// ---------------------------------------------------------------------------
// Report tables
// ---------------------------------------------------------------------------

enum class ReportKind { pervasive, stress, attack, sweep, distributions };

inline std::string report_kind_name(ReportKind k) {
  switch (k) {
    case ReportKind::pervasive: return "pervasive";
    case ReportKind::stress: return "stress";
    case ReportKind::attack: return "attack";
    case ReportKind::sweep: return "sweep";
    case ReportKind::distributions: return "distributions";
  }
  return "pervasive";
}

inline ReportKind report_kind_from_name(std::string_view name) {
  if (name == "pervasive") return ReportKind::pervasive;
  if (name == "stress") return ReportKind::stress;
  if (name == "attack") return ReportKind::attack;
  if (name == "sweep") return ReportKind::sweep;
  if (name == "distributions") return ReportKind::distributions;
  throw ConfigError("unknown report kind: " + std::string(name));
}

// Display format per column; percentages are stored as fractions and
// rounded only at render time.
enum class ColumnFormat { percent0, fixed2, fixed1, count };

struct ColumnSpec {
  std::string name;
  ColumnFormat format;
};

struct ReportRow {
  std::vector<std::string> axes;    // parallel to ReportTable::axis_names
  std::map<std::string, double> values;
  std::set<std::string> absent;     // e.g. AQ with zero successes
  std::vector<std::string> provenance;  // contributing record ids
};

struct ReportTable {
  ReportKind kind = ReportKind::pervasive;
  std::vector<std::string> axis_names;
  std::vector<ColumnSpec> columns;
  std::vector<ReportRow> rows;
  std::set<std::string> run_ids;
};

struct AggregateOptions {
  metrics::EmptyPolicy policy = metrics::EmptyPolicy::exclude_empty;
  size_t sweep_n_from = 1;
  size_t sweep_n_to = 10;
  metrics::TokenizerSpec tokenizer;  // sweep re-tokenizes logged outputs
};

namespace detail {

// Canonical ordering for the transform axis, matching the table layout:
// original first, then the stressor variants, then anything else.
inline int transform_rank(const std::string& label) {
  static const std::vector<std::string> order = {
      "original", "add1",     "add2",    "delete1", "delete2",
      "replace1", "replace2", "reverse", "shuffle"};
  for (size_t i = 0; i < order.size(); ++i) {
    if (order[i] == label) return static_cast<int>(i);
  }
  return static_cast<int>(order.size());
}

struct AxisKey {
  std::string model;
  long frames = 0;
  std::string transform;
  long n = 0;
  std::string metric;

  bool operator<(const AxisKey& o) const {
    if (model != o.model) return model < o.model;
    if (frames != o.frames) return frames < o.frames;
    const int tr = transform_rank(transform), otr = transform_rank(o.transform);
    if (tr != otr) return tr < otr;
    if (transform != o.transform) return transform < o.transform;
    if (n != o.n) return n < o.n;
    return metric < o.metric;
  }
};

inline bool has_flag(const nlohmann::json& payload, const char* flag) {
  if (!payload.contains("flags")) return false;
  for (const auto& f : payload["flags"]) {
    if (f.get<std::string>() == flag) return true;
  }
  return false;
}

// Linear-interpolation quantile over a sorted vector.
inline double quantile(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) return 0.0;
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const size_t lo = static_cast<size_t>(pos);
  const size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

inline metrics::SampleMetrics sample_from_payload(const nlohmann::json& p) {
  metrics::SampleMetrics m;
  m.r_max = p.at("r_max").get<size_t>();
  m.rep_n = p.at("rep_n").get<double>();
  m.h_norm = p.at("h_norm").get<double>();
  m.is_repetitive = p.at("is_repetitive").get<bool>();
  m.n_indicator = p.at("n_indicator").get<size_t>();
  m.n_intensity = p.at("n_intensity").get<size_t>();
  m.empty_output = has_flag(p, "empty_output");
  m.too_short = has_flag(p, "too_short");
  return m;
}

}  // namespace detail

inline ReportTable aggregate(const std::vector<RunRecord>& records,
                             ReportKind kind,
                             const AggregateOptions& opts = {}) {
  ReportTable table;
  table.kind = kind;
  using detail::AxisKey;

  const auto context_of = [](const nlohmann::json& payload) {
    return payload.at("context");
  };

  switch (kind) {
    case ReportKind::pervasive: {
      table.axis_names = {"model", "frames"};
      table.columns = {{"k", ColumnFormat::count},
                       {"rr", ColumnFormat::percent0},
                       {"ri", ColumnFormat::fixed2},
                       {"ie", ColumnFormat::fixed2},
                       {"excluded", ColumnFormat::count}};
      struct Cell {
        std::vector<metrics::SampleMetrics> samples;
        std::vector<std::string> ids;
      };
      std::map<AxisKey, Cell> cells;
      for (const RunRecord& rec : records) {
        if (rec.kind != RecordKind::sample_metrics) continue;
        const auto& ctx = context_of(rec.payload);
        if (ctx.at("protocol").get<std::string>() != "pervasive") continue;
        AxisKey key;
        key.model = ctx.at("model").get<std::string>();
        key.frames = ctx.at("frame_count").get<long>();
        auto& cell = cells[key];
        cell.samples.push_back(detail::sample_from_payload(rec.payload));
        cell.ids.push_back(rec.record_id);
        table.run_ids.insert(rec.run_id);
      }
      for (auto& [key, cell] : cells) {
        const auto d = metrics::dataset_metrics(cell.samples, opts.policy);
        ReportRow row;
        row.axes = {key.model, std::to_string(key.frames)};
        row.values = {{"k", static_cast<double>(d.k_outputs)},
                      {"rr", d.rr},
                      {"ri", d.ri},
                      {"ie", d.ie},
                      {"excluded", static_cast<double>(d.excluded)}};
        row.provenance = cell.ids;
        table.rows.push_back(std::move(row));
      }
      break;
    }

    case ReportKind::stress: {
      table.axis_names = {"model", "frames", "transform"};
      table.columns = {{"k", ColumnFormat::count},
                       {"rr", ColumnFormat::percent0},
                       {"ri", ColumnFormat::fixed2},
                       {"ie", ColumnFormat::fixed2},
                       {"rr_any_trial", ColumnFormat::percent0},
                       {"videos", ColumnFormat::count}};
      struct Cell {
        std::vector<metrics::SampleMetrics> samples;
        std::map<std::string, std::pair<bool, bool>> per_video;  // id -> (any included, any repetitive)
        std::vector<std::string> ids;
      };
      std::map<AxisKey, Cell> cells;
      for (const RunRecord& rec : records) {
        if (rec.kind != RecordKind::sample_metrics) continue;
        const auto& ctx = context_of(rec.payload);
        if (ctx.at("protocol").get<std::string>() != "stress") continue;
        AxisKey key;
        key.model = ctx.at("model").get<std::string>();
        key.frames = ctx.at("frame_count").get<long>();
        key.transform = ctx.at("transform").get<std::string>();
        auto& cell = cells[key];
        const auto sample = detail::sample_from_payload(rec.payload);
        cell.samples.push_back(sample);
        cell.ids.push_back(rec.record_id);
        const std::string video = rec.payload.at("video_id").get<std::string>();
        const bool included =
            !(opts.policy == metrics::EmptyPolicy::exclude_empty &&
              sample.empty_output);
        auto& pv = cell.per_video[video];
        pv.first = pv.first || included;
        pv.second = pv.second || (included && sample.is_repetitive);
        table.run_ids.insert(rec.run_id);
      }
      for (auto& [key, cell] : cells) {
        const auto d = metrics::dataset_metrics(cell.samples, opts.policy);
        size_t videos = 0, videos_hit = 0;
        for (const auto& [video, pv] : cell.per_video) {
          if (pv.first) {
            ++videos;
            if (pv.second) ++videos_hit;
          }
        }
        ReportRow row;
        row.axes = {key.model, std::to_string(key.frames), key.transform};
        row.values = {{"k", static_cast<double>(d.k_outputs)},
                      {"rr", d.rr},
                      {"ri", d.ri},
                      {"ie", d.ie},
                      {"rr_any_trial",
                       videos ? static_cast<double>(videos_hit) /
                                    static_cast<double>(videos)
                              : 0.0},
                      {"videos", static_cast<double>(videos)}};
        row.provenance = cell.ids;
        table.rows.push_back(std::move(row));
      }
      break;
    }

    case ReportKind::attack: {
      table.axis_names = {"model", "frames", "transform"};
      table.columns = {{"videos", ColumnFormat::count},
                       {"asr", ColumnFormat::percent0},
                       {"aq", ColumnFormat::fixed1}};
      struct Cell {
        size_t traces = 0;
        size_t successes = 0;
        double queries_sum = 0;
        std::vector<std::string> ids;
      };
      std::map<AxisKey, Cell> cells;
      for (const RunRecord& rec : records) {
        if (rec.kind != RecordKind::trace) continue;
        const auto& ctx = context_of(rec.payload);
        AxisKey key;
        key.model = ctx.at("model").get<std::string>();
        key.frames = ctx.at("frame_count").get<long>();
        key.transform = ctx.at("transform").get<std::string>();
        auto& cell = cells[key];
        ++cell.traces;
        if (rec.payload.at("success").get<bool>()) {
          ++cell.successes;
          cell.queries_sum += rec.payload.at("queries_used").get<double>();
        }
        cell.ids.push_back(rec.record_id);
        table.run_ids.insert(rec.run_id);
      }
      for (auto& [key, cell] : cells) {
        ReportRow row;
        row.axes = {key.model, std::to_string(key.frames), key.transform};
        row.values = {{"videos", static_cast<double>(cell.traces)},
                      {"asr", static_cast<double>(cell.successes) /
                                  static_cast<double>(cell.traces)}};
        if (cell.successes > 0) {
          row.values["aq"] =
              cell.queries_sum / static_cast<double>(cell.successes);
        } else {
          row.absent.insert("aq");
        }
        row.provenance = cell.ids;
        table.rows.push_back(std::move(row));
      }
      break;
    }

    case ReportKind::sweep: {
      table.axis_names = {"model", "frames", "n"};
      table.columns = {{"rr", ColumnFormat::percent0},
                       {"ri", ColumnFormat::fixed2},
                       {"ie", ColumnFormat::fixed2}};
      struct Cell {
        std::vector<std::string> texts;
        std::vector<std::string> ids;
      };
      std::map<AxisKey, Cell> cells;
      for (const RunRecord& rec : records) {
        if (rec.kind != RecordKind::query) continue;
        const auto& ctx = context_of(rec.payload);
        if (ctx.at("protocol").get<std::string>() != "pervasive") continue;
        if (detail::has_flag(rec.payload, "transport_error")) continue;
        AxisKey key;
        key.model = ctx.at("model").get<std::string>();
        key.frames = ctx.at("frame_count").get<long>();
        auto& cell = cells[key];
        cell.texts.push_back(rec.payload.at("output_text").get<std::string>());
        cell.ids.push_back(rec.record_id);
        table.run_ids.insert(rec.run_id);
      }
      for (auto& [key, cell] : cells) {
        metrics::MetricConfig cfg;
        cfg.tokenizer = opts.tokenizer;
        const auto sweep = metrics::metric_sweep(
            cell.texts, opts.sweep_n_from, opts.sweep_n_to, cfg, opts.policy);
        for (const auto& swrow : sweep) {
          ReportRow row;
          row.axes = {key.model, std::to_string(key.frames),
                      std::to_string(swrow.n)};
          row.values = {{"rr", swrow.metrics.rr},
                        {"ri", swrow.metrics.ri},
                        {"ie", swrow.metrics.ie}};
          row.provenance = cell.ids;
          table.rows.push_back(std::move(row));
        }
      }
      break;
    }

    case ReportKind::distributions: {
      table.axis_names = {"model", "frames", "transform", "metric"};
      table.columns = {{"min", ColumnFormat::fixed2},
                       {"p25", ColumnFormat::fixed2},
                       {"median", ColumnFormat::fixed2},
                       {"p75", ColumnFormat::fixed2},
                       {"max", ColumnFormat::fixed2}};
      struct Cell {
        std::vector<double> rep_n, h_norm;
        std::vector<std::string> ids;
      };
      std::map<AxisKey, Cell> cells;
      for (const RunRecord& rec : records) {
        if (rec.kind != RecordKind::sample_metrics) continue;
        const auto& ctx = context_of(rec.payload);
        const std::string protocol = ctx.at("protocol").get<std::string>();
        if (protocol != "pervasive" && protocol != "stress") continue;
        const auto sample = detail::sample_from_payload(rec.payload);
        if (sample.empty_output &&
            opts.policy == metrics::EmptyPolicy::exclude_empty) {
          continue;
        }
        AxisKey key;
        key.model = ctx.at("model").get<std::string>();
        key.frames = ctx.at("frame_count").get<long>();
        key.transform = protocol == "pervasive"
                            ? "original"
                            : ctx.at("transform").get<std::string>();
        auto& cell = cells[key];
        cell.rep_n.push_back(sample.rep_n);
        cell.h_norm.push_back(sample.h_norm);
        cell.ids.push_back(rec.record_id);
        table.run_ids.insert(rec.run_id);
      }
      for (auto& [key, cell] : cells) {
        std::sort(cell.rep_n.begin(), cell.rep_n.end());
        std::sort(cell.h_norm.begin(), cell.h_norm.end());
        for (const auto& [metric, data] :
             {std::pair<std::string, const std::vector<double>*>{"h_norm",
                                                                 &cell.h_norm},
              {"rep_n", &cell.rep_n}}) {
          ReportRow row;
          row.axes = {key.model, std::to_string(key.frames), key.transform,
                      metric};
          row.values = {{"min", data->front()},
                        {"p25", detail::quantile(*data, 0.25)},
                        {"median", detail::quantile(*data, 0.5)},
                        {"p75", detail::quantile(*data, 0.75)},
                        {"max", data->back()}};
          row.provenance = cell.ids;
          table.rows.push_back(std::move(row));
        }
      }
      break;
    }
  }

  if (table.rows.empty()) {
    throw EmptyReportError("no records matched report kind '" +
                           report_kind_name(kind) + "'");
  }
  return table;
}

inline ReportTable aggregate(const fs::path& log_path, ReportKind kind,
                             const AggregateOptions& opts = {}) {
  return aggregate(ResultLog::load(log_path), kind, opts);
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

enum class RenderFormat { csv, markdown, plotdata_json };

inline RenderFormat render_format_from_name(std::string_view name) {
  if (name == "csv") return RenderFormat::csv;
  if (name == "markdown") return RenderFormat::markdown;
  if (name == "plotdata_json") return RenderFormat::plotdata_json;
  throw ConfigError("unknown render format: " + std::string(name));
}

namespace detail {

inline std::string format_value(double value, ColumnFormat fmt) {
  char buf[64];
  switch (fmt) {
    case ColumnFormat::percent0:
      std::snprintf(buf, sizeof(buf), "%.0f", value * 100.0);
      break;
    case ColumnFormat::fixed2:
      std::snprintf(buf, sizeof(buf), "%.2f", value);
      break;
    case ColumnFormat::fixed1:
      std::snprintf(buf, sizeof(buf), "%.1f", value);
      break;
    case ColumnFormat::count:
      std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(value));
      break;
  }
  return buf;
}

}  // namespace detail

inline std::string render(const ReportTable& table, RenderFormat format) {
  std::string out;
  const auto cell_text = [&](const ReportRow& row, const ColumnSpec& col,
                             const char* absent_marker) -> std::string {
    if (row.absent.count(col.name)) return absent_marker;
    return detail::format_value(row.values.at(col.name), col.format);
  };

  switch (format) {
    case RenderFormat::csv: {
      for (size_t i = 0; i < table.axis_names.size(); ++i) {
        if (i) out += ',';
        out += table.axis_names[i];
      }
      for (const ColumnSpec& col : table.columns) {
        out += ',';
        out += col.name;
      }
      out += '\n';
      for (const ReportRow& row : table.rows) {
        for (size_t i = 0; i < row.axes.size(); ++i) {
          if (i) out += ',';
          out += row.axes[i];
        }
        for (const ColumnSpec& col : table.columns) {
          out += ',';
          out += cell_text(row, col, "");
        }
        out += '\n';
      }
      break;
    }
    case RenderFormat::markdown: {
      out += '|';
      for (const std::string& axis : table.axis_names) {
        out += ' ' + axis + " |";
      }
      for (const ColumnSpec& col : table.columns) {
        out += ' ' + col.name + " |";
      }
      out += "\n|";
      for (size_t i = 0;
           i < table.axis_names.size() + table.columns.size(); ++i) {
        out += "---|";
      }
      out += '\n';
      for (const ReportRow& row : table.rows) {
        out += '|';
        for (const std::string& axis : row.axes) {
          out += ' ' + axis + " |";
        }
        for (const ColumnSpec& col : table.columns) {
          out += ' ' + cell_text(row, col, "-") + " |";
        }
        out += '\n';
      }
      break;
    }
    case RenderFormat::plotdata_json: {
      nlohmann::json doc;
      doc["kind"] = report_kind_name(table.kind);
      if (table.kind == ReportKind::sweep) {
        // x = n, one series per (model, frames, metric).
        std::set<long> ns;
        for (const ReportRow& row : table.rows) ns.insert(std::stol(row.axes[2]));
        doc["x"] = std::vector<long>(ns.begin(), ns.end());
        std::map<std::string, std::map<long, double>> series;
        for (const ReportRow& row : table.rows) {
          const long n = std::stol(row.axes[2]);
          for (const ColumnSpec& col : table.columns) {
            const std::string label =
                row.axes[0] + "/f" + row.axes[1] + "/" + col.name;
            series[label][n] = row.values.at(col.name);
          }
        }
        doc["series"] = nlohmann::json::array();
        for (const auto& [label, points] : series) {
          nlohmann::json s{{"label", label}};
          std::vector<double> values;
          for (long n : ns) values.push_back(points.at(n));
          s["values"] = values;
          doc["series"].push_back(std::move(s));
        }
      } else {
        doc["rows"] = nlohmann::json::array();
        for (const ReportRow& row : table.rows) {
          nlohmann::json r;
          for (size_t i = 0; i < table.axis_names.size(); ++i) {
            r[table.axis_names[i]] = row.axes[i];
          }
          for (const ColumnSpec& col : table.columns) {
            if (row.absent.count(col.name)) {
              r[col.name] = nullptr;
            } else {
              r[col.name] = row.values.at(col.name);
            }
          }
          doc["rows"].push_back(std::move(r));
        }
      }
      out = doc.dump(2);
      out += '\n';
      break;
    }
  }
  return out;
}

}  // namespace videostf::report
