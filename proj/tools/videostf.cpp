// videostf: measure and stress-test output repetition in video-language
// models. Subcommands cover the metric calculators, the temporal transform
// planner, the three evaluation protocols, report rendering, and the
// deterministic mock server used for offline runs.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "videostf/frames.hpp"
#include "videostf/gateway.hpp"
#include "videostf/metrics.hpp"
#include "videostf/mock_server.hpp"
#include "videostf/report.hpp"
#include "videostf/runner.hpp"
#include "videostf/stressors.hpp"

namespace fs = std::filesystem;
using namespace videostf;

namespace {

std::string slurp_stream(std::istream& in) {
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::vector<std::string> read_lines(std::istream& in) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

metrics::TokenizerSpec tokenizer_spec(const std::string& name,
                                      const std::string& pattern) {
  metrics::TokenizerSpec spec;
  spec.kind = metrics::tokenizer_kind_from_name(name);
  spec.pattern = pattern;
  if (spec.kind == metrics::TokenizerKind::custom_regex && pattern.empty()) {
    throw ConfigError("custom_regex tokenizer requires --tokenizer-pattern");
  }
  return spec;
}

nlohmann::json metrics_to_json(const metrics::SampleMetrics& m) {
  nlohmann::json flags = nlohmann::json::array();
  if (m.empty_output) flags.push_back("empty_output");
  if (m.too_short) flags.push_back("too_short");
  return nlohmann::json{{"r_max", m.r_max},
                        {"rep_n", m.rep_n},
                        {"h_norm", m.h_norm},
                        {"is_repetitive", m.is_repetitive},
                        {"n_indicator", m.n_indicator},
                        {"n_intensity", m.n_intensity},
                        {"flags", flags}};
}

// Builds a FrameSequence from every frame in a directory, in index order.
frames::FrameSequence sequence_from_dir(const std::string& dir_path) {
  const fs::path dir(dir_path);
  if (!fs::is_directory(dir)) {
    throw ValidationError("not a directory: " + dir_path);
  }
  std::string ext;
  for (const char* cand : {".jpg", ".png"}) {
    if (fs::exists(dir / ("frame_000000" + std::string(cand)))) {
      ext = cand;
      break;
    }
  }
  if (ext.empty()) {
    throw ValidationError("no frame_000000.jpg/.png in " + dir_path);
  }
  size_t count = 0;
  for (;; ++count) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%06zu", count);
    if (!fs::exists(dir / (name + ext))) break;
  }
  frames::VideoRecord rec;
  rec.video_id = dir.filename().string();
  rec.frames_dir = dir.string();
  rec.frame_count = count;
  return frames::sample_frames(
      rec, frames::SamplingSpec{count, frames::SamplingMode::strict});
}

fs::path default_log_path(const std::string& results_dir,
                          const std::string& run_id) {
  fs::path base;
  if (!results_dir.empty()) {
    base = results_dir;
  } else if (const char* env = std::getenv("VIDEOSTF_RESULTS_DIR");
             env != nullptr && *env != '\0') {
    base = env;
  } else {
    base = "results";
  }
  return base / (run_id + ".jsonl");
}

runner::StressVariant parse_variant(const std::string& kind_name, size_t k) {
  runner::StressVariant v;
  v.kind = stress::kind_from_name(kind_name);
  v.k = k;
  return v;
}

// Labels like add1, delete2, reverse, shuffle.
runner::StressVariant parse_variant_label(const std::string& label) {
  size_t digits = 0;
  while (digits < label.size() &&
         std::isdigit(static_cast<unsigned char>(label[label.size() - 1 - digits]))) {
    ++digits;
  }
  const std::string name = label.substr(0, label.size() - digits);
  const size_t k =
      digits == 0 ? 0 : std::stoull(label.substr(label.size() - digits));
  runner::StressVariant v;
  v.kind = stress::kind_from_name(name);
  v.k = k == 0 ? 1 : k;
  if (v.kind == stress::TransformKind::Reverse ||
      v.kind == stress::TransformKind::Shuffle) {
    v.k = 0;
  }
  return v;
}

// Options shared by the protocol subcommands.
struct ProtocolOptions {
  std::string manifest;
  std::string endpoint_url;
  std::string model = "model";
  std::vector<size_t> frame_counts = {8, 16, 24, 32};
  std::string prompt = "Describe this video in detail.";
  std::string run_id = "run";
  std::string results_dir;
  std::string log_path;
  std::string auth_env;
  std::string tokenizer = "unicode_ws_punct";
  std::string tokenizer_pattern;
  std::string sampling = "force";
  std::string encoding = "jpeg";
  std::string policy = "exclude_empty";
  uint64_t master_seed = 0;
  double timeout_s = 30.0;
  size_t max_retries = 2;
  size_t max_new_tokens = 1024;
  size_t parallelism = 4;
  bool register_canonical = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--manifest", manifest, "Path to the JSONL video manifest")
        ->required();
    cmd->add_option("--endpoint", endpoint_url, "Model endpoint base URL")
        ->required();
    cmd->add_option("--model", model, "Model name sent on the wire");
    cmd->add_option("--frames", frame_counts,
                    "Sampled frame counts (default 8,16,24,32)")
        ->delimiter(',');
    cmd->add_option("--prompt", prompt, "Generation prompt");
    cmd->add_option("--run-id", run_id, "Run id (names the result log)");
    cmd->add_option("--results-dir", results_dir,
                    "Results directory (default $VIDEOSTF_RESULTS_DIR or ./results)");
    cmd->add_option("--log", log_path, "Explicit result log path");
    cmd->add_option("--auth-env", auth_env,
                    "Env var holding the bearer token for the endpoint");
    cmd->add_option("--tokenizer", tokenizer,
                    "unicode_ws_punct | whitespace | custom_regex");
    cmd->add_option("--tokenizer-pattern", tokenizer_pattern,
                    "Pattern for custom_regex");
    cmd->add_option("--sampling", sampling, "strict | force");
    cmd->add_option("--frame-encoding", encoding, "jpeg | png");
    cmd->add_option("--policy", policy,
                    "exclude_empty | include_empty_as_nonrepetitive");
    cmd->add_option("--seed", master_seed, "Master seed for all trials");
    cmd->add_option("--timeout", timeout_s, "Per-request timeout, seconds");
    cmd->add_option("--retries", max_retries, "Transport retries per query");
    cmd->add_option("--max-new-tokens", max_new_tokens, "Output token budget");
    cmd->add_option("--parallelism", parallelism, "Max in-flight queries");
    cmd->add_flag("--register-canonical", register_canonical,
                  "Register canonical frame orders with a mock endpoint");
  }

  runner::RunConfig to_config() const {
    runner::RunConfig cfg;
    cfg.run_id = run_id;
    cfg.manifest_path = manifest;
    gateway::ModelEndpoint ep;
    ep.base_url = endpoint_url;
    ep.model_name = model;
    ep.auth_env = auth_env;
    ep.timeout_s = timeout_s;
    ep.max_retries = max_retries;
    cfg.endpoints = {ep};
    cfg.frame_counts = frame_counts;
    cfg.prompt = prompt;
    cfg.decoding.max_new_tokens = max_new_tokens;
    cfg.metric_config.tokenizer = tokenizer_spec(tokenizer, tokenizer_pattern);
    cfg.empty_policy = policy == "include_empty_as_nonrepetitive"
                           ? metrics::EmptyPolicy::include_empty_as_nonrepetitive
                           : metrics::EmptyPolicy::exclude_empty;
    cfg.master_seed = master_seed;
    cfg.sampling_mode = sampling == "strict" ? frames::SamplingMode::strict
                                             : frames::SamplingMode::force;
    cfg.encoding = frames::frame_encoding_from_name(encoding);
    cfg.register_canonical_with_mock = register_canonical;
    cfg.parallelism = parallelism;
    return cfg;
  }

  fs::path log() const {
    return log_path.empty() ? default_log_path(results_dir, run_id)
                            : fs::path(log_path);
  }
};

int run_main(int argc, char** argv) {
  CLI::App app{"Repetition stress-testing harness for video-language models"};
  app.require_subcommand(1);

  // --- metrics ---------------------------------------------------------
  auto* metrics_cmd = app.add_subcommand(
      "metrics", "Score one output text (file or stdin) with the repetition metrics");
  std::string metrics_input = "-";
  size_t n_indicator = 5, n_intensity = 1;
  std::string metrics_tokenizer = "unicode_ws_punct", metrics_pattern;
  metrics_cmd->add_option("input", metrics_input, "Text file, or - for stdin");
  metrics_cmd->add_option("--n-indicator", n_indicator,
                          "n-gram window for the repetition indicator");
  metrics_cmd->add_option("--n-intensity", n_intensity,
                          "n-gram window for rep_n / entropy");
  metrics_cmd->add_option("--tokenizer", metrics_tokenizer,
                          "unicode_ws_punct | whitespace | custom_regex");
  metrics_cmd->add_option("--tokenizer-pattern", metrics_pattern,
                          "Pattern for custom_regex");
  metrics_cmd->callback([&] {
    std::string text;
    if (metrics_input == "-") {
      text = slurp_stream(std::cin);
    } else {
      std::ifstream in(metrics_input, std::ios::binary);
      if (!in) throw ValidationError("cannot read " + metrics_input);
      text = slurp_stream(in);
    }
    metrics::MetricConfig cfg;
    cfg.tokenizer = tokenizer_spec(metrics_tokenizer, metrics_pattern);
    cfg.n_indicator = n_indicator;
    cfg.n_intensity = n_intensity;
    std::cout << metrics_to_json(metrics::sample_metrics(text, cfg)).dump(2)
              << "\n";
  });

  // --- sweep -----------------------------------------------------------
  auto* sweep_cmd = app.add_subcommand(
      "sweep", "Dataset metrics across an n range (texts file, log, or stdin)");
  size_t n_from = 1, n_to = 10;
  std::string sweep_texts, sweep_log, sweep_format = "markdown";
  std::string sweep_tokenizer = "unicode_ws_punct", sweep_pattern;
  sweep_cmd->add_option("--n-from", n_from, "First n (default 1)");
  sweep_cmd->add_option("--n-to", n_to, "Last n (default 10)");
  sweep_cmd->add_option("--texts", sweep_texts, "File with one output per line");
  sweep_cmd->add_option("--log", sweep_log,
                        "Result log: sweep the recorded pervasive outputs");
  sweep_cmd->add_option("--format", sweep_format, "csv | markdown | plotdata_json");
  sweep_cmd->add_option("--tokenizer", sweep_tokenizer,
                        "unicode_ws_punct | whitespace | custom_regex");
  sweep_cmd->add_option("--tokenizer-pattern", sweep_pattern, "");
  sweep_cmd->callback([&] {
    const auto format = report::render_format_from_name(sweep_format);
    if (!sweep_log.empty()) {
      report::AggregateOptions opts;
      opts.sweep_n_from = n_from;
      opts.sweep_n_to = n_to;
      opts.tokenizer = tokenizer_spec(sweep_tokenizer, sweep_pattern);
      std::cout << report::render(
          report::aggregate(fs::path(sweep_log), report::ReportKind::sweep, opts),
          format);
      return;
    }
    std::vector<std::string> texts;
    if (!sweep_texts.empty()) {
      std::ifstream in(sweep_texts);
      if (!in) throw ValidationError("cannot read " + sweep_texts);
      texts = read_lines(in);
    } else {
      texts = read_lines(std::cin);
    }
    metrics::MetricConfig cfg;
    cfg.tokenizer = tokenizer_spec(sweep_tokenizer, sweep_pattern);
    const auto rows = metrics::metric_sweep(texts, n_from, n_to, cfg);
    report::ReportTable table;
    table.kind = report::ReportKind::sweep;
    table.axis_names = {"model", "frames", "n"};
    table.columns = {{"rr", report::ColumnFormat::percent0},
                     {"ri", report::ColumnFormat::fixed2},
                     {"ie", report::ColumnFormat::fixed2}};
    for (const auto& row : rows) {
      report::ReportRow r;
      r.axes = {"corpus", "0", std::to_string(row.n)};
      r.values = {{"rr", row.metrics.rr},
                  {"ri", row.metrics.ri},
                  {"ie", row.metrics.ie}};
      table.rows.push_back(std::move(r));
    }
    std::cout << report::render(table, format);
  });

  // --- transform -------------------------------------------------------
  auto* transform_cmd = app.add_subcommand(
      "transform", "Plan (and optionally apply) one temporal transformation");
  std::string tf_kind = "shuffle", tf_frames_dir, tf_out;
  size_t tf_k = 1;
  uint64_t tf_seed = 0;
  transform_cmd
      ->add_option("--kind", tf_kind, "add | delete | replace | reverse | shuffle")
      ->required();
  transform_cmd->add_option("--k", tf_k, "Edit count for add/delete/replace");
  transform_cmd->add_option("--seed", tf_seed, "Seed for stochastic kinds");
  transform_cmd->add_option("--frames-dir", tf_frames_dir,
                            "Directory of frame_%06d.jpg/.png files")
      ->required();
  transform_cmd->add_option("--out", tf_out,
                            "Write the transformed frame order to this directory");
  transform_cmd->callback([&] {
    const auto seq = sequence_from_dir(tf_frames_dir);
    const auto kind = stress::kind_from_name(tf_kind);
    stress::TransformPlan plan;
    switch (kind) {
      case stress::TransformKind::Add:
        plan = stress::plan_add(seq, tf_k, tf_seed);
        break;
      case stress::TransformKind::Delete:
        plan = stress::plan_delete(seq, tf_k, tf_seed);
        break;
      case stress::TransformKind::Replace:
        plan = stress::plan_replace(seq, tf_k, tf_seed);
        break;
      case stress::TransformKind::Reverse:
        plan = stress::plan_reverse(seq);
        break;
      case stress::TransformKind::Shuffle:
        plan = stress::plan_shuffle(seq, tf_seed);
        break;
    }
    std::cout << plan.to_json().dump(2) << "\n";
    if (!tf_out.empty()) {
      const auto out_seq = stress::apply(plan, seq);
      fs::create_directories(tf_out);
      for (size_t i = 0; i < out_seq.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%06zu", i);
        const fs::path src(out_seq.frames[i].path);
        fs::copy_file(src, fs::path(tf_out) / (name + src.extension().string()),
                      fs::copy_options::overwrite_existing);
      }
      std::cerr << "wrote " << out_seq.size() << " frames to " << tf_out
                << "\n";
    }
  });

  // --- pervasive -------------------------------------------------------
  auto* pervasive_cmd =
      app.add_subcommand("pervasive", "Pervasive testing over the manifest");
  ProtocolOptions pervasive_opts;
  pervasive_opts.attach(pervasive_cmd);
  std::string pervasive_format = "markdown";
  pervasive_cmd->add_option("--format", pervasive_format,
                            "csv | markdown | plotdata_json");
  pervasive_cmd->callback([&] {
    report::ResultLog log(pervasive_opts.log());
    runner::ProtocolRunner protocol_runner(pervasive_opts.to_config(), log);
    const auto table = protocol_runner.run_pervasive();
    std::cout << report::render(
        table, report::render_format_from_name(pervasive_format));
    std::cerr << "log: " << log.path() << "\n";
  });

  // --- stress ----------------------------------------------------------
  auto* stress_cmd =
      app.add_subcommand("stress", "Temporal stress testing over the manifest");
  ProtocolOptions stress_opts;
  stress_opts.attach(stress_cmd);
  size_t trials = 30;
  bool no_delete1_exhaustive = false;
  std::vector<std::string> transform_labels;
  std::string stress_format = "markdown";
  stress_cmd->add_option("--trials", trials,
                         "Trials per stochastic transform (default 30)");
  stress_cmd->add_flag("--no-delete1-exhaustive", no_delete1_exhaustive,
                       "Sample delete-1 trials instead of exhausting positions");
  stress_cmd->add_option("--transforms", transform_labels,
                         "Variant labels (default add1,add2,delete1,delete2,"
                         "replace1,replace2,reverse,shuffle)")
      ->delimiter(',');
  stress_cmd->add_option("--format", stress_format, "csv | markdown | plotdata_json");
  stress_cmd->callback([&] {
    report::ResultLog log(stress_opts.log());
    runner::ProtocolRunner protocol_runner(stress_opts.to_config(), log);
    runner::StressConfig cfg;
    cfg.trials_stochastic = trials;
    cfg.delete1_exhaustive = !no_delete1_exhaustive;
    if (!transform_labels.empty()) {
      cfg.transforms.clear();
      for (const auto& label : transform_labels) {
        cfg.transforms.push_back(parse_variant_label(label));
      }
    }
    const auto table = protocol_runner.run_stress(cfg);
    std::cout << report::render(table,
                                report::render_format_from_name(stress_format));
    std::cerr << "log: " << log.path() << "\n";
  });

  // --- attack ----------------------------------------------------------
  auto* attack_cmd = app.add_subcommand(
      "attack", "Black-box repetition-inducing attack over the attack set");
  ProtocolOptions attack_opts;
  attack_opts.attach(attack_cmd);
  std::string attack_kind = "shuffle";
  size_t attack_k = 1, max_queries = 30, success_n = 5;
  std::string attack_format = "markdown";
  attack_cmd->add_option("--transform", attack_kind,
                         "add | delete | replace | reverse | shuffle");
  attack_cmd->add_option("--k", attack_k, "Edit count for add/delete/replace");
  attack_cmd->add_option("--max-queries", max_queries,
                         "Query budget per video (default 30)");
  attack_cmd->add_option("--success-n", success_n,
                         "Indicator n-gram window for attack success");
  attack_cmd->add_option("--format", attack_format, "csv | markdown | plotdata_json");
  attack_cmd->callback([&] {
    report::ResultLog log(attack_opts.log());
    runner::ProtocolRunner protocol_runner(attack_opts.to_config(), log);
    runner::AttackConfig cfg;
    cfg.transform = parse_variant(attack_kind, attack_k);
    cfg.max_queries = max_queries;
    cfg.success_n = success_n;
    const auto table = protocol_runner.run_attack(cfg);
    std::cout << report::render(table,
                                report::render_format_from_name(attack_format));
    std::cerr << "log: " << log.path() << "\n";
  });

  // --- report ----------------------------------------------------------
  auto* report_cmd =
      app.add_subcommand("report", "Aggregate a result log into a table");
  std::string report_kind = "pervasive", report_format = "csv", report_log;
  std::string report_run_id = "run", report_results_dir;
  report_cmd->add_option("--kind", report_kind,
                         "pervasive | stress | attack | sweep | distributions");
  report_cmd->add_option("--format", report_format,
                         "csv | markdown | plotdata_json");
  report_cmd->add_option("--log", report_log, "Result log path");
  report_cmd->add_option("--run-id", report_run_id,
                         "Run id (locates the log when --log is omitted)");
  report_cmd->add_option("--results-dir", report_results_dir, "");
  report_cmd->callback([&] {
    const fs::path path = report_log.empty()
                              ? default_log_path(report_results_dir, report_run_id)
                              : fs::path(report_log);
    const auto table = report::aggregate(
        path, report::report_kind_from_name(report_kind));
    std::cout << report::render(table,
                                report::render_format_from_name(report_format));
  });

  // --- mock-serve ------------------------------------------------------
  auto* mock_cmd = app.add_subcommand(
      "mock-serve", "Serve the deterministic mock model endpoint");
  std::string rules_path, listen = "127.0.0.1:8099";
  mock_cmd->add_option("--rules", rules_path, "Mock rules JSON file")->required();
  mock_cmd->add_option("--listen", listen, "host:port (port 0 = any)");
  mock_cmd->callback([&] {
    const size_t colon = listen.rfind(':');
    if (colon == std::string::npos) {
      throw ConfigError("--listen must be host:port");
    }
    const std::string host = listen.substr(0, colon);
    const int port = std::stoi(listen.substr(colon + 1));
    mock::MockServer server(mock::load_rules(rules_path));
    const int bound = server.start(host, port);
    std::cout << "mock server listening on " << host << ":" << bound
              << std::endl;
    for (;;) {
      std::this_thread::sleep_for(std::chrono::seconds(3600));
    }
  });

  CLI11_PARSE(app, argc, argv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_main(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 3;
  } catch (const EmptyReportError& e) {
    std::cerr << "empty report: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
