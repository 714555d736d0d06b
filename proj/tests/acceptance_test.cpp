// Acceptance suite: one test per criterion, each printing a pass/fail line.
// Everything runs against the bundled sample testbed and the in-process mock
// server; no external services are involved.

#include <gtest/gtest.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "oracles.hpp"
#include "test_util.hpp"
#include "videostf/metrics.hpp"
#include "videostf/mock_server.hpp"
#include "videostf/report.hpp"
#include "videostf/runner.hpp"
#include "videostf/stressors.hpp"

namespace fs = std::filesystem;
using namespace videostf;
using mock::MockRule;
using mock::MockServer;
using mock::PredicateKind;
using runner::AttackConfig;
using runner::ProtocolRunner;
using runner::RunConfig;
using runner::StressConfig;
using runner::StressVariant;
using testutil::TempDir;

namespace {

constexpr uint64_t kDeskSeed = 20250809;

const fs::path kSourceDir(VIDEOSTF_SOURCE_DIR);

class Criterion {
 public:
  Criterion(int number, std::string description)
      : number_(number), description_(std::move(description)) {
    start_ = std::chrono::steady_clock::now();
  }
  ~Criterion() {
    const double secs = elapsed_s();
    char line[256];
    std::snprintf(line, sizeof(line), "[%s] criterion %d: %s (%.1fs)",
                  ::testing::Test::HasFailure() ? "FAIL" : "PASS", number_,
                  description_.c_str(), secs);
    std::cout << line << std::endl;
  }
  double elapsed_s() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  int number_;
  std::string description_;
  std::chrono::steady_clock::time_point start_;
};

metrics::TokenSequence random_tokens(std::mt19937_64& gen, size_t max_len,
                                     size_t vocab) {
  metrics::TokenSequence seq;
  const size_t len = gen() % (max_len + 1);
  seq.tokens.reserve(len);
  for (size_t i = 0; i < len; ++i) {
    seq.tokens.push_back("w" + std::to_string(gen() % vocab));
  }
  return seq;
}

MockRule rule(PredicateKind kind, const std::string& respond) {
  MockRule r;
  r.kind = kind;
  r.respond = respond;
  return r;
}

MockRule hash_rule(uint64_t modulus, uint64_t threshold,
                   const std::string& respond) {
  MockRule r;
  r.kind = PredicateKind::order_hash_mod;
  r.modulus = modulus;
  r.threshold = threshold;
  r.respond = respond;
  return r;
}

const char* kNormal =
    "A calm description where every clause says something new about the "
    "scene and nothing loops.";
const char* kRepetitive =
    "It continues to show the same frame. It continues to show the same "
    "frame. It continues to show the same frame.";

RunConfig mock_config(const std::string& manifest, const std::string& base_url,
                      std::vector<size_t> frame_counts, uint64_t seed) {
  RunConfig cfg;
  cfg.run_id = "acceptance";
  cfg.manifest_path = manifest;
  gateway::ModelEndpoint ep;
  ep.base_url = base_url;
  ep.model_name = "mock-model";
  ep.timeout_s = 10.0;
  ep.max_retries = 1;
  cfg.endpoints = {ep};
  cfg.frame_counts = std::move(frame_counts);
  cfg.master_seed = seed;
  cfg.encoding = frames::FrameEncoding::png_base64;
  cfg.register_canonical_with_mock = true;
  cfg.parallelism = 8;
  cfg.retry_backoff_ms = 1.0;
  return cfg;
}

// The full desk pipeline: pervasive at four frame counts, stress with all
// eight variants at 16 frames, then the attack loop for every variant.
void desk_run(const fs::path& log_path, const std::string& base_url) {
  const std::string manifest = (kSourceDir / "data/sample/manifest.jsonl").string();
  report::ResultLog log(log_path);
  {
    ProtocolRunner runner(mock_config(manifest, base_url, {8, 16, 24, 32},
                                      kDeskSeed),
                          log);
    runner.run_pervasive();
  }
  {
    ProtocolRunner runner(mock_config(manifest, base_url, {16}, kDeskSeed),
                          log);
    runner.run_stress(StressConfig{});
    for (const StressVariant& variant : runner::default_stress_variants()) {
      AttackConfig attack;
      attack.transform = variant;
      runner.run_attack(attack);
    }
  }
}

std::vector<std::string> normalized_lines(const fs::path& path) {
  std::vector<std::string> out;
  for (auto rec : report::ResultLog::load(path)) {
    rec.created_at.clear();
    if (rec.payload.contains("latency_ms")) rec.payload.erase("latency_ms");
    out.push_back(rec.to_json().dump());
  }
  return out;
}

void compare_with_golden(const std::string& name, const std::string& actual) {
  const fs::path golden_path = kSourceDir / "tests" / "golden" / name;
  if (std::getenv("VIDEOSTF_UPDATE_GOLDEN") != nullptr) {
    fs::create_directories(golden_path.parent_path());
    std::ofstream out(golden_path, std::ios::binary | std::ios::trunc);
    out << actual;
  }
  ASSERT_TRUE(fs::exists(golden_path))
      << "missing golden file " << golden_path
      << " (run with VIDEOSTF_UPDATE_GOLDEN=1 to create)";
  EXPECT_EQ(actual, testutil::slurp(golden_path)) << "golden drift: " << name;
}

}  // namespace

TEST(Acceptance, Criterion1MetricOracleEquivalence) {
  Criterion c(1, "metric oracle equivalence on 1000 random sequences");
  std::mt19937_64 gen(20250809);
  for (int rep = 0; rep < 1000; ++rep) {
    const auto seq = random_tokens(gen, 200, 50);
    for (size_t n = 1; n <= 10; ++n) {
      const auto profile = metrics::ngram_profile(seq, n);
      ASSERT_EQ(metrics::max_repeat(profile), oracle::max_repeat(seq.tokens, n));
      ASSERT_EQ(metrics::rep_n(profile), oracle::rep_n(seq.tokens, n));
      ASSERT_NEAR(metrics::norm_entropy(profile),
                  oracle::norm_entropy(seq.tokens, n), 1e-9);
    }
  }
  EXPECT_LT(c.elapsed_s(), 5.0);
}

TEST(Acceptance, Criterion2RrMonotonicity) {
  Criterion c(2, "RR(n) non-increasing over n=1..10; 5-gram corpus steps at 6");
  // Hand-built corpus: every output repeats a 5-gram but no 6-gram.
  std::vector<std::string> five_gram_corpus;
  for (int i = 0; i < 10; ++i) {
    const std::string tag = std::to_string(i);
    five_gram_corpus.push_back("a" + tag + " b" + tag + " c" + tag + " d" +
                               tag + " e" + tag + " x" + tag + " a" + tag +
                               " b" + tag + " c" + tag + " d" + tag + " e" +
                               tag + " y" + tag);
  }
  const auto rows = metrics::metric_sweep(five_gram_corpus, 1, 10);
  ASSERT_EQ(rows.size(), 10u);
  for (const auto& row : rows) {
    if (row.n <= 5) {
      ASSERT_DOUBLE_EQ(row.metrics.rr, 1.0) << "n=" << row.n;
    } else {
      ASSERT_DOUBLE_EQ(row.metrics.rr, 0.0) << "n=" << row.n;
    }
  }

  // Randomized fixture corpora stay non-increasing in n.
  std::mt19937_64 gen(77);
  for (int corpus_i = 0; corpus_i < 5; ++corpus_i) {
    std::vector<std::string> corpus;
    for (int k = 0; k < 30; ++k) {
      const auto seq = random_tokens(gen, 90, 7);
      std::string text = "pad";
      for (const auto& tok : seq.tokens) text += " " + tok;
      corpus.push_back(text);
    }
    const auto sweep = metrics::metric_sweep(corpus, 1, 10);
    for (size_t i = 1; i < sweep.size(); ++i) {
      ASSERT_LE(sweep[i].metrics.rr, sweep[i - 1].metrics.rr);
    }
  }
}

TEST(Acceptance, Criterion3KnownCorpusRR) {
  Criterion c(3, "constructed corpus: RR exactly 0.37; RI/IE vs oracle");
  std::vector<std::string> corpus;
  std::vector<std::vector<std::string>> token_lists;
  for (int i = 0; i < 100; ++i) {
    const std::string tag = std::to_string(i);
    std::vector<std::string> tokens;
    if (i < 37) {
      // A 5-gram repeated twice, then unique filler.
      for (const char* s : {"r0", "r1", "r2", "r3", "r4"}) {
        tokens.push_back(std::string(s) + tag);
      }
      for (const char* s : {"r0", "r1", "r2", "r3", "r4"}) {
        tokens.push_back(std::string(s) + tag);
      }
      for (int u = 0; u < 6; ++u) {
        tokens.push_back("u" + std::to_string(u) + "x" + tag);
      }
    } else {
      for (int u = 0; u < 14; ++u) {
        tokens.push_back("q" + std::to_string(u) + "x" + tag);
      }
    }
    std::string text;
    for (const auto& tok : tokens) {
      if (!text.empty()) text += ' ';
      text += tok;
    }
    corpus.push_back(text);
    token_lists.push_back(tokens);
  }

  std::vector<metrics::SampleMetrics> samples;
  for (const auto& text : corpus) {
    samples.push_back(metrics::sample_metrics(text));
  }
  const auto d = metrics::dataset_metrics(samples);
  ASSERT_EQ(d.k_outputs, 100u);
  ASSERT_DOUBLE_EQ(d.rr, 0.37);

  double oracle_ri = 0.0, oracle_ie = 0.0;
  for (const auto& tokens : token_lists) {
    oracle_ri += oracle::rep_n(tokens, 1);
    oracle_ie += oracle::norm_entropy(tokens, 1);
  }
  ASSERT_NEAR(d.ri, oracle_ri / 100.0, 1e-9);
  ASSERT_NEAR(d.ie, oracle_ie / 100.0, 1e-9);
}

TEST(Acceptance, Criterion4TransformationLawSuite) {
  Criterion c(4, "transformation law suite over 10000 randomized cases");
  rng::SplitMix64 gen(424242);
  const auto ref_eq = [](const frames::FrameRef& a, const frames::FrameRef& b) {
    return frames::same_identity(a, b);
  };
  for (int rep = 0; rep < 10000; ++rep) {
    const size_t t = 2 + static_cast<size_t>(gen.bounded(63));
    const size_t k = 1 + static_cast<size_t>(gen.bounded(t - 1));
    const uint64_t seed = gen.next();
    const auto seq =
        testutil::synthetic_sequence("v" + std::to_string(rep % 11), t);

    const auto added = stress::apply(stress::plan_add(seq, k, seed), seq);
    ASSERT_EQ(added.size(), t + k);
    ASSERT_TRUE(oracle::is_subsequence(seq.frames, added.frames, ref_eq));

    const auto deleted = stress::apply(stress::plan_delete(seq, k, seed), seq);
    ASSERT_EQ(deleted.size(), t - k);
    ASSERT_TRUE(oracle::is_subsequence(deleted.frames, seq.frames, ref_eq));

    const auto replaced =
        stress::apply(stress::plan_replace(seq, k, seed), seq);
    ASSERT_EQ(replaced.size(), t);
    size_t differ = 0;
    for (size_t i = 0; i < t; ++i) {
      if (!ref_eq(replaced.frames[i], seq.frames[i])) ++differ;
    }
    ASSERT_EQ(differ, k);

    const auto reversed = stress::apply(stress::plan_reverse(seq), seq);
    ASSERT_TRUE(
        oracle::same_multiset(reversed.digest_list(), seq.digest_list()));
    const auto back = stress::apply(stress::plan_reverse(reversed), reversed);
    ASSERT_EQ(back.digest_list(), seq.digest_list());

    const auto shuffle_plan = stress::plan_shuffle(seq, seed);
    const auto shuffled = stress::apply(shuffle_plan, seq);
    ASSERT_TRUE(
        oracle::same_multiset(shuffled.digest_list(), seq.digest_list()));

    // Seed determinism at byte level.
    ASSERT_EQ(stress::plan_add(seq, k, seed).canonical(),
              stress::plan_add(seq, k, seed).canonical());
    ASSERT_EQ(stress::plan_shuffle(seq, seed).canonical(),
              shuffle_plan.canonical());
  }
  EXPECT_LT(c.elapsed_s(), 10.0);
}

TEST(Acceptance, Criterion5TrialPolicyCounts) {
  Criterion c(5, "trial policy at T=16: 16 / 30 / 1 plans per variant");
  const auto seq = testutil::synthetic_sequence("v", 16);
  const StressConfig cfg;
  using stress::TransformKind;
  ASSERT_EQ(runner::stress_plans(seq, {TransformKind::Delete, 1}, cfg, 9).size(),
            16u);
  ASSERT_EQ(runner::stress_plans(seq, {TransformKind::Delete, 2}, cfg, 9).size(),
            30u);
  ASSERT_EQ(runner::stress_plans(seq, {TransformKind::Add, 1}, cfg, 9).size(),
            30u);
  ASSERT_EQ(runner::stress_plans(seq, {TransformKind::Add, 2}, cfg, 9).size(),
            30u);
  ASSERT_EQ(
      runner::stress_plans(seq, {TransformKind::Replace, 1}, cfg, 9).size(),
      30u);
  ASSERT_EQ(
      runner::stress_plans(seq, {TransformKind::Replace, 2}, cfg, 9).size(),
      30u);
  ASSERT_EQ(
      runner::stress_plans(seq, {TransformKind::Shuffle, 0}, cfg, 9).size(),
      30u);
  ASSERT_EQ(
      runner::stress_plans(seq, {TransformKind::Reverse, 0}, cfg, 9).size(),
      1u);
}

TEST(Acceptance, Criterion6FrameSampling) {
  Criterion c(6, "midpoint-uniform frame sampling");
  using frames::SamplingMode;
  ASSERT_EQ(frames::sampling_indices(100, 8, SamplingMode::strict),
            (std::vector<size_t>{6, 18, 31, 43, 56, 68, 81, 93}));
  ASSERT_EQ(frames::sampling_indices(8, 8, SamplingMode::strict),
            (std::vector<size_t>{0, 1, 2, 3, 4, 5, 6, 7}));
  ASSERT_THROW(frames::sampling_indices(4, 8, SamplingMode::strict),
               ValidationError);
  ASSERT_EQ(frames::sampling_indices(4, 8, SamplingMode::force),
            (std::vector<size_t>{0, 0, 1, 1, 2, 2, 3, 3}));
}

TEST(Acceptance, Criterion7AttackSemanticsVsMock) {
  Criterion c(7, "attack semantics against the mock server");
  TempDir tmp("acc7");
  std::vector<frames::VideoRecord> records;
  for (int i = 0; i < 6; ++i) {
    records.push_back(
        testutil::make_video(tmp.path(), "vid_" + std::to_string(i), 20));
  }
  frames::save_manifest(records, tmp.path() / "manifest.jsonl");
  const std::string manifest = (tmp.path() / "manifest.jsonl").string();

  // Rule set A: every non-canonical order is repetitive.
  {
    MockServer server({rule(PredicateKind::is_canonical_order, kNormal),
                       rule(PredicateKind::match_default, kRepetitive)});
    server.start("127.0.0.1", 0);
    report::ResultLog log(tmp.path() / "attackA.jsonl");
    ProtocolRunner runner(
        mock_config(manifest, server.base_url(), {8}, kDeskSeed), log);
    runner.run_pervasive();
    for (const StressVariant& variant : runner::default_stress_variants()) {
      AttackConfig attack;
      attack.transform = variant;
      const auto table = runner.run_attack(attack);
      for (const auto& row : table.rows) {
        if (row.axes[2] != variant.label()) continue;
        ASSERT_DOUBLE_EQ(row.values.at("asr"), 1.0) << variant.label();
        ASSERT_DOUBLE_EQ(row.values.at("aq"), 1.0) << variant.label();
      }
    }
    for (const auto& rec : log.records()) {
      if (rec.kind != report::RecordKind::trace) continue;
      const size_t used = rec.payload.at("queries_used").get<size_t>();
      ASSERT_GE(used, 1u);
      ASSERT_LE(used, 30u);
      const auto& ctx = rec.payload.at("context");
      if (ctx.at("transform") == "reverse") {
        ASSERT_EQ(used, 1u);
      }
    }
  }

  // Rule set B: repetition iff order_hash % 2 == 0; traces must match an
  // offline enumeration of the derived seeds exactly.
  {
    MockServer server({rule(PredicateKind::is_canonical_order, kNormal),
                       hash_rule(2, 1, kRepetitive),
                       rule(PredicateKind::match_default, kNormal)});
    server.start("127.0.0.1", 0);
    report::ResultLog log(tmp.path() / "attackB.jsonl");
    const auto cfg = mock_config(manifest, server.base_url(), {8}, kDeskSeed);
    ProtocolRunner runner(cfg, log);
    runner.run_pervasive();

    for (const StressVariant& variant : runner::default_stress_variants()) {
      AttackConfig attack;
      attack.transform = variant;
      runner.run_attack(attack);
    }

    size_t traces_checked = 0;
    for (const auto& rec : log.records()) {
      if (rec.kind != report::RecordKind::trace) continue;
      const auto& ctx = rec.payload.at("context");
      const std::string label = ctx.at("transform").get<std::string>();
      const std::string video_id = rec.payload.at("video_id").get<std::string>();
      const auto video_it =
          std::find_if(records.begin(), records.end(),
                       [&](const auto& v) { return v.video_id == video_id; });
      ASSERT_NE(video_it, records.end());
      const auto seq = frames::sample_frames(
          *video_it, frames::SamplingSpec{8, frames::SamplingMode::force});

      const StressVariant variant = [&] {
        for (const auto& v : runner::default_stress_variants()) {
          if (v.label() == label) return v;
        }
        throw std::logic_error("unknown label " + label);
      }();

      // Offline enumeration of the seed schedule and rule outcomes.
      std::vector<std::pair<uint64_t, bool>> predicted;
      const bool deterministic =
          variant.kind == stress::TransformKind::Reverse;
      const size_t budget = deterministic ? 1 : 30;
      for (size_t i = 0; i < budget; ++i) {
        const uint64_t seed =
            deterministic
                ? 0
                : rng::split(kDeskSeed, video_id, static_cast<uint64_t>(i));
        stress::TransformPlan plan;
        switch (variant.kind) {
          case stress::TransformKind::Add:
            plan = stress::plan_add(seq, variant.k, seed);
            break;
          case stress::TransformKind::Delete:
            plan = stress::plan_delete(seq, variant.k, seed);
            break;
          case stress::TransformKind::Replace:
            plan = stress::plan_replace(seq, variant.k, seed);
            break;
          case stress::TransformKind::Reverse:
            plan = stress::plan_reverse(seq);
            break;
          case stress::TransformKind::Shuffle:
            plan = stress::plan_shuffle(seq, seed);
            break;
        }
        const auto transformed = stress::apply(plan, seq);
        const bool hit =
            mock::order_hash(transformed.digest_list()) % 2 < 1;
        predicted.emplace_back(seed, hit);
        if (hit) break;
      }

      const auto& attempts = rec.payload.at("attempts");
      ASSERT_EQ(attempts.size(), predicted.size())
          << label << " " << video_id;
      for (size_t i = 0; i < predicted.size(); ++i) {
        ASSERT_EQ(attempts[i].at("seed").get<uint64_t>(), predicted[i].first);
        ASSERT_EQ(attempts[i].at("is_repetitive").get<bool>(),
                  predicted[i].second);
      }
      ASSERT_EQ(rec.payload.at("success").get<bool>(),
                predicted.back().second);
      const size_t used = rec.payload.at("queries_used").get<size_t>();
      ASSERT_GE(used, 1u);
      ASSERT_LE(used, 30u);
      if (variant.kind == stress::TransformKind::Reverse) {
        ASSERT_EQ(used, 1u);
      }
      ++traces_checked;
    }
    // 6 videos x 8 transforms.
    ASSERT_EQ(traces_checked, 48u);
  }
}

TEST(Acceptance, Criterion8EndToEndDeskRun) {
  Criterion c(8, "end-to-end desk run with golden reports");
  TempDir tmp("acc8");
  MockServer server(
      mock::load_rules((kSourceDir / "data/sample/mock_rules.json").string()));
  server.start("127.0.0.1", 0);

  const auto log_a = tmp.path() / "desk_a.jsonl";
  desk_run(log_a, server.base_url());
  const double first_run_s = c.elapsed_s();
  EXPECT_LT(first_run_s, 120.0);

  const auto records = report::ResultLog::load(log_a);
  compare_with_golden(
      "pervasive.csv",
      report::render(report::aggregate(records, report::ReportKind::pervasive),
                     report::RenderFormat::csv));
  compare_with_golden(
      "stress.csv",
      report::render(report::aggregate(records, report::ReportKind::stress),
                     report::RenderFormat::csv));
  compare_with_golden(
      "attack.csv",
      report::render(report::aggregate(records, report::ReportKind::attack),
                     report::RenderFormat::csv));

  // A second run with the same master seed reproduces the logs except
  // timestamps and latencies.
  const auto log_b = tmp.path() / "desk_b.jsonl";
  desk_run(log_b, server.base_url());
  EXPECT_EQ(normalized_lines(log_a), normalized_lines(log_b));
}

TEST(Acceptance, Criterion9Resumability) {
  Criterion c(9, "kill at 50% and resume: identical record set, no dup ids");
  TempDir tmp("acc9");
  MockServer server(
      mock::load_rules((kSourceDir / "data/sample/mock_rules.json").string()));
  server.start("127.0.0.1", 0);

  const auto full_path = tmp.path() / "full.jsonl";
  desk_run(full_path, server.base_url());
  const auto full = normalized_lines(full_path);

  // Simulate the kill: keep the first half of the log plus a torn tail.
  const auto resumed_path = tmp.path() / "resumed.jsonl";
  {
    std::ifstream in(full_path);
    std::ofstream out(resumed_path, std::ios::binary);
    std::string line;
    for (size_t i = 0; i < full.size() / 2 && std::getline(in, line); ++i) {
      out << line << '\n';
    }
    out << R"({"record_kind":"query","run_id":"acceptance","reco)";
  }
  desk_run(resumed_path, server.base_url());
  const auto resumed = normalized_lines(resumed_path);

  auto full_sorted = full;
  auto resumed_sorted = resumed;
  std::sort(full_sorted.begin(), full_sorted.end());
  std::sort(resumed_sorted.begin(), resumed_sorted.end());
  EXPECT_EQ(full_sorted.size(), resumed_sorted.size());
  EXPECT_EQ(full_sorted, resumed_sorted);

  std::set<std::string> query_ids;
  for (const auto& rec : report::ResultLog::load(resumed_path)) {
    if (rec.kind != report::RecordKind::query) continue;
    EXPECT_TRUE(query_ids.insert(rec.record_id).second)
        << "duplicate query id " << rec.record_id;
  }
}
