#pragma once

/// N-gram repetition metrics over generated text.
///
/// An output is tokenized into M units; the multiset of contiguous n-grams
/// (overlapping windows included) drives three per-sample statistics:
///
///   - r_max:   the highest occurrence count of any single n-gram; an output
///              is flagged repetitive when r_max > 1 at the indicator n
///              (default n = 5).
///   - rep_n:   1 - distinct/total, the fraction of duplicated n-grams
///              (default n = 1).
///   - h_norm:  n-gram entropy normalized by log2(total), in [0, 1]; lower
///              means more repetitive (default n = 1).
///
/// Dataset level: RR = mean repetitive indicator, RI = mean rep_n,
/// IE = mean h_norm, each an unweighted mean over the included outputs.
///
/// Degenerate inputs: with at most one n-gram there is no duplication
/// evidence, so rep_n := 0 and h_norm := 1. Empty outputs are flagged and,
/// under the default policy, excluded from aggregation with the excluded
/// count reported.
///
/// All operations are pure functions of their inputs.

#include <cmath>
#include <cstdint>
#include <map>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "videostf/errors.hpp"

namespace videostf::metrics {

enum class TokenizerKind { unicode_ws_punct, whitespace, custom_regex };

struct TokenizerSpec {
  TokenizerKind kind = TokenizerKind::unicode_ws_punct;
  std::string pattern;  // custom_regex only
};

struct TokenSequence {
  std::vector<std::string> tokens;

  size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
};

using NGram = std::vector<std::string>;

struct NGramProfile {
  size_t n = 1;
  size_t total = 0;                     // max(M - n + 1, 0)
  std::map<NGram, size_t> occurrences;  // distinct n-gram -> count
};

struct MetricConfig {
  TokenizerSpec tokenizer;
  size_t n_indicator = 5;  // window for the repetitive/not indicator
  size_t n_intensity = 1;  // window for rep_n and h_norm
};

struct SampleMetrics {
  size_t r_max = 0;
  double rep_n = 0.0;
  double h_norm = 1.0;
  bool is_repetitive = false;
  size_t n_indicator = 5;
  size_t n_intensity = 1;
  bool empty_output = false;
  bool too_short = false;  // M < n_indicator
};

enum class EmptyPolicy { exclude_empty, include_empty_as_nonrepetitive };

struct DatasetMetrics {
  size_t k_outputs = 0;  // K, after policy filtering
  double rr = 0.0;
  double ri = 0.0;
  double ie = 0.0;
  size_t excluded = 0;
};

namespace detail {

// Decodes the next UTF-8 codepoint; a malformed byte is consumed alone and
// returned verbatim so tokenization stays total and deterministic.
inline char32_t next_codepoint(std::string_view s, size_t& i) {
  const auto byte = [&](size_t k) {
    return static_cast<unsigned char>(s[k]);
  };
  const unsigned char b0 = byte(i);
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  size_t len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++i;
    return b0;
  }
  if (i + len > s.size()) {
    ++i;
    return b0;
  }
  for (size_t k = 1; k < len; ++k) {
    if ((byte(i + k) & 0xC0) != 0x80) {
      ++i;
      return b0;
    }
    cp = (cp << 6) | (byte(i + k) & 0x3F);
  }
  i += len;
  return cp;
}

inline bool is_space_cp(char32_t c) {
  switch (c) {
    case U' ': case U'\t': case U'\n': case U'\v': case U'\f': case U'\r':
    case 0x0085: case 0x00A0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200A;
  }
}

// Word characters: ASCII letters/digits, plus any non-space codepoint
// outside ASCII. Everything else (ASCII punctuation, control bytes) is
// emitted as a single-character token.
inline bool is_word_cp(char32_t c) {
  if (c < 0x80) {
    return (c >= '0' && c <= '9') || (c >= 'A' && c <= 'Z') ||
           (c >= 'a' && c <= 'z');
  }
  return !is_space_cp(c);
}

}  // namespace detail

inline TokenSequence tokenize(const std::string& text,
                              const TokenizerSpec& spec = {}) {
  TokenSequence out;
  switch (spec.kind) {
    case TokenizerKind::whitespace: {
      size_t i = 0;
      while (i < text.size()) {
        size_t j = i;
        char32_t cp = detail::next_codepoint(text, j);
        if (detail::is_space_cp(cp)) {
          i = j;
          continue;
        }
        const size_t start = i;
        size_t end = i;
        while (end < text.size()) {
          size_t k = end;
          cp = detail::next_codepoint(text, k);
          if (detail::is_space_cp(cp)) break;
          end = k;
        }
        out.tokens.emplace_back(text.substr(start, end - start));
        i = end;
      }
      break;
    }
    case TokenizerKind::unicode_ws_punct: {
      size_t i = 0;
      std::string run;
      const auto flush = [&] {
        if (!run.empty()) {
          out.tokens.push_back(run);
          run.clear();
        }
      };
      while (i < text.size()) {
        const size_t start = i;
        const char32_t cp = detail::next_codepoint(text, i);
        if (detail::is_space_cp(cp)) {
          flush();
        } else if (detail::is_word_cp(cp)) {
          run.append(text, start, i - start);
        } else {
          flush();
          out.tokens.emplace_back(text.substr(start, i - start));
        }
      }
      flush();
      break;
    }
    case TokenizerKind::custom_regex: {
      std::regex re;
      try {
        re.assign(spec.pattern);
      } catch (const std::regex_error& e) {
        throw ConfigError(std::string("invalid tokenizer regex: ") + e.what());
      }
      for (auto it = std::sregex_iterator(text.begin(), text.end(), re);
           it != std::sregex_iterator(); ++it) {
        if (it->length() > 0) out.tokens.push_back(it->str());
      }
      break;
    }
  }
  return out;
}

inline NGramProfile ngram_profile(const TokenSequence& seq, size_t n) {
  if (n < 1) throw ValidationError("n-gram window must be >= 1");
  NGramProfile profile;
  profile.n = n;
  const size_t m = seq.size();
  if (m < n) return profile;  // total = 0, empty map
  profile.total = m - n + 1;
  for (size_t i = 0; i + n <= m; ++i) {
    ++profile.occurrences[NGram(seq.tokens.begin() + static_cast<long>(i),
                                seq.tokens.begin() + static_cast<long>(i + n))];
  }
  return profile;
}

// Highest occurrence count of any single n-gram; 0 for an empty profile.
inline size_t max_repeat(const NGramProfile& profile) {
  size_t best = 0;
  for (const auto& [gram, count] : profile.occurrences) {
    if (count > best) best = count;
  }
  return best;
}

// Fraction of duplicated n-grams: 1 - distinct/total; 0 when total <= 1.
inline double rep_n(const NGramProfile& profile) {
  if (profile.total <= 1) return 0.0;
  return 1.0 - static_cast<double>(profile.occurrences.size()) /
                   static_cast<double>(profile.total);
}

// Normalized n-gram entropy in [0, 1]; 1 when total <= 1 (no repetition
// evidence). Exact at the boundaries: all-distinct profiles score 1.0 and a
// single repeated n-gram scores 0.0 without floating-point residue.
inline double norm_entropy(const NGramProfile& profile) {
  if (profile.total <= 1) return 1.0;
  if (profile.occurrences.size() == 1) return 0.0;
  if (profile.occurrences.size() == profile.total) return 1.0;
  const double total = static_cast<double>(profile.total);
  double h = 0.0;
  for (const auto& [gram, count] : profile.occurrences) {
    const double p = static_cast<double>(count) / total;
    h -= p * std::log2(p);
  }
  return h / std::log2(total);
}

inline SampleMetrics sample_metrics_from_tokens(const TokenSequence& seq,
                                                size_t n_indicator,
                                                size_t n_intensity) {
  SampleMetrics out;
  out.n_indicator = n_indicator;
  out.n_intensity = n_intensity;
  out.empty_output = seq.empty();
  out.too_short = seq.size() < n_indicator;
  out.r_max = max_repeat(ngram_profile(seq, n_indicator));
  out.is_repetitive = out.r_max > 1;
  const NGramProfile intensity = ngram_profile(seq, n_intensity);
  out.rep_n = rep_n(intensity);
  out.h_norm = norm_entropy(intensity);
  return out;
}

inline SampleMetrics sample_metrics(const std::string& text,
                                    const MetricConfig& cfg = {}) {
  return sample_metrics_from_tokens(tokenize(text, cfg.tokenizer),
                                    cfg.n_indicator, cfg.n_intensity);
}

inline DatasetMetrics dataset_metrics(
    const std::vector<SampleMetrics>& samples,
    EmptyPolicy policy = EmptyPolicy::exclude_empty) {
  DatasetMetrics out;
  double rr = 0.0, ri = 0.0, ie = 0.0;
  for (const SampleMetrics& s : samples) {
    if (policy == EmptyPolicy::exclude_empty && s.empty_output) {
      ++out.excluded;
      continue;
    }
    ++out.k_outputs;
    rr += s.is_repetitive ? 1.0 : 0.0;
    ri += s.rep_n;
    ie += s.h_norm;
  }
  if (out.k_outputs == 0) {
    throw EmptyReportError("no samples left to aggregate after policy filter");
  }
  const double k = static_cast<double>(out.k_outputs);
  out.rr = rr / k;
  out.ri = ri / k;
  out.ie = ie / k;
  return out;
}

struct SweepRow {
  size_t n = 1;
  DatasetMetrics metrics;
};

// Per-n dataset metrics over a corpus; in sweep mode one n drives all three
// metrics, overriding the split indicator/intensity defaults.
inline std::vector<SweepRow> metric_sweep(
    const std::vector<std::string>& texts, size_t n_from, size_t n_to,
    const MetricConfig& cfg = {},
    EmptyPolicy policy = EmptyPolicy::exclude_empty) {
  if (n_from < 1 || n_to > 64 || n_from > n_to) {
    throw ValidationError("sweep range must be an interval within [1, 64]");
  }
  if (texts.empty()) throw EmptyReportError("metric sweep over no texts");
  std::vector<TokenSequence> sequences;
  sequences.reserve(texts.size());
  for (const std::string& t : texts) {
    sequences.push_back(tokenize(t, cfg.tokenizer));
  }
  std::vector<SweepRow> rows;
  for (size_t n = n_from; n <= n_to; ++n) {
    std::vector<SampleMetrics> samples;
    samples.reserve(sequences.size());
    for (const TokenSequence& seq : sequences) {
      samples.push_back(sample_metrics_from_tokens(seq, n, n));
    }
    rows.push_back(SweepRow{n, dataset_metrics(samples, policy)});
  }
  return rows;
}

inline std::string tokenizer_kind_name(TokenizerKind k) {
  switch (k) {
    case TokenizerKind::unicode_ws_punct: return "unicode_ws_punct";
    case TokenizerKind::whitespace: return "whitespace";
    case TokenizerKind::custom_regex: return "custom_regex";
  }
  return "unicode_ws_punct";
}

inline TokenizerKind tokenizer_kind_from_name(std::string_view name) {
  if (name == "unicode_ws_punct") return TokenizerKind::unicode_ws_punct;
  if (name == "whitespace") return TokenizerKind::whitespace;
  if (name == "custom_regex") return TokenizerKind::custom_regex;
  throw ConfigError("unknown tokenizer: " + std::string(name));
}

}  // namespace videostf::metrics
