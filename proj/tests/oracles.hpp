#pragma once

// Independent brute-force oracles used to cross-check the library.
// Everything here enumerates windows or candidates directly and must stay
// free of the implementation paths it validates.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace oracle {

using Tokens = std::vector<std::string>;

// All contiguous n-token windows, materialized.
inline std::vector<Tokens> windows(const Tokens& tokens, size_t n) {
  std::vector<Tokens> out;
  if (n == 0 || tokens.size() < n) return out;
  for (size_t i = 0; i + n <= tokens.size(); ++i) {
    out.emplace_back(tokens.begin() + static_cast<long>(i),
                     tokens.begin() + static_cast<long>(i + n));
  }
  return out;
}

// Max occurrence count by pairwise window comparison.
inline size_t max_repeat(const Tokens& tokens, size_t n) {
  const auto wins = windows(tokens, n);
  size_t best = 0;
  for (size_t i = 0; i < wins.size(); ++i) {
    size_t count = 0;
    for (size_t j = 0; j < wins.size(); ++j) {
      if (wins[i] == wins[j]) ++count;
    }
    best = std::max(best, count);
  }
  return best;
}

inline size_t distinct_count(const Tokens& tokens, size_t n) {
  auto wins = windows(tokens, n);
  std::sort(wins.begin(), wins.end());
  wins.erase(std::unique(wins.begin(), wins.end()), wins.end());
  return wins.size();
}

inline double rep_n(const Tokens& tokens, size_t n) {
  const auto wins = windows(tokens, n);
  if (wins.size() <= 1) return 0.0;
  return 1.0 - static_cast<double>(distinct_count(tokens, n)) /
                   static_cast<double>(wins.size());
}

// Entropy from an explicit probability table over distinct windows,
// normalized by log2(total window count).
inline double norm_entropy(const Tokens& tokens, size_t n) {
  const auto wins = windows(tokens, n);
  if (wins.size() <= 1) return 1.0;
  std::map<Tokens, size_t> table;
  for (const auto& w : wins) ++table[w];
  if (table.size() == 1) return 0.0;
  if (table.size() == wins.size()) return 1.0;
  long double h = 0.0L;
  const long double total = static_cast<long double>(wins.size());
  for (const auto& [w, c] : table) {
    const long double p = static_cast<long double>(c) / total;
    h -= p * std::log2(p);
  }
  return static_cast<double>(h / std::log2(total));
}

// True when `sub` is an order-preserving subsequence of `full`, comparing
// elements with the provided equality.
template <typename T, typename Eq>
bool is_subsequence(const std::vector<T>& sub, const std::vector<T>& full,
                    Eq eq) {
  size_t i = 0;
  for (const T& item : full) {
    if (i < sub.size() && eq(sub[i], item)) ++i;
  }
  return i == sub.size();
}

// Multiset equality via sorted key lists.
inline bool same_multiset(std::vector<std::string> a,
                          std::vector<std::string> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return a == b;
}

}  // namespace oracle
