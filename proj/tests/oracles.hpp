#pragma once

// Deliberately naive reimplementations used as test oracles. None of them
// shares code with the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace oracle {

using Tokens = std::vector<std::string>;

inline std::vector<Tokens> ngrams(const Tokens& t, std::size_t n) {
  std::vector<Tokens> out;
  for (std::size_t i = 0; i + n <= t.size(); ++i) out.emplace_back(t.begin() + i, t.begin() + i + n);
  return out;
}

inline std::size_t occurrences(const std::vector<Tokens>& grams, const Tokens& g) {
  return static_cast<std::size_t>(std::count(grams.begin(), grams.end(), g));
}

struct Prf {
  double p = 0, r = 0, f = 0;
};

inline Prf prf(double p, double r) {
  return {p, r, p + r > 0 ? 2 * p * r / (p + r) : 0.0};
}

// Clipped overlap by linear scans over the n-gram lists.
inline Prf rouge_n(const Tokens& cand, const Tokens& ref, std::size_t n) {
  const auto c = ngrams(cand, n);
  const auto r = ngrams(ref, n);
  if (c.empty() || r.empty()) return {};
  std::vector<Tokens> seen;
  std::size_t match = 0;
  for (const auto& g : c) {
    if (std::find(seen.begin(), seen.end(), g) != seen.end()) continue;
    seen.push_back(g);
    match += std::min(occurrences(c, g), occurrences(r, g));
  }
  return prf(double(match) / c.size(), double(match) / r.size());
}

inline bool is_subsequence(const Tokens& sub, const Tokens& seq) {
  std::size_t j = 0;
  for (std::size_t i = 0; i < seq.size() && j < sub.size(); ++i) {
    if (seq[i] == sub[j]) ++j;
  }
  return j == sub.size();
}

// Tries every subsequence of the shorter side (at most 2^12 of them here).
inline std::size_t lcs_exhaustive(const Tokens& a, const Tokens& b) {
  const Tokens& s = a.size() <= b.size() ? a : b;
  const Tokens& l = a.size() <= b.size() ? b : a;
  std::size_t best = 0;
  for (std::uint32_t mask = 0; mask < (1u << s.size()); ++mask) {
    const auto bits = static_cast<std::size_t>(__builtin_popcount(mask));
    if (bits <= best) continue;
    Tokens sub;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (mask & (1u << i)) sub.push_back(s[i]);
    }
    if (is_subsequence(sub, l)) best = bits;
  }
  return best;
}

struct Alignment {
  std::size_t matches = 0;
  std::size_t chunks = 0;
};

// Enumerates every one-to-one exact matching; keeps the maximum number of
// matches and, among those, the fewest chunks.
inline Alignment meteor_exhaustive(const Tokens& cand, const Tokens& ref) {
  Alignment best{0, std::numeric_limits<std::size_t>::max()};
  std::vector<int> map(cand.size(), -1);
  std::vector<bool> used(ref.size(), false);
  auto chunks_of = [&] {
    std::size_t chunks = 0;
    int prev_c = -2, prev_r = -2;
    for (std::size_t i = 0; i < cand.size(); ++i) {
      if (map[i] < 0) continue;
      if (!(int(i) == prev_c + 1 && map[i] == prev_r + 1)) ++chunks;
      prev_c = int(i);
      prev_r = map[i];
    }
    return chunks;
  };
  auto rec = [&](auto&& self, std::size_t i, std::size_t m) -> void {
    if (i == cand.size()) {
      const std::size_t ch = chunks_of();
      if (m > best.matches || (m == best.matches && ch < best.chunks)) best = {m, ch};
      return;
    }
    self(self, i + 1, m);
    for (std::size_t j = 0; j < ref.size(); ++j) {
      if (used[j] || cand[i] != ref[j]) continue;
      used[j] = true;
      map[i] = int(j);
      self(self, i + 1, m + 1);
      map[i] = -1;
      used[j] = false;
    }
  };
  rec(rec, 0, 0);
  if (best.matches == 0) best.chunks = 0;
  return best;
}

inline double meteor_from(const Alignment& a, std::size_t cand_len, std::size_t ref_len) {
  if (a.matches == 0) return 0.0;
  const double p = double(a.matches) / cand_len;
  const double r = double(a.matches) / ref_len;
  const double fmean = 10 * p * r / (r + 9 * p);
  const double penalty = 0.5 * std::pow(double(a.chunks) / a.matches, 3);
  return fmean * (1 - penalty);
}

// Random token list over a small alphabet {t0, t1, ...}.
inline Tokens random_tokens(std::mt19937_64& rng, std::size_t max_len, std::size_t vocab,
                            std::size_t min_len = 0) {
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  std::uniform_int_distribution<std::size_t> word(0, vocab - 1);
  Tokens t(len(rng));
  for (auto& w : t) w = "t" + std::to_string(word(rng));
  return t;
}

}  // namespace oracle
