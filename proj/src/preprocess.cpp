#include "headline/preprocess.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

#include "headline/error.hpp"
#include "headline/unicode.hpp"

namespace headline::preprocess {

namespace {

using Codepoints = std::vector<char32_t>;

char32_t ascii_lower(char32_t c) {
  return (c >= U'A' && c <= U'Z') ? c + (U'a' - U'A') : c;
}

bool starts_with_ci(const Codepoints& text, std::size_t pos, std::u32string_view prefix) {
  if (text.size() - pos < prefix.size()) return false;
  for (std::size_t k = 0; k < prefix.size(); ++k) {
    if (ascii_lower(text[pos + k]) != prefix[k]) return false;
  }
  return true;
}

Codepoints strip_urls(const Codepoints& text) {
  static constexpr std::array<std::u32string_view, 3> kPrefixes = {U"http://", U"https://",
                                                                   U"www."};
  Codepoints out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const bool url = std::any_of(kPrefixes.begin(), kPrefixes.end(),
                                 [&](auto p) { return starts_with_ci(text, i, p); });
    if (!url) {
      out.push_back(text[i++]);
      continue;
    }
    while (i < text.size() && !unicode::is_whitespace(text[i])) ++i;
  }
  return out;
}

bool is_presentation_selector(char32_t c) {
  return c == 0xFE0E || c == 0xFE0F || c == 0x20E3;
}

bool is_tag(char32_t c) { return c >= 0xE0020 && c <= 0xE007F; }

// ZWJ and tag characters are only dropped inside an emoji sequence; ZWJ is a
// regular shaping character in Bengali script.
Codepoints strip_emoji(const Codepoints& text) {
  Codepoints out;
  out.reserve(text.size());
  bool in_emoji = false;
  for (char32_t c : text) {
    if (unicode::is_emoji(c)) {
      in_emoji = true;
    } else if (is_presentation_selector(c)) {
      // dropped everywhere
    } else if (in_emoji && (c == 0x200D || is_tag(c))) {
      // joiner or tag inside an emoji sequence
    } else {
      in_emoji = false;
      out.push_back(c);
    }
  }
  return out;
}

Codepoints dedupe_punctuation(const Codepoints& text) {
  Codepoints out;
  out.reserve(text.size());
  for (char32_t c : text) {
    if (!out.empty() && out.back() == c && unicode::is_punctuation(c)) continue;
    out.push_back(c);
  }
  return out;
}

Codepoints collapse_whitespace(const Codepoints& text) {
  Codepoints out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char32_t c : text) {
    if (unicode::is_whitespace(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty()) out.push_back(U' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::string normalize_once(std::string_view text, const NormalizationConfig& config) {
  Codepoints cps = unicode::decode(config.apply_nfkc ? unicode::nfkc(text) : std::string(text));
  if (config.strip_urls) cps = strip_urls(cps);
  if (config.strip_emoji) cps = strip_emoji(cps);
  if (config.dedupe_punctuation) cps = dedupe_punctuation(cps);
  if (config.collapse_whitespace) cps = collapse_whitespace(cps);
  return unicode::encode(cps);
}

}  // namespace

std::string normalize_text(std::string_view text, const NormalizationConfig& config) {
  // A removal can expose a new match for an earlier stage ("http:://x" only
  // becomes a URL after punctuation reduction), so iterate to a fixed point.
  constexpr int kMaxPasses = 16;
  std::string current = normalize_once(text, config);
  for (int pass = 1; pass < kMaxPasses; ++pass) {
    std::string next = normalize_once(current, config);
    if (next == current) break;
    current = std::move(next);
  }
  return current;
}

bool is_reserved(TokenId id) { return id >= 0 && id < static_cast<TokenId>(kReservedCount); }

Vocabulary::Vocabulary() {
  for (std::size_t i = 0; i < kReservedCount; ++i) {
    tokens_.emplace_back(kReservedTokens[i]);
    ids_.emplace(tokens_.back(), static_cast<TokenId>(i));
  }
}

Vocabulary Vocabulary::from_words(std::vector<std::string> words) {
  Vocabulary vocab;
  vocab.tokens_.reserve(kReservedCount + words.size());
  for (auto& word : words) {
    if (word.empty()) throw ValidationError("vocabulary: empty token");
    if (word.find_first_of("\n\r") != std::string::npos) {
      throw ValidationError("vocabulary: token contains a line break");
    }
    const auto id = static_cast<TokenId>(vocab.tokens_.size());
    if (!vocab.ids_.emplace(word, id).second) {
      throw ValidationError("vocabulary: duplicate token '" + word + "'");
    }
    vocab.tokens_.push_back(std::move(word));
  }
  return vocab;
}

TokenId Vocabulary::id_of(std::string_view word) const {
  const auto it = ids_.find(std::string(word));
  if (it == ids_.end() || is_reserved(it->second)) return kUnk;
  return it->second;
}

bool Vocabulary::contains(std::string_view word) const { return id_of(word) != kUnk; }

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw RangeError("token id " + std::to_string(id) + " outside vocabulary of size " +
                     std::to_string(tokens_.size()));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

void Vocabulary::write(std::ostream& out) const {
  for (const auto& t : tokens_) out << t << '\n';
}

Vocabulary Vocabulary::read(std::istream& in) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  if (lines.size() < kReservedCount) {
    throw SchemaError("vocabulary file has fewer than the reserved tokens");
  }
  for (std::size_t i = 0; i < kReservedCount; ++i) {
    if (lines[i] != kReservedTokens[i]) {
      throw SchemaError("vocabulary line " + std::to_string(i + 1) + " must be '" +
                        std::string(kReservedTokens[i]) + "'");
    }
  }
  lines.erase(lines.begin(), lines.begin() + kReservedCount);
  return from_words(std::move(lines));
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write vocabulary " + path.string());
  write(out);
  if (!out) throw IoError("failed writing vocabulary " + path.string());
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read vocabulary " + path.string());
  return read(in);
}

Vocabulary build_vocabulary(std::span<const std::string> texts, std::size_t max_size,
                            std::size_t min_frequency) {
  if (max_size <= kReservedCount) {
    throw ParameterError("vocabulary max_size must exceed the 5 reserved tokens");
  }
  std::map<std::string, std::size_t> counts;
  for (const auto& text : texts) {
    for (auto& word : unicode::split_whitespace(text)) ++counts[std::move(word)];
  }
  for (auto reserved : kReservedTokens) counts.erase(std::string(reserved));

  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (auto& [word, count] : counts) {
    if (count >= min_frequency) ranked.emplace_back(word, count);
  }
  // counts is ordered, so a stable sort on frequency keeps lexicographic ties.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  const std::size_t keep = std::min(ranked.size(), max_size - kReservedCount);
  std::vector<std::string> words;
  words.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) words.push_back(std::move(ranked[i].first));
  return Vocabulary::from_words(std::move(words));
}

TokenSequence tokenize(std::string_view text, const Vocabulary& vocab) {
  TokenSequence seq;
  for (const auto& word : unicode::split_whitespace(text)) seq.ids.push_back(vocab.id_of(word));
  return seq;
}

std::string detokenize(const TokenSequence& seq, const Vocabulary& vocab) {
  std::string out;
  for (std::size_t i = 0; i < seq.ids.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += vocab.token(seq.ids[i]);
  }
  return out;
}

TokenSequence truncate(const TokenSequence& seq, std::size_t max_len) {
  if (max_len < 1) throw ParameterError("truncate: max_len must be >= 1");
  if (seq.ids.size() <= max_len) return seq;
  return TokenSequence{{seq.ids.begin(), seq.ids.begin() + static_cast<std::ptrdiff_t>(max_len)}};
}

}  // namespace headline::preprocess
