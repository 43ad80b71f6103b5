#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace headline::preprocess {

/// Text cleanup stages, applied in declaration order. All are on by default.
struct NormalizationConfig {
  bool apply_nfkc = true;
  bool strip_urls = true;
  bool strip_emoji = true;
  bool collapse_whitespace = true;
  bool dedupe_punctuation = true;
};

/// NFKC, URL removal, emoji removal, punctuation-run reduction, then
/// whitespace collapse and trim. The stages are repeated until the output is
/// stable, so the result is a fixed point: normalize(normalize(x)) equals
/// normalize(x).
std::string normalize_text(std::string_view text, const NormalizationConfig& config = {});

using TokenId = std::int32_t;

inline constexpr TokenId kPad = 0;
inline constexpr TokenId kUnk = 1;
inline constexpr TokenId kBos = 2;
inline constexpr TokenId kEos = 3;
inline constexpr TokenId kSep = 4;
inline constexpr std::size_t kReservedCount = 5;

/// Surface strings of the reserved ids, in id order.
inline constexpr std::string_view kReservedTokens[kReservedCount] = {
    "<pad>", "<unk>", "<s>", "</s>", "[SEP]"};

bool is_reserved(TokenId id);

/// Word-level vocabulary. Ids are dense and the reserved tokens occupy
/// 0..4. Immutable after construction.
class Vocabulary {
 public:
  /// Vocabulary holding only the reserved tokens.
  Vocabulary();

  /// Reserved tokens followed by `words` in order. Duplicates and reserved
  /// surface strings are rejected.
  static Vocabulary from_words(std::vector<std::string> words);

  std::size_t size() const { return tokens_.size(); }

  /// Id of `word`, or kUnk when absent. Reserved surface strings map to
  /// kUnk too, so plain text can never produce a control id.
  TokenId id_of(std::string_view word) const;
  bool contains(std::string_view word) const;

  /// Throws RangeError for ids outside [0, size).
  const std::string& token(TokenId id) const;

  const std::vector<std::string>& tokens() const { return tokens_; }

  /// One token per line; the line index is the id.
  void write(std::ostream& out) const;
  static Vocabulary read(std::istream& in);
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

/// Keeps the (max_size - 5) most frequent words with frequency at least
/// min_frequency; ties are broken by byte-wise lexicographic order.
Vocabulary build_vocabulary(std::span<const std::string> texts, std::size_t max_size,
                            std::size_t min_frequency = 1);

struct TokenSequence {
  std::vector<TokenId> ids;

  std::size_t length() const { return ids.size(); }
  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
};

/// Whitespace split of already-normalized text; unknown words become kUnk.
TokenSequence tokenize(std::string_view text, const Vocabulary& vocab);

/// Joins token surfaces with single spaces. Throws RangeError on ids outside
/// the vocabulary.
std::string detokenize(const TokenSequence& seq, const Vocabulary& vocab);

/// Keeps the first max_len ids. Throws ParameterError when max_len < 1.
TokenSequence truncate(const TokenSequence& seq, std::size_t max_len);

inline constexpr std::size_t kInputTokenLimit = 512;
inline constexpr std::size_t kTargetTokenLimit = 64;

}  // namespace headline::preprocess
