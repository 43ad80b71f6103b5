#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>

#include "headline/corpus.hpp"
#include "headline/preprocess.hpp"

namespace headline::fusion {

inline constexpr std::string_view kDefaultTaskPrefix = "Summarize the Article as Headlines";

struct FusionConfig {
  bool include_category = true;
  bool include_aspect = true;
  bool include_sentiment = true;
  preprocess::TokenId separator = preprocess::kSep;
  std::string task_prefix = std::string(kDefaultTaskPrefix);

  /// Config with every context flag cleared: the content-only input.
  static FusionConfig baseline() {
    FusionConfig c;
    c.include_category = c.include_aspect = c.include_sentiment = false;
    return c;
  }
  std::size_t context_segment_count() const {
    return static_cast<std::size_t>(include_category) + static_cast<std::size_t>(include_aspect) +
           static_cast<std::size_t>(include_sentiment);
  }
};

enum class Segment { kPrefix = 0, kArticle, kCategory, kAspect, kSentiment };

struct Span {
  std::size_t start = 0;
  std::size_t length = 0;
  friend bool operator==(const Span&, const Span&) = default;
};

/// Model input plus where each segment landed. Context spans cover the label
/// tokens only; the separator sits immediately before each of them.
struct FusionInput {
  preprocess::TokenSequence ids;
  std::array<Span, 5> segments{};

  const Span& span(Segment s) const { return segments[static_cast<std::size_t>(s)]; }
  friend bool operator==(const FusionInput&, const FusionInput&) = default;
};

/// task_prefix followed by the normalized article, head-truncated to
/// max_len. Throws EmptyInputError when the article normalizes to nothing.
FusionInput build_baseline_input(const corpus::NewsRecord& record, const preprocess::Vocabulary& vocab,
                                 const FusionConfig& config, std::size_t max_len);

/// prefix, article, then [SEP]+label for each enabled context segment in the
/// order category, aspect, sentiment. Truncation only shortens the article,
/// so context always survives; LengthError when max_len cannot hold the
/// prefix and the context. With no context flags the result equals
/// build_baseline_input.
FusionInput build_multigen_input(const corpus::NewsRecord& record, const preprocess::Vocabulary& vocab,
                                 const FusionConfig& config, std::size_t max_len);

/// Human-readable rendering with [SEP] visible.
std::string render(const FusionInput& input, const preprocess::Vocabulary& vocab);

/// Words that must be in the vocabulary for prefix and label tokens to avoid
/// <unk>: the normalized task prefix and every canonical label string.
std::vector<std::string> control_texts(const FusionConfig& config);

/// `id <TAB> rendered-input` per record.
void write_debug_dump(std::ostream& out, std::span<const std::size_t> ids,
                      std::span<const FusionInput> inputs, const preprocess::Vocabulary& vocab);

}  // namespace headline::fusion
