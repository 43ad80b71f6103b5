#include "headline/fusion.hpp"

#include <ostream>

#include "headline/error.hpp"

namespace headline::fusion {

using preprocess::TokenId;
using preprocess::TokenSequence;

namespace {

TokenSequence tokenize_normalized(std::string_view text, const preprocess::Vocabulary& vocab) {
  return preprocess::tokenize(preprocess::normalize_text(text), vocab);
}

TokenSequence article_tokens(const corpus::NewsRecord& record, const preprocess::Vocabulary& vocab) {
  TokenSequence article = tokenize_normalized(record.article, vocab);
  if (article.ids.empty()) throw EmptyInputError("article is empty after normalization");
  return article;
}

void check_separator(const FusionConfig& config) {
  if (!preprocess::is_reserved(config.separator)) {
    throw ConfigError("fusion separator must be a reserved token id");
  }
}

}  // namespace

FusionInput build_baseline_input(const corpus::NewsRecord& record,
                                 const preprocess::Vocabulary& vocab, const FusionConfig& config,
                                 std::size_t max_len) {
  if (max_len < 1) throw ParameterError("max_len must be >= 1");
  const TokenSequence prefix = tokenize_normalized(config.task_prefix, vocab);
  const TokenSequence article = article_tokens(record, vocab);

  FusionInput input;
  input.ids.ids = prefix.ids;
  input.ids.ids.insert(input.ids.ids.end(), article.ids.begin(), article.ids.end());
  input.ids = preprocess::truncate(input.ids, max_len);

  const std::size_t total = input.ids.length();
  const std::size_t prefix_len = std::min(prefix.length(), total);
  input.segments[static_cast<std::size_t>(Segment::kPrefix)] = {0, prefix_len};
  input.segments[static_cast<std::size_t>(Segment::kArticle)] = {prefix_len, total - prefix_len};
  for (auto s : {Segment::kCategory, Segment::kAspect, Segment::kSentiment}) {
    input.segments[static_cast<std::size_t>(s)] = {total, 0};
  }
  return input;
}

FusionInput build_multigen_input(const corpus::NewsRecord& record,
                                 const preprocess::Vocabulary& vocab, const FusionConfig& config,
                                 std::size_t max_len) {
  check_separator(config);
  if (config.context_segment_count() == 0) {
    return build_baseline_input(record, vocab, config, max_len);
  }
  if (max_len < 1) throw ParameterError("max_len must be >= 1");

  const TokenSequence prefix = tokenize_normalized(config.task_prefix, vocab);
  const TokenSequence article = article_tokens(record, vocab);

  struct Context {
    Segment segment;
    TokenSequence tokens;
  };
  std::vector<Context> context;
  if (config.include_category) {
    context.push_back({Segment::kCategory, tokenize_normalized(corpus::to_string(record.category), vocab)});
  }
  if (config.include_aspect) {
    context.push_back({Segment::kAspect, tokenize_normalized(corpus::to_string(record.aspect), vocab)});
  }
  if (config.include_sentiment) {
    context.push_back({Segment::kSentiment, tokenize_normalized(corpus::to_string(record.sentiment), vocab)});
  }
  std::size_t context_len = 0;
  for (const auto& c : context) context_len += 1 + c.tokens.length();

  const std::size_t reserved = prefix.length() + context_len;
  if (max_len < reserved) {
    throw LengthError("max_len " + std::to_string(max_len) + " cannot hold prefix and context (" +
                      std::to_string(reserved) + " tokens)");
  }
  const std::size_t article_len = std::min(article.length(), max_len - reserved);

  FusionInput input;
  auto& ids = input.ids.ids;
  ids.reserve(reserved + article_len);
  ids = prefix.ids;
  input.segments[static_cast<std::size_t>(Segment::kPrefix)] = {0, prefix.length()};
  input.segments[static_cast<std::size_t>(Segment::kArticle)] = {ids.size(), article_len};
  ids.insert(ids.end(), article.ids.begin(),
             article.ids.begin() + static_cast<std::ptrdiff_t>(article_len));
  for (auto s : {Segment::kCategory, Segment::kAspect, Segment::kSentiment}) {
    input.segments[static_cast<std::size_t>(s)] = {ids.size(), 0};
  }
  for (const auto& c : context) {
    ids.push_back(config.separator);
    auto& span = input.segments[static_cast<std::size_t>(c.segment)];
    span = {ids.size(), c.tokens.length()};
    ids.insert(ids.end(), c.tokens.ids.begin(), c.tokens.ids.end());
  }
  // Omitted segments sit at the position where they would have started.
  std::size_t cursor = input.span(Segment::kArticle).start + article_len;
  for (auto s : {Segment::kCategory, Segment::kAspect, Segment::kSentiment}) {
    auto& span = input.segments[static_cast<std::size_t>(s)];
    if (span.length == 0) {
      span.start = cursor;
    } else {
      cursor = span.start + span.length;
    }
  }
  return input;
}

std::string render(const FusionInput& input, const preprocess::Vocabulary& vocab) {
  return preprocess::detokenize(input.ids, vocab);
}

std::vector<std::string> control_texts(const FusionConfig& config) {
  std::vector<std::string> texts;
  texts.push_back(preprocess::normalize_text(config.task_prefix));
  for (auto c : corpus::kCategories) texts.push_back(preprocess::normalize_text(corpus::to_string(c)));
  for (auto a : corpus::kAspects) texts.push_back(preprocess::normalize_text(corpus::to_string(a)));
  for (auto s : corpus::kSentiments) texts.push_back(preprocess::normalize_text(corpus::to_string(s)));
  return texts;
}

void write_debug_dump(std::ostream& out, std::span<const std::size_t> ids,
                      std::span<const FusionInput> inputs, const preprocess::Vocabulary& vocab) {
  if (ids.size() != inputs.size()) throw PairingError("debug dump: id and input counts differ");
  for (std::size_t i = 0; i < ids.size(); ++i) out << ids[i] << '\t' << render(inputs[i], vocab) << '\n';
}

}  // namespace headline::fusion
