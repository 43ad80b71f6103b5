#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace headline::corpus {

enum class Category { kIslam, kHinduism, kChristianity, kBuddhism, kOthers };
enum class Aspect { kReport, kFestival, kEducation, kCulture };
enum class Sentiment { kPositive, kNegative, kNeutral };

inline constexpr std::array<Category, 5> kCategories = {
    Category::kIslam, Category::kHinduism, Category::kChristianity, Category::kBuddhism,
    Category::kOthers};
inline constexpr std::array<Aspect, 4> kAspects = {Aspect::kReport, Aspect::kFestival,
                                                   Aspect::kEducation, Aspect::kCulture};
inline constexpr std::array<Sentiment, 3> kSentiments = {
    Sentiment::kPositive, Sentiment::kNegative, Sentiment::kNeutral};

std::string_view to_string(Category c);
std::string_view to_string(Aspect a);
std::string_view to_string(Sentiment s);

/// Case-insensitive, whitespace-trimmed label parsing. Throws ValidationError
/// for strings outside the closed label sets.
Category parse_category(std::string_view s);
Aspect parse_aspect(std::string_view s);
Sentiment parse_sentiment(std::string_view s);

/// One annotated article. Text is stored as read; labels are canonical.
struct NewsRecord {
  std::string article;
  std::string headline;
  Category category = Category::kIslam;
  Aspect aspect = Aspect::kReport;
  Sentiment sentiment = Sentiment::kPositive;

  friend bool operator==(const NewsRecord&, const NewsRecord&) = default;
};

enum class Format { kJsonl, kCsv };

Format parse_format(std::string_view s);
/// jsonl unless the extension is .csv.
Format format_from_path(const std::filesystem::path& path);

/// Reads and validates a corpus. Errors name the 1-based line and field.
std::vector<NewsRecord> load_corpus(const std::filesystem::path& path, Format format);
std::vector<NewsRecord> read_jsonl(std::istream& in);
std::vector<NewsRecord> read_csv(std::istream& in);

void write_jsonl(std::ostream& out, std::span<const NewsRecord> records);
void write_csv(std::ostream& out, std::span<const NewsRecord> records);
void save_corpus(const std::filesystem::path& path, std::span<const NewsRecord> records,
                 Format format);

nlohmann::ordered_json to_json(const NewsRecord& record);

struct SplitCounts {
  std::size_t train = 1870;
  std::size_t validation = 150;
  std::size_t test = 500;

  std::size_t total() const { return train + validation + test; }
};

/// Record ids (indices into the corpus) of each part.
struct CorpusSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;

  friend bool operator==(const CorpusSplit&, const CorpusSplit&) = default;
};

/// Seeded Fisher-Yates shuffle of 0..n-1, partitioned train, validation,
/// test. Throws SizeError when the counts do not sum to the record total.
CorpusSplit split_corpus(std::size_t record_count, const SplitCounts& counts, std::uint64_t seed);

template <typename T>
CorpusSplit split_corpus(std::span<const T> records, const SplitCounts& counts,
                         std::uint64_t seed) {
  return split_corpus(records.size(), counts, seed);
}

nlohmann::json to_json(const CorpusSplit& split);
CorpusSplit split_from_json(const nlohmann::json& j);

using WordTokenizer = std::function<std::vector<std::string>(std::string_view)>;
using SentenceSegmenter = std::function<std::vector<std::string>(std::string_view)>;

/// Statistics tokenizer: normalize, split on Unicode whitespace, strip
/// leading and trailing punctuation, drop empty residues.
std::vector<std::string> word_tokenize(std::string_view text);

/// Splits on danda, '?', '!' and '.'; consecutive terminators count once and
/// blank segments are dropped.
std::vector<std::string> segment_sentences(std::string_view text);

enum class NgramAveraging { kMicro, kMacro };
enum class NgramCounting { kMultiset, kDistinct };

struct NoveltyOptions {
  NgramAveraging averaging = NgramAveraging::kMicro;
  NgramCounting counting = NgramCounting::kMultiset;
};

/// Percentage of headline n-grams absent from the paired article's n-gram
/// set. Headlines shorter than n contribute nothing. Returns 0 when no
/// headline has n tokens. Throws ParameterError when n < 1.
double novel_ngram_rate(std::span<const NewsRecord> records, int n,
                        const WordTokenizer& tokenizer = word_tokenize,
                        const NoveltyOptions& options = {});

enum class TextField { kArticle, kHeadline };

/// bin index -> number of records whose word count lies in
/// [bin * width, (bin + 1) * width). Empty bins are omitted.
using Histogram = std::map<std::size_t, std::size_t>;

Histogram length_histogram(std::span<const NewsRecord> records, TextField field,
                           std::size_t bin_width, const WordTokenizer& tokenizer = word_tokenize);

struct TextStatistics {
  double avg_words = 0.0;
  double avg_sentences = 0.0;
  std::size_t vocab_size = 0;
};

struct CorpusStatistics {
  std::array<std::array<std::size_t, 4>, 5> category_by_aspect{};
  std::array<std::array<std::size_t, 3>, 5> category_by_sentiment{};
  std::array<std::size_t, 5> category_totals{};
  std::array<std::size_t, 4> aspect_totals{};
  std::array<std::size_t, 3> sentiment_totals{};
  std::size_t total = 0;

  TextStatistics article;
  TextStatistics headline;

  /// Index k holds the rate for n = k + 1.
  std::array<double, 4> novel_ngram_rate{};

  std::size_t article_bin_width = 100;
  std::size_t headline_bin_width = 2;
  Histogram article_length_histogram;
  Histogram headline_length_histogram;
};

struct StatisticsOptions {
  std::size_t article_bin_width = 100;
  std::size_t headline_bin_width = 2;
  NoveltyOptions novelty;
};

/// Per-record work runs in parallel; every reduction is an integer sum or a
/// fixed-order floating sum, so results do not depend on the thread count.
/// Throws EmptyCorpusError on an empty record list.
CorpusStatistics compute_statistics(std::span<const NewsRecord> records,
                                    const WordTokenizer& tokenizer = word_tokenize,
                                    const SentenceSegmenter& segmenter = segment_sentences,
                                    const StatisticsOptions& options = {});

nlohmann::ordered_json to_json(const CorpusStatistics& stats);

/// Tab-separated tables: label cross-tabulation, text statistics, novelty.
std::string render_statistics_tsv(const CorpusStatistics& stats);

/// "bin,bin_start,count" rows for plotting.
std::string render_histogram_csv(const Histogram& histogram, std::size_t bin_width);

}  // namespace headline::corpus
