#include "headline/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "headline/error.hpp"
#include "headline/preprocess.hpp"
#include "headline/rng.hpp"
#include "headline/unicode.hpp"

namespace headline::corpus {

namespace {

constexpr std::array<std::string_view, 5> kCategoryNames = {"Islam", "Hinduism", "Christianity",
                                                            "Buddhism", "Others"};
constexpr std::array<std::string_view, 4> kAspectNames = {"Report", "Festival", "Education",
                                                          "Culture"};
constexpr std::array<std::string_view, 3> kSentimentNames = {"Positive", "Negative", "Neutral"};
constexpr std::array<std::string_view, 5> kFieldNames = {"article", "headline", "category",
                                                         "aspect", "sentiment"};

std::string trim_lower(std::string_view s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  auto begin = std::find_if(s.begin(), s.end(), not_space);
  auto end = std::find_if(s.rbegin(), s.rend(), not_space).base();
  std::string out;
  if (begin < end) out.assign(begin, end);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

template <typename Enum, std::size_t N>
Enum parse_label(std::string_view s, const std::array<std::string_view, N>& names,
                 std::string_view what) {
  const std::string key = trim_lower(s);
  for (std::size_t i = 0; i < N; ++i) {
    if (key == trim_lower(names[i])) return static_cast<Enum>(i);
  }
  throw ValidationError("unknown " + std::string(what) + " label '" + std::string(s) + "'");
}

std::string where(std::size_t line) { return "line " + std::to_string(line) + ": "; }

NewsRecord make_record(const std::array<std::string, 5>& fields, std::size_t line) {
  NewsRecord r;
  r.article = fields[0];
  r.headline = fields[1];
  try {
    r.category = parse_category(fields[2]);
    r.aspect = parse_aspect(fields[3]);
    r.sentiment = parse_sentiment(fields[4]);
  } catch (const ValidationError& e) {
    throw ValidationError(where(line) + e.what());
  }
  if (preprocess::normalize_text(r.article).empty()) {
    throw ValidationError(where(line) + "field 'article' is empty after normalization");
  }
  if (preprocess::normalize_text(r.headline).empty()) {
    throw ValidationError(where(line) + "field 'headline' is empty after normalization");
  }
  return r;
}

void check_utf8(std::string_view bytes, std::size_t line) {
  if (const auto bad = unicode::find_invalid_utf8(bytes)) {
    throw DecodeError(where(line) + "invalid UTF-8 at byte " + std::to_string(*bad));
  }
}

// RFC 4180 record reader. Accepts LF or CRLF line ends and quoted fields with
// embedded separators, quotes ("") and line breaks.
class CsvReader {
 public:
  explicit CsvReader(std::string text) : text_(std::move(text)) {
    if (text_.starts_with("\xEF\xBB\xBF")) pos_ = 3;
  }

  // Returns false at end of input. start_line receives the 1-based line on
  // which the record begins.
  bool next(std::vector<std::string>& fields, std::size_t& start_line) {
    fields.clear();
    while (pos_ < text_.size() && (text_[pos_] == '\n' || text_[pos_] == '\r')) {
      if (text_[pos_] == '\n') ++line_;
      ++pos_;
    }
    if (pos_ >= text_.size()) return false;
    start_line = line_;
    std::string field;
    bool quoted = false;
    bool was_quoted = false;
    while (pos_ < text_.size()) {
      const char c = text_[pos_++];
      if (quoted) {
        if (c == '"') {
          if (pos_ < text_.size() && text_[pos_] == '"') {
            field.push_back('"');
            ++pos_;
          } else {
            quoted = false;
          }
        } else {
          if (c == '\n') ++line_;
          field.push_back(c);
        }
        continue;
      }
      if (c == '"' && field.empty() && !was_quoted) {
        quoted = was_quoted = true;
      } else if (c == ',') {
        fields.push_back(std::move(field));
        field.clear();
        was_quoted = false;
      } else if (c == '\n' || c == '\r') {
        if (c == '\r' && pos_ < text_.size() && text_[pos_] == '\n') ++pos_;
        ++line_;
        break;
      } else {
        field.push_back(c);
      }
    }
    if (quoted) throw SchemaError(where(start_line) + "unterminated quoted field");
    fields.push_back(std::move(field));
    return true;
  }

 private:
  std::string text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string ngram_key(const std::vector<std::string>& tokens, std::size_t start, int n) {
  std::string key;
  for (int k = 0; k < n; ++k) {
    if (k > 0) key.push_back('\x1f');
    key += tokens[start + static_cast<std::size_t>(k)];
  }
  return key;
}

struct NoveltyCount {
  std::size_t novel = 0;
  std::size_t total = 0;
};

NoveltyCount count_novel(const std::vector<std::string>& article,
                         const std::vector<std::string>& headline, int n, NgramCounting counting) {
  NoveltyCount out;
  const auto un = static_cast<std::size_t>(n);
  if (headline.size() < un) return out;
  std::unordered_set<std::string> article_grams;
  for (std::size_t i = 0; i + un <= article.size(); ++i) {
    article_grams.insert(ngram_key(article, i, n));
  }
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i + un <= headline.size(); ++i) {
    std::string key = ngram_key(headline, i, n);
    if (counting == NgramCounting::kDistinct && !seen.insert(key).second) continue;
    ++out.total;
    if (!article_grams.contains(key)) ++out.novel;
  }
  return out;
}

double aggregate_novelty(const std::vector<NoveltyCount>& counts, NgramAveraging averaging) {
  if (averaging == NgramAveraging::kMicro) {
    std::size_t novel = 0, total = 0;
    for (const auto& c : counts) {
      novel += c.novel;
      total += c.total;
    }
    return total == 0 ? 0.0 : 100.0 * static_cast<double>(novel) / static_cast<double>(total);
  }
  double sum = 0.0;
  std::size_t used = 0;
  for (const auto& c : counts) {
    if (c.total == 0) continue;
    sum += static_cast<double>(c.novel) / static_cast<double>(c.total);
    ++used;
  }
  return used == 0 ? 0.0 : 100.0 * sum / static_cast<double>(used);
}

}  // namespace

std::string_view to_string(Category c) { return kCategoryNames[static_cast<std::size_t>(c)]; }
std::string_view to_string(Aspect a) { return kAspectNames[static_cast<std::size_t>(a)]; }
std::string_view to_string(Sentiment s) { return kSentimentNames[static_cast<std::size_t>(s)]; }

Category parse_category(std::string_view s) {
  return parse_label<Category>(s, kCategoryNames, "category");
}
Aspect parse_aspect(std::string_view s) { return parse_label<Aspect>(s, kAspectNames, "aspect"); }
Sentiment parse_sentiment(std::string_view s) {
  return parse_label<Sentiment>(s, kSentimentNames, "sentiment");
}

Format parse_format(std::string_view s) {
  const std::string key = trim_lower(s);
  if (key == "jsonl") return Format::kJsonl;
  if (key == "csv") return Format::kCsv;
  throw ParameterError("unknown corpus format '" + std::string(s) + "'");
}

Format format_from_path(const std::filesystem::path& path) {
  return trim_lower(path.extension().string()) == ".csv" ? Format::kCsv : Format::kJsonl;
}

std::vector<NewsRecord> read_jsonl(std::istream& in) {
  std::vector<NewsRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    check_utf8(line, line_no);
    nlohmann::json row;
    try {
      row = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw SchemaError(where(line_no) + "malformed JSON (" + e.what() + ")");
    }
    if (!row.is_object()) throw SchemaError(where(line_no) + "row is not a JSON object");
    for (const auto& [key, value] : row.items()) {
      if (std::find(kFieldNames.begin(), kFieldNames.end(), key) == kFieldNames.end()) {
        throw SchemaError(where(line_no) + "unexpected field '" + key + "'");
      }
    }
    std::array<std::string, 5> fields;
    for (std::size_t f = 0; f < kFieldNames.size(); ++f) {
      const std::string name(kFieldNames[f]);
      const auto it = row.find(name);
      if (it == row.end()) throw SchemaError(where(line_no) + "missing field '" + name + "'");
      if (!it->is_string()) {
        throw SchemaError(where(line_no) + "field '" + name + "' is not a string");
      }
      fields[f] = it->get<std::string>();
    }
    records.push_back(make_record(fields, line_no));
  }
  return records;
}

std::vector<NewsRecord> read_csv(std::istream& in) {
  std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  {
    std::size_t line = 1, begin = 0;
    for (std::size_t i = 0; i <= text.size(); ++i) {
      if (i == text.size() || text[i] == '\n') {
        check_utf8(std::string_view(text).substr(begin, i - begin), line);
        ++line;
        begin = i + 1;
      }
    }
  }
  CsvReader reader(std::move(text));
  std::vector<std::string> cells;
  std::size_t line = 0;
  if (!reader.next(cells, line)) return {};

  std::array<std::size_t, 5> column{};
  for (std::size_t f = 0; f < kFieldNames.size(); ++f) {
    const auto it = std::find_if(cells.begin(), cells.end(), [&](const std::string& c) {
      return trim_lower(c) == kFieldNames[f];
    });
    if (it == cells.end()) {
      throw SchemaError(where(line) + "header is missing column '" + std::string(kFieldNames[f]) +
                        "'");
    }
    column[f] = static_cast<std::size_t>(it - cells.begin());
  }
  if (cells.size() != kFieldNames.size()) {
    throw SchemaError(where(line) + "header must have exactly the five columns");
  }

  std::vector<NewsRecord> records;
  while (reader.next(cells, line)) {
    if (cells.size() == 1 && cells[0].find_first_not_of(" \t") == std::string::npos) continue;
    std::array<std::string, 5> fields;
    for (std::size_t f = 0; f < kFieldNames.size(); ++f) {
      if (column[f] >= cells.size()) {
        throw SchemaError(where(line) + "missing field '" + std::string(kFieldNames[f]) + "'");
      }
      fields[f] = cells[column[f]];
    }
    if (cells.size() > kFieldNames.size()) {
      throw SchemaError(where(line) + "row has more fields than the header");
    }
    records.push_back(make_record(fields, line));
  }
  return records;
}

std::vector<NewsRecord> load_corpus(const std::filesystem::path& path, Format format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus " + path.string());
  return format == Format::kCsv ? read_csv(in) : read_jsonl(in);
}

nlohmann::ordered_json to_json(const NewsRecord& record) {
  nlohmann::ordered_json j;
  j["article"] = record.article;
  j["headline"] = record.headline;
  j["category"] = to_string(record.category);
  j["aspect"] = to_string(record.aspect);
  j["sentiment"] = to_string(record.sentiment);
  return j;
}

void write_jsonl(std::ostream& out, std::span<const NewsRecord> records) {
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

void write_csv(std::ostream& out, std::span<const NewsRecord> records) {
  out << "article,headline,category,aspect,sentiment\r\n";
  for (const auto& r : records) {
    out << csv_field(r.article) << ',' << csv_field(r.headline) << ',' << to_string(r.category)
        << ',' << to_string(r.aspect) << ',' << to_string(r.sentiment) << "\r\n";
  }
}

void save_corpus(const std::filesystem::path& path, std::span<const NewsRecord> records,
                 Format format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write corpus " + path.string());
  if (format == Format::kCsv) {
    write_csv(out, records);
  } else {
    write_jsonl(out, records);
  }
  if (!out) throw IoError("failed writing corpus " + path.string());
}

CorpusSplit split_corpus(std::size_t record_count, const SplitCounts& counts, std::uint64_t seed) {
  if (counts.total() != record_count) {
    throw SizeError("split counts " + std::to_string(counts.train) + "/" +
                    std::to_string(counts.validation) + "/" + std::to_string(counts.test) +
                    " sum to " + std::to_string(counts.total()) + ", corpus has " +
                    std::to_string(record_count));
  }
  std::vector<std::size_t> ids(record_count);
  for (std::size_t i = 0; i < record_count; ++i) ids[i] = i;
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(ids));

  CorpusSplit split;
  split.seed = seed;
  auto cursor = ids.begin();
  auto take = [&](std::size_t n) {
    std::vector<std::size_t> part(cursor, cursor + static_cast<std::ptrdiff_t>(n));
    cursor += static_cast<std::ptrdiff_t>(n);
    return part;
  };
  split.train = take(counts.train);
  split.validation = take(counts.validation);
  split.test = take(counts.test);
  return split;
}

nlohmann::json to_json(const CorpusSplit& split) {
  return {{"seed", split.seed},
          {"train", split.train},
          {"validation", split.validation},
          {"test", split.test}};
}

CorpusSplit split_from_json(const nlohmann::json& j) {
  try {
    CorpusSplit s;
    s.seed = j.at("seed").get<std::uint64_t>();
    s.train = j.at("train").get<std::vector<std::size_t>>();
    s.validation = j.at("validation").get<std::vector<std::size_t>>();
    s.test = j.at("test").get<std::vector<std::size_t>>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("split: ") + e.what());
  }
}

std::vector<std::string> word_tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  for (const auto& piece : unicode::split_whitespace(preprocess::normalize_text(text))) {
    const auto cps = unicode::decode(piece);
    std::size_t b = 0, e = cps.size();
    while (b < e && unicode::is_punctuation(cps[b])) ++b;
    while (e > b && unicode::is_punctuation(cps[e - 1])) --e;
    if (b == e) continue;
    tokens.push_back(unicode::encode({cps.begin() + static_cast<std::ptrdiff_t>(b),
                                      cps.begin() + static_cast<std::ptrdiff_t>(e)}));
  }
  return tokens;
}

std::vector<std::string> segment_sentences(std::string_view text) {
  std::vector<std::string> sentences;
  std::vector<char32_t> current;
  auto flush = [&] {
    const bool blank = std::all_of(current.begin(), current.end(),
                                   [](char32_t c) { return unicode::is_whitespace(c); });
    if (!blank) {
      std::size_t b = 0, e = current.size();
      while (unicode::is_whitespace(current[b])) ++b;
      while (unicode::is_whitespace(current[e - 1])) --e;
      sentences.push_back(unicode::encode({current.begin() + static_cast<std::ptrdiff_t>(b),
                                           current.begin() + static_cast<std::ptrdiff_t>(e)}));
    }
    current.clear();
  };
  for (char32_t c : unicode::decode(text)) {
    if (c == U'।' || c == U'?' || c == U'!' || c == U'.') {
      flush();
    } else {
      current.push_back(c);
    }
  }
  flush();
  return sentences;
}

double novel_ngram_rate(std::span<const NewsRecord> records, int n,
                        const WordTokenizer& tokenizer, const NoveltyOptions& options) {
  if (n < 1) throw ParameterError("novel_ngram_rate: n must be >= 1");
  std::vector<NoveltyCount> counts(records.size());
  const auto count = static_cast<std::ptrdiff_t>(records.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const auto& r = records[static_cast<std::size_t>(i)];
    counts[static_cast<std::size_t>(i)] =
        count_novel(tokenizer(r.article), tokenizer(r.headline), n, options.counting);
  }
  return aggregate_novelty(counts, options.averaging);
}

Histogram length_histogram(std::span<const NewsRecord> records, TextField field,
                           std::size_t bin_width, const WordTokenizer& tokenizer) {
  if (bin_width < 1) throw ParameterError("length_histogram: bin_width must be >= 1");
  Histogram h;
  for (const auto& r : records) {
    const auto words = tokenizer(field == TextField::kArticle ? r.article : r.headline).size();
    ++h[words / bin_width];
  }
  return h;
}

CorpusStatistics compute_statistics(std::span<const NewsRecord> records,
                                    const WordTokenizer& tokenizer,
                                    const SentenceSegmenter& segmenter,
                                    const StatisticsOptions& options) {
  if (records.empty()) throw EmptyCorpusError("compute_statistics: no records");
  if (options.article_bin_width < 1 || options.headline_bin_width < 1) {
    throw ParameterError("compute_statistics: bin widths must be >= 1");
  }

  struct PerRecord {
    std::vector<std::string> article_tokens;
    std::vector<std::string> headline_tokens;
    std::size_t article_sentences = 0;
    std::size_t headline_sentences = 0;
    std::array<NoveltyCount, 4> novelty{};
  };
  std::vector<PerRecord> per(records.size());
  const auto count = static_cast<std::ptrdiff_t>(records.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const auto& r = records[static_cast<std::size_t>(i)];
    auto& p = per[static_cast<std::size_t>(i)];
    p.article_tokens = tokenizer(r.article);
    p.headline_tokens = tokenizer(r.headline);
    p.article_sentences = segmenter(r.article).size();
    p.headline_sentences = segmenter(r.headline).size();
    for (int n = 1; n <= 4; ++n) {
      p.novelty[static_cast<std::size_t>(n - 1)] =
          count_novel(p.article_tokens, p.headline_tokens, n, options.novelty.counting);
    }
  }

  CorpusStatistics s;
  s.article_bin_width = options.article_bin_width;
  s.headline_bin_width = options.headline_bin_width;
  std::size_t article_words = 0, headline_words = 0, article_sents = 0, headline_sents = 0;
  std::unordered_set<std::string> article_vocab, headline_vocab;
  std::array<std::vector<NoveltyCount>, 4> novelty;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const auto& p = per[i];
    const auto c = static_cast<std::size_t>(r.category);
    ++s.category_by_aspect[c][static_cast<std::size_t>(r.aspect)];
    ++s.category_by_sentiment[c][static_cast<std::size_t>(r.sentiment)];
    ++s.category_totals[c];
    ++s.aspect_totals[static_cast<std::size_t>(r.aspect)];
    ++s.sentiment_totals[static_cast<std::size_t>(r.sentiment)];
    ++s.total;
    article_words += p.article_tokens.size();
    headline_words += p.headline_tokens.size();
    article_sents += p.article_sentences;
    headline_sents += p.headline_sentences;
    article_vocab.insert(p.article_tokens.begin(), p.article_tokens.end());
    headline_vocab.insert(p.headline_tokens.begin(), p.headline_tokens.end());
    for (std::size_t k = 0; k < 4; ++k) novelty[k].push_back(p.novelty[k]);
    ++s.article_length_histogram[p.article_tokens.size() / options.article_bin_width];
    ++s.headline_length_histogram[p.headline_tokens.size() / options.headline_bin_width];
  }
  const double n = static_cast<double>(s.total);
  s.article = {static_cast<double>(article_words) / n, static_cast<double>(article_sents) / n,
               article_vocab.size()};
  s.headline = {static_cast<double>(headline_words) / n, static_cast<double>(headline_sents) / n,
                headline_vocab.size()};
  for (std::size_t k = 0; k < 4; ++k) {
    s.novel_ngram_rate[k] = aggregate_novelty(novelty[k], options.novelty.averaging);
  }
  return s;
}

nlohmann::ordered_json to_json(const CorpusStatistics& s) {
  nlohmann::ordered_json j;
  j["total"] = s.total;
  nlohmann::ordered_json cats;
  for (auto c : kCategories) {
    const auto ci = static_cast<std::size_t>(c);
    nlohmann::ordered_json row;
    for (auto a : kAspects) row["aspect"][std::string(to_string(a))] = s.category_by_aspect[ci][static_cast<std::size_t>(a)];
    for (auto m : kSentiments) {
      row["sentiment"][std::string(to_string(m))] = s.category_by_sentiment[ci][static_cast<std::size_t>(m)];
    }
    row["total"] = s.category_totals[ci];
    cats[std::string(to_string(c))] = row;
  }
  j["categories"] = cats;
  for (auto a : kAspects) j["aspect_totals"][std::string(to_string(a))] = s.aspect_totals[static_cast<std::size_t>(a)];
  for (auto m : kSentiments) {
    j["sentiment_totals"][std::string(to_string(m))] = s.sentiment_totals[static_cast<std::size_t>(m)];
  }
  auto text = [](const TextStatistics& t) {
    nlohmann::ordered_json o;
    o["avg_words"] = t.avg_words;
    o["avg_sentences"] = t.avg_sentences;
    o["vocab_size"] = t.vocab_size;
    return o;
  };
  j["article"] = text(s.article);
  j["headline"] = text(s.headline);
  for (std::size_t k = 0; k < 4; ++k) {
    j["novel_ngram_rate"][std::to_string(k + 1)] = s.novel_ngram_rate[k];
  }
  auto hist = [](const Histogram& h, std::size_t width) {
    nlohmann::ordered_json o;
    o["bin_width"] = width;
    nlohmann::ordered_json bins = nlohmann::ordered_json::array();
    for (const auto& [bin, count] : h) bins.push_back({bin, count});
    o["bins"] = bins;
    return o;
  };
  j["article_length_histogram"] = hist(s.article_length_histogram, s.article_bin_width);
  j["headline_length_histogram"] = hist(s.headline_length_histogram, s.headline_bin_width);
  return j;
}

std::string render_statistics_tsv(const CorpusStatistics& s) {
  std::ostringstream out;
  out << "category";
  for (auto a : kAspects) out << '\t' << to_string(a);
  for (auto m : kSentiments) out << '\t' << to_string(m);
  out << "\ttotal\n";
  for (auto c : kCategories) {
    const auto ci = static_cast<std::size_t>(c);
    out << to_string(c);
    for (std::size_t a = 0; a < 4; ++a) out << '\t' << s.category_by_aspect[ci][a];
    for (std::size_t m = 0; m < 3; ++m) out << '\t' << s.category_by_sentiment[ci][m];
    out << '\t' << s.category_totals[ci] << '\n';
  }
  out << "Total";
  for (auto v : s.aspect_totals) out << '\t' << v;
  for (auto v : s.sentiment_totals) out << '\t' << v;
  out << '\t' << s.total << "\n\n";

  out << "field\tavg_words\tavg_sentences\tvocab_size\n";
  out.setf(std::ios::fixed);
  out.precision(2);
  out << "article\t" << s.article.avg_words << '\t' << s.article.avg_sentences << '\t'
      << s.article.vocab_size << '\n';
  out << "headline\t" << s.headline.avg_words << '\t' << s.headline.avg_sentences << '\t'
      << s.headline.vocab_size << "\n\n";

  out << "n\tnovel_percent\n";
  for (std::size_t k = 0; k < 4; ++k) out << k + 1 << '\t' << s.novel_ngram_rate[k] << '\n';
  return out.str();
}

std::string render_histogram_csv(const Histogram& histogram, std::size_t bin_width) {
  std::ostringstream out;
  out << "bin,bin_start,count\n";
  for (const auto& [bin, count] : histogram) {
    out << bin << ',' << bin * bin_width << ',' << count << '\n';
  }
  return out.str();
}

}  // namespace headline::corpus
