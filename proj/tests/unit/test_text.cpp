#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "headline/corpus.hpp"
#include "headline/error.hpp"
#include "headline/harness.hpp"
#include "headline/preprocess.hpp"
#include "headline/unicode.hpp"

using namespace headline;
namespace fs = std::filesystem;

TEST(Unicode, Utf8Validation) {
  EXPECT_TRUE(unicode::is_valid_utf8("খবর"));
  EXPECT_EQ(unicode::find_invalid_utf8("ab\xC3"), 2u);
  EXPECT_EQ(unicode::find_invalid_utf8("\xED\xA0\x80"), 0u);  // surrogate
  EXPECT_EQ(unicode::codepoint_count("খবর"), 3u);
  const auto cps = unicode::decode("a\xFF");
  ASSERT_EQ(cps.size(), 2u);
  EXPECT_EQ(cps[1], 0xFFFDu);
}

TEST(Unicode, Properties) {
  EXPECT_TRUE(unicode::is_punctuation(U'।'));
  EXPECT_TRUE(unicode::is_punctuation(U','));
  EXPECT_FALSE(unicode::is_punctuation(U'ক'));
  EXPECT_TRUE(unicode::is_emoji(0x1F600));
  EXPECT_FALSE(unicode::is_emoji(U'1'));
  EXPECT_FALSE(unicode::is_emoji(U'#'));
  EXPECT_TRUE(unicode::is_whitespace(0x00A0));
  EXPECT_EQ(unicode::split_whitespace(" a  b  ").size(), 2u);
}

TEST(Normalize, Stages) {
  EXPECT_EQ(preprocess::normalize_text("ﬁle"), "file");  // NFKC ligature
  EXPECT_EQ(preprocess::normalize_text("see https://x.org/a?b=1 now"), "see now");
  EXPECT_EQ(preprocess::normalize_text("WWW.example.com home"), "home");
  EXPECT_EQ(preprocess::normalize_text("ভালো 😀👍🏽 খবর"), "ভালো খবর");
  EXPECT_EQ(preprocess::normalize_text("wow!!! ok??"), "wow! ok?");
  EXPECT_EQ(preprocess::normalize_text("  a \t\n b  "), "a b");
  EXPECT_EQ(preprocess::normalize_text("1 # *"), "1 # *");
}

TEST(Normalize, BengaliJoinerSurvivesOutsideEmoji) {
  const std::string rafala = "র‍্য";
  EXPECT_EQ(preprocess::normalize_text(rafala), preprocess::normalize_text(preprocess::normalize_text(rafala)));
  EXPECT_NE(preprocess::normalize_text(rafala).find("‍"), std::string::npos);
}

TEST(Normalize, FixedPointOnTrickyInputs) {
  for (const char* s : {"http:://x.org tail", "á́", "www..www.x", "!!!!", "😀‍😀 x",
                        "য়", "ক্ষ  ।।।", "\xEF\xBC\xA1" "BC"}) {
    const auto once = preprocess::normalize_text(s);
    EXPECT_EQ(preprocess::normalize_text(once), once) << s;
  }
}

TEST(Normalize, ConfigDisablesStages) {
  preprocess::NormalizationConfig c;
  c.strip_urls = false;
  EXPECT_EQ(preprocess::normalize_text("go http://x", c), "go http:/x");
  c.dedupe_punctuation = false;
  EXPECT_EQ(preprocess::normalize_text("go http://x", c), "go http://x");
}

TEST(Vocabulary, ReservedIdsAndFrequencyOrder) {
  const std::vector<std::string> texts = {"b a a", "c b a"};
  const auto v = preprocess::build_vocabulary(texts, 7);
  ASSERT_EQ(v.size(), 7u);
  EXPECT_EQ(v.token(preprocess::kPad), "<pad>");
  EXPECT_EQ(v.token(preprocess::kSep), "[SEP]");
  EXPECT_EQ(v.token(5), "a");
  EXPECT_EQ(v.token(6), "b");
  EXPECT_EQ(v.id_of("c"), preprocess::kUnk);
  EXPECT_EQ(v.id_of("[SEP]"), preprocess::kUnk);
  EXPECT_THROW(v.token(7), RangeError);
  EXPECT_THROW(preprocess::Vocabulary::from_words({"x", "x"}), std::exception);
}

TEST(Vocabulary, TiesBreakLexicographically) {
  const std::vector<std::string> texts = {"z y x"};
  const auto v = preprocess::build_vocabulary(texts, 100);
  EXPECT_EQ(v.token(5), "x");
  EXPECT_EQ(v.token(7), "z");
  const auto rare = preprocess::build_vocabulary(std::vector<std::string>{"a a b"}, 100, 2);
  EXPECT_EQ(rare.size(), 6u);
}

TEST(Vocabulary, SaveLoadRoundTrip) {
  const auto v = preprocess::Vocabulary::from_words({"নদী", "বই"});
  std::stringstream s;
  v.write(s);
  EXPECT_EQ(preprocess::Vocabulary::read(s), v);
}

TEST(Tokenize, UnknownsAndTruncation) {
  const auto v = preprocess::Vocabulary::from_words({"a", "b"});
  const auto seq = preprocess::tokenize("a q b", v);
  EXPECT_EQ(seq.ids, (std::vector<preprocess::TokenId>{5, 1, 6}));
  EXPECT_EQ(preprocess::detokenize(seq, v), "a <unk> b");
  EXPECT_EQ(preprocess::truncate(seq, 2).ids.size(), 2u);
  EXPECT_EQ(preprocess::truncate(seq, 10), seq);
  EXPECT_THROW(preprocess::truncate(seq, 0), ParameterError);
}

TEST(Corpus, LabelsParseCanonically) {
  EXPECT_EQ(corpus::parse_category("islam"), corpus::Category::kIslam);
  EXPECT_EQ(corpus::parse_sentiment(" Neutral "), corpus::Sentiment::kNeutral);
  EXPECT_THROW(corpus::parse_aspect("Sports"), std::exception);
}

TEST(Corpus, JsonlAndCsvRoundTrip) {
  const auto records = harness::synthetic_sentiment_corpus(20, 4);
  std::stringstream jl, csv;
  corpus::write_jsonl(jl, records);
  corpus::write_csv(csv, records);
  EXPECT_EQ(corpus::read_jsonl(jl), records);
  EXPECT_EQ(corpus::read_csv(csv), records);
}

TEST(Corpus, SchemaErrorsNameTheLine) {
  std::stringstream bad(R"({"article":"a","headline":"h","category":"Islam","aspect":"Report","sentiment":"Positive"}
{"article":"a","headline":"h","category":"Islam","aspect":"Report"}
)");
  try {
    corpus::read_jsonl(bad);
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
  std::stringstream csv("article,headline,category\nx,y,Islam\n");
  EXPECT_THROW(corpus::read_csv(csv), SchemaError);
  EXPECT_THROW(corpus::load_corpus("/nonexistent/x.jsonl", corpus::Format::kJsonl), IoError);
}

TEST(Corpus, CsvQuoting) {
  std::stringstream csv(
      "headline,article,category,aspect,sentiment\n\"h, \"\"q\"\"\",\"line1\nline2\",Others,Culture,Negative\n");
  const auto r = corpus::read_csv(csv);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].headline, "h, \"q\"");
  EXPECT_EQ(r[0].article, "line1\nline2");
  EXPECT_EQ(r[0].aspect, corpus::Aspect::kCulture);
}

TEST(Split, PartitionAndDeterminism) {
  const corpus::SplitCounts counts{7, 2, 3};
  const auto a = corpus::split_corpus(12, counts, 9);
  EXPECT_EQ(a, corpus::split_corpus(12, counts, 9));
  EXPECT_NE(a, corpus::split_corpus(12, counts, 10));
  std::set<std::size_t> all(a.train.begin(), a.train.end());
  all.insert(a.validation.begin(), a.validation.end());
  all.insert(a.test.begin(), a.test.end());
  EXPECT_EQ(all.size(), 12u);
  EXPECT_EQ(a.train.size(), 7u);
  EXPECT_THROW(corpus::split_corpus(13, counts, 9), SizeError);
  EXPECT_EQ(corpus::split_from_json(corpus::to_json(a)), a);
}

TEST(Statistics, NoveltyBounds) {
  corpus::NewsRecord copy{"এক দুই তিন চার", "দুই তিন", {}, {}, {}};
  corpus::NewsRecord fresh{"এক দুই তিন চার", "পাঁচ ছয়", {}, {}, {}};
  const std::vector<corpus::NewsRecord> a = {copy}, b = {fresh};
  for (int n = 1; n <= 2; ++n) {
    EXPECT_EQ(corpus::novel_ngram_rate(a, n), 0.0);
    EXPECT_EQ(corpus::novel_ngram_rate(b, n), 100.0);
  }
  EXPECT_EQ(corpus::novel_ngram_rate(a, 3), 0.0);
  EXPECT_THROW(corpus::novel_ngram_rate(a, 0), ParameterError);
}

TEST(Statistics, MicroVersusMacro) {
  // Headline 1: 1 of 1 unigram novel. Headline 2: 0 of 3 novel.
  const std::vector<corpus::NewsRecord> r = {{"a b", "z", {}, {}, {}}, {"a b c", "a b c", {}, {}, {}}};
  EXPECT_DOUBLE_EQ(corpus::novel_ngram_rate(r, 1), 25.0);
  corpus::NoveltyOptions macro;
  macro.averaging = corpus::NgramAveraging::kMacro;
  EXPECT_DOUBLE_EQ(corpus::novel_ngram_rate(r, 1, corpus::word_tokenize, macro), 50.0);
}

TEST(Statistics, CountsAndAverages) {
  const std::vector<corpus::NewsRecord> r = {
      {"এক দুই। তিন!", "ক খ", corpus::Category::kHinduism, corpus::Aspect::kFestival, corpus::Sentiment::kNegative},
      {"এক", "ক", corpus::Category::kIslam, corpus::Aspect::kReport, corpus::Sentiment::kPositive}};
  const auto s = corpus::compute_statistics(r);
  EXPECT_EQ(s.total, 2u);
  EXPECT_EQ(s.category_totals[1], 1u);
  EXPECT_EQ(s.category_by_aspect[1][1], 1u);
  EXPECT_EQ(s.sentiment_totals[1], 1u);
  EXPECT_DOUBLE_EQ(s.article.avg_words, 2.0);
  EXPECT_DOUBLE_EQ(s.article.avg_sentences, 1.5);
  EXPECT_DOUBLE_EQ(s.headline.avg_words, 1.5);
  EXPECT_EQ(s.article.vocab_size, 3u);
  EXPECT_THROW(corpus::compute_statistics(std::vector<corpus::NewsRecord>{}), EmptyCorpusError);
}

TEST(Statistics, Histogram) {
  const std::vector<corpus::NewsRecord> r = {{"a", "h", {}, {}, {}}, {"a b c", "h", {}, {}, {}}};
  const auto h = corpus::length_histogram(r, corpus::TextField::kArticle, 2);
  EXPECT_EQ(h.at(0), 1u);
  EXPECT_EQ(h.at(1), 1u);
  EXPECT_EQ(corpus::render_histogram_csv(h, 2), "bin,bin_start,count\n0,0,1\n1,2,1\n");
}

TEST(Tokenizer, StripsEdgePunctuation) {
  EXPECT_EQ(corpus::word_tokenize("\"খবর,\" আজ।"), (std::vector<std::string>{"খবর", "আজ"}));
  EXPECT_EQ(corpus::segment_sentences("এক। দুই?! তিন").size(), 3u);
}

TEST(Synthetic, WordsAreNormalizationStable) {
  for (const auto& r : harness::synthetic_sentiment_corpus(60, 2)) {
    EXPECT_EQ(preprocess::normalize_text(r.article), r.article);
    EXPECT_EQ(preprocess::normalize_text(r.headline), r.headline);
    EXPECT_EQ(r.headline, harness::synthetic_headline(r.sentiment));
  }
}
