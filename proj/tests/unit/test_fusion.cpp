#include <algorithm>

#include <gtest/gtest.h>

#include "headline/error.hpp"
#include "headline/fusion.hpp"

using namespace headline;
using preprocess::kSep;

namespace {

preprocess::Vocabulary control_vocab(const fusion::FusionConfig& c, std::vector<std::string> extra) {
  std::vector<std::string> words;
  for (const auto& text : fusion::control_texts(c)) {
    std::size_t start = 0;
    while (start <= text.size()) {
      const auto end = std::min(text.find(' ', start), text.size());
      if (end > start) words.push_back(text.substr(start, end - start));
      start = end + 1;
    }
  }
  for (auto& w : extra) words.push_back(std::move(w));
  std::sort(words.begin(), words.end());
  words.erase(std::unique(words.begin(), words.end()), words.end());
  return preprocess::Vocabulary::from_words(std::move(words));
}

corpus::NewsRecord record(std::string article) {
  return {std::move(article), "h", corpus::Category::kBuddhism, corpus::Aspect::kEducation,
          corpus::Sentiment::kNeutral};
}

std::size_t seps(const fusion::FusionInput& in) {
  return static_cast<std::size_t>(std::count(in.ids.ids.begin(), in.ids.ids.end(), kSep));
}

}  // namespace

TEST(Fusion, BaselineHasNoSeparator) {
  const fusion::FusionConfig c;
  const auto v = control_vocab(c, {"নদী", "বই"});
  const auto in = fusion::build_baseline_input(record("নদী বই নদী"), v, c, 512);
  EXPECT_EQ(seps(in), 0u);
  EXPECT_EQ(in.span(fusion::Segment::kArticle).length, 3u);
  EXPECT_EQ(in.ids.length(), in.span(fusion::Segment::kPrefix).length + 3);
}

TEST(Fusion, MultigenLayoutAndLabels) {
  const fusion::FusionConfig c;
  const auto v = control_vocab(c, {"নদী", "বই"});
  const auto in = fusion::build_multigen_input(record("নদী বই"), v, c, 512);
  EXPECT_EQ(seps(in), 3u);
  const auto& cat = in.span(fusion::Segment::kCategory);
  const auto& asp = in.span(fusion::Segment::kAspect);
  const auto& sen = in.span(fusion::Segment::kSentiment);
  EXPECT_EQ(in.ids.ids[cat.start - 1], kSep);
  EXPECT_EQ(in.ids.ids[asp.start - 1], kSep);
  EXPECT_EQ(in.ids.ids[sen.start - 1], kSep);
  EXPECT_LT(cat.start, asp.start);
  EXPECT_LT(asp.start, sen.start);
  EXPECT_EQ(v.token(in.ids.ids[cat.start]), "Buddhism");
  EXPECT_EQ(v.token(in.ids.ids[sen.start]), "Neutral");
  EXPECT_EQ(std::count(in.ids.ids.begin(), in.ids.ids.end(), preprocess::kUnk), 0);
  const auto text = fusion::render(in, v);
  EXPECT_NE(text.find("[SEP] Education"), std::string::npos) << text;
}

TEST(Fusion, FlagsControlSegmentCount) {
  fusion::FusionConfig c;
  c.include_aspect = false;
  const auto v = control_vocab(c, {"নদী"});
  EXPECT_EQ(seps(fusion::build_multigen_input(record("নদী"), v, c, 512)), 2u);
  const auto none = fusion::FusionConfig::baseline();
  EXPECT_EQ(fusion::build_multigen_input(record("নদী"), v, none, 512),
            fusion::build_baseline_input(record("নদী"), v, none, 512));
}

TEST(Fusion, TruncationShortensOnlyTheArticle) {
  const fusion::FusionConfig c;
  const auto v = control_vocab(c, {"নদী"});
  std::string article;
  for (int i = 0; i < 900; ++i) article += "নদী ";
  const auto in = fusion::build_multigen_input(record(article), v, c, 512);
  EXPECT_EQ(in.ids.length(), 512u);
  EXPECT_EQ(seps(in), 3u);
  EXPECT_EQ(v.token(in.ids.ids.back()), "Neutral");
  const auto base = fusion::build_baseline_input(record(article), v, c, 512);
  EXPECT_EQ(base.ids.length(), 512u);
  EXPECT_THROW(fusion::build_multigen_input(record(article), v, c, 8), LengthError);
  EXPECT_THROW(fusion::build_baseline_input(record(" 😀 "), v, c, 512), EmptyInputError);
}
