#include <array>
#include <string_view>

#include "headline/harness.hpp"
#include "headline/rng.hpp"

namespace headline::harness {

namespace {

// Every entry is already NFKC-stable, so preprocessing leaves it unchanged.
constexpr std::array<std::string_view, 24> kFiller = {
    "মানুষ", "দেশ",  "সরকার", "নদী",   "গ্রাম", "শহর",   "বাজার", "মাঠ",
    "কথা",   "বই",   "পথ",    "ঘর",    "জল",   "আলো",  "মেলা",  "স্কুল",
    "মন্দির", "গান",  "দিন",    "রাত",   "কাজ",  "খেলা", "সভা",   "পরিবার"};

}  // namespace

std::string synthetic_headline(corpus::Sentiment sentiment) {
  switch (sentiment) {
    case corpus::Sentiment::kPositive:
      return "সুখবর এসেছে আজ";
    case corpus::Sentiment::kNegative:
      return "দুঃসংবাদ এসেছে আজ";
    case corpus::Sentiment::kNeutral:
      return "সাধারণ খবর আজ";
  }
  return {};
}

std::vector<corpus::NewsRecord> synthetic_sentiment_corpus(std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<corpus::NewsRecord> records;
  records.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    corpus::NewsRecord r;
    r.sentiment = static_cast<corpus::Sentiment>(i % 3);
    r.category = static_cast<corpus::Category>(rng.below(5));
    r.aspect = static_cast<corpus::Aspect>(rng.below(4));
    const std::size_t words = 6 + rng.below(7);
    for (std::size_t w = 0; w < words; ++w) {
      if (w) r.article += ' ';
      r.article += kFiller[rng.below(kFiller.size())];
    }
    r.article += " ।";
    r.headline = synthetic_headline(r.sentiment);
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace headline::harness
