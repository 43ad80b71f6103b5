#include <cmath>
#include <map>
#include <random>

#include <gtest/gtest.h>

#include "headline/error.hpp"
#include "headline/metrics.hpp"
#include "oracles.hpp"

using namespace headline;
using namespace headline::metrics;

namespace {

Tokens toks(std::initializer_list<const char*> words) { return {words.begin(), words.end()}; }

// Fixed vectors so cosines are known exactly.
class TableEmbedding final : public EmbeddingProvider {
 public:
  explicit TableEmbedding(std::map<std::string, std::vector<double>> table) : table_(std::move(table)) {}
  std::size_t dimension() const override { return 2; }
  std::vector<double> embed(std::string_view token) const override { return table_.at(std::string(token)); }

 private:
  std::map<std::string, std::vector<double>> table_;
};

}  // namespace

TEST(Prf, HarmonicMeanAndZero) {
  EXPECT_DOUBLE_EQ(PRF::from(1.0, 0.75).f1, 2 * 0.75 / 1.75);
  EXPECT_EQ(PRF::from(0.0, 0.0).f1, 0.0);
}

TEST(Lcs, HandExample) {
  EXPECT_EQ(lcs_length(toks({"a", "b", "c", "d"}), toks({"a", "c", "b", "d"})), 3u);
  EXPECT_EQ(lcs_length(Tokens{}, toks({"a"})), 0u);
}

TEST(Lcs, MatchesExhaustiveSearch) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const auto a = oracle::random_tokens(rng, 10, 4);
    const auto b = oracle::random_tokens(rng, 10, 4);
    ASSERT_EQ(lcs_length(a, b), oracle::lcs_exhaustive(a, b));
  }
}

TEST(Rouge, UnigramHandExample) {
  const PRF r = rouge_n(toks({"a", "b", "c"}), toks({"a", "b", "c", "d"}), 1);
  EXPECT_DOUBLE_EQ(r.precision, 1.0);
  EXPECT_DOUBLE_EQ(r.recall, 0.75);
  EXPECT_NEAR(r.f1, 0.857142857, 1e-9);
}

TEST(Rouge, CountsAreClipped) {
  const PRF r = rouge_n(toks({"a", "a", "a"}), toks({"a", "b"}), 1);
  EXPECT_DOUBLE_EQ(r.precision, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.recall, 0.5);
}

TEST(Rouge, MatchesBruteForceOracle) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const auto c = oracle::random_tokens(rng, 12, 6);
    const auto r = oracle::random_tokens(rng, 12, 6);
    for (int n = 1; n <= 3; ++n) {
      const PRF got = rouge_n(c, r, n);
      const auto want = oracle::rouge_n(c, r, static_cast<std::size_t>(n));
      ASSERT_DOUBLE_EQ(got.precision, want.p);
      ASSERT_DOUBLE_EQ(got.recall, want.r);
      ASSERT_DOUBLE_EQ(got.f1, want.f);
    }
  }
}

TEST(Rouge, ShortSidesScoreZero) {
  const PRF r = rouge_n(toks({"a"}), toks({"a", "b"}), 2);
  EXPECT_EQ(r.f1, 0.0);
  EXPECT_THROW(rouge_n(toks({"a"}), toks({"a"}), 0), ParameterError);
}

TEST(Rouge, LcsBased) {
  const PRF r = rouge_l(toks({"a", "b", "c", "d"}), toks({"a", "c", "b", "d", "e"}));
  EXPECT_DOUBLE_EQ(r.precision, 0.75);
  EXPECT_DOUBLE_EQ(r.recall, 0.6);
  EXPECT_EQ(rouge_l(Tokens{}, toks({"a"})).f1, 0.0);
}

TEST(Bleu, BrevityPenalty) {
  EXPECT_NEAR(brevity_penalty(5, 10), std::exp(-1.0), 1e-12);
  EXPECT_EQ(brevity_penalty(11, 10), 1.0);
  EXPECT_EQ(brevity_penalty(10, 10), 1.0);
  EXPECT_EQ(brevity_penalty(0, 10), 0.0);
}

TEST(Bleu, HandComputedShortCandidate) {
  const std::vector<Tokens> c = {toks({"a", "b", "c", "d"})};
  const std::vector<Tokens> r = {toks({"a", "b", "c", "d", "e"})};
  EXPECT_NEAR(bleu(c, r), std::exp(-0.25), 1e-12);
}

TEST(Bleu, CorpusPoolsCountsBeforeTheRatio) {
  // n = 1 only: pooled precision (2 + 1) / (2 + 2), not the mean of 1 and 0.5.
  const std::vector<Tokens> c = {toks({"a", "b"}), toks({"x", "y"})};
  const std::vector<Tokens> r = {toks({"a", "b"}), toks({"x", "z"})};
  EXPECT_NEAR(bleu(c, r, 1), 0.75, 1e-12);
}

TEST(Bleu, ZeroPrecisionIsZeroAndErrors) {
  const std::vector<Tokens> c = {toks({"a", "b", "c"})};
  const std::vector<Tokens> r = {toks({"a", "b", "c"})};
  EXPECT_EQ(bleu(c, r, 4), 0.0);  // no 4-grams
  EXPECT_NEAR(bleu(c, r, 3), 1.0, 1e-12);
  const std::vector<Tokens> two = {toks({"a"}), toks({"b"})};
  EXPECT_THROW(bleu(c, two), PairingError);
  EXPECT_THROW(bleu(c, r, 0), ParameterError);
}

TEST(Bleu, SentenceSmoothing) {
  // p1 = 4/4; p2..p4 smoothed: (3+1)/(3+1), (2+1)/(2+1), (1+1)/(1+1); BP e^-0.25.
  EXPECT_NEAR(sentence_bleu(toks({"a", "b", "c", "d"}), toks({"a", "b", "c", "d", "e"})), std::exp(-0.25),
              1e-12);
  // p1 = 2/3, p2 = (1+1)/(2+1), p3 = (0+1)/(1+1), p4 = (0+1)/(0+1).
  const double want = std::exp(0.25 * (std::log(2.0 / 3) + std::log(2.0 / 3) + std::log(0.5) + 0.0));
  EXPECT_NEAR(sentence_bleu(toks({"a", "b", "x"}), toks({"a", "b", "y"})), want, 1e-12);
}

TEST(Meteor, IdenticalFourTokens) {
  const auto x = toks({"a", "b", "c", "d"});
  EXPECT_NEAR(meteor(x, x), 0.9921875, 1e-12);
}

TEST(Meteor, IdentityFormula) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto x = oracle::random_tokens(rng, 12, 8, 1);
    const double m = static_cast<double>(x.size());
    ASSERT_NEAR(meteor(x, x), 1.0 - 0.5 / (m * m * m), 1e-9);
  }
}

TEST(Meteor, AlignmentMatchesExhaustiveSearch) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    const auto c = oracle::random_tokens(rng, 7, 3);
    const auto r = oracle::random_tokens(rng, 7, 3);
    const auto got = meteor_alignment(c, r);
    const auto want = oracle::meteor_exhaustive(c, r);
    ASSERT_TRUE(got.optimal);
    ASSERT_EQ(got.matches, want.matches);
    ASSERT_EQ(got.chunks, want.chunks);
    ASSERT_NEAR(meteor(c, r), oracle::meteor_from(want, c.size(), r.size()), 1e-12);
  }
}

TEST(Meteor, SwappedHalvesNeedTwoChunks) {
  const auto a = meteor_alignment(toks({"c", "d", "a", "b"}), toks({"a", "b", "c", "d"}));
  EXPECT_EQ(a.matches, 4u);
  EXPECT_EQ(a.chunks, 2u);
  EXPECT_EQ(meteor(Tokens{}, toks({"a"})), 0.0);
}

TEST(BertScore, HandComputedCosines) {
  const TableEmbedding e({{"x", {1, 0}}, {"y", {0, 1}}, {"z", {std::sqrt(0.5), std::sqrt(0.5)}}});
  // candidate [x, z] vs reference [x]: P = (1 + 0.7071) / 2, R = 1.
  const PRF s = bertscore(toks({"x", "z"}), toks({"x"}), e);
  EXPECT_NEAR(s.precision, (1 + std::sqrt(0.5)) / 2, 1e-12);
  EXPECT_NEAR(s.recall, 1.0, 1e-12);
  // Orthogonal tokens contribute 0.
  EXPECT_NEAR(bertscore(toks({"y"}), toks({"x"}), e).f1, 0.0, 1e-12);
}

TEST(BertScore, NegativeCosinesClampToZero) {
  const TableEmbedding e({{"x", {1, 0}}, {"w", {-1, 0}}});
  EXPECT_EQ(bertscore(toks({"w"}), toks({"x"}), e).f1, 0.0);
  EXPECT_THROW(bertscore(Tokens{}, toks({"x"}), e), EmptyInputError);
}

TEST(BertScore, IdentityIsOne) {
  const HashEmbedding e;
  const auto x = toks({"আজ", "খবর", "ভালো", "আজ"});
  const PRF s = bertscore(x, x, e);
  EXPECT_NEAR(s.precision, 1.0, 1e-9);
  EXPECT_NEAR(s.recall, 1.0, 1e-9);
  EXPECT_NEAR(s.f1, 1.0, 1e-9);
}

TEST(Embedding, HashVectorsAreUnitAndStable) {
  const HashEmbedding e(64, 9);
  const auto a = e.embed("নদী");
  double norm = 0;
  for (double v : a) norm += v * v;
  EXPECT_NEAR(std::sqrt(norm), 1.0, 1e-9);
  EXPECT_EQ(a, e.embed("নদী"));
  EXPECT_NE(a, e.embed("নদীর"));
  EXPECT_EQ(a.size(), 64u);
}

TEST(Embedding, PpmiVectorsAreUnitAndSeparateContexts) {
  std::vector<Tokens> sentences;
  for (int i = 0; i < 40; ++i) {
    sentences.push_back(toks({"cat", "eats", "fish"}));
    sentences.push_back(toks({"dog", "eats", "meat"}));
    sentences.push_back(toks({"car", "needs", "fuel"}));
  }
  PpmiEmbedding::Options o;
  o.dimension = 4;
  const auto e = PpmiEmbedding::train(sentences, o);
  EXPECT_GT(e.vocabulary_size(), 0u);
  auto cos = [&](const char* a, const char* b) {
    const auto x = e.embed(a), y = e.embed(b);
    double s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
  };
  for (const char* w : {"cat", "car", "unseen"}) {
    const auto v = e.embed(w);
    double n = 0;
    for (double x : v) n += x * x;
    EXPECT_NEAR(std::sqrt(n), 1.0, 1e-9) << w;
  }
  EXPECT_GT(cos("cat", "dog"), cos("cat", "car"));
}

TEST(Report, PercentAndRounding) {
  MetricReport r;
  r.bleu = 0.123456;
  r.rouge1 = PRF::from(0.5, 0.25);
  const auto p = r.to_percent();
  EXPECT_EQ(p.scale, Scale::kPercent);
  EXPECT_NEAR(p.bleu, 12.3456, 1e-12);
  EXPECT_THROW(p.to_percent(), StateError);
  EXPECT_DOUBLE_EQ(p.rounded(2).bleu, 12.35);
  EXPECT_DOUBLE_EQ(p.rounded(2).rouge1.recall, 25.0);
}

TEST(Report, JsonRoundTrip) {
  MetricReport r;
  r.bleu = 0.1;
  r.rouge1 = PRF::from(0.3, 0.6);
  r.rouge2 = PRF::from(0.1, 0.2);
  r.rougeL = PRF::from(0.25, 0.5);
  r.meteor = 0.4;
  r.bertscore = PRF::from(0.7, 0.8);
  r.sentence_bleu = 0.05;
  const auto back = report_from_json(nlohmann::json::parse(to_json(r, true).dump()));
  EXPECT_EQ(back, r);
  EXPECT_THROW(report_from_json(nlohmann::json::parse(R"({"bleu": 1})")), SchemaError);
}

TEST(Evaluate, IdenticalCorpusScoresOne) {
  const std::vector<std::string> refs = {"নদী বই পথ ঘর", "আলো মেলা গান দিন", "কাজ খেলা সভা পরিবার"};
  const HashEmbedding e;
  const auto ev = evaluate_corpus(refs, refs, corpus::word_tokenize, e);
  EXPECT_NEAR(ev.unit.bleu, 1.0, 1e-9);
  EXPECT_NEAR(ev.unit.rouge1.f1, 1.0, 1e-9);
  EXPECT_NEAR(ev.unit.rouge2.f1, 1.0, 1e-9);
  EXPECT_NEAR(ev.unit.rougeL.f1, 1.0, 1e-9);
  EXPECT_NEAR(ev.unit.bertscore.f1, 1.0, 1e-9);
  EXPECT_NEAR(ev.unit.meteor, 1.0 - 0.5 / 64, 1e-9);
  EXPECT_DOUBLE_EQ(ev.percent.rouge1.f1, 100.0);
  EXPECT_EQ(ev.pairs.size(), 3u);
}

TEST(Evaluate, ParallelEqualsSerialAndErrors) {
  std::mt19937_64 rng(23);
  std::vector<std::string> gen, ref;
  for (int i = 0; i < 60; ++i) {
    auto join = [](const oracle::Tokens& t) {
      std::string s;
      for (const auto& w : t) s += (s.empty() ? "" : " ") + w;
      return s;
    };
    gen.push_back(join(oracle::random_tokens(rng, 10, 6, 1)));
    ref.push_back(join(oracle::random_tokens(rng, 10, 6, 1)));
  }
  const HashEmbedding e;
  EvaluationOptions serial;
  serial.parallel = false;
  const auto a = evaluate_corpus(gen, ref, corpus::word_tokenize, e);
  const auto b = evaluate_corpus(gen, ref, corpus::word_tokenize, e, serial);
  EXPECT_EQ(a.unit, b.unit);
  const std::vector<std::string> one = {"x"};
  EXPECT_THROW(evaluate_corpus(gen, one, corpus::word_tokenize, e), PairingError);
  EXPECT_THROW(evaluate_corpus({}, {}, corpus::word_tokenize, e), EmptyInputError);
}
