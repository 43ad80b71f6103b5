#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "headline/corpus.hpp"

namespace headline::metrics {

using Tokens = std::vector<std::string>;
using TokenSpan = std::span<const std::string>;

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  /// f1 = 2PR / (P + R), or 0 when P + R = 0.
  static PRF from(double precision, double recall);
  friend bool operator==(const PRF&, const PRF&) = default;
};

/// Longest common subsequence length (dynamic programming, O(|a||b|)).
std::size_t lcs_length(TokenSpan a, TokenSpan b);

/// Clipped n-gram overlap. Throws ParameterError for n < 1.
PRF rouge_n(TokenSpan candidate, TokenSpan reference, int n);
PRF rouge_l(TokenSpan candidate, TokenSpan reference);

/// 0 when c = 0, 1 when c > r, exp(1 - r/c) otherwise.
double brevity_penalty(std::size_t c, std::size_t r);

/// Corpus BLEU, unsmoothed. Throws PairingError on a length mismatch and
/// ParameterError for max_n < 1.
double bleu(std::span<const Tokens> candidates, std::span<const Tokens> references, int max_n = 4);

/// Single-pair BLEU with add-one smoothing of the n >= 2 precisions.
double sentence_bleu(TokenSpan candidate, TokenSpan reference, int max_n = 4);

struct MeteorAlignment {
  std::size_t matches = 0;
  std::size_t chunks = 0;
  /// False when the search budget ran out; chunks is then an upper bound
  /// found by the search (never worse than the greedy alignment).
  bool optimal = true;
};

/// Exact-match alignment with maximum matches and, among those, minimum
/// chunks. Branch and bound over candidate positions with a node budget.
MeteorAlignment meteor_alignment(TokenSpan candidate, TokenSpan reference,
                                 std::size_t node_budget = 1'000'000);

/// F_mean = 10PR / (R + 9P); penalty = 0.5 (chunks / m)^3.
double meteor(TokenSpan candidate, TokenSpan reference);

/// Maps a token to a unit-norm vector of fixed width, deterministically.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::size_t dimension() const = 0;
  virtual std::vector<double> embed(std::string_view token) const = 0;
};

/// Seeded hash embedding: each token seeds a Gaussian draw which is then
/// normalized. Distinct tokens collide with negligible probability.
class HashEmbedding final : public EmbeddingProvider {
 public:
  explicit HashEmbedding(std::size_t dimension = 256, std::uint64_t seed = 0x5eed);
  std::size_t dimension() const override { return dimension_; }
  std::vector<double> embed(std::string_view token) const override;

 private:
  std::size_t dimension_;
  std::uint64_t seed_;
};

/// Co-occurrence embedding: positive PMI over a symmetric window, reduced to
/// `dimension` by the leading eigenvectors of the PPMI matrix. Tokens outside
/// the kept vocabulary or without any co-occurrence fall back to a hash
/// embedding of the same width.
class PpmiEmbedding final : public EmbeddingProvider {
 public:
  struct Options {
    std::size_t dimension = 64;
    std::size_t window = 2;
    std::size_t max_vocabulary = 2000;
    std::uint64_t seed = 0x5eed;
  };

  static PpmiEmbedding train(std::span<const Tokens> sentences, const Options& options);
  static PpmiEmbedding train(std::span<const Tokens> sentences) { return train(sentences, Options{}); }

  std::size_t dimension() const override { return fallback_.dimension(); }
  std::vector<double> embed(std::string_view token) const override;
  std::size_t vocabulary_size() const { return vectors_.size(); }

 private:
  explicit PpmiEmbedding(const Options& options)
      : fallback_(options.dimension, options.seed) {}
  HashEmbedding fallback_;
  std::unordered_map<std::string, std::vector<double>> vectors_;
};

/// Greedy cosine matching with cosines clamped to [0, 1]. Throws
/// EmptyInputError if either side is empty.
PRF bertscore(TokenSpan candidate, TokenSpan reference, const EmbeddingProvider& embedder);

enum class Scale { kUnit, kPercent };

struct MetricReport {
  double bleu = 0.0;
  PRF rouge1, rouge2, rougeL;
  double meteor = 0.0;
  PRF bertscore;
  /// Mean smoothed sentence BLEU, reported next to corpus BLEU.
  double sentence_bleu = 0.0;
  Scale scale = Scale::kUnit;

  /// Every value x 100 (no rounding). Throws StateError if already percent.
  MetricReport to_percent() const;
  /// Every value rounded half away from zero to `decimals` places.
  MetricReport rounded(int decimals) const;

  friend bool operator==(const MetricReport&, const MetricReport&) = default;
};

struct PairScores {
  PRF rouge1, rouge2, rougeL;
  double meteor = 0.0;
  PRF bertscore;
  double sentence_bleu = 0.0;
};

struct Evaluation {
  MetricReport unit;
  /// Percent scale rounded to 2 decimals.
  MetricReport percent;
  std::vector<PairScores> pairs;
};

struct EvaluationOptions {
  /// Score pairs with OpenMP. Aggregation order is fixed either way.
  bool parallel = true;
  int max_n = 4;
};

/// Corpus BLEU plus per-pair ROUGE/METEOR/BERTScore averaged arithmetically.
/// Throws PairingError on a length mismatch and EmptyInputError when there
/// are no pairs.
Evaluation evaluate_corpus(std::span<const std::string> generated,
                           std::span<const std::string> references,
                           const corpus::WordTokenizer& tokenizer,
                           const EmbeddingProvider& embedder,
                           const EvaluationOptions& options = {});

/// Flat object: bleu, rouge1, rouge2, rougeL (F1), meteor, bertscore_p,
/// bertscore_r, bertscore_f1, sentence_bleu, scale. `detailed` adds the
/// ROUGE precision/recall as rouge1_p, rouge1_r, ... so the report
/// round-trips exactly.
nlohmann::ordered_json to_json(const MetricReport& report, bool detailed = false);
MetricReport report_from_json(const nlohmann::json& j);

std::string_view to_string(Scale scale);

}  // namespace headline::metrics
