#include "headline/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>

#include "headline/error.hpp"

namespace headline::metrics {

PRF PRF::from(double precision, double recall) {
  const double sum = precision + recall;
  return {precision, recall, sum > 0.0 ? 2.0 * precision * recall / sum : 0.0};
}

std::size_t lcs_length(TokenSpan a, TokenSpan b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

namespace {

using NgramCounts = std::map<std::vector<std::string_view>, std::size_t>;

NgramCounts count_ngrams(TokenSpan tokens, std::size_t n) {
  NgramCounts counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::vector<std::string_view> gram(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                       tokens.begin() + static_cast<std::ptrdiff_t>(i + n));
    ++counts[gram];
  }
  return counts;
}

std::size_t clipped_matches(const NgramCounts& candidate, const NgramCounts& reference) {
  std::size_t matches = 0;
  for (const auto& [gram, count] : candidate) {
    const auto it = reference.find(gram);
    if (it != reference.end()) matches += std::min(count, it->second);
  }
  return matches;
}

std::size_t ngram_total(std::size_t length, std::size_t n) { return length >= n ? length - n + 1 : 0; }

void check_order(int n, const char* what) {
  if (n < 1) throw ParameterError(std::string(what) + " order must be >= 1");
}

}  // namespace

PRF rouge_n(TokenSpan candidate, TokenSpan reference, int n) {
  check_order(n, "rouge_n");
  const auto order = static_cast<std::size_t>(n);
  const std::size_t c_total = ngram_total(candidate.size(), order);
  const std::size_t r_total = ngram_total(reference.size(), order);
  if (c_total == 0 || r_total == 0) return {};
  const std::size_t m = clipped_matches(count_ngrams(candidate, order), count_ngrams(reference, order));
  return PRF::from(static_cast<double>(m) / static_cast<double>(c_total),
                   static_cast<double>(m) / static_cast<double>(r_total));
}

PRF rouge_l(TokenSpan candidate, TokenSpan reference) {
  if (candidate.empty() || reference.empty()) return {};
  const auto l = static_cast<double>(lcs_length(candidate, reference));
  return PRF::from(l / static_cast<double>(candidate.size()), l / static_cast<double>(reference.size()));
}

double brevity_penalty(std::size_t c, std::size_t r) {
  if (c == 0) return 0.0;
  if (c > r) return 1.0;
  return std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c));
}

double bleu(std::span<const Tokens> candidates, std::span<const Tokens> references, int max_n) {
  check_order(max_n, "bleu");
  if (candidates.size() != references.size()) {
    throw PairingError("bleu: " + std::to_string(candidates.size()) + " candidates vs " +
                       std::to_string(references.size()) + " references");
  }
  const auto orders = static_cast<std::size_t>(max_n);
  std::vector<std::size_t> matches(orders, 0), totals(orders, 0);
  std::size_t c = 0, r = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    c += candidates[i].size();
    r += references[i].size();
    for (std::size_t n = 1; n <= orders; ++n) {
      totals[n - 1] += ngram_total(candidates[i].size(), n);
      matches[n - 1] += clipped_matches(count_ngrams(candidates[i], n), count_ngrams(references[i], n));
    }
  }
  double log_sum = 0.0;
  for (std::size_t n = 0; n < orders; ++n) {
    if (totals[n] == 0 || matches[n] == 0) return 0.0;
    log_sum += std::log(static_cast<double>(matches[n]) / static_cast<double>(totals[n]));
  }
  return brevity_penalty(c, r) * std::exp(log_sum / static_cast<double>(orders));
}

double sentence_bleu(TokenSpan candidate, TokenSpan reference, int max_n) {
  check_order(max_n, "sentence_bleu");
  const auto orders = static_cast<std::size_t>(max_n);
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= orders; ++n) {
    const auto total = static_cast<double>(ngram_total(candidate.size(), n));
    const auto m = static_cast<double>(
        clipped_matches(count_ngrams(candidate, n), count_ngrams(reference, n)));
    if (n == 1) {
      if (m == 0.0) return 0.0;
      log_sum += std::log(m / total);
    } else {
      log_sum += std::log((m + 1.0) / (total + 1.0));
    }
  }
  return brevity_penalty(candidate.size(), reference.size()) *
         std::exp(log_sum / static_cast<double>(orders));
}

namespace {

// Depth-first search over candidate positions. State: which reference
// positions are used, the reference position matched at the previous
// candidate position (or none), matches and chunks so far.
class ChunkSearch {
 public:
  ChunkSearch(TokenSpan candidate, TokenSpan reference, std::size_t budget) : budget_(budget) {
    std::map<std::string_view, int> ids;
    auto intern = [&ids](std::string_view s) {
      return ids.emplace(s, static_cast<int>(ids.size())).first->second;
    };
    for (const auto& t : candidate) cand_.push_back(intern(t));
    for (const auto& t : reference) ref_.push_back(intern(t));
    const std::size_t kinds = ids.size();
    ref_left_.assign(kinds, 0);
    cand_left_.assign(kinds, 0);
    for (int t : ref_) ++ref_left_[static_cast<std::size_t>(t)];
    for (int t : cand_) ++cand_left_[static_cast<std::size_t>(t)];
    positions_.resize(kinds);
    for (std::size_t j = 0; j < ref_.size(); ++j) positions_[static_cast<std::size_t>(ref_[j])].push_back(j);
    for (std::size_t k = 0; k < kinds; ++k) target_ += std::min(ref_left_[k], cand_left_[k]);
    used_.assign(ref_.size(), false);
  }

  MeteorAlignment run() {
    MeteorAlignment result;
    result.matches = target_;
    if (target_ == 0) return result;
    best_ = greedy_chunks();
    search(0, kNone, 0, 0);
    result.chunks = best_;
    result.optimal = nodes_ <= budget_;
    return result;
  }

 private:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  // Max-match alignment that extends the current chunk whenever possible,
  // otherwise takes the leftmost unused reference position.
  std::size_t greedy_chunks() const {
    std::vector<bool> used(ref_.size(), false);
    std::vector<std::size_t> left = ref_left_;
    std::vector<std::size_t> cand_left = cand_left_;
    std::size_t prev = kNone, chunks = 0, matched = 0;
    for (std::size_t i = 0; i < cand_.size(); ++i) {
      const auto t = static_cast<std::size_t>(cand_[i]);
      --cand_left[t];
      std::size_t pick = kNone;
      if (left[t] > 0) {
        if (prev != kNone && prev + 1 < ref_.size() && !used[prev + 1] && ref_[prev + 1] == cand_[i]) {
          pick = prev + 1;
        } else {
          for (std::size_t j : positions_[t]) {
            if (!used[j]) {
              pick = j;
              break;
            }
          }
        }
      }
      if (pick == kNone) {
        prev = kNone;
        continue;
      }
      if (prev == kNone || pick != prev + 1) ++chunks;
      used[pick] = true;
      --left[t];
      ++matched;
      prev = pick;
    }
    (void)matched;
    return chunks;
  }

  void search(std::size_t i, std::size_t prev, std::size_t matched, std::size_t chunks) {
    if (++nodes_ > budget_) return;
    if (chunks >= best_) return;
    if (i == cand_.size()) {
      if (matched == target_) best_ = chunks;
      return;
    }
    const auto t = static_cast<std::size_t>(cand_[i]);
    // Upper bound on matches still reachable from position i.
    std::size_t reachable = matched;
    for (std::size_t k = 0; k < ref_left_.size(); ++k) reachable += std::min(ref_left_[k], cand_left_[k]);
    if (reachable < target_) return;

    --cand_left_[t];
    if (ref_left_[t] > 0) {
      if (prev != kNone && prev + 1 < ref_.size() && !used_[prev + 1] && ref_[prev + 1] == cand_[i]) {
        take(prev + 1, t);
        search(i + 1, prev + 1, matched + 1, chunks);
        release(prev + 1, t);
      }
      for (std::size_t j : positions_[t]) {
        if (used_[j] || (prev != kNone && j == prev + 1)) continue;
        take(j, t);
        search(i + 1, j, matched + 1, chunks + 1);
        release(j, t);
      }
    }
    search(i + 1, kNone, matched, chunks);
    ++cand_left_[t];
  }

  void take(std::size_t j, std::size_t t) {
    used_[j] = true;
    --ref_left_[t];
  }
  void release(std::size_t j, std::size_t t) {
    used_[j] = false;
    ++ref_left_[t];
  }

  std::vector<int> cand_, ref_;
  std::vector<std::vector<std::size_t>> positions_;
  std::vector<std::size_t> ref_left_, cand_left_;
  std::vector<bool> used_;
  std::size_t target_ = 0;
  std::size_t best_ = 0;
  std::size_t nodes_ = 0;
  std::size_t budget_;
};

}  // namespace

MeteorAlignment meteor_alignment(TokenSpan candidate, TokenSpan reference, std::size_t node_budget) {
  return ChunkSearch(candidate, reference, node_budget).run();
}

double meteor(TokenSpan candidate, TokenSpan reference) {
  const MeteorAlignment a = meteor_alignment(candidate, reference);
  if (a.matches == 0) return 0.0;
  const double m = static_cast<double>(a.matches);
  const double p = m / static_cast<double>(candidate.size());
  const double r = m / static_cast<double>(reference.size());
  const double f_mean = 10.0 * p * r / (r + 9.0 * p);
  const double frag = static_cast<double>(a.chunks) / m;
  return f_mean * (1.0 - 0.5 * frag * frag * frag);
}

PRF bertscore(TokenSpan candidate, TokenSpan reference, const EmbeddingProvider& embedder) {
  if (candidate.empty() || reference.empty()) {
    throw EmptyInputError("bertscore needs non-empty candidate and reference");
  }
  std::vector<std::vector<double>> x, y;
  for (const auto& t : candidate) x.push_back(embedder.embed(t));
  for (const auto& t : reference) y.push_back(embedder.embed(t));
  std::vector<double> best_x(x.size(), 0.0), best_y(y.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < y.size(); ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < x[i].size(); ++k) dot += x[i][k] * y[j][k];
      const double cos = std::clamp(dot, 0.0, 1.0);
      best_x[i] = std::max(best_x[i], cos);
      best_y[j] = std::max(best_y[j], cos);
    }
  }
  double p = 0.0, r = 0.0;
  for (double v : best_x) p += v;
  for (double v : best_y) r += v;
  return PRF::from(p / static_cast<double>(x.size()), r / static_cast<double>(y.size()));
}

namespace {

PRF scale_prf(const PRF& v, double k) { return {v.precision * k, v.recall * k, v.f1 * k}; }

double round_to(double v, int decimals) {
  const double f = std::pow(10.0, decimals);
  return std::round(v * f) / f;
}

PRF round_prf(const PRF& v, int decimals) {
  return {round_to(v.precision, decimals), round_to(v.recall, decimals), round_to(v.f1, decimals)};
}

void add_prf(PRF& sum, const PRF& v) {
  sum.precision += v.precision;
  sum.recall += v.recall;
  sum.f1 += v.f1;
}

}  // namespace

MetricReport MetricReport::to_percent() const {
  if (scale == Scale::kPercent) throw StateError("report is already at percent scale");
  MetricReport p = *this;
  p.bleu *= 100.0;
  p.rouge1 = scale_prf(rouge1, 100.0);
  p.rouge2 = scale_prf(rouge2, 100.0);
  p.rougeL = scale_prf(rougeL, 100.0);
  p.meteor *= 100.0;
  p.bertscore = scale_prf(bertscore, 100.0);
  p.sentence_bleu *= 100.0;
  p.scale = Scale::kPercent;
  return p;
}

MetricReport MetricReport::rounded(int decimals) const {
  MetricReport p = *this;
  p.bleu = round_to(bleu, decimals);
  p.rouge1 = round_prf(rouge1, decimals);
  p.rouge2 = round_prf(rouge2, decimals);
  p.rougeL = round_prf(rougeL, decimals);
  p.meteor = round_to(meteor, decimals);
  p.bertscore = round_prf(bertscore, decimals);
  p.sentence_bleu = round_to(sentence_bleu, decimals);
  return p;
}

Evaluation evaluate_corpus(std::span<const std::string> generated,
                           std::span<const std::string> references,
                           const corpus::WordTokenizer& tokenizer,
                           const EmbeddingProvider& embedder, const EvaluationOptions& options) {
  if (generated.size() != references.size()) {
    throw PairingError("evaluate: " + std::to_string(generated.size()) + " outputs vs " +
                       std::to_string(references.size()) + " references");
  }
  if (generated.empty()) throw EmptyInputError("evaluate: no pairs");
  const std::size_t n = generated.size();
  std::vector<Tokens> cand(n), ref(n);
  Evaluation out;
  out.pairs.resize(n);
  std::vector<std::exception_ptr> errors(n);

  auto score = [&](std::size_t i) {
    try {
      cand[i] = tokenizer(generated[i]);
      ref[i] = tokenizer(references[i]);
      PairScores& s = out.pairs[i];
      s.rouge1 = rouge_n(cand[i], ref[i], 1);
      s.rouge2 = rouge_n(cand[i], ref[i], 2);
      s.rougeL = rouge_l(cand[i], ref[i]);
      s.meteor = meteor(cand[i], ref[i]);
      // An empty side has no embeddings to match; it scores zero.
      if (!cand[i].empty() && !ref[i].empty()) s.bertscore = bertscore(cand[i], ref[i], embedder);
      s.sentence_bleu = sentence_bleu(cand[i], ref[i], options.max_n);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const auto count = static_cast<std::ptrdiff_t>(n);
  if (options.parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < count; ++i) score(static_cast<std::size_t>(i));
  } else {
    for (std::size_t i = 0; i < n; ++i) score(i);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  MetricReport& u = out.unit;
  for (const PairScores& s : out.pairs) {
    add_prf(u.rouge1, s.rouge1);
    add_prf(u.rouge2, s.rouge2);
    add_prf(u.rougeL, s.rougeL);
    u.meteor += s.meteor;
    add_prf(u.bertscore, s.bertscore);
    u.sentence_bleu += s.sentence_bleu;
  }
  const double inv = 1.0 / static_cast<double>(n);
  u.rouge1 = scale_prf(u.rouge1, inv);
  u.rouge2 = scale_prf(u.rouge2, inv);
  u.rougeL = scale_prf(u.rougeL, inv);
  u.meteor *= inv;
  u.bertscore = scale_prf(u.bertscore, inv);
  u.sentence_bleu *= inv;
  u.bleu = bleu(cand, ref, options.max_n);
  u.scale = Scale::kUnit;
  out.percent = u.to_percent().rounded(2);
  return out;
}

std::string_view to_string(Scale scale) { return scale == Scale::kUnit ? "unit" : "percent"; }

nlohmann::ordered_json to_json(const MetricReport& r, bool detailed) {
  nlohmann::ordered_json j;
  j["bleu"] = r.bleu;
  j["rouge1"] = r.rouge1.f1;
  j["rouge2"] = r.rouge2.f1;
  j["rougeL"] = r.rougeL.f1;
  j["meteor"] = r.meteor;
  j["bertscore_p"] = r.bertscore.precision;
  j["bertscore_r"] = r.bertscore.recall;
  j["bertscore_f1"] = r.bertscore.f1;
  j["sentence_bleu"] = r.sentence_bleu;
  j["scale"] = std::string(to_string(r.scale));
  if (detailed) {
    for (const auto& [name, prf] : {std::pair{"rouge1", &r.rouge1}, std::pair{"rouge2", &r.rouge2},
                                    std::pair{"rougeL", &r.rougeL}}) {
      j[std::string(name) + "_p"] = prf->precision;
      j[std::string(name) + "_r"] = prf->recall;
    }
  }
  return j;
}

MetricReport report_from_json(const nlohmann::json& j) {
  try {
    MetricReport r;
    r.bleu = j.at("bleu").get<double>();
    r.rouge1.f1 = j.at("rouge1").get<double>();
    r.rouge2.f1 = j.at("rouge2").get<double>();
    r.rougeL.f1 = j.at("rougeL").get<double>();
    r.meteor = j.at("meteor").get<double>();
    r.bertscore.precision = j.at("bertscore_p").get<double>();
    r.bertscore.recall = j.at("bertscore_r").get<double>();
    r.bertscore.f1 = j.at("bertscore_f1").get<double>();
    r.sentence_bleu = j.value("sentence_bleu", 0.0);
    for (const auto& [name, prf] : {std::pair{"rouge1", &r.rouge1}, std::pair{"rouge2", &r.rouge2},
                                    std::pair{"rougeL", &r.rougeL}}) {
      prf->precision = j.value(std::string(name) + "_p", 0.0);
      prf->recall = j.value(std::string(name) + "_r", 0.0);
    }
    const std::string scale = j.at("scale").get<std::string>();
    if (scale == "unit") {
      r.scale = Scale::kUnit;
    } else if (scale == "percent") {
      r.scale = Scale::kPercent;
    } else {
      throw SchemaError("metric report: unknown scale '" + scale + "'");
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("metric report: ") + e.what());
  }
}

}  // namespace headline::metrics
