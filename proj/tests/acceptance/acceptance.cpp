// Acceptance suite. Usage: headline_acceptance <criterion|all> [cli-path]
// Prints one PASS/FAIL/SKIP line per criterion. Exit status: 0 pass, 1 fail,
// 77 skip (single criterion only).

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "headline/corpus.hpp"
#include "headline/fusion.hpp"
#include "headline/harness.hpp"
#include "headline/metrics.hpp"
#include "headline/model.hpp"
#include "headline/preprocess.hpp"
#include "oracles.hpp"

#ifndef HEADLINE_SOURCE_DIR
#define HEADLINE_SOURCE_DIR "."
#endif

using namespace headline;
namespace fs = std::filesystem;

namespace {

enum class Status { kPass, kFail, kSkip };

struct Outcome {
  Status status = Status::kPass;
  std::string detail;
};

Outcome pass(std::string d) { return {Status::kPass, std::move(d)}; }
Outcome fail(std::string d) { return {Status::kFail, std::move(d)}; }
Outcome skip(std::string d) { return {Status::kSkip, std::move(d)}; }

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << std::fixed << v;
  return s.str();
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// Adds the runtime bound to an outcome that otherwise passed.
Outcome timed(Outcome o, const Stopwatch& w, double limit) {
  const double s = w.seconds();
  o.detail += " [" + fmt(s, 2) + " s, limit " + fmt(limit, 0) + " s]";
  if (o.status == Status::kPass && s >= limit) o.status = Status::kFail;
  return o;
}

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("headline-accept-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::optional<fs::path> belin_corpus() {
  if (const char* env = std::getenv("BELIN_CORPUS"); env && *env) {
    if (fs::exists(env)) return fs::path(env);
  }
  for (const char* name : {"data/belin.jsonl", "data/belin.csv"}) {
    const fs::path p = fs::path(HEADLINE_SOURCE_DIR) / name;
    if (fs::exists(p)) return p;
  }
  return std::nullopt;
}

// 1. Corpus counts.
Outcome corpus_counts() {
  const auto path = belin_corpus();
  if (!path) return skip("public corpus not found (set BELIN_CORPUS or add data/belin.jsonl)");
  const Stopwatch w;
  const auto records = corpus::load_corpus(*path, corpus::format_from_path(*path));
  const auto s = corpus::compute_statistics(records);
  const std::array<std::size_t, 5> cat = {2001, 242, 28, 29, 220};
  const std::array<std::size_t, 4> asp = {1204, 161, 930, 225};
  const std::array<std::size_t, 3> sen = {1717, 455, 348};
  std::ostringstream d;
  d << "total " << s.total << "; categories";
  for (auto c : s.category_totals) d << ' ' << c;
  d << "; aspects";
  for (auto a : s.aspect_totals) d << ' ' << a;
  d << "; sentiments";
  for (auto x : s.sentiment_totals) d << ' ' << x;
  const bool ok = s.total == 2520 && s.category_totals == cat && s.aspect_totals == asp && s.sentiment_totals == sen;
  return timed(ok ? pass(d.str()) : fail(d.str()), w, 10);
}

// 2. Split partition over 100 seeds.
Outcome split_partition() {
  const Stopwatch w;
  const corpus::SplitCounts counts{1870, 150, 500};
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto s = corpus::split_corpus(2520, counts, seed);
    if (s.train.size() != 1870 || s.validation.size() != 150 || s.test.size() != 500) {
      return fail("wrong part sizes for seed " + std::to_string(seed));
    }
    std::vector<int> seen(2520, 0);
    for (const auto* part : {&s.train, &s.validation, &s.test}) {
      for (std::size_t id : *part) {
        if (id >= seen.size()) return fail("id out of range for seed " + std::to_string(seed));
        ++seen[id];
      }
    }
    for (int c : seen) {
      if (c != 1) return fail("not a partition for seed " + std::to_string(seed));
    }
  }
  return timed(pass("100 seeds give disjoint, exhaustive 1870/150/500 splits"), w, 5);
}

// 3. Corpus statistics within 10 % relative.
Outcome corpus_statistics() {
  const auto path = belin_corpus();
  if (!path) return skip("public corpus not found (set BELIN_CORPUS or add data/belin.jsonl)");
  const Stopwatch w;
  const auto records = corpus::load_corpus(*path, corpus::format_from_path(*path));
  const auto s = corpus::compute_statistics(records);
  struct Check {
    const char* name;
    double got, want;
  };
  const std::vector<Check> checks = {{"article words", s.article.avg_words, 1001.18},
                                     {"headline words", s.headline.avg_words, 17.13},
                                     {"novel 1-grams", s.novel_ngram_rate[0], 4.42},
                                     {"novel 2-grams", s.novel_ngram_rate[1], 21.48},
                                     {"novel 3-grams", s.novel_ngram_rate[2], 42.10},
                                     {"novel 4-grams", s.novel_ngram_rate[3], 56.47}};
  bool ok = true;
  std::ostringstream d;
  for (const auto& c : checks) {
    const double rel = std::abs(c.got - c.want) / c.want;
    ok = ok && rel <= 0.10;
    d << c.name << ' ' << fmt(c.got, 2) << " vs " << fmt(c.want, 2) << " (" << fmt(rel * 100, 1) << "%); ";
  }
  d << "tokenizer: NFKC + whitespace split + edge punctuation stripped";
  return timed(ok ? pass(d.str()) : fail(d.str()), w, 60);
}

// 4. Metric oracle suite.
Outcome metric_oracles() {
  const Stopwatch w;
  std::mt19937_64 rng(20240601);
  const metrics::HashEmbedding embed;
  for (int trial = 0; trial < 200; ++trial) {
    const auto c = oracle::random_tokens(rng, 12, 8);
    const auto r = oracle::random_tokens(rng, 12, 8);
    for (int n = 1; n <= 2; ++n) {
      const auto got = metrics::rouge_n(c, r, n);
      const auto want = oracle::rouge_n(c, r, static_cast<std::size_t>(n));
      if (got.precision != want.p || got.recall != want.r || got.f1 != want.f) {
        return fail("rouge_n mismatch on pair " + std::to_string(trial) + " n=" + std::to_string(n));
      }
    }
    if (metrics::lcs_length(c, r) != oracle::lcs_exhaustive(c, r)) {
      return fail("lcs mismatch on pair " + std::to_string(trial));
    }
    if (c.empty()) continue;
    const std::vector<metrics::Tokens> one = {c};
    const double m = static_cast<double>(c.size());
    const int max_n = static_cast<int>(std::min<std::size_t>(4, c.size()));
    const double ids[] = {metrics::rouge_n(c, c, 1).f1, metrics::rouge_l(c, c).f1,
                          metrics::bleu(one, one, max_n), metrics::bertscore(c, c, embed).f1};
    for (double v : ids) {
      if (std::abs(v - 1.0) > 1e-9) return fail("identity score " + fmt(v, 12) + " on pair " + std::to_string(trial));
    }
    if (c.size() >= 2 && std::abs(metrics::rouge_n(c, c, 2).f1 - 1.0) > 1e-9) return fail("rouge2 identity");
    if (std::abs(metrics::meteor(c, c) - (1.0 - 0.5 / (m * m * m))) > 1e-9) {
      return fail("meteor identity on pair " + std::to_string(trial));
    }
  }
  return timed(pass("200 pairs: rouge_n (n=1,2) and lcs exact; identities within 1e-9"), w, 30);
}

// 5. Hand-computed values.
Outcome hand_values() {
  const double bp = metrics::brevity_penalty(5, 10);
  const std::vector<metrics::Tokens> c = {{"a", "b", "c", "d"}};
  const std::vector<metrics::Tokens> r = {{"a", "b", "c", "d", "e"}};
  const double b = metrics::bleu(c, r);
  const double m = metrics::meteor(c[0], c[0]);
  const bool ok = std::abs(bp - std::exp(-1.0)) <= 1e-9 && std::abs(b - std::exp(-0.25)) <= 1e-6 &&
                  std::abs(m - 0.9921875) <= 1e-9;
  const std::string d = "BP(5,10)=" + fmt(bp, 12) + " BLEU=" + fmt(b, 12) + " METEOR=" + fmt(m, 12);
  return ok ? pass(d) : fail(d);
}

// 6. Table 8 delta arithmetic.
Outcome table8_deltas() {
  const fs::path path = fs::path(HEADLINE_SOURCE_DIR) / "data" / "table8.json";
  std::ifstream in(path);
  if (!in) return fail("cannot open " + path.string());
  const auto doc = nlohmann::ordered_json::parse(in);
  std::size_t total = 0, matched = 0;
  std::ostringstream misses;
  for (const auto& model : doc.at("models")) {
    const auto table = harness::compare(harness::metric_map_from_json(model.at("baseline")),
                                        harness::metric_map_from_json(model.at("proposed")));
    for (const auto& row : table.rows) {
      const double printed = model.at("printed_delta_percent").at(row.metric).get<double>();
      ++total;
      if (row.delta_percent && std::abs(*row.delta_percent - printed) <= 0.05 + 1e-9) {
        ++matched;
      } else {
        misses << ' ' << model.at("model").get<std::string>() << '/' << row.metric << ' '
               << harness::render_delta(row.delta_percent) << " vs printed " << harness::render_delta(printed) << ';';
      }
    }
  }
  const std::string d = std::to_string(matched) + "/" + std::to_string(total) + " printed deltas reproduced";
  return matched == total && total == 24 ? pass(d) : fail(d + "; mismatches:" + misses.str());
}

// 7. Gradient check on the tiny config.
Outcome gradient() {
  const Stopwatch w;
  model::ModelConfig c;
  c.d_model = 16;
  c.n_heads = 2;
  c.n_encoder_layers = 1;
  c.n_decoder_layers = 1;
  c.d_ff = 32;
  c.vocab_size = 32;
  c.max_positions = 64;
  c.seed = 11;
  const auto params = model::init_model(c);
  using preprocess::TokenSequence;
  const std::vector<model::TrainingPair> batch = {
      {TokenSequence{{5, 6, 7, 8, 9}}, TokenSequence{{10, 11, 12, preprocess::kEos}}},
      {TokenSequence{{13, 14, preprocess::kPad}}, TokenSequence{{15, preprocess::kEos}}}};
  model::GradientCheckOptions o;
  o.samples_per_tensor = 40;
  const double err = model::gradient_check(params, batch, 1e-4, o);
  std::ostringstream d;
  d << "max relative error " << std::scientific << std::setprecision(2) << err << " over 40 weights per tensor";
  return timed(err < 1e-4 ? pass(d.str()) : fail(d.str()), w, 60);
}

harness::ExperimentConfig efficacy_config(const fs::path& corpus) {
  harness::ExperimentConfig c;
  c.corpus_path = corpus;
  c.split = {448, 0, 64};
  c.split_seed = 7;
  c.model.d_model = 64;
  c.model.n_heads = 4;
  c.model.n_encoder_layers = 2;
  c.model.n_decoder_layers = 2;
  c.model.d_ff = 128;
  c.model.seed = 7;
  c.training.learning_rate = 0.1;
  c.training.epochs = 10;
  c.training.batch_size = 8;
  c.training.target_token_length = 16;
  c.training.seed = 7;
  c.override_search_space = true;
  c.decode.max_target_length = 8;
  return c;
}

double exact_match(const harness::RunRecord& r) {
  std::size_t hits = 0;
  for (const auto& s : r.samples) hits += preprocess::normalize_text(s.reference) == s.generated;
  return static_cast<double>(hits) / static_cast<double>(r.samples.size());
}

// 8. Fusion efficacy on the synthetic corpus.
Outcome fusion_efficacy() {
  const Stopwatch w;
  TempDir tmp;
  const fs::path corpus = tmp.path() / "synthetic.jsonl";
  corpus::save_corpus(corpus, harness::synthetic_sentiment_corpus(512, 7), corpus::Format::kJsonl);
  const auto config = efficacy_config(corpus);
  harness::RunOptions memory;
  memory.persist = false;
  const auto multi = harness::run_experiment(config, harness::RunMode::kMultigen, memory);
  const auto base = harness::run_experiment(config, harness::RunMode::kBaseline, memory);
  const double m = exact_match(multi), b = exact_match(base);
  const std::string d = "exact match multigen " + fmt(m * 100, 1) + "% (need >= 90), baseline " +
                        fmt(b * 100, 1) + "% (need <= 40) on " + std::to_string(multi.samples.size()) +
                        " held-out records";
  return timed(m >= 0.90 && b <= 0.40 ? pass(d) : fail(d), w, 600);
}

// 9. Two CLI runs persist byte-identical metrics.json.
Outcome determinism(const std::string& cli) {
  if (cli.empty() || !fs::exists(cli)) return fail("CLI binary not given");
  TempDir tmp;
  corpus::save_corpus(tmp.path() / "c.jsonl", harness::synthetic_sentiment_corpus(96, 3), corpus::Format::kJsonl);
  nlohmann::ordered_json cfg = {
      {"corpus", {{"path", "c.jsonl"}}},
      {"split", {{"train", 72}, {"validation", 8}, {"test", 16}}},
      {"model", {{"d_model", 32}, {"n_heads", 2}, {"n_encoder_layers", 1}, {"n_decoder_layers", 1}, {"d_ff", 64}}},
      {"training", {{"learning_rate", 1e-3}, {"epochs", 3}, {"batch_size", 8}, {"target_token_length", 16}}},
      {"decode", {{"max_target_length", 8}}}};
  std::ofstream(tmp.path() / "config.json") << cfg.dump(2);
  std::string bytes[2];
  for (int i = 0; i < 2; ++i) {
    const fs::path out = tmp.path() / ("out" + std::to_string(i));
    const std::string cmd = "\"" + cli + "\" --config \"" + (tmp.path() / "config.json").string() +
                            "\" --seed 5 --mode multigen --out \"" + out.string() +
                            "\" run --run-id r > /dev/null";
    if (std::system(cmd.c_str()) != 0) return fail("run invocation " + std::to_string(i + 1) + " failed");
    std::ifstream in(out / "r" / "metrics.json", std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    bytes[i] = s.str();
  }
  if (bytes[0].empty()) return fail("metrics.json missing");
  return bytes[0] == bytes[1] ? pass("two runs wrote identical metrics.json (" + std::to_string(bytes[0].size()) + " bytes)")
                              : fail("metrics.json differs between runs");
}

std::string fuzz_text(std::mt19937_64& rng) {
  static const std::vector<std::string> pieces = {
      "খবর", "বাংলাদেশ", "news", "ঢাকা", "১২৩", "42", " ", "  ", "\t", "\n", "।", "!!", "??", "...",
      "https://example.com/a?b=1", "www.test.org", "HTTP://X.Y", "😀", "👍🏽", "👨‍👩‍👧", "🇧🇩", "❤️",
      "ﬁ", "Ａ", "①", "é", "র‍্য", "ক্ষ", "য়", "ড়", "‌", "—", "«", "»", "#", "*", "Ω", "你好", "مرحبا"};
  std::uniform_int_distribution<std::size_t> count(0, 40), pick(0, pieces.size() - 1);
  std::string s;
  const std::size_t n = count(rng);
  for (std::size_t i = 0; i < n; ++i) s += pieces[pick(rng)];
  return s;
}

// 10. Normalization idempotence and truncation bounds.
Outcome preprocessing() {
  std::mt19937_64 rng(99);
  std::vector<std::string> texts;
  for (int i = 0; i < 1000; ++i) texts.push_back(fuzz_text(rng));
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const auto once = preprocess::normalize_text(texts[i]);
    if (preprocess::normalize_text(once) != once) return fail("not idempotent on fuzz input " + std::to_string(i));
  }
  std::vector<std::string> normalized;
  for (const auto& t : texts) normalized.push_back(preprocess::normalize_text(t));
  const auto vocab = preprocess::build_vocabulary(normalized, 500);
  const fusion::FusionConfig fc;
  std::size_t checked = 0;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    std::string article;
    for (int k = 0; k < 30; ++k) article += texts[(i + k) % texts.size()] + " ";
    const corpus::NewsRecord rec{article, texts[i], corpus::Category::kOthers, corpus::Aspect::kCulture,
                                 corpus::Sentiment::kNeutral};
    if (preprocess::normalize_text(article).empty()) continue;
    const auto base = fusion::build_baseline_input(rec, vocab, fc, preprocess::kInputTokenLimit);
    const auto multi = fusion::build_multigen_input(rec, vocab, fc, preprocess::kInputTokenLimit);
    const auto target = model::make_target(preprocess::tokenize(preprocess::normalize_text(texts[i]), vocab),
                                           preprocess::kTargetTokenLimit);
    if (base.ids.length() > 512 || multi.ids.length() > 512 || target.length() > 64) {
      return fail("truncation bound violated on input " + std::to_string(i));
    }
    ++checked;
  }
  return pass("1000 fuzzed inputs idempotent; " + std::to_string(checked) + " inputs within 512/64 token bounds");
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::string which = argc > 1 ? argv[1] : "all";
  const std::string cli = argc > 2 ? argv[2] : "";
  const std::vector<Criterion> criteria = {
      {1, "corpus counts", corpus_counts},
      {2, "split partition", split_partition},
      {3, "corpus statistics", corpus_statistics},
      {4, "metric oracles", metric_oracles},
      {5, "hand-computed metrics", hand_values},
      {6, "delta arithmetic", table8_deltas},
      {7, "gradient check", gradient},
      {8, "fusion efficacy", fusion_efficacy},
      {9, "determinism", [&] { return determinism(cli); }},
      {10, "preprocessing properties", preprocessing},
  };
  bool any_fail = false, any_run = false, all_skipped = true;
  for (const auto& c : criteria) {
    if (which != "all" && which != std::to_string(c.id)) continue;
    any_run = true;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = fail(std::string("exception: ") + e.what());
    }
    const char* tag = o.status == Status::kPass ? "PASS" : o.status == Status::kFail ? "FAIL" : "SKIP";
    std::cout << "criterion " << c.id << " (" << c.name << "): " << tag << " - " << o.detail << std::endl;
    any_fail = any_fail || o.status == Status::kFail;
    all_skipped = all_skipped && o.status == Status::kSkip;
  }
  if (!any_run) {
    std::cerr << "unknown criterion '" << which << "'\n";
    return 2;
  }
  if (any_fail) return 1;
  return which != "all" && all_skipped ? 77 : 0;
}
