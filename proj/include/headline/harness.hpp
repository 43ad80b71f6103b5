#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "headline/corpus.hpp"
#include "headline/fusion.hpp"
#include "headline/metrics.hpp"
#include "headline/model.hpp"
#include "headline/preprocess.hpp"

namespace headline::harness {

enum class RunMode { kBaseline, kMultigen };

std::string_view to_string(RunMode mode);
/// "baseline" or "multigen"; throws ValidationError otherwise.
RunMode parse_run_mode(std::string_view s);

struct VocabularyOptions {
  std::size_t max_size = 20000;
  std::size_t min_frequency = 1;
};

struct MetricOptions {
  /// "hash" or "ppmi".
  std::string embedding = "hash";
  std::size_t embedding_dimension = 256;
  std::uint64_t embedding_seed = 0x5eed;
  int bleu_max_n = 4;
};

struct ExperimentConfig {
  std::filesystem::path corpus_path;
  /// "auto" (from the extension), "jsonl" or "csv".
  std::string corpus_format = "auto";
  corpus::SplitCounts split;
  std::uint64_t split_seed = 42;
  VocabularyOptions vocabulary;
  fusion::FusionConfig fusion;
  model::ModelConfig model;
  model::TrainingConfig training;
  /// Allows training values outside the tuning grid.
  bool override_search_space = false;
  model::DecodeConfig decode;
  MetricOptions metrics;
  std::filesystem::path output_dir = "runs";

  /// Throws ConfigError on invalid values, including training values
  /// outside the tuning grid without the override.
  void validate() const;
  /// Sets the split, model and training seeds to `seed`.
  void apply_seed(std::uint64_t seed);
};

/// Every section and key is optional and defaults as above; unknown keys are
/// rejected with ConfigError. model.vocab_size is derived from the data and
/// must not be given.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Everything the model sees for one mode, built from the train split.
struct PreparedData {
  std::vector<corpus::NewsRecord> records;
  corpus::CorpusSplit split;
  preprocess::Vocabulary vocab;
  std::vector<fusion::FusionInput> train_inputs;
  std::vector<preprocess::TokenSequence> train_targets;
  std::vector<fusion::FusionInput> test_inputs;
};

/// load, split, vocabulary (train split plus control texts), inputs per mode.
PreparedData prepare(const ExperimentConfig& config, RunMode mode);

/// Model config with vocab_size filled in from the vocabulary.
model::ModelConfig resolved_model_config(const ExperimentConfig& config,
                                         const preprocess::Vocabulary& vocab);

model::TrainResult train_model(const ExperimentConfig& config, const PreparedData& data);

struct SampleRecord {
  std::size_t id = 0;
  std::string input_rendered;
  std::string reference;
  std::string generated;
  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

std::vector<SampleRecord> generate_samples(const ExperimentConfig& config, const PreparedData& data,
                                           const model::ModelParameters& params);

std::unique_ptr<metrics::EmbeddingProvider> make_embedder(const ExperimentConfig& config,
                                                          const PreparedData& data);

metrics::Evaluation evaluate_samples(const ExperimentConfig& config, const PreparedData& data,
                                     std::span<const SampleRecord> samples);

struct RunRecord {
  std::string run_id;
  std::string timestamp;
  RunMode mode = RunMode::kBaseline;
  nlohmann::ordered_json config;
  std::vector<std::size_t> test_ids;
  std::vector<SampleRecord> samples;
  /// Unrounded unit-scale report; metrics.json holds the percent form.
  metrics::MetricReport metrics_unit;
  std::vector<double> loss;

  metrics::MetricReport metrics_percent() const { return metrics_unit.to_percent().rounded(2); }
};

/// Equality ignoring run id and timestamp.
bool same_results(const RunRecord& a, const RunRecord& b);
bool operator==(const RunRecord& a, const RunRecord& b);

struct RunOptions {
  /// Persist under config.output_dir; disable for in-memory runs.
  bool persist = true;
  /// Explicit run id; a unique one is derived when empty.
  std::string run_id;
};

/// Runs the whole pipeline. Stage failures are rethrown as Error with the
/// stage name prefixed and the original exit code kept.
RunRecord run_experiment(const ExperimentConfig& config, RunMode mode, const RunOptions& options = {});

/// Writes config.json, samples.jsonl, metrics.json, metrics_unit.json,
/// loss.csv and run.json into output_dir/run_id. Throws IoError if the
/// directory exists or cannot be written.
std::filesystem::path persist_run(const RunRecord& record, const std::filesystem::path& output_dir);
RunRecord load_run(const std::filesystem::path& run_dir);

/// One {id, input_rendered, reference, generated} object per line.
std::string render_samples_jsonl(std::span<const SampleRecord> samples);
/// Throws SchemaError naming the offending line.
std::vector<SampleRecord> read_samples_jsonl(std::istream& in);

/// Unique id "<mode>-<seed>-<n>" not yet present in output_dir.
std::string next_run_id(const std::filesystem::path& output_dir, RunMode mode, std::uint64_t seed);

using MetricMap = std::vector<std::pair<std::string, double>>;

/// bleu, rouge1, rouge2, rougeL, bertscore, meteor (Table 8 column order).
MetricMap metric_map(const metrics::MetricReport& report);
/// Flat JSON object of numbers. Non-numeric keys such as "scale" are skipped.
MetricMap metric_map_from_json(const nlohmann::ordered_json& j);

struct ComparisonRow {
  std::string metric;
  double baseline = 0.0;
  double proposed = 0.0;
  /// Empty when the baseline is 0.
  std::optional<double> delta_percent;
  friend bool operator==(const ComparisonRow&, const ComparisonRow&) = default;
};

struct ComparisonTable {
  std::string baseline_label = "baseline";
  std::string proposed_label = "proposed";
  std::vector<ComparisonRow> rows;
};

/// (proposed - baseline) / baseline x 100, rounded half up to 1 decimal.
std::optional<double> delta_percent(double baseline, double proposed);
/// "+15.7%", "-1.5%", "+0.0%", or "—" when undefined.
std::string render_delta(const std::optional<double>& delta);

/// Throws SchemaError unless both maps have the same keys.
ComparisonTable compare(const MetricMap& baseline, const MetricMap& proposed);
ComparisonTable compare(const RunRecord& baseline, const RunRecord& proposed);

enum class ReportFormat { kTsv, kJson, kMarkdown };
/// Throws ParameterError for an unknown name.
ReportFormat parse_report_format(std::string_view s);

struct ReportOptions {
  std::size_t sample_count = 10;
};

/// The comparison table alone, in the same layout render_report uses.
std::string render_comparison(const ComparisonTable& table, ReportFormat format);

/// Comparison tables, per-run metrics and a side-by-side sample dump
/// (reference next to each run's output, matched by record id). Throws
/// ParameterError when runs is empty.
std::string render_report(std::span<const RunRecord> runs, std::span<const ComparisonTable> comparisons,
                          ReportFormat format, const ReportOptions& options = {});

/// Synthetic corpus whose headline is a fixed function of the sentiment
/// label; articles are random filler drawn independently of every label.
std::vector<corpus::NewsRecord> synthetic_sentiment_corpus(std::size_t count, std::uint64_t seed);
/// The headline text the synthetic corpus uses for `sentiment`.
std::string synthetic_headline(corpus::Sentiment sentiment);

}  // namespace headline::harness
