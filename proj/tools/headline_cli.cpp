#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "headline/corpus.hpp"
#include "headline/error.hpp"
#include "headline/harness.hpp"
#include "headline/model.hpp"

namespace fs = std::filesystem;
using namespace headline;

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string mode = "multigen";
  std::string out;
};

harness::ExperimentConfig load(const Globals& g) {
  harness::ExperimentConfig config;
  if (!g.config_path.empty()) config = harness::load_config(g.config_path);
  if (g.seed) config.apply_seed(*g.seed);
  return config;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

fs::path ensure_dir(const std::string& dir) {
  if (dir.empty()) throw ValidationError("--out <dir> is required for this command");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
  return dir;
}

// Either stdout, or a file when --out is given.
void emit(const Globals& g, const std::string& default_name, const std::string& text) {
  if (g.out.empty()) {
    std::cout << text;
    return;
  }
  const fs::path out = g.out;
  write_text(fs::is_directory(out) ? out / default_name : out, text);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<corpus::NewsRecord> load_records(const harness::ExperimentConfig& config,
                                             const std::string& override_path) {
  const fs::path path = override_path.empty() ? config.corpus_path : fs::path(override_path);
  if (path.empty()) throw ConfigError("no corpus: set corpus.path in --config or pass --corpus");
  const auto format = (!override_path.empty() || config.corpus_format == "auto")
                          ? corpus::format_from_path(path)
                          : corpus::parse_format(config.corpus_format);
  return corpus::load_corpus(path, format);
}

// A run directory or a flat metrics JSON file.
harness::MetricMap load_metrics(const fs::path& path, std::string& label) {
  if (fs::is_directory(path)) {
    const auto run = harness::load_run(path);
    label = run.run_id;
    return harness::metric_map(run.metrics_percent());
  }
  label = path.stem().string();
  try {
    return harness::metric_map_from_json(nlohmann::ordered_json::parse(read_text(path)));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

int cmd_stats(const Globals& g, const std::string& corpus_path) {
  const auto config = load(g);
  const auto records = load_records(config, corpus_path);
  const auto stats = corpus::compute_statistics(records);
  if (g.out.empty()) {
    std::cout << corpus::render_statistics_tsv(stats);
    return 0;
  }
  const fs::path dir = ensure_dir(g.out);
  write_text(dir / "stats.tsv", corpus::render_statistics_tsv(stats));
  write_text(dir / "stats.json", corpus::to_json(stats).dump(2) + "\n");
  write_text(dir / "article_lengths.csv",
             corpus::render_histogram_csv(stats.article_length_histogram, stats.article_bin_width));
  write_text(dir / "headline_lengths.csv",
             corpus::render_histogram_csv(stats.headline_length_histogram, stats.headline_bin_width));
  std::cout << "wrote statistics to " << dir.string() << "\n";
  return 0;
}

int cmd_split(const Globals& g, const std::string& corpus_path) {
  const auto config = load(g);
  const auto records = load_records(config, corpus_path);
  const auto split = corpus::split_corpus(records.size(), config.split, config.split_seed);
  emit(g, "split.json", corpus::to_json(split).dump(2) + "\n");
  return 0;
}

int cmd_preprocess(const Globals& g) {
  const auto config = load(g);
  const auto mode = harness::parse_run_mode(g.mode);
  const auto data = harness::prepare(config, mode);
  const fs::path dir = ensure_dir(g.out);
  data.vocab.save(dir / "vocab.txt");
  std::string lines;
  for (std::size_t i = 0; i < data.split.train.size(); ++i) {
    nlohmann::ordered_json j;
    j["id"] = data.split.train[i];
    j["split"] = "train";
    j["input"] = fusion::render(data.train_inputs[i], data.vocab);
    j["input_tokens"] = data.train_inputs[i].ids.length();
    lines += j.dump() + "\n";
  }
  for (std::size_t i = 0; i < data.split.test.size(); ++i) {
    nlohmann::ordered_json j;
    j["id"] = data.split.test[i];
    j["split"] = "test";
    j["input"] = fusion::render(data.test_inputs[i], data.vocab);
    j["input_tokens"] = data.test_inputs[i].ids.length();
    lines += j.dump() + "\n";
  }
  write_text(dir / "inputs.jsonl", lines);
  write_text(dir / "split.json", corpus::to_json(data.split).dump(2) + "\n");
  std::cout << "vocabulary " << data.vocab.size() << ", train " << data.train_inputs.size() << ", test "
            << data.test_inputs.size() << " (" << g.mode << ")\n";
  return 0;
}

int cmd_train(const Globals& g) {
  const auto config = load(g);
  const auto data = harness::prepare(config, harness::parse_run_mode(g.mode));
  const fs::path dir = ensure_dir(g.out);
  const auto trained = harness::train_model(config, data);
  model::save_checkpoint(dir / "model.bin", trained.params);
  data.vocab.save(dir / "vocab.txt");
  write_text(dir / "loss.csv", model::render_loss_csv(trained.epoch_losses));
  std::cout << "trained " << trained.epoch_losses.size() << " epochs, final loss "
            << (trained.epoch_losses.empty() ? 0.0 : trained.epoch_losses.back()) << "\n";
  return 0;
}

int cmd_generate(const Globals& g, const std::string& checkpoint) {
  const auto config = load(g);
  const auto data = harness::prepare(config, harness::parse_run_mode(g.mode));
  const auto params = model::load_checkpoint(checkpoint);
  if (params.config.vocab_size != data.vocab.size()) {
    throw ValidationError("checkpoint vocabulary (" + std::to_string(params.config.vocab_size) +
                          ") does not match the config's vocabulary (" + std::to_string(data.vocab.size()) + ")");
  }
  const auto samples = harness::generate_samples(config, data, params);
  emit(g, "samples.jsonl", harness::render_samples_jsonl(samples));
  return 0;
}

int cmd_evaluate(const Globals& g, const std::string& samples_path) {
  const auto config = load(g);
  std::ifstream in(samples_path);
  if (!in) throw IoError("cannot open " + samples_path);
  const auto samples = harness::read_samples_jsonl(in);
  harness::PreparedData data;
  // Only the ppmi embedding needs the training split.
  if (config.metrics.embedding != "hash") data = harness::prepare(config, harness::parse_run_mode(g.mode));
  const auto evaluation = harness::evaluate_samples(config, data, samples);
  emit(g, "metrics.json", metrics::to_json(evaluation.percent).dump(2) + "\n");
  return 0;
}

int cmd_run(const Globals& g, const std::string& run_id) {
  auto config = load(g);
  if (!g.out.empty()) config.output_dir = g.out;
  harness::RunOptions options;
  options.run_id = run_id;
  const auto record = harness::run_experiment(config, harness::parse_run_mode(g.mode), options);
  std::cout << (config.output_dir / record.run_id).string() << "\n"
            << metrics::to_json(record.metrics_percent()).dump(2) << "\n";
  return 0;
}

int cmd_compare(const Globals& g, const std::string& baseline, const std::string& proposed,
                const std::string& format) {
  harness::ComparisonTable table;
  std::string base_label, prop_label;
  const auto base = load_metrics(baseline, base_label);
  const auto prop = load_metrics(proposed, prop_label);
  table = harness::compare(base, prop);
  table.baseline_label = base_label;
  table.proposed_label = prop_label;
  const auto fmt = harness::parse_report_format(format);
  emit(g, "comparison." + std::string(fmt == harness::ReportFormat::kMarkdown ? "md" : format),
       harness::render_comparison(table, fmt));
  return 0;
}

int cmd_report(const Globals& g, const std::vector<std::string>& run_dirs, const std::string& format,
               std::size_t sample_count, const std::string& histogram_dir) {
  const auto fmt = harness::parse_report_format(format);
  std::vector<harness::RunRecord> runs;
  for (const auto& d : run_dirs) runs.push_back(harness::load_run(d));
  std::vector<harness::ComparisonTable> comparisons;
  for (std::size_t i = 1; i < runs.size(); ++i) comparisons.push_back(harness::compare(runs.front(), runs[i]));
  harness::ReportOptions options;
  options.sample_count = sample_count;
  const std::string ext = fmt == harness::ReportFormat::kMarkdown ? "md" : format;
  emit(g, "report." + ext, harness::render_report(runs, comparisons, fmt, options));
  if (!histogram_dir.empty()) {
    const auto config = load(g);
    const auto stats = corpus::compute_statistics(load_records(config, ""));
    const fs::path dir = ensure_dir(histogram_dir);
    write_text(dir / "article_lengths.csv",
               corpus::render_histogram_csv(stats.article_length_histogram, stats.article_bin_width));
    write_text(dir / "headline_lengths.csv",
               corpus::render_histogram_csv(stats.headline_length_histogram, stats.headline_bin_width));
  }
  return 0;
}

int cmd_synth(const Globals& g, std::size_t count) {
  if (g.out.empty()) throw ValidationError("--out <file.jsonl|file.csv> is required for synth");
  const auto records = harness::synthetic_sentiment_corpus(count, g.seed.value_or(1));
  const fs::path path = g.out;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  corpus::save_corpus(path, records, corpus::format_from_path(path));
  std::cout << "wrote " << records.size() << " records to " << path.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Headline generation toolkit: corpus tools, training, evaluation and reports."};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config_path, "Experiment config JSON")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Overrides the split, model and training seeds");
  app.add_option("--mode", g.mode, "Input mode")->check(CLI::IsMember({"baseline", "multigen"}));
  app.add_option("--out", g.out, "Output directory or file");

  std::string corpus_path;
  auto* stats = app.add_subcommand("stats", "Corpus label counts, text statistics, novelty and histograms");
  stats->add_option("--corpus", corpus_path, "Corpus file (overrides corpus.path)");
  auto* split = app.add_subcommand("split", "Seeded train/validation/test split as JSON");
  split->add_option("--corpus", corpus_path, "Corpus file (overrides corpus.path)");
  auto* prep = app.add_subcommand("preprocess", "Vocabulary and rendered model inputs for --mode");
  auto* train = app.add_subcommand("train", "Train a model and write model.bin, vocab.txt, loss.csv");

  std::string checkpoint;
  auto* generate = app.add_subcommand("generate", "Generate headlines for the test split");
  generate->add_option("--checkpoint", checkpoint, "Checkpoint written by train")->required();

  std::string samples_path;
  auto* evaluate = app.add_subcommand("evaluate", "Score a samples.jsonl file");
  evaluate->add_option("--samples", samples_path, "samples.jsonl to score")->required();

  std::string run_id;
  auto* run = app.add_subcommand("run", "Full pipeline for --mode, persisted under --out");
  run->add_option("--run-id", run_id, "Explicit run id");

  std::string baseline, proposed, format = "tsv";
  auto* compare = app.add_subcommand("compare", "Per-metric deltas between two runs or metric files");
  compare->add_option("baseline", baseline, "Baseline run directory or metrics JSON")->required();
  compare->add_option("proposed", proposed, "Proposed run directory or metrics JSON")->required();
  compare->add_option("--format", format, "tsv, json or markdown");

  std::vector<std::string> run_dirs;
  std::size_t sample_count = 10;
  std::string histogram_dir;
  auto* report = app.add_subcommand("report", "Comparison, per-run metrics and side-by-side samples");
  report->add_option("runs", run_dirs, "Run directories; the first is the baseline")->required();
  report->add_option("--format", format, "tsv, json or markdown");
  report->add_option("--samples", sample_count, "Number of samples in the side-by-side dump");
  report->add_option("--histograms", histogram_dir, "Also write length histograms of the config's corpus here");

  std::size_t synth_count = 512;
  auto* synth = app.add_subcommand("synth", "Write the synthetic sentiment-headline corpus to --out");
  synth->add_option("--count", synth_count, "Number of records");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::kValidation);
  }

  try {
    if (*stats) return cmd_stats(g, corpus_path);
    if (*split) return cmd_split(g, corpus_path);
    if (*prep) return cmd_preprocess(g);
    if (*train) return cmd_train(g);
    if (*generate) return cmd_generate(g, checkpoint);
    if (*evaluate) return cmd_evaluate(g, samples_path);
    if (*run) return cmd_run(g, run_id);
    if (*compare) return cmd_compare(g, baseline, proposed, format);
    if (*synth) return cmd_synth(g, synth_count);
    if (*report) return cmd_report(g, run_dirs, format, sample_count, histogram_dir);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kValidation);
  }
  return 0;
}
