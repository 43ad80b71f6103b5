#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include "headline/error.hpp"
#include "headline/harness.hpp"

namespace headline::harness {

namespace fs = std::filesystem;

namespace {

template <typename F>
auto stage(const char* name, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const Error& e) {
    throw Error(std::string(name) + ": " + e.what(), e.exit_code());
  }
}

corpus::Format resolve_format(const ExperimentConfig& config) {
  if (config.corpus_format == "auto") return corpus::format_from_path(config.corpus_path);
  return corpus::parse_format(config.corpus_format);
}

std::vector<std::string> words_of(const std::vector<std::string>& texts) {
  std::vector<std::string> words;
  std::set<std::string> seen;
  for (const auto& t : texts) {
    std::istringstream in(t);
    std::string w;
    while (in >> w) {
      if (seen.insert(w).second) words.push_back(w);
    }
  }
  return words;
}

// Control words (prefix and label names) are always present, so both modes
// share one vocabulary; the rest are the most frequent train-split words.
preprocess::Vocabulary build_shared_vocabulary(const ExperimentConfig& config,
                                               const std::vector<corpus::NewsRecord>& records,
                                               const std::vector<std::size_t>& train_ids) {
  std::vector<std::string> control;
  for (auto& w : words_of(fusion::control_texts(config.fusion))) {
    if (std::find(std::begin(preprocess::kReservedTokens), std::end(preprocess::kReservedTokens), w) ==
        std::end(preprocess::kReservedTokens)) {
      control.push_back(std::move(w));
    }
  }
  if (config.vocabulary.max_size < preprocess::kReservedCount + control.size() + 1) {
    throw ConfigError("vocabulary.max_size is too small for the " + std::to_string(control.size()) +
                      " control words");
  }
  std::vector<std::string> texts;
  texts.reserve(train_ids.size() * 2);
  for (std::size_t id : train_ids) {
    texts.push_back(preprocess::normalize_text(records[id].article));
    texts.push_back(preprocess::normalize_text(records[id].headline));
  }
  const preprocess::Vocabulary ranked = preprocess::build_vocabulary(
      texts, config.vocabulary.max_size - control.size(), config.vocabulary.min_frequency);
  std::set<std::string> taken(control.begin(), control.end());
  std::vector<std::string> words = control;
  for (std::size_t i = preprocess::kReservedCount; i < ranked.size(); ++i) {
    const std::string& w = ranked.tokens()[i];
    if (!taken.contains(w)) words.push_back(w);
  }
  return preprocess::Vocabulary::from_words(std::move(words));
}

fusion::FusionInput build_input(const ExperimentConfig& config, RunMode mode,
                                const corpus::NewsRecord& record, const preprocess::Vocabulary& vocab) {
  const std::size_t max_len = std::min(config.training.input_token_length, config.model.max_positions);
  if (mode == RunMode::kBaseline) return fusion::build_baseline_input(record, vocab, config.fusion, max_len);
  return fusion::build_multigen_input(record, vocab, config.fusion, max_len);
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("failed writing " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

nlohmann::json parse_json_file(const fs::path& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

}  // namespace

PreparedData prepare(const ExperimentConfig& config, RunMode mode) {
  config.validate();
  PreparedData data;
  data.records = stage("load", [&] {
    if (config.corpus_path.empty()) throw ConfigError("corpus.path is not set");
    return corpus::load_corpus(config.corpus_path, resolve_format(config));
  });
  data.split = stage("split", [&] {
    return corpus::split_corpus(data.records.size(), config.split, config.split_seed);
  });
  stage("preprocess", [&] {
    data.vocab = build_shared_vocabulary(config, data.records, data.split.train);
    for (std::size_t id : data.split.train) {
      const auto& r = data.records[id];
      data.train_inputs.push_back(build_input(config, mode, r, data.vocab));
      const auto headline = preprocess::tokenize(preprocess::normalize_text(r.headline), data.vocab);
      data.train_targets.push_back(model::make_target(headline, config.training.target_token_length));
    }
    for (std::size_t id : data.split.test) {
      data.test_inputs.push_back(build_input(config, mode, data.records[id], data.vocab));
    }
  });
  return data;
}

model::ModelConfig resolved_model_config(const ExperimentConfig& config,
                                         const preprocess::Vocabulary& vocab) {
  model::ModelConfig m = config.model;
  m.vocab_size = vocab.size();
  return m;
}

model::TrainResult train_model(const ExperimentConfig& config, const PreparedData& data) {
  return stage("train", [&] {
    std::vector<model::TrainingPair> pairs;
    pairs.reserve(data.train_inputs.size());
    for (std::size_t i = 0; i < data.train_inputs.size(); ++i) {
      pairs.push_back({data.train_inputs[i].ids, data.train_targets[i]});
    }
    model::ModelParameters params = model::init_model(resolved_model_config(config, data.vocab));
    return model::train(std::move(params), pairs, config.training);
  });
}

std::vector<SampleRecord> generate_samples(const ExperimentConfig& config, const PreparedData& data,
                                           const model::ModelParameters& params) {
  return stage("generate", [&] {
    std::vector<preprocess::TokenSequence> inputs;
    inputs.reserve(data.test_inputs.size());
    for (const auto& in : data.test_inputs) inputs.push_back(in.ids);
    const auto outputs = model::generate_all(params, inputs, config.decode);
    std::vector<SampleRecord> samples;
    for (std::size_t i = 0; i < outputs.size(); ++i) {
      const std::size_t id = data.split.test[i];
      samples.push_back({id, fusion::render(data.test_inputs[i], data.vocab), data.records[id].headline,
                         preprocess::detokenize(outputs[i], data.vocab)});
    }
    return samples;
  });
}

std::unique_ptr<metrics::EmbeddingProvider> make_embedder(const ExperimentConfig& config,
                                                          const PreparedData& data) {
  if (config.metrics.embedding == "hash") {
    return std::make_unique<metrics::HashEmbedding>(config.metrics.embedding_dimension,
                                                    config.metrics.embedding_seed);
  }
  std::vector<metrics::Tokens> sentences;
  for (std::size_t id : data.split.train) {
    sentences.push_back(corpus::word_tokenize(data.records[id].article));
    sentences.push_back(corpus::word_tokenize(data.records[id].headline));
  }
  metrics::PpmiEmbedding::Options options;
  options.dimension = config.metrics.embedding_dimension;
  options.seed = config.metrics.embedding_seed;
  return std::make_unique<metrics::PpmiEmbedding>(metrics::PpmiEmbedding::train(sentences, options));
}

metrics::Evaluation evaluate_samples(const ExperimentConfig& config, const PreparedData& data,
                                     std::span<const SampleRecord> samples) {
  return stage("evaluate", [&] {
    std::vector<std::string> generated, references;
    for (const auto& s : samples) {
      generated.push_back(s.generated);
      references.push_back(s.reference);
    }
    const auto embedder = make_embedder(config, data);
    metrics::EvaluationOptions options;
    options.max_n = config.metrics.bleu_max_n;
    return metrics::evaluate_corpus(generated, references, corpus::word_tokenize, *embedder, options);
  });
}

bool same_results(const RunRecord& a, const RunRecord& b) {
  return a.mode == b.mode && a.config == b.config && a.test_ids == b.test_ids && a.samples == b.samples &&
         a.metrics_unit == b.metrics_unit && a.loss == b.loss;
}

bool operator==(const RunRecord& a, const RunRecord& b) {
  return a.run_id == b.run_id && a.timestamp == b.timestamp && same_results(a, b);
}

std::string next_run_id(const fs::path& output_dir, RunMode mode, std::uint64_t seed) {
  const std::string stem = std::string(to_string(mode)) + "-" + std::to_string(seed) + "-";
  for (std::size_t n = 1;; ++n) {
    const std::string id = stem + std::to_string(n);
    if (!fs::exists(output_dir / id)) return id;
  }
}

RunRecord run_experiment(const ExperimentConfig& config, RunMode mode, const RunOptions& options) {
  const PreparedData data = prepare(config, mode);
  const model::TrainResult trained = train_model(config, data);
  RunRecord record;
  record.mode = mode;
  record.config = to_json(config);
  record.test_ids = data.split.test;
  record.samples = generate_samples(config, data, trained.params);
  record.metrics_unit = evaluate_samples(config, data, record.samples).unit;
  record.loss = trained.epoch_losses;
  record.timestamp = utc_timestamp();
  record.run_id = options.run_id.empty() ? next_run_id(config.output_dir, mode, config.training.seed)
                                         : options.run_id;
  if (options.persist) {
    stage("persist", [&] {
      const fs::path dir = persist_run(record, config.output_dir);
      model::save_checkpoint(dir / "model.bin", trained.params);
      data.vocab.save(dir / "vocab.txt");
    });
  }
  return record;
}

std::string render_samples_jsonl(std::span<const SampleRecord> samples) {
  std::string out;
  for (const auto& s : samples) {
    nlohmann::ordered_json line;
    line["id"] = s.id;
    line["input_rendered"] = s.input_rendered;
    line["reference"] = s.reference;
    line["generated"] = s.generated;
    out += line.dump() + "\n";
  }
  return out;
}

std::vector<SampleRecord> read_samples_jsonl(std::istream& in) {
  std::vector<SampleRecord> samples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      samples.push_back({j.at("id").get<std::size_t>(), j.at("input_rendered").get<std::string>(),
                         j.at("reference").get<std::string>(), j.at("generated").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError("samples.jsonl line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return samples;
}

fs::path persist_run(const RunRecord& record, const fs::path& output_dir) {
  const fs::path dir = output_dir / record.run_id;
  std::error_code ec;
  if (fs::exists(dir, ec)) throw IoError("run directory already exists: " + dir.string());
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  write_file(dir / "config.json", record.config.dump(2) + "\n");
  write_file(dir / "samples.jsonl", render_samples_jsonl(record.samples));
  write_file(dir / "metrics.json", metrics::to_json(record.metrics_percent()).dump(2) + "\n");
  write_file(dir / "metrics_unit.json", metrics::to_json(record.metrics_unit, true).dump(2) + "\n");
  write_file(dir / "loss.csv", model::render_loss_csv(record.loss));
  nlohmann::ordered_json run;
  run["run_id"] = record.run_id;
  run["timestamp"] = record.timestamp;
  run["mode"] = std::string(to_string(record.mode));
  run["test_ids"] = record.test_ids;
  write_file(dir / "run.json", run.dump(2) + "\n");
  return dir;
}

RunRecord load_run(const fs::path& dir) {
  RunRecord r;
  const nlohmann::json run = parse_json_file(dir / "run.json");
  try {
    r.run_id = run.at("run_id").get<std::string>();
    r.timestamp = run.at("timestamp").get<std::string>();
    r.mode = parse_run_mode(run.at("mode").get<std::string>());
    r.test_ids = run.at("test_ids").get<std::vector<std::size_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError((dir / "run.json").string() + ": " + e.what());
  }
  try {
    r.config = nlohmann::ordered_json::parse(read_file(dir / "config.json"));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError((dir / "config.json").string() + ": " + e.what());
  }
  r.metrics_unit = metrics::report_from_json(parse_json_file(dir / "metrics_unit.json"));

  std::istringstream samples(read_file(dir / "samples.jsonl"));
  r.samples = read_samples_jsonl(samples);

  std::istringstream loss(read_file(dir / "loss.csv"));
  std::string line;
  std::getline(loss, line);
  if (line != "epoch,loss") throw SchemaError("loss.csv: bad header");
  while (std::getline(loss, line)) {
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw SchemaError("loss.csv: malformed row '" + line + "'");
    try {
      r.loss.push_back(std::stod(line.substr(comma + 1)));
    } catch (const std::logic_error&) {
      throw SchemaError("loss.csv: malformed row '" + line + "'");
    }
  }
  return r;
}

}  // namespace headline::harness
