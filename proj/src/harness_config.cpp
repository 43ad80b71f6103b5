#include <fstream>
#include <set>

#include "headline/error.hpp"
#include "headline/harness.hpp"

namespace headline::harness {

std::string_view to_string(RunMode mode) {
  return mode == RunMode::kBaseline ? "baseline" : "multigen";
}

RunMode parse_run_mode(std::string_view s) {
  if (s == "baseline") return RunMode::kBaseline;
  if (s == "multigen") return RunMode::kMultigen;
  throw ValidationError("unknown mode '" + std::string(s) + "' (expected baseline or multigen)");
}

namespace {

// Reads the keys of one JSON object section; every key must be consumed.
class Section {
 public:
  Section(const nlohmann::json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError(name_ + " must be a JSON object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  const nlohmann::json* take(const char* key) {
    if (!j_.contains(key)) return nullptr;
    seen_.insert(key);
    return &j_.at(key);
  }

  void count(const char* key, std::size_t& out) {
    if (const auto* v = take(key)) {
      if (!v->is_number_unsigned()) fail(key, "a non-negative integer");
      out = v->get<std::size_t>();
    }
  }
  void seed(const char* key, std::uint64_t& out) {
    if (const auto* v = take(key)) {
      if (!v->is_number_unsigned()) fail(key, "a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }
  void integer(const char* key, int& out) {
    if (const auto* v = take(key)) {
      if (!v->is_number_integer()) fail(key, "an integer");
      out = v->get<int>();
    }
  }
  void real(const char* key, double& out) {
    if (const auto* v = take(key)) {
      if (!v->is_number()) fail(key, "a number");
      out = v->get<double>();
    }
  }
  void flag(const char* key, bool& out) {
    if (const auto* v = take(key)) {
      if (!v->is_boolean()) fail(key, "a boolean");
      out = v->get<bool>();
    }
  }
  void text(const char* key, std::string& out) {
    if (const auto* v = take(key)) {
      if (!v->is_string()) fail(key, "a string");
      out = v->get<std::string>();
    }
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.contains(key)) throw ConfigError("unknown config key '" + name_ + "." + key + "'");
    }
  }

  const std::string& name() const { return name_; }

 private:
  [[noreturn]] void fail(const char* key, const char* expected) const {
    throw ConfigError("config key '" + name_ + "." + key + "' must be " + expected);
  }

  const nlohmann::json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

model::Optimizer parse_optimizer(const std::string& s) {
  if (s == "sgd") return model::Optimizer::kSgd;
  if (s == "adam") return model::Optimizer::kAdam;
  throw ConfigError("training.optimizer must be 'sgd' or 'adam'");
}

model::DecodeStrategy parse_strategy(const std::string& s) {
  if (s == "greedy") return model::DecodeStrategy::kGreedy;
  if (s == "beam") return model::DecodeStrategy::kBeam;
  throw ConfigError("decode.strategy must be 'greedy' or 'beam'");
}

}  // namespace

void ExperimentConfig::validate() const {
  if (corpus_format != "auto" && corpus_format != "jsonl" && corpus_format != "csv") {
    throw ConfigError("corpus.format must be auto, jsonl or csv");
  }
  if (split.train < 1 || split.test < 1) throw ConfigError("split needs at least one train and one test record");
  if (vocabulary.max_size <= preprocess::kReservedCount) {
    throw ConfigError("vocabulary.max_size must exceed the reserved tokens");
  }
  if (vocabulary.min_frequency < 1) throw ConfigError("vocabulary.min_frequency must be >= 1");
  if (model.vocab_size != 0) throw ConfigError("model.vocab_size is derived from the data");
  model::ModelConfig probe = model;
  probe.vocab_size = preprocess::kReservedCount;
  probe.validate();
  if (training.epochs < 1) throw ConfigError("training.epochs must be >= 1");
  if (training.batch_size < 1) throw ConfigError("training.batch_size must be >= 1");
  if (!(training.learning_rate > 0.0)) throw ConfigError("training.learning_rate must be > 0");
  if (training.input_token_length < 1 || training.target_token_length < 1) {
    throw ConfigError("training token lengths must be >= 1");
  }
  if (training.clip_norm < 0.0) throw ConfigError("training.clip_norm must be >= 0");
  if (!override_search_space && !training.in_search_space()) {
    throw ConfigError(
        "training values are outside the tuning grid (lr {2e-5,1e-4,1e-3}, epochs 3-10, batch {4,8}, "
        "input {512,1024}, target {16,32,64,128}); set training.override_search_space to allow");
  }
  if (decode.beam_width < 1) throw ConfigError("decode.beam_width must be >= 1");
  if (decode.max_target_length < 1) throw ConfigError("decode.max_target_length must be >= 1");
  if (metrics.embedding != "hash" && metrics.embedding != "ppmi") {
    throw ConfigError("metrics.embedding must be 'hash' or 'ppmi'");
  }
  if (metrics.embedding_dimension < 1) throw ConfigError("metrics.embedding_dimension must be >= 1");
  if (metrics.bleu_max_n < 1) throw ConfigError("metrics.bleu_max_n must be >= 1");
}

void ExperimentConfig::apply_seed(std::uint64_t seed) {
  split_seed = seed;
  model.seed = seed;
  training.seed = seed;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  Section root(j, "config");
  if (const auto* v = root.take("corpus")) {
    Section s(*v, "corpus");
    std::string path;
    s.text("path", path);
    c.corpus_path = path;
    s.text("format", c.corpus_format);
    s.finish();
  }
  if (const auto* v = root.take("split")) {
    Section s(*v, "split");
    s.count("train", c.split.train);
    s.count("validation", c.split.validation);
    s.count("test", c.split.test);
    s.seed("seed", c.split_seed);
    s.finish();
  }
  if (const auto* v = root.take("vocabulary")) {
    Section s(*v, "vocabulary");
    s.count("max_size", c.vocabulary.max_size);
    s.count("min_frequency", c.vocabulary.min_frequency);
    s.finish();
  }
  if (const auto* v = root.take("fusion")) {
    Section s(*v, "fusion");
    s.flag("include_category", c.fusion.include_category);
    s.flag("include_aspect", c.fusion.include_aspect);
    s.flag("include_sentiment", c.fusion.include_sentiment);
    s.text("task_prefix", c.fusion.task_prefix);
    s.finish();
  }
  if (const auto* v = root.take("model")) {
    Section s(*v, "model");
    s.count("d_model", c.model.d_model);
    s.count("n_heads", c.model.n_heads);
    s.count("n_encoder_layers", c.model.n_encoder_layers);
    s.count("n_decoder_layers", c.model.n_decoder_layers);
    s.count("d_ff", c.model.d_ff);
    s.count("max_positions", c.model.max_positions);
    s.seed("seed", c.model.seed);
    s.finish();
  }
  if (const auto* v = root.take("training")) {
    Section s(*v, "training");
    s.real("learning_rate", c.training.learning_rate);
    s.count("epochs", c.training.epochs);
    s.count("batch_size", c.training.batch_size);
    s.count("input_token_length", c.training.input_token_length);
    s.count("target_token_length", c.training.target_token_length);
    s.seed("seed", c.training.seed);
    s.real("clip_norm", c.training.clip_norm);
    std::string optimizer = "sgd";
    s.text("optimizer", optimizer);
    c.training.optimizer = parse_optimizer(optimizer);
    s.flag("override_search_space", c.override_search_space);
    s.finish();
  }
  if (const auto* v = root.take("decode")) {
    Section s(*v, "decode");
    std::string strategy = "greedy";
    s.text("strategy", strategy);
    c.decode.strategy = parse_strategy(strategy);
    s.count("beam_width", c.decode.beam_width);
    s.count("max_target_length", c.decode.max_target_length);
    s.finish();
  }
  if (const auto* v = root.take("metrics")) {
    Section s(*v, "metrics");
    s.text("embedding", c.metrics.embedding);
    s.count("embedding_dimension", c.metrics.embedding_dimension);
    s.seed("embedding_seed", c.metrics.embedding_seed);
    s.integer("bleu_max_n", c.metrics.bleu_max_n);
    s.finish();
  }
  std::string out = c.output_dir.string();
  root.text("output_dir", out);
  c.output_dir = out;
  root.finish();
  c.validate();
  return c;
}

nlohmann::ordered_json to_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  j["corpus"] = {{"path", c.corpus_path.string()}, {"format", c.corpus_format}};
  j["split"] = {{"train", c.split.train},
                {"validation", c.split.validation},
                {"test", c.split.test},
                {"seed", c.split_seed}};
  j["vocabulary"] = {{"max_size", c.vocabulary.max_size},
                     {"min_frequency", c.vocabulary.min_frequency}};
  j["fusion"] = {{"include_category", c.fusion.include_category},
                 {"include_aspect", c.fusion.include_aspect},
                 {"include_sentiment", c.fusion.include_sentiment},
                 {"task_prefix", c.fusion.task_prefix}};
  j["model"] = {{"d_model", c.model.d_model},
                {"n_heads", c.model.n_heads},
                {"n_encoder_layers", c.model.n_encoder_layers},
                {"n_decoder_layers", c.model.n_decoder_layers},
                {"d_ff", c.model.d_ff},
                {"max_positions", c.model.max_positions},
                {"seed", c.model.seed}};
  j["training"] = {{"learning_rate", c.training.learning_rate},
                   {"epochs", c.training.epochs},
                   {"batch_size", c.training.batch_size},
                   {"input_token_length", c.training.input_token_length},
                   {"target_token_length", c.training.target_token_length},
                   {"seed", c.training.seed},
                   {"clip_norm", c.training.clip_norm},
                   {"optimizer", c.training.optimizer == model::Optimizer::kSgd ? "sgd" : "adam"},
                   {"override_search_space", c.override_search_space}};
  j["decode"] = {{"strategy", c.decode.strategy == model::DecodeStrategy::kGreedy ? "greedy" : "beam"},
                 {"beam_width", c.decode.beam_width},
                 {"max_target_length", c.decode.max_target_length}};
  j["metrics"] = {{"embedding", c.metrics.embedding},
                  {"embedding_dimension", c.metrics.embedding_dimension},
                  {"embedding_seed", c.metrics.embedding_seed},
                  {"bleu_max_n", c.metrics.bleu_max_n}};
  j["output_dir"] = c.output_dir.string();
  return j;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  ExperimentConfig c = config_from_json(j);
  // A relative corpus path is taken relative to the config file.
  if (!c.corpus_path.empty() && c.corpus_path.is_relative()) {
    c.corpus_path = path.parent_path() / c.corpus_path;
  }
  return c;
}

}  // namespace headline::harness
