#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "headline/fusion.hpp"
#include "headline/preprocess.hpp"
#include "headline/tensor.hpp"

namespace headline::model {

using preprocess::TokenId;
using preprocess::TokenSequence;

struct ModelConfig {
  std::size_t d_model = 64;
  std::size_t n_heads = 4;
  std::size_t n_encoder_layers = 2;
  std::size_t n_decoder_layers = 2;
  std::size_t d_ff = 256;
  std::size_t vocab_size = 0;
  std::size_t max_positions = 512;
  std::uint64_t seed = 1;

  /// Throws ConfigError on zero counts or d_model % n_heads != 0.
  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct Linear {
  Matrix weight;  // in x out
  Matrix bias;    // 1 x out
};

struct LayerNorm {
  Matrix gain;   // 1 x d
  Matrix shift;  // 1 x d
};

struct Attention {
  Linear query, key, value, output;
};

struct EncoderLayer {
  LayerNorm attention_norm;
  Attention self_attention;
  LayerNorm feedforward_norm;
  Linear feedforward_in, feedforward_out;
};

struct DecoderLayer {
  LayerNorm self_attention_norm;
  Attention self_attention;
  LayerNorm cross_attention_norm;
  Attention cross_attention;
  LayerNorm feedforward_norm;
  Linear feedforward_in, feedforward_out;
};

/// Pre-norm encoder-decoder transformer. Token embeddings are shared by the
/// encoder and the decoder; positions use fixed sinusoidal encodings, which
/// are derived from the config and are not trainable.
struct ModelParameters {
  ModelConfig config;
  Matrix embedding;  // vocab x d
  std::vector<EncoderLayer> encoder;
  LayerNorm encoder_norm;
  std::vector<DecoderLayer> decoder;
  LayerNorm decoder_norm;
  Linear projection;  // d x vocab
  Matrix positions;   // max_positions x d, not a parameter

  /// Calls f(name, tensor) for every trainable tensor in declaration order.
  template <typename F>
  void visit(F&& f) {
    visit_impl(*this, f);
  }
  template <typename F>
  void visit(F&& f) const {
    visit_impl(*this, f);
  }

  std::size_t parameter_count() const;
  bool all_finite() const;
  /// Same shapes, every trainable tensor zero.
  ModelParameters zeros_like() const;

  friend bool operator==(const ModelParameters& a, const ModelParameters& b);

 private:
  template <typename Self, typename F>
  static void visit_impl(Self& self, F& f);
};

using Gradients = ModelParameters;

/// Seeded scaled-uniform initialization: Xavier-uniform weights, zero
/// biases, unit LayerNorm gains, embeddings uniform in [-sqrt(3), sqrt(3)].
ModelParameters init_model(const ModelConfig& config);

Matrix sinusoidal_positions(std::size_t max_positions, std::size_t d_model);

/// Encoder output together with the source padding mask used for
/// cross-attention.
struct Encoded {
  Matrix states;                 // L x d_model
  std::vector<bool> key_padding;  // true where the source token is PAD
};

/// Throws LengthError if the input is longer than max_positions and
/// EmptyInputError for an empty input.
Encoded encode(const ModelParameters& params, const TokenSequence& input);
inline Encoded encode(const ModelParameters& params, const fusion::FusionInput& input) {
  return encode(params, input.ids);
}

/// Logits for every decoder position (rows) given teacher-forced decoder
/// input ids. PAD ids in the decoder input are masked as keys.
Matrix decoder_logits(const ModelParameters& params, const Encoded& encoded,
                      const TokenSequence& decoder_input);

/// Next-token distribution after `prefix` (which normally starts with BOS).
/// Throws StateError for empty encoder states and LengthError when the prefix
/// does not fit in max_positions.
std::vector<double> decode_step(const ModelParameters& params, const Encoded& encoded,
                                const TokenSequence& prefix);

enum class Optimizer { kSgd, kAdam };

struct TrainingConfig {
  double learning_rate = 1e-4;
  std::size_t epochs = 5;
  std::size_t batch_size = 8;
  std::size_t input_token_length = 512;
  std::size_t target_token_length = 64;
  std::uint64_t seed = 1;
  /// Global gradient-norm clip; 0 disables clipping.
  double clip_norm = 1.0;
  Optimizer optimizer = Optimizer::kSgd;

  /// True when every searchable value lies in the tuning grid:
  /// lr {2e-5, 1e-4, 1e-3}, epochs 3..10, batch {4, 8}, input {512, 1024},
  /// target {16, 32, 64, 128}.
  bool in_search_space() const;
};

struct TrainingPair {
  TokenSequence input;
  /// Gold headline ids, ending with EOS.
  TokenSequence target;
};

/// Target ids truncated to leave room for EOS, then EOS appended.
TokenSequence make_target(const TokenSequence& headline, std::size_t target_token_length);

/// Mean token cross-entropy over the batch, ignoring PAD targets.
double loss(const ModelParameters& params, std::span<const TrainingPair> batch);

/// Loss as above; gradients are accumulated into `grads` (same shapes).
double loss_and_gradients(const ModelParameters& params, std::span<const TrainingPair> batch,
                          Gradients& grads);

struct TrainResult {
  ModelParameters params;
  /// Mean token loss of each epoch, measured while training.
  std::vector<double> epoch_losses;
};

/// Teacher-forced minibatch training. Epoch order is a seeded shuffle.
/// Throws DataError for empty or malformed pairs and DivergenceError when a
/// batch loss is not finite.
TrainResult train(ModelParameters params, std::span<const TrainingPair> pairs,
                  const TrainingConfig& config,
                  const std::function<void(std::size_t epoch, double loss)>& on_epoch = {});

enum class DecodeStrategy { kGreedy, kBeam };

struct DecodeConfig {
  DecodeStrategy strategy = DecodeStrategy::kGreedy;
  std::size_t beam_width = 4;
  std::size_t max_target_length = 64;
};

/// Generated ids without BOS/EOS; never longer than max_target_length.
/// Greedy breaks ties toward the lowest id. Beam ranks by total
/// log-probability. Throws ConfigError for beam_width < 1 or
/// max_target_length < 1.
TokenSequence generate(const ModelParameters& params, const TokenSequence& input,
                       const DecodeConfig& config);
inline TokenSequence generate(const ModelParameters& params, const fusion::FusionInput& input,
                              const DecodeConfig& config) {
  return generate(params, input.ids, config);
}

/// Generation over many inputs; runs in parallel across inputs.
std::vector<TokenSequence> generate_all(const ModelParameters& params,
                                        std::span<const TokenSequence> inputs,
                                        const DecodeConfig& config);

struct GradientCheckOptions {
  std::size_t samples_per_tensor = 4;
  std::uint64_t seed = 7;
};

/// Compares analytic gradients with central finite differences on sampled
/// weights and returns the largest |analytic - numeric| /
/// max(|analytic|, |numeric|, 1e-6). Throws ParameterError for epsilon <= 0.
double gradient_check(const ModelParameters& params, std::span<const TrainingPair> batch,
                      double epsilon, const GradientCheckOptions& options = {});

/// Versioned little-endian binary checkpoint.
void save_checkpoint(const std::filesystem::path& path, const ModelParameters& params);
ModelParameters load_checkpoint(const std::filesystem::path& path);
void write_checkpoint(std::ostream& out, const ModelParameters& params);
ModelParameters read_checkpoint(std::istream& in);

/// "epoch,loss" CSV, epochs numbered from 1.
std::string render_loss_csv(std::span<const double> epoch_losses);

// ---------------------------------------------------------------------------

template <typename Self, typename F>
void ModelParameters::visit_impl(Self& self, F& f) {
  auto linear = [&f](const std::string& name, auto& l) {
    f(name + ".weight", l.weight);
    f(name + ".bias", l.bias);
  };
  auto norm = [&f](const std::string& name, auto& n) {
    f(name + ".gain", n.gain);
    f(name + ".shift", n.shift);
  };
  auto attention = [&linear](const std::string& name, auto& a) {
    linear(name + ".query", a.query);
    linear(name + ".key", a.key);
    linear(name + ".value", a.value);
    linear(name + ".output", a.output);
  };
  f(std::string("embedding"), self.embedding);
  for (std::size_t i = 0; i < self.encoder.size(); ++i) {
    const std::string p = "encoder." + std::to_string(i);
    auto& layer = self.encoder[i];
    norm(p + ".attention_norm", layer.attention_norm);
    attention(p + ".self_attention", layer.self_attention);
    norm(p + ".feedforward_norm", layer.feedforward_norm);
    linear(p + ".feedforward_in", layer.feedforward_in);
    linear(p + ".feedforward_out", layer.feedforward_out);
  }
  norm("encoder_norm", self.encoder_norm);
  for (std::size_t i = 0; i < self.decoder.size(); ++i) {
    const std::string p = "decoder." + std::to_string(i);
    auto& layer = self.decoder[i];
    norm(p + ".self_attention_norm", layer.self_attention_norm);
    attention(p + ".self_attention", layer.self_attention);
    norm(p + ".cross_attention_norm", layer.cross_attention_norm);
    attention(p + ".cross_attention", layer.cross_attention);
    norm(p + ".feedforward_norm", layer.feedforward_norm);
    linear(p + ".feedforward_in", layer.feedforward_in);
    linear(p + ".feedforward_out", layer.feedforward_out);
  }
  norm("decoder_norm", self.decoder_norm);
  linear("projection", self.projection);
}

}  // namespace headline::model
