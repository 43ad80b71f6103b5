#pragma once

// Forward/backward building blocks shared by the model sources.

#include <span>
#include <vector>

#include "headline/model.hpp"

namespace headline::model::detail {

struct NormCache {
  Matrix xhat;
  std::vector<double> inv_std;
};

struct AttentionMask {
  const std::vector<bool>* key_padding = nullptr;
  bool causal = false;
};

struct AttentionCache {
  Matrix query_input, key_input;
  Matrix q, k, v, concat;
  std::vector<Matrix> probs;  // one Lq x Lk map per head
};

struct FeedForwardCache {
  Matrix input, pre, hidden;
};

struct EncoderLayerCache {
  NormCache attention_norm;
  AttentionCache attention;
  NormCache feedforward_norm;
  FeedForwardCache feedforward;
};

struct EncoderCache {
  std::vector<EncoderLayerCache> layers;
  NormCache final_norm;
};

struct DecoderLayerCache {
  NormCache self_attention_norm;
  AttentionCache self_attention;
  NormCache cross_attention_norm;
  AttentionCache cross_attention;
  NormCache feedforward_norm;
  FeedForwardCache feedforward;
};

struct DecoderCache {
  std::vector<bool> self_padding;
  std::vector<DecoderLayerCache> layers;
  NormCache final_norm;
  Matrix final_output;
};

Matrix encoder_forward(const ModelParameters& params, const TokenSequence& ids,
                       const std::vector<bool>& padding, EncoderCache& cache);
void encoder_backward(const ModelParameters& params, const TokenSequence& ids,
                      const EncoderCache& cache, const Matrix& d_states, Gradients& g);

/// Returns logits (T x vocab).
Matrix decoder_forward(const ModelParameters& params, const Encoded& encoded,
                       const TokenSequence& ids, DecoderCache& cache);
/// Accumulates parameter gradients into g and encoder-state gradients into
/// d_states.
void decoder_backward(const ModelParameters& params, const TokenSequence& ids,
                      const DecoderCache& cache, const Matrix& d_logits, Gradients& g,
                      Matrix& d_states);

/// BOS followed by every target token except the last.
TokenSequence decoder_input_for(const TokenSequence& target);
std::size_t count_targets(std::span<const TrainingPair> batch);

/// Summed token cross-entropy of one pair. With grads set, accumulates
/// scale * dLoss into them.
double pair_loss(const ModelParameters& params, const TrainingPair& pair, double scale,
                 Gradients* grads);

}  // namespace headline::model::detail
