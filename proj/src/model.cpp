#include "headline/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include "headline/error.hpp"
#include "headline/kernels.hpp"
#include "headline/rng.hpp"
#include "model_internal.hpp"

namespace headline::model {

using kernels::Mode;
using preprocess::kBos;
using preprocess::kPad;

void ModelConfig::validate() const {
  if (d_model == 0 || n_heads == 0 || n_encoder_layers == 0 || n_decoder_layers == 0 || d_ff == 0 ||
      vocab_size == 0 || max_positions == 0) {
    throw ConfigError("model config counts must all be >= 1");
  }
  if (d_model % n_heads != 0) {
    throw ConfigError("d_model " + std::to_string(d_model) + " is not divisible by n_heads " +
                      std::to_string(n_heads));
  }
  if (vocab_size < std::size(preprocess::kReservedTokens)) {
    throw ConfigError("vocab_size must cover the reserved tokens");
  }
}

namespace {

std::vector<Matrix*> tensors(ModelParameters& p) {
  std::vector<Matrix*> out;
  p.visit([&out](const std::string&, Matrix& m) { out.push_back(&m); });
  return out;
}

std::vector<const Matrix*> tensors(const ModelParameters& p) {
  std::vector<const Matrix*> out;
  p.visit([&out](const std::string&, const Matrix& m) { out.push_back(&m); });
  return out;
}

Linear make_linear(std::size_t in, std::size_t out, Rng& rng) {
  Linear l{Matrix(in, out), Matrix(1, out)};
  const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
  for (double& w : l.weight.values()) w = rng.uniform(-bound, bound);
  return l;
}

LayerNorm make_norm(std::size_t d) { return {Matrix(1, d, 1.0), Matrix(1, d)}; }

Attention make_attention(std::size_t d, Rng& rng) {
  Attention a;
  a.query = make_linear(d, d, rng);
  a.key = make_linear(d, d, rng);
  a.value = make_linear(d, d, rng);
  a.output = make_linear(d, d, rng);
  return a;
}

}  // namespace

std::size_t ModelParameters::parameter_count() const {
  std::size_t n = 0;
  visit([&n](const std::string&, const Matrix& m) { n += m.size(); });
  return n;
}

bool ModelParameters::all_finite() const {
  bool ok = true;
  visit([&ok](const std::string&, const Matrix& m) {
    for (double v : m.values()) ok = ok && std::isfinite(v);
  });
  return ok;
}

ModelParameters ModelParameters::zeros_like() const {
  ModelParameters z = *this;
  z.visit([](const std::string&, Matrix& m) { m.set_zero(); });
  return z;
}

bool operator==(const ModelParameters& a, const ModelParameters& b) {
  if (!(a.config == b.config)) return false;
  const auto ta = tensors(a), tb = tensors(b);
  if (ta.size() != tb.size()) return false;
  for (std::size_t i = 0; i < ta.size(); ++i) {
    if (!(*ta[i] == *tb[i])) return false;
  }
  return true;
}

Matrix sinusoidal_positions(std::size_t max_positions, std::size_t d_model) {
  Matrix pe(max_positions, d_model);
  for (std::size_t pos = 0; pos < max_positions; ++pos) {
    for (std::size_t i = 0; i < d_model; ++i) {
      const double rate =
          std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(d_model));
      const double angle = static_cast<double>(pos) * rate;
      pe(pos, i) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return pe;
}

ModelParameters init_model(const ModelConfig& config) {
  config.validate();
  Rng rng(config.seed);
  const std::size_t d = config.d_model;

  ModelParameters p;
  p.config = config;
  p.embedding = Matrix(config.vocab_size, d);
  const double bound = std::sqrt(3.0);
  for (double& w : p.embedding.values()) w = rng.uniform(-bound, bound);

  for (std::size_t i = 0; i < config.n_encoder_layers; ++i) {
    EncoderLayer layer;
    layer.attention_norm = make_norm(d);
    layer.self_attention = make_attention(d, rng);
    layer.feedforward_norm = make_norm(d);
    layer.feedforward_in = make_linear(d, config.d_ff, rng);
    layer.feedforward_out = make_linear(config.d_ff, d, rng);
    p.encoder.push_back(std::move(layer));
  }
  p.encoder_norm = make_norm(d);
  for (std::size_t i = 0; i < config.n_decoder_layers; ++i) {
    DecoderLayer layer;
    layer.self_attention_norm = make_norm(d);
    layer.self_attention = make_attention(d, rng);
    layer.cross_attention_norm = make_norm(d);
    layer.cross_attention = make_attention(d, rng);
    layer.feedforward_norm = make_norm(d);
    layer.feedforward_in = make_linear(d, config.d_ff, rng);
    layer.feedforward_out = make_linear(config.d_ff, d, rng);
    p.decoder.push_back(std::move(layer));
  }
  p.decoder_norm = make_norm(d);
  p.projection = make_linear(d, config.vocab_size, rng);
  p.positions = sinusoidal_positions(config.max_positions, d);
  return p;
}

namespace detail {

namespace {

constexpr double kNormEps = 1e-5;
constexpr double kGeluScale = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluCubic = 0.044715;

void add_in_place(Matrix& a, const Matrix& b) {
  double* x = a.data();
  const double* y = b.data();
  for (std::size_t i = 0; i < a.size(); ++i) x[i] += y[i];
}

Matrix columns(const Matrix& m, std::size_t start, std::size_t width) {
  Matrix out(m.rows(), width);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < width; ++c) out(r, c) = m(r, start + c);
  }
  return out;
}

void put_columns(Matrix& dst, const Matrix& src, std::size_t start) {
  for (std::size_t r = 0; r < src.rows(); ++r) {
    for (std::size_t c = 0; c < src.cols(); ++c) dst(r, start + c) = src(r, c);
  }
}

Matrix linear_forward(const Linear& p, const Matrix& x) {
  Matrix y;
  kernels::matmul(x, p.weight, y);
  kernels::add_row_bias(y, p.bias);
  return y;
}

Matrix linear_backward(const Linear& p, const Matrix& x, const Matrix& dy, Linear& g) {
  kernels::matmul_at_b(x, dy, g.weight, Mode::kAccumulate);
  kernels::accumulate_column_sums(dy, g.bias);
  Matrix dx;
  kernels::matmul_a_bt(dy, p.weight, dx);
  return dx;
}

Matrix norm_forward(const LayerNorm& p, const Matrix& x, NormCache& cache) {
  const std::size_t d = x.cols();
  cache.xhat = Matrix(x.rows(), d);
  cache.inv_std.assign(x.rows(), 0.0);
  Matrix y(x.rows(), d);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto in = x.row(r);
    double mean = 0.0;
    for (double v : in) mean += v;
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (double v : in) var += (v - mean) * (v - mean);
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + kNormEps);
    cache.inv_std[r] = inv;
    for (std::size_t c = 0; c < d; ++c) {
      const double xh = (in[c] - mean) * inv;
      cache.xhat(r, c) = xh;
      y(r, c) = xh * p.gain(0, c) + p.shift(0, c);
    }
  }
  return y;
}

Matrix norm_backward(const LayerNorm& p, const NormCache& cache, const Matrix& dy, LayerNorm& g) {
  const std::size_t d = dy.cols();
  Matrix dx(dy.rows(), d);
  std::vector<double> dxhat(d);
  for (std::size_t r = 0; r < dy.rows(); ++r) {
    double sum = 0.0, dot = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      const double xh = cache.xhat(r, c);
      g.gain(0, c) += dy(r, c) * xh;
      g.shift(0, c) += dy(r, c);
      dxhat[c] = dy(r, c) * p.gain(0, c);
      sum += dxhat[c];
      dot += dxhat[c] * xh;
    }
    const double n = static_cast<double>(d);
    for (std::size_t c = 0; c < d; ++c) {
      dx(r, c) = cache.inv_std[r] * (dxhat[c] - sum / n - cache.xhat(r, c) * dot / n);
    }
  }
  return dx;
}

double gelu(double x) {
  return 0.5 * x * (1.0 + std::tanh(kGeluScale * (x + kGeluCubic * x * x * x)));
}

double gelu_derivative(double x) {
  const double t = std::tanh(kGeluScale * (x + kGeluCubic * x * x * x));
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kGeluScale * (1.0 + 3.0 * kGeluCubic * x * x);
}

Matrix feedforward_forward(const Linear& in, const Linear& out, const Matrix& x,
                           FeedForwardCache& cache) {
  cache.input = x;
  cache.pre = linear_forward(in, x);
  cache.hidden = cache.pre;
  for (double& v : cache.hidden.values()) v = gelu(v);
  return linear_forward(out, cache.hidden);
}

Matrix feedforward_backward(const Linear& in, const Linear& out, const FeedForwardCache& cache,
                            const Matrix& dy, Linear& g_in, Linear& g_out) {
  Matrix dh = linear_backward(out, cache.hidden, dy, g_out);
  const double* pre = cache.pre.data();
  double* d = dh.data();
  for (std::size_t i = 0; i < dh.size(); ++i) d[i] *= gelu_derivative(pre[i]);
  return linear_backward(in, cache.input, dh, g_in);
}

Matrix attention_forward(const Attention& p, const Matrix& xq, const Matrix& xkv,
                         std::size_t heads, const AttentionMask& mask, AttentionCache& c) {
  c.query_input = xq;
  c.key_input = xkv;
  c.q = linear_forward(p.query, xq);
  c.k = linear_forward(p.key, xkv);
  c.v = linear_forward(p.value, xkv);
  const std::size_t d = c.q.cols(), dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const double neg_inf = -std::numeric_limits<double>::infinity();
  c.concat = Matrix(xq.rows(), d);
  c.probs.assign(heads, Matrix());
  for (std::size_t h = 0; h < heads; ++h) {
    const Matrix qh = columns(c.q, h * dh, dh);
    const Matrix kh = columns(c.k, h * dh, dh);
    const Matrix vh = columns(c.v, h * dh, dh);
    Matrix s;
    kernels::matmul_a_bt(qh, kh, s);
    for (std::size_t i = 0; i < s.rows(); ++i) {
      for (std::size_t j = 0; j < s.cols(); ++j) {
        const bool masked = (mask.causal && j > i) || (mask.key_padding && (*mask.key_padding)[j]);
        s(i, j) = masked ? neg_inf : s(i, j) * scale;
      }
    }
    kernels::softmax_rows(s);
    Matrix oh;
    kernels::matmul(s, vh, oh);
    put_columns(c.concat, oh, h * dh);
    c.probs[h] = std::move(s);
  }
  return linear_forward(p.output, c.concat);
}

// Returns the gradient for the query input; the key/value input gradient is
// written to d_key_input.
Matrix attention_backward(const Attention& p, const AttentionCache& c, const Matrix& dy,
                          Attention& g, Matrix& d_key_input) {
  const Matrix d_concat = linear_backward(p.output, c.concat, dy, g.output);
  const std::size_t heads = c.probs.size();
  const std::size_t d = c.q.cols(), dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Matrix dq(c.q.rows(), d), dk(c.k.rows(), d), dv(c.v.rows(), d);
  for (std::size_t h = 0; h < heads; ++h) {
    const Matrix& prob = c.probs[h];
    const Matrix qh = columns(c.q, h * dh, dh);
    const Matrix kh = columns(c.k, h * dh, dh);
    const Matrix vh = columns(c.v, h * dh, dh);
    const Matrix doh = columns(d_concat, h * dh, dh);
    Matrix dp, dvh;
    kernels::matmul_a_bt(doh, vh, dp);
    kernels::matmul_at_b(prob, doh, dvh);
    Matrix ds(prob.rows(), prob.cols());
    for (std::size_t i = 0; i < prob.rows(); ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < prob.cols(); ++j) dot += prob(i, j) * dp(i, j);
      for (std::size_t j = 0; j < prob.cols(); ++j) ds(i, j) = prob(i, j) * (dp(i, j) - dot) * scale;
    }
    Matrix dqh, dkh;
    kernels::matmul(ds, kh, dqh);
    kernels::matmul_at_b(ds, qh, dkh);
    put_columns(dq, dqh, h * dh);
    put_columns(dk, dkh, h * dh);
    put_columns(dv, dvh, h * dh);
  }
  Matrix dxq = linear_backward(p.query, c.query_input, dq, g.query);
  d_key_input = linear_backward(p.key, c.key_input, dk, g.key);
  add_in_place(d_key_input, linear_backward(p.value, c.key_input, dv, g.value));
  return dxq;
}

Matrix embed(const ModelParameters& params, const TokenSequence& ids) {
  const std::size_t d = params.config.d_model;
  Matrix x(ids.length(), d);
  for (std::size_t i = 0; i < ids.length(); ++i) {
    const auto id = static_cast<std::size_t>(ids.ids[i]);
    for (std::size_t c = 0; c < d; ++c) x(i, c) = params.embedding(id, c) + params.positions(i, c);
  }
  return x;
}

void embed_backward(const TokenSequence& ids, const Matrix& dx, Matrix& g_embedding) {
  for (std::size_t i = 0; i < ids.length(); ++i) {
    auto row = g_embedding.row(static_cast<std::size_t>(ids.ids[i]));
    const auto src = dx.row(i);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += src[c];
  }
}

void check_ids(const ModelParameters& params, const TokenSequence& ids, const char* what) {
  if (ids.length() > params.config.max_positions) {
    throw LengthError(std::string(what) + " length " + std::to_string(ids.length()) +
                      " exceeds max_positions " + std::to_string(params.config.max_positions));
  }
  for (TokenId id : ids.ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= params.config.vocab_size) {
      throw RangeError(std::string(what) + " token id " + std::to_string(id) +
                       " is outside the vocabulary");
    }
  }
}

std::vector<bool> padding_of(const TokenSequence& ids) {
  std::vector<bool> pad(ids.length());
  for (std::size_t i = 0; i < ids.length(); ++i) pad[i] = ids.ids[i] == kPad;
  return pad;
}

}  // namespace

Matrix encoder_forward(const ModelParameters& params, const TokenSequence& ids,
                       const std::vector<bool>& padding, EncoderCache& cache) {
  const std::size_t heads = params.config.n_heads;
  Matrix x = embed(params, ids);
  cache.layers.assign(params.encoder.size(), EncoderLayerCache());
  const AttentionMask mask{&padding, false};
  for (std::size_t l = 0; l < params.encoder.size(); ++l) {
    const EncoderLayer& layer = params.encoder[l];
    EncoderLayerCache& c = cache.layers[l];
    const Matrix a_in = norm_forward(layer.attention_norm, x, c.attention_norm);
    add_in_place(x, attention_forward(layer.self_attention, a_in, a_in, heads, mask, c.attention));
    const Matrix f_in = norm_forward(layer.feedforward_norm, x, c.feedforward_norm);
    add_in_place(x, feedforward_forward(layer.feedforward_in, layer.feedforward_out, f_in, c.feedforward));
  }
  return norm_forward(params.encoder_norm, x, cache.final_norm);
}

void encoder_backward(const ModelParameters& params, const TokenSequence& ids,
                      const EncoderCache& cache, const Matrix& d_states, Gradients& g) {
  Matrix dx = norm_backward(params.encoder_norm, cache.final_norm, d_states, g.encoder_norm);
  for (std::size_t l = params.encoder.size(); l-- > 0;) {
    const EncoderLayer& layer = params.encoder[l];
    EncoderLayer& gl = g.encoder[l];
    const EncoderLayerCache& c = cache.layers[l];
    Matrix df = feedforward_backward(layer.feedforward_in, layer.feedforward_out, c.feedforward, dx,
                                     gl.feedforward_in, gl.feedforward_out);
    add_in_place(dx, norm_backward(layer.feedforward_norm, c.feedforward_norm, df, gl.feedforward_norm));
    Matrix d_kv;
    Matrix da = attention_backward(layer.self_attention, c.attention, dx, gl.self_attention, d_kv);
    add_in_place(da, d_kv);
    add_in_place(dx, norm_backward(layer.attention_norm, c.attention_norm, da, gl.attention_norm));
  }
  embed_backward(ids, dx, g.embedding);
}

Matrix decoder_forward(const ModelParameters& params, const Encoded& encoded,
                       const TokenSequence& ids, DecoderCache& cache) {
  const std::size_t heads = params.config.n_heads;
  cache.self_padding = padding_of(ids);
  Matrix y = embed(params, ids);
  cache.layers.assign(params.decoder.size(), DecoderLayerCache());
  const AttentionMask self_mask{&cache.self_padding, true};
  const AttentionMask cross_mask{&encoded.key_padding, false};
  for (std::size_t l = 0; l < params.decoder.size(); ++l) {
    const DecoderLayer& layer = params.decoder[l];
    DecoderLayerCache& c = cache.layers[l];
    const Matrix s_in = norm_forward(layer.self_attention_norm, y, c.self_attention_norm);
    add_in_place(y, attention_forward(layer.self_attention, s_in, s_in, heads, self_mask, c.self_attention));
    const Matrix c_in = norm_forward(layer.cross_attention_norm, y, c.cross_attention_norm);
    add_in_place(y, attention_forward(layer.cross_attention, c_in, encoded.states, heads, cross_mask,
                                      c.cross_attention));
    const Matrix f_in = norm_forward(layer.feedforward_norm, y, c.feedforward_norm);
    add_in_place(y, feedforward_forward(layer.feedforward_in, layer.feedforward_out, f_in, c.feedforward));
  }
  cache.final_output = norm_forward(params.decoder_norm, y, cache.final_norm);
  return linear_forward(params.projection, cache.final_output);
}

void decoder_backward(const ModelParameters& params, const TokenSequence& ids,
                      const DecoderCache& cache, const Matrix& d_logits, Gradients& g,
                      Matrix& d_states) {
  Matrix dh = linear_backward(params.projection, cache.final_output, d_logits, g.projection);
  Matrix dy = norm_backward(params.decoder_norm, cache.final_norm, dh, g.decoder_norm);
  for (std::size_t l = params.decoder.size(); l-- > 0;) {
    const DecoderLayer& layer = params.decoder[l];
    DecoderLayer& gl = g.decoder[l];
    const DecoderLayerCache& c = cache.layers[l];
    Matrix df = feedforward_backward(layer.feedforward_in, layer.feedforward_out, c.feedforward, dy,
                                     gl.feedforward_in, gl.feedforward_out);
    add_in_place(dy, norm_backward(layer.feedforward_norm, c.feedforward_norm, df, gl.feedforward_norm));
    Matrix d_mem;
    Matrix dc = attention_backward(layer.cross_attention, c.cross_attention, dy, gl.cross_attention, d_mem);
    add_in_place(d_states, d_mem);
    add_in_place(dy, norm_backward(layer.cross_attention_norm, c.cross_attention_norm, dc,
                                   gl.cross_attention_norm));
    Matrix d_kv;
    Matrix ds = attention_backward(layer.self_attention, c.self_attention, dy, gl.self_attention, d_kv);
    add_in_place(ds, d_kv);
    add_in_place(dy, norm_backward(layer.self_attention_norm, c.self_attention_norm, ds,
                                   gl.self_attention_norm));
  }
  embed_backward(ids, dy, g.embedding);
}

TokenSequence decoder_input_for(const TokenSequence& target) {
  TokenSequence in;
  in.ids.reserve(target.length());
  in.ids.push_back(kBos);
  for (std::size_t i = 0; i + 1 < target.length(); ++i) in.ids.push_back(target.ids[i]);
  return in;
}

std::size_t count_targets(std::span<const TrainingPair> batch) {
  std::size_t n = 0;
  for (const auto& pair : batch) {
    for (TokenId id : pair.target.ids) n += id != kPad;
  }
  return n;
}

double pair_loss(const ModelParameters& params, const TrainingPair& pair, double scale,
                 Gradients* grads) {
  if (pair.input.ids.empty()) throw DataError("training pair has an empty input");
  if (pair.target.ids.empty()) throw DataError("training pair has an empty target");
  check_ids(params, pair.input, "input");
  EncoderCache enc_cache;
  Encoded enc;
  enc.key_padding = padding_of(pair.input);
  enc.states = encoder_forward(params, pair.input, enc.key_padding, enc_cache);
  const TokenSequence dec_in = decoder_input_for(pair.target);
  check_ids(params, dec_in, "target");
  DecoderCache dec_cache;
  Matrix logits = decoder_forward(params, enc, dec_in, dec_cache);

  double total = 0.0;
  Matrix d_logits(logits.rows(), logits.cols());
  for (std::size_t t = 0; t < logits.rows(); ++t) {
    const TokenId label = pair.target.ids[t];
    if (label == kPad) continue;
    auto row = logits.row(t);
    double max = -std::numeric_limits<double>::infinity();
    for (double v : row) max = std::max(max, v);
    double sum = 0.0;
    for (double v : row) sum += std::exp(v - max);
    const double log_z = max + std::log(sum);
    total += log_z - row[static_cast<std::size_t>(label)];
    if (grads != nullptr) {
      auto drow = d_logits.row(t);
      for (std::size_t v = 0; v < row.size(); ++v) drow[v] = std::exp(row[v] - log_z) * scale;
      drow[static_cast<std::size_t>(label)] -= scale;
    }
  }
  if (grads != nullptr) {
    Matrix d_states(enc.states.rows(), enc.states.cols());
    decoder_backward(params, dec_in, dec_cache, d_logits, *grads, d_states);
    encoder_backward(params, pair.input, enc_cache, d_states, *grads);
  }
  return total;
}

}  // namespace detail

Encoded encode(const ModelParameters& params, const TokenSequence& input) {
  if (input.ids.empty()) throw EmptyInputError("cannot encode an empty input");
  detail::check_ids(params, input, "input");
  Encoded out;
  out.key_padding = detail::padding_of(input);
  if (std::all_of(out.key_padding.begin(), out.key_padding.end(), [](bool b) { return b; })) {
    throw EmptyInputError("input consists only of padding");
  }
  detail::EncoderCache cache;
  out.states = detail::encoder_forward(params, input, out.key_padding, cache);
  return out;
}

Matrix decoder_logits(const ModelParameters& params, const Encoded& encoded,
                      const TokenSequence& decoder_input) {
  if (encoded.states.empty()) throw StateError("encoder states are empty");
  if (decoder_input.ids.empty()) throw EmptyInputError("decoder input is empty");
  detail::check_ids(params, decoder_input, "decoder input");
  detail::DecoderCache cache;
  return detail::decoder_forward(params, encoded, decoder_input, cache);
}

std::vector<double> decode_step(const ModelParameters& params, const Encoded& encoded,
                                const TokenSequence& prefix) {
  Matrix logits = decoder_logits(params, encoded, prefix);
  const auto last = logits.row(logits.rows() - 1);
  std::vector<double> probs(last.begin(), last.end());
  Matrix row(1, probs.size());
  std::copy(probs.begin(), probs.end(), row.data());
  kernels::softmax_rows(row);
  std::copy(row.data(), row.data() + row.size(), probs.begin());
  return probs;
}

TokenSequence make_target(const TokenSequence& headline, std::size_t target_token_length) {
  if (target_token_length < 1) throw ParameterError("target_token_length must be >= 1");
  TokenSequence t = headline;
  if (t.ids.size() > target_token_length - 1) t.ids.resize(target_token_length - 1);
  t.ids.push_back(preprocess::kEos);
  return t;
}

double loss(const ModelParameters& params, std::span<const TrainingPair> batch) {
  const std::size_t n = detail::count_targets(batch);
  if (n == 0) throw DataError("batch has no target tokens");
  double total = 0.0;
  for (const auto& pair : batch) total += detail::pair_loss(params, pair, 0.0, nullptr);
  return total / static_cast<double>(n);
}

double loss_and_gradients(const ModelParameters& params, std::span<const TrainingPair> batch,
                          Gradients& grads) {
  const std::size_t n = detail::count_targets(batch);
  if (n == 0) throw DataError("batch has no target tokens");
  const double scale = 1.0 / static_cast<double>(n);
  double total = 0.0;
  for (const auto& pair : batch) total += detail::pair_loss(params, pair, scale, &grads);
  return total / static_cast<double>(n);
}

constexpr double kGradientFloor = 1e-6;

double gradient_check(const ModelParameters& params, std::span<const TrainingPair> batch,
                      double epsilon, const GradientCheckOptions& options) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw ParameterError("gradient check epsilon must be a positive finite number");
  }
  Gradients grads = params.zeros_like();
  loss_and_gradients(params, batch, grads);

  ModelParameters probe = params;
  const auto weights = tensors(probe);
  const auto analytic = tensors(static_cast<const Gradients&>(grads));
  Rng rng(options.seed);
  double worst = 0.0;
  for (std::size_t t = 0; t < weights.size(); ++t) {
    Matrix& w = *weights[t];
    std::set<std::size_t> picks;
    if (w.size() <= options.samples_per_tensor) {
      for (std::size_t i = 0; i < w.size(); ++i) picks.insert(i);
    } else {
      while (picks.size() < options.samples_per_tensor) picks.insert(rng.below(w.size()));
    }
    for (std::size_t i : picks) {
      const double saved = w.data()[i];
      w.data()[i] = saved + epsilon;
      const double up = loss(probe, batch);
      w.data()[i] = saved - epsilon;
      const double down = loss(probe, batch);
      w.data()[i] = saved;
      const double numeric = (up - down) / (2.0 * epsilon);
      const double exact = analytic[t]->data()[i];
      // Exactly-zero gradients (key biases, by softmax shift invariance) read
      // as ulp(loss) / epsilon ~ 1e-12 numerically; the floor keeps that noise
      // from passing for a relative error.
      const double denom = std::max({std::abs(exact), std::abs(numeric), kGradientFloor});
      worst = std::max(worst, std::abs(exact - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace headline::model
