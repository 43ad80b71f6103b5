#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "headline/error.hpp"
#include "headline/model.hpp"
#include "headline/rng.hpp"
#include "model_internal.hpp"

namespace headline::model {

namespace {

std::vector<Matrix*> tensors(ModelParameters& p) {
  std::vector<Matrix*> out;
  p.visit([&out](const std::string&, Matrix& m) { out.push_back(&m); });
  return out;
}

void validate_pairs(const ModelParameters& params, std::span<const TrainingPair> pairs,
                    const TrainingConfig& config) {
  if (pairs.empty()) throw DataError("training requires at least one pair");
  const std::size_t input_limit = std::min(config.input_token_length, params.config.max_positions);
  const std::size_t target_limit =
      std::min(config.target_token_length, params.config.max_positions);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& pair = pairs[i];
    const std::string where = "pair " + std::to_string(i) + ": ";
    if (pair.input.ids.empty()) throw DataError(where + "empty input");
    if (pair.input.length() > input_limit) {
      throw DataError(where + "input has " + std::to_string(pair.input.length()) +
                      " tokens, limit " + std::to_string(input_limit));
    }
    if (pair.target.ids.empty() || pair.target.ids.back() != preprocess::kEos) {
      throw DataError(where + "target must end with EOS");
    }
    if (pair.target.length() > target_limit) {
      throw DataError(where + "target has " + std::to_string(pair.target.length()) +
                      " tokens, limit " + std::to_string(target_limit));
    }
  }
}

double global_norm(const std::vector<Matrix*>& grads) {
  double sq = 0.0;
  for (const Matrix* g : grads) {
    for (double v : g->values()) sq += v * v;
  }
  return std::sqrt(sq);
}

struct AdamState {
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  ModelParameters m, v;
  std::size_t step = 0;
};

}  // namespace

bool TrainingConfig::in_search_space() const {
  static constexpr double kRates[] = {2e-5, 1e-4, 1e-3};
  const bool lr_ok = std::any_of(std::begin(kRates), std::end(kRates), [this](double lr) {
    return std::abs(learning_rate - lr) <= 1e-12 * lr;
  });
  const bool target_ok = target_token_length == 16 || target_token_length == 32 ||
                         target_token_length == 64 || target_token_length == 128;
  return lr_ok && epochs >= 3 && epochs <= 10 && (batch_size == 4 || batch_size == 8) &&
         (input_token_length == 512 || input_token_length == 1024) && target_ok;
}

TrainResult train(ModelParameters params, std::span<const TrainingPair> pairs,
                  const TrainingConfig& config,
                  const std::function<void(std::size_t, double)>& on_epoch) {
  if (config.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(config.learning_rate > 0.0) || !std::isfinite(config.learning_rate)) {
    throw ConfigError("learning_rate must be positive and finite");
  }
  if (config.clip_norm < 0.0) throw ConfigError("clip_norm must be >= 0");
  validate_pairs(params, pairs, config);

  Rng rng(config.seed);
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  Gradients grads = params.zeros_like();
  const auto weights = tensors(params);
  const auto grad_tensors = tensors(grads);
  AdamState adam;
  std::vector<Matrix*> m_tensors, v_tensors;
  if (config.optimizer == Optimizer::kAdam) {
    adam.m = params.zeros_like();
    adam.v = params.zeros_like();
    m_tensors = tensors(adam.m);
    v_tensors = tensors(adam.v);
  }

  TrainResult result;
  std::vector<TrainingPair> batch;
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double epoch_total = 0.0;
    std::size_t epoch_tokens = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      ++step;
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      batch.clear();
      for (std::size_t i = begin; i < end; ++i) batch.push_back(pairs[order[i]]);

      for (Matrix* g : grad_tensors) g->set_zero();
      const double batch_loss = loss_and_gradients(params, batch, grads);
      if (!std::isfinite(batch_loss)) {
        throw DivergenceError("non-finite loss at step " + std::to_string(step) + " (epoch " +
                              std::to_string(epoch) + ")");
      }
      const std::size_t tokens = detail::count_targets(batch);
      epoch_total += batch_loss * static_cast<double>(tokens);
      epoch_tokens += tokens;

      double factor = 1.0;
      if (config.clip_norm > 0.0) {
        const double norm = global_norm(grad_tensors);
        if (norm > config.clip_norm) factor = config.clip_norm / norm;
      }
      if (config.optimizer == Optimizer::kSgd) {
        const double rate = config.learning_rate * factor;
        for (std::size_t t = 0; t < weights.size(); ++t) {
          double* w = weights[t]->data();
          const double* g = grad_tensors[t]->data();
          for (std::size_t i = 0; i < weights[t]->size(); ++i) w[i] -= rate * g[i];
        }
      } else {
        ++adam.step;
        const double s = static_cast<double>(adam.step);
        const double c1 = 1.0 - std::pow(AdamState::kBeta1, s);
        const double c2 = 1.0 - std::pow(AdamState::kBeta2, s);
        for (std::size_t t = 0; t < weights.size(); ++t) {
          double* w = weights[t]->data();
          const double* g = grad_tensors[t]->data();
          double* m = m_tensors[t]->data();
          double* v = v_tensors[t]->data();
          for (std::size_t i = 0; i < weights[t]->size(); ++i) {
            const double gi = g[i] * factor;
            m[i] = AdamState::kBeta1 * m[i] + (1.0 - AdamState::kBeta1) * gi;
            v[i] = AdamState::kBeta2 * v[i] + (1.0 - AdamState::kBeta2) * gi * gi;
            w[i] -= config.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + AdamState::kEps);
          }
        }
      }
      if (!params.all_finite()) {
        throw DivergenceError("non-finite parameters after step " + std::to_string(step) +
                              " (epoch " + std::to_string(epoch) + ")");
      }
    }
    const double epoch_loss = epoch_total / static_cast<double>(epoch_tokens);
    result.epoch_losses.push_back(epoch_loss);
    if (on_epoch) on_epoch(epoch, epoch_loss);
  }
  result.params = std::move(params);
  return result;
}

std::string render_loss_csv(std::span<const double> epoch_losses) {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,loss\n";
  for (std::size_t i = 0; i < epoch_losses.size(); ++i) out << (i + 1) << ',' << epoch_losses[i] << '\n';
  return out.str();
}

}  // namespace headline::model
