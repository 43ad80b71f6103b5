#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>

#include "headline/error.hpp"
#include "headline/model.hpp"

namespace headline::model {

using preprocess::kBos;
using preprocess::kEos;

namespace {

void validate(const DecodeConfig& config) {
  if (config.beam_width < 1) throw ConfigError("beam_width must be >= 1");
  if (config.max_target_length < 1) throw ConfigError("max_target_length must be >= 1");
}

TokenSequence with_bos(const std::vector<TokenId>& out) {
  TokenSequence prefix;
  prefix.ids.reserve(out.size() + 1);
  prefix.ids.push_back(kBos);
  prefix.ids.insert(prefix.ids.end(), out.begin(), out.end());
  return prefix;
}

TokenSequence greedy(const ModelParameters& params, const Encoded& encoded,
                     const DecodeConfig& config) {
  TokenSequence out;
  while (out.length() < config.max_target_length &&
         out.length() + 1 < params.config.max_positions) {
    const std::vector<double> probs = decode_step(params, encoded, with_bos(out.ids));
    // max_element returns the first maximum, i.e. the lowest id on ties.
    const auto best = static_cast<TokenId>(std::max_element(probs.begin(), probs.end()) - probs.begin());
    if (best == kEos) break;
    out.ids.push_back(best);
  }
  return out;
}

struct Hypothesis {
  std::vector<TokenId> tokens;
  double score = 0.0;
  bool done = false;
};

bool ranks_before(const Hypothesis& a, const Hypothesis& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.tokens < b.tokens;
}

TokenSequence beam(const ModelParameters& params, const Encoded& encoded,
                   const DecodeConfig& config) {
  const std::size_t width = config.beam_width;
  std::vector<Hypothesis> beams{Hypothesis{}};
  std::vector<std::size_t> ids(params.config.vocab_size);
  for (std::size_t step = 0; step <= config.max_target_length; ++step) {
    std::vector<Hypothesis> candidates;
    for (const Hypothesis& h : beams) {
      if (h.done) {
        candidates.push_back(h);
        continue;
      }
      if (h.tokens.size() >= config.max_target_length ||
          h.tokens.size() + 1 >= params.config.max_positions) {
        candidates.push_back({h.tokens, h.score, true});
        continue;
      }
      const std::vector<double> probs = decode_step(params, encoded, with_bos(h.tokens));
      std::iota(ids.begin(), ids.end(), std::size_t{0});
      const std::size_t keep = std::min(width, ids.size());
      std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(keep), ids.end(),
                        [&probs](std::size_t a, std::size_t b) {
                          return probs[a] != probs[b] ? probs[a] > probs[b] : a < b;
                        });
      for (std::size_t k = 0; k < keep; ++k) {
        const auto id = static_cast<TokenId>(ids[k]);
        Hypothesis next{h.tokens, h.score + std::log(probs[ids[k]]), id == kEos};
        if (id != kEos) next.tokens.push_back(id);
        candidates.push_back(std::move(next));
      }
    }
    std::sort(candidates.begin(), candidates.end(), ranks_before);
    if (candidates.size() > width) candidates.resize(width);
    beams = std::move(candidates);
    if (std::all_of(beams.begin(), beams.end(), [](const Hypothesis& h) { return h.done; })) break;
  }
  return TokenSequence{beams.front().tokens};
}

}  // namespace

TokenSequence generate(const ModelParameters& params, const TokenSequence& input,
                       const DecodeConfig& config) {
  validate(config);
  const Encoded encoded = encode(params, input);
  return config.strategy == DecodeStrategy::kGreedy ? greedy(params, encoded, config)
                                                    : beam(params, encoded, config);
}

std::vector<TokenSequence> generate_all(const ModelParameters& params,
                                        std::span<const TokenSequence> inputs,
                                        const DecodeConfig& config) {
  validate(config);
  std::vector<TokenSequence> outputs(inputs.size());
  std::vector<std::exception_ptr> errors(inputs.size());
  const auto n = static_cast<std::ptrdiff_t>(inputs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      outputs[k] = generate(params, inputs[k], config);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return outputs;
}

}  // namespace headline::model
