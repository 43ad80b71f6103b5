#include <algorithm>
#include <cmath>
#include <map>

#include <Eigen/Dense>

#include "headline/error.hpp"
#include "headline/metrics.hpp"
#include "headline/rng.hpp"

namespace headline::metrics {

namespace {

void normalize(std::vector<double>& v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  const double inv = 1.0 / std::sqrt(sq);
  for (double& x : v) x *= inv;
}

}  // namespace

HashEmbedding::HashEmbedding(std::size_t dimension, std::uint64_t seed)
    : dimension_(dimension), seed_(seed) {
  if (dimension < 1) throw ParameterError("embedding dimension must be >= 1");
}

std::vector<double> HashEmbedding::embed(std::string_view token) const {
  Rng rng(fnv1a(token) ^ (seed_ * 0x9E3779B97F4A7C15ULL));
  std::vector<double> v(dimension_);
  double sq = 0.0;
  while (sq == 0.0) {
    for (double& x : v) x = rng.normal();
    sq = 0.0;
    for (double x : v) sq += x * x;
  }
  normalize(v);
  return v;
}

PpmiEmbedding PpmiEmbedding::train(std::span<const Tokens> sentences, const Options& options) {
  if (options.dimension < 1) throw ParameterError("embedding dimension must be >= 1");
  if (options.window < 1) throw ParameterError("co-occurrence window must be >= 1");
  PpmiEmbedding result(options);

  std::map<std::string, std::size_t> freq;
  for (const auto& s : sentences) {
    for (const auto& t : s) ++freq[t];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > options.max_vocabulary) ranked.resize(options.max_vocabulary);
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < ranked.size(); ++i) index.emplace(ranked[i].first, i);
  const auto v = static_cast<Eigen::Index>(ranked.size());
  if (v == 0) return result;

  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(v, v);
  for (const auto& s : sentences) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      const auto a = index.find(s[i]);
      if (a == index.end()) continue;
      for (std::size_t j = i + 1; j < s.size() && j <= i + options.window; ++j) {
        const auto b = index.find(s[j]);
        if (b == index.end()) continue;
        const auto x = static_cast<Eigen::Index>(a->second), y = static_cast<Eigen::Index>(b->second);
        counts(x, y) += 1.0;
        counts(y, x) += 1.0;
      }
    }
  }
  const Eigen::VectorXd rows = counts.rowwise().sum();
  const double total = rows.sum();
  Eigen::MatrixXd ppmi = Eigen::MatrixXd::Zero(v, v);
  for (Eigen::Index i = 0; i < v; ++i) {
    for (Eigen::Index j = 0; j < v; ++j) {
      if (counts(i, j) > 0.0) {
        ppmi(i, j) = std::max(0.0, std::log(counts(i, j) * total / (rows(i) * rows(j))));
      }
    }
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(ppmi);
  const Eigen::VectorXd& values = solver.eigenvalues();  // ascending
  const Eigen::MatrixXd& vectors = solver.eigenvectors();
  const std::size_t keep = std::min(options.dimension, static_cast<std::size_t>(v));
  std::vector<Eigen::VectorXd> components;
  std::vector<double> weights;
  for (std::size_t k = 0; k < keep; ++k) {
    const Eigen::Index col = v - 1 - static_cast<Eigen::Index>(k);
    Eigen::VectorXd u = vectors.col(col);
    // Fix the sign so the output does not depend on the solver's choice.
    Eigen::Index arg = 0;
    u.cwiseAbs().maxCoeff(&arg);
    if (u(arg) < 0.0) u = -u;
    components.push_back(u);
    weights.push_back(std::sqrt(std::max(0.0, values(col))));
  }
  for (const auto& [token, i] : index) {
    std::vector<double> vec(options.dimension, 0.0);
    double sq = 0.0;
    for (std::size_t k = 0; k < keep; ++k) {
      vec[k] = components[k](static_cast<Eigen::Index>(i)) * weights[k];
      sq += vec[k] * vec[k];
    }
    if (sq <= 1e-24) continue;
    normalize(vec);
    result.vectors_.emplace(token, std::move(vec));
  }
  return result;
}

std::vector<double> PpmiEmbedding::embed(std::string_view token) const {
  const auto it = vectors_.find(std::string(token));
  if (it != vectors_.end()) return it->second;
  return fallback_.embed(token);
}

}  // namespace headline::metrics
