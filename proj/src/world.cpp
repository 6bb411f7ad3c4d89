//  Copyright (c) 2026 The deltaedit Authors
//
//  Licensed under the Apache License, Version 2.0 (the "License");
//  you may not use this file except in compliance with the License.
//  You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
//  Unless required by applicable law or agreed to in writing, software
//  distributed under the License is distributed on an "AS IS" BASIS,
//  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//  See the License for the specific language governing permissions and
//  limitations under the License.

#include "deltaedit/world.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace deltaedit {
namespace {

constexpr double kMaxKeyCosine = 0.99;
constexpr int kMaxRedraws = 1000;

class Gaussian {
 public:
  explicit Gaussian(std::mt19937_64& rng) : rng_(rng) {}

  double operator()() { return dist_(rng_); }

  Vector vector(int n) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = dist_(rng_);
    return v;
  }

  Matrix matrix(int rows, int cols) {
    Matrix m(rows, cols);
    // row-major fill so the draw order matches the serialized layout
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) m(r, c) = dist_(rng_);
    return m;
  }

 private:
  std::mt19937_64& rng_;
  std::normal_distribution<double> dist_{0.0, 1.0};
};

double cosine(const Vector& a, const Vector& b) {
  return a.dot(b) / (a.norm() * b.norm());
}

}  // namespace

void UniverseConfig::validate() const {
  if (vocab_size < 2) fail(ErrorCode::kInvalidArgument, "vocab_size must be >= 2");
  if (!(rho > 0.0 && rho < 1.0)) fail(ErrorCode::kInvalidArgument, "rho must lie in (0, 1)");
  if (d_in < 2 || d_out < 1) fail(ErrorCode::kInvalidArgument, "d_in must be >= 2 and d_out >= 1");
  if (n_facts < 1) fail(ErrorCode::kInvalidArgument, "n_facts must be >= 1");
  if (n_pool < d_in) fail(ErrorCode::kInvalidArgument, "n_pool must be >= d_in");
  if (static_cast<int>(std::floor(rho * d_in)) < 1)
    fail(ErrorCode::kInvalidArgument, "floor(rho * d_in) must be >= 1");
  if (!(cos_min > 0.0 && cos_min < 1.0)) fail(ErrorCode::kInvalidArgument, "cos_min must lie in (0, 1)");
  if (n_rephrase < 0) fail(ErrorCode::kInvalidArgument, "n_rephrase must be >= 0");
  if (rephrase_noise < 0.0 || key_noise < 0.0 || mean_strength < 0.0 || target_zipf < 0.0)
    fail(ErrorCode::kInvalidArgument, "noise, mean and zipf parameters must be non-negative");
  if (!(ridge > 0.0) || !(logit_scale > 0.0))
    fail(ErrorCode::kInvalidArgument, "ridge and logit_scale must be positive");
}

FactUniverse generate_universe(const UniverseConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  Gaussian gauss(rng);

  const int d_in = config.d_in;
  const int d_out = config.d_out;
  const int vocab = config.vocab_size;

  FactUniverse u;
  u.seed = config.seed;
  u.d_in = d_in;
  u.d_out = d_out;

  u.embed = gauss.matrix(vocab, d_out);
  u.embed.rowwise().normalize();

  // Pool rows live in a random subspace of dimension floor(rho * d_in), which
  // leaves a non-trivial null space for the preserved-knowledge covariance.
  const int pool_rank = static_cast<int>(std::floor(config.rho * d_in));
  Eigen::HouseholderQR<Matrix> qr(gauss.matrix(d_in, d_in));
  const Matrix q = qr.householderQ();
  const Matrix span = q.leftCols(pool_rank);
  u.unrelated_pool = gauss.matrix(config.n_pool, pool_rank) * span.transpose();

  Vector shared_mean = gauss.vector(d_in);
  shared_mean *= config.mean_strength * std::sqrt(static_cast<double>(d_in)) / shared_mean.norm();
  const Matrix encoder = gauss.matrix(d_in, d_out);

  std::vector<int> popularity(vocab);
  std::iota(popularity.begin(), popularity.end(), 0);
  std::shuffle(popularity.begin(), popularity.end(), rng);
  std::vector<double> weights(vocab);
  for (int r = 0; r < vocab; ++r) weights[r] = 1.0 / std::pow(r + 1.0, config.target_zipf);
  std::discrete_distribution<int> target_rank(weights.begin(), weights.end());
  std::uniform_int_distribution<int> token(0, vocab - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  u.facts.reserve(config.n_facts);
  for (int f = 0; f < config.n_facts; ++f) {
    Fact fact;
    fact.original_token = token(rng);
    const Vector signal = shared_mean + encoder * u.embed.row(fact.original_token).transpose();

    int attempt = 0;
    for (;; ++attempt) {
      if (attempt >= kMaxRedraws)
        fail(ErrorCode::kNumerical, "could not draw a key distinct from existing facts");
      fact.key = signal + config.key_noise * gauss.vector(d_in);
      const bool distinct = std::all_of(u.facts.begin(), u.facts.end(), [&](const Fact& other) {
        return cosine(fact.key, other.key) < kMaxKeyCosine;
      });
      if (distinct) break;
    }

    do {
      fact.target_token = popularity[target_rank(rng)];
    } while (fact.target_token == fact.original_token);

    const double key_norm = fact.key.norm();
    for (int r = 0; r < config.n_rephrase; ++r) {
      Vector perturbation = gauss.vector(d_in);
      perturbation *= config.rephrase_noise * key_norm / std::sqrt(static_cast<double>(d_in));
      Vector rephrase = fact.key + perturbation;
      while (cosine(rephrase, fact.key) < config.cos_min) {
        perturbation *= 0.5;
        rephrase = fact.key + perturbation;
      }
      fact.rephrase_keys.push_back(std::move(rephrase));
    }
    u.facts.push_back(std::move(fact));
  }

  u.initial_w = fit_initial_layer(u.facts, u.embed, config.ridge, config.logit_scale);
  return u;
}

Matrix fit_initial_layer(const std::vector<Fact>& facts, const Matrix& embed, double ridge,
                         double logit_scale) {
  if (facts.empty()) fail(ErrorCode::kInvalidArgument, "cannot fit a layer without facts");
  const Eigen::Index d_in = facts.front().key.size();
  const Eigen::Index n = static_cast<Eigen::Index>(facts.size());
  Matrix keys(n, d_in);
  Matrix targets(n, embed.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const Fact& f = facts[static_cast<std::size_t>(i)];
    if (f.key.size() != d_in) fail(ErrorCode::kDimensionMismatch, "fact keys differ in dimension");
    keys.row(i) = f.key.transpose();
    targets.row(i) = logit_scale * embed.row(f.original_token);
  }
  Matrix gram = keys.transpose() * keys;
  gram.diagonal().array() += ridge;
  const Matrix solution = gram.ldlt().solve(keys.transpose() * targets);
  return solution.transpose();
}

Vector logits(const Matrix& w, const Vector& key, const Matrix& embed) {
  if (w.cols() != key.size() || embed.cols() != w.rows())
    fail(ErrorCode::kDimensionMismatch,
         "logits: W is " + std::to_string(w.rows()) + "x" + std::to_string(w.cols()) + ", key has " +
             std::to_string(key.size()) + " entries, embed has " + std::to_string(embed.cols()) +
             " columns");
  return embed * (w * key);
}

Vector softmax(const Vector& z) {
  const double top = z.maxCoeff();
  Vector p = (z.array() - top).exp().matrix();
  return p / p.sum();
}

int model_predict(const Matrix& w, const Vector& key, const Matrix& embed) {
  const Vector p = softmax(logits(w, key, embed));
  int best = 0;
  for (Eigen::Index i = 1; i < p.size(); ++i)
    if (p[i] > p[best]) best = static_cast<int>(i);
  return best;
}

Matrix estimate_c0(const Matrix& pool) {
  if (pool.rows() < 1) fail(ErrorCode::kInvalidArgument, "estimate_c0: empty pool");
  Matrix c0 = (pool.transpose() * pool) / static_cast<double>(pool.rows());
  // mirror the lower triangle so the result is symmetric bit-for-bit
  c0.triangularView<Eigen::StrictlyUpper>() = c0.transpose();
  return c0;
}

int numerical_rank(const Matrix& m, double rel_tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const Vector& s = svd.singularValues();
  if (s.size() == 0 || s[0] <= 0.0) return 0;
  return static_cast<int>((s.array() > rel_tol * s[0]).count());
}

}  // namespace deltaedit
