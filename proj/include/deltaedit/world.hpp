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

#pragma once

#include "deltaedit/common.hpp"

#include <cstdint>
#include <vector>

namespace deltaedit {

// Parameters of the synthetic fact universe. Dimensions follow the editable
// layer: keys live in R^d_in, layer outputs and token embeddings in R^d_out.
struct UniverseConfig {
  int d_in = 64;
  int d_out = 64;
  int vocab_size = 256;
  int n_facts = 500;
  int n_pool = 1000;
  double rho = 0.5;  // pool rank = floor(rho * d_in)
  std::uint64_t seed = 0;

  int n_rephrase = 2;
  double cos_min = 0.9;
  double rephrase_noise = 0.3;  // perturbation scale relative to |key|

  // Key geometry: key = shared_mean + encoder * embed[original] + noise.
  double mean_strength = 0.5;
  double key_noise = 1.0;
  double target_zipf = 1.0;  // 0 gives uniform targets

  double ridge = 1e-4;
  double logit_scale = 1.0;  // scale of the ridge regression targets

  void validate() const;
};

struct Fact {
  Vector key;
  std::vector<Vector> rephrase_keys;
  int original_token = 0;
  int target_token = 0;
};

// Immutable once generated; safe to share across threads.
struct FactUniverse {
  std::uint64_t seed = 0;
  int d_in = 0;
  int d_out = 0;
  Matrix embed;           // vocab_size x d_out, unit rows
  std::vector<Fact> facts;
  Matrix unrelated_pool;  // n_pool x d_in, rank floor(rho * d_in)
  Matrix initial_w;       // d_out x d_in, ridge fit of keys -> embed[original]

  int vocab_size() const { return static_cast<int>(embed.rows()); }
};

FactUniverse generate_universe(const UniverseConfig& config);

// Ridge regression W = argmin sum |W k_f - scale * embed[o_f]|^2 + ridge |W|^2.
Matrix fit_initial_layer(const std::vector<Fact>& facts, const Matrix& embed,
                         double ridge, double logit_scale);

Vector logits(const Matrix& w, const Vector& key, const Matrix& embed);
Vector softmax(const Vector& logits);

// argmax of softmax(embed * (w * key)); ties go to the lowest token index.
int model_predict(const Matrix& w, const Vector& key, const Matrix& embed);

// C0 = (1/n) sum_k k k^T over pool rows; exactly symmetric.
Matrix estimate_c0(const Matrix& pool);

// Numerical rank from singular values above rel_tol * sigma_max.
int numerical_rank(const Matrix& m, double rel_tol = 1e-8);

}  // namespace deltaedit
