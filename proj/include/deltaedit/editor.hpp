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
#include "deltaedit/world.hpp"

#include <string>
#include <utility>
#include <vector>

namespace deltaedit {

enum class Method { kMemit, kAlphaEdit, kDeltaEdit };

const char* method_name(Method method);
Method parse_method(const std::string& name);

struct EditConfig {
  Method method = Method::kDeltaEdit;
  double eta = 1.5;
  double delta_coef = 0.9;
  int train_steps = 25;
  double learn_rate = 0.1;
  int warmup_edits = 5;
  double rank_cap_ratio = 0.75;
  double eig_zero_rel = 1e-10;
  double outlier_kappa = 10.0;
  // When false, (m, v) are only refreshed on unconstrained edits.
  bool stats_on_constrained = true;
  double stop_margin = 1.0;

  void validate() const;
};

struct EditorState {
  Matrix w;              // d_out x d_in
  Matrix delta_history;  // sum of applied alpha beta^T
  Matrix kp_gram;        // sum of edited k k^T
  Matrix null_proj;      // projector onto the null space of c0
  Matrix c0;
  double mean_stat = 0.0;
  double var_stat = 0.0;
  int edit_count = 0;
  int constraint_activations = 0;

  static EditorState fresh(const FactUniverse& universe, const EditConfig& config);
};

struct RankOne {
  Vector alpha;
  Vector beta;
};

struct EditOutcome {
  Vector alpha;
  Vector beta;
  Vector residual;
  bool constrained = false;
  double history_excitation = 0.0;
  int retained_rank = 0;
  int train_steps_used = 0;
};

struct TrainResult {
  Vector residual;
  std::vector<double> losses;  // loss before every step taken, then the final loss
  int steps = 0;
};

// Gradient descent on -log softmax(embed (w key + R))[target] from R = 0.
// A non-null projector is applied to R after every step.
TrainResult train_residual(const Matrix& w, const Vector& key, int target, const Matrix& embed,
                           const EditConfig& config, const Matrix* projector = nullptr);

// beta = (c0 + k k^T)^-1 k, alpha = residual. Falls back to a ridge term
// 1e-8 tr(c0) / d_in when the system is numerically singular.
RankOne solve_memit(const Vector& residual, const Vector& key, const Matrix& c0);

Matrix compute_null_projection(const Matrix& c0, double eig_zero_rel);

RankOne solve_alpha_beta(const Vector& residual, const Vector& key, const EditorState& state,
                         const EditConfig& config);

struct HistoryProjector {
  Matrix projector;  // I - U U^T
  Matrix basis;      // retained eigenvectors U, one per column
  int retained = 0;
};

HistoryProjector build_history_projector(const Matrix& delta_history, double rank_cap_ratio,
                                         double eig_zero_rel);

std::pair<double, double> update_threshold_stats(double mean, double var, double value,
                                                 double delta_coef);

// value > mean + eta * sqrt(var)
bool exceeds_threshold(double value, double mean, double var, double eta);

struct ConstraintDecision {
  bool constrain = false;
  double excitation = 0.0;
};

ConstraintDecision should_constrain(const EditorState& state, const Vector& key,
                                    const EditConfig& config);

// One sequential edit. On any error the state is left untouched.
EditOutcome apply_edit(EditorState& state, const Fact& fact, const FactUniverse& universe,
                       const EditConfig& config);

}  // namespace deltaedit
