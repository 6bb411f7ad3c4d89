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

#include <vector>

namespace deltaedit {

struct MetricReport {
  double efficacy_top = 0.0;
  double generalization_top = 0.0;
  double specificity_top = 0.0;
  double efficacy_larger = 0.0;
  double generalization_larger = 0.0;
  double specificity_larger = 0.0;
  int n_evaluated = 0;
  int n_rephrase = 0;
  int n_unrelated = 0;
};

// Held-out unrelated keys with the predictions of the unedited layer.
// Unrelated key j is paired with fact j for the "larger" comparison.
struct EvaluationSet {
  Matrix unrelated_keys;  // n x d_in
  std::vector<int> pre_edit_tokens;
  std::vector<int> paired_targets;
};

// First min(n_facts, max_unrelated) pool rows, predictions under initial_w.
EvaluationSet make_evaluation_set(const FactUniverse& universe, int max_unrelated = 500);

// Readout helpers shared with the tests.
bool top_hit(const Vector& logits, int token);                 // argmax of softmax == token
bool larger_hit(const Vector& logits, int winner, int loser);  // p[winner] > p[loser]

void metrics_top(const Matrix& w, const FactUniverse& universe, const std::vector<int>& edited,
                 const EvaluationSet& eval, MetricReport& out);
void metrics_larger(const Matrix& w, const FactUniverse& universe, const std::vector<int>& edited,
                    const EvaluationSet& eval, MetricReport& out);
MetricReport evaluate(const Matrix& w, const FactUniverse& universe, const std::vector<int>& edited,
                      const EvaluationSet& eval);

}  // namespace deltaedit
