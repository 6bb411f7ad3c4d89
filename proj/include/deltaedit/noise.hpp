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

#include <vector>

namespace deltaedit {

struct LedgerEntry {
  Vector alpha;
  Vector beta;
  Vector key;
  bool constrained = false;
};

// Append-only record of applied rank-one edits. Entry i (0-based) is edit i+1.
class EditLedger {
 public:
  EditLedger() = default;
  explicit EditLedger(Matrix initial_w) : initial_w_(std::move(initial_w)) {}

  void append(LedgerEntry entry);
  const std::vector<LedgerEntry>& entries() const { return entries_; }
  const LedgerEntry& at(std::size_t i) const;
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const Matrix& initial_w() const { return initial_w_; }

  // First n entries with the same initial W.
  EditLedger prefix(std::size_t n) const;
  // initial W plus the in-order sum of alpha beta^T.
  Matrix replay() const;
  Matrix delta_sum() const;

 private:
  Matrix initial_w_;
  std::vector<LedgerEntry> entries_;
};

// |sum_i (k_e.beta_i) alpha_i|^2 - |(k_e.beta_e) alpha_e|^2, e is 0-based.
double noise_for_edit(const EditLedger& ledger, std::size_t e);
// Same quantity through the explicit double sum over (i, j) != (e, e).
double noise_expansion(const EditLedger& ledger, std::size_t e);
std::vector<double> noise_per_edit(const EditLedger& ledger);
// noise_expansion for every edit, sharing one Gram matrix of the alphas.
std::vector<double> noise_expansion_per_edit(const EditLedger& ledger);
double average_noise(const EditLedger& ledger);

// sum_{i != j} k_i.beta_j / (T (T - 1))
double mean_cross_activation(const EditLedger& ledger);

struct OverlapSummary {
  double mean = 0.0;
  double max = 0.0;
  std::vector<int> histogram;  // 10 equal bins over [0, 1]
  int pairs = 0;
  int zero_norm_excluded = 0;
};

OverlapSummary influence_overlap(const EditLedger& ledger);
// Pairs (i, j) with i < j and j in `targets`: overlap of each selected edit
// with everything that came before it.
OverlapSummary history_overlap(const EditLedger& ledger, const std::vector<std::size_t>& targets);

struct DeviationBound {
  double lhs = 0.0;
  double rhs = 0.0;
};

DeviationBound deviation_bound(const EditLedger& ledger, std::size_t e);

struct DriftStats {
  double mean_shift = 0.0;
  Vector per_dim_std_ratio;        // NaN where the pre-edit std is zero
  std::vector<int> flagged_dims;   // dimensions reported as NaN
};

DriftStats representation_drift(const Matrix& pre_outputs, const Matrix& post_outputs);

struct LastEditSplit {
  double noise = 0.0;
  double history_term = 0.0;  // |sum_{i<e} Delta_i k_e|^2
  double cross_term = 0.0;    // 2 sum_{i<e} (k_e.beta_e)(alpha_e.alpha_i)(beta_i.k_e)
  double residual = 0.0;      // noise - history_term - cross_term
};

// Decomposition of the last edit's noise into history and cross terms.
LastEditSplit last_edit_split(const EditLedger& ledger);

}  // namespace deltaedit
