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

#include "deltaedit/metrics.hpp"

#include <algorithm>
#include <string>

namespace deltaedit {
namespace {

void check_inputs(const Matrix& w, const FactUniverse& universe, const std::vector<int>& edited,
                  const EvaluationSet& eval) {
  if (edited.empty()) fail(ErrorCode::kInvalidArgument, "metrics: empty fact set");
  if (w.rows() != universe.d_out || w.cols() != universe.d_in)
    fail(ErrorCode::kDimensionMismatch, "metrics: W does not match the universe");
  for (int f : edited)
    if (f < 0 || f >= static_cast<int>(universe.facts.size()))
      fail(ErrorCode::kOutOfRange, "metrics: fact index " + std::to_string(f) + " out of range");
  const auto n = static_cast<std::size_t>(eval.unrelated_keys.rows());
  if (eval.pre_edit_tokens.size() != n || eval.paired_targets.size() != n)
    fail(ErrorCode::kDimensionMismatch, "metrics: malformed evaluation set");
}

double ratio(int hits, int total) { return total > 0 ? static_cast<double>(hits) / total : 0.0; }

}  // namespace

EvaluationSet make_evaluation_set(const FactUniverse& universe, int max_unrelated) {
  const auto n = static_cast<Eigen::Index>(
      std::min<std::size_t>({universe.facts.size(), static_cast<std::size_t>(std::max(0, max_unrelated)),
                             static_cast<std::size_t>(universe.unrelated_pool.rows())}));
  EvaluationSet eval;
  eval.unrelated_keys = universe.unrelated_pool.topRows(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    eval.pre_edit_tokens.push_back(
        model_predict(universe.initial_w, eval.unrelated_keys.row(j).transpose(), universe.embed));
    eval.paired_targets.push_back(universe.facts[static_cast<std::size_t>(j)].target_token);
  }
  return eval;
}

bool top_hit(const Vector& z, int token) {
  const Vector p = softmax(z);
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < p.size(); ++i)
    if (p[i] > p[best]) best = i;
  return best == token;
}

bool larger_hit(const Vector& z, int winner, int loser) {
  const Vector p = softmax(z);
  return p[winner] > p[loser];
}

void metrics_top(const Matrix& w, const FactUniverse& universe, const std::vector<int>& edited,
                 const EvaluationSet& eval, MetricReport& out) {
  check_inputs(w, universe, edited, eval);
  int eff = 0, gen = 0, n_gen = 0, spe = 0;
  for (int f : edited) {
    const Fact& fact = universe.facts[static_cast<std::size_t>(f)];
    eff += top_hit(logits(w, fact.key, universe.embed), fact.target_token);
    for (const Vector& r : fact.rephrase_keys) {
      gen += top_hit(logits(w, r, universe.embed), fact.target_token);
      ++n_gen;
    }
  }
  const auto n_u = static_cast<int>(eval.unrelated_keys.rows());
  for (int j = 0; j < n_u; ++j)
    spe += top_hit(logits(w, eval.unrelated_keys.row(j).transpose(), universe.embed),
                   eval.pre_edit_tokens[static_cast<std::size_t>(j)]);
  out.efficacy_top = ratio(eff, static_cast<int>(edited.size()));
  out.generalization_top = ratio(gen, n_gen);
  out.specificity_top = ratio(spe, n_u);
  out.n_evaluated = static_cast<int>(edited.size());
  out.n_rephrase = n_gen;
  out.n_unrelated = n_u;
}

void metrics_larger(const Matrix& w, const FactUniverse& universe, const std::vector<int>& edited,
                    const EvaluationSet& eval, MetricReport& out) {
  check_inputs(w, universe, edited, eval);
  int eff = 0, gen = 0, n_gen = 0, spe = 0;
  for (int f : edited) {
    const Fact& fact = universe.facts[static_cast<std::size_t>(f)];
    eff += larger_hit(logits(w, fact.key, universe.embed), fact.target_token, fact.original_token);
    for (const Vector& r : fact.rephrase_keys) {
      gen += larger_hit(logits(w, r, universe.embed), fact.target_token, fact.original_token);
      ++n_gen;
    }
  }
  const auto n_u = static_cast<int>(eval.unrelated_keys.rows());
  for (int j = 0; j < n_u; ++j) {
    const auto js = static_cast<std::size_t>(j);
    spe += larger_hit(logits(w, eval.unrelated_keys.row(j).transpose(), universe.embed),
                      eval.pre_edit_tokens[js], eval.paired_targets[js]);
  }
  out.efficacy_larger = ratio(eff, static_cast<int>(edited.size()));
  out.generalization_larger = ratio(gen, n_gen);
  out.specificity_larger = ratio(spe, n_u);
  out.n_evaluated = static_cast<int>(edited.size());
  out.n_rephrase = n_gen;
  out.n_unrelated = n_u;
}

MetricReport evaluate(const Matrix& w, const FactUniverse& universe, const std::vector<int>& edited,
                      const EvaluationSet& eval) {
  MetricReport out;
  metrics_top(w, universe, edited, eval, out);
  metrics_larger(w, universe, edited, eval, out);
  return out;
}

}  // namespace deltaedit
