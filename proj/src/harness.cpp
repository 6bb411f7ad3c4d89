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

#include "deltaedit/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <numeric>
#include <random>

namespace deltaedit {
namespace {

constexpr std::uint64_t kShuffleSalt = 0x9e3779b97f4a7c15ULL;

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

Matrix fact_keys(const FactUniverse& universe) {
  Matrix keys(static_cast<Eigen::Index>(universe.facts.size()), universe.d_in);
  for (std::size_t f = 0; f < universe.facts.size(); ++f)
    keys.row(static_cast<Eigen::Index>(f)) = universe.facts[f].key.transpose();
  return keys;
}

}  // namespace

void RunConfig::validate() const {
  universe.validate();
  edit.validate();
  if (n_edits < 1) fail(ErrorCode::kInvalidArgument, "n_edits must be >= 1");
  if (eval_every < 1) fail(ErrorCode::kInvalidArgument, "eval_every must be >= 1");
  if (n_edits > universe.n_facts)
    fail(ErrorCode::kInvalidArgument, "n_edits exceeds the number of facts in the universe");
  if (max_unrelated < 1) fail(ErrorCode::kInvalidArgument, "max_unrelated must be >= 1");
}

std::vector<int> edit_order(const RunConfig& config, std::uint64_t seed, int n_facts) {
  std::vector<int> order(static_cast<std::size_t>(n_facts));
  std::iota(order.begin(), order.end(), 0);
  if (config.shuffle) {
    std::mt19937_64 rng(seed ^ kShuffleSalt);
    std::shuffle(order.begin(), order.end(), rng);
  }
  return order;
}

std::vector<int> checkpoint_schedule(int n_edits, int eval_every) {
  std::vector<int> out;
  for (int i = eval_every; i <= n_edits; i += eval_every) out.push_back(i);
  if (out.empty() || out.back() != n_edits) out.push_back(n_edits);
  return out;
}

ReportRow checkpoint_row(const FactUniverse& universe, const EvaluationSet& eval,
                         const std::vector<int>& order, const EditLedger& ledger, const Matrix& w) {
  const std::size_t n = ledger.size();
  if (n == 0 || n > order.size()) fail(ErrorCode::kInvalidArgument, "checkpoint_row: bad ledger length");
  ReportRow row;
  row.edit_index = static_cast<int>(n);
  const std::vector<int> edited(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n));
  row.metrics = evaluate(w, universe, edited, eval);
  row.noise_e = average_noise(ledger);
  if (n >= 2) {
    row.k_beta = mean_cross_activation(ledger);
    row.overlap = influence_overlap(ledger).mean;
  }
  for (const LedgerEntry& e : ledger.entries()) row.activations += e.constrained;
  const Matrix keys = fact_keys(universe);
  if (keys.rows() >= 2) {
    const Matrix pre = keys * universe.initial_w.transpose();
    const Matrix post = keys * w.transpose();
    row.mean_shift = representation_drift(pre, post).mean_shift;
  }
  return row;
}

namespace {

RunReport run_impl(const RunConfig& config, std::uint64_t seed, int stop_after,
                   const FactUniverse* universe, const EditorState* resume_state,
                   const EditLedger* resume_ledger) {
  const auto start = std::chrono::steady_clock::now();
  RunReport report;
  report.seed = seed;
  report.config = config;
  report.config.universe.seed = universe ? universe->seed : seed;
  report.config.validate();
  report.label = method_name(config.edit.method);

  FactUniverse owned;
  if (!universe) {
    owned = generate_universe(report.config.universe);
    universe = &owned;
  }
  if (static_cast<int>(universe->facts.size()) < config.n_edits)
    fail(ErrorCode::kInvalidArgument, "universe has fewer facts than n_edits");

  report.edit_order = edit_order(config, seed, static_cast<int>(universe->facts.size()));
  const EvaluationSet eval = make_evaluation_set(*universe, config.max_unrelated);
  const std::vector<int> schedule = checkpoint_schedule(config.n_edits, config.eval_every);

  if ((resume_state == nullptr) != (resume_ledger == nullptr))
    fail(ErrorCode::kInvalidArgument, "resuming needs both a state and a ledger");
  EditorState state = resume_state ? *resume_state : EditorState::fresh(*universe, config.edit);
  EditLedger ledger = resume_ledger ? *resume_ledger : EditLedger(universe->initial_w);
  if (resume_state) {
    if (state.w.rows() != universe->d_out || state.w.cols() != universe->d_in)
      fail(ErrorCode::kDimensionMismatch, "checkpoint does not match the universe");
    if (static_cast<std::size_t>(state.edit_count) != ledger.size())
      fail(ErrorCode::kInvalidArgument, "checkpoint edit count does not match its ledger");
    if (state.edit_count > config.n_edits)
      fail(ErrorCode::kInvalidArgument, "checkpoint is past the configured n_edits");
    // earlier rows are rebuilt from the ledger; the replay reproduces W exactly
    for (int c : schedule) {
      if (c > state.edit_count) break;
      const EditLedger prefix = ledger.prefix(static_cast<std::size_t>(c));
      report.rows.push_back(checkpoint_row(*universe, eval, report.edit_order, prefix, prefix.replay()));
    }
  }

  auto next_checkpoint = std::upper_bound(schedule.begin(), schedule.end(), state.edit_count);
  const int stop = std::min(stop_after, config.n_edits);
  while (state.edit_count < stop) {
    const int e = state.edit_count;
    const Fact& fact = universe->facts[static_cast<std::size_t>(report.edit_order[static_cast<std::size_t>(e)])];
    EditOutcome outcome;
    try {
      outcome = apply_edit(state, fact, *universe, config.edit);
    } catch (const Error& err) {
      fail(err.code(), "edit " + std::to_string(e + 1) + ": " + err.what());
    }
    ledger.append({std::move(outcome.alpha), std::move(outcome.beta), fact.key, outcome.constrained});
    if (next_checkpoint != schedule.end() && *next_checkpoint == state.edit_count) {
      report.rows.push_back(checkpoint_row(*universe, eval, report.edit_order, ledger, state.w));
      ++next_checkpoint;
    }
  }

  report.final_state = std::move(state);
  report.ledger = std::move(ledger);
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace

RunReport run_experiment(const RunConfig& config, std::uint64_t seed, const FactUniverse* universe,
                         const EditorState* resume_state, const EditLedger* resume_ledger) {
  return run_impl(config, seed, config.n_edits, universe, resume_state, resume_ledger);
}

RunReport run_partial(const RunConfig& config, std::uint64_t seed, int stop_after,
                      const FactUniverse* universe) {
  if (stop_after < 0) fail(ErrorCode::kInvalidArgument, "stop_after must be >= 0");
  return run_impl(config, seed, stop_after, universe, nullptr, nullptr);
}

std::vector<RunReport> sweep_eta(const RunConfig& config, const std::vector<double>& etas,
                                 std::uint64_t seed) {
  if (etas.empty()) fail(ErrorCode::kInvalidArgument, "sweep_eta: no eta values");
  RunConfig base = config;
  base.universe.seed = seed;
  base.validate();
  const FactUniverse universe = generate_universe(base.universe);
  std::vector<RunReport> out;
  for (double eta : etas) {
    RunConfig c = base;
    c.edit.eta = eta;
    RunReport r = run_experiment(c, seed, &universe);
    r.label = MethodSpec{c.edit.method, eta}.label();
    out.push_back(std::move(r));
  }
  return out;
}

std::string MethodSpec::label() const {
  std::string s = method_name(method);
  if (eta) s += ":" + format_double(*eta);
  return s;
}

MethodSpec parse_method_spec(const std::string& text) {
  MethodSpec spec;
  const auto colon = text.find(':');
  spec.method = parse_method(text.substr(0, colon));
  if (colon != std::string::npos) {
    const std::string tail = text.substr(colon + 1);
    double eta = 0.0;
    const auto res = std::from_chars(tail.data(), tail.data() + tail.size(), eta);
    if (res.ec != std::errc() || res.ptr != tail.data() + tail.size())
      fail(ErrorCode::kInvalidArgument, "bad eta in method spec '" + text + "'");
    spec.eta = eta;
  }
  return spec;
}

std::vector<ComparisonRow> compare_modes(const RunConfig& config, const std::vector<MethodSpec>& methods,
                                         std::uint64_t seed) {
  if (methods.size() < 2) fail(ErrorCode::kInvalidArgument, "compare_modes needs at least two methods");
  RunConfig base = config;
  base.universe.seed = seed;
  base.validate();
  const FactUniverse universe = generate_universe(base.universe);
  std::vector<ComparisonRow> out;
  for (const MethodSpec& m : methods) {
    RunConfig c = base;
    c.edit.method = m.method;
    if (m.eta) c.edit.eta = *m.eta;
    const RunReport r = run_experiment(c, seed, &universe);
    out.push_back({m.label(), seed, r.rows.back()});
  }
  return out;
}

}  // namespace deltaedit
