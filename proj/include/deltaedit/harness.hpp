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

#include "deltaedit/editor.hpp"
#include "deltaedit/metrics.hpp"
#include "deltaedit/noise.hpp"
#include "deltaedit/world.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace deltaedit {

struct RunConfig {
  UniverseConfig universe;
  EditConfig edit;
  int n_edits = 500;
  int eval_every = 25;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::string output_path;
  bool shuffle = false;  // seed-driven edit order instead of universe order
  int max_unrelated = 500;

  void validate() const;
};

struct ReportRow {
  int edit_index = 0;
  MetricReport metrics;
  double noise_e = 0.0;
  double k_beta = 0.0;   // 0 below two edits
  double overlap = 0.0;  // mean influence overlap, 0 below two edits
  int activations = 0;
  double mean_shift = 0.0;
};

struct RunReport {
  std::string label;  // method name, plus eta when overridden
  std::uint64_t seed = 0;
  RunConfig config;   // echo, with the universe seed set to `seed`
  std::vector<ReportRow> rows;
  double wall_time_seconds = 0.0;

  // not part of the exported report
  EditorState final_state;
  EditLedger ledger;
  std::vector<int> edit_order;
};

// Edit order for a run: universe order unless config.shuffle is set.
std::vector<int> edit_order(const RunConfig& config, std::uint64_t seed, int n_facts);

// Checkpoint row for the first ledger.size() edits. Pure function of the
// ledger prefix, which lets a resumed run rebuild earlier rows by replay.
ReportRow checkpoint_row(const FactUniverse& universe, const EvaluationSet& eval,
                         const std::vector<int>& order, const EditLedger& ledger, const Matrix& w);

// Edit indices (1-based) at which rows are recorded.
std::vector<int> checkpoint_schedule(int n_edits, int eval_every);

// Runs config.n_edits sequential edits. With `resume_state` and
// `resume_ledger` the run continues from a checkpoint of the same config.
RunReport run_experiment(const RunConfig& config, std::uint64_t seed,
                         const FactUniverse* universe = nullptr,
                         const EditorState* resume_state = nullptr,
                         const EditLedger* resume_ledger = nullptr);

// Stops after `stop_after` edits, as if the run had been interrupted there.
RunReport run_partial(const RunConfig& config, std::uint64_t seed, int stop_after,
                      const FactUniverse* universe = nullptr);

std::vector<RunReport> sweep_eta(const RunConfig& config, const std::vector<double>& etas,
                                 std::uint64_t seed);

struct MethodSpec {
  Method method = Method::kDeltaEdit;
  std::optional<double> eta;

  std::string label() const;
};

// "memit", "alphaedit", "deltaedit" or "deltaedit:<eta>".
MethodSpec parse_method_spec(const std::string& text);

struct ComparisonRow {
  std::string label;
  std::uint64_t seed = 0;
  ReportRow terminal;
};

std::vector<ComparisonRow> compare_modes(const RunConfig& config, const std::vector<MethodSpec>& methods,
                                         std::uint64_t seed);

}  // namespace deltaedit
