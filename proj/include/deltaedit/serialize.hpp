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

#include "deltaedit/harness.hpp"

#include <string>
#include <utility>
#include <vector>

// File formats. Every document carries an integer "schema_version" and a
// "kind"; loading a different version raises ErrorCode::kSchema. Matrices are
// nested lists in row-major order and doubles are written in shortest
// round-trip form, so save/load is bit-exact.
namespace deltaedit {

inline constexpr int kSchemaVersion = 1;

std::string universe_to_string(const FactUniverse& universe);
FactUniverse universe_from_string(const std::string& text);
void save_universe(const FactUniverse& universe, const std::string& path);
FactUniverse load_universe(const std::string& path);

std::string state_to_string(const EditorState& state, const EditConfig& config);
std::pair<EditorState, EditConfig> state_from_string(const std::string& text);
void save_state(const EditorState& state, const EditConfig& config, const std::string& path);
std::pair<EditorState, EditConfig> load_state(const std::string& path);

// JSON lines: a header {schema_version, kind, initial_W} then one record
// {index, alpha, beta, key, constrained} per edit.
std::string ledger_to_string(const EditLedger& ledger);
EditLedger ledger_from_string(const std::string& text);
void save_ledger(const EditLedger& ledger, const std::string& path);
EditLedger load_ledger(const std::string& path);

std::string run_config_to_string(const RunConfig& config);
RunConfig run_config_from_string(const std::string& text);

std::string report_to_string(const RunReport& report, bool include_timing = false);
std::string reports_to_string(const std::vector<RunReport>& reports, bool include_timing = false);
// Rows, label, seed and config; final state and ledger are not restored.
RunReport report_from_string(const std::string& text);

inline constexpr const char* kCsvHeader =
    "edit_index,eff_top,gen_top,spe_top,eff_larger,gen_larger,spe_larger,noise_E,k_beta,overlap,"
    "activations,mean_shift";
std::string report_csv(const RunReport& report);

// Writes `path` (JSON) and the CSV companion next to it (.csv extension).
void export_report(const RunReport& report, const std::string& path, bool include_timing = false);
std::string csv_path_for(const std::string& json_path);

std::string comparison_to_string(const std::vector<ComparisonRow>& rows);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace deltaedit
