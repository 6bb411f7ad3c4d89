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

#include "deltaedit/deltaedit_c.h"

#include "deltaedit/harness.hpp"
#include "deltaedit/serialize.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>
#include <new>
#include <string>

struct de_config {
  deltaedit::RunConfig config;
};

struct de_report {
  std::vector<deltaedit::RunReport> runs;
};

struct de_comparison {
  std::vector<deltaedit::ComparisonRow> rows;
};

struct de_universe {
  deltaedit::FactUniverse universe;
};

struct de_ledger {
  deltaedit::EditLedger ledger;
};

namespace {

using namespace deltaedit;

thread_local std::string g_last_error;

de_status to_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return DE_ERR_INVALID_ARGUMENT;
    case ErrorCode::kDimensionMismatch: return DE_ERR_DIMENSION;
    case ErrorCode::kNumerical: return DE_ERR_NUMERICAL;
    case ErrorCode::kIo: return DE_ERR_IO;
    case ErrorCode::kSchema: return DE_ERR_SCHEMA;
    case ErrorCode::kOutOfRange: return DE_ERR_OUT_OF_RANGE;
  }
  return DE_ERR_INTERNAL;
}

template <typename F>
de_status guard(F&& body) {
  try {
    g_last_error.clear();
    body();
    return DE_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return DE_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return DE_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) fail(ErrorCode::kInvalidArgument, std::string(what) + " is null");
}

const RunReport& run_at(const de_report* r, size_t i) {
  require(r, "report");
  if (i >= r->runs.size()) fail(ErrorCode::kOutOfRange, "run index out of range");
  return r->runs[i];
}

de_row to_row(const ReportRow& r) {
  de_row out{};
  out.edit_index = r.edit_index;
  out.eff_top = r.metrics.efficacy_top;
  out.gen_top = r.metrics.generalization_top;
  out.spe_top = r.metrics.specificity_top;
  out.eff_larger = r.metrics.efficacy_larger;
  out.gen_larger = r.metrics.generalization_larger;
  out.spe_larger = r.metrics.specificity_larger;
  out.noise_e = r.noise_e;
  out.k_beta = r.k_beta;
  out.overlap = r.overlap;
  out.activations = r.activations;
  out.mean_shift = r.mean_shift;
  return out;
}


int* int_field(RunConfig& c, const std::string& key) {
  if (key == "d_in") return &c.universe.d_in;
  if (key == "d_out") return &c.universe.d_out;
  if (key == "vocab_size") return &c.universe.vocab_size;
  if (key == "n_facts") return &c.universe.n_facts;
  if (key == "n_pool") return &c.universe.n_pool;
  if (key == "n_rephrase") return &c.universe.n_rephrase;
  if (key == "n_edits") return &c.n_edits;
  if (key == "eval_every") return &c.eval_every;
  if (key == "train_steps") return &c.edit.train_steps;
  if (key == "warmup_edits") return &c.edit.warmup_edits;
  if (key == "max_unrelated") return &c.max_unrelated;
  return nullptr;
}

bool* bool_field(RunConfig& c, const std::string& key) {
  if (key == "shuffle") return &c.shuffle;
  if (key == "stats_on_constrained") return &c.edit.stats_on_constrained;
  return nullptr;
}

double* double_field(RunConfig& c, const std::string& key) {
  if (key == "rho") return &c.universe.rho;
  if (key == "cos_min") return &c.universe.cos_min;
  if (key == "rephrase_noise") return &c.universe.rephrase_noise;
  if (key == "mean_strength") return &c.universe.mean_strength;
  if (key == "key_noise") return &c.universe.key_noise;
  if (key == "target_zipf") return &c.universe.target_zipf;
  if (key == "ridge") return &c.universe.ridge;
  if (key == "logit_scale") return &c.universe.logit_scale;
  if (key == "eta") return &c.edit.eta;
  if (key == "delta_coef") return &c.edit.delta_coef;
  if (key == "learn_rate") return &c.edit.learn_rate;
  if (key == "rank_cap_ratio") return &c.edit.rank_cap_ratio;
  if (key == "eig_zero_rel") return &c.edit.eig_zero_rel;
  if (key == "outlier_kappa") return &c.edit.outlier_kappa;
  if (key == "stop_margin") return &c.edit.stop_margin;
  return nullptr;
}

RunConfig seeded(const de_config* c, uint64_t seed) {
  require(c, "config");
  RunConfig out = c->config;
  out.universe.seed = seed;
  return out;
}

}  // namespace

extern "C" {

uint32_t de_api_version(void) { return DE_API_VERSION; }

const char* de_last_error(void) { return g_last_error.c_str(); }

const char* de_status_name(de_status status) {
  switch (status) {
    case DE_OK: return "ok";
    case DE_ERR_INVALID_ARGUMENT: return "invalid argument";
    case DE_ERR_DIMENSION: return "dimension mismatch";
    case DE_ERR_NUMERICAL: return "numerical failure";
    case DE_ERR_IO: return "i/o error";
    case DE_ERR_SCHEMA: return "schema error";
    case DE_ERR_OUT_OF_RANGE: return "out of range";
    case DE_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

de_status de_config_create(de_config** out) {
  return guard([&] {
    require(out, "out");
    *out = new de_config();
  });
}

void de_config_destroy(de_config* config) { delete config; }

de_status de_config_set_int(de_config* config, const char* key, int64_t value) {
  return guard([&] {
    require(config, "config");
    require(key, "key");
    if (bool* b = bool_field(config->config, key)) {
      *b = value != 0;
      return;
    }
    int* field = int_field(config->config, key);
    if (!field) fail(ErrorCode::kInvalidArgument, std::string("unknown integer key '") + key + "'");
    if (value < INT32_MIN || value > INT32_MAX)
      fail(ErrorCode::kOutOfRange, std::string("value for '") + key + "' does not fit in 32 bits");
    *field = static_cast<int>(value);
  });
}

de_status de_config_get_int(const de_config* config, const char* key, int64_t* out) {
  return guard([&] {
    require(config, "config");
    require(key, "key");
    require(out, "out");
    auto& c = const_cast<RunConfig&>(config->config);
    if (bool* b = bool_field(c, key)) {
      *out = *b;
      return;
    }
    int* field = int_field(c, key);
    if (!field) fail(ErrorCode::kInvalidArgument, std::string("unknown integer key '") + key + "'");
    *out = *field;
  });
}

de_status de_config_set_double(de_config* config, const char* key, double value) {
  return guard([&] {
    require(config, "config");
    require(key, "key");
    double* field = double_field(config->config, key);
    if (!field) fail(ErrorCode::kInvalidArgument, std::string("unknown real key '") + key + "'");
    *field = value;
  });
}

de_status de_config_get_double(const de_config* config, const char* key, double* out) {
  return guard([&] {
    require(config, "config");
    require(key, "key");
    require(out, "out");
    double* field = double_field(const_cast<RunConfig&>(config->config), key);
    if (!field) fail(ErrorCode::kInvalidArgument, std::string("unknown real key '") + key + "'");
    *out = *field;
  });
}

de_status de_config_set_string(de_config* config, const char* key, const char* value) {
  return guard([&] {
    require(config, "config");
    require(key, "key");
    require(value, "value");
    const std::string k = key;
    if (k == "method") {
      config->config.edit.method = parse_method(value);
    } else if (k == "output_path") {
      config->config.output_path = value;
    } else {
      fail(ErrorCode::kInvalidArgument, "unknown string key '" + k + "'");
    }
  });
}

de_status de_config_set_seeds(de_config* config, const uint64_t* seeds, size_t count) {
  return guard([&] {
    require(config, "config");
    if (count > 0) require(seeds, "seeds");
    config->config.seeds.assign(seeds, seeds + count);
  });
}

size_t de_config_seed_count(const de_config* config) { return config ? config->config.seeds.size() : 0; }

uint64_t de_config_seed(const de_config* config, size_t index) {
  if (!config || index >= config->config.seeds.size()) return 0;
  return config->config.seeds[index];
}

de_status de_config_validate(const de_config* config) {
  return guard([&] {
    require(config, "config");
    config->config.validate();
  });
}

de_status de_run(const de_config* config, uint64_t seed, de_report** out) {
  return guard([&] {
    require(out, "out");
    auto r = std::make_unique<de_report>();
    r->runs.push_back(run_experiment(seeded(config, seed), seed));
    *out = r.release();
  });
}

de_status de_run_partial(const de_config* config, uint64_t seed, int32_t stop_after, de_report** out) {
  return guard([&] {
    require(out, "out");
    auto r = std::make_unique<de_report>();
    r->runs.push_back(run_partial(seeded(config, seed), seed, stop_after));
    *out = r.release();
  });
}

de_status de_resume(const de_config* config, uint64_t seed, const char* state_path,
                    const char* ledger_path, de_report** out) {
  return guard([&] {
    require(out, "out");
    require(state_path, "state_path");
    require(ledger_path, "ledger_path");
    RunConfig c = seeded(config, seed);
    auto [state, edit] = load_state(state_path);
    c.edit = edit;
    const EditLedger ledger = load_ledger(ledger_path);
    auto r = std::make_unique<de_report>();
    r->runs.push_back(run_experiment(c, seed, nullptr, &state, &ledger));
    *out = r.release();
  });
}

de_status de_sweep_eta(const de_config* config, const double* etas, size_t count, uint64_t seed,
                       de_report** out) {
  return guard([&] {
    require(out, "out");
    if (count > 0) require(etas, "etas");
    auto r = std::make_unique<de_report>();
    r->runs = sweep_eta(seeded(config, seed), std::vector<double>(etas, etas + count), seed);
    *out = r.release();
  });
}

de_status de_compare(const de_config* config, const char* const* methods, size_t count, uint64_t seed,
                     de_comparison** out) {
  return guard([&] {
    require(out, "out");
    if (count > 0) require(methods, "methods");
    std::vector<MethodSpec> specs;
    for (size_t i = 0; i < count; ++i) {
      require(methods[i], "method");
      specs.push_back(parse_method_spec(methods[i]));
    }
    auto c = std::make_unique<de_comparison>();
    c->rows = compare_modes(seeded(config, seed), specs, seed);
    *out = c.release();
  });
}

size_t de_report_count(const de_report* report) { return report ? report->runs.size() : 0; }

const char* de_report_label(const de_report* report, size_t run) {
  if (!report || run >= report->runs.size()) return "";
  return report->runs[run].label.c_str();
}

size_t de_report_row_count(const de_report* report, size_t run) {
  if (!report || run >= report->runs.size()) return 0;
  return report->runs[run].rows.size();
}

de_status de_report_row(const de_report* report, size_t run, size_t row, de_row* out) {
  return guard([&] {
    require(out, "out");
    const RunReport& r = run_at(report, run);
    if (row >= r.rows.size()) fail(ErrorCode::kOutOfRange, "row index out of range");
    *out = to_row(r.rows[row]);
  });
}

double de_report_wall_time(const de_report* report, size_t run) {
  if (!report || run >= report->runs.size()) return 0.0;
  return report->runs[run].wall_time_seconds;
}

de_status de_report_export(const de_report* report, size_t run, const char* json_path, int include_timing) {
  return guard([&] {
    require(json_path, "json_path");
    export_report(run_at(report, run), json_path, include_timing != 0);
  });
}

de_status de_report_export_all(const de_report* report, const char* json_path, int include_timing) {
  return guard([&] {
    require(report, "report");
    require(json_path, "json_path");
    write_text_file(json_path, reports_to_string(report->runs, include_timing != 0));
  });
}

de_status de_report_save_state(const de_report* report, size_t run, const char* path) {
  return guard([&] {
    require(path, "path");
    const RunReport& r = run_at(report, run);
    save_state(r.final_state, r.config.edit, path);
  });
}

de_status de_report_save_ledger(const de_report* report, size_t run, const char* path) {
  return guard([&] {
    require(path, "path");
    save_ledger(run_at(report, run).ledger, path);
  });
}

double de_report_final_w_norm(const de_report* report, size_t run) {
  if (!report || run >= report->runs.size()) return std::nan("");
  return report->runs[run].final_state.w.norm();
}

void de_report_destroy(de_report* report) { delete report; }

size_t de_comparison_count(const de_comparison* cmp) { return cmp ? cmp->rows.size() : 0; }

const char* de_comparison_label(const de_comparison* cmp, size_t index) {
  if (!cmp || index >= cmp->rows.size()) return "";
  return cmp->rows[index].label.c_str();
}

de_status de_comparison_row(const de_comparison* cmp, size_t index, de_row* out) {
  return guard([&] {
    require(cmp, "comparison");
    require(out, "out");
    if (index >= cmp->rows.size()) fail(ErrorCode::kOutOfRange, "comparison index out of range");
    *out = to_row(cmp->rows[index].terminal);
  });
}

de_status de_comparison_export(const de_comparison* cmp, const char* json_path) {
  return guard([&] {
    require(cmp, "comparison");
    require(json_path, "json_path");
    write_text_file(json_path, comparison_to_string(cmp->rows));
  });
}

void de_comparison_destroy(de_comparison* cmp) { delete cmp; }

de_status de_universe_generate(const de_config* config, uint64_t seed, de_universe** out) {
  return guard([&] {
    require(out, "out");
    auto u = std::make_unique<de_universe>();
    u->universe = generate_universe(seeded(config, seed).universe);
    *out = u.release();
  });
}

de_status de_universe_load(const char* path, de_universe** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    auto u = std::make_unique<de_universe>();
    u->universe = load_universe(path);
    *out = u.release();
  });
}

de_status de_universe_save(const de_universe* universe, const char* path) {
  return guard([&] {
    require(universe, "universe");
    require(path, "path");
    save_universe(universe->universe, path);
  });
}

de_status de_universe_dims(const de_universe* universe, int32_t* d_in, int32_t* d_out, int32_t* vocab_size,
                           int32_t* n_facts) {
  return guard([&] {
    require(universe, "universe");
    const FactUniverse& u = universe->universe;
    if (d_in) *d_in = u.d_in;
    if (d_out) *d_out = u.d_out;
    if (vocab_size) *vocab_size = u.vocab_size();
    if (n_facts) *n_facts = static_cast<int32_t>(u.facts.size());
  });
}

void de_universe_destroy(de_universe* universe) { delete universe; }

de_status de_ledger_load(const char* path, de_ledger** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    auto l = std::make_unique<de_ledger>();
    l->ledger = load_ledger(path);
    *out = l.release();
  });
}

size_t de_ledger_size(const de_ledger* ledger) { return ledger ? ledger->ledger.size() : 0; }

de_status de_ledger_noise(const de_ledger* ledger, size_t index, double* direct, double* expansion) {
  return guard([&] {
    require(ledger, "ledger");
    if (direct) *direct = noise_for_edit(ledger->ledger, index);
    if (expansion) *expansion = noise_expansion(ledger->ledger, index);
  });
}

de_status de_ledger_deviation(const de_ledger* ledger, size_t index, double* lhs, double* rhs) {
  return guard([&] {
    require(ledger, "ledger");
    const DeviationBound b = deviation_bound(ledger->ledger, index);
    if (lhs) *lhs = b.lhs;
    if (rhs) *rhs = b.rhs;
  });
}

de_status de_ledger_summary(const de_ledger* ledger, de_noise_summary* out) {
  return guard([&] {
    require(ledger, "ledger");
    require(out, "out");
    const EditLedger& l = ledger->ledger;
    de_noise_summary s{};
    s.n_edits = l.size();
    if (l.empty()) fail(ErrorCode::kInvalidArgument, "ledger has no edits");
    s.average_noise = average_noise(l);
    if (l.size() >= 2) {
      s.mean_cross_activation = mean_cross_activation(l);
      const OverlapSummary o = influence_overlap(l);
      s.overlap_mean = o.mean;
      s.overlap_max = o.max;
      s.overlap_zero_norm = o.zero_norm_excluded;
    }
    const std::vector<double> direct = noise_per_edit(l);
    const std::vector<double> expansion = noise_expansion_per_edit(l);
    for (size_t e = 0; e < l.size(); ++e) {
      s.constrained_edits += l.at(e).constrained;
      const double expanded = expansion[e];
      const double scale = std::max({std::abs(direct[e]), std::abs(expanded), 1e-300});
      s.max_identity_gap = std::max(s.max_identity_gap, std::abs(direct[e] - expanded) / scale);
      if (l.initial_w().size() != 0) {
        const DeviationBound b = deviation_bound(l, e);
        s.bound_violations += b.lhs > b.rhs + 1e-9;
      }
    }
    s.last_split_residual = last_edit_split(l).residual;
    *out = s;
  });
}

void de_ledger_destroy(de_ledger* ledger) { delete ledger; }

}  // extern "C"
