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

// Command-line front end. Talks to the engine through the C API only.

#include "deltaedit/deltaedit_c.h"

#include <CLI11.hpp>

#include <cstdio>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace {

struct CliFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(de_status status, const char* what) {
  if (status != DE_OK)
    throw CliFailure(std::string(what) + ": " + de_status_name(status) + ": " + de_last_error());
}

struct ConfigDeleter {
  void operator()(de_config* c) const { de_config_destroy(c); }
};
struct ReportDeleter {
  void operator()(de_report* r) const { de_report_destroy(r); }
};
struct ComparisonDeleter {
  void operator()(de_comparison* c) const { de_comparison_destroy(c); }
};
struct LedgerDeleter {
  void operator()(de_ledger* l) const { de_ledger_destroy(l); }
};
struct UniverseDeleter {
  void operator()(de_universe* u) const { de_universe_destroy(u); }
};

using ConfigPtr = std::unique_ptr<de_config, ConfigDeleter>;
using ReportPtr = std::unique_ptr<de_report, ReportDeleter>;

// Options shared by run, sweep-eta and compare.
struct CommonOptions {
  std::string method = "deltaedit";
  int dim = 64;
  int vocab = 256;
  int edits = 500;
  int facts = 0;  // 0: same as edits, at least 500
  double eta = 1.5;
  double delta_coef = 0.9;
  double learn_rate = 0.1;
  int steps = 25;
  std::vector<std::uint64_t> seeds{0};
  int eval_every = 25;
  bool literal_stats = false;
  bool shuffle = false;
  bool timing = false;
  std::string out;

  void attach(CLI::App* app, bool with_method) {
    if (with_method)
      app->add_option("--method", method, "memit | alphaedit | deltaedit")
          ->check(CLI::IsMember({"memit", "alphaedit", "deltaedit"}));
    app->add_option("--dim", dim, "key and output dimension")->check(CLI::PositiveNumber);
    app->add_option("--vocab", vocab, "vocabulary size")->check(CLI::Range(2, 1 << 20));
    app->add_option("--edits", edits, "number of sequential edits")->check(CLI::PositiveNumber);
    app->add_option("--facts", facts, "facts in the universe (default max(edits, 500))");
    app->add_option("--eta", eta, "threshold strength");
    app->add_option("--delta-coef", delta_coef, "sliding average coefficient");
    app->add_option("--lr", learn_rate, "residual learning rate");
    app->add_option("--steps", steps, "residual training steps");
    app->add_option("--seed", seeds, "seed(s); repeat or give a list")->delimiter(',');
    app->add_option("--eval-every", eval_every, "checkpoint interval")->check(CLI::PositiveNumber);
    app->add_flag("--literal-stats", literal_stats, "update threshold statistics on unconstrained edits only");
    app->add_flag("--shuffle", shuffle, "seeded edit order instead of universe order");
    app->add_flag("--timing", timing, "include wall time in the JSON report");
    app->add_option("--out", out, "report path (JSON; a .csv companion is written next to it)");
  }

  ConfigPtr build() const {
    de_config* raw = nullptr;
    check(de_config_create(&raw), "config");
    ConfigPtr c(raw);
    check(de_config_set_string(raw, "method", method.c_str()), "method");
    check(de_config_set_int(raw, "d_in", dim), "dim");
    check(de_config_set_int(raw, "d_out", dim), "dim");
    check(de_config_set_int(raw, "vocab_size", vocab), "vocab");
    check(de_config_set_int(raw, "n_edits", edits), "edits");
    check(de_config_set_int(raw, "n_facts", facts > 0 ? facts : std::max(edits, 500)), "facts");
    check(de_config_set_int(raw, "n_pool", std::max(1000, 2 * dim)), "pool");
    check(de_config_set_double(raw, "eta", eta), "eta");
    check(de_config_set_double(raw, "delta_coef", delta_coef), "delta-coef");
    check(de_config_set_double(raw, "learn_rate", learn_rate), "lr");
    check(de_config_set_int(raw, "train_steps", steps), "steps");
    check(de_config_set_int(raw, "eval_every", eval_every), "eval-every");
    check(de_config_set_int(raw, "stats_on_constrained", literal_stats ? 0 : 1), "literal-stats");
    check(de_config_set_int(raw, "shuffle", shuffle ? 1 : 0), "shuffle");
    check(de_config_set_seeds(raw, seeds.data(), seeds.size()), "seed");
    check(de_config_set_string(raw, "output_path", out.c_str()), "out");
    check(de_config_validate(raw), "config");
    return c;
  }
};

// path for run k of n: unchanged when n == 1, otherwise "<stem>.<tag><ext>"
std::string tagged_path(const std::string& path, const std::string& tag, std::size_t n) {
  if (path.empty() || n == 1) return path;
  const auto slash = path.find_last_of('/');
  const auto dot = path.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path + "." + tag;
  return path.substr(0, dot) + "." + tag + path.substr(dot);
}

void print_header() {
  std::printf("%-18s %5s %6s %6s %6s %6s %6s %6s %12s %10s %8s %5s %10s\n", "run", "edit", "effT", "genT",
              "speT", "effL", "genL", "speL", "noise_E", "k_beta", "overlap", "act", "shift");
}

void print_row(const std::string& label, const de_row& r) {
  std::printf("%-18s %5d %6.3f %6.3f %6.3f %6.3f %6.3f %6.3f %12.5g %10.3g %8.4f %5d %10.4g\n", label.c_str(),
              r.edit_index, r.eff_top, r.gen_top, r.spe_top, r.eff_larger, r.gen_larger, r.spe_larger, r.noise_e,
              r.k_beta, r.overlap, r.activations, r.mean_shift);
}

void print_report(const de_report* report, std::uint64_t seed, bool all_rows) {
  for (std::size_t run = 0; run < de_report_count(report); ++run) {
    const std::string label = std::string(de_report_label(report, run)) + "/s" + std::to_string(seed);
    const std::size_t n = de_report_row_count(report, run);
    for (std::size_t i = all_rows ? 0 : (n ? n - 1 : 0); i < n; ++i) {
      de_row row{};
      check(de_report_row(report, run, i, &row), "row");
      print_row(label, row);
    }
  }
}

int cmd_run(const CommonOptions& opt, const std::string& resume_state, const std::string& resume_ledger,
            const std::string& save_state, const std::string& save_ledger, int stop_after) {
  ConfigPtr config = opt.build();
  print_header();
  for (std::uint64_t seed : opt.seeds) {
    de_report* raw = nullptr;
    if (!resume_state.empty()) {
      check(de_resume(config.get(), seed, resume_state.c_str(), resume_ledger.c_str(), &raw), "resume");
    } else if (stop_after > 0) {
      check(de_run_partial(config.get(), seed, stop_after, &raw), "run");
    } else {
      check(de_run(config.get(), seed, &raw), "run");
    }
    ReportPtr report(raw);
    print_report(report.get(), seed, true);
    const std::string tag = "s" + std::to_string(seed);
    const std::size_t n = opt.seeds.size();
    if (!opt.out.empty())
      check(de_report_export(report.get(), 0, tagged_path(opt.out, tag, n).c_str(), opt.timing), "export");
    if (!save_state.empty())
      check(de_report_save_state(report.get(), 0, tagged_path(save_state, tag, n).c_str()), "save state");
    if (!save_ledger.empty())
      check(de_report_save_ledger(report.get(), 0, tagged_path(save_ledger, tag, n).c_str()), "save ledger");
    std::fprintf(stderr, "seed %llu: %.2f s\n", static_cast<unsigned long long>(seed),
                 de_report_wall_time(report.get(), 0));
  }
  return 0;
}

int cmd_sweep(const CommonOptions& opt, const std::vector<double>& etas) {
  ConfigPtr config = opt.build();
  print_header();
  for (std::uint64_t seed : opt.seeds) {
    de_report* raw = nullptr;
    check(de_sweep_eta(config.get(), etas.data(), etas.size(), seed, &raw), "sweep-eta");
    ReportPtr report(raw);
    print_report(report.get(), seed, false);
    if (!opt.out.empty())
      check(de_report_export_all(report.get(), tagged_path(opt.out, "s" + std::to_string(seed), opt.seeds.size()).c_str(),
                                 opt.timing),
            "export");
  }
  return 0;
}

int cmd_compare(const CommonOptions& opt, const std::vector<std::string>& methods) {
  ConfigPtr config = opt.build();
  std::vector<const char*> names;
  for (const std::string& m : methods) names.push_back(m.c_str());
  print_header();
  for (std::uint64_t seed : opt.seeds) {
    de_comparison* raw = nullptr;
    check(de_compare(config.get(), names.data(), names.size(), seed, &raw), "compare");
    std::unique_ptr<de_comparison, ComparisonDeleter> cmp(raw);
    for (std::size_t i = 0; i < de_comparison_count(raw); ++i) {
      de_row row{};
      check(de_comparison_row(raw, i, &row), "compare row");
      print_row(std::string(de_comparison_label(raw, i)) + "/s" + std::to_string(seed), row);
    }
    if (!opt.out.empty())
      check(de_comparison_export(raw, tagged_path(opt.out, "s" + std::to_string(seed), opt.seeds.size()).c_str()),
            "export");
  }
  return 0;
}

int cmd_replay(const std::string& path, bool per_edit) {
  de_ledger* raw = nullptr;
  check(de_ledger_load(path.c_str(), &raw), "load ledger");
  std::unique_ptr<de_ledger, LedgerDeleter> ledger(raw);
  if (per_edit) {
    std::printf("%6s %14s %14s %12s %12s\n", "edit", "noise", "expansion", "dev_lhs", "dev_rhs");
    for (std::size_t e = 0; e < de_ledger_size(raw); ++e) {
      double direct = 0, expansion = 0, lhs = 0, rhs = 0;
      check(de_ledger_noise(raw, e, &direct, &expansion), "noise");
      check(de_ledger_deviation(raw, e, &lhs, &rhs), "deviation");
      std::printf("%6zu %14.6g %14.6g %12.6g %12.6g\n", e + 1, direct, expansion, lhs, rhs);
    }
  }
  de_noise_summary s{};
  check(de_ledger_summary(raw, &s), "summary");
  std::printf("edits                  %zu\n", s.n_edits);
  std::printf("constrained edits      %d\n", s.constrained_edits);
  std::printf("noise_E                %.10g\n", s.average_noise);
  std::printf("mean cross activation  %.10g\n", s.mean_cross_activation);
  std::printf("influence overlap      mean %.6f  max %.6f  (zero-norm excluded: %d)\n", s.overlap_mean,
              s.overlap_max, s.overlap_zero_norm);
  std::printf("noise identity gap     %.3g (relative, max over edits)\n", s.max_identity_gap);
  std::printf("deviation violations   %d\n", s.bound_violations);
  std::printf("last-edit split resid  %.3g\n", s.last_split_residual);
  return 0;
}

int cmd_universe(const CommonOptions& opt, const std::string& path) {
  ConfigPtr config = opt.build();
  for (std::uint64_t seed : opt.seeds) {
    de_universe* raw = nullptr;
    check(de_universe_generate(config.get(), seed, &raw), "generate");
    std::unique_ptr<de_universe, UniverseDeleter> u(raw);
    const std::string target = tagged_path(path, "s" + std::to_string(seed), opt.seeds.size());
    check(de_universe_save(raw, target.c_str()), "save universe");
    std::printf("wrote %s\n", target.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential knowledge-editing engine and noise laboratory"};
  app.require_subcommand(1);

  CommonOptions run_opt, sweep_opt, cmp_opt, uni_opt;
  std::string resume_state, resume_ledger, save_state, save_ledger;
  int stop_after = 0;
  auto* run = app.add_subcommand("run", "run one method over a sequence of edits");
  run_opt.attach(run, true);
  run->add_option("--resume", resume_state, "resume from a state checkpoint");
  run->add_option("--resume-ledger", resume_ledger, "ledger saved with the checkpoint");
  run->add_option("--save-state", save_state, "write the final editor state");
  run->add_option("--save-ledger", save_ledger, "write the edit ledger (JSON lines)");
  run->add_option("--stop-after", stop_after, "stop after this many edits");

  std::vector<double> etas{0.5, 1.5, 3.0};
  auto* sweep = app.add_subcommand("sweep-eta", "one run per eta on a shared universe");
  sweep_opt.attach(sweep, true);
  sweep->add_option("--etas", etas, "comma-separated eta values")->delimiter(',');

  std::vector<std::string> methods{"memit", "alphaedit", "deltaedit"};
  auto* cmp = app.add_subcommand("compare", "terminal metrics of several methods");
  cmp_opt.attach(cmp, false);
  cmp->add_option("--methods", methods, "e.g. memit,alphaedit,deltaedit:1e9")->delimiter(',');

  std::string ledger_path;
  bool per_edit = false;
  auto* replay = app.add_subcommand("replay", "recompute noise metrics from a saved ledger");
  replay->add_option("--ledger", ledger_path, "ledger file")->required();
  replay->add_flag("--per-edit", per_edit, "print every edit");

  std::string universe_path;
  auto* uni = app.add_subcommand("universe", "generate and save a synthetic universe");
  uni_opt.attach(uni, false);
  uni->add_option("--path", universe_path, "output JSON")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (de_api_version() != DE_API_VERSION) throw CliFailure("library API version mismatch");
    if (*run) {
      if (!resume_state.empty() && resume_ledger.empty())
        throw CliFailure("--resume needs --resume-ledger");
      return cmd_run(run_opt, resume_state, resume_ledger, save_state, save_ledger, stop_after);
    }
    if (*sweep) return cmd_sweep(sweep_opt, etas);
    if (*cmp) return cmd_compare(cmp_opt, methods);
    if (*replay) return cmd_replay(ledger_path, per_edit);
    if (*uni) return cmd_universe(uni_opt, universe_path);
  } catch (const CliFailure& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
