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

#include "deltaedit/serialize.hpp"

#include <json.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace deltaedit {
namespace {

using json = nlohmann::json;

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

// `cols` is needed for matrices with zero rows.
Matrix matrix_from(const json& j, Eigen::Index cols = -1) {
  if (!j.is_array()) fail(ErrorCode::kSchema, "expected a matrix (list of rows)");
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (rows > 0) cols = static_cast<Eigen::Index>(j.front().size());
  Matrix m(rows, std::max<Eigen::Index>(cols, 0));
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != m.cols())
      fail(ErrorCode::kSchema, "ragged matrix rows");
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

Vector vector_from(const json& j) {
  if (!j.is_array()) fail(ErrorCode::kSchema, "expected a vector");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

void check_header(const json& j, const char* kind) {
  if (!j.is_object() || !j.contains("schema_version"))
    fail(ErrorCode::kSchema, std::string("missing schema_version in ") + kind + " document");
  const int version = j.at("schema_version").get<int>();
  if (version != kSchemaVersion)
    fail(ErrorCode::kSchema, std::string(kind) + " schema_version " + std::to_string(version) +
                                 " is not supported (expected " + std::to_string(kSchemaVersion) + ")");
  if (j.contains("kind") && j.at("kind").get<std::string>() != kind)
    fail(ErrorCode::kSchema, "expected a " + std::string(kind) + " document, got " +
                                 j.at("kind").get<std::string>());
}

json header(const char* kind) { return json{{"schema_version", kSchemaVersion}, {"kind", kind}}; }

json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::kSchema, std::string("malformed JSON: ") + e.what());
  }
}

// Wraps lookups so that missing keys and type errors surface as schema errors.
template <typename F>
auto guarded(const char* what, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const json::exception& e) {
    fail(ErrorCode::kSchema, std::string(what) + ": " + e.what());
  }
}

std::string fmt(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

json universe_config_json(const UniverseConfig& c) {
  return {{"d_in", c.d_in},
          {"d_out", c.d_out},
          {"vocab_size", c.vocab_size},
          {"n_facts", c.n_facts},
          {"n_pool", c.n_pool},
          {"rho", c.rho},
          {"seed", c.seed},
          {"n_rephrase", c.n_rephrase},
          {"cos_min", c.cos_min},
          {"rephrase_noise", c.rephrase_noise},
          {"mean_strength", c.mean_strength},
          {"key_noise", c.key_noise},
          {"target_zipf", c.target_zipf},
          {"ridge", c.ridge},
          {"logit_scale", c.logit_scale}};
}

UniverseConfig universe_config_from(const json& j) {
  UniverseConfig c;
  c.d_in = j.at("d_in").get<int>();
  c.d_out = j.at("d_out").get<int>();
  c.vocab_size = j.at("vocab_size").get<int>();
  c.n_facts = j.at("n_facts").get<int>();
  c.n_pool = j.at("n_pool").get<int>();
  c.rho = j.at("rho").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.n_rephrase = j.at("n_rephrase").get<int>();
  c.cos_min = j.at("cos_min").get<double>();
  c.rephrase_noise = j.at("rephrase_noise").get<double>();
  c.mean_strength = j.at("mean_strength").get<double>();
  c.key_noise = j.at("key_noise").get<double>();
  c.target_zipf = j.at("target_zipf").get<double>();
  c.ridge = j.at("ridge").get<double>();
  c.logit_scale = j.at("logit_scale").get<double>();
  return c;
}

json edit_config_json(const EditConfig& c) {
  return {{"method", method_name(c.method)},
          {"eta", c.eta},
          {"delta_coef", c.delta_coef},
          {"train_steps", c.train_steps},
          {"learn_rate", c.learn_rate},
          {"warmup_edits", c.warmup_edits},
          {"rank_cap_ratio", c.rank_cap_ratio},
          {"eig_zero_rel", c.eig_zero_rel},
          {"outlier_kappa", c.outlier_kappa},
          {"stats_on_constrained", c.stats_on_constrained},
          {"stop_margin", c.stop_margin}};
}

EditConfig edit_config_from(const json& j) {
  EditConfig c;
  c.method = parse_method(j.at("method").get<std::string>());
  c.eta = j.at("eta").get<double>();
  c.delta_coef = j.at("delta_coef").get<double>();
  c.train_steps = j.at("train_steps").get<int>();
  c.learn_rate = j.at("learn_rate").get<double>();
  c.warmup_edits = j.at("warmup_edits").get<int>();
  c.rank_cap_ratio = j.at("rank_cap_ratio").get<double>();
  c.eig_zero_rel = j.at("eig_zero_rel").get<double>();
  c.outlier_kappa = j.at("outlier_kappa").get<double>();
  c.stats_on_constrained = j.at("stats_on_constrained").get<bool>();
  c.stop_margin = j.at("stop_margin").get<double>();
  return c;
}

json run_config_json(const RunConfig& c) {
  return {{"universe", universe_config_json(c.universe)},
          {"edit", edit_config_json(c.edit)},
          {"n_edits", c.n_edits},
          {"eval_every", c.eval_every},
          {"seeds", c.seeds},
          {"output_path", c.output_path},
          {"shuffle", c.shuffle},
          {"max_unrelated", c.max_unrelated}};
}

RunConfig run_config_from(const json& j) {
  RunConfig c;
  c.universe = universe_config_from(j.at("universe"));
  c.edit = edit_config_from(j.at("edit"));
  c.n_edits = j.at("n_edits").get<int>();
  c.eval_every = j.at("eval_every").get<int>();
  c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  c.output_path = j.at("output_path").get<std::string>();
  c.shuffle = j.at("shuffle").get<bool>();
  c.max_unrelated = j.at("max_unrelated").get<int>();
  return c;
}

json metrics_json(const MetricReport& m) {
  return {{"efficacy_top", m.efficacy_top},
          {"generalization_top", m.generalization_top},
          {"specificity_top", m.specificity_top},
          {"efficacy_larger", m.efficacy_larger},
          {"generalization_larger", m.generalization_larger},
          {"specificity_larger", m.specificity_larger},
          {"n_evaluated", m.n_evaluated},
          {"n_rephrase", m.n_rephrase},
          {"n_unrelated", m.n_unrelated}};
}

MetricReport metrics_from(const json& j) {
  MetricReport m;
  m.efficacy_top = j.at("efficacy_top").get<double>();
  m.generalization_top = j.at("generalization_top").get<double>();
  m.specificity_top = j.at("specificity_top").get<double>();
  m.efficacy_larger = j.at("efficacy_larger").get<double>();
  m.generalization_larger = j.at("generalization_larger").get<double>();
  m.specificity_larger = j.at("specificity_larger").get<double>();
  m.n_evaluated = j.at("n_evaluated").get<int>();
  m.n_rephrase = j.at("n_rephrase").get<int>();
  m.n_unrelated = j.at("n_unrelated").get<int>();
  return m;
}

json row_json(const ReportRow& r) {
  return {{"edit_index", r.edit_index},   {"metrics", metrics_json(r.metrics)},
          {"noise_E", r.noise_e},         {"mean_cross_activation", r.k_beta},
          {"mean_influence_overlap", r.overlap}, {"constraint_activations", r.activations},
          {"mean_shift", r.mean_shift}};
}

ReportRow row_from(const json& j) {
  ReportRow r;
  r.edit_index = j.at("edit_index").get<int>();
  r.metrics = metrics_from(j.at("metrics"));
  r.noise_e = j.at("noise_E").get<double>();
  r.k_beta = j.at("mean_cross_activation").get<double>();
  r.overlap = j.at("mean_influence_overlap").get<double>();
  r.activations = j.at("constraint_activations").get<int>();
  r.mean_shift = j.at("mean_shift").get<double>();
  return r;
}

json report_json(const RunReport& report, bool include_timing) {
  json j = header("report");
  j["label"] = report.label;
  j["seed"] = report.seed;
  j["config"] = run_config_json(report.config);
  json rows = json::array();
  for (const ReportRow& r : report.rows) rows.push_back(row_json(r));
  j["rows"] = std::move(rows);
  if (include_timing) j["wall_time"] = report.wall_time_seconds;
  return j;
}

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) fail(ErrorCode::kIo, "error reading '" + path + "'");
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  const std::filesystem::path parent = std::filesystem::path(path).parent_path();
  std::error_code ec;
  if (!parent.empty()) std::filesystem::create_directories(parent, ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) fail(ErrorCode::kIo, "error writing '" + path + "'");
}

std::string universe_to_string(const FactUniverse& u) {
  json j = header("universe");
  j["seed"] = u.seed;
  j["dims"] = {{"d_in", u.d_in}, {"d_out", u.d_out}, {"vocab_size", u.vocab_size()}};
  j["embed"] = matrix_json(u.embed);
  json facts = json::array();
  for (const Fact& f : u.facts) {
    json reph = json::array();
    for (const Vector& r : f.rephrase_keys) reph.push_back(vector_json(r));
    facts.push_back({{"key", vector_json(f.key)},
                     {"rephrase_keys", std::move(reph)},
                     {"original_token", f.original_token},
                     {"target_token", f.target_token}});
  }
  j["facts"] = std::move(facts);
  j["unrelated_pool"] = matrix_json(u.unrelated_pool);
  j["initial_W"] = matrix_json(u.initial_w);
  return j.dump() + "\n";
}

FactUniverse universe_from_string(const std::string& text) {
  const json j = parse(text);
  check_header(j, "universe");
  return guarded("universe", [&] {
    FactUniverse u;
    u.seed = j.at("seed").get<std::uint64_t>();
    u.d_in = j.at("dims").at("d_in").get<int>();
    u.d_out = j.at("dims").at("d_out").get<int>();
    u.embed = matrix_from(j.at("embed"), u.d_out);
    for (const json& f : j.at("facts")) {
      Fact fact;
      fact.key = vector_from(f.at("key"));
      for (const json& r : f.at("rephrase_keys")) fact.rephrase_keys.push_back(vector_from(r));
      fact.original_token = f.at("original_token").get<int>();
      fact.target_token = f.at("target_token").get<int>();
      if (fact.key.size() != u.d_in) fail(ErrorCode::kSchema, "fact key has the wrong dimension");
      if (fact.original_token < 0 || fact.original_token >= u.embed.rows() || fact.target_token < 0 ||
          fact.target_token >= u.embed.rows())
        fail(ErrorCode::kSchema, "fact token out of vocabulary range");
      u.facts.push_back(std::move(fact));
    }
    u.unrelated_pool = matrix_from(j.at("unrelated_pool"), u.d_in);
    u.initial_w = matrix_from(j.at("initial_W"), u.d_in);
    if (u.embed.cols() != u.d_out || u.unrelated_pool.cols() != u.d_in || u.initial_w.rows() != u.d_out ||
        u.initial_w.cols() != u.d_in)
      fail(ErrorCode::kSchema, "universe matrices do not match the declared dims");
    return u;
  });
}

void save_universe(const FactUniverse& u, const std::string& path) {
  write_text_file(path, universe_to_string(u));
}

FactUniverse load_universe(const std::string& path) { return universe_from_string(read_text_file(path)); }

std::string state_to_string(const EditorState& s, const EditConfig& config) {
  json j = header("state");
  j["W"] = matrix_json(s.w);
  j["delta_history"] = matrix_json(s.delta_history);
  j["kp_gram"] = matrix_json(s.kp_gram);
  j["null_proj"] = matrix_json(s.null_proj);
  j["c0"] = matrix_json(s.c0);
  j["m"] = s.mean_stat;
  j["v"] = s.var_stat;
  j["edit_count"] = s.edit_count;
  j["activations"] = s.constraint_activations;
  j["config"] = edit_config_json(config);
  return j.dump() + "\n";
}

std::pair<EditorState, EditConfig> state_from_string(const std::string& text) {
  const json j = parse(text);
  check_header(j, "state");
  return guarded("state", [&] {
    EditorState s;
    s.w = matrix_from(j.at("W"));
    const Eigen::Index d_in = s.w.cols();
    s.delta_history = matrix_from(j.at("delta_history"), d_in);
    s.kp_gram = matrix_from(j.at("kp_gram"), d_in);
    s.null_proj = matrix_from(j.at("null_proj"), d_in);
    s.c0 = matrix_from(j.at("c0"), d_in);
    s.mean_stat = j.at("m").get<double>();
    s.var_stat = j.at("v").get<double>();
    s.edit_count = j.at("edit_count").get<int>();
    s.constraint_activations = j.at("activations").get<int>();
    if (s.delta_history.rows() != s.w.rows() || s.delta_history.cols() != d_in ||
        s.kp_gram.rows() != d_in || s.null_proj.rows() != d_in || s.c0.rows() != d_in)
      fail(ErrorCode::kSchema, "state matrices have inconsistent shapes");
    EditConfig c = edit_config_from(j.at("config"));
    c.validate();
    return std::make_pair(std::move(s), c);
  });
}

void save_state(const EditorState& s, const EditConfig& config, const std::string& path) {
  write_text_file(path, state_to_string(s, config));
}

std::pair<EditorState, EditConfig> load_state(const std::string& path) {
  return state_from_string(read_text_file(path));
}

std::string ledger_to_string(const EditLedger& ledger) {
  json head = header("ledger");
  head["initial_W"] = matrix_json(ledger.initial_w());
  std::string out = head.dump() + "\n";
  for (std::size_t i = 0; i < ledger.size(); ++i) {
    const LedgerEntry& e = ledger.at(i);
    const json rec = {{"index", i},
                      {"alpha", vector_json(e.alpha)},
                      {"beta", vector_json(e.beta)},
                      {"key", vector_json(e.key)},
                      {"constrained", e.constrained}};
    out += rec.dump() + "\n";
  }
  return out;
}

EditLedger ledger_from_string(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::kSchema, "empty ledger file");
  const json head = parse(line);
  check_header(head, "ledger");
  EditLedger ledger(guarded("ledger header", [&] { return matrix_from(head.at("initial_W")); }));
  std::size_t expected = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json rec = parse(line);
    guarded("ledger record", [&] {
      if (rec.at("index").get<std::size_t>() != expected)
        fail(ErrorCode::kSchema, "ledger records out of order at index " + std::to_string(expected));
      ledger.append({vector_from(rec.at("alpha")), vector_from(rec.at("beta")), vector_from(rec.at("key")),
                     rec.at("constrained").get<bool>()});
      return 0;
    });
    ++expected;
  }
  return ledger;
}

void save_ledger(const EditLedger& ledger, const std::string& path) {
  write_text_file(path, ledger_to_string(ledger));
}

EditLedger load_ledger(const std::string& path) { return ledger_from_string(read_text_file(path)); }

std::string run_config_to_string(const RunConfig& config) {
  json j = header("run_config");
  j["config"] = run_config_json(config);
  return j.dump(2) + "\n";
}

RunConfig run_config_from_string(const std::string& text) {
  const json j = parse(text);
  check_header(j, "run_config");
  return guarded("run_config", [&] { return run_config_from(j.at("config")); });
}

std::string report_to_string(const RunReport& report, bool include_timing) {
  return report_json(report, include_timing).dump(2) + "\n";
}

std::string reports_to_string(const std::vector<RunReport>& reports, bool include_timing) {
  json j = header("report_set");
  json list = json::array();
  for (const RunReport& r : reports) list.push_back(report_json(r, include_timing));
  j["reports"] = std::move(list);
  return j.dump(2) + "\n";
}

RunReport report_from_string(const std::string& text) {
  const json j = parse(text);
  check_header(j, "report");
  return guarded("report", [&] {
    RunReport r;
    r.label = j.at("label").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.config = run_config_from(j.at("config"));
    for (const json& row : j.at("rows")) r.rows.push_back(row_from(row));
    if (j.contains("wall_time")) r.wall_time_seconds = j.at("wall_time").get<double>();
    return r;
  });
}

std::string report_csv(const RunReport& report) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const ReportRow& r : report.rows) {
    const MetricReport& m = r.metrics;
    out += std::to_string(r.edit_index);
    for (double x : {m.efficacy_top, m.generalization_top, m.specificity_top, m.efficacy_larger,
                     m.generalization_larger, m.specificity_larger, r.noise_e, r.k_beta, r.overlap})
      out += "," + fmt(x);
    out += "," + std::to_string(r.activations) + "," + fmt(r.mean_shift) + "\n";
  }
  return out;
}

std::string csv_path_for(const std::string& json_path) {
  const auto slash = json_path.find_last_of('/');
  const auto dot = json_path.find_last_of('.');
  if (dot != std::string::npos && (slash == std::string::npos || dot > slash))
    return json_path.substr(0, dot) + ".csv";
  return json_path + ".csv";
}

void export_report(const RunReport& report, const std::string& path, bool include_timing) {
  write_text_file(path, report_to_string(report, include_timing));
  write_text_file(csv_path_for(path), report_csv(report));
}

std::string comparison_to_string(const std::vector<ComparisonRow>& rows) {
  json j = header("comparison");
  json list = json::array();
  for (const ComparisonRow& r : rows) {
    json row = row_json(r.terminal);
    row["label"] = r.label;
    row["seed"] = r.seed;
    list.push_back(std::move(row));
  }
  j["rows"] = std::move(list);
  return j.dump(2) + "\n";
}

}  // namespace deltaedit
