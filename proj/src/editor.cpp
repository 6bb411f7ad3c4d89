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

#include "deltaedit/editor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <tuple>

namespace deltaedit {
namespace {

constexpr double kMinRcond = 1e-12;
constexpr double kMinRcondRegularized = 1e-15;
constexpr double kSolveResidualRel = 1e-8;
constexpr double kSymmetryRel = 1e-10;

void symmetrize(Matrix& m) {
  m.triangularView<Eigen::StrictlyUpper>() = m.transpose();
}

double loss_and_margin(const Vector& z, int target, bool* reached, double stop_margin) {
  const double top = z.maxCoeff();
  const double lse = top + std::log((z.array() - top).exp().sum());
  double runner_up = -std::numeric_limits<double>::infinity();
  int best = 0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    if (z[i] > z[best]) best = static_cast<int>(i);
    if (i != target) runner_up = std::max(runner_up, z[i]);
  }
  *reached = best == target && z[target] - runner_up >= stop_margin;
  return lse - z[target];
}

}  // namespace

const char* method_name(Method method) {
  switch (method) {
    case Method::kMemit: return "memit";
    case Method::kAlphaEdit: return "alphaedit";
    case Method::kDeltaEdit: return "deltaedit";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  if (name == "memit") return Method::kMemit;
  if (name == "alphaedit") return Method::kAlphaEdit;
  if (name == "deltaedit") return Method::kDeltaEdit;
  fail(ErrorCode::kInvalidArgument, "unknown method '" + name + "'");
}

void EditConfig::validate() const {
  if (!(delta_coef >= 0.0 && delta_coef <= 1.0))
    fail(ErrorCode::kInvalidArgument, "delta_coef must lie in [0, 1]");
  if (!(rank_cap_ratio > 0.0 && rank_cap_ratio <= 1.0))
    fail(ErrorCode::kInvalidArgument, "rank_cap_ratio must lie in (0, 1]");
  if (warmup_edits < 0) fail(ErrorCode::kInvalidArgument, "warmup_edits must be >= 0");
  if (train_steps < 1) fail(ErrorCode::kInvalidArgument, "train_steps must be >= 1");
  if (!(learn_rate > 0.0) || !std::isfinite(learn_rate))
    fail(ErrorCode::kInvalidArgument, "learn_rate must be positive and finite");
  if (std::isnan(eta) || eta < 0.0) fail(ErrorCode::kInvalidArgument, "eta must be >= 0");
  if (!(eig_zero_rel > 0.0 && eig_zero_rel < 1.0))
    fail(ErrorCode::kInvalidArgument, "eig_zero_rel must lie in (0, 1)");
  if (std::isnan(outlier_kappa) || outlier_kappa < 0.0)
    fail(ErrorCode::kInvalidArgument, "outlier_kappa must be >= 0");
  if (std::isnan(stop_margin)) fail(ErrorCode::kInvalidArgument, "stop_margin must be a number");
}

EditorState EditorState::fresh(const FactUniverse& universe, const EditConfig& config) {
  config.validate();
  EditorState s;
  s.w = universe.initial_w;
  s.delta_history = Matrix::Zero(universe.d_out, universe.d_in);
  s.kp_gram = Matrix::Zero(universe.d_in, universe.d_in);
  s.c0 = estimate_c0(universe.unrelated_pool);
  s.null_proj = compute_null_projection(s.c0, config.eig_zero_rel);
  return s;
}

TrainResult train_residual(const Matrix& w, const Vector& key, int target, const Matrix& embed,
                           const EditConfig& config, const Matrix* projector) {
  if (config.train_steps < 1) fail(ErrorCode::kInvalidArgument, "train_steps must be >= 1");
  if (key.size() != w.cols() || embed.cols() != w.rows())
    fail(ErrorCode::kDimensionMismatch, "train_residual: key, W and embed disagree");
  if (target < 0 || target >= embed.rows())
    fail(ErrorCode::kOutOfRange, "train_residual: target token out of range");
  if (projector && (projector->rows() != w.rows() || projector->cols() != w.rows()))
    fail(ErrorCode::kDimensionMismatch, "train_residual: projector has the wrong shape");

  const Vector h0 = w * key;
  TrainResult out;
  out.residual = Vector::Zero(w.rows());
  for (int step = 0;; ++step) {
    const Vector z = embed * (h0 + out.residual);
    bool reached = false;
    const double loss = loss_and_margin(z, target, &reached, config.stop_margin);
    if (!std::isfinite(loss))
      fail(ErrorCode::kNumerical,
           "non-finite loss at step " + std::to_string(step) + "; learn_rate is likely too large");
    out.losses.push_back(loss);
    if (reached || step == config.train_steps) break;

    // d loss / d R = embed^T (softmax(z) - e_target)
    Vector p = softmax(z);
    p[target] -= 1.0;
    out.residual -= config.learn_rate * (embed.transpose() * p);
    if (projector) out.residual = (*projector * out.residual).eval();
    out.steps = step + 1;
  }
  return out;
}

RankOne solve_memit(const Vector& residual, const Vector& key, const Matrix& c0) {
  const Eigen::Index d = key.size();
  if (c0.rows() != d || c0.cols() != d)
    fail(ErrorCode::kDimensionMismatch, "solve_memit: c0 must be d_in x d_in");
  Matrix system = c0 + key * key.transpose();
  Eigen::LLT<Matrix> llt(system);
  if (llt.info() != Eigen::Success || !(llt.rcond() >= kMinRcond)) {
    const double lambda = 1e-8 * c0.trace() / static_cast<double>(d);
    system.diagonal().array() += lambda;
    llt.compute(system);
    if (!(lambda > 0.0) || llt.info() != Eigen::Success || !(llt.rcond() >= kMinRcondRegularized))
      fail(ErrorCode::kNumerical, "solve_memit: system is singular even after regularization");
  }
  RankOne out;
  out.beta = llt.solve(key);
  out.alpha = residual;
  return out;
}

Matrix compute_null_projection(const Matrix& c0, double eig_zero_rel) {
  if (c0.rows() != c0.cols() || c0.rows() == 0)
    fail(ErrorCode::kDimensionMismatch, "compute_null_projection: c0 must be square");
  if (!c0.allFinite()) fail(ErrorCode::kNumerical, "compute_null_projection: non-finite c0");
  if ((c0 - c0.transpose()).norm() > kSymmetryRel * std::max(1.0, c0.norm()))
    fail(ErrorCode::kInvalidArgument, "compute_null_projection: c0 is not symmetric");

  Eigen::SelfAdjointEigenSolver<Matrix> eig(c0);
  if (eig.info() != Eigen::Success)
    fail(ErrorCode::kNumerical, "compute_null_projection: eigendecomposition failed");
  const Vector& values = eig.eigenvalues();
  const double cutoff = eig_zero_rel * std::max(values.maxCoeff(), 0.0);
  Eigen::Index n_null = 0;
  // eigenvalues come out ascending, so the null block is a prefix
  while (n_null < values.size() && values[n_null] <= cutoff) ++n_null;
  const auto basis = eig.eigenvectors().leftCols(n_null);
  Matrix proj = basis * basis.transpose();
  symmetrize(proj);
  return proj;
}

RankOne solve_alpha_beta(const Vector& residual, const Vector& key, const EditorState& state,
                         const EditConfig& config) {
  if (config.method == Method::kMemit) return solve_memit(residual, key, state.c0);

  const Matrix& proj = state.null_proj;
  const Eigen::Index d = key.size();
  if (proj.rows() != d || state.kp_gram.rows() != d)
    fail(ErrorCode::kDimensionMismatch, "solve_alpha_beta: state and key disagree");
  const Vector pk = proj * key;
  Matrix system = proj * state.kp_gram + pk * key.transpose();
  system.diagonal().array() += 1.0;
  Eigen::PartialPivLU<Matrix> lu(system);
  RankOne out;
  out.beta = lu.solve(pk);
  const double res = (system * out.beta - pk).norm();
  if (!out.beta.allFinite() || res > kSolveResidualRel * pk.norm())
    fail(ErrorCode::kNumerical, "solve_alpha_beta: linear solve failed (residual " +
                                    std::to_string(res) + ")");
  out.alpha = residual;
  return out;
}

HistoryProjector build_history_projector(const Matrix& delta_history, double rank_cap_ratio,
                                         double eig_zero_rel) {
  if (!delta_history.allFinite())
    fail(ErrorCode::kNumerical, "build_history_projector: non-finite history");
  const Eigen::Index d_out = delta_history.rows();
  HistoryProjector out;
  out.projector = Matrix::Identity(d_out, d_out);
  out.basis.resize(d_out, 0);

  Matrix gram = delta_history * delta_history.transpose();
  symmetrize(gram);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  if (eig.info() != Eigen::Success)
    fail(ErrorCode::kNumerical, "build_history_projector: eigendecomposition failed");
  const Vector& values = eig.eigenvalues();
  const double top = values.size() ? values.maxCoeff() : 0.0;
  if (!(top > 0.0)) return out;

  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = values.size() - 1; i >= 0; --i)
    if (values[i] > eig_zero_rel * top) keep.push_back(i);
  const auto cap = static_cast<std::size_t>(std::floor(rank_cap_ratio * static_cast<double>(d_out)));
  if (keep.size() > cap) keep.resize(cap);  // keep is sorted largest first

  out.retained = static_cast<int>(keep.size());
  out.basis.resize(d_out, out.retained);
  for (int c = 0; c < out.retained; ++c) out.basis.col(c) = eig.eigenvectors().col(keep[c]);
  out.projector.noalias() -= out.basis * out.basis.transpose();
  symmetrize(out.projector);
  return out;
}

std::pair<double, double> update_threshold_stats(double mean, double var, double value,
                                                 double delta_coef) {
  const double m = delta_coef * mean + (1.0 - delta_coef) * value;
  const double dev = value - m;
  const double v = delta_coef * var + (1.0 - delta_coef) * dev * dev;
  return {m, v};
}

bool exceeds_threshold(double value, double mean, double var, double eta) {
  return value > mean + eta * std::sqrt(var);
}

ConstraintDecision should_constrain(const EditorState& state, const Vector& key,
                                    const EditConfig& config) {
  ConstraintDecision out;
  out.excitation = (state.delta_history * key).squaredNorm();
  out.constrain = config.method == Method::kDeltaEdit && state.edit_count >= config.warmup_edits &&
                  exceeds_threshold(out.excitation, state.mean_stat, state.var_stat, config.eta);
  return out;
}

EditOutcome apply_edit(EditorState& state, const Fact& fact, const FactUniverse& universe,
                       const EditConfig& config) {
  config.validate();
  if (fact.key.size() != state.w.cols())
    fail(ErrorCode::kDimensionMismatch, "apply_edit: key dimension does not match W");

  const ConstraintDecision decision = should_constrain(state, fact.key, config);
  EditOutcome out;
  out.constrained = decision.constrain;
  out.history_excitation = decision.excitation;

  HistoryProjector history;
  if (out.constrained) {
    history = build_history_projector(state.delta_history, config.rank_cap_ratio,
                                      config.eig_zero_rel);
    out.retained_rank = history.retained;
  }

  double mean = state.mean_stat;
  double var = state.var_stat;
  if (!out.constrained || config.stats_on_constrained) {
    const double x = decision.excitation;
    const bool warm = state.edit_count < config.warmup_edits;
    const bool in_range = warm || x <= mean + config.outlier_kappa * std::sqrt(var);
    if (std::isfinite(x) && in_range) std::tie(mean, var) = update_threshold_stats(mean, var, x, config.delta_coef);
  }

  TrainResult trained = train_residual(state.w, fact.key, fact.target_token, universe.embed, config,
                                       out.constrained ? &history.projector : nullptr);
  out.residual = std::move(trained.residual);
  out.train_steps_used = trained.steps;

  RankOne update = solve_alpha_beta(out.residual, fact.key, state, config);
  out.alpha = std::move(update.alpha);
  out.beta = std::move(update.beta);
  if (!out.alpha.allFinite() || !out.beta.allFinite())
    fail(ErrorCode::kNumerical, "apply_edit: non-finite update");

  Matrix next_w = state.w;
  next_w.noalias() += out.alpha * out.beta.transpose();
  if (!next_w.allFinite()) fail(ErrorCode::kNumerical, "apply_edit: W became non-finite");

  // commit; nothing below can throw
  state.w.swap(next_w);
  state.delta_history.noalias() += out.alpha * out.beta.transpose();
  state.kp_gram.noalias() += fact.key * fact.key.transpose();
  state.mean_stat = mean;
  state.var_stat = var;
  ++state.edit_count;
  if (out.constrained) ++state.constraint_activations;
  return out;
}

}  // namespace deltaedit
