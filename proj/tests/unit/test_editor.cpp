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
#include "deltaedit/noise.hpp"

#include "../oracles.hpp"

#include <limits>
#include <gtest/gtest.h>

#include <cmath>

namespace de = deltaedit;

namespace {

de::FactUniverse small_universe(std::uint64_t seed = 0) {
  de::UniverseConfig c;
  c.seed = seed;
  c.d_in = 16;
  c.d_out = 16;
  c.vocab_size = 32;
  c.n_facts = 60;
  c.n_pool = 64;
  return de::generate_universe(c);
}

de::EditConfig config_for(de::Method m) {
  de::EditConfig c;
  c.method = m;
  return c;
}

double projector_defect(const de::Matrix& p) { return (p * p - p).norm(); }
double asymmetry(const de::Matrix& p) { return (p - p.transpose()).norm(); }

}  // namespace

// ---- residual training

TEST(TrainResidual, EarlyStopAtStartReturnsZero) {
  const de::Matrix embed = de::Matrix::Identity(4, 4);
  de::Matrix w = de::Matrix::Zero(4, 4);
  w(2, 0) = 5.0;
  de::Vector k = de::Vector::Zero(4);
  k[0] = 1.0;
  const de::TrainResult r = de::train_residual(w, k, 2, embed, de::EditConfig{});
  EXPECT_EQ(r.steps, 0);
  EXPECT_EQ(r.residual.norm(), 0.0);
  ASSERT_EQ(r.losses.size(), 1u);
}

TEST(TrainResidual, FlipsPredictionInSmallIdentityModel) {
  const de::Matrix embed = de::Matrix::Identity(4, 4);
  de::Matrix w = de::Matrix::Zero(4, 4);
  w(0, 1) = 3.0;
  de::Vector k = de::Vector::Zero(4);
  k[1] = 1.0;
  ASSERT_EQ(de::model_predict(w, k, embed), 0);
  de::EditConfig cfg;
  cfg.train_steps = 200;
  const de::TrainResult r = de::train_residual(w, k, 3, embed, cfg);
  // rank-one fix that maps k onto the learned residual
  const de::Matrix fixed = w + r.residual * k.transpose() / k.squaredNorm();
  EXPECT_EQ(de::model_predict(fixed, k, embed), 3);
  EXPECT_GT(r.steps, 0);
}

TEST(TrainResidual, LossIsNonIncreasing) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    de::Matrix embed = oracle::random_matrix(rng, 8, 8);
    embed.rowwise().normalize();
    const de::Matrix w = oracle::random_matrix(rng, 8, 8);
    const de::Vector k = oracle::random_vector(rng, 8);
    de::EditConfig cfg;
    cfg.train_steps = 100;
    cfg.stop_margin = 1e9;  // never stop early
    const de::TrainResult r = de::train_residual(w, k, trial % 8, embed, cfg);
    ASSERT_EQ(r.losses.size(), 101u);
    for (std::size_t s = 1; s < r.losses.size(); ++s) EXPECT_LE(r.losses[s], r.losses[s - 1] + 1e-12);
  }
}

TEST(TrainResidual, ProjectionKeepsResidualInRange) {
  std::mt19937_64 rng(8);
  de::Matrix embed = oracle::random_matrix(rng, 12, 6);
  embed.rowwise().normalize();
  const de::Matrix w = oracle::random_matrix(rng, 6, 6);
  const de::Vector k = oracle::random_vector(rng, 6);
  de::Vector u = oracle::random_vector(rng, 6);
  u.normalize();
  const de::Matrix p = de::Matrix::Identity(6, 6) - u * u.transpose();
  de::EditConfig cfg;
  cfg.train_steps = 30;
  const de::TrainResult r = de::train_residual(w, k, 5, embed, cfg, &p);
  EXPECT_LE(std::abs(r.residual.dot(u)), 1e-12 * std::max(1.0, r.residual.norm()));
}

TEST(TrainResidual, DivergentRateReportsNumericalError) {
  const de::Matrix embed = 10.0 * de::Matrix::Identity(4, 4);
  const de::Matrix w = de::Matrix::Zero(4, 4);
  de::Vector k = de::Vector::Ones(4);
  de::EditConfig cfg;
  cfg.learn_rate = 1e308;
  cfg.train_steps = 10;
  try {
    de::train_residual(w, k, 1, embed, cfg);
    FAIL() << "expected a numerical error";
  } catch (const de::Error& e) {
    EXPECT_EQ(e.code(), de::ErrorCode::kNumerical);
  }
}

TEST(TrainResidual, RejectsBadInputs) {
  const de::Matrix embed = de::Matrix::Identity(4, 4);
  const de::Matrix w = de::Matrix::Zero(4, 4);
  EXPECT_THROW(de::train_residual(w, de::Vector::Ones(3), 0, embed, de::EditConfig{}), de::Error);
  EXPECT_THROW(de::train_residual(w, de::Vector::Ones(4), 7, embed, de::EditConfig{}), de::Error);
  de::EditConfig cfg;
  cfg.train_steps = 0;
  EXPECT_THROW(de::train_residual(w, de::Vector::Ones(4), 0, embed, cfg), de::Error);
}

// ---- closed-form solvers

TEST(SolveMemit, IdentityCovarianceHalvesBasisKey) {
  de::Vector k = de::Vector::Zero(5);
  k[0] = 1.0;
  const de::RankOne r = de::solve_memit(de::Vector::Ones(3), k, de::Matrix::Identity(5, 5));
  EXPECT_LT((r.beta - k / 2.0).norm(), 1e-15);
  EXPECT_EQ(r.alpha, de::Vector::Ones(3));
}

TEST(SolveMemit, ZeroResidualGivesZeroUpdate) {
  std::mt19937_64 rng(1);
  const de::Matrix pool = oracle::random_matrix(rng, 30, 6);
  const de::RankOne r = de::solve_memit(de::Vector::Zero(4), oracle::random_vector(rng, 6), de::estimate_c0(pool));
  EXPECT_EQ((r.alpha * r.beta.transpose()).norm(), 0.0);
}

TEST(SolveMemit, SatisfiesStationarity) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 2 + trial % 15;
    const de::Matrix c0 = de::estimate_c0(oracle::random_matrix(rng, 3 * d, d));
    const de::Vector k = oracle::random_vector(rng, d);
    const de::Vector res = oracle::random_vector(rng, d);
    const de::RankOne r = de::solve_memit(res, k, c0);
    const de::Matrix delta = r.alpha * r.beta.transpose();
    const de::Matrix grad = (delta * k - res) * k.transpose() + delta * c0;
    EXPECT_LE(grad.norm(), 1e-8 * (res * k.transpose()).norm()) << "d=" << d;
  }
}

TEST(SolveMemit, MatchesDescentMinimizer) {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 5; ++trial) {
    const de::Matrix pool = oracle::random_matrix(rng, 40, 8);
    const de::Matrix c0 = de::estimate_c0(pool);
    const de::Vector k = oracle::random_vector(rng, 8);
    const de::Vector res = oracle::random_vector(rng, 8);
    const de::RankOne r = de::solve_memit(res, k, c0);
    const de::Matrix delta = r.alpha * r.beta.transpose();
    const de::Matrix ref = oracle::memit_by_descent(res, k, c0);
    EXPECT_LE((delta - ref).norm(), 1e-6 * ref.norm());
  }
}

TEST(SolveMemit, RegularizesSingularSystems) {
  std::mt19937_64 rng(2);
  // rank-3 covariance in 8 dimensions: C0 + k k^T stays singular
  const de::Matrix pool = oracle::random_matrix(rng, 20, 3) * oracle::random_matrix(rng, 3, 8);
  const de::Matrix c0 = de::estimate_c0(pool);
  const de::Vector k = oracle::random_vector(rng, 8);
  const de::RankOne r = de::solve_memit(de::Vector::Ones(4), k, c0);
  EXPECT_TRUE(r.beta.allFinite());
  const double lambda = 1e-8 * c0.trace() / 8.0;
  const de::Vector resid = (c0 + k * k.transpose() + lambda * de::Matrix::Identity(8, 8)) * r.beta - k;
  EXPECT_LE(resid.norm(), 1e-6 * k.norm());
}

TEST(SolveMemit, FailsWhenRegularizationCannotHelp) {
  de::Vector k = de::Vector::Zero(4);
  k[0] = 1.0;
  try {
    de::solve_memit(de::Vector::Ones(2), k, de::Matrix::Zero(4, 4));
    FAIL();
  } catch (const de::Error& e) {
    EXPECT_EQ(e.code(), de::ErrorCode::kNumerical);
  }
}

TEST(NullProjection, IdentityHasNoNullSpace) {
  EXPECT_EQ(de::compute_null_projection(de::Matrix::Identity(5, 5), 1e-10).norm(), 0.0);
}

TEST(NullProjection, ExplicitSpectrum) {
  de::Vector diag(4);
  diag << 1, 1, 0, 0;
  const de::Matrix p = de::compute_null_projection(diag.asDiagonal(), 1e-10);
  de::Vector expected(4);
  expected << 0, 0, 1, 1;
  EXPECT_LT((p - de::Matrix(expected.asDiagonal())).norm(), 1e-14);
}

TEST(NullProjection, PoolCovarianceHasHalfDimensionalNullSpace) {
  de::UniverseConfig c;
  c.d_in = 16;
  c.d_out = 16;
  c.vocab_size = 32;
  c.n_facts = 10;
  c.n_pool = 64;
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    c.seed = seed;
    const de::FactUniverse u = de::generate_universe(c);
    const de::Matrix p = de::compute_null_projection(de::estimate_c0(u.unrelated_pool), 1e-10);
    EXPECT_NEAR(p.trace(), 8.0, 1e-6);
    EXPECT_LE(projector_defect(p), 1e-10);
    EXPECT_LE(asymmetry(p), 1e-12);
    for (int r = 0; r < u.unrelated_pool.rows(); ++r) {
      const de::Vector k = u.unrelated_pool.row(r).transpose();
      EXPECT_LE((p * k).norm(), 1e-6 * k.norm());
    }
  }
}

TEST(NullProjection, RejectsAsymmetricInput) {
  de::Matrix m = de::Matrix::Identity(3, 3);
  m(0, 1) = 0.5;
  try {
    de::compute_null_projection(m, 1e-10);
    FAIL();
  } catch (const de::Error& e) {
    EXPECT_EQ(e.code(), de::ErrorCode::kInvalidArgument);
  }
}

TEST(SolveAlphaBeta, ShermanMorrisonSpecialCase) {
  std::mt19937_64 rng(5);
  de::EditorState s;
  s.null_proj = de::Matrix::Identity(6, 6);
  s.kp_gram = de::Matrix::Zero(6, 6);
  const de::Vector k = oracle::random_vector(rng, 6);
  const de::RankOne r = de::solve_alpha_beta(de::Vector::Ones(3), k, s, config_for(de::Method::kAlphaEdit));
  EXPECT_LT((r.beta - k / (1.0 + k.squaredNorm())).norm(), 1e-14);
}

TEST(SolveAlphaBeta, ZeroProjectorGivesZeroBeta) {
  std::mt19937_64 rng(6);
  de::EditorState s;
  s.null_proj = de::Matrix::Zero(6, 6);
  const de::Matrix kp = oracle::random_matrix(rng, 6, 10);
  s.kp_gram = kp * kp.transpose();
  const de::RankOne r =
      de::solve_alpha_beta(de::Vector::Ones(3), oracle::random_vector(rng, 6), s, config_for(de::Method::kDeltaEdit));
  EXPECT_EQ(r.beta.norm(), 0.0);
}

TEST(SolveAlphaBeta, RandomStatePlugsBack) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    const de::Matrix pool = oracle::random_matrix(rng, 40, 8) * oracle::random_matrix(rng, 8, 16);
    de::EditorState s;
    s.c0 = de::estimate_c0(pool);
    s.null_proj = de::compute_null_projection(s.c0, 1e-10);
    const de::Matrix kp = oracle::random_matrix(rng, 16, trial + 1);
    s.kp_gram = kp * kp.transpose();
    const de::Vector k = oracle::random_vector(rng, 16);
    const de::RankOne r = de::solve_alpha_beta(oracle::random_vector(rng, 16), k, s, config_for(de::Method::kAlphaEdit));
    const de::Matrix& p = s.null_proj;
    const de::Vector lhs =
        (p * s.kp_gram + p * k * k.transpose() + de::Matrix::Identity(16, 16)) * r.beta;
    EXPECT_LE((lhs - p * k).norm(), 1e-10);
    // beta lives in the null space, so pool keys never excite it
    for (int n = 0; n < pool.rows(); ++n) EXPECT_LE(std::abs(pool.row(n).dot(r.beta)), 1e-8 * pool.row(n).norm());
  }
}

TEST(SolveAlphaBeta, MemitMethodUsesCovarianceSolve) {
  std::mt19937_64 rng(8);
  de::EditorState s;
  s.c0 = de::estimate_c0(oracle::random_matrix(rng, 30, 6));
  s.null_proj = de::Matrix::Identity(6, 6);
  s.kp_gram = de::Matrix::Zero(6, 6);
  const de::Vector k = oracle::random_vector(rng, 6);
  const de::Vector res = oracle::random_vector(rng, 4);
  const de::RankOne a = de::solve_alpha_beta(res, k, s, config_for(de::Method::kMemit));
  const de::RankOne b = de::solve_memit(res, k, s.c0);
  EXPECT_EQ(a.beta, b.beta);
}

// ---- history projector

TEST(HistoryProjector, EmptyHistoryIsIdentity) {
  const de::HistoryProjector h = de::build_history_projector(de::Matrix::Zero(5, 7), 0.75, 1e-10);
  EXPECT_EQ(h.projector, de::Matrix::Identity(5, 5));
  EXPECT_EQ(h.retained, 0);
}

TEST(HistoryProjector, RankOneHistory) {
  de::Vector a = de::Vector::Zero(6);
  a[2] = 3.0;
  std::mt19937_64 rng(1);
  const de::Vector b = oracle::random_vector(rng, 9);
  const de::HistoryProjector h = de::build_history_projector(a * b.transpose(), 0.75, 1e-10);
  de::Matrix expected = de::Matrix::Identity(6, 6);
  expected(2, 2) = 0.0;
  EXPECT_LT((h.projector - expected).norm(), 1e-14);
  EXPECT_EQ(h.retained, 1);
}

TEST(HistoryProjector, CapsRetainedRank) {
  std::mt19937_64 rng(12);
  de::Matrix history = de::Matrix::Zero(64, 64);
  for (int i = 0; i < 60; ++i) history += oracle::random_vector(rng, 64) * oracle::random_vector(rng, 64).transpose();
  const de::HistoryProjector h = de::build_history_projector(history, 0.75, 1e-10);
  EXPECT_EQ(h.retained, 48);
  EXPECT_NEAR(h.projector.trace(), 16.0, 1e-9);
  EXPECT_LE(projector_defect(h.projector), 1e-10);
  EXPECT_LE(asymmetry(h.projector), 1e-12);
  EXPECT_LE((h.projector * h.basis).norm(), 1e-10);
}

TEST(HistoryProjector, KeepsTheLargestDirections) {
  // diagonal history with distinct scales; the cap should drop the smallest
  de::Matrix history = de::Matrix::Zero(4, 4);
  history.diagonal() << 4.0, 1.0, 3.0, 2.0;
  const de::HistoryProjector h = de::build_history_projector(history, 0.5, 1e-10);
  ASSERT_EQ(h.retained, 2);
  de::Vector expected(4);
  expected << 0, 1, 0, 1;
  EXPECT_LT((h.projector.diagonal() - expected).norm(), 1e-14);
}

TEST(HistoryProjector, RejectsNonFiniteHistory) {
  de::Matrix history = de::Matrix::Zero(3, 3);
  history(1, 1) = std::nan("");
  EXPECT_THROW(de::build_history_projector(history, 0.75, 1e-10), de::Error);
}

// ---- threshold statistics

TEST(ThresholdStats, HandComputedStep) {
  const auto [m, v] = de::update_threshold_stats(0.0, 0.0, 10.0, 0.9);
  EXPECT_NEAR(m, 1.0, 1e-12);
  EXPECT_NEAR(v, 8.1, 1e-12);
}

TEST(ThresholdStats, MeanIsAFixedPoint) {
  const auto [m, v] = de::update_threshold_stats(2.5, 3.0, 2.5, 0.7);
  EXPECT_EQ(m, 2.5);
  EXPECT_NEAR(v, 0.7 * 3.0, 1e-15);
}

TEST(ThresholdStats, UnitCoefficientFreezes) {
  const auto [m, v] = de::update_threshold_stats(1.25, 0.5, 1e6, 1.0);
  EXPECT_EQ(m, 1.25);
  EXPECT_EQ(v, 0.5);
}

TEST(ShouldConstrain, WarmupAndZeroHistoryDoNotFire) {
  de::EditorState s;
  s.delta_history = de::Matrix::Ones(3, 3);
  const de::EditConfig cfg = config_for(de::Method::kDeltaEdit);
  const de::Vector k = de::Vector::Ones(3);
  EXPECT_FALSE(de::should_constrain(s, k, cfg).constrain);  // edit_count 0

  s.edit_count = 10;
  s.delta_history.setZero();
  const de::ConstraintDecision d = de::should_constrain(s, k, cfg);
  EXPECT_EQ(d.excitation, 0.0);
  EXPECT_FALSE(d.constrain);
}

TEST(ShouldConstrain, ThresholdArithmetic) {
  de::EditorState s;
  s.edit_count = 10;
  s.mean_stat = 1.0;
  s.var_stat = 4.0;
  s.delta_history = de::Matrix::Zero(2, 2);
  s.delta_history(0, 0) = std::sqrt(4.5);
  de::Vector k(2);
  k << 1.0, 0.0;
  const de::ConstraintDecision d = de::should_constrain(s, k, config_for(de::Method::kDeltaEdit));
  EXPECT_NEAR(d.excitation, 4.5, 1e-14);
  EXPECT_TRUE(d.constrain);
  EXPECT_FALSE(de::should_constrain(s, k, config_for(de::Method::kAlphaEdit)).constrain);
  EXPECT_FALSE(de::should_constrain(s, k, config_for(de::Method::kMemit)).constrain);
}

// ---- full edits

TEST(ApplyEdit, FirstEditIsUnconstrainedAndRecordedInHistory) {
  const de::FactUniverse u = small_universe();
  const de::EditConfig cfg = config_for(de::Method::kDeltaEdit);
  de::EditorState s = de::EditorState::fresh(u, cfg);
  const de::EditOutcome out = de::apply_edit(s, u.facts[0], u, cfg);
  EXPECT_FALSE(out.constrained);
  EXPECT_EQ(s.delta_history, de::Matrix(out.alpha * out.beta.transpose()));
  EXPECT_EQ(s.edit_count, 1);
  EXPECT_EQ(out.residual, out.alpha);
}

TEST(ApplyEdit, UnreachableThresholdMatchesAlphaEditBitwise) {
  const de::FactUniverse u = small_universe(3);
  de::EditConfig a = config_for(de::Method::kAlphaEdit);
  de::EditConfig d = config_for(de::Method::kDeltaEdit);
  d.eta = 1e9;
  de::EditorState sa = de::EditorState::fresh(u, a);
  de::EditorState sd = de::EditorState::fresh(u, d);
  for (int e = 0; e < 40; ++e) {
    de::apply_edit(sa, u.facts[static_cast<std::size_t>(e)], u, a);
    const de::EditOutcome od = de::apply_edit(sd, u.facts[static_cast<std::size_t>(e)], u, d);
    EXPECT_FALSE(od.constrained);
    ASSERT_EQ(sa.w, sd.w) << "edit " << e;
  }
  EXPECT_EQ(sd.constraint_activations, 0);
}

TEST(ApplyEdit, LedgerReplayIsBitExact) {
  const de::FactUniverse u = small_universe(4);
  const de::EditConfig cfg = config_for(de::Method::kDeltaEdit);
  de::EditorState s = de::EditorState::fresh(u, cfg);
  de::EditLedger ledger(u.initial_w);
  for (int e = 0; e < 10; ++e) {
    const de::Fact& f = u.facts[static_cast<std::size_t>(e)];
    de::EditOutcome out = de::apply_edit(s, f, u, cfg);
    ledger.append({out.alpha, out.beta, f.key, out.constrained});
    ASSERT_EQ(s.delta_history, ledger.delta_sum());
  }
  EXPECT_EQ(s.w, ledger.replay());
}

TEST(ApplyEdit, StateInvariantsOverALongRun) {
  const de::FactUniverse u = small_universe(5);
  de::EditConfig cfg = config_for(de::Method::kDeltaEdit);
  cfg.eta = 0.5;
  de::EditorState s = de::EditorState::fresh(u, cfg);
  int constrained = 0;
  for (int e = 0; e < 60; ++e) {
    const de::Matrix before = s.delta_history;
    const de::EditOutcome out = de::apply_edit(s, u.facts[static_cast<std::size_t>(e)], u, cfg);
    EXPECT_TRUE(s.w.allFinite());
    EXPECT_GE(s.var_stat, 0.0);
    EXPECT_GE(s.mean_stat, 0.0);
    EXPECT_LE(out.retained_rank, 12);
    if (out.constrained) {
      ++constrained;
      const de::HistoryProjector h = de::build_history_projector(before, cfg.rank_cap_ratio, cfg.eig_zero_rel);
      for (int c = 0; c < h.basis.cols(); ++c)
        EXPECT_LE(std::abs(out.alpha.dot(h.basis.col(c))), 1e-8 * std::max(out.alpha.norm(), 1e-300));
    }
  }
  EXPECT_GT(constrained, 0);
  EXPECT_EQ(s.constraint_activations, constrained);
  EXPECT_EQ((s.kp_gram - s.kp_gram.transpose()).norm(), 0.0);
  Eigen::SelfAdjointEigenSolver<de::Matrix> eig(s.kp_gram);
  EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-9 * eig.eigenvalues().maxCoeff());
}

TEST(ApplyEdit, FailedEditLeavesStateUntouched) {
  const de::FactUniverse u = small_universe(6);
  de::EditConfig cfg = config_for(de::Method::kDeltaEdit);
  de::EditorState s = de::EditorState::fresh(u, cfg);
  for (int e = 0; e < 8; ++e) de::apply_edit(s, u.facts[static_cast<std::size_t>(e)], u, cfg);
  const de::EditorState snapshot = s;

  de::Fact bad = u.facts[9];
  bad.target_token = 10000;
  EXPECT_THROW(de::apply_edit(s, bad, u, cfg), de::Error);
  de::Fact poisoned = u.facts[9];
  poisoned.key[0] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(de::apply_edit(s, poisoned, u, cfg), de::Error);

  EXPECT_EQ(s.w, snapshot.w);
  EXPECT_EQ(s.delta_history, snapshot.delta_history);
  EXPECT_EQ(s.kp_gram, snapshot.kp_gram);
  EXPECT_EQ(s.mean_stat, snapshot.mean_stat);
  EXPECT_EQ(s.var_stat, snapshot.var_stat);
  EXPECT_EQ(s.edit_count, snapshot.edit_count);
  EXPECT_EQ(s.constraint_activations, snapshot.constraint_activations);
}

TEST(ApplyEdit, LiteralStatisticsSkipConstrainedEdits) {
  const de::FactUniverse u = small_universe(7);
  de::EditConfig cfg = config_for(de::Method::kDeltaEdit);
  cfg.stats_on_constrained = false;
  cfg.eta = 0.0;
  de::EditorState s = de::EditorState::fresh(u, cfg);
  int constrained = 0;
  for (int e = 0; e < 30; ++e) {
    const double m = s.mean_stat, v = s.var_stat;
    const de::EditOutcome out = de::apply_edit(s, u.facts[static_cast<std::size_t>(e)], u, cfg);
    if (out.constrained) {
      ++constrained;
      EXPECT_EQ(s.mean_stat, m);
      EXPECT_EQ(s.var_stat, v);
    }
  }
  EXPECT_GT(constrained, 0);
}

TEST(ApplyEdit, OutlierGuardSkipsExtremeExcitation) {
  const de::FactUniverse u = small_universe(8);
  for (double eta : {1e9, 0.5}) {
    de::EditConfig cfg = config_for(de::Method::kDeltaEdit);
    cfg.eta = eta;
    de::EditorState s = de::EditorState::fresh(u, cfg);
    s.edit_count = 20;
    s.mean_stat = 1.0;
    s.var_stat = 1.0;
    s.delta_history = 1e3 * de::Matrix::Identity(16, 16);  // excitation far above m + 10 sqrt(v)
    const de::EditOutcome out = de::apply_edit(s, u.facts[0], u, cfg);
    EXPECT_GT(out.history_excitation, 11.0);
    EXPECT_EQ(s.mean_stat, 1.0);
    EXPECT_EQ(s.var_stat, 1.0);
  }
}

TEST(ApplyEdit, WarmupAlwaysUpdatesStatistics) {
  const de::FactUniverse u = small_universe(9);
  const de::EditConfig cfg = config_for(de::Method::kDeltaEdit);
  de::EditorState s = de::EditorState::fresh(u, cfg);
  s.delta_history = 1e3 * de::Matrix::Identity(16, 16);
  const de::EditOutcome out = de::apply_edit(s, u.facts[0], u, cfg);
  EXPECT_FALSE(out.constrained);
  EXPECT_NEAR(s.mean_stat, 0.1 * out.history_excitation, 1e-9 * out.history_excitation);
}

TEST(EditConfig, ValidatesRanges) {
  de::EditConfig c;
  c.delta_coef = 1.5;
  EXPECT_THROW(c.validate(), de::Error);
  c = {};
  c.rank_cap_ratio = 0.0;
  EXPECT_THROW(c.validate(), de::Error);
  c = {};
  c.warmup_edits = -1;
  EXPECT_THROW(c.validate(), de::Error);
  c = {};
  c.rank_cap_ratio = 1.0;
  c.delta_coef = 0.0;
  EXPECT_NO_THROW(c.validate());
}

TEST(Method, NamesRoundTrip) {
  for (de::Method m : {de::Method::kMemit, de::Method::kAlphaEdit, de::Method::kDeltaEdit})
    EXPECT_EQ(de::parse_method(de::method_name(m)), m);
  EXPECT_THROW(de::parse_method("rome"), de::Error);
}
