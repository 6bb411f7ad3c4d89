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

#include "deltaedit/noise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace deltaedit {
namespace {

void check_index(const EditLedger& ledger, std::size_t e) {
  if (e >= ledger.size())
    fail(ErrorCode::kOutOfRange, "edit index " + std::to_string(e) + " out of range for ledger of " +
                                     std::to_string(ledger.size()) + " entries");
}

// Sum_i (key . beta_i) alpha_i without materializing any Delta_i.
Vector excited_sum(const EditLedger& ledger, const Vector& key, std::size_t count) {
  const auto& entries = ledger.entries();
  Vector s = Vector::Zero(entries.front().alpha.size());
  for (std::size_t i = 0; i < count; ++i) s += key.dot(entries[i].beta) * entries[i].alpha;
  return s;
}

void accumulate(OverlapSummary& out, double value) {
  value = std::clamp(value, 0.0, 1.0);
  out.mean += value;
  out.max = std::max(out.max, value);
  const int bin = std::min(9, static_cast<int>(value * 10.0));
  ++out.histogram[static_cast<std::size_t>(bin)];
  ++out.pairs;
}

std::vector<Vector> unit_alphas(const EditLedger& ledger, OverlapSummary& out,
                                std::vector<bool>& usable) {
  std::vector<Vector> units;
  units.reserve(ledger.size());
  usable.assign(ledger.size(), true);
  for (std::size_t i = 0; i < ledger.size(); ++i) {
    const Vector& a = ledger.at(i).alpha;
    const double n = a.norm();
    if (!(n > 0.0)) {
      usable[i] = false;
      ++out.zero_norm_excluded;
      units.emplace_back(Vector::Zero(a.size()));
    } else {
      units.emplace_back(a / n);
    }
  }
  return units;
}

}  // namespace

void EditLedger::append(LedgerEntry entry) {
  if (!entries_.empty()) {
    const LedgerEntry& first = entries_.front();
    if (entry.alpha.size() != first.alpha.size() || entry.beta.size() != first.beta.size() ||
        entry.key.size() != first.key.size())
      fail(ErrorCode::kDimensionMismatch, "ledger entry dimensions differ from earlier entries");
  }
  if (entry.beta.size() != entry.key.size())
    fail(ErrorCode::kDimensionMismatch, "ledger entry beta and key differ in dimension");
  if (initial_w_.size() != 0 &&
      (initial_w_.rows() != entry.alpha.size() || initial_w_.cols() != entry.beta.size()))
    fail(ErrorCode::kDimensionMismatch, "ledger entry does not match the initial W");
  entries_.push_back(std::move(entry));
}

const LedgerEntry& EditLedger::at(std::size_t i) const {
  check_index(*this, i);
  return entries_[i];
}

EditLedger EditLedger::prefix(std::size_t n) const {
  EditLedger out(initial_w_);
  const std::size_t stop = std::min(n, entries_.size());
  out.entries_.assign(entries_.begin(), entries_.begin() + static_cast<std::ptrdiff_t>(stop));
  return out;
}

Matrix EditLedger::replay() const {
  Matrix w = initial_w_;
  for (const LedgerEntry& e : entries_) w.noalias() += e.alpha * e.beta.transpose();
  return w;
}

Matrix EditLedger::delta_sum() const {
  if (entries_.empty()) return Matrix::Zero(initial_w_.rows(), initial_w_.cols());
  Matrix d = Matrix::Zero(entries_.front().alpha.size(), entries_.front().beta.size());
  for (const LedgerEntry& e : entries_) d.noalias() += e.alpha * e.beta.transpose();
  return d;
}

double noise_for_edit(const EditLedger& ledger, std::size_t e) {
  check_index(ledger, e);
  const LedgerEntry& self = ledger.at(e);
  const Vector total = excited_sum(ledger, self.key, ledger.size());
  const Vector own = self.key.dot(self.beta) * self.alpha;
  // |o + s|^2 - |s|^2 expanded to avoid cancellation; exact zero for a lone edit
  const Vector others = total - own;
  return others.squaredNorm() + 2.0 * others.dot(own);
}

double noise_expansion(const EditLedger& ledger, std::size_t e) {
  check_index(ledger, e);
  const auto& entries = ledger.entries();
  const Vector& k = entries[e].key;
  const std::size_t t = entries.size();
  double sum = 0.0;
  for (std::size_t i = 0; i < t; ++i) {
    const double ki = k.dot(entries[i].beta);
    for (std::size_t j = 0; j < t; ++j) {
      if (i == e && j == e) continue;
      sum += ki * entries[i].alpha.dot(entries[j].alpha) * entries[j].beta.dot(k);
    }
  }
  return sum;
}

std::vector<double> noise_per_edit(const EditLedger& ledger) {
  const std::size_t t = ledger.size();
  if (t == 0) return {};
  const auto& entries = ledger.entries();
  const auto n = static_cast<Eigen::Index>(t);
  Matrix keys(n, entries.front().key.size());
  Matrix betas(n, entries.front().beta.size());
  Matrix alphas(n, entries.front().alpha.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    keys.row(i) = entries[static_cast<std::size_t>(i)].key.transpose();
    betas.row(i) = entries[static_cast<std::size_t>(i)].beta.transpose();
    alphas.row(i) = entries[static_cast<std::size_t>(i)].alpha.transpose();
  }
  const Matrix g = keys * betas.transpose();  // g(e, i) = k_e . beta_i
  const Matrix excited = g * alphas;
  std::vector<double> out(t);
  for (Eigen::Index e = 0; e < n; ++e) {
    const Vector own = g(e, e) * alphas.row(e).transpose();
    const Vector others = excited.row(e).transpose() - own;
    out[static_cast<std::size_t>(e)] = others.squaredNorm() + 2.0 * others.dot(own);
  }
  return out;
}

std::vector<double> noise_expansion_per_edit(const EditLedger& ledger) {
  const std::size_t t = ledger.size();
  const auto& entries = ledger.entries();
  Matrix gram(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(t));
  for (std::size_t i = 0; i < t; ++i)
    for (std::size_t j = 0; j <= i; ++j)
      gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          gram(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) =
              entries[i].alpha.dot(entries[j].alpha);
  std::vector<double> out(t);
  std::vector<double> c(t);
  for (std::size_t e = 0; e < t; ++e) {
    for (std::size_t i = 0; i < t; ++i) c[i] = entries[e].key.dot(entries[i].beta);
    double sum = 0.0;
    for (std::size_t i = 0; i < t; ++i)
      for (std::size_t j = 0; j < t; ++j)
        if (i != e || j != e) sum += c[i] * gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * c[j];
    out[e] = sum;
  }
  return out;
}

double average_noise(const EditLedger& ledger) {
  if (ledger.empty()) fail(ErrorCode::kInvalidArgument, "average_noise: empty ledger");
  const std::vector<double> values = noise_per_edit(ledger);
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double mean_cross_activation(const EditLedger& ledger) {
  const std::size_t t = ledger.size();
  if (t < 2) fail(ErrorCode::kInvalidArgument, "mean_cross_activation needs at least two edits");
  const auto& entries = ledger.entries();
  double sum = 0.0;
  for (std::size_t i = 0; i < t; ++i)
    for (std::size_t j = 0; j < t; ++j)
      if (i != j) sum += entries[i].key.dot(entries[j].beta);
  return sum / (static_cast<double>(t) * static_cast<double>(t - 1));
}

OverlapSummary influence_overlap(const EditLedger& ledger) {
  if (ledger.size() < 2) fail(ErrorCode::kInvalidArgument, "influence_overlap needs at least two edits");
  OverlapSummary out;
  out.histogram.assign(10, 0);
  std::vector<bool> usable;
  const std::vector<Vector> units = unit_alphas(ledger, out, usable);
  for (std::size_t i = 0; i < units.size(); ++i) {
    if (!usable[i]) continue;
    for (std::size_t j = i + 1; j < units.size(); ++j)
      if (usable[j]) accumulate(out, std::abs(units[i].dot(units[j])));
  }
  if (out.pairs > 0) out.mean /= out.pairs;
  return out;
}

OverlapSummary history_overlap(const EditLedger& ledger, const std::vector<std::size_t>& targets) {
  OverlapSummary out;
  out.histogram.assign(10, 0);
  std::vector<bool> usable;
  const std::vector<Vector> units = unit_alphas(ledger, out, usable);
  for (std::size_t j : targets) {
    check_index(ledger, j);
    if (!usable[j]) continue;
    for (std::size_t i = 0; i < j; ++i)
      if (usable[i]) accumulate(out, std::abs(units[i].dot(units[j])));
  }
  if (out.pairs > 0) out.mean /= out.pairs;
  return out;
}

DeviationBound deviation_bound(const EditLedger& ledger, std::size_t e) {
  check_index(ledger, e);
  const Matrix& w = ledger.initial_w();
  const Vector& k = ledger.at(e).key;
  if (w.cols() != k.size()) fail(ErrorCode::kDimensionMismatch, "deviation_bound: ledger lacks a matching initial W");
  const Vector base = w * k;
  const Vector shift = excited_sum(ledger, k, ledger.size());
  return {(base + shift).norm(), base.norm() + shift.norm()};
}

DriftStats representation_drift(const Matrix& pre, const Matrix& post) {
  if (pre.rows() != post.rows() || pre.cols() != post.cols())
    fail(ErrorCode::kDimensionMismatch, "representation_drift: shapes differ");
  if (pre.rows() < 2) fail(ErrorCode::kInvalidArgument, "representation_drift needs at least two rows");
  const Vector mean_pre = pre.colwise().mean().transpose();
  const Vector mean_post = post.colwise().mean().transpose();
  DriftStats out;
  out.mean_shift = (mean_post - mean_pre).norm();
  const double n = static_cast<double>(pre.rows());
  const Vector std_pre =
      ((pre.rowwise() - mean_pre.transpose()).colwise().squaredNorm().transpose() / n).cwiseSqrt();
  const Vector std_post =
      ((post.rowwise() - mean_post.transpose()).colwise().squaredNorm().transpose() / n).cwiseSqrt();
  out.per_dim_std_ratio.resize(pre.cols());
  for (Eigen::Index c = 0; c < pre.cols(); ++c) {
    if (std_pre[c] > 0.0) {
      out.per_dim_std_ratio[c] = std_post[c] / std_pre[c];
    } else {
      out.per_dim_std_ratio[c] = std::numeric_limits<double>::quiet_NaN();
      out.flagged_dims.push_back(static_cast<int>(c));
    }
  }
  return out;
}

LastEditSplit last_edit_split(const EditLedger& ledger) {
  if (ledger.empty()) fail(ErrorCode::kInvalidArgument, "last_edit_split: empty ledger");
  const std::size_t e = ledger.size() - 1;
  const auto& entries = ledger.entries();
  const LedgerEntry& last = entries[e];
  LastEditSplit out;
  out.noise = noise_for_edit(ledger, e);
  out.history_term = excited_sum(ledger, last.key, e).squaredNorm();
  const double own = last.key.dot(last.beta);
  double cross = 0.0;
  for (std::size_t i = 0; i < e; ++i)
    cross += own * last.alpha.dot(entries[i].alpha) * entries[i].beta.dot(last.key);
  out.cross_term = 2.0 * cross;
  out.residual = out.noise - out.history_term - out.cross_term;
  return out;
}

}  // namespace deltaedit
