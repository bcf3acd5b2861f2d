// Copyright 2026 The RankUQ Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Rank confidence sets and extreme-covariate extrapolation.
//
// A symmetric difference interval above zero for the ordered pair (j, k)
// resolves j ahead of k. Counting resolved pairs gives an integer interval
// of ranks consistent with the data: with |N-| models that statistically
// dominate j and |N+| models dominated by j, the rank of j is confined to
// [|N-|+1, M-|N+|]. Marginal sets use the pairs S_j = {(j,k)}; simultaneous
// sets share one critical value over all ordered pairs so that the per-model
// intervals cover every rank jointly.
//
// As the covariate grows along a fixed direction v, utilities are dominated
// by the slope projections v.beta_m: point ranks converge to the ordering of
// those projections, and the difference intervals, normalized by the
// covariate scale, converge to slope-only intervals. The limiting helpers
// compute those limits directly.

#ifndef RANKUQ_RANK_SETS_HPP_
#define RANKUQ_RANK_SETS_HPP_

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rankuq/errors.hpp"
#include "rankuq/estimation.hpp"
#include "rankuq/model.hpp"
#include "rankuq/uncertainty.hpp"

namespace rankuq {

enum class RankScope { marginal, simultaneous };

inline const char* to_string(RankScope scope) {
  return scope == RankScope::marginal ? "marginal" : "simultaneous";
}

// Integer interval [lo, hi] of ranks consistent with the data for one model.
struct RankSet {
  int model = 0;
  int lo = 1;
  int hi = 1;
  int n_dominated = 0;   // |N+|: models this one statistically dominates
  int n_dominating = 0;  // |N-|: models that statistically dominate this one
  double level = 0.0;
  RankScope scope = RankScope::marginal;

  int width() const { return hi - lo + 1; }
  bool contains(int rank) const { return rank >= lo && rank <= hi; }
};

// Counts resolved pairs (j, k) of a symmetric difference-CI set and turns
// them into rank sets, one per model that appears as a first element.
inline std::vector<RankSet> rank_sets_from_cis(const DifferenceCISet& cis,
                                               int num_models,
                                               RankScope scope) {
  std::vector<int> n_plus(num_models, 0);
  std::vector<int> n_minus(num_models, 0);
  std::vector<char> present(num_models, 0);
  for (const auto& interval : cis.intervals) {
    present[interval.first] = 1;
    switch (resolve_pair(interval)) {
      case PairResolution::above:
        ++n_plus[interval.first];
        break;
      case PairResolution::below:
        ++n_minus[interval.first];
        break;
      case PairResolution::unresolved:
        break;
    }
  }
  std::vector<RankSet> out;
  for (int j = 0; j < num_models; ++j) {
    if (!present[j]) continue;
    RankSet set;
    set.model = j;
    set.n_dominated = n_plus[j];
    set.n_dominating = n_minus[j];
    set.lo = n_minus[j] + 1;
    set.hi = num_models - n_plus[j];
    set.level = cis.level;
    set.scope = scope;
    out.push_back(set);
  }
  return out;
}

// Marginal rank confidence set for model j at covariate x.
inline RankSet marginal_rank_set(const FitResult& fit_result,
                                 const CovarianceEstimate& sigma,
                                 const Vector& x, int j, double alpha,
                                 int draws, std::uint64_t seed) {
  if (j < 0 || j >= sigma.num_models) {
    throw IndexError("model index out of range in marginal_rank_set");
  }
  const PairSet pairs = pairs_for_model(j, sigma.num_models, x);
  const DifferenceCISet cis = difference_cis(fit_result, sigma, pairs, alpha,
                                             CiKind::symm, draws, seed);
  auto sets = rank_sets_from_cis(cis, sigma.num_models, RankScope::marginal);
  return sets.front();
}

// Simultaneous rank confidence sets for all models, from one shared critical
// value over all ordered pairs.
inline std::vector<RankSet> simultaneous_rank_sets(
    const FitResult& fit_result, const CovarianceEstimate& sigma,
    const Vector& x, double alpha, int draws, std::uint64_t seed) {
  const PairSet pairs = all_ordered_pairs(sigma.num_models, x);
  const DifferenceCISet cis = difference_cis(fit_result, sigma, pairs, alpha,
                                             CiKind::symm, draws, seed);
  return rank_sets_from_cis(cis, sigma.num_models, RankScope::simultaneous);
}

struct RankCurvePoint {
  Vector x;
  std::vector<int> point_ranks;
  std::vector<RankSet> rank_sets;
};

// Point ranks plus rank sets along a covariate path; feeds bump charts and
// confidence-band plots.
inline std::vector<RankCurvePoint> rank_curve(
    const FitResult& fit_result, const CovarianceEstimate& sigma,
    const std::vector<Vector>& covariate_path, double alpha, RankScope scope,
    int draws, std::uint64_t seed) {
  if (covariate_path.empty()) {
    throw InvalidArgumentError("rank_curve needs a nonempty covariate path");
  }
  std::vector<RankCurvePoint> out(covariate_path.size());
  parallel_for(static_cast<int>(covariate_path.size()), [&](int i) {
    const Vector& x = covariate_path[i];
    RankCurvePoint point;
    point.x = x;
    point.point_ranks = point_ranks(fit_result, x);
    if (scope == RankScope::simultaneous) {
      point.rank_sets =
          simultaneous_rank_sets(fit_result, sigma, x, alpha, draws, seed);
    } else {
      for (int j = 0; j < sigma.num_models; ++j) {
        point.rank_sets.push_back(
            marginal_rank_set(fit_result, sigma, x, j, alpha, draws, seed));
      }
    }
    out[i] = std::move(point);
  });
  return out;
}

struct LimitingRanks {
  std::vector<int> ranks;
  // Pairs whose slope projections are numerically indistinguishable; the
  // limiting ordering between them is not meaningful.
  std::vector<std::pair<int, int>> tied_pairs;
  bool all_distinct = true;
};

// Ordering induced solely by the projected slopes v.beta_m, the limit of the
// point ranks at x = lambda * v as lambda grows.
inline LimitingRanks limiting_ranks(const StackedParams& params,
                                    const Vector& v) {
  if (v.size() != params.covariate_dim() || v.size() == 0) {
    throw DimensionError("direction length must equal the covariate dim");
  }
  const int m = params.num_models();
  Vector proj(m);
  for (int i = 0; i < m; ++i) proj[i] = params.slopes.row(i).dot(v);
  LimitingRanks out;
  out.ranks.resize(m);
  for (int j = 0; j < m; ++j) {
    int above = 0;
    for (int i = 0; i < m; ++i) {
      if (proj[i] > proj[j]) ++above;
    }
    out.ranks[j] = 1 + above;
  }
  for (int a = 0; a < m; ++a) {
    for (int b = a + 1; b < m; ++b) {
      if (std::abs(proj[a] - proj[b]) <= 1e-12) {
        out.tied_pairs.emplace_back(a, b);
        out.all_distinct = false;
      }
    }
  }
  return out;
}

inline LimitingRanks limiting_ranks(const FitResult& fit_result,
                                    const Vector& v) {
  return limiting_ranks(fit_result.params, v);
}

// Limiting difference intervals on the normalized scale: for each ordered
// pair (a, b), v.(beta_a - beta_b) +/- t * se with the critical value taken
// from the slope-only Gaussian. Uses the same draw streams as the finite
// covariate construction, so with a common seed the normalized finite
// intervals converge to these as lambda grows.
inline DifferenceCISet limiting_difference_cis(const FitResult& fit_result,
                                               const CovarianceEstimate& sigma,
                                               const Vector& v, double alpha,
                                               int draws, std::uint64_t seed) {
  if (v.size() != sigma.covariate_dim || v.size() == 0) {
    throw DimensionError("direction length must equal the covariate dim");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw InvalidArgumentError("alpha must be in (0,1)");
  }
  const int m = sigma.num_models;
  const int d = sigma.covariate_dim;
  const int dim = m + m * d;
  const PairSet pairs = all_ordered_pairs(m, Vector::Zero(d));

  const int num_pairs = static_cast<int>(pairs.pairs.size());
  Matrix designs = Matrix::Zero(num_pairs, dim);
  Vector estimates(num_pairs);
  for (int p = 0; p < num_pairs; ++p) {
    const auto& [a, b] = pairs.pairs[p];
    for (int k = 0; k < d; ++k) {
      designs(p, m + a * d + k) = v[k];
      designs(p, m + b * d + k) = -v[k];
    }
    estimates[p] = v.dot(fit_result.params.slopes.row(a) -
                         fit_result.params.slopes.row(b));
  }
  DifferenceCISet out = detail::build_difference_cis(
      pairs.pairs, designs, estimates, sigma, alpha, CiKind::symm, draws,
      seed);
  out.x = v;
  return out;
}

// Limiting rank sets: the resolved-pair counting rules applied to the
// limiting difference intervals.
inline std::vector<RankSet> limiting_rank_sets(const FitResult& fit_result,
                                               const CovarianceEstimate& sigma,
                                               const Vector& v, double alpha,
                                               int draws, std::uint64_t seed) {
  const DifferenceCISet cis =
      limiting_difference_cis(fit_result, sigma, v, alpha, draws, seed);
  return rank_sets_from_cis(cis, sigma.num_models, RankScope::simultaneous);
}

struct ExtrapolationResult {
  Vector direction;
  LimitingRanks ranks;
  DifferenceCISet intervals;
  std::vector<RankSet> rank_sets;
};

inline ExtrapolationResult extrapolate(const FitResult& fit_result,
                                       const CovarianceEstimate& sigma,
                                       const Vector& v, double alpha,
                                       int draws, std::uint64_t seed) {
  ExtrapolationResult out;
  out.direction = v;
  out.ranks = limiting_ranks(fit_result, v);
  out.intervals =
      limiting_difference_cis(fit_result, sigma, v, alpha, draws, seed);
  out.rank_sets = rank_sets_from_cis(out.intervals, sigma.num_models,
                                     RankScope::simultaneous);
  return out;
}

}  // namespace rankuq

#endif  // RANKUQ_RANK_SETS_HPP_
