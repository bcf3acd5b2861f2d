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

// Synthetic data generation under known ground truth, Monte Carlo coverage
// experiments, and brute-force oracles used by the test suites. Replications
// and records use counter-based streams keyed by (seed, purpose, index), so
// reports are identical at any parallelism level.

#ifndef RANKUQ_SIMLAB_HPP_
#define RANKUQ_SIMLAB_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "rankuq/errors.hpp"
#include "rankuq/estimation.hpp"
#include "rankuq/model.hpp"
#include "rankuq/parallel.hpp"
#include "rankuq/rank_sets.hpp"
#include "rankuq/rng.hpp"
#include "rankuq/uncertainty.hpp"

namespace rankuq {

struct CovariateSampler {
  enum class Kind { uniform, fixed_list, bernoulli };
  Kind kind = Kind::uniform;
  Vector lo, hi;               // uniform box bounds
  std::vector<Vector> values;  // fixed list, drawn uniformly
  Vector probabilities;        // per-component Bernoulli

  static CovariateSampler uniform_box(Vector lo, Vector hi) {
    CovariateSampler s;
    s.kind = Kind::uniform;
    s.lo = std::move(lo);
    s.hi = std::move(hi);
    return s;
  }
  static CovariateSampler fixed_list(std::vector<Vector> values) {
    CovariateSampler s;
    s.kind = Kind::fixed_list;
    s.values = std::move(values);
    return s;
  }
  static CovariateSampler bernoulli(Vector probabilities) {
    CovariateSampler s;
    s.kind = Kind::bernoulli;
    s.probabilities = std::move(probabilities);
    return s;
  }
};

struct PairProbability {
  int first = 0;
  int second = 0;
  double probability = 0.0;
};

// Ground truth for forward simulation: normalized parameters, sampling
// probabilities over a connected edge set, and a covariate law.
struct Scenario {
  StackedParams true_params;
  int num_models = 0;
  int covariate_dim = 0;
  std::vector<PairProbability> pair_probabilities;
  CovariateSampler covariates;
  int num_records = 0;
  std::uint64_t seed = 0;
};

inline void validate_scenario(const Scenario& scenario) {
  const int m = scenario.num_models;
  const int d = scenario.covariate_dim;
  if (m < 2) throw InvalidArgumentError("scenario needs at least 2 models");
  if (scenario.num_records < 1) {
    throw InvalidArgumentError("scenario needs num_records >= 1");
  }
  if (scenario.true_params.num_models() != m ||
      scenario.true_params.covariate_dim() != d) {
    throw DimensionError("true_params shape does not match scenario");
  }
  if (!is_normalized(scenario.true_params)) {
    throw InvalidArgumentError("true_params must satisfy the sum-to-zero "
                               "normalization");
  }
  if (scenario.pair_probabilities.empty()) {
    throw InvalidArgumentError("scenario needs at least one pair");
  }
  double total = 0.0;
  std::vector<int> parent(m);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  for (const auto& pp : scenario.pair_probabilities) {
    if (pp.first < 0 || pp.first >= m || pp.second < 0 || pp.second >= m ||
        pp.first == pp.second) {
      throw InvalidArgumentError("invalid pair in scenario");
    }
    if (pp.probability <= 0.0) {
      throw InvalidArgumentError("pair probabilities must be positive");
    }
    total += pp.probability;
    const int a = find(pp.first);
    const int b = find(pp.second);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw InvalidArgumentError("pair probabilities must sum to 1");
  }
  for (int v = 0; v < m; ++v) {
    if (find(v) != find(0)) {
      throw InvalidArgumentError("scenario edge set must be connected");
    }
  }
  switch (scenario.covariates.kind) {
    case CovariateSampler::Kind::uniform:
      if (scenario.covariates.lo.size() != d ||
          scenario.covariates.hi.size() != d) {
        throw DimensionError("uniform sampler bounds must have length d");
      }
      break;
    case CovariateSampler::Kind::fixed_list:
      if (scenario.covariates.values.empty()) {
        throw InvalidArgumentError("fixed covariate list is empty");
      }
      for (const auto& v : scenario.covariates.values) {
        if (v.size() != d) {
          throw DimensionError("fixed covariate has wrong length");
        }
      }
      break;
    case CovariateSampler::Kind::bernoulli:
      if (scenario.covariates.probabilities.size() != d) {
        throw DimensionError("bernoulli probabilities must have length d");
      }
      break;
  }
}

namespace detail {
inline constexpr std::uint64_t kSaltGenerate = 0x67656eULL;   // "gen"
inline constexpr std::uint64_t kSaltRep = 0x726570ULL;        // "rep"
inline constexpr std::uint64_t kSaltRepBoot = 0x72627374ULL;  // "rbst"
inline constexpr std::uint64_t kSaltRepCrit = 0x72637274ULL;  // "rcrt"
}  // namespace detail

// Forward samples a dataset: each record draws a pair, a covariate, and a
// Bernoulli outcome from the model probability. Deterministic in the seed.
inline Dataset generate(const Scenario& scenario) {
  validate_scenario(scenario);
  const int d = scenario.covariate_dim;
  Dataset data;
  data.num_models = scenario.num_models;
  data.covariate_dim = d;
  data.model_names.reserve(scenario.num_models);
  for (int m = 0; m < scenario.num_models; ++m) {
    data.model_names.push_back("model_" + std::to_string(m));
  }
  data.records.resize(scenario.num_records);
  parallel_for(scenario.num_records, [&](int l) {
    rng::Stream stream(
        rng::derive_key(scenario.seed, detail::kSaltGenerate, l));
    ComparisonRecord record;
    const double u_pair = stream.uniform();
    double cum = 0.0;
    record.left = scenario.pair_probabilities.back().first;
    record.right = scenario.pair_probabilities.back().second;
    for (const auto& pp : scenario.pair_probabilities) {
      cum += pp.probability;
      if (u_pair < cum) {
        record.left = pp.first;
        record.right = pp.second;
        break;
      }
    }
    record.covariates.resize(d);
    switch (scenario.covariates.kind) {
      case CovariateSampler::Kind::uniform:
        for (int k = 0; k < d; ++k) {
          record.covariates[k] =
              scenario.covariates.lo[k] +
              stream.uniform() *
                  (scenario.covariates.hi[k] - scenario.covariates.lo[k]);
        }
        break;
      case CovariateSampler::Kind::fixed_list:
        record.covariates = scenario.covariates.values[static_cast<int>(
            stream.below(scenario.covariates.values.size()))];
        break;
      case CovariateSampler::Kind::bernoulli:
        for (int k = 0; k < d; ++k) {
          record.covariates[k] =
              stream.uniform() < scenario.covariates.probabilities[k] ? 1.0
                                                                      : 0.0;
        }
        break;
    }
    const double p = preference_probability(scenario.true_params, record.left,
                                            record.right, record.covariates);
    record.outcome = stream.uniform() < p ? 1 : 0;
    data.records[l] = std::move(record);
  });
  return data;
}

struct CoverageConfig {
  int bootstrap_replicates = 500;
  int gaussian_draws = 20000;
  FitConfig fit;
  // Progress callback (rep index); the CLI streams this to stderr.
  std::function<void(int)> progress;
};

struct CoverageReport {
  int replications = 0;
  int successes = 0;
  int failures = 0;
  double nominal_level = 0.0;
  // Simultaneous coverage of the utility differences over all ordered pairs.
  double coverage_lower = 0.0;
  double coverage_upper = 0.0;
  double coverage_symm = 0.0;
  double coverage_equiv = 0.0;
  std::vector<double> marginal_rank_coverage;  // per model
  double simultaneous_rank_coverage = 0.0;
  std::vector<double> avg_marginal_width;
  std::vector<double> avg_simultaneous_width;
  std::vector<int> true_ranks;
  std::uint64_t seed = 0;
};

// Monte Carlo coverage experiment: repeatedly simulate, fit, bootstrap, and
// build difference CIs and rank sets at eval_x; report how often the truth
// is covered. Failed replications (non-converged fits, failed bootstraps)
// are counted, not fatal.
inline CoverageReport run_coverage(const Scenario& scenario, int reps,
                                   double alpha, const Vector& eval_x,
                                   const CoverageConfig& config = {}) {
  validate_scenario(scenario);
  if (reps < 50) {
    throw InvalidArgumentError("coverage runs need at least 50 replications");
  }
  if (eval_x.size() != scenario.covariate_dim) {
    throw DimensionError("eval_x length does not match the covariate dim");
  }
  const int m = scenario.num_models;

  const PairSet pair_set = all_ordered_pairs(m, eval_x);
  const int num_pairs = static_cast<int>(pair_set.pairs.size());
  Vector true_delta(num_pairs);
  for (int p = 0; p < num_pairs; ++p) {
    const auto& [a, b] = pair_set.pairs[p];
    true_delta[p] = utility(scenario.true_params, a, eval_x) -
                    utility(scenario.true_params, b, eval_x);
  }
  const std::vector<int> true_ranks = point_ranks(scenario.true_params, eval_x);

  struct RepOutcome {
    bool ok = false;
    bool lower = false, upper = false, symm = false, equiv = false;
    std::vector<char> marginal;
    bool simultaneous = false;
    std::vector<int> marginal_width;
    std::vector<int> simultaneous_width;
  };
  std::vector<RepOutcome> outcomes(reps);

  auto covered = [&](const DifferenceCISet& cis) {
    for (int p = 0; p < num_pairs; ++p) {
      if (true_delta[p] < cis.intervals[p].lo ||
          true_delta[p] > cis.intervals[p].hi) {
        return false;
      }
    }
    return true;
  };

  parallel_for(reps, [&](int rep) {
    Scenario child = scenario;
    child.seed = rng::derive_key(scenario.seed, detail::kSaltRep, rep);
    const Dataset data = generate(child);
    RepOutcome& out = outcomes[rep];
    try {
      const FitResult base = fit(data, config.fit);
      if (!base.converged) return;
      const std::uint64_t boot_seed =
          rng::derive_key(scenario.seed, detail::kSaltRepBoot, rep);
      const CovarianceEstimate sigma =
          bootstrap_covariance(data, config.fit, config.bootstrap_replicates,
                               boot_seed, &base);
      const std::uint64_t crit_seed =
          rng::derive_key(scenario.seed, detail::kSaltRepCrit, rep);

      out.lower = covered(difference_cis(base, sigma, pair_set, alpha,
                                         CiKind::lower,
                                         config.gaussian_draws, crit_seed));
      out.upper = covered(difference_cis(base, sigma, pair_set, alpha,
                                         CiKind::upper,
                                         config.gaussian_draws, crit_seed));
      const DifferenceCISet symm_cis =
          difference_cis(base, sigma, pair_set, alpha, CiKind::symm,
                         config.gaussian_draws, crit_seed);
      out.symm = covered(symm_cis);
      out.equiv = covered(difference_cis(base, sigma, pair_set, alpha,
                                         CiKind::equiv,
                                         config.gaussian_draws, crit_seed));

      out.marginal.resize(m);
      out.marginal_width.resize(m);
      for (int j = 0; j < m; ++j) {
        const RankSet set = marginal_rank_set(base, sigma, eval_x, j, alpha,
                                              config.gaussian_draws,
                                              crit_seed);
        out.marginal[j] = set.contains(true_ranks[j]) ? 1 : 0;
        out.marginal_width[j] = set.width();
      }
      const auto sim_sets =
          rank_sets_from_cis(symm_cis, m, RankScope::simultaneous);
      bool joint = true;
      out.simultaneous_width.resize(m);
      for (const auto& set : sim_sets) {
        joint = joint && set.contains(true_ranks[set.model]);
        out.simultaneous_width[set.model] = set.width();
      }
      out.simultaneous = joint;
      out.ok = true;
    } catch (const Error&) {
      // counted as a failed replication
    }
    if (config.progress) config.progress(rep);
  });

  CoverageReport report;
  report.replications = reps;
  report.nominal_level = 1.0 - alpha;
  report.seed = scenario.seed;
  report.true_ranks = true_ranks;
  report.marginal_rank_coverage.assign(m, 0.0);
  report.avg_marginal_width.assign(m, 0.0);
  report.avg_simultaneous_width.assign(m, 0.0);
  for (const auto& out : outcomes) {
    if (!out.ok) {
      ++report.failures;
      continue;
    }
    ++report.successes;
    report.coverage_lower += out.lower;
    report.coverage_upper += out.upper;
    report.coverage_symm += out.symm;
    report.coverage_equiv += out.equiv;
    report.simultaneous_rank_coverage += out.simultaneous;
    for (int j = 0; j < m; ++j) {
      report.marginal_rank_coverage[j] += out.marginal[j];
      report.avg_marginal_width[j] += out.marginal_width[j];
      report.avg_simultaneous_width[j] += out.simultaneous_width[j];
    }
  }
  if (report.successes > 0) {
    const double n = report.successes;
    report.coverage_lower /= n;
    report.coverage_upper /= n;
    report.coverage_symm /= n;
    report.coverage_equiv /= n;
    report.simultaneous_rank_coverage /= n;
    for (int j = 0; j < m; ++j) {
      report.marginal_rank_coverage[j] /= n;
      report.avg_marginal_width[j] /= n;
      report.avg_simultaneous_width[j] /= n;
    }
  }
  return report;
}

// Exhaustive NLL minimization over a grid on the feasible subspace; the
// last model's intercept and slope row absorb the sum-to-zero constraints.
// The NLL is summed record by record from the model probability, a path
// independent of the fitting machinery.
inline StackedParams grid_mle_oracle(const Dataset& data, double grid_step,
                                     double box) {
  validate(data);
  const int m = data.num_models;
  const int d = data.covariate_dim;
  const int free_dims = (m - 1) * (1 + d);
  if (free_dims > 3) {
    throw DimensionTooLargeError(
        "grid oracle supports at most 3 free dimensions, got " +
        std::to_string(free_dims));
  }
  if (grid_step <= 0.0 || box <= 0.0) {
    throw InvalidArgumentError("grid_step and box must be positive");
  }
  const int steps = static_cast<int>(std::floor(2.0 * box / grid_step)) + 1;

  auto nll_direct = [&](const StackedParams& params) {
    double total = 0.0;
    for (const auto& r : data.records) {
      const double p =
          preference_probability(params, r.left, r.right, r.covariates);
      total -= r.outcome == 1 ? std::log(p) : std::log1p(-p);
    }
    return total;
  };

  std::vector<int> index(free_dims, 0);
  StackedParams best;
  double best_nll = std::numeric_limits<double>::infinity();
  while (true) {
    StackedParams candidate = StackedParams::zero(m, d);
    int pos = 0;
    for (int i = 0; i + 1 < m; ++i) {
      candidate.intercepts[i] = -box + index[pos++] * grid_step;
    }
    candidate.intercepts[m - 1] = -candidate.intercepts.head(m - 1).sum();
    for (int k = 0; k < d; ++k) {
      for (int i = 0; i + 1 < m; ++i) {
        candidate.slopes(i, k) = -box + index[pos++] * grid_step;
      }
      candidate.slopes(m - 1, k) = -candidate.slopes.col(k).head(m - 1).sum();
    }
    const double nll = nll_direct(candidate);
    if (nll < best_nll) {
      best_nll = nll;
      best = candidate;
    }
    int carry = 0;
    while (carry < free_dims && ++index[carry] >= steps) {
      index[carry] = 0;
      ++carry;
    }
    if (carry == free_dims) break;
  }
  return best;
}

// Independent recomputation of rank sets from raw per-pair intervals by
// direct sign enumeration; used to cross-check rank_sets_from_cis.
inline std::vector<std::pair<int, int>> exact_rankset_oracle(
    const std::map<std::pair<int, int>, std::pair<double, double>>& intervals,
    int num_models) {
  std::vector<std::pair<int, int>> sets(num_models);
  for (int j = 0; j < num_models; ++j) {
    int dominated_by_j = 0;
    int dominating_j = 0;
    for (int k = 0; k < num_models; ++k) {
      if (k == j) continue;
      const auto it = intervals.find({j, k});
      if (it == intervals.end()) {
        throw InvalidArgumentError("oracle needs intervals for all pairs");
      }
      const auto& [lo, hi] = it->second;
      const bool entirely_positive = lo > 0.0 && hi > 0.0;
      const bool entirely_negative = lo < 0.0 && hi < 0.0;
      if (entirely_positive) ++dominated_by_j;
      if (entirely_negative) ++dominating_j;
    }
    sets[j] = {dominating_j + 1, num_models - dominated_by_j};
  }
  return sets;
}

}  // namespace rankuq

#endif  // RANKUQ_SIMLAB_HPP_
