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

#include "rankuq/simlab.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "gtest/gtest.h"
#include "rankuq/rank_sets.hpp"
#include "test_util.hpp"

namespace rankuq {
namespace {

Scenario make_scenario(StackedParams params, int num_records,
                       std::uint64_t seed,
                       CovariateSampler sampler = CovariateSampler()) {
  Scenario scenario;
  scenario.num_models = params.num_models();
  scenario.covariate_dim = params.covariate_dim();
  scenario.true_params = std::move(params);
  scenario.num_records = num_records;
  scenario.seed = seed;
  std::vector<std::pair<int, int>> pairs;
  for (int a = 0; a < scenario.num_models; ++a) {
    for (int b = a + 1; b < scenario.num_models; ++b) {
      pairs.emplace_back(a, b);
    }
  }
  for (const auto& [a, b] : pairs) {
    scenario.pair_probabilities.push_back(
        {a, b, 1.0 / static_cast<double>(pairs.size())});
  }
  if (sampler.kind == CovariateSampler::Kind::uniform &&
      sampler.lo.size() == 0) {
    sampler = CovariateSampler::uniform_box(
        Vector::Zero(scenario.covariate_dim),
        Vector::Ones(scenario.covariate_dim));
  }
  scenario.covariates = sampler;
  return scenario;
}

TEST(Generate, FairCoinUnderZeroParams) {
  const Scenario scenario =
      make_scenario(StackedParams::zero(3, 1), 10000, 71);
  const Dataset data = generate(scenario);
  ASSERT_EQ(data.num_records(), 10000);
  const double wins =
      std::accumulate(data.records.begin(), data.records.end(), 0.0,
                      [](double acc, const ComparisonRecord& r) {
                        return acc + r.outcome;
                      });
  const double rate = wins / data.num_records();
  const double sd = std::sqrt(0.25 / data.num_records());
  EXPECT_NEAR(rate, 0.5, 3 * sd);
}

TEST(Generate, LogThreeDifferenceGivesThreeQuarterWinRate) {
  StackedParams params = StackedParams::zero(2, 0);
  params.intercepts << -0.5 * std::log(3.0), 0.5 * std::log(3.0);
  const Scenario scenario = make_scenario(std::move(params), 10000, 73);
  const Dataset data = generate(scenario);
  double wins = 0;
  for (const auto& r : data.records) wins += r.outcome;
  const double rate = wins / data.num_records();
  const double sd = std::sqrt(0.75 * 0.25 / data.num_records());
  EXPECT_NEAR(rate, 0.75, 3 * sd);
}

TEST(Generate, DeterministicGivenSeed) {
  StackedParams params = StackedParams::zero(3, 2);
  params.intercepts << 0.2, 0.0, -0.2;
  params.slopes << 0.1, -0.2, 0.0, 0.1, -0.1, 0.1;
  const Scenario scenario = make_scenario(std::move(params), 500, 77);
  const Dataset a = generate(scenario);
  const Dataset b = generate(scenario);
  ASSERT_EQ(a.num_records(), b.num_records());
  for (int l = 0; l < a.num_records(); ++l) {
    EXPECT_EQ(a.records[l].left, b.records[l].left);
    EXPECT_EQ(a.records[l].right, b.records[l].right);
    EXPECT_EQ(a.records[l].outcome, b.records[l].outcome);
    EXPECT_EQ(a.records[l].covariates, b.records[l].covariates);
  }
}

TEST(Generate, LawMatchesModelPerPairAndCell) {
  StackedParams params = StackedParams::zero(3, 1);
  params.intercepts << 0.3, 0.0, -0.3;
  params.slopes << 0.2, 0.0, -0.2;
  Vector cell0(1), cell1(1);
  cell0 << 0.0;
  cell1 << 1.0;
  const Scenario scenario =
      make_scenario(params, 20000, 79,
                    CovariateSampler::fixed_list({cell0, cell1}));
  const Dataset data = generate(scenario);
  std::map<std::tuple<int, int, int>, std::pair<int, int>> counts;
  for (const auto& r : data.records) {
    auto& [wins, total] =
        counts[{r.left, r.right, static_cast<int>(r.covariates[0])}];
    wins += r.outcome;
    ++total;
  }
  EXPECT_EQ(counts.size(), 6u);  // 3 pairs x 2 cells
  for (const auto& [key, wt] : counts) {
    const auto& [i, j, cell] = key;
    const auto& [wins, total] = wt;
    const Vector& x = cell == 0 ? cell0 : cell1;
    const double p = preference_probability(params, i, j, x);
    const double rate = static_cast<double>(wins) / total;
    const double sd = std::sqrt(p * (1 - p) / total);
    EXPECT_NEAR(rate, p, 4 * sd) << "pair (" << i << "," << j << ") cell "
                                 << cell;
  }
}

TEST(Scenario, ValidationCatchesBadInput) {
  Scenario scenario = make_scenario(StackedParams::zero(3, 1), 100, 1);
  Scenario bad = scenario;
  bad.pair_probabilities[0].probability += 0.1;
  EXPECT_THROW(validate_scenario(bad), InvalidArgumentError);
  bad = scenario;
  bad.true_params.intercepts[0] = 1.0;  // breaks normalization
  EXPECT_THROW(validate_scenario(bad), InvalidArgumentError);
  bad = scenario;
  bad.pair_probabilities = {{0, 1, 1.0}};  // model 2 unreachable
  EXPECT_THROW(validate_scenario(bad), InvalidArgumentError);
}

TEST(GridOracle, TwoModelClosedForm) {
  Dataset data;
  data.num_models = 2;
  data.covariate_dim = 0;
  for (int l = 0; l < 100; ++l) {
    data.records.push_back({0, 1, Vector(0), l < 75 ? 1 : 0});
  }
  const StackedParams argmin = grid_mle_oracle(data, 0.05, 2.0);
  const double difference = argmin.intercepts[1] - argmin.intercepts[0];
  EXPECT_NEAR(difference, std::log(3.0), 0.05 + 1e-12);
}

TEST(GridOracle, SymmetricDataHasArgminAtZero) {
  Dataset data;
  data.num_models = 2;
  data.covariate_dim = 0;
  for (int l = 0; l < 40; ++l) {
    data.records.push_back({0, 1, Vector(0), l % 2});
  }
  const StackedParams argmin = grid_mle_oracle(data, 0.05, 2.0);
  EXPECT_NEAR(argmin.intercepts.lpNorm<Eigen::Infinity>(), 0.0, 0.05 / 2 +
                                                                    1e-12);
}

TEST(GridOracle, FitBeatsGridOnRandomSmallInstances) {
  rng::Stream stream(rng::derive_key(81, 0));
  const std::vector<std::pair<int, int>> shapes = {
      {2, 0}, {2, 1}, {2, 2}, {3, 0}, {4, 0}, {4, 0},
      {2, 1}, {2, 2}, {3, 0}, {2, 0}};
  for (const auto& [m, d] : shapes) {
    const int free_dims = (m - 1) * (1 + d);
    ASSERT_LE(free_dims, 3);
    const StackedParams truth =
        testutil::random_params(stream, m, d, 0.5);
    const Dataset data =
        testutil::random_dataset(stream, m, d, 60, &truth);
    const double step = free_dims == 3 ? 0.1 : 0.05;
    const StackedParams grid_argmin = grid_mle_oracle(data, step, 2.0);
    const double grid_nll = negative_log_likelihood(grid_argmin, data);
    const FitResult result = fit(data);
    EXPECT_LE(result.final_nll, grid_nll + 1e-3);
  }
}

TEST(GridOracle, RejectsLargeDimensions) {
  rng::Stream stream(rng::derive_key(82, 0));
  const Dataset data = testutil::random_dataset(stream, 3, 2, 30);
  EXPECT_THROW(grid_mle_oracle(data, 0.1, 1.0), DimensionTooLargeError);
}

DifferenceCISet cis_from_map(
    const std::map<std::pair<int, int>, std::pair<double, double>>& intervals) {
  DifferenceCISet cis;
  cis.kind = CiKind::symm;
  cis.level = 0.95;
  for (const auto& [pair, interval] : intervals) {
    PairInterval pi;
    pi.first = pair.first;
    pi.second = pair.second;
    pi.lo = interval.first;
    pi.hi = interval.second;
    pi.estimate = 0.5 * (interval.first + interval.second);
    pi.se = 1.0;
    cis.intervals.push_back(pi);
  }
  return cis;
}

TEST(RanksetOracle, AgreesWithLibraryCountingOnRandomConfigurations) {
  rng::Stream stream(rng::derive_key(83, 0));
  for (int trial = 0; trial < 1000; ++trial) {
    const int m = 2 + static_cast<int>(stream.below(5));  // up to 6
    std::map<std::pair<int, int>, std::pair<double, double>> intervals;
    for (int a = 0; a < m; ++a) {
      for (int b = 0; b < m; ++b) {
        if (a == b) continue;
        double lo = 4.0 * stream.uniform() - 2.0;
        double hi = lo + 2.0 * stream.uniform();
        intervals[{a, b}] = {lo, hi};
      }
    }
    const auto oracle = exact_rankset_oracle(intervals, m);
    const auto sets = rank_sets_from_cis(cis_from_map(intervals), m,
                                         RankScope::simultaneous);
    ASSERT_EQ(sets.size(), static_cast<std::size_t>(m));
    for (const auto& set : sets) {
      EXPECT_EQ(set.lo, oracle[set.model].first);
      EXPECT_EQ(set.hi, oracle[set.model].second);
    }
  }
}

TEST(RanksetOracle, AllPositiveForOneModelGivesRankOne) {
  std::map<std::pair<int, int>, std::pair<double, double>> intervals;
  const int m = 4;
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      if (a == b) continue;
      if (a == 0) {
        intervals[{a, b}] = {0.1, 0.9};
      } else if (b == 0) {
        intervals[{a, b}] = {-0.9, -0.1};
      } else {
        intervals[{a, b}] = {-0.5, 0.5};
      }
    }
  }
  const auto oracle = exact_rankset_oracle(intervals, m);
  EXPECT_EQ(oracle[0], (std::pair<int, int>{1, 1}));
  for (int j = 1; j < m; ++j) {
    EXPECT_EQ(oracle[j], (std::pair<int, int>{2, 4}));
  }
}

TEST(RanksetOracle, AllStraddlingGivesFullRange) {
  std::map<std::pair<int, int>, std::pair<double, double>> intervals;
  const int m = 5;
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      if (a != b) intervals[{a, b}] = {-1.0, 1.0};
    }
  }
  for (const auto& [lo, hi] : exact_rankset_oracle(intervals, m)) {
    EXPECT_EQ(lo, 1);
    EXPECT_EQ(hi, m);
  }
}

Scenario coverage_scenario(std::uint64_t seed, int num_records) {
  StackedParams params = StackedParams::zero(3, 1);
  params.intercepts << 0.2, 0.0, -0.2;
  params.slopes << 0.3, -0.1, -0.2;
  return make_scenario(std::move(params), num_records, seed);
}

TEST(Coverage, RequiresFiftyReplications) {
  const Scenario scenario = coverage_scenario(3, 200);
  Vector x(1);
  x << 0.5;
  EXPECT_THROW(run_coverage(scenario, 10, 0.05, x), InvalidArgumentError);
}

TEST(Coverage, NearZeroAlphaCoversEverythingWithFullRange) {
  // Indistinguishable models: with alpha ~ 0 the intervals are maximal and
  // no pair resolves.
  const Scenario scenario = make_scenario(StackedParams::zero(3, 1), 250, 5);
  Vector x(1);
  x << 0.5;
  CoverageConfig config;
  config.bootstrap_replicates = 30;
  config.gaussian_draws = 20000;
  const CoverageReport report = run_coverage(scenario, 50, 1e-6, x, config);
  EXPECT_EQ(report.replications, 50);
  EXPECT_EQ(report.successes + report.failures, 50);
  EXPECT_GE(report.successes, 40);
  EXPECT_EQ(report.coverage_symm, 1.0);
  EXPECT_EQ(report.coverage_lower, 1.0);
  EXPECT_EQ(report.coverage_upper, 1.0);
  EXPECT_EQ(report.coverage_equiv, 1.0);
  EXPECT_EQ(report.simultaneous_rank_coverage, 1.0);
  for (int j = 0; j < 3; ++j) {
    EXPECT_EQ(report.marginal_rank_coverage[j], 1.0);
    // Rank sets collapse to the uninformative range [1, M].
    EXPECT_EQ(report.avg_simultaneous_width[j], 3.0);
  }
}

TEST(Coverage, DeterministicGivenSeed) {
  const Scenario scenario = coverage_scenario(9, 200);
  Vector x(1);
  x << 0.4;
  CoverageConfig config;
  config.bootstrap_replicates = 25;
  config.gaussian_draws = 1000;
  const CoverageReport a = run_coverage(scenario, 50, 0.05, x, config);
  const CoverageReport b = run_coverage(scenario, 50, 0.05, x, config);
  EXPECT_EQ(a.successes, b.successes);
  EXPECT_EQ(a.coverage_symm, b.coverage_symm);
  EXPECT_EQ(a.coverage_equiv, b.coverage_equiv);
  EXPECT_EQ(a.simultaneous_rank_coverage, b.simultaneous_rank_coverage);
  EXPECT_EQ(a.marginal_rank_coverage, b.marginal_rank_coverage);
  EXPECT_EQ(a.avg_marginal_width, b.avg_marginal_width);
}

TEST(Coverage, TrueRanksMatchSortBasedOracle) {
  const Scenario scenario = coverage_scenario(13, 200);
  Vector x(1);
  x << 0.5;
  CoverageConfig config;
  config.bootstrap_replicates = 25;
  config.gaussian_draws = 1000;
  const CoverageReport report = run_coverage(scenario, 50, 0.05, x, config);

  // Sort-based oracle: rank = position of the first equal utility in the
  // descending sort.
  const int m = scenario.num_models;
  std::vector<double> theta(m);
  for (int j = 0; j < m; ++j) theta[j] = utility(scenario.true_params, j, x);
  std::vector<double> sorted = theta;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  for (int j = 0; j < m; ++j) {
    const int rank = static_cast<int>(
        std::find(sorted.begin(), sorted.end(), theta[j]) - sorted.begin() +
        1);
    EXPECT_EQ(report.true_ranks[j], rank);
  }
}

TEST(Consistency, ErrorShrinksWithSampleSize) {
  StackedParams params = StackedParams::zero(3, 1);
  params.intercepts << 0.25, 0.0, -0.25;
  params.slopes << 0.3, -0.1, -0.2;
  double err_small = 0.0, err_large = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    Scenario small = make_scenario(params, 5000, 1000 + rep);
    Scenario large = make_scenario(params, 50000, 2000 + rep);
    const Vector truth = params.flatten();
    const FitResult fit_small = fit(generate(small));
    const FitResult fit_large = fit(generate(large));
    err_small +=
        (fit_small.params.flatten() - truth).lpNorm<Eigen::Infinity>();
    err_large +=
        (fit_large.params.flatten() - truth).lpNorm<Eigen::Infinity>();
  }
  EXPECT_LE(err_large / 20, 0.5 * err_small / 20);
}

}  // namespace
}  // namespace rankuq
