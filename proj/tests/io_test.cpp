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

#include "rankuq/io.hpp"

#include <cstdio>
#include <cstring>
#include <sstream>

#include "gtest/gtest.h"
#include "test_util.hpp"

namespace rankuq {
namespace {

LoadResult load_jsonl(const std::string& text, const CovariateSpec& spec) {
  std::istringstream in(text);
  return load_comparisons_stream(in, InputFormat::jsonl, spec);
}

LoadResult load_csv(const std::string& text, const CovariateSpec& spec) {
  std::istringstream in(text);
  return load_comparisons_stream(in, InputFormat::csv, spec);
}

TEST(Jsonl, TiesDroppedAndCounted) {
  const std::string text =
      R"({"model_a":"A","model_b":"B","winner":"model_a"})"
      "\n"
      R"({"model_a":"A","model_b":"B","winner":"tie"})"
      "\n"
      R"({"model_a":"B","model_b":"A","winner":"model_b"})"
      "\n";
  const auto result = load_jsonl(text, CovariateSpec{});
  EXPECT_EQ(result.report.records, 2);
  EXPECT_EQ(result.report.dropped_ties, 1);
  EXPECT_EQ(result.report.rows_read, 3);
}

TEST(Jsonl, OutcomeConventionAndInterning) {
  const std::string text =
      R"({"model_a":"A","model_b":"B","winner":"model_b","covariates":{"len":7}})"
      "\n";
  CovariateSpec spec;
  spec.fields = {"len"};
  const auto result = load_jsonl(text, spec);
  ASSERT_EQ(result.dataset.num_records(), 1);
  const auto& r = result.dataset.records[0];
  EXPECT_EQ(result.dataset.model_names[r.left], "A");
  EXPECT_EQ(result.dataset.model_names[r.right], "B");
  EXPECT_EQ(r.outcome, 1);
  ASSERT_EQ(r.covariates.size(), 1);
  EXPECT_EQ(r.covariates[0], 7.0);
}

TEST(Jsonl, FirstAppearanceOrderInterning) {
  const std::string text =
      R"({"model_a":"C","model_b":"A","winner":"model_a"})"
      "\n"
      R"({"model_a":"B","model_b":"C","winner":"model_b"})"
      "\n";
  const auto result = load_jsonl(text, CovariateSpec{});
  EXPECT_EQ(result.dataset.model_names,
            (std::vector<std::string>{"C", "A", "B"}));
}

TEST(Jsonl, CategoryTagsMapToPresetOrder) {
  const std::string text =
      R"({"model_a":"A","model_b":"B","winner":"model_b",)"
      R"("tags":["Domain Knowledge","Specificity","Technical Accuracy"]})"
      "\n";
  CovariateSpec spec;
  spec.fields = arena_category_preset();
  const auto result = load_jsonl(text, spec);
  ASSERT_EQ(result.dataset.num_records(), 1);
  Vector expected(10);
  expected << 0, 0, 0, 0, 1, 0, 0, 1, 1, 0;
  EXPECT_EQ(result.dataset.records[0].covariates, expected);
}

TEST(Jsonl, UnknownTagsCountedNotFatal) {
  const std::string text =
      R"({"model_a":"A","model_b":"B","winner":"model_a","tags":["Math","Haiku"]})"
      "\n";
  CovariateSpec spec;
  spec.fields = arena_category_preset();
  const auto result = load_jsonl(text, spec);
  EXPECT_EQ(result.report.unknown_tags, 1);
  EXPECT_EQ(result.dataset.records[0].covariates[9], 1.0);  // Math
}

TEST(Jsonl, UnknownWinnerTagThrowsWithLine) {
  const std::string text =
      R"({"model_a":"A","model_b":"B","winner":"model_a"})"
      "\n"
      R"({"model_a":"A","model_b":"B","winner":"draw"})"
      "\n";
  try {
    load_jsonl(text, CovariateSpec{});
    FAIL() << "expected UnknownWinnerError";
  } catch (const UnknownWinnerError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Jsonl, MissingCovariateThrowsWithFieldAndLine) {
  const std::string text =
      R"({"model_a":"A","model_b":"B","winner":"model_a","covariates":{"len":3}})"
      "\n"
      R"({"model_a":"A","model_b":"B","winner":"model_a","covariates":{"size":3}})"
      "\n";
  CovariateSpec spec;
  spec.fields = {"len"};
  try {
    load_jsonl(text, spec);
    FAIL() << "expected MissingCovariateError";
  } catch (const MissingCovariateError& e) {
    EXPECT_EQ(e.field(), "len");
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Jsonl, MalformedJsonThrowsParseErrorWithLine) {
  const std::string text =
      R"({"model_a":"A","model_b":"B","winner":"model_a"})"
      "\n{not json\n";
  try {
    load_jsonl(text, CovariateSpec{});
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Csv, HeaderAndCovariateColumns) {
  const std::string text =
      "model_a,model_b,winner,len,depth\n"
      "A,B,model_b,7,0.5\n"
      "B,C,tie,3,0.25\n"
      "A,C,model_a,1,0\n";
  CovariateSpec spec;
  spec.fields = {"len", "depth"};
  const auto result = load_csv(text, spec);
  EXPECT_EQ(result.report.records, 2);
  EXPECT_EQ(result.report.dropped_ties, 1);
  EXPECT_EQ(result.dataset.records[0].covariates[0], 7.0);
  EXPECT_EQ(result.dataset.records[0].covariates[1], 0.5);
  EXPECT_EQ(result.dataset.records[0].outcome, 1);
  EXPECT_EQ(result.dataset.records[1].outcome, 0);
}

TEST(Csv, MissingDeclaredColumnThrows) {
  const std::string text =
      "model_a,model_b,winner\n"
      "A,B,model_b\n";
  CovariateSpec spec;
  spec.fields = {"len"};
  EXPECT_THROW(load_csv(text, spec), MissingCovariateError);
}

TEST(Csv, BadNumberThrowsParseError) {
  const std::string text =
      "model_a,model_b,winner,len\n"
      "A,B,model_b,seven\n";
  CovariateSpec spec;
  spec.fields = {"len"};
  EXPECT_THROW(load_csv(text, spec), ParseError);
}

TEST(Ingestion, RowPermutationLeavesFitUnchanged) {
  rng::Stream stream(rng::derive_key(91, 0));
  const StackedParams truth = testutil::random_params(stream, 3, 1, 0.5);
  const Dataset data = testutil::random_dataset(stream, 3, 1, 400, &truth);
  Dataset reversed = data;
  std::reverse(reversed.records.begin(), reversed.records.end());
  const FitResult a = fit(data);
  const FitResult b = fit(reversed);
  EXPECT_LE((a.params.flatten() - b.params.flatten())
                .lpNorm<Eigen::Infinity>(),
            1e-6);
}

TEST(Fingerprint, SensitiveToData) {
  rng::Stream stream(rng::derive_key(92, 0));
  const Dataset data = testutil::random_dataset(stream, 3, 1, 50);
  Dataset changed = data;
  changed.records[10].outcome = 1 - changed.records[10].outcome;
  EXPECT_NE(dataset_fingerprint(data), dataset_fingerprint(changed));
  EXPECT_EQ(dataset_fingerprint(data), dataset_fingerprint(data));
}

class ModelFileTest : public ::testing::Test {
 protected:
  void SetUp() override {
    rng::Stream stream(rng::derive_key(93, 0));
    const StackedParams truth = testutil::random_params(stream, 3, 2, 0.5);
    data_ = testutil::random_dataset(stream, 3, 2, 500, &truth);
    model_.num_models = 3;
    model_.covariate_dim = 2;
    model_.model_names = data_.model_names;
    model_.covariate_fields = {"len", "depth"};
    model_.fit = fit(data_);
    model_.covariance =
        bootstrap_covariance(data_, FitConfig{}, 60, 5, &model_.fit);
    model_.data_fingerprint = dataset_fingerprint(data_);
    model_.num_records = data_.num_records();
  }
  Dataset data_;
  ModelFile model_;
};

TEST_F(ModelFileTest, RoundTripIsBitIdentical) {
  const std::string path = "/tmp/rankuq_model_test.json";
  save_model_file(model_, path);
  const ModelFile reloaded = load_model_file(path);
  // Bit-identical parameters and covariance.
  EXPECT_TRUE(std::memcmp(model_.fit.params.intercepts.data(),
                          reloaded.fit.params.intercepts.data(),
                          3 * sizeof(double)) == 0);
  EXPECT_TRUE(std::memcmp(model_.fit.params.slopes.data(),
                          reloaded.fit.params.slopes.data(),
                          6 * sizeof(double)) == 0);
  EXPECT_TRUE(std::memcmp(model_.covariance->sigma.data(),
                          reloaded.covariance->sigma.data(),
                          81 * sizeof(double)) == 0);
  EXPECT_EQ(reloaded.data_fingerprint, model_.data_fingerprint);
  EXPECT_EQ(reloaded.model_names, model_.model_names);
  EXPECT_EQ(reloaded.covariate_fields, model_.covariate_fields);
  EXPECT_EQ(reloaded.fit.converged, model_.fit.converged);
  EXPECT_EQ(reloaded.covariance->seed, model_.covariance->seed);
  std::remove(path.c_str());
}

TEST_F(ModelFileTest, SavedJsonIsDeterministic) {
  const json a = model_file_to_json(model_);
  const json b = model_file_to_json(model_);
  EXPECT_EQ(a.dump(), b.dump());
}

TEST(ScenarioJson, RoundTrip) {
  StackedParams params = StackedParams::zero(3, 1);
  params.intercepts << 0.2, 0.0, -0.2;
  params.slopes << 0.3, -0.1, -0.2;
  Scenario scenario;
  scenario.num_models = 3;
  scenario.covariate_dim = 1;
  scenario.true_params = params;
  scenario.num_records = 1000;
  scenario.seed = 42;
  scenario.pair_probabilities = {{0, 1, 0.5}, {1, 2, 0.25}, {0, 2, 0.25}};
  scenario.covariates =
      CovariateSampler::uniform_box(Vector::Zero(1), Vector::Ones(1));
  const json j = scenario_to_json(scenario);
  const Scenario back = scenario_from_json(j);
  EXPECT_EQ(back.num_models, 3);
  EXPECT_EQ(back.num_records, 1000);
  EXPECT_EQ(back.seed, 42u);
  EXPECT_EQ(back.true_params.intercepts, scenario.true_params.intercepts);
  EXPECT_EQ(back.true_params.slopes, scenario.true_params.slopes);
  ASSERT_EQ(back.pair_probabilities.size(), 3u);
  EXPECT_EQ(back.pair_probabilities[1].second, 2);
  // The generated data is identical through the round trip.
  const Dataset a = generate(scenario);
  const Dataset b = generate(back);
  for (int l = 0; l < a.num_records(); ++l) {
    EXPECT_EQ(a.records[l].outcome, b.records[l].outcome);
  }
}

TEST(ScenarioJson, RejectsInvalidScenario) {
  StackedParams params = StackedParams::zero(2, 0);
  Scenario scenario;
  scenario.num_models = 2;
  scenario.covariate_dim = 0;
  scenario.true_params = params;
  scenario.num_records = 10;
  scenario.pair_probabilities = {{0, 1, 0.5}};  // probabilities don't sum to 1
  scenario.covariates = CovariateSampler::uniform_box(Vector(0), Vector(0));
  const json j = scenario_to_json(scenario);
  EXPECT_THROW(scenario_from_json(j), InvalidArgumentError);
}

TEST(CoverageReportJson, ContainsAllSections) {
  CoverageReport report;
  report.replications = 50;
  report.successes = 49;
  report.failures = 1;
  report.nominal_level = 0.95;
  report.coverage_symm = 0.94;
  report.marginal_rank_coverage = {0.95, 0.96, 0.97};
  report.simultaneous_rank_coverage = 0.95;
  report.avg_marginal_width = {1.5, 2.0, 1.8};
  report.avg_simultaneous_width = {2.0, 2.5, 2.2};
  report.true_ranks = {1, 2, 3};
  const json j = coverage_report_to_json(report);
  EXPECT_EQ(j["replications"], 50);
  EXPECT_EQ(j["difference_ci_coverage"]["symm"], 0.94);
  EXPECT_EQ(j["marginal_rank_coverage"].size(), 3u);
  EXPECT_EQ(j["true_ranks"], (std::vector<int>{1, 2, 3}));
}

TEST(Base64, DoubleRoundTripIsExact) {
  rng::Stream stream(rng::derive_key(94, 0));
  Matrix m(4, 3);
  for (int i = 0; i < m.size(); ++i) {
    m.data()[i] = stream.normal() * std::pow(10.0, stream.below(20) * 1.0 -
                                                       10.0);
  }
  const std::string encoded = detail::encode_matrix(m);
  const Matrix back = detail::decode_matrix(encoded, 4, 3);
  EXPECT_TRUE(std::memcmp(m.data(), back.data(), sizeof(double) * m.size()) ==
              0);
}

}  // namespace
}  // namespace rankuq
