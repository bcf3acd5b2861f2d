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

// Shared generators for randomized tests. All randomness flows through the
// library's counter-based streams so failures reproduce exactly.

#ifndef RANKUQ_TESTS_TEST_UTIL_HPP_
#define RANKUQ_TESTS_TEST_UTIL_HPP_

#include <utility>
#include <vector>

#include "rankuq/model.hpp"
#include "rankuq/rng.hpp"

namespace rankuq::testutil {

inline StackedParams random_params(rng::Stream& stream, int num_models,
                                   int covariate_dim, double scale = 1.0,
                                   bool normalized = true) {
  StackedParams params = StackedParams::zero(num_models, covariate_dim);
  for (int m = 0; m < num_models; ++m) {
    params.intercepts[m] = scale * (2.0 * stream.uniform() - 1.0);
    for (int k = 0; k < covariate_dim; ++k) {
      params.slopes(m, k) = scale * (2.0 * stream.uniform() - 1.0);
    }
  }
  return normalized ? project_to_feasible(params) : params;
}

inline Vector random_covariate(rng::Stream& stream, int covariate_dim,
                               double scale = 1.0) {
  Vector x(covariate_dim);
  for (int k = 0; k < covariate_dim; ++k) {
    x[k] = scale * (2.0 * stream.uniform() - 1.0);
  }
  return x;
}

// Random dataset whose comparison graph is connected by construction: the
// first M-1 records walk a spanning path, the rest draw pairs uniformly.
inline Dataset random_dataset(rng::Stream& stream, int num_models,
                              int covariate_dim, int num_records,
                              const StackedParams* truth = nullptr) {
  Dataset data;
  data.num_models = num_models;
  data.covariate_dim = covariate_dim;
  for (int m = 0; m < num_models; ++m) {
    data.model_names.push_back("m" + std::to_string(m));
  }
  for (int l = 0; l < num_records; ++l) {
    ComparisonRecord record;
    if (l < num_models - 1) {
      record.left = l;
      record.right = l + 1;
    } else {
      record.left = static_cast<int>(stream.below(num_models));
      record.right = static_cast<int>(stream.below(num_models - 1));
      if (record.right >= record.left) ++record.right;
    }
    record.covariates = random_covariate(stream, covariate_dim);
    if (truth != nullptr) {
      const double p = preference_probability(*truth, record.left,
                                              record.right, record.covariates);
      record.outcome = stream.uniform() < p ? 1 : 0;
    } else {
      record.outcome = stream.uniform() < 0.5 ? 1 : 0;
    }
    data.records.push_back(std::move(record));
  }
  return data;
}

// Central finite differences of the NLL, the independent oracle for the
// analytic gradient.
inline Vector fd_gradient(const StackedParams& params, const Dataset& data,
                          double h = 1e-5) {
  const int m = params.num_models();
  const int d = params.covariate_dim();
  const Vector flat = params.flatten();
  Vector grad(flat.size());
  for (int i = 0; i < flat.size(); ++i) {
    Vector hi = flat, lo = flat;
    hi[i] += h;
    lo[i] -= h;
    grad[i] = (negative_log_likelihood(StackedParams::from_flat(hi, m, d),
                                       data) -
               negative_log_likelihood(StackedParams::from_flat(lo, m, d),
                                       data)) /
              (2.0 * h);
  }
  return grad;
}

// Central finite differences of the analytic gradient, the oracle for the
// Hessian.
inline Matrix fd_hessian(const StackedParams& params, const Dataset& data,
                         double h = 1e-5) {
  const int m = params.num_models();
  const int d = params.covariate_dim();
  const Vector flat = params.flatten();
  Matrix hess(flat.size(), flat.size());
  for (int i = 0; i < flat.size(); ++i) {
    Vector hi = flat, lo = flat;
    hi[i] += h;
    lo[i] -= h;
    const Vector ghi =
        gradient(StackedParams::from_flat(hi, m, d), data);
    const Vector glo =
        gradient(StackedParams::from_flat(lo, m, d), data);
    hess.col(i) = (ghi - glo) / (2.0 * h);
  }
  return hess;
}

}  // namespace rankuq::testutil

#endif  // RANKUQ_TESTS_TEST_UTIL_HPP_
