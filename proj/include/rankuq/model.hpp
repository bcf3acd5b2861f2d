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

// Contextual Bradley-Terry model core.
//
// Each of M models has utility theta_m(x) = b0_m + x.beta_m at covariate
// x in R^d. The probability that the right model j beats the left model i
// is sigmoid(theta_j(x) - theta_i(x)). Parameters live in a stacked vector
// of length M + M*d: the M intercepts first, then the slope rows grouped
// per model so that the slope block lines up with e_j (x) x (Kronecker),
// i.e. flat[M + m*d + k] = slopes(m, k).
//
// Utilities are only identified up to a common shift, so estimation is
// constrained to the subspace where the intercepts and each slope
// coordinate sum to zero across models. This header provides the model
// quantities (design vectors, utilities, probabilities, the negative
// log-likelihood with analytic gradient and Hessian) and the constraint /
// projection machinery. Everything is pure and safe to share across
// threads; likelihood sums use a fixed-shard reduction so results are
// bit-stable at any thread count.

#ifndef RANKUQ_MODEL_HPP_
#define RANKUQ_MODEL_HPP_

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "rankuq/errors.hpp"
#include "rankuq/parallel.hpp"

namespace rankuq {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using DesignVector = Eigen::VectorXd;

// One pairwise comparison. outcome == 1 means the right model won.
struct ComparisonRecord {
  int left = 0;
  int right = 0;
  Vector covariates;
  int outcome = 0;
};

struct Dataset {
  int num_models = 0;
  int covariate_dim = 0;
  std::vector<std::string> model_names;
  std::vector<ComparisonRecord> records;

  int num_records() const { return static_cast<int>(records.size()); }
};

// Throws if the dataset violates its structural invariants.
inline void validate(const Dataset& data) {
  if (data.num_models < 2) {
    throw InvalidArgumentError("dataset needs at least 2 models");
  }
  if (data.covariate_dim < 0) {
    throw InvalidArgumentError("covariate_dim must be >= 0");
  }
  if (!data.model_names.empty()) {
    if (static_cast<int>(data.model_names.size()) != data.num_models) {
      throw InvalidArgumentError("model_names size does not match num_models");
    }
    std::unordered_set<std::string> seen;
    for (const auto& n : data.model_names) {
      if (!seen.insert(n).second) {
        throw InvalidArgumentError("duplicate model name \"" + n + "\"");
      }
    }
  }
  for (std::size_t l = 0; l < data.records.size(); ++l) {
    const auto& r = data.records[l];
    if (r.left < 0 || r.left >= data.num_models || r.right < 0 ||
        r.right >= data.num_models) {
      throw IndexError("record " + std::to_string(l) +
                       ": model index out of range");
    }
    if (r.left == r.right) {
      throw InvalidArgumentError("record " + std::to_string(l) +
                                 ": a model cannot be compared with itself");
    }
    if (r.covariates.size() != data.covariate_dim) {
      throw DimensionError("record " + std::to_string(l) +
                           ": covariate length does not match covariate_dim");
    }
    if (!r.covariates.allFinite()) {
      throw InvalidArgumentError("record " + std::to_string(l) +
                                 ": non-finite covariate");
    }
    if (r.outcome != 0 && r.outcome != 1) {
      throw InvalidArgumentError("record " + std::to_string(l) +
                                 ": outcome must be 0 or 1");
    }
  }
}

// Intercepts and slopes for all M models. Plain data: normalization (sum to
// zero across models) is enforced where it matters -- by fit() and by the
// simulation scenarios -- not by this struct, since model quantities are
// shift invariant and tests exercise unnormalized points too.
struct StackedParams {
  Vector intercepts;  // length M
  Matrix slopes;      // M x d, row m = slope vector of model m

  int num_models() const { return static_cast<int>(intercepts.size()); }
  int covariate_dim() const { return static_cast<int>(slopes.cols()); }

  static StackedParams zero(int num_models, int covariate_dim) {
    StackedParams p;
    p.intercepts = Vector::Zero(num_models);
    p.slopes = Matrix::Zero(num_models, covariate_dim);
    return p;
  }

  // Canonical flattening: intercepts first, then slope rows model by model.
  Vector flatten() const {
    const int m = num_models();
    const int d = covariate_dim();
    Vector v(m + m * d);
    v.head(m) = intercepts;
    for (int r = 0; r < m; ++r) {
      for (int k = 0; k < d; ++k) v[m + r * d + k] = slopes(r, k);
    }
    return v;
  }

  static StackedParams from_flat(const Vector& v, int num_models,
                                 int covariate_dim) {
    if (v.size() != num_models + num_models * covariate_dim) {
      throw DimensionError("flat parameter vector has wrong length");
    }
    StackedParams p;
    p.intercepts = v.head(num_models);
    p.slopes.resize(num_models, covariate_dim);
    for (int r = 0; r < num_models; ++r) {
      for (int k = 0; k < covariate_dim; ++k) {
        p.slopes(r, k) = v[num_models + r * covariate_dim + k];
      }
    }
    return p;
  }
};

// True when both sum-to-zero constraints hold within tol.
inline bool is_normalized(const StackedParams& params, double tol = 1e-10) {
  if (std::abs(params.intercepts.sum()) > tol) return false;
  const int d = params.covariate_dim();
  for (int k = 0; k < d; ++k) {
    if (std::abs(params.slopes.col(k).sum()) > tol) return false;
  }
  return true;
}

// Orthogonal projection onto the feasible subspace: subtracts the
// across-model mean from the intercepts and from each slope coordinate.
inline StackedParams project_to_feasible(const StackedParams& params) {
  StackedParams out = params;
  out.intercepts.array() -= params.intercepts.mean();
  for (int k = 0; k < params.covariate_dim(); ++k) {
    out.slopes.col(k).array() -= params.slopes.col(k).mean();
  }
  return out;
}

// Same projection applied to a flat vector (parameters or gradients).
inline Vector project_flat(const Vector& v, int num_models,
                           int covariate_dim) {
  Vector out = v;
  out.head(num_models).array() -= v.head(num_models).mean();
  for (int k = 0; k < covariate_dim; ++k) {
    double mean = 0.0;
    for (int m = 0; m < num_models; ++m) {
      mean += v[num_models + m * covariate_dim + k];
    }
    mean /= num_models;
    for (int m = 0; m < num_models; ++m) {
      out[num_models + m * covariate_dim + k] -= mean;
    }
  }
  return out;
}

// sigmoid(z) without overflow; result clamped into the open interval (0,1).
inline double sigmoid(double z) {
  double p;
  if (z >= 0) {
    p = 1.0 / (1.0 + std::exp(-z));
  } else {
    const double e = std::exp(z);
    p = e / (1.0 + e);
  }
  if (p <= 0.0) p = std::numeric_limits<double>::min();
  if (p >= 1.0) p = 1.0 - std::numeric_limits<double>::epsilon() / 2;
  return p;
}

// log(1 + exp(z)) computed stably.
inline double softplus(double z) {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

// Design vector of a comparison (left=i, right=j) at covariate x:
// (e_j, e_j (x) x) - (e_i, e_i (x) x) in the stacked layout, so that
// params.flatten().dot(result) == theta_j(x) - theta_i(x).
inline DesignVector build_design_vector(int i, int j, const Vector& x,
                                        int num_models) {
  if (i < 0 || i >= num_models || j < 0 || j >= num_models) {
    throw IndexError("model index out of range in design vector");
  }
  if (i == j) {
    throw InvalidArgumentError("design vector needs two distinct models");
  }
  const int d = static_cast<int>(x.size());
  DesignVector v = DesignVector::Zero(num_models + num_models * d);
  v[j] = 1.0;
  v[i] = -1.0;
  for (int k = 0; k < d; ++k) {
    v[num_models + j * d + k] = x[k];
    v[num_models + i * d + k] = -x[k];
  }
  return v;
}

inline double utility(const StackedParams& params, int m, const Vector& x) {
  if (m < 0 || m >= params.num_models()) {
    throw IndexError("model index out of range in utility");
  }
  if (x.size() != params.covariate_dim()) {
    throw DimensionError("covariate length does not match model dimension");
  }
  return params.intercepts[m] + params.slopes.row(m).dot(x);
}

// P(right model j preferred over left model i | x).
inline double preference_probability(const StackedParams& params, int i,
                                     int j, const Vector& x) {
  if (i == j) {
    throw InvalidArgumentError("preference needs two distinct models");
  }
  return sigmoid(utility(params, j, x) - utility(params, i, x));
}

namespace detail {

// Flat arrays for the likelihood hot path; avoids touching per-record
// Eigen vectors inside the Newton loop.
struct CompiledDataset {
  int num_models = 0;
  int covariate_dim = 0;
  int num_records = 0;
  std::vector<std::int32_t> left;
  std::vector<std::int32_t> right;
  std::vector<double> outcome;
  Matrix covariates;  // d x L, column l = x_l

  int dim() const { return num_models + num_models * covariate_dim; }
};

inline CompiledDataset compile(const Dataset& data) {
  CompiledDataset c;
  c.num_models = data.num_models;
  c.covariate_dim = data.covariate_dim;
  c.num_records = data.num_records();
  c.left.resize(c.num_records);
  c.right.resize(c.num_records);
  c.outcome.resize(c.num_records);
  c.covariates.resize(c.covariate_dim, c.num_records);
  for (int l = 0; l < c.num_records; ++l) {
    const auto& r = data.records[l];
    c.left[l] = r.left;
    c.right[l] = r.right;
    c.outcome[l] = static_cast<double>(r.outcome);
    if (c.covariate_dim > 0) c.covariates.col(l) = r.covariates;
  }
  return c;
}

inline double linear_predictor(const CompiledDataset& c, const Vector& flat,
                               int l) {
  const int m = c.num_models;
  const int d = c.covariate_dim;
  const int i = c.left[l];
  const int j = c.right[l];
  double z = flat[j] - flat[i];
  for (int k = 0; k < d; ++k) {
    z += c.covariates(k, l) * (flat[m + j * d + k] - flat[m + i * d + k]);
  }
  return z;
}

struct LossAccumulator {
  double nll = 0.0;
  Vector grad;
  Matrix hess;
  double max_abs_z = 0.0;
};

// Negative log-likelihood and, optionally, gradient and Hessian, with
// per-record weights (the pairs bootstrap passes resample counts). Records
// are summed over kReductionShards fixed shards combined in shard order.
inline LossAccumulator accumulate_loss(const CompiledDataset& c,
                                       const Vector& flat,
                                       const double* weights, bool want_grad,
                                       bool want_hess) {
  const int dim = c.dim();
  const int m = c.num_models;
  const int d = c.covariate_dim;
  std::vector<LossAccumulator> parts(kReductionShards);

  auto run_shard = [&](int s) {
    auto [begin, end] = shard_range(c.num_records, s);
    LossAccumulator& acc = parts[s];
    if (want_grad) acc.grad = Vector::Zero(dim);
    if (want_hess) acc.hess = Matrix::Zero(dim, dim);
    const int nnz = 2 * (1 + d);
    std::vector<int> idx(nnz);
    std::vector<double> val(nnz);
    for (int l = begin; l < end; ++l) {
      const double w = weights ? weights[l] : 1.0;
      if (w == 0.0) continue;
      const double z = linear_predictor(c, flat, l);
      const double az = std::abs(z);
      if (az > acc.max_abs_z) acc.max_abs_z = az;
      const double y = c.outcome[l];
      acc.nll += w * (softplus(z) - y * z);
      if (!want_grad && !want_hess) continue;
      const double p = sigmoid(z);
      const int i = c.left[l];
      const int j = c.right[l];
      if (want_grad) {
        const double r = w * (p - y);  // -(y - sigma)
        acc.grad[j] += r;
        acc.grad[i] -= r;
        for (int k = 0; k < d; ++k) {
          const double rx = r * c.covariates(k, l);
          acc.grad[m + j * d + k] += rx;
          acc.grad[m + i * d + k] -= rx;
        }
      }
      if (want_hess) {
        const double h = w * p * (1.0 - p);
        // Nonzero design entries: (j, +1), (i, -1), slope blocks +-x.
        idx[0] = j;
        val[0] = 1.0;
        idx[1] = i;
        val[1] = -1.0;
        for (int k = 0; k < d; ++k) {
          idx[2 + 2 * k] = m + j * d + k;
          val[2 + 2 * k] = c.covariates(k, l);
          idx[3 + 2 * k] = m + i * d + k;
          val[3 + 2 * k] = -c.covariates(k, l);
        }
        for (int a = 0; a < nnz; ++a) {
          const double ha = h * val[a];
          for (int b = 0; b < nnz; ++b) {
            acc.hess(idx[a], idx[b]) += ha * val[b];
          }
        }
      }
    }
  };

  parallel_for(kReductionShards, run_shard);

  LossAccumulator total;
  if (want_grad) total.grad = Vector::Zero(dim);
  if (want_hess) total.hess = Matrix::Zero(dim, dim);
  for (int s = 0; s < kReductionShards; ++s) {
    total.nll += parts[s].nll;
    if (want_grad && parts[s].grad.size() > 0) total.grad += parts[s].grad;
    if (want_hess && parts[s].hess.size() > 0) total.hess += parts[s].hess;
    if (parts[s].max_abs_z > total.max_abs_z) {
      total.max_abs_z = parts[s].max_abs_z;
    }
  }
  return total;
}

}  // namespace detail

inline double negative_log_likelihood(const StackedParams& params,
                                      const Dataset& data) {
  if (data.records.empty()) {
    throw InvalidArgumentError("negative_log_likelihood needs data");
  }
  const auto c = detail::compile(data);
  return detail::accumulate_loss(c, params.flatten(), nullptr, false, false)
      .nll;
}

inline Vector gradient(const StackedParams& params, const Dataset& data) {
  const auto c = detail::compile(data);
  return detail::accumulate_loss(c, params.flatten(), nullptr, true, false)
      .grad;
}

inline Matrix hessian(const StackedParams& params, const Dataset& data) {
  const auto c = detail::compile(data);
  return detail::accumulate_loss(c, params.flatten(), nullptr, false, true)
      .hess;
}

// Sum-to-zero constraints C (one row for the intercepts, one per covariate
// coordinate) and the orthogonal projection P onto null(C).
struct ConstraintSystem {
  Matrix C;  // (1+d) x (M + M*d)
  Matrix P;  // (M + M*d)^2
};

inline ConstraintSystem build_constraints(int num_models, int covariate_dim) {
  if (num_models < 2) {
    throw InvalidArgumentError("constraints need at least 2 models");
  }
  const int m = num_models;
  const int d = covariate_dim;
  const int dim = m + m * d;
  ConstraintSystem s;
  s.C = Matrix::Zero(1 + d, dim);
  for (int r = 0; r < m; ++r) s.C(0, r) = 1.0;
  for (int k = 0; k < d; ++k) {
    for (int r = 0; r < m; ++r) s.C(1 + k, m + r * d + k) = 1.0;
  }
  // C C^T = M * I, so P = I - C^T C / M: a centering matrix per block.
  s.P = Matrix::Identity(dim, dim);
  const double c = 1.0 / m;
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) s.P(a, b) -= c;
  }
  for (int k = 0; k < d; ++k) {
    for (int a = 0; a < m; ++a) {
      for (int b = 0; b < m; ++b) s.P(m + a * d + k, m + b * d + k) -= c;
    }
  }
  return s;
}

// Orthonormal basis of null(C), one Helmert block for the intercepts and one
// per covariate coordinate. Columns span the feasible subspace, so P = N N^T.
inline Matrix nullspace_basis(int num_models, int covariate_dim) {
  const int m = num_models;
  const int d = covariate_dim;
  Matrix helmert = Matrix::Zero(m, m - 1);
  for (int c = 0; c < m - 1; ++c) {
    const double norm = std::sqrt(static_cast<double>(c + 1) *
                                  static_cast<double>(c + 2));
    for (int r = 0; r <= c; ++r) helmert(r, c) = 1.0 / norm;
    helmert(c + 1, c) = -static_cast<double>(c + 1) / norm;
  }
  const int dim = m + m * d;
  const int dim_u = (m - 1) * (1 + d);
  Matrix basis = Matrix::Zero(dim, dim_u);
  basis.block(0, 0, m, m - 1) = helmert;
  for (int k = 0; k < d; ++k) {
    for (int r = 0; r < m; ++r) {
      for (int c = 0; c < m - 1; ++c) {
        basis(m + r * d + k, (m - 1) * (1 + k) + c) = helmert(r, c);
      }
    }
  }
  return basis;
}

}  // namespace rankuq

#endif  // RANKUQ_MODEL_HPP_
