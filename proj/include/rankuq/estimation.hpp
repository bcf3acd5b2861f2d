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

// Identifiability diagnostics and the constrained maximum-likelihood fit.
//
// The negative log-likelihood is smooth and convex on the sum-to-zero
// subspace whenever the comparison graph is connected and the covariate
// design has full rank there, so the fit is a projected Newton method:
// the Newton system is solved in the reduced coordinates of an orthonormal
// basis of the feasible subspace, with an Armijo backtracking line search
// on the NLL, and iterates are re-centered onto the subspace every step.

#ifndef RANKUQ_ESTIMATION_HPP_
#define RANKUQ_ESTIMATION_HPP_

#include <Eigen/Cholesky>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "rankuq/errors.hpp"
#include "rankuq/model.hpp"

namespace rankuq {

// Connected components of the comparison graph (a vertex per model, an edge
// per observed pair). Components are listed by their smallest member, with
// sorted vertices, so the result is deterministic.
inline std::vector<std::vector<int>> connected_components(
    const Dataset& data) {
  const int m = data.num_models;
  std::vector<int> parent(m);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int v) {
    while (parent[v] != v) {
      parent[v] = parent[parent[v]];
      v = parent[v];
    }
    return v;
  };
  for (const auto& r : data.records) {
    int a = find(r.left);
    int b = find(r.right);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<std::vector<int>> components(m);
  for (int v = 0; v < m; ++v) components[find(v)].push_back(v);
  std::vector<std::vector<int>> out;
  for (auto& comp : components) {
    if (!comp.empty()) out.push_back(std::move(comp));
  }
  return out;
}

struct DesignRankReport {
  int rank = 0;             // numerical rank of the slope design
  int full_dim = 0;         // M * d columns
  int constrained_dim = 0;  // (M-1) * d, the rank attainable on the subspace
  bool full_rank = true;    // rank == constrained_dim (vacuously true at d=0)
  double largest_singular_value = 0.0;
};

// Numerical rank of the matrix with rows (e_j - e_i) (x) x_l. For d >= 1 the
// per-coordinate column sums vanish identically, so full rank is judged
// against the constrained dimension (M-1)*d rather than M*d.
inline DesignRankReport check_design_rank(const Dataset& data) {
  DesignRankReport report;
  const int m = data.num_models;
  const int d = data.covariate_dim;
  report.full_dim = m * d;
  report.constrained_dim = (m - 1) * d;
  if (d == 0 || data.records.empty()) {
    report.rank = 0;
    report.full_rank = (d == 0);
    return report;
  }
  Matrix rows(data.num_records(), m * d);
  rows.setZero();
  for (int l = 0; l < data.num_records(); ++l) {
    const auto& r = data.records[l];
    for (int k = 0; k < d; ++k) {
      rows(l, r.right * d + k) = r.covariates[k];
      rows(l, r.left * d + k) = -r.covariates[k];
    }
  }
  Eigen::JacobiSVD<Matrix> svd(rows);
  const auto& sv = svd.singularValues();
  report.largest_singular_value = sv.size() > 0 ? sv[0] : 0.0;
  const double thresh = std::max(rows.rows(), rows.cols()) *
                        std::numeric_limits<double>::epsilon() *
                        report.largest_singular_value;
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i) {
    if (sv[i] > thresh) ++rank;
  }
  report.rank = rank;
  report.full_rank = (rank >= report.constrained_dim);
  return report;
}

struct FitConfig {
  int max_iterations = 200;
  double gradient_tolerance = 1e-8;  // on the sup norm of P grad
  double line_search_shrink = 0.5;
  double armijo_slope = 1e-4;
  std::optional<StackedParams> initial_params;
  double ridge = 0.0;  // optional Hessian regularization
};

struct FitDiagnostics {
  bool graph_connected = true;
  int num_components = 1;
  bool design_full_rank = true;
  int design_rank = 0;
  int design_constrained_dim = 0;
  // Set when |linear predictor| exceeded 30 during fitting, the usual sign
  // of separation (some model winning every comparison it appears in).
  bool separation_suspected = false;
};

struct FitResult {
  StackedParams params;
  double final_nll = 0.0;
  double projected_gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  FitDiagnostics diagnostics;
  std::vector<double> nll_trace;  // NLL at start and after each accepted step
};

namespace detail {

inline constexpr double kSeparationPredictor = 30.0;

// Newton fit over compiled data with per-record weights. `weights` may be
// null (all ones). Preconditions are the caller's responsibility here; the
// public fit() performs the diagnostics.
inline FitResult fit_weighted(const CompiledDataset& data,
                              const double* weights, const FitConfig& config,
                              const Matrix& basis) {
  const int m = data.num_models;
  const int d = data.covariate_dim;
  const int dim = data.dim();

  FitResult result;
  Vector beta;
  if (config.initial_params.has_value()) {
    const auto& init = *config.initial_params;
    if (init.num_models() != m || init.covariate_dim() != d) {
      throw DimensionError("initial_params shape does not match dataset");
    }
    beta = project_flat(init.flatten(), m, d);
  } else {
    beta = Vector::Zero(dim);
  }

  auto loss = accumulate_loss(data, beta, weights, true, true);
  if (!std::isfinite(loss.nll)) {
    throw NonFiniteLikelihoodError("non-finite likelihood at starting point");
  }
  result.nll_trace.push_back(loss.nll);

  double max_abs_z = loss.max_abs_z;
  int it = 0;
  bool converged = false;
  Vector proj_grad = project_flat(loss.grad, m, d);
  while (true) {
    if (proj_grad.lpNorm<Eigen::Infinity>() <= config.gradient_tolerance) {
      converged = true;
      break;
    }
    if (it >= config.max_iterations) break;
    ++it;

    Vector grad_u = basis.transpose() * loss.grad;
    Matrix hess_u = basis.transpose() * loss.hess * basis;
    if (config.ridge > 0.0) {
      hess_u.diagonal().array() += config.ridge;
    }
    Eigen::LDLT<Matrix> ldlt(hess_u);
    Vector step_u = ldlt.solve(-grad_u);
    if (!step_u.allFinite() || grad_u.dot(step_u) >= 0.0) {
      // Singular or indefinite reduced Hessian: fall back to a jittered
      // solve, then to steepest descent on the subspace.
      Matrix jittered = hess_u;
      const double jitter =
          1e-8 * std::max(1.0, hess_u.diagonal().maxCoeff());
      jittered.diagonal().array() += jitter;
      step_u = Eigen::LDLT<Matrix>(jittered).solve(-grad_u);
      if (!step_u.allFinite() || grad_u.dot(step_u) >= 0.0) {
        step_u = -grad_u;
      }
    }
    const Vector direction = basis * step_u;
    const double slope = loss.grad.dot(direction);
    // Near the optimum the predicted decrease falls below the resolution of
    // the NLL itself; the noise floor keeps full Newton steps acceptable
    // there instead of stalling on one-ulp summation noise.
    const double noise_floor = 10.0 * std::numeric_limits<double>::epsilon() *
                               std::max(1.0, std::abs(loss.nll));

    double t = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      Vector candidate = project_flat(beta + t * direction, m, d);
      const double next_nll =
          accumulate_loss(data, candidate, weights, false, false).nll;
      if (std::isfinite(next_nll) &&
          next_nll <=
              loss.nll + config.armijo_slope * t * slope + noise_floor) {
        beta = std::move(candidate);
        accepted = true;
        break;
      }
      t *= config.line_search_shrink;
    }
    if (!accepted) break;  // no admissible step left; report non-converged

    loss = accumulate_loss(data, beta, weights, true, true);
    if (loss.max_abs_z > max_abs_z) max_abs_z = loss.max_abs_z;
    result.nll_trace.push_back(loss.nll);
    proj_grad = project_flat(loss.grad, m, d);
  }

  result.params = StackedParams::from_flat(beta, m, d);
  result.final_nll = loss.nll;
  result.projected_gradient_norm = proj_grad.lpNorm<Eigen::Infinity>();
  result.iterations = it;
  result.converged = converged;
  result.diagnostics.separation_suspected =
      max_abs_z > kSeparationPredictor;
  return result;
}

}  // namespace detail

// Constrained maximum-likelihood fit. Throws DisconnectedGraphError when the
// comparison graph has more than one component and RankDeficientDesignError
// when the covariate design is rank deficient on the feasible subspace
// (unless config.ridge > 0, the documented escape hatch). A fit that runs
// out of iterations is returned with converged == false, not thrown.
inline FitResult fit(const Dataset& data, const FitConfig& config = {}) {
  validate(data);
  if (data.records.empty()) {
    throw InvalidArgumentError("fit needs at least one comparison");
  }
  if (config.gradient_tolerance <= 0.0) {
    throw InvalidArgumentError("gradient_tolerance must be positive");
  }
  if (config.line_search_shrink <= 0.0 || config.line_search_shrink >= 1.0) {
    throw InvalidArgumentError("line_search_shrink must be in (0,1)");
  }

  const auto components = connected_components(data);
  if (components.size() > 1) {
    throw DisconnectedGraphError(
        "comparison graph has " + std::to_string(components.size()) +
            " components; utilities are not jointly identified",
        components.size());
  }
  const auto rank_report = check_design_rank(data);
  if (data.covariate_dim > 0 && !rank_report.full_rank && config.ridge <= 0) {
    throw RankDeficientDesignError(
        "covariate design rank " + std::to_string(rank_report.rank) +
            " is below the identifiable dimension " +
            std::to_string(rank_report.constrained_dim) +
            "; set ridge > 0 to fit anyway",
        rank_report.rank, rank_report.constrained_dim);
  }

  const auto compiled = detail::compile(data);
  const Matrix basis = nullspace_basis(data.num_models, data.covariate_dim);
  FitResult result = detail::fit_weighted(compiled, nullptr, config, basis);
  result.diagnostics.graph_connected = true;
  result.diagnostics.num_components = 1;
  result.diagnostics.design_full_rank = rank_report.full_rank;
  result.diagnostics.design_rank = rank_report.rank;
  result.diagnostics.design_constrained_dim = rank_report.constrained_dim;
  return result;
}

// Point-estimate ranks at covariate x: 1 + number of strictly better models.
// Tied models share the better rank.
inline std::vector<int> point_ranks(const StackedParams& params,
                                    const Vector& x) {
  const int m = params.num_models();
  std::vector<double> theta(m);
  for (int i = 0; i < m; ++i) theta[i] = utility(params, i, x);
  std::vector<int> ranks(m);
  for (int i = 0; i < m; ++i) {
    int above = 0;
    for (int j = 0; j < m; ++j) {
      if (theta[j] > theta[i]) ++above;
    }
    ranks[i] = 1 + above;
  }
  return ranks;
}

inline std::vector<int> point_ranks(const FitResult& fit_result,
                                    const Vector& x) {
  return point_ranks(fit_result.params, x);
}

}  // namespace rankuq

#endif  // RANKUQ_ESTIMATION_HPP_
