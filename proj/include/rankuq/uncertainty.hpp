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

// Uncertainty quantification for fitted utilities.
//
// The covariance of the fitted parameter vector is estimated by a pairs
// bootstrap: resample comparisons with replacement, refit, take the sample
// covariance of the replicate parameter vectors. Simultaneous confidence
// intervals for utility differences over a pair set S then use max-type
// statistics: draw from the Gaussian implied by the bootstrap covariance,
// standardize each pair coordinate by its standard error, take the max
// (signed for one-sided kinds, absolute for the symmetric kind), and use
// an empirical quantile as the shared critical value. The result is a
// rectangular set: a product of per-pair intervals.
//
// For an ordered pair (a, b) the interval targets theta_a(x) - theta_b(x),
// first minus second; an interval above zero resolves a ahead of b.
//
// Gaussian draws are made in parameter space (one Cholesky factor of the
// bootstrap covariance, shared by every pair) from counter-based streams
// keyed only by (seed, kind, block). Two calls with the same seed therefore
// share draws pair by pair, which makes critical values monotone across
// nested pair sets and makes the finite-covariate and extrapolation
// constructions comparable under a common seed.

#ifndef RANKUQ_UNCERTAINTY_HPP_
#define RANKUQ_UNCERTAINTY_HPP_

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "rankuq/errors.hpp"
#include "rankuq/estimation.hpp"
#include "rankuq/model.hpp"
#include "rankuq/parallel.hpp"
#include "rankuq/rng.hpp"

namespace rankuq {

struct CovarianceEstimate {
  Matrix sigma;  // (M + M*d)^2 covariance of the fitted parameter vector
  int num_models = 0;
  int covariate_dim = 0;
  int replicates = 0;  // requested B
  int used = 0;        // replicates that converged on a connected resample
  int dropped = 0;
  std::uint64_t seed = 0;
  std::string method = "pairs-bootstrap";
};

// Ordered pairs of interest at a fixed covariate.
struct PairSet {
  std::vector<std::pair<int, int>> pairs;
  Vector x;
};

inline PairSet all_ordered_pairs(int num_models, const Vector& x) {
  PairSet s;
  s.x = x;
  for (int a = 0; a < num_models; ++a) {
    for (int b = 0; b < num_models; ++b) {
      if (a != b) s.pairs.emplace_back(a, b);
    }
  }
  return s;
}

// S_j = {(j, k) : k != j}.
inline PairSet pairs_for_model(int j, int num_models, const Vector& x) {
  PairSet s;
  s.x = x;
  for (int k = 0; k < num_models; ++k) {
    if (k != j) s.pairs.emplace_back(j, k);
  }
  return s;
}

inline void validate_pair_set(const PairSet& set, int num_models,
                              int covariate_dim) {
  if (set.pairs.empty()) {
    throw InvalidArgumentError("pair set is empty");
  }
  if (set.x.size() != covariate_dim) {
    throw DimensionError("pair set covariate length does not match model");
  }
  std::set<std::pair<int, int>> seen;
  for (const auto& [a, b] : set.pairs) {
    if (a < 0 || a >= num_models || b < 0 || b >= num_models) {
      throw IndexError("pair set index out of range");
    }
    if (a == b) {
      throw InvalidArgumentError("pair set contains a self pair");
    }
    if (!seen.insert({a, b}).second) {
      throw InvalidArgumentError("pair set contains a duplicate pair");
    }
  }
}

// Design row whose inner product with the stacked parameters gives
// theta_a(x) - theta_b(x).
inline DesignVector pair_difference_design(int a, int b, const Vector& x,
                                           int num_models) {
  return build_design_vector(b, a, x, num_models);
}

enum class CiKind { lower, upper, symm, equiv };

inline const char* to_string(CiKind kind) {
  switch (kind) {
    case CiKind::lower: return "lower";
    case CiKind::upper: return "upper";
    case CiKind::symm: return "symm";
    case CiKind::equiv: return "equiv";
  }
  return "?";
}

struct PairInterval {
  int first = 0;
  int second = 0;
  double lo = 0.0;
  double hi = 0.0;
  double estimate = 0.0;
  double se = 0.0;
};

// Rectangular simultaneous confidence set: exactly the product of the
// per-pair intervals.
struct DifferenceCISet {
  std::vector<PairInterval> intervals;
  CiKind kind = CiKind::symm;
  double level = 0.0;  // 1 - alpha
  double crit_lower = std::numeric_limits<double>::quiet_NaN();
  double crit_upper = std::numeric_limits<double>::quiet_NaN();
  double crit_symm = std::numeric_limits<double>::quiet_NaN();
  Vector x;
};

enum class PairResolution { above, below, unresolved };

// Sign of a resolved interval: above if it lies in (0, inf), below if in
// (-inf, 0), unresolved if it contains zero.
inline PairResolution resolve_pair(double lo, double hi) {
  if (lo > hi) {
    throw InvalidArgumentError("interval with lo > hi");
  }
  if (lo > 0.0) return PairResolution::above;
  if (hi < 0.0) return PairResolution::below;
  return PairResolution::unresolved;
}

inline PairResolution resolve_pair(const PairInterval& interval) {
  return resolve_pair(interval.lo, interval.hi);
}

inline double standard_error(const CovarianceEstimate& sigma, int i, int j,
                             const Vector& x) {
  const DesignVector w = pair_difference_design(i, j, x, sigma.num_models);
  const double q = w.dot(sigma.sigma * w);
  if (q < -1e-12) {
    throw NegativeVarianceError(
        "covariance quadratic form is negative: " + std::to_string(q));
  }
  return std::sqrt(std::max(q, 0.0));
}

namespace detail {

inline constexpr std::uint64_t kSaltBootstrap = 0x626f6f74ULL;   // "boot"
inline constexpr std::uint64_t kSaltGaussLower = 0x676c6fULL;    // "glo"
inline constexpr std::uint64_t kSaltGaussUpper = 0x676870ULL;    // "ghp"
inline constexpr std::uint64_t kSaltGaussSymm = 0x6773796dULL;   // "gsym"
inline constexpr int kGaussBlock = 4096;

inline std::uint64_t gauss_salt(CiKind kind) {
  switch (kind) {
    case CiKind::lower: return kSaltGaussLower;
    case CiKind::upper: return kSaltGaussUpper;
    case CiKind::symm: return kSaltGaussSymm;
    default:
      throw InvalidArgumentError("no Gaussian stream for the equiv kind");
  }
}

// Cholesky factor of the bootstrap covariance, with the documented 1e-12
// diagonal jitter when the matrix is numerically singular.
inline Matrix covariance_factor(const Matrix& sigma) {
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Matrix jittered = sigma;
  jittered.diagonal().array() += 1e-12;
  Eigen::LLT<Matrix> retry(jittered);
  if (retry.info() == Eigen::Success) return retry.matrixL();
  throw FactorizationError(
      "Cholesky factorization of the covariance failed even with jitter");
}

// (1-alpha) empirical quantile (order statistic ceil((1-alpha)*draws)) of
// the max statistic over standardized Gaussian coordinates. `projections`
// holds one row per pair: (L^T w_p) / se_p for the covariance factor L, so
// a pair's coordinate stream does not depend on which set it appears in.
inline double max_stat_quantile(const Matrix& projections, double alpha,
                                CiKind kind, int draws, std::uint64_t seed) {
  const int num_pairs = static_cast<int>(projections.rows());
  const int dim = static_cast<int>(projections.cols());
  const std::uint64_t salt = gauss_salt(kind);
  const int num_blocks = (draws + kGaussBlock - 1) / kGaussBlock;
  std::vector<double> stats(draws);

  parallel_for(num_blocks, [&](int block) {
    const int begin = block * kGaussBlock;
    const int end = std::min(draws, begin + kGaussBlock);
    rng::Stream stream(rng::derive_key(seed, salt, block));
    Matrix z(dim, end - begin);
    for (int t = 0; t < end - begin; ++t) {
      int k = 0;
      while (k + 1 < dim) {
        stream.normal_pair(z(k, t), z(k + 1, t));
        k += 2;
      }
      if (k < dim) z(k, t) = stream.normal();
    }
    Matrix coords = projections * z;  // num_pairs x block
    for (int t = 0; t < end - begin; ++t) {
      double stat = -std::numeric_limits<double>::infinity();
      for (int p = 0; p < num_pairs; ++p) {
        double v = coords(p, t);
        if (kind == CiKind::symm) v = std::abs(v);
        if (kind == CiKind::upper) v = -v;
        if (v > stat) stat = v;
      }
      stats[begin + t] = stat;
    }
  });

  int q = static_cast<int>(std::ceil((1.0 - alpha) * draws));
  q = std::clamp(q, 1, draws);
  std::nth_element(stats.begin(), stats.begin() + (q - 1), stats.end());
  return stats[q - 1];
}

}  // namespace detail

// Pairs-bootstrap covariance of the fitted parameter vector. Resamples the
// L comparisons with replacement B times (as multinomial record weights),
// refits each replicate warm-started at the base fit, and returns the
// sample covariance of the replicate parameter vectors. Replicates whose
// resample disconnects the comparison graph or whose refit fails to
// converge are dropped; more than 10% dropped is an error.
inline CovarianceEstimate bootstrap_covariance(
    const Dataset& data, const FitConfig& config, int replicates,
    std::uint64_t seed, const FitResult* base_fit = nullptr) {
  if (replicates < 2) {
    throw InvalidArgumentError("bootstrap needs at least 2 replicates");
  }
  FitResult local_base;
  if (base_fit == nullptr) {
    local_base = fit(data, config);
    base_fit = &local_base;
  }
  if (!base_fit->converged) {
    throw InvalidArgumentError(
        "bootstrap_covariance requires a converged base fit");
  }

  const int m = data.num_models;
  const int d = data.covariate_dim;
  const int num_records = data.num_records();
  const auto compiled = detail::compile(data);
  const Matrix basis = nullspace_basis(m, d);
  FitConfig warm = config;
  warm.initial_params = base_fit->params;

  const int dim = m + m * d;
  Matrix draws(dim, replicates);
  std::vector<char> ok(replicates, 0);

  parallel_for(replicates, [&](int r) {
    rng::Stream stream(rng::derive_key(seed, detail::kSaltBootstrap, r));
    std::vector<double> weights(num_records, 0.0);
    for (int l = 0; l < num_records; ++l) {
      weights[stream.below(num_records)] += 1.0;
    }
    // Connectivity of the resampled comparison graph.
    std::vector<int> parent(m);
    for (int v = 0; v < m; ++v) parent[v] = v;
    auto find = [&](int v) {
      while (parent[v] != v) {
        parent[v] = parent[parent[v]];
        v = parent[v];
      }
      return v;
    };
    int merges = 0;
    for (int l = 0; l < num_records; ++l) {
      if (weights[l] == 0.0) continue;
      int a = find(compiled.left[l]);
      int b = find(compiled.right[l]);
      if (a != b) {
        parent[std::max(a, b)] = std::min(a, b);
        ++merges;
      }
    }
    if (merges != m - 1) return;  // disconnected resample
    try {
      FitResult replicate =
          detail::fit_weighted(compiled, weights.data(), warm, basis);
      if (!replicate.converged) return;
      draws.col(r) = replicate.params.flatten();
      ok[r] = 1;
    } catch (const Error&) {
      // dropped and counted below
    }
  });

  int used = 0;
  Vector mean = Vector::Zero(dim);
  for (int r = 0; r < replicates; ++r) {
    if (ok[r]) {
      mean += draws.col(r);
      ++used;
    }
  }
  const int dropped = replicates - used;
  if (dropped * 10 > replicates) {
    throw TooManyFailedReplicatesError(
        std::to_string(dropped) + " of " + std::to_string(replicates) +
            " bootstrap replicates failed",
        dropped, replicates);
  }
  mean /= used;
  Matrix sigma = Matrix::Zero(dim, dim);
  for (int r = 0; r < replicates; ++r) {
    if (!ok[r]) continue;
    const Vector centered = draws.col(r) - mean;
    sigma.noalias() += centered * centered.transpose();
  }
  sigma /= (used - 1);

  CovarianceEstimate estimate;
  estimate.sigma = std::move(sigma);
  estimate.num_models = m;
  estimate.covariate_dim = d;
  estimate.replicates = replicates;
  estimate.used = used;
  estimate.dropped = dropped;
  estimate.seed = seed;
  return estimate;
}

// Shared critical value for a pair set. Every pair must have a positive
// standard error at the set's covariate.
inline double critical_value(const CovarianceEstimate& sigma,
                             const PairSet& pairs, double alpha, CiKind kind,
                             int draws, std::uint64_t seed) {
  if (kind == CiKind::equiv) {
    throw InvalidArgumentError(
        "equiv sets are built from lower and upper critical values");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw InvalidArgumentError("alpha must be in (0,1)");
  }
  if (draws < 1) {
    throw InvalidArgumentError("draws must be positive");
  }
  validate_pair_set(pairs, sigma.num_models, sigma.covariate_dim);

  const int dim = sigma.num_models * (1 + sigma.covariate_dim);
  const Matrix factor = detail::covariance_factor(sigma.sigma);
  Matrix projections(static_cast<int>(pairs.pairs.size()), dim);
  for (std::size_t p = 0; p < pairs.pairs.size(); ++p) {
    const auto& [a, b] = pairs.pairs[p];
    const double se = standard_error(sigma, a, b, pairs.x);
    if (se <= 0.0) {
      throw DegeneratePairError("pair (" + std::to_string(a) + "," +
                                std::to_string(b) +
                                ") has zero standard error");
    }
    const DesignVector w =
        pair_difference_design(a, b, pairs.x, sigma.num_models);
    projections.row(p) = (factor.transpose() * w).transpose() / se;
  }
  return detail::max_stat_quantile(projections, alpha, kind, draws, seed);
}

namespace detail {

// Interval construction shared by the finite-covariate and extrapolation
// paths. `designs` holds one difference-design row per pair and `estimates`
// the corresponding point differences. Pairs with zero standard error get
// the point-interval limit and do not enter the max statistic.
inline DifferenceCISet build_difference_cis(
    const std::vector<std::pair<int, int>>& pairs, const Matrix& designs,
    const Vector& estimates, const CovarianceEstimate& sigma, double alpha,
    CiKind kind, int draws, std::uint64_t seed) {
  const int num_pairs = static_cast<int>(pairs.size());
  const int dim = static_cast<int>(designs.cols());

  Vector ses(num_pairs);
  int active = 0;
  for (int p = 0; p < num_pairs; ++p) {
    const double q = designs.row(p).dot(sigma.sigma * designs.row(p).transpose());
    if (q < -1e-12) {
      throw NegativeVarianceError("covariance quadratic form is negative");
    }
    ses[p] = std::sqrt(std::max(q, 0.0));
    if (ses[p] > 0.0) ++active;
  }

  DifferenceCISet out;
  out.kind = kind;
  out.level = 1.0 - alpha;
  out.intervals.resize(num_pairs);

  double crit_lower = 0.0, crit_upper = 0.0, crit_symm = 0.0;
  if (active > 0) {
    const Matrix factor = covariance_factor(sigma.sigma);
    Matrix projections(active, dim);
    int row = 0;
    for (int p = 0; p < num_pairs; ++p) {
      if (ses[p] <= 0.0) continue;
      projections.row(row++) =
          (factor.transpose() * designs.row(p).transpose()).transpose() /
          ses[p];
    }
    switch (kind) {
      case CiKind::lower:
        crit_lower =
            max_stat_quantile(projections, alpha, CiKind::lower, draws, seed);
        break;
      case CiKind::upper:
        crit_upper =
            max_stat_quantile(projections, alpha, CiKind::upper, draws, seed);
        break;
      case CiKind::symm:
        crit_symm =
            max_stat_quantile(projections, alpha, CiKind::symm, draws, seed);
        break;
      case CiKind::equiv:
        crit_lower = max_stat_quantile(projections, alpha / 2, CiKind::lower,
                                       draws, seed);
        crit_upper = max_stat_quantile(projections, alpha / 2, CiKind::upper,
                                       draws, seed);
        break;
    }
  }

  const double inf = std::numeric_limits<double>::infinity();
  for (int p = 0; p < num_pairs; ++p) {
    PairInterval& interval = out.intervals[p];
    interval.first = pairs[p].first;
    interval.second = pairs[p].second;
    interval.estimate = estimates[p];
    interval.se = ses[p];
    switch (kind) {
      case CiKind::lower:
        interval.lo = interval.estimate - crit_lower * interval.se;
        interval.hi = inf;
        break;
      case CiKind::upper:
        interval.lo = -inf;
        interval.hi = interval.estimate + crit_upper * interval.se;
        break;
      case CiKind::symm:
        interval.lo = interval.estimate - crit_symm * interval.se;
        interval.hi = interval.estimate + crit_symm * interval.se;
        break;
      case CiKind::equiv:
        interval.lo = interval.estimate - crit_lower * interval.se;
        interval.hi = interval.estimate + crit_upper * interval.se;
        break;
    }
  }
  if (kind == CiKind::lower || kind == CiKind::equiv) {
    out.crit_lower = crit_lower;
  }
  if (kind == CiKind::upper || kind == CiKind::equiv) {
    out.crit_upper = crit_upper;
  }
  if (kind == CiKind::symm) out.crit_symm = crit_symm;
  return out;
}

}  // namespace detail

// Rectangular simultaneous confidence intervals for the utility differences
// theta_a(x) - theta_b(x) over the ordered pairs of the set.
inline DifferenceCISet difference_cis(const FitResult& fit_result,
                                      const CovarianceEstimate& sigma,
                                      const PairSet& pairs, double alpha,
                                      CiKind kind, int draws,
                                      std::uint64_t seed) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw InvalidArgumentError("alpha must be in (0,1)");
  }
  if (draws < 1) {
    throw InvalidArgumentError("draws must be positive");
  }
  if (fit_result.params.num_models() != sigma.num_models ||
      fit_result.params.covariate_dim() != sigma.covariate_dim) {
    throw DimensionError("fit and covariance shapes differ");
  }
  validate_pair_set(pairs, sigma.num_models, sigma.covariate_dim);

  const int num_pairs = static_cast<int>(pairs.pairs.size());
  const int dim = sigma.num_models * (1 + sigma.covariate_dim);
  Matrix designs(num_pairs, dim);
  Vector estimates(num_pairs);
  for (int p = 0; p < num_pairs; ++p) {
    const auto& [a, b] = pairs.pairs[p];
    designs.row(p) =
        pair_difference_design(a, b, pairs.x, sigma.num_models).transpose();
    estimates[p] = utility(fit_result.params, a, pairs.x) -
                   utility(fit_result.params, b, pairs.x);
  }
  DifferenceCISet out = detail::build_difference_cis(
      pairs.pairs, designs, estimates, sigma, alpha, kind, draws, seed);
  out.x = pairs.x;
  return out;
}

}  // namespace rankuq

#endif  // RANKUQ_UNCERTAINTY_HPP_
