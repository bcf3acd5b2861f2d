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

// Command-line workflows around the rankuq library:
//
//   rankuq fit          ingest comparisons, fit, bootstrap, persist a model
//   rankuq rank         point ranks and rank confidence sets at a covariate
//   rankuq rank-curve   rank sets along a covariate path (CSV for plotting)
//   rankuq extrapolate  limiting ranks and intervals along a direction
//   rankuq coverage     Monte Carlo coverage experiment from a scenario file
//
// Every command is deterministic given its inputs and --seed: re-running
// with the same configuration produces byte-identical result files. Errors
// are reported as a JSON object on stderr with a documented exit code.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rankuq/rankuq.hpp"

namespace {

using rankuq::json;

constexpr int kExitUsage = 2;
constexpr int kExitInput = 3;
constexpr int kExitModel = 4;
constexpr int kExitNumeric = 5;

int exit_code_for(const rankuq::Error& error) {
  const std::string& code = error.code();
  if (code == "ParseError" || code == "UnknownWinnerTag" ||
      code == "MissingCovariate" || code == "IoError") {
    return kExitInput;
  }
  if (code == "FactorizationFailure") return kExitNumeric;
  return kExitModel;
}

void print_error(const std::string& code, const std::string& message) {
  json j;
  j["error"] = {{"code", code}, {"message", message}};
  std::cerr << j.dump() << "\n";
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream out(path);
  if (!out) throw rankuq::IoError("cannot write output file \"" + path + "\"");
  out << content;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(text);
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

rankuq::CovariateSpec parse_covariate_spec(const std::string& arg) {
  rankuq::CovariateSpec spec;
  if (arg.empty() || arg == "none") return spec;
  if (arg == "preset:arena-categories") {
    spec.fields = rankuq::arena_category_preset();
    return spec;
  }
  if (arg.rfind("preset:", 0) == 0) {
    throw rankuq::InvalidArgumentError("unknown covariate preset \"" + arg +
                                       "\"");
  }
  spec.fields = split(arg, ',');
  return spec;
}

rankuq::Vector parse_number_list(const std::string& arg,
                                 const std::string& what) {
  const auto parts = split(arg, ',');
  rankuq::Vector v(parts.size());
  for (std::size_t i = 0; i < parts.size(); ++i) {
    char* endp = nullptr;
    v[i] = std::strtod(parts[i].c_str(), &endp);
    if (endp == parts[i].c_str() || *endp != '\0') {
      throw rankuq::InvalidArgumentError("could not parse " + what +
                                         " entry \"" + parts[i] + "\"");
    }
  }
  return v;
}

// --x accepts "intrinsic"/"zero", "tags:A+B+C" against the model's covariate
// fields, or an inline comma-separated vector.
rankuq::Vector parse_covariate_point(const std::string& arg,
                                     const rankuq::ModelFile& model) {
  const int d = model.covariate_dim;
  if (arg.empty() || arg == "intrinsic" || arg == "zero") {
    return rankuq::Vector::Zero(d);
  }
  if (arg.rfind("tags:", 0) == 0) {
    rankuq::Vector x = rankuq::Vector::Zero(d);
    for (const auto& tag : split(arg.substr(5), '+')) {
      bool found = false;
      for (int k = 0; k < d; ++k) {
        if (model.covariate_fields[k] == tag) {
          x[k] = 1.0;
          found = true;
          break;
        }
      }
      if (!found) {
        throw rankuq::InvalidArgumentError("unknown covariate tag \"" + tag +
                                           "\"");
      }
    }
    return x;
  }
  rankuq::Vector x = parse_number_list(arg, "--x");
  if (x.size() != d) {
    throw rankuq::DimensionError("--x needs " + std::to_string(d) +
                                 " entries");
  }
  return x;
}

json vector_to_json(const rankuq::Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

json rank_set_to_json(const rankuq::RankSet& set,
                      const std::vector<std::string>& names) {
  json j;
  j["model"] = set.model;
  j["name"] = names[set.model];
  j["lo"] = set.lo;
  j["hi"] = set.hi;
  j["n_dominated"] = set.n_dominated;
  j["n_dominating"] = set.n_dominating;
  return j;
}

json intervals_to_json(const rankuq::DifferenceCISet& cis,
                       const std::vector<std::string>& names) {
  json out = json::array();
  for (const auto& interval : cis.intervals) {
    json j;
    j["first"] = names[interval.first];
    j["second"] = names[interval.second];
    j["estimate"] = interval.estimate;
    j["se"] = interval.se;
    j["lo"] = interval.lo;
    j["hi"] = interval.hi;
    switch (rankuq::resolve_pair(interval)) {
      case rankuq::PairResolution::above: j["resolved"] = "above"; break;
      case rankuq::PairResolution::below: j["resolved"] = "below"; break;
      case rankuq::PairResolution::unresolved:
        j["resolved"] = "unresolved";
        break;
    }
    out.push_back(j);
  }
  return out;
}

struct CommonOptions {
  double alpha = 0.05;
  int draws = 100000;
  std::uint64_t seed = 0;
  std::string format = "json";
  std::string out;
};

void add_common(CLI::App* cmd, CommonOptions* opts,
                bool with_format = true) {
  cmd->add_option("--alpha", opts->alpha, "significance level (default 0.05)");
  cmd->add_option("--draws", opts->draws,
                  "Gaussian draws for critical values (default 100000)");
  cmd->add_option("--seed", opts->seed, "master seed (default 0)");
  if (with_format) {
    cmd->add_option("--format", opts->format, "output format")
        ->check(CLI::IsMember({"json", "text", "csv"}));
  }
  cmd->add_option("--out", opts->out, "output file (default stdout)");
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

struct FitOptions {
  std::string input;
  std::string input_format = "jsonl";
  std::string covariates;
  std::string model_out;
  int bootstrap = 500;
  std::uint64_t seed = 0;
  int max_iterations = 200;
  double tolerance = 1e-8;
  double ridge = 0.0;
  std::string out;
};

int run_fit(const FitOptions& opts) {
  const auto spec = parse_covariate_spec(opts.covariates);
  const auto format = opts.input_format == "csv" ? rankuq::InputFormat::csv
                                                 : rankuq::InputFormat::jsonl;
  const auto loaded = rankuq::load_comparisons(opts.input, format, spec);

  rankuq::FitConfig config;
  config.max_iterations = opts.max_iterations;
  config.gradient_tolerance = opts.tolerance;
  config.ridge = opts.ridge;
  const auto fit = rankuq::fit(loaded.dataset, config);

  rankuq::ModelFile model;
  model.num_models = loaded.dataset.num_models;
  model.covariate_dim = loaded.dataset.covariate_dim;
  model.model_names = loaded.dataset.model_names;
  model.covariate_fields = spec.fields;
  model.fit = fit;
  model.data_fingerprint = rankuq::dataset_fingerprint(loaded.dataset);
  model.num_records = loaded.dataset.num_records();
  if (opts.bootstrap > 0) {
    model.covariance = rankuq::bootstrap_covariance(
        loaded.dataset, config, opts.bootstrap, opts.seed, &fit);
  }
  rankuq::save_model_file(model, opts.model_out);

  json summary;
  summary["model_file"] = opts.model_out;
  summary["ingestion"] = {{"rows_read", loaded.report.rows_read},
                          {"records", loaded.report.records},
                          {"dropped_ties", loaded.report.dropped_ties},
                          {"unknown_tags", loaded.report.unknown_tags},
                          {"num_models", loaded.report.num_models},
                          {"covariate_dim", loaded.report.covariate_dim}};
  summary["fit"] = {{"converged", fit.converged},
                    {"iterations", fit.iterations},
                    {"final_nll", fit.final_nll},
                    {"projected_gradient_norm", fit.projected_gradient_norm},
                    {"separation_suspected",
                     fit.diagnostics.separation_suspected}};
  if (model.covariance.has_value()) {
    summary["bootstrap"] = {{"replicates", model.covariance->replicates},
                            {"used", model.covariance->used},
                            {"dropped", model.covariance->dropped}};
  }
  write_output(opts.out, summary.dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------------------
// rank
// ---------------------------------------------------------------------------

const rankuq::CovarianceEstimate& require_covariance(
    const rankuq::ModelFile& model) {
  if (!model.covariance.has_value()) {
    throw rankuq::InvalidArgumentError(
        "model file has no bootstrap covariance; rerun fit with --bootstrap");
  }
  return *model.covariance;
}

std::string format_rank_cell(int rank, const rankuq::RankSet& set) {
  std::ostringstream os;
  os << rank << " [" << set.lo << "," << set.hi << "]";
  return os.str();
}

int run_rank(const std::string& model_path, const std::string& x_arg,
             const std::string& scope, const CommonOptions& common) {
  const auto model = rankuq::load_model_file(model_path);
  const auto& sigma = require_covariance(model);
  const rankuq::Vector x = parse_covariate_point(x_arg, model);
  const bool intrinsic = x.size() == 0 || x.isZero(0.0);

  const auto ranks = rankuq::point_ranks(model.fit, x);
  std::vector<rankuq::RankSet> marginal, simultaneous;
  if (scope == "marginal" || scope == "both") {
    for (int j = 0; j < model.num_models; ++j) {
      marginal.push_back(rankuq::marginal_rank_set(
          model.fit, sigma, x, j, common.alpha, common.draws, common.seed));
    }
  }
  if (scope == "simultaneous" || scope == "both") {
    simultaneous = rankuq::simultaneous_rank_sets(
        model.fit, sigma, x, common.alpha, common.draws, common.seed);
  }

  if (common.format == "text") {
    std::ostringstream os;
    os << "x = (";
    for (int k = 0; k < x.size(); ++k) os << (k ? "," : "") << x[k];
    os << ")";
    if (intrinsic) os << "  [intrinsic]";
    os << "\n";
    std::size_t width = 5;
    for (const auto& n : model.model_names) width = std::max(width, n.size());
    char buffer[128];
    os << std::string(width + 2, ' ');
    std::snprintf(buffer, sizeof(buffer), "%-14s%-14s\n",
                  marginal.empty() ? "" : "marginal",
                  simultaneous.empty() ? "" : "simultaneous");
    os << buffer;
    // Models listed by point rank; each cell is "rank [lo,hi]".
    std::vector<int> order(model.num_models);
    for (int j = 0; j < model.num_models; ++j) order[j] = j;
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return ranks[a] < ranks[b]; });
    for (const int j : order) {
      os << model.model_names[j]
         << std::string(width + 2 - model.model_names[j].size(), ' ');
      if (!marginal.empty()) {
        std::snprintf(buffer, sizeof(buffer), "%-14s",
                      format_rank_cell(ranks[j], marginal[j]).c_str());
        os << buffer;
      }
      if (!simultaneous.empty()) {
        std::snprintf(buffer, sizeof(buffer), "%-14s",
                      format_rank_cell(ranks[j], simultaneous[j]).c_str());
        os << buffer;
      }
      os << "\n";
    }
    write_output(common.out, os.str());
    return 0;
  }

  json j;
  j["x"] = vector_to_json(x);
  j["intrinsic"] = intrinsic;
  j["alpha"] = common.alpha;
  j["draws"] = common.draws;
  j["seed"] = common.seed;
  j["models"] = model.model_names;
  j["point_ranks"] = ranks;
  if (!marginal.empty()) {
    json sets = json::array();
    for (const auto& set : marginal) {
      sets.push_back(rank_set_to_json(set, model.model_names));
    }
    j["marginal"] = sets;
  }
  if (!simultaneous.empty()) {
    json sets = json::array();
    for (const auto& set : simultaneous) {
      sets.push_back(rank_set_to_json(set, model.model_names));
    }
    j["simultaneous"] = sets;
  }
  write_output(common.out, j.dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------------------
// rank-curve
// ---------------------------------------------------------------------------

int run_rank_curve(const std::string& model_path, const std::string& grid,
                   const std::string& path_file, const std::string& scope,
                   const CommonOptions& common) {
  const auto model = rankuq::load_model_file(model_path);
  const auto& sigma = require_covariance(model);

  std::vector<rankuq::Vector> path;
  if (!grid.empty()) {
    if (model.covariate_dim != 1) {
      throw rankuq::InvalidArgumentError(
          "--grid is for 1-dimensional covariates; use --path");
    }
    const auto parts = split(grid, ':');
    if (parts.size() != 3) {
      throw rankuq::InvalidArgumentError("--grid must be lo:hi:count");
    }
    const double lo = std::stod(parts[0]);
    const double hi = std::stod(parts[1]);
    const int count = std::stoi(parts[2]);
    if (count < 1) {
      throw rankuq::InvalidArgumentError("--grid count must be >= 1");
    }
    for (int i = 0; i < count; ++i) {
      rankuq::Vector x(1);
      x[0] = count == 1 ? lo : lo + (hi - lo) * i / (count - 1);
      path.push_back(x);
    }
  } else if (!path_file.empty()) {
    std::ifstream in(path_file);
    if (!in) {
      throw rankuq::IoError("cannot open path file \"" + path_file + "\"");
    }
    std::string line;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      rankuq::Vector x = parse_number_list(line, "path row");
      if (x.size() != model.covariate_dim) {
        throw rankuq::DimensionError("path row has wrong length");
      }
      path.push_back(x);
    }
  } else {
    throw rankuq::InvalidArgumentError("rank-curve needs --grid or --path");
  }

  const auto curve_scope = scope == "marginal" ? rankuq::RankScope::marginal
                                               : rankuq::RankScope::simultaneous;
  const auto curve =
      rankuq::rank_curve(model.fit, sigma, path, common.alpha, curve_scope,
                         common.draws, common.seed);

  std::ostringstream os;
  for (int k = 0; k < model.covariate_dim; ++k) os << "x" << k << ",";
  os << "model,name,point_rank,set_lo,set_hi\n";
  for (const auto& point : curve) {
    for (const auto& set : point.rank_sets) {
      for (int k = 0; k < model.covariate_dim; ++k) os << point.x[k] << ",";
      os << set.model << "," << model.model_names[set.model] << ","
         << point.point_ranks[set.model] << "," << set.lo << "," << set.hi
         << "\n";
    }
  }
  write_output(common.out, os.str());
  return 0;
}

// ---------------------------------------------------------------------------
// extrapolate
// ---------------------------------------------------------------------------

int run_extrapolate(const std::string& model_path,
                    const std::string& direction,
                    const CommonOptions& common) {
  const auto model = rankuq::load_model_file(model_path);
  const auto& sigma = require_covariance(model);
  const rankuq::Vector v = parse_number_list(direction, "--direction");
  if (v.size() != model.covariate_dim) {
    throw rankuq::DimensionError("--direction needs " +
                                 std::to_string(model.covariate_dim) +
                                 " entries");
  }
  const auto result = rankuq::extrapolate(model.fit, sigma, v, common.alpha,
                                          common.draws, common.seed);

  if (common.format == "text") {
    std::ostringstream os;
    os << "direction v = (";
    for (int k = 0; k < v.size(); ++k) os << (k ? "," : "") << v[k];
    os << ")\n";
    for (int j = 0; j < model.num_models; ++j) {
      os << model.model_names[j] << ": limiting rank "
         << result.ranks.ranks[j];
      for (const auto& set : result.rank_sets) {
        if (set.model == j) {
          os << " [" << set.lo << "," << set.hi << "]";
        }
      }
      os << "\n";
    }
    if (!result.ranks.all_distinct) {
      os << "warning: some slope projections are numerically tied\n";
    }
    write_output(common.out, os.str());
    return 0;
  }

  json j;
  j["direction"] = vector_to_json(v);
  j["alpha"] = common.alpha;
  j["draws"] = common.draws;
  j["seed"] = common.seed;
  j["models"] = model.model_names;
  j["limiting_ranks"] = result.ranks.ranks;
  j["all_projections_distinct"] = result.ranks.all_distinct;
  json tied = json::array();
  for (const auto& [a, b] : result.ranks.tied_pairs) {
    tied.push_back({{"first", a}, {"second", b}});
  }
  j["tied_pairs"] = tied;
  j["limiting_intervals"] = intervals_to_json(result.intervals,
                                              model.model_names);
  json sets = json::array();
  for (const auto& set : result.rank_sets) {
    sets.push_back(rank_set_to_json(set, model.model_names));
  }
  j["limiting_rank_sets"] = sets;
  write_output(common.out, j.dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------------------
// coverage
// ---------------------------------------------------------------------------

int run_coverage_cmd(const std::string& scenario_path, int reps,
                     const std::string& eval_x_arg, int bootstrap,
                     bool seed_given, const CommonOptions& common) {
  std::ifstream in(scenario_path);
  if (!in) {
    throw rankuq::IoError("cannot open scenario file \"" + scenario_path +
                          "\"");
  }
  json sj = json::parse(in, nullptr, false);
  if (sj.is_discarded()) {
    throw rankuq::IoError("scenario file is not valid JSON");
  }
  rankuq::Scenario scenario = rankuq::scenario_from_json(sj);
  if (seed_given) scenario.seed = common.seed;

  rankuq::Vector eval_x;
  if (eval_x_arg.empty() || eval_x_arg == "intrinsic" ||
      eval_x_arg == "zero") {
    eval_x = rankuq::Vector::Zero(scenario.covariate_dim);
  } else {
    eval_x = parse_number_list(eval_x_arg, "--eval-x");
  }

  rankuq::CoverageConfig config;
  config.bootstrap_replicates = bootstrap;
  config.gaussian_draws = common.draws;
  config.progress = [reps](int rep) {
    if ((rep + 1) % 10 == 0 || rep + 1 == reps) {
      std::cerr << "rep " << (rep + 1) << "/" << reps << "\n";
    }
  };
  const auto report =
      rankuq::run_coverage(scenario, reps, common.alpha, eval_x, config);
  write_output(common.out, rankuq::coverage_report_to_json(report).dump(2) +
                               "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"contextual pairwise-preference ranking with uncertainty"};
  app.require_subcommand(1);

  FitOptions fit_opts;
  auto* fit_cmd = app.add_subcommand("fit", "fit a model from comparisons");
  fit_cmd->add_option("--input", fit_opts.input, "comparisons file")
      ->required();
  fit_cmd->add_option("--input-format", fit_opts.input_format,
                      "input format")
      ->check(CLI::IsMember({"jsonl", "csv"}));
  fit_cmd->add_option("--covariates", fit_opts.covariates,
                      "comma-separated covariate fields, "
                      "preset:arena-categories, or none");
  fit_cmd->add_option("--bootstrap", fit_opts.bootstrap,
                      "bootstrap replicates (0 disables)");
  fit_cmd->add_option("--seed", fit_opts.seed, "bootstrap seed");
  fit_cmd->add_option("--max-iterations", fit_opts.max_iterations,
                      "Newton iteration cap");
  fit_cmd->add_option("--tolerance", fit_opts.tolerance,
                      "projected-gradient tolerance");
  fit_cmd->add_option("--ridge", fit_opts.ridge,
                      "Hessian ridge for rank-deficient designs");
  fit_cmd->add_option("--model-out", fit_opts.model_out, "model file to write")
      ->required();
  fit_cmd->add_option("--out", fit_opts.out, "summary output (default stdout)");

  CommonOptions rank_common;
  std::string rank_model, rank_x = "intrinsic", rank_scope = "both";
  auto* rank_cmd = app.add_subcommand("rank", "rank sets at a covariate");
  rank_cmd->add_option("--model", rank_model, "model file")->required();
  rank_cmd->add_option("--x", rank_x,
                       "covariate: comma list, intrinsic, or tags:A+B");
  rank_cmd->add_option("--scope", rank_scope, "which sets to compute")
      ->check(CLI::IsMember({"marginal", "simultaneous", "both"}));
  add_common(rank_cmd, &rank_common);

  CommonOptions curve_common;
  std::string curve_model, curve_grid, curve_path, curve_scope = "simultaneous";
  auto* curve_cmd =
      app.add_subcommand("rank-curve", "rank sets along a covariate path");
  curve_cmd->add_option("--model", curve_model, "model file")->required();
  curve_cmd->add_option("--grid", curve_grid, "lo:hi:count (1-d covariate)");
  curve_cmd->add_option("--path", curve_path,
                        "file with one covariate vector per line");
  curve_cmd->add_option("--scope", curve_scope, "rank set scope")
      ->check(CLI::IsMember({"marginal", "simultaneous"}));
  add_common(curve_cmd, &curve_common, false);

  CommonOptions extra_common;
  std::string extra_model, extra_direction;
  auto* extra_cmd =
      app.add_subcommand("extrapolate", "limiting ranks along a direction");
  extra_cmd->add_option("--model", extra_model, "model file")->required();
  extra_cmd->add_option("--direction", extra_direction, "direction vector")
      ->required();
  add_common(extra_cmd, &extra_common);

  CommonOptions cov_common;
  cov_common.draws = 20000;
  std::string cov_scenario, cov_eval_x;
  int cov_reps = 300, cov_bootstrap = 500;
  auto* cov_cmd =
      app.add_subcommand("coverage", "Monte Carlo coverage experiment");
  cov_cmd->add_option("--scenario", cov_scenario, "scenario JSON file")
      ->required();
  cov_cmd->add_option("--reps", cov_reps, "Monte Carlo replications");
  cov_cmd->add_option("--eval-x", cov_eval_x, "evaluation covariate");
  cov_cmd->add_option("--bootstrap", cov_bootstrap,
                      "bootstrap replicates per replication");
  auto* cov_seed_opt =
      cov_cmd->add_option("--seed", cov_common.seed,
                          "override the scenario seed");
  cov_cmd->add_option("--alpha", cov_common.alpha, "significance level");
  cov_cmd->add_option("--draws", cov_common.draws, "Gaussian draws");
  cov_cmd->add_option("--out", cov_common.out, "report file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("UsageError", e.what());
    return kExitUsage;
  }

  try {
    if (fit_cmd->parsed()) return run_fit(fit_opts);
    if (rank_cmd->parsed()) {
      return run_rank(rank_model, rank_x, rank_scope, rank_common);
    }
    if (curve_cmd->parsed()) {
      return run_rank_curve(curve_model, curve_grid, curve_path, curve_scope,
                            curve_common);
    }
    if (extra_cmd->parsed()) {
      return run_extrapolate(extra_model, extra_direction, extra_common);
    }
    if (cov_cmd->parsed()) {
      return run_coverage_cmd(cov_scenario, cov_reps, cov_eval_x,
                              cov_bootstrap, cov_seed_opt->count() > 0,
                              cov_common);
    }
  } catch (const rankuq::Error& e) {
    print_error(e.code(), e.what());
    return exit_code_for(e);
  } catch (const std::exception& e) {
    print_error("InternalError", e.what());
    return 1;
  }
  return 0;
}
