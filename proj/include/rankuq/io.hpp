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

// Ingestion of arena-style preference dumps (JSONL and CSV), the persisted
// model-file format, and JSON serialization for scenarios and coverage
// reports.
//
// Input rows name two models and a winner tag; ties ("tie", "tie_both_bad")
// are dropped and counted since the preference model has no tie outcome.
// Model names are interned to indices in first-appearance order, and the
// outcome is 1 exactly when the winner is the row's second model (model_b).
// Covariates come either from a "covariates" object (every declared field
// required) or from a "tags" array mapped to 0/1 indicators against the
// declared field order.
//
// Model files are a single JSON document; matrices are embedded as base64
// of their raw little-endian doubles so that a reload is bit-identical.

#ifndef RANKUQ_IO_HPP_
#define RANKUQ_IO_HPP_

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"
#include "rankuq/errors.hpp"
#include "rankuq/estimation.hpp"
#include "rankuq/model.hpp"
#include "rankuq/rng.hpp"
#include "rankuq/simlab.hpp"
#include "rankuq/uncertainty.hpp"

namespace rankuq {

using json = nlohmann::json;

// The ten prompt-category covariates shipped as a named preset, in their
// canonical order.
inline const std::vector<std::string>& arena_category_preset() {
  static const std::vector<std::string> kCategories = {
      "Code",          "Creative Writing", "Complexity",
      "Creativity",    "Domain Knowledge", "Problem Solving",
      "Real World",    "Specificity",      "Technical Accuracy",
      "Math"};
  return kCategories;
}

struct CovariateSpec {
  std::vector<std::string> fields;  // ordered; empty means d = 0

  int dim() const { return static_cast<int>(fields.size()); }
};

struct IngestReport {
  int rows_read = 0;
  int records = 0;
  int dropped_ties = 0;
  int unknown_tags = 0;
  int num_models = 0;
  int covariate_dim = 0;
};

struct LoadResult {
  Dataset dataset;
  IngestReport report;
};

enum class InputFormat { jsonl, csv };

namespace detail {

struct NameInterner {
  std::unordered_map<std::string, int> index;
  std::vector<std::string> names;

  int intern(const std::string& name) {
    auto [it, inserted] = index.try_emplace(name, names.size());
    if (inserted) names.push_back(name);
    return it->second;
  }
};

// winner tag -> outcome (1 = model_b), or nullopt for a tie row.
inline std::optional<int> winner_outcome(const std::string& tag,
                                         std::size_t line) {
  if (tag == "model_a") return 0;
  if (tag == "model_b") return 1;
  if (tag == "tie" || tag == "tie_both_bad") return std::nullopt;
  throw UnknownWinnerError(tag, line);
}

inline Vector covariates_from_object(const json& object,
                                     const CovariateSpec& spec,
                                     std::size_t line) {
  Vector x(spec.dim());
  for (int k = 0; k < spec.dim(); ++k) {
    const auto it = object.find(spec.fields[k]);
    if (it == object.end() || !it->is_number()) {
      throw MissingCovariateError(spec.fields[k], line);
    }
    x[k] = it->get<double>();
    if (!std::isfinite(x[k])) {
      throw ParseError("non-finite covariate \"" + spec.fields[k] + "\"",
                       line);
    }
  }
  return x;
}

inline Vector covariates_from_tags(const json& tags, const CovariateSpec& spec,
                                   std::size_t line, int& unknown_tags) {
  Vector x = Vector::Zero(spec.dim());
  for (const auto& tag : tags) {
    if (!tag.is_string()) {
      throw ParseError("tags entries must be strings", line);
    }
    const std::string name = tag.get<std::string>();
    bool found = false;
    for (int k = 0; k < spec.dim(); ++k) {
      if (spec.fields[k] == name) {
        x[k] = 1.0;
        found = true;
        break;
      }
    }
    if (!found) ++unknown_tags;
  }
  return x;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    // trim surrounding whitespace
    const auto begin = field.find_first_not_of(" \t\r");
    const auto end = field.find_last_not_of(" \t\r");
    out.push_back(begin == std::string::npos
                      ? std::string()
                      : field.substr(begin, end - begin + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace detail

inline LoadResult load_comparisons_stream(std::istream& in,
                                          InputFormat format,
                                          const CovariateSpec& spec) {
  LoadResult result;
  result.dataset.covariate_dim = spec.dim();
  result.report.covariate_dim = spec.dim();
  detail::NameInterner interner;

  std::string line;
  std::size_t line_number = 0;

  std::vector<std::string> header;
  int col_model_a = -1, col_model_b = -1, col_winner = -1;
  std::vector<int> col_covariate(spec.dim(), -1);

  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

    if (format == InputFormat::csv && header.empty()) {
      header = detail::split_csv_line(line);
      for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == "model_a") col_model_a = static_cast<int>(c);
        if (header[c] == "model_b") col_model_b = static_cast<int>(c);
        if (header[c] == "winner") col_winner = static_cast<int>(c);
        for (int k = 0; k < spec.dim(); ++k) {
          if (header[c] == spec.fields[k]) col_covariate[k] = c;
        }
      }
      if (col_model_a < 0 || col_model_b < 0 || col_winner < 0) {
        throw ParseError("csv header needs model_a, model_b, winner columns",
                         line_number);
      }
      for (int k = 0; k < spec.dim(); ++k) {
        if (col_covariate[k] < 0) {
          throw MissingCovariateError(spec.fields[k], line_number);
        }
      }
      continue;
    }

    ++result.report.rows_read;
    std::string model_a, model_b, winner_tag;
    Vector x(spec.dim());

    if (format == InputFormat::jsonl) {
      json row = json::parse(line, nullptr, false);
      if (row.is_discarded() || !row.is_object()) {
        throw ParseError("invalid JSON object", line_number);
      }
      if (!row.contains("model_a") || !row["model_a"].is_string() ||
          !row.contains("model_b") || !row["model_b"].is_string()) {
        throw ParseError("rows need string model_a and model_b", line_number);
      }
      if (!row.contains("winner") || !row["winner"].is_string()) {
        throw ParseError("rows need a string winner", line_number);
      }
      model_a = row["model_a"].get<std::string>();
      model_b = row["model_b"].get<std::string>();
      winner_tag = row["winner"].get<std::string>();
      if (spec.dim() > 0) {
        if (row.contains("covariates") && row["covariates"].is_object()) {
          x = detail::covariates_from_object(row["covariates"], spec,
                                             line_number);
        } else if (row.contains("tags") && row["tags"].is_array()) {
          x = detail::covariates_from_tags(row["tags"], spec, line_number,
                                           result.report.unknown_tags);
        } else {
          throw MissingCovariateError(spec.fields[0], line_number);
        }
      }
    } else {
      const auto fields = detail::split_csv_line(line);
      const auto need = [&](int c) -> const std::string& {
        if (c < 0 || c >= static_cast<int>(fields.size())) {
          throw ParseError("row has fewer columns than the header",
                           line_number);
        }
        return fields[c];
      };
      model_a = need(col_model_a);
      model_b = need(col_model_b);
      winner_tag = need(col_winner);
      for (int k = 0; k < spec.dim(); ++k) {
        const std::string& raw = need(col_covariate[k]);
        if (raw.empty()) {
          throw MissingCovariateError(spec.fields[k], line_number);
        }
        char* endp = nullptr;
        x[k] = std::strtod(raw.c_str(), &endp);
        if (endp == raw.c_str() || *endp != '\0' || !std::isfinite(x[k])) {
          throw ParseError("could not parse covariate \"" + spec.fields[k] +
                               "\" value \"" + raw + "\"",
                           line_number);
        }
      }
    }

    if (model_a.empty() || model_b.empty()) {
      throw ParseError("empty model name", line_number);
    }
    const auto outcome = detail::winner_outcome(winner_tag, line_number);
    if (!outcome.has_value()) {
      ++result.report.dropped_ties;
      continue;
    }
    ComparisonRecord record;
    record.left = interner.intern(model_a);
    record.right = interner.intern(model_b);
    record.covariates = x;
    record.outcome = *outcome;
    if (record.left == record.right) {
      throw ParseError("model compared with itself", line_number);
    }
    result.dataset.records.push_back(std::move(record));
  }

  result.dataset.model_names = interner.names;
  result.dataset.num_models = static_cast<int>(interner.names.size());
  result.report.records = result.dataset.num_records();
  result.report.num_models = result.dataset.num_models;
  return result;
}

inline LoadResult load_comparisons(const std::string& path,
                                   InputFormat format,
                                   const CovariateSpec& spec) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open input file \"" + path + "\"");
  }
  return load_comparisons_stream(in, format, spec);
}

// ---------------------------------------------------------------------------
// base64 of raw doubles, used by the model file for bit-exact round trips.
// ---------------------------------------------------------------------------

namespace detail {

inline const char* b64_alphabet() {
  return "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

inline std::string base64_encode(const unsigned char* data, std::size_t n) {
  const char* alpha = b64_alphabet();
  std::string out;
  out.reserve((n + 2) / 3 * 4);
  for (std::size_t i = 0; i < n; i += 3) {
    unsigned v = data[i] << 16;
    if (i + 1 < n) v |= data[i + 1] << 8;
    if (i + 2 < n) v |= data[i + 2];
    out.push_back(alpha[(v >> 18) & 63]);
    out.push_back(alpha[(v >> 12) & 63]);
    out.push_back(i + 1 < n ? alpha[(v >> 6) & 63] : '=');
    out.push_back(i + 2 < n ? alpha[v & 63] : '=');
  }
  return out;
}

inline std::vector<unsigned char> base64_decode(const std::string& text) {
  int table[256];
  for (int i = 0; i < 256; ++i) table[i] = -1;
  const char* alpha = b64_alphabet();
  for (int i = 0; i < 64; ++i) {
    table[static_cast<unsigned char>(alpha[i])] = i;
  }
  std::vector<unsigned char> out;
  unsigned buffer = 0;
  int bits = 0;
  for (const char ch : text) {
    if (ch == '=' || ch == '\n' || ch == '\r') continue;
    const int v = table[static_cast<unsigned char>(ch)];
    if (v < 0) throw IoError("invalid base64 payload");
    buffer = (buffer << 6) | static_cast<unsigned>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<unsigned char>((buffer >> bits) & 0xff));
    }
  }
  return out;
}

inline std::string encode_doubles(const double* data, std::size_t n) {
  return base64_encode(reinterpret_cast<const unsigned char*>(data),
                       n * sizeof(double));
}

inline std::vector<double> decode_doubles(const std::string& text,
                                          std::size_t expected) {
  const auto bytes = base64_decode(text);
  if (bytes.size() != expected * sizeof(double)) {
    throw IoError("matrix payload has unexpected size");
  }
  std::vector<double> out(expected);
  std::memcpy(out.data(), bytes.data(), bytes.size());
  return out;
}

inline std::string encode_matrix(const Matrix& m) {
  // column-major, Eigen's native layout
  return encode_doubles(m.data(), static_cast<std::size_t>(m.size()));
}

inline Matrix decode_matrix(const std::string& text, int rows, int cols) {
  const auto values =
      decode_doubles(text, static_cast<std::size_t>(rows) * cols);
  Matrix m(rows, cols);
  std::memcpy(m.data(), values.data(), values.size() * sizeof(double));
  return m;
}

inline std::string encode_vector(const Vector& v) {
  return encode_doubles(v.data(), static_cast<std::size_t>(v.size()));
}

inline Vector decode_vector(const std::string& text, int size) {
  const auto values = decode_doubles(text, size);
  Vector v(size);
  std::memcpy(v.data(), values.data(), values.size() * sizeof(double));
  return v;
}

}  // namespace detail

// FNV-1a fingerprint of the dataset contents; stored in the model file so
// downstream commands can tell which data produced a fit.
inline std::uint64_t dataset_fingerprint(const Dataset& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* p, std::size_t n) { h = rng::fnv1a(p, n, h); };
  mix(&data.num_models, sizeof(data.num_models));
  mix(&data.covariate_dim, sizeof(data.covariate_dim));
  for (const auto& name : data.model_names) {
    mix(name.data(), name.size());
  }
  for (const auto& r : data.records) {
    mix(&r.left, sizeof(r.left));
    mix(&r.right, sizeof(r.right));
    mix(&r.outcome, sizeof(r.outcome));
    if (r.covariates.size() > 0) {
      mix(r.covariates.data(), r.covariates.size() * sizeof(double));
    }
  }
  return h;
}

// ---------------------------------------------------------------------------
// Model file
// ---------------------------------------------------------------------------

inline constexpr int kModelFileSchemaVersion = 1;

struct ModelFile {
  int num_models = 0;
  int covariate_dim = 0;
  std::vector<std::string> model_names;
  std::vector<std::string> covariate_fields;
  FitResult fit;
  std::optional<CovarianceEstimate> covariance;
  std::uint64_t data_fingerprint = 0;
  int num_records = 0;
};

inline json model_file_to_json(const ModelFile& model) {
  json j;
  j["schema_version"] = kModelFileSchemaVersion;
  j["num_models"] = model.num_models;
  j["covariate_dim"] = model.covariate_dim;
  j["model_names"] = model.model_names;
  j["covariate_fields"] = model.covariate_fields;
  j["num_records"] = model.num_records;
  {
    std::ostringstream fp;
    fp << std::hex << model.data_fingerprint;
    j["data_fingerprint"] = fp.str();
  }
  json fit;
  fit["intercepts_b64"] = detail::encode_vector(model.fit.params.intercepts);
  fit["slopes_b64"] = detail::encode_matrix(model.fit.params.slopes);
  fit["final_nll"] = model.fit.final_nll;
  fit["projected_gradient_norm"] = model.fit.projected_gradient_norm;
  fit["iterations"] = model.fit.iterations;
  fit["converged"] = model.fit.converged;
  fit["diagnostics"] = {
      {"graph_connected", model.fit.diagnostics.graph_connected},
      {"num_components", model.fit.diagnostics.num_components},
      {"design_full_rank", model.fit.diagnostics.design_full_rank},
      {"design_rank", model.fit.diagnostics.design_rank},
      {"design_constrained_dim", model.fit.diagnostics.design_constrained_dim},
      {"separation_suspected", model.fit.diagnostics.separation_suspected}};
  j["fit"] = fit;
  if (model.covariance.has_value()) {
    const auto& cov = *model.covariance;
    json c;
    c["sigma_b64"] = detail::encode_matrix(cov.sigma);
    c["replicates"] = cov.replicates;
    c["used"] = cov.used;
    c["dropped"] = cov.dropped;
    c["seed"] = cov.seed;
    c["method"] = cov.method;
    j["covariance"] = c;
  }
  return j;
}

inline ModelFile model_file_from_json(const json& j) {
  if (!j.is_object() || !j.contains("schema_version")) {
    throw IoError("not a model file");
  }
  if (j["schema_version"].get<int>() != kModelFileSchemaVersion) {
    throw IoError("unsupported model file schema version");
  }
  ModelFile model;
  model.num_models = j["num_models"].get<int>();
  model.covariate_dim = j["covariate_dim"].get<int>();
  model.model_names = j["model_names"].get<std::vector<std::string>>();
  model.covariate_fields =
      j["covariate_fields"].get<std::vector<std::string>>();
  model.num_records = j["num_records"].get<int>();
  model.data_fingerprint =
      std::stoull(j["data_fingerprint"].get<std::string>(), nullptr, 16);
  const auto& fit = j["fit"];
  model.fit.params.intercepts = detail::decode_vector(
      fit["intercepts_b64"].get<std::string>(), model.num_models);
  model.fit.params.slopes =
      detail::decode_matrix(fit["slopes_b64"].get<std::string>(),
                            model.num_models, model.covariate_dim);
  model.fit.final_nll = fit["final_nll"].get<double>();
  model.fit.projected_gradient_norm =
      fit["projected_gradient_norm"].get<double>();
  model.fit.iterations = fit["iterations"].get<int>();
  model.fit.converged = fit["converged"].get<bool>();
  const auto& diag = fit["diagnostics"];
  model.fit.diagnostics.graph_connected = diag["graph_connected"].get<bool>();
  model.fit.diagnostics.num_components = diag["num_components"].get<int>();
  model.fit.diagnostics.design_full_rank =
      diag["design_full_rank"].get<bool>();
  model.fit.diagnostics.design_rank = diag["design_rank"].get<int>();
  model.fit.diagnostics.design_constrained_dim =
      diag["design_constrained_dim"].get<int>();
  model.fit.diagnostics.separation_suspected =
      diag["separation_suspected"].get<bool>();
  if (j.contains("covariance")) {
    CovarianceEstimate cov;
    const auto& c = j["covariance"];
    const int dim = model.num_models * (1 + model.covariate_dim);
    cov.sigma = detail::decode_matrix(c["sigma_b64"].get<std::string>(), dim,
                                      dim);
    cov.num_models = model.num_models;
    cov.covariate_dim = model.covariate_dim;
    cov.replicates = c["replicates"].get<int>();
    cov.used = c["used"].get<int>();
    cov.dropped = c["dropped"].get<int>();
    cov.seed = c["seed"].get<std::uint64_t>();
    cov.method = c["method"].get<std::string>();
    model.covariance = std::move(cov);
  }
  return model;
}

inline void save_model_file(const ModelFile& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write model file \"" + path + "\"");
  out << model_file_to_json(model).dump(2) << "\n";
}

inline ModelFile load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model file \"" + path + "\"");
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw IoError("model file is not valid JSON");
  return model_file_from_json(j);
}

// ---------------------------------------------------------------------------
// Scenario and coverage report JSON
// ---------------------------------------------------------------------------

inline json scenario_to_json(const Scenario& scenario) {
  json j;
  j["num_models"] = scenario.num_models;
  j["covariate_dim"] = scenario.covariate_dim;
  j["num_records"] = scenario.num_records;
  j["seed"] = scenario.seed;
  json params;
  params["intercepts"] = std::vector<double>(
      scenario.true_params.intercepts.data(),
      scenario.true_params.intercepts.data() +
          scenario.true_params.intercepts.size());
  json slopes = json::array();
  for (int m = 0; m < scenario.true_params.num_models(); ++m) {
    std::vector<double> row(scenario.true_params.covariate_dim());
    for (int k = 0; k < scenario.true_params.covariate_dim(); ++k) {
      row[k] = scenario.true_params.slopes(m, k);
    }
    slopes.push_back(row);
  }
  params["slopes"] = slopes;
  j["true_params"] = params;
  json pairs = json::array();
  for (const auto& pp : scenario.pair_probabilities) {
    pairs.push_back({{"first", pp.first},
                     {"second", pp.second},
                     {"probability", pp.probability}});
  }
  j["pairs"] = pairs;
  json cov;
  switch (scenario.covariates.kind) {
    case CovariateSampler::Kind::uniform:
      cov["type"] = "uniform";
      cov["lo"] = std::vector<double>(
          scenario.covariates.lo.data(),
          scenario.covariates.lo.data() + scenario.covariates.lo.size());
      cov["hi"] = std::vector<double>(
          scenario.covariates.hi.data(),
          scenario.covariates.hi.data() + scenario.covariates.hi.size());
      break;
    case CovariateSampler::Kind::fixed_list: {
      cov["type"] = "fixed";
      json values = json::array();
      for (const auto& v : scenario.covariates.values) {
        values.push_back(std::vector<double>(v.data(), v.data() + v.size()));
      }
      cov["values"] = values;
      break;
    }
    case CovariateSampler::Kind::bernoulli:
      cov["type"] = "bernoulli";
      cov["probabilities"] = std::vector<double>(
          scenario.covariates.probabilities.data(),
          scenario.covariates.probabilities.data() +
              scenario.covariates.probabilities.size());
      break;
  }
  j["covariates"] = cov;
  return j;
}

inline Scenario scenario_from_json(const json& j) {
  Scenario scenario;
  scenario.num_models = j.at("num_models").get<int>();
  scenario.covariate_dim = j.at("covariate_dim").get<int>();
  scenario.num_records = j.at("num_records").get<int>();
  scenario.seed = j.value("seed", std::uint64_t{0});
  const auto& params = j.at("true_params");
  const auto intercepts = params.at("intercepts").get<std::vector<double>>();
  scenario.true_params.intercepts =
      Eigen::Map<const Vector>(intercepts.data(), intercepts.size());
  scenario.true_params.slopes.resize(scenario.num_models,
                                     scenario.covariate_dim);
  const auto& slopes = params.at("slopes");
  if (static_cast<int>(slopes.size()) != scenario.num_models) {
    throw IoError("true_params.slopes needs one row per model");
  }
  for (int m = 0; m < scenario.num_models; ++m) {
    const auto row = slopes[m].get<std::vector<double>>();
    if (static_cast<int>(row.size()) != scenario.covariate_dim) {
      throw IoError("true_params.slopes row has wrong length");
    }
    for (int k = 0; k < scenario.covariate_dim; ++k) {
      scenario.true_params.slopes(m, k) = row[k];
    }
  }
  for (const auto& pp : j.at("pairs")) {
    scenario.pair_probabilities.push_back(
        {pp.at("first").get<int>(), pp.at("second").get<int>(),
         pp.at("probability").get<double>()});
  }
  const auto& cov = j.at("covariates");
  const std::string type = cov.at("type").get<std::string>();
  auto to_vector = [](const json& arr) {
    const auto values = arr.get<std::vector<double>>();
    return Vector(Eigen::Map<const Vector>(values.data(), values.size()));
  };
  if (type == "uniform") {
    scenario.covariates = CovariateSampler::uniform_box(to_vector(cov.at("lo")),
                                                        to_vector(cov.at("hi")));
  } else if (type == "fixed") {
    std::vector<Vector> values;
    for (const auto& v : cov.at("values")) values.push_back(to_vector(v));
    scenario.covariates = CovariateSampler::fixed_list(std::move(values));
  } else if (type == "bernoulli") {
    scenario.covariates =
        CovariateSampler::bernoulli(to_vector(cov.at("probabilities")));
  } else {
    throw IoError("unknown covariate sampler type \"" + type + "\"");
  }
  validate_scenario(scenario);
  return scenario;
}

inline json coverage_report_to_json(const CoverageReport& report) {
  json j;
  j["replications"] = report.replications;
  j["successes"] = report.successes;
  j["failures"] = report.failures;
  j["nominal_level"] = report.nominal_level;
  j["seed"] = report.seed;
  j["difference_ci_coverage"] = {{"lower", report.coverage_lower},
                                 {"upper", report.coverage_upper},
                                 {"symm", report.coverage_symm},
                                 {"equiv", report.coverage_equiv}};
  j["marginal_rank_coverage"] = report.marginal_rank_coverage;
  j["simultaneous_rank_coverage"] = report.simultaneous_rank_coverage;
  j["avg_marginal_width"] = report.avg_marginal_width;
  j["avg_simultaneous_width"] = report.avg_simultaneous_width;
  j["true_ranks"] = report.true_ranks;
  return j;
}

}  // namespace rankuq

#endif  // RANKUQ_IO_HPP_
