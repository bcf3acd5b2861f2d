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

#ifndef RANKUQ_ERRORS_HPP_
#define RANKUQ_ERRORS_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rankuq {

// Base class for all library errors. `code()` returns a stable machine
// readable tag that the CLI maps to exit codes and error JSON.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& message)
      : Error("DimensionMismatch", message) {}
};

class IndexError : public Error {
 public:
  explicit IndexError(const std::string& message)
      : Error("IndexOutOfRange", message) {}
};

class InvalidArgumentError : public Error {
 public:
  explicit InvalidArgumentError(const std::string& message)
      : Error("InvalidArgument", message) {}
};

class DisconnectedGraphError : public Error {
 public:
  DisconnectedGraphError(const std::string& message, std::size_t components)
      : Error("DisconnectedGraph", message), num_components_(components) {}
  std::size_t num_components() const { return num_components_; }

 private:
  std::size_t num_components_;
};

class RankDeficientDesignError : public Error {
 public:
  RankDeficientDesignError(const std::string& message, int rank, int required)
      : Error("RankDeficientDesign", message),
        rank_(rank),
        required_(required) {}
  int rank() const { return rank_; }
  int required() const { return required_; }

 private:
  int rank_;
  int required_;
};

class NonFiniteLikelihoodError : public Error {
 public:
  explicit NonFiniteLikelihoodError(const std::string& message)
      : Error("NonFiniteLikelihood", message) {}
};

class TooManyFailedReplicatesError : public Error {
 public:
  TooManyFailedReplicatesError(const std::string& message, int failed,
                               int total)
      : Error("TooManyFailedReplicates", message),
        failed_(failed),
        total_(total) {}
  int failed() const { return failed_; }
  int total() const { return total_; }

 private:
  int failed_;
  int total_;
};

class DegeneratePairError : public Error {
 public:
  explicit DegeneratePairError(const std::string& message)
      : Error("DegeneratePair", message) {}
};

class NegativeVarianceError : public Error {
 public:
  explicit NegativeVarianceError(const std::string& message)
      : Error("NegativeVariance", message) {}
};

class FactorizationError : public Error {
 public:
  explicit FactorizationError(const std::string& message)
      : Error("FactorizationFailure", message) {}
};

class DimensionTooLargeError : public Error {
 public:
  explicit DimensionTooLargeError(const std::string& message)
      : Error("DimensionTooLarge", message) {}
};

class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line)
      : Error("ParseError", message + " (line " + std::to_string(line) + ")"),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class UnknownWinnerError : public Error {
 public:
  UnknownWinnerError(const std::string& tag, std::size_t line)
      : Error("UnknownWinnerTag", "unknown winner tag \"" + tag + "\" (line " +
                                      std::to_string(line) + ")"),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class MissingCovariateError : public Error {
 public:
  MissingCovariateError(const std::string& field, std::size_t line)
      : Error("MissingCovariate", "missing covariate field \"" + field +
                                      "\" (line " + std::to_string(line) +
                                      ")"),
        field_(field),
        line_(line) {}
  const std::string& field() const { return field_; }
  std::size_t line() const { return line_; }

 private:
  std::string field_;
  std::size_t line_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error("IoError", message) {}
};

}  // namespace rankuq

#endif  // RANKUQ_ERRORS_HPP_
