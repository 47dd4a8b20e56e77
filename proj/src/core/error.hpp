#pragma once

#include <stdexcept>
#include <string>

namespace atls {

enum class ErrorCode {
  BadDimension,
  EmptyDomain,
  EmptyLoadRegion,
  DimensionMismatch,
  NoConvergence,
  SingularSystem,
  ZeroMassSubspace,
  PreconditionViolated,
  MissingAnalysis,
  AllWeightsZero,
  SchemaError,
  SemanticError,
  IoError,
};

const char* to_string(ErrorCode code);

// All failures raised by the core carry a code so the C API can map them.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Raised by iterative solvers; carries the last attained residual.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& message, double residual, int iterations)
      : Error(ErrorCode::NoConvergence, message),
        residual_(residual),
        iterations_(iterations) {}

  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

}  // namespace atls
