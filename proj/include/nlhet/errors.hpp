#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace nlhet {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Parse failure with 1-based position.
class ParseError : public ConfigError {
 public:
  ParseError(const std::string& msg, int line, int column)
      : ConfigError(msg + " (line " + std::to_string(line) + ", column " + std::to_string(column) + ")"),
        line(line), column(column) {}
  int line;
  int column;
};

class LinearSolveError : public Error {
 public:
  LinearSolveError(const std::string& msg, double rcond) : Error(msg), rcond(rcond) {}
  double rcond;
};

class ConstructionError : public Error {
 public:
  ConstructionError(const std::string& clause, long node, const std::string& msg)
      : Error("envelope clause '" + clause + "' violated at node " + std::to_string(node) + ": " + msg),
        clause(clause), node(node) {}
  std::string clause;
  long node;
};

class InvalidPairError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class StagnationError : public Error {
 public:
  StagnationError(const std::string& msg, double grad_norm, double step, double energy)
      : Error(msg), grad_norm(grad_norm), step(step), energy(energy) {}
  double grad_norm;
  double step;
  double energy;
};

class MonotonicityError : public Error {
 public:
  using Error::Error;
};

// Continuation or far-field certification failure.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& msg, std::string stage, std::vector<double> tail_x = {},
                   std::vector<double> tail_dev = {})
      : Error(msg), stage(std::move(stage)), tail_x(std::move(tail_x)), tail_dev(std::move(tail_dev)) {}
  std::string stage;
  std::vector<double> tail_x;
  std::vector<double> tail_dev;
};

class DegenerateFitError : public Error {
 public:
  using Error::Error;
};

class ResolutionError : public Error {
 public:
  using Error::Error;
};

// Input file does not follow the expected CSV layout.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// Filesystem trouble: unwritable output, held lock, failed rename.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace nlhet
