#pragma once

#include <stdexcept>
#include <string>

namespace mgrid {

// Exit-code taxonomy used by the CLI:
//   ConfigError     -> 2  (bad input files, schema, arguments)
//   ModelError      -> 3  (disconnected/cyclic network, empty feasible set, ...)
//   AssumptionError -> 4  (experiment preconditions violated)

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ProjectionError : public ModelError {
 public:
  ProjectionError(const std::string& what, double residual)
      : ModelError(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

class AssumptionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mgrid
